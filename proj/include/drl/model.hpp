#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "drl/metrics.hpp"
#include "drl/nn.hpp"
#include "drl/synthgen.hpp"

namespace drl {

using synth::Dataset;
using synth::OutcomeKind;

/// Per-column affine normalization fitted on training data. The networks see
/// standardized covariates/treatments; predictions are mapped back.
struct Standardizer {
  std::vector<double> x_mean, x_std;
  double t_mean = 0.0, t_std = 1.0;
  double y_mean = 0.0, y_std = 1.0;  // identity for binary outcomes

  static Standardizer fit(const Dataset& data, bool standardize_y) {
    Standardizer s;
    const std::size_t n = data.x.rows(), d = data.x.cols();
    s.x_mean.assign(d, 0.0);
    s.x_std.assign(d, 1.0);
    for (std::size_t j = 0; j < d; ++j) {
      double m = 0.0;
      for (std::size_t i = 0; i < n; ++i) m += data.x(i, j);
      m /= static_cast<double>(n);
      double v = 0.0;
      for (std::size_t i = 0; i < n; ++i) v += (data.x(i, j) - m) * (data.x(i, j) - m);
      s.x_mean[j] = m;
      s.x_std[j] = safe_std(v, n);
    }
    auto moments = [&](const std::vector<double>& v) {
      double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      double var = 0.0;
      for (double x : v) var += (x - m) * (x - m);
      return std::pair<double, double>(m, safe_std(var, v.size()));
    };
    std::tie(s.t_mean, s.t_std) = moments(data.t);
    if (standardize_y) std::tie(s.y_mean, s.y_std) = moments(data.y);
    return s;
  }

  static Standardizer identity(std::size_t d) {
    Standardizer s;
    s.x_mean.assign(d, 0.0);
    s.x_std.assign(d, 1.0);
    return s;
  }

  Tensor transform_x(const Tensor& x) const {
    Tensor out = x;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = (x(i, j) - x_mean[j]) / x_std[j];
    }
    return out;
  }

  double transform_t(double t) const { return (t - t_mean) / t_std; }
  double transform_y(double y) const { return (y - y_mean) / y_std; }
  double inverse_y(double y) const { return y * y_std + y_mean; }

 private:
  static double safe_std(double sum_sq, std::size_t n) {
    const double sd = std::sqrt(sum_sq / static_cast<double>(n));
    return sd > 1e-12 ? sd : 1.0;
  }
};

struct DrlConfig {
  std::size_t rep_dim = 10;
  double w_c = 1.0;  // weight of the counterfactual error inside l_g
  std::size_t epochs = 300;
  std::size_t batch_size = 256;
  double lr_g = 1e-3;
  double lr_d = 1e-3;
  double lr_f = 1e-3;
  std::size_t steps_d = 1;
  std::size_t steps_g = 1;
  std::size_t steps_f = 1;
  std::size_t f_polish_epochs = 100;  // F-only refit on the frozen generator
  std::uint64_t seed = 0;
  OutcomeKind outcome_kind = OutcomeKind::continuous;
  std::vector<std::size_t> g_hidden{64, 64};
  std::vector<std::size_t> c_hidden{64, 32};
  std::size_t c_out = 8;  // width of the correlation feature space
  std::vector<std::size_t> d_hidden{32};
  std::vector<std::size_t> f_hidden{64, 64};
  bool non_saturating = false;  // opt-in: -log D(fake) generator objective
  double grad_clip = 5.0;      // max L2 norm per step update; <= 0 disables
  bool standardize = true;

  void validate() const {
    if (rep_dim < 1) throw ConfigError("DrlConfig: rep_dim must be >= 1");
    if (w_c < 0.0) throw ConfigError("DrlConfig: w_c must be >= 0");
    if (batch_size < 1) throw ConfigError("DrlConfig: batch_size must be >= 1");
    if (lr_g <= 0.0 || lr_d <= 0.0 || lr_f <= 0.0) {
      throw ConfigError("DrlConfig: learning rates must be positive");
    }
    if (steps_d < 1 || steps_g < 1 || steps_f < 1) {
      throw ConfigError("DrlConfig: per-cycle step counts must be >= 1");
    }
    if (c_out < 1) throw ConfigError("DrlConfig: c_out must be >= 1");
  }
};

/// The four networks of the architecture. G maps covariates to
/// representations, C extracts correlation features of (representation, t)
/// pairs, D discriminates virtual from generated pairs, F predicts outcomes.
struct DrlModel {
  nn::Mlp g, c, d, f;
  DrlConfig config;
  Standardizer stats;
  std::size_t input_dim = 0;

  static DrlModel init(std::size_t input_dim, const DrlConfig& config) {
    config.validate();
    Rng rng(config.seed);
    return init_with_rng(input_dim, config, rng);
  }

  static DrlModel init_with_rng(std::size_t input_dim, const DrlConfig& config, Rng& rng) {
    config.validate();
    DrlModel m;
    m.config = config;
    m.input_dim = input_dim;
    m.stats = Standardizer::identity(input_dim);

    auto sizes = [](std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
      std::vector<std::size_t> s{in};
      s.insert(s.end(), hidden.begin(), hidden.end());
      s.push_back(out);
      return s;
    };
    m.g = nn::Mlp({sizes(input_dim, config.g_hidden, config.rep_dim), nn::Hidden::relu,
                   nn::Output::identity},
                  rng);
    m.c = nn::Mlp({sizes(config.rep_dim + 1, config.c_hidden, config.c_out), nn::Hidden::tanh,
                   nn::Output::identity},
                  rng);
    m.d = nn::Mlp({sizes(config.c_out, config.d_hidden, 1), nn::Hidden::tanh,
                   nn::Output::sigmoid},
                  rng);
    m.f = nn::Mlp({sizes(config.rep_dim + 1, config.f_hidden, 1), nn::Hidden::relu,
                   config.outcome_kind == OutcomeKind::binary ? nn::Output::sigmoid
                                                              : nn::Output::identity},
                  rng);
    return m;
  }

  DrlModel snapshot() const {
    DrlModel m;
    m.g = g.clone();
    m.c = c.clone();
    m.d = d.clone();
    m.f = f.clone();
    m.config = config;
    m.stats = stats;
    m.input_dim = input_dim;
    return m;
  }

  void restore(const DrlModel& snap) {
    g.load_values(snap.g);
    c.load_values(snap.c);
    d.load_values(snap.d);
    f.load_values(snap.f);
    stats = snap.stats;
  }

  std::vector<ad::NodePtr> all_parameters() const {
    std::vector<ad::NodePtr> out;
    for (const auto& net : {&g, &c, &d, &f}) {
      auto p = net->parameters();
      out.insert(out.end(), p.begin(), p.end());
    }
    return out;
  }
};

/// Virtual representations: i.i.d. standard normal points in the
/// representation space, independent of everything by construction.
inline Tensor sample_virtual(std::size_t n, std::size_t r, Rng& rng) {
  if (n < 1 || r < 1) throw ConfigError("sample_virtual: n and r must be >= 1");
  return rng.normal_tensor({n, r});
}

/// C(rep, t): forward pass of the correlation network on the column join.
inline ad::NodePtr correlation_features(const nn::Mlp& c_net, const ad::NodePtr& rep,
                                        const ad::NodePtr& t_col) {
  return c_net.forward(ad::concat_cols(rep, t_col));
}

inline Tensor correlation_features(const nn::Mlp& c_net, const Tensor& rep,
                                   const std::vector<double>& t) {
  return correlation_features(c_net, ad::constant(rep), ad::constant(Tensor::column(t)))->value;
}

namespace detail {

inline ad::NodePtr outcome_loss(const DrlConfig& cfg, const ad::NodePtr& pred,
                                const Tensor& target) {
  return cfg.outcome_kind == OutcomeKind::binary ? nn::bce_loss(pred, target)
                                                 : nn::mse_loss(pred, target);
}

struct AdversarialPair {
  ad::NodePtr d_real;  // D(C(X^R, t)), column vector
  ad::NodePtr d_fake;  // D(C(X^G, t))
};

inline AdversarialPair discriminator_outputs(const DrlModel& m, const Tensor& x_r,
                                             const ad::NodePtr& x_g, const ad::NodePtr& t_col) {
  AdversarialPair out;
  out.d_real = m.d.forward(correlation_features(m.c, ad::constant(x_r), t_col));
  out.d_fake = m.d.forward(correlation_features(m.c, x_g, t_col));
  return out;
}

inline ad::NodePtr one_minus(const ad::NodePtr& v) {
  return ad::sub(ad::constant(Tensor::ones(v->value.shape())), v);
}

}  // namespace detail

/// l_d = E log D(C(X^R,t)) + E log(1 - D(C(X^G,t))). The generator subgraph
/// is detached: the discriminator step treats X^G as fixed data.
inline ad::NodePtr build_discriminator_objective(const DrlModel& m, const Tensor& x_r,
                                                 const Tensor& x_g_detached,
                                                 const std::vector<double>& t) {
  ad::NodePtr t_col = ad::constant(Tensor::column(t));
  detail::AdversarialPair pair =
      detail::discriminator_outputs(m, x_r, ad::constant(x_g_detached), t_col);
  return ad::add(ad::mean(ad::log(pair.d_real)), ad::mean(ad::log(detail::one_minus(pair.d_fake))));
}

struct GeneratorLoss {
  ad::NodePtr total;
  double adversarial = 0.0;
  double prediction = 0.0;
};

/// l_g = E log(1 - D(C(X^G,t))) + w_c * loss(y, yhat); gradients flow through
/// the frozen C, D, F into G. The non-saturating variant swaps the first term
/// for -E log D(C(X^G,t)).
inline GeneratorLoss build_generator_objective(const DrlModel& m, const Tensor& x,
                                               const std::vector<double>& t,
                                               const std::vector<double>& y) {
  ad::NodePtr t_col = ad::constant(Tensor::column(t));
  ad::NodePtr x_g = m.g.forward(ad::constant(x));
  ad::NodePtr d_fake = m.d.forward(correlation_features(m.c, x_g, t_col));
  ad::NodePtr adv = m.config.non_saturating
                        ? ad::neg(ad::mean(ad::log(d_fake)))
                        : ad::mean(ad::log(detail::one_minus(d_fake)));
  ad::NodePtr y_hat = m.f.forward(ad::concat_cols(x_g, t_col));
  ad::NodePtr pred = detail::outcome_loss(m.config, y_hat, Tensor::column(y));
  GeneratorLoss out;
  out.adversarial = adv->value.scalar_value();
  out.prediction = pred->value.scalar_value();
  out.total = ad::add(adv, ad::mul(ad::constant(Tensor::scalar(m.config.w_c)), pred));
  return out;
}

/// l_c = loss(y, yhat) with the generator detached.
inline ad::NodePtr build_counterfactual_objective(const DrlModel& m, const Tensor& x,
                                                  const std::vector<double>& t,
                                                  const std::vector<double>& y) {
  Tensor x_g = m.g.forward_values(x);
  ad::NodePtr t_col = ad::constant(Tensor::column(t));
  ad::NodePtr y_hat = m.f.forward(ad::concat_cols(ad::constant(x_g), t_col));
  return detail::outcome_loss(m.config, y_hat, Tensor::column(y));
}

struct DiscriminatorStepResult {
  double l_d = 0.0;        // pre-update objective value
  double d_real_mean = 0.0;
  double d_fake_mean = 0.0;
};

namespace detail {

inline double tensor_mean(const Tensor& t) {
  double s = 0.0;
  for (double v : t.data()) s += v;
  return s / static_cast<double>(t.numel());
}

inline void check_finite_loss(double v, const char* step, std::size_t batch_rows) {
  if (!std::isfinite(v)) {
    throw NumericError(std::string(step) + " produced non-finite loss on a batch of " +
                       std::to_string(batch_rows) + " rows");
  }
}

}  // namespace detail

/// Per-net optimizer bundle used by the step functions.
struct DrlOptimizers {
  std::vector<ad::NodePtr> cd_params, g_params, f_params;
  nn::AdamState cd_state, g_state, f_state;

  static DrlOptimizers init(const DrlModel& m) {
    DrlOptimizers o;
    o.cd_params = m.c.parameters();
    auto dp = m.d.parameters();
    o.cd_params.insert(o.cd_params.end(), dp.begin(), dp.end());
    o.g_params = m.g.parameters();
    o.f_params = m.f.parameters();
    o.cd_state = nn::adam_init(o.cd_params);
    o.g_state = nn::adam_init(o.g_params);
    o.f_state = nn::adam_init(o.f_params);
    return o;
  }
};

/// One ascent step on l_d (implemented as descent on -l_d) updating the
/// correlation network and discriminator only. Fresh virtual representations
/// are drawn from `rng` for every call.
inline DiscriminatorStepResult step_discriminator(DrlModel& m, DrlOptimizers& opt,
                                                  const Tensor& x_batch,
                                                  const std::vector<double>& t_batch, Rng& rng) {
  const Tensor x_r = sample_virtual(x_batch.rows(), m.config.rep_dim, rng);
  const Tensor x_g = m.g.forward_values(x_batch);
  ad::NodePtr t_col = ad::constant(Tensor::column(t_batch));
  detail::AdversarialPair pair = detail::discriminator_outputs(m, x_r, ad::constant(x_g), t_col);
  ad::NodePtr l_d = ad::add(ad::mean(ad::log(pair.d_real)),
                            ad::mean(ad::log(detail::one_minus(pair.d_fake))));
  DiscriminatorStepResult res;
  res.l_d = l_d->value.scalar_value();
  res.d_real_mean = detail::tensor_mean(pair.d_real->value);
  res.d_fake_mean = detail::tensor_mean(pair.d_fake->value);
  detail::check_finite_loss(res.l_d, "discriminator step", x_batch.rows());
  ad::NodePtr loss = ad::neg(l_d);
  ad::backward(loss);
  nn::clip_gradient_norm(opt.cd_params, m.config.grad_clip);
  nn::adam_step(opt.cd_params, opt.cd_state, m.config.lr_d);
  ad::zero_grads(opt.cd_params);
  return res;
}

struct GeneratorStepResult {
  double l_g = 0.0;
  double adversarial = 0.0;
  double prediction = 0.0;
};

/// One descent step on l_g updating the generator only.
inline GeneratorStepResult step_generator(DrlModel& m, DrlOptimizers& opt, const Tensor& x_batch,
                                          const std::vector<double>& t_batch,
                                          const std::vector<double>& y_batch) {
  GeneratorLoss loss = build_generator_objective(m, x_batch, t_batch, y_batch);
  GeneratorStepResult res;
  res.l_g = loss.total->value.scalar_value();
  res.adversarial = loss.adversarial;
  res.prediction = loss.prediction;
  detail::check_finite_loss(res.l_g, "generator step", x_batch.rows());
  ad::backward(loss.total);
  nn::clip_gradient_norm(opt.g_params, m.config.grad_clip);
  nn::adam_step(opt.g_params, opt.g_state, m.config.lr_g);
  // gradients also accumulated through the frozen nets; drop them
  ad::zero_grads(opt.g_params);
  ad::zero_grads(opt.cd_params);
  ad::zero_grads(opt.f_params);
  return res;
}

/// One descent step on l_c updating the counterfactual head only.
inline double step_counterfactual(DrlModel& m, DrlOptimizers& opt, const Tensor& x_batch,
                                  const std::vector<double>& t_batch,
                                  const std::vector<double>& y_batch) {
  ad::NodePtr l_c = build_counterfactual_objective(m, x_batch, t_batch, y_batch);
  const double value = l_c->value.scalar_value();
  detail::check_finite_loss(value, "counterfactual step", x_batch.rows());
  ad::backward(l_c);
  nn::clip_gradient_norm(opt.f_params, m.config.grad_clip);
  nn::adam_step(opt.f_params, opt.f_state, m.config.lr_f);
  ad::zero_grads(opt.f_params);
  return value;
}

struct EpochRecord {
  double l_d = 0.0;
  double l_g = 0.0;
  double l_c = 0.0;
  double d_real_mean = 0.0;
  double d_fake_mean = 0.0;
  double val_l_c = std::numeric_limits<double>::quiet_NaN();
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;          // cyclic adversarial phase
  std::vector<double> polish_val_l_c;       // F refit phase, when a val set exists
  std::size_t best_epoch = 0;               // best F epoch within the refit phase
};

/// Thrown when training diverges; carries the history up to the failure.
class TrainingError : public Error {
 public:
  TrainingError(const std::string& m, TrainHistory h)
      : Error("training", m), history(std::move(h)) {}
  TrainHistory history;
};

namespace detail {

struct StandardizedData {
  Tensor x;
  std::vector<double> t;
  std::vector<double> y;
};

inline StandardizedData standardize(const Dataset& data, const Standardizer& s,
                                    bool standardize_y) {
  StandardizedData out;
  out.x = s.transform_x(data.x);
  out.t.resize(data.t.size());
  out.y.resize(data.y.size());
  for (std::size_t i = 0; i < data.t.size(); ++i) out.t[i] = s.transform_t(data.t[i]);
  for (std::size_t i = 0; i < data.y.size(); ++i) {
    out.y[i] = standardize_y ? s.transform_y(data.y[i]) : data.y[i];
  }
  return out;
}

inline double validation_l_c(const DrlModel& m, const StandardizedData& val) {
  ad::NodePtr loss = build_counterfactual_objective(m, val.x, val.t, val.y);
  return loss->value.scalar_value();
}

inline ad::NodePtr f_loss_on_reps(const DrlModel& m, const Tensor& reps,
                                  const std::vector<double>& t, const std::vector<double>& y) {
  ad::NodePtr y_hat =
      m.f.forward(ad::concat_cols(ad::constant(reps), ad::constant(Tensor::column(t))));
  return outcome_loss(m.config, y_hat, Tensor::column(y));
}

}  // namespace detail

/// Cyclic three-step training: per minibatch, steps_d discriminator updates,
/// then steps_g generator updates, then steps_f counterfactual updates. The
/// adversarial phase runs to completion; the counterfactual head is then
/// refit against the frozen generator for f_polish_epochs, and when a
/// validation set is supplied the F parameters with the lowest validation
/// l_c are kept.
inline std::pair<DrlModel, TrainHistory> train(const Dataset& data, const DrlConfig& config,
                                               const Dataset* validation = nullptr) {
  config.validate();
  if (data.size() == 0) throw DomainError("train: empty dataset");
  if (data.x.rows() != data.t.size() || data.t.size() != data.y.size()) {
    throw DimensionError("train: dataset row counts disagree");
  }

  Rng rng(config.seed);
  DrlModel model = DrlModel::init_with_rng(data.x.cols(), config, rng);
  const bool standardize_y =
      config.standardize && config.outcome_kind == OutcomeKind::continuous;
  if (config.standardize) model.stats = Standardizer::fit(data, standardize_y);

  TrainHistory history;
  if (config.epochs == 0) return {std::move(model), std::move(history)};

  detail::StandardizedData tr = detail::standardize(data, model.stats, standardize_y);
  std::optional<detail::StandardizedData> va;
  if (validation != nullptr && validation->size() > 0) {
    va = detail::standardize(*validation, model.stats, standardize_y);
  }

  DrlOptimizers opt = DrlOptimizers::init(model);
  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    EpochRecord rec;
    std::size_t n_d_steps = 0, n_g_steps = 0, n_f_steps = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t stop = std::min(n, start + config.batch_size);
      std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                   order.begin() + static_cast<std::ptrdiff_t>(stop));
      Tensor xb = tr.x.take_rows(idx);
      std::vector<double> tb(idx.size()), yb(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) {
        tb[i] = tr.t[idx[i]];
        yb[i] = tr.y[idx[i]];
      }
      try {
        for (std::size_t s = 0; s < config.steps_d; ++s) {
          DiscriminatorStepResult r = step_discriminator(model, opt, xb, tb, rng);
          rec.l_d += r.l_d;
          rec.d_real_mean += r.d_real_mean;
          rec.d_fake_mean += r.d_fake_mean;
          ++n_d_steps;
        }
        for (std::size_t s = 0; s < config.steps_g; ++s) {
          GeneratorStepResult r = step_generator(model, opt, xb, tb, yb);
          rec.l_g += r.l_g;
          ++n_g_steps;
        }
        for (std::size_t s = 0; s < config.steps_f; ++s) {
          rec.l_c += step_counterfactual(model, opt, xb, tb, yb);
          ++n_f_steps;
        }
      } catch (const NumericError& e) {
        throw TrainingError(std::string("diverged at epoch ") + std::to_string(epoch) + ": " +
                            e.what(), std::move(history));
      }
    }
    if (n_d_steps > 0) {
      rec.l_d /= static_cast<double>(n_d_steps);
      rec.d_real_mean /= static_cast<double>(n_d_steps);
      rec.d_fake_mean /= static_cast<double>(n_d_steps);
    }
    if (n_g_steps > 0) rec.l_g /= static_cast<double>(n_g_steps);
    if (n_f_steps > 0) rec.l_c /= static_cast<double>(n_f_steps);
    if (va) rec.val_l_c = detail::validation_l_c(model, *va);
    history.epochs.push_back(rec);
  }

  // F refit on the frozen generator: full-batch descent, so the head can
  // settle into the nearly flat valley where the treatment effect is only
  // weakly identified, instead of bouncing on minibatch noise.
  if (config.f_polish_epochs > 0) {
    const Tensor reps_tr = model.g.forward_values(tr.x);
    std::optional<Tensor> reps_va;
    if (va) reps_va = model.g.forward_values(va->x);

    std::vector<ad::NodePtr> f_params = model.f.parameters();
    nn::AdamState f_state = nn::adam_init(f_params);
    nn::Mlp best_f = model.f.clone();
    double best_val = std::numeric_limits<double>::infinity();

    for (std::size_t epoch = 0; epoch < config.f_polish_epochs; ++epoch) {
      ad::NodePtr loss = detail::f_loss_on_reps(model, reps_tr, tr.t, tr.y);
      const double v = loss->value.scalar_value();
      if (!std::isfinite(v)) {
        throw TrainingError("diverged during F refit at epoch " + std::to_string(epoch),
                            std::move(history));
      }
      ad::backward(loss);
      nn::clip_gradient_norm(f_params, config.grad_clip);
      nn::adam_step(f_params, f_state, config.lr_f);
      ad::zero_grads(f_params);
      if (va) {
        const double vv =
            detail::f_loss_on_reps(model, *reps_va, va->t, va->y)->value.scalar_value();
        history.polish_val_l_c.push_back(vv);
        if (vv < best_val) {
          best_val = vv;
          best_f = model.f.clone();
          history.best_epoch = epoch;
        }
      }
    }
    if (va) model.f.load_values(best_f);
  }
  return {std::move(model), std::move(history)};
}

/// X^G = G(x) on raw covariates (standardization applied internally).
inline Tensor representations(const DrlModel& m, const Tensor& x) {
  if (x.cols() != m.input_dim) {
    throw DimensionError("representations: input width " + std::to_string(x.cols()) +
                         " vs model dimension " + std::to_string(m.input_dim));
  }
  return m.g.forward_values(m.stats.transform_x(x));
}

/// Counterfactual prediction F(G(x), t_query) at arbitrary treatment levels,
/// mapped back to the outcome scale.
inline std::vector<double> predict(const DrlModel& m, const Tensor& x,
                                   const std::vector<double>& t_query) {
  if (x.rows() != t_query.size()) {
    throw DimensionError("predict: x rows " + std::to_string(x.rows()) + " vs t length " +
                         std::to_string(t_query.size()));
  }
  Tensor reps = representations(m, x);
  std::vector<double> t_std(t_query.size());
  for (std::size_t i = 0; i < t_query.size(); ++i) t_std[i] = m.stats.transform_t(t_query[i]);
  Tensor y_hat = m.f.forward_values(
      ad::concat_cols(ad::constant(reps), ad::constant(Tensor::column(t_std)))->value);
  std::vector<double> out(y_hat.rows());
  const bool destandardize =
      m.config.standardize && m.config.outcome_kind == OutcomeKind::continuous;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = destandardize ? m.stats.inverse_y(y_hat(i, 0)) : y_hat(i, 0);
  }
  return out;
}

/// Adapter for metrics::mtef_pred.
inline metrics::Predictor make_predictor(const DrlModel& m) {
  return [&m](const Tensor& x, double level) {
    return predict(m, x, std::vector<double>(x.rows(), level));
  };
}

struct EquilibriumStats {
  double d_real_mean = 0.0;
  double d_fake_mean = 0.0;
};

/// Mean discriminator output on fresh virtual (real) and generated (fake)
/// pairs over a full dataset; near 0.5 at the adversarial fixed point.
inline EquilibriumStats discriminator_stats(const DrlModel& m, const Dataset& data, Rng& rng) {
  detail::StandardizedData sd = detail::standardize(
      data, m.stats, m.config.standardize && m.config.outcome_kind == OutcomeKind::continuous);
  const Tensor x_r = sample_virtual(sd.x.rows(), m.config.rep_dim, rng);
  const Tensor x_g = m.g.forward_values(sd.x);
  ad::NodePtr t_col = ad::constant(Tensor::column(sd.t));
  detail::AdversarialPair pair = detail::discriminator_outputs(m, x_r, ad::constant(x_g), t_col);
  EquilibriumStats out;
  out.d_real_mean = detail::tensor_mean(pair.d_real->value);
  out.d_fake_mean = detail::tensor_mean(pair.d_fake->value);
  return out;
}

}  // namespace drl
