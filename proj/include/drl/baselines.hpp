#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "drl/metrics.hpp"
#include "drl/model.hpp"
#include "drl/synthgen.hpp"

namespace drl::baselines {

/// Inverse conditional probability-of-treatment weights,
/// w_i = f_t(t_i) / f_{t|X}(t_i | X_i), under Gaussian density models.
struct IcpwWeights {
  std::vector<double> weights;       // positive, renormalized to mean 1
  double marginal_mean = 0.0;
  double marginal_var = 0.0;
  std::vector<double> conditional_beta;  // OLS coefficients of t on [1, x]
  double conditional_var = 0.0;          // residual variance
};

/// Fits the textbook ICPW weight model: marginal t as Gaussian, conditional
/// t|X as Gaussian around the OLS fit. Weights are clipped at their 99th
/// percentile before renormalization to tame density-ratio explosion.
inline IcpwWeights icpw_weights(const Tensor& x, const std::vector<double>& t) {
  const std::size_t n = x.rows(), d = x.cols();
  if (n != t.size()) {
    throw DimensionError("icpw_weights: x rows " + std::to_string(n) + " vs t length " +
                         std::to_string(t.size()));
  }
  if (n <= d + 2) throw DomainError("icpw_weights needs n > d + 2");

  IcpwWeights out;
  out.conditional_beta = metrics::fit_ols(x, t);
  const std::vector<double> fitted = metrics::ols_predict(out.conditional_beta, x);
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) rss += (t[i] - fitted[i]) * (t[i] - fitted[i]);
  out.conditional_var = rss / static_cast<double>(n);
  if (out.conditional_var <= 0.0 || !std::isfinite(out.conditional_var)) {
    throw NumericError("icpw_weights: degenerate conditional model (zero residual variance)");
  }

  out.marginal_mean = std::accumulate(t.begin(), t.end(), 0.0) / static_cast<double>(n);
  double mvar = 0.0;
  for (double v : t) mvar += (v - out.marginal_mean) * (v - out.marginal_mean);
  out.marginal_var = mvar / static_cast<double>(n);
  if (out.marginal_var <= 0.0) {
    throw NumericError("icpw_weights: treatment variable is constant");
  }

  auto gaussian = [](double v, double mean, double var) {
    return std::exp(-0.5 * (v - mean) * (v - mean) / var) / std::sqrt(2.0 * M_PI * var);
  };
  out.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double num = gaussian(t[i], out.marginal_mean, out.marginal_var);
    const double den = gaussian(t[i], fitted[i], out.conditional_var);
    out.weights[i] = den > 0.0 ? num / den : std::numeric_limits<double>::infinity();
  }

  const double cap = metrics::quantile(out.weights, 0.99);
  for (double& w : out.weights) w = std::min(w, cap);
  const double mean_w =
      std::accumulate(out.weights.begin(), out.weights.end(), 0.0) / static_cast<double>(n);
  if (!(mean_w > 0.0) || !std::isfinite(mean_w)) {
    throw NumericError("icpw_weights: weight normalization failed");
  }
  for (double& w : out.weights) w /= mean_w;
  return out;
}

/// Linear marginal structural model E[y(t)] = alpha0 + alpha1 t.
struct MsmFit {
  double alpha0 = 0.0;
  double alpha1 = 0.0;
};

/// Weighted least squares of y on (1, t). Uniform weights reduce to OLS.
inline MsmFit msm_fit(const std::vector<double>& t, const std::vector<double>& y,
                      const std::vector<double>& weights = {}) {
  const std::size_t n = t.size();
  if (n != y.size()) {
    throw DimensionError("msm_fit: t length " + std::to_string(n) + " vs y length " +
                         std::to_string(y.size()));
  }
  if (n < 2) throw DomainError("msm_fit needs at least 2 samples");
  if (!weights.empty() && weights.size() != n) {
    throw DimensionError("msm_fit: weight length mismatch");
  }
  double sw = 0.0, st = 0.0, stt = 0.0, sy = 0.0, sty = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    if (w <= 0.0 || !std::isfinite(w)) throw DomainError("msm_fit: weights must be positive");
    sw += w;
    st += w * t[i];
    stt += w * t[i] * t[i];
    sy += w * y[i];
    sty += w * t[i] * y[i];
  }
  const double det = sw * stt - st * st;
  if (std::abs(det) < 1e-12 * std::max(1.0, sw * stt)) {
    throw NumericError("msm_fit: singular design (treatment is constant)");
  }
  MsmFit fit;
  fit.alpha1 = (sw * sty - st * sy) / det;
  fit.alpha0 = (sy - fit.alpha1 * st) / sw;
  return fit;
}

/// Under the linear MSM the marginal effect is the constant alpha1.
inline metrics::MtefCurve msm_mtef(const MsmFit& fit, const std::vector<double>& t_levels,
                                   double dt) {
  if (dt <= 0.0) throw DomainError("msm_mtef: dt must be positive");
  metrics::MtefCurve curve;
  curve.t_levels = t_levels;
  curve.dt = dt;
  curve.values.assign(t_levels.size(), fit.alpha1);
  return curve;
}

struct NaiveConfig {
  std::vector<std::size_t> hidden{64, 64};
  std::size_t epochs = 300;
  std::size_t batch_size = 256;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  synth::OutcomeKind outcome_kind = synth::OutcomeKind::continuous;
  bool standardize = true;
};

/// Ablation control: the counterfactual head trained directly on (X, t)
/// with no adversarial de-confounding.
struct NaivePredictor {
  nn::Mlp net;
  Standardizer stats;
  NaiveConfig config;
  std::size_t input_dim = 0;

  std::vector<double> predict(const Tensor& x, const std::vector<double>& t_query) const {
    if (x.rows() != t_query.size()) {
      throw DimensionError("NaivePredictor::predict: x rows vs t length mismatch");
    }
    Tensor xs = stats.transform_x(x);
    std::vector<double> ts(t_query.size());
    for (std::size_t i = 0; i < ts.size(); ++i) ts[i] = stats.transform_t(t_query[i]);
    Tensor in = ad::concat_cols(ad::constant(xs), ad::constant(Tensor::column(ts)))->value;
    Tensor out = net.forward_values(in);
    std::vector<double> y(out.rows());
    const bool destd = config.standardize && config.outcome_kind == synth::OutcomeKind::continuous;
    for (std::size_t i = 0; i < y.size(); ++i) {
      y[i] = destd ? stats.inverse_y(out(i, 0)) : out(i, 0);
    }
    return y;
  }

  metrics::Predictor as_predictor() const {
    return [this](const Tensor& x, double level) {
      return predict(x, std::vector<double>(x.rows(), level));
    };
  }
};

struct NaiveHistory {
  std::vector<double> train_loss;  // per epoch
  std::vector<double> val_loss;
  std::size_t best_epoch = 0;
};

inline std::pair<NaivePredictor, NaiveHistory> naive_net(const Dataset& data,
                                                         const NaiveConfig& config,
                                                         const Dataset* validation = nullptr) {
  if (data.size() == 0) throw DomainError("naive_net: empty dataset");
  NaivePredictor p;
  p.config = config;
  p.input_dim = data.x.cols();
  const bool standardize_y =
      config.standardize && config.outcome_kind == synth::OutcomeKind::continuous;
  p.stats = config.standardize ? Standardizer::fit(data, standardize_y)
                               : Standardizer::identity(data.x.cols());

  Rng rng(config.seed);
  std::vector<std::size_t> sizes{data.x.cols() + 1};
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(1);
  p.net = nn::Mlp({sizes, nn::Hidden::relu,
                   config.outcome_kind == synth::OutcomeKind::binary ? nn::Output::sigmoid
                                                                     : nn::Output::identity},
                  rng);

  auto prepare = [&](const Dataset& d) {
    Tensor xs = p.stats.transform_x(d.x);
    std::vector<double> ts(d.t.size()), ys(d.y.size());
    for (std::size_t i = 0; i < d.t.size(); ++i) ts[i] = p.stats.transform_t(d.t[i]);
    for (std::size_t i = 0; i < d.y.size(); ++i) {
      ys[i] = standardize_y ? p.stats.transform_y(d.y[i]) : d.y[i];
    }
    Tensor in = ad::concat_cols(ad::constant(xs), ad::constant(Tensor::column(ts)))->value;
    return std::pair<Tensor, std::vector<double>>(std::move(in), std::move(ys));
  };
  auto [x_in, y_tr] = prepare(data);
  std::optional<std::pair<Tensor, std::vector<double>>> val_in;
  if (validation != nullptr && validation->size() > 0) val_in = prepare(*validation);

  auto loss_of = [&](const ad::NodePtr& pred, const std::vector<double>& y) {
    return config.outcome_kind == synth::OutcomeKind::binary
               ? nn::bce_loss(pred, Tensor::column(y))
               : nn::mse_loss(pred, Tensor::column(y));
  };

  std::vector<ad::NodePtr> params = p.net.parameters();
  nn::AdamState state = nn::adam_init(params);
  NaiveHistory history;
  nn::Mlp best = p.net.clone();
  double best_val = std::numeric_limits<double>::infinity();

  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t stop = std::min(n, start + config.batch_size);
      std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                   order.begin() + static_cast<std::ptrdiff_t>(stop));
      Tensor xb = x_in.take_rows(idx);
      std::vector<double> yb(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) yb[i] = y_tr[idx[i]];
      ad::NodePtr loss = loss_of(p.net.forward(ad::constant(xb)), yb);
      epoch_loss += loss->value.scalar_value();
      ad::backward(loss);
      nn::adam_step(params, state, config.lr);
      ad::zero_grads(params);
      ++n_batches;
    }
    history.train_loss.push_back(epoch_loss / static_cast<double>(n_batches));
    if (val_in) {
      ad::NodePtr vloss = loss_of(p.net.forward(ad::constant(val_in->first)), val_in->second);
      const double v = vloss->value.scalar_value();
      history.val_loss.push_back(v);
      if (v < best_val) {
        best_val = v;
        best = p.net.clone();
        history.best_epoch = epoch;
      }
    }
  }
  if (val_in && config.epochs > 0) p.net.load_values(best);
  return {std::move(p), std::move(history)};
}

}  // namespace drl::baselines
