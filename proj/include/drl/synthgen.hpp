#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "drl/linalg.hpp"
#include "drl/rng.hpp"
#include "drl/tensor.hpp"

namespace drl::synth {

enum class Scenario { A, B, C, D };
enum class FuncForm { line, nonl };
enum class OutcomeKind { continuous, binary };

inline char scenario_letter(Scenario s) {
  switch (s) {
    case Scenario::A: return 'A';
    case Scenario::B: return 'B';
    case Scenario::C: return 'C';
    case Scenario::D: return 'D';
  }
  return '?';
}

inline Scenario scenario_from_letter(char c) {
  switch (c) {
    case 'A': return Scenario::A;
    case 'B': return Scenario::B;
    case 'C': return Scenario::C;
    case 'D': return Scenario::D;
    default: throw ConfigError(std::string("unknown scenario letter '") + c + "'");
  }
}

/// Treatment form per scenario: A, B linear; C, D sigmoid.
inline FuncForm treatment_form(Scenario s) {
  return (s == Scenario::A || s == Scenario::B) ? FuncForm::line : FuncForm::nonl;
}

/// Outcome form per scenario: A, C linear; B, D sigmoid.
inline FuncForm outcome_form(Scenario s) {
  return (s == Scenario::A || s == Scenario::C) ? FuncForm::line : FuncForm::nonl;
}

struct ScenarioSpec {
  Scenario scenario = Scenario::A;
  std::size_t d = 10;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double noise_t_std = std::sqrt(0.3);  // N(0, 0.3) read as variance
  double noise_y_std = std::sqrt(0.5);

  void validate() const {
    if (d < 1) throw ConfigError("ScenarioSpec: d must be >= 1");
    if (n < 1) throw ConfigError("ScenarioSpec: n must be >= 1");
    if (noise_t_std <= 0.0 || noise_y_std <= 0.0) {
      throw ConfigError("ScenarioSpec: noise stds must be positive");
    }
  }
};

/// Hidden generator parameters; kept so analytic MTEF oracles are available.
struct GroundTruth {
  Tensor covariance;           // d x d, PSD
  std::vector<double> w_xt;    // U(1,5)
  std::vector<double> w_xy;    // U(1,5)
  double w_ty = 5.0;
  FuncForm t_form = FuncForm::line;
  FuncForm y_form = FuncForm::line;
};

struct Dataset {
  Tensor x;  // n x d
  std::vector<double> t;
  std::vector<double> y;
  OutcomeKind outcome_kind = OutcomeKind::continuous;

  std::size_t size() const { return t.size(); }

  Dataset take_rows(const std::vector<std::size_t>& idx) const {
    Dataset out;
    out.x = x.take_rows(idx);
    out.t.reserve(idx.size());
    out.y.reserve(idx.size());
    for (std::size_t i : idx) {
      out.t.push_back(t[i]);
      out.y.push_back(y[i]);
    }
    out.outcome_kind = outcome_kind;
    return out;
  }
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// Symmetrized uniform matrix projected to PSD: eigenvalues are clamped to
/// 1e-6 so Cholesky sampling is always well defined.
inline Tensor gen_covariance(std::size_t d, Rng& rng) {
  if (d < 1) throw ConfigError("gen_covariance: d must be >= 1");
  constexpr double kMinEigenvalue = 1e-6;
  Tensor sigma = rng.uniform_tensor({d, d}, -1.0, 1.0);
  Tensor sym({d, d});
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) sym(i, j) = 0.5 * (sigma(i, j) + sigma(j, i));
  }
  linalg::SymEig eig = linalg::sym_eig(sym);
  // V diag(max(lambda, 1e-6)) V^T
  Tensor scaled = eig.eigenvectors;
  for (std::size_t j = 0; j < d; ++j) {
    const double lam = std::max(eig.eigenvalues[j], kMinEigenvalue);
    for (std::size_t i = 0; i < d; ++i) scaled(i, j) *= lam;
  }
  Tensor out({d, d});
  linalg::as_eigen(out).noalias() =
      linalg::as_eigen(scaled) * linalg::as_eigen(eig.eigenvectors).transpose();
  // enforce exact symmetry against round-off
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) {
      const double v = 0.5 * (out(i, j) + out(j, i));
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

/// Rows i.i.d. N(0, cov) via the Cholesky factor.
inline Tensor sample_covariates(std::size_t n, const Tensor& cov, Rng& rng) {
  const std::size_t d = cov.rows();
  Tensor l = linalg::cholesky_lower(cov);
  Tensor z = rng.normal_tensor({n, d});
  Tensor x({n, d});
  linalg::as_eigen(x).noalias() = linalg::as_eigen(z) * linalg::as_eigen(l).transpose();
  return x;
}

inline std::vector<double> linear_index(const Tensor& x, const std::vector<double>& w) {
  if (x.cols() != w.size()) {
    throw DimensionError("linear_index: x has " + std::to_string(x.cols()) +
                         " columns, weights have " + std::to_string(w.size()));
  }
  std::vector<double> out(x.rows(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) s += x(i, j) * w[j];
    out[i] = s;
  }
  return out;
}

/// t = f_t(X) + eps, with f_t linear or sigmoid of the linear index.
/// Noise is added after the sigmoid, so nonlinear t can leave (0,1).
inline std::vector<double> gen_treatment(const Tensor& x, const GroundTruth& gt, Rng& rng,
                                         double noise_std) {
  std::vector<double> t = linear_index(x, gt.w_xt);
  for (double& v : t) {
    if (gt.t_form == FuncForm::nonl) v = sigmoid(v);
    if (noise_std > 0.0) v += rng.normal(0.0, noise_std);
  }
  return t;
}

/// y = f_y(X) + f_y(t) + eps per Eq.-style forms:
/// linear: w_xy . x + w_ty t; nonlinear: sigmoid(w_xy . x) + sigmoid(w_ty t).
inline std::vector<double> gen_outcome(const Tensor& x, const std::vector<double>& t,
                                       const GroundTruth& gt, Rng& rng, double noise_std) {
  if (x.rows() != t.size()) {
    throw DimensionError("gen_outcome: x rows " + std::to_string(x.rows()) + " vs t length " +
                         std::to_string(t.size()));
  }
  std::vector<double> xpart = linear_index(x, gt.w_xy);
  std::vector<double> y(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    double xi = xpart[i];
    double ti = gt.w_ty * t[i];
    if (gt.y_form == FuncForm::nonl) {
      xi = sigmoid(xi);
      ti = sigmoid(ti);
    }
    y[i] = xi + ti;
    if (noise_std > 0.0) y[i] += rng.normal(0.0, noise_std);
  }
  return y;
}

/// Fresh ground truth + dataset, fully reproducible from spec.seed. Component
/// streams are forked in a fixed order, so scenarios sharing a seed share X
/// (and weights) regardless of the functional forms.
inline std::pair<Dataset, GroundTruth> make_scenario(const ScenarioSpec& spec) {
  spec.validate();
  Rng master(spec.seed);
  Rng rng_cov = master.fork();
  Rng rng_x = master.fork();
  Rng rng_w = master.fork();
  Rng rng_noise_t = master.fork();
  Rng rng_noise_y = master.fork();

  GroundTruth gt;
  gt.covariance = gen_covariance(spec.d, rng_cov);
  gt.w_xt.resize(spec.d);
  gt.w_xy.resize(spec.d);
  for (double& w : gt.w_xt) w = rng_w.uniform(1.0, 5.0);
  for (double& w : gt.w_xy) w = rng_w.uniform(1.0, 5.0);
  gt.w_ty = 5.0;
  gt.t_form = treatment_form(spec.scenario);
  gt.y_form = outcome_form(spec.scenario);

  Dataset data;
  data.x = sample_covariates(spec.n, gt.covariance, rng_x);
  data.t = gen_treatment(data.x, gt, rng_noise_t, spec.noise_t_std);
  data.y = gen_outcome(data.x, data.t, gt, rng_noise_y, spec.noise_y_std);
  data.outcome_kind = OutcomeKind::continuous;
  return {std::move(data), std::move(gt)};
}

/// Analytic MTEF of the generator at a treatment level: the covariate part of
/// y cancels in the finite difference, leaving only f_y(t).
inline double true_mtef(const GroundTruth& gt, double t_level, double dt) {
  if (dt <= 0.0) throw DomainError("true_mtef: dt must be positive");
  if (gt.y_form == FuncForm::line) return gt.w_ty;
  return (sigmoid(gt.w_ty * t_level) - sigmoid(gt.w_ty * (t_level - dt))) / dt;
}

}  // namespace drl::synth
