#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "drl/errors.hpp"
#include "drl/linalg.hpp"
#include "drl/rng.hpp"
#include "drl/synthgen.hpp"
#include "drl/tensor.hpp"

namespace drl::metrics {

namespace detail {

inline void check_weights(const std::vector<double>& w, std::size_t n, const char* who) {
  if (!w.empty() && w.size() != n) {
    throw DimensionError(std::string(who) + ": weight length " + std::to_string(w.size()) +
                         " vs n " + std::to_string(n));
  }
}

inline double weight_at(const std::vector<double>& w, std::size_t i) {
  return w.empty() ? 1.0 : w[i];
}

}  // namespace detail

/// Pearson correlation; weights (if given) are normalized internally.
/// Returns 0 when either argument is constant.
inline double pearson(const std::vector<double>& a, const std::vector<double>& b,
                      const std::vector<double>& weights = {}) {
  if (a.size() != b.size()) {
    throw DimensionError("pearson: lengths " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()) + " differ");
  }
  if (a.size() < 2) throw DomainError("pearson needs at least 2 samples");
  detail::check_weights(weights, a.size(), "pearson");
  double wsum = 0.0, ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double w = detail::weight_at(weights, i);
    wsum += w;
    ma += w * a[i];
    mb += w * b[i];
  }
  ma /= wsum;
  mb /= wsum;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double w = detail::weight_at(weights, i);
    const double da = a[i] - ma, db = b[i] - mb;
    sab += w * da * db;
    saa += w * da * da;
    sbb += w * db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

struct PccResult {
  double value = 0.0;                 // mean over columns of |corr(column, t)|
  std::size_t constant_columns = 0;   // columns treated as zero correlation
};

/// Average absolute Pearson correlation between each column of m and t.
inline PccResult pcc(const Tensor& m, const std::vector<double>& t,
                     const std::vector<double>& weights = {}) {
  if (m.rows() != t.size()) {
    throw DimensionError("pcc: matrix rows " + std::to_string(m.rows()) + " vs t length " +
                         std::to_string(t.size()));
  }
  if (m.rows() < 2) throw DomainError("pcc needs at least 2 rows");
  PccResult out;
  const std::size_t k = m.cols();
  if (k == 0) return out;
  std::vector<double> col(m.rows());
  double acc = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < m.rows(); ++i) col[i] = m(i, j);
    const double r = pearson(col, t, weights);
    if (r == 0.0) {
      // pearson reports 0 for degenerate columns; count them as flagged
      double mn = col[0], mx = col[0];
      for (double v : col) {
        mn = std::min(mn, v);
        mx = std::max(mx, v);
      }
      if (mn == mx) ++out.constant_columns;
    }
    acc += std::abs(r);
  }
  out.value = acc / static_cast<double>(k);
  return out;
}

/// Ridge-stabilized least squares of t on [1, x]; returns (intercept, slopes).
inline std::vector<double> fit_ols(const Tensor& x, const std::vector<double>& t,
                                   double ridge = 1e-8, const std::vector<double>& weights = {}) {
  const std::size_t n = x.rows(), k = x.cols();
  if (n != t.size()) {
    throw DimensionError("fit_ols: x rows " + std::to_string(n) + " vs t length " +
                         std::to_string(t.size()));
  }
  if (n <= k) throw DomainError("fit_ols needs n > number of regressors");
  detail::check_weights(weights, n, "fit_ols");
  const std::size_t p = k + 1;
  Tensor ata({p, p});
  std::vector<double> atb(p, 0.0);
  std::vector<double> rowbuf(p);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = detail::weight_at(weights, i);
    rowbuf[0] = 1.0;
    for (std::size_t j = 0; j < k; ++j) rowbuf[j + 1] = x(i, j);
    for (std::size_t a = 0; a < p; ++a) {
      atb[a] += w * rowbuf[a] * t[i];
      for (std::size_t b = a; b < p; ++b) ata(a, b) += w * rowbuf[a] * rowbuf[b];
    }
  }
  for (std::size_t a = 0; a < p; ++a) {
    ata(a, a) += ridge;
    for (std::size_t b = 0; b < a; ++b) ata(a, b) = ata(b, a);
  }
  return linalg::solve_ldlt(ata, atb);
}

inline double ols_predict_one(const std::vector<double>& beta, const Tensor& x, std::size_t i) {
  double s = beta[0];
  for (std::size_t j = 0; j + 1 < beta.size(); ++j) s += beta[j + 1] * x(i, j);
  return s;
}

inline std::vector<double> ols_predict(const std::vector<double>& beta, const Tensor& x) {
  if (x.cols() + 1 != beta.size()) {
    throw DimensionError("ols_predict: coefficient length " + std::to_string(beta.size()) +
                         " vs x columns " + std::to_string(x.cols()));
  }
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = ols_predict_one(beta, x, i);
  return out;
}

/// Greedy CART regression tree: axis-aligned splits minimizing summed squared
/// error of child means; stops at max_depth, min_leaf, or zero gain.
class RegressionTree {
 public:
  struct TreeNode {
    int feature = -1;        // -1 marks a leaf
    double threshold = 0.0;  // go left when x[feature] <= threshold
    double value = 0.0;      // leaf prediction (weighted mean)
    int left = -1;
    int right = -1;
  };

  RegressionTree() = default;

  int max_depth() const noexcept { return max_depth_; }
  int min_leaf() const noexcept { return min_leaf_; }
  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  std::size_t leaf_count() const {
    std::size_t c = 0;
    for (const auto& n : nodes_) c += n.feature < 0 ? 1 : 0;
    return c;
  }

  double predict_row(const Tensor& x, std::size_t i) const {
    int cur = 0;
    while (nodes_[cur].feature >= 0) {
      cur = x(i, static_cast<std::size_t>(nodes_[cur].feature)) <= nodes_[cur].threshold
                ? nodes_[cur].left
                : nodes_[cur].right;
    }
    return nodes_[cur].value;
  }

  std::vector<double> predict(const Tensor& x) const {
    std::vector<double> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict_row(x, i);
    return out;
  }

  static RegressionTree fit(const Tensor& x, const std::vector<double>& t, int max_depth = 6,
                            int min_leaf = 10, const std::vector<double>& weights = {}) {
    const std::size_t n = x.rows();
    if (n != t.size()) {
      throw DimensionError("RegressionTree::fit: x rows " + std::to_string(n) + " vs t length " +
                           std::to_string(t.size()));
    }
    if (max_depth < 0 || min_leaf < 1) {
      throw ConfigError("RegressionTree::fit: max_depth >= 0 and min_leaf >= 1 required");
    }
    if (n < 2 * static_cast<std::size_t>(min_leaf)) {
      throw DomainError("RegressionTree::fit needs n >= 2*min_leaf");
    }
    detail::check_weights(weights, n, "RegressionTree::fit");
    RegressionTree tree;
    tree.max_depth_ = max_depth;
    tree.min_leaf_ = min_leaf;
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    tree.build(x, t, weights, idx, 0);
    return tree;
  }

 private:
  int build(const Tensor& x, const std::vector<double>& t, const std::vector<double>& w,
            std::vector<std::size_t>& idx, int depth) {
    const int me = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    double wsum = 0.0, wtsum = 0.0, wttsum = 0.0;
    for (std::size_t i : idx) {
      const double wi = detail::weight_at(w, i);
      wsum += wi;
      wtsum += wi * t[i];
      wttsum += wi * t[i] * t[i];
    }
    nodes_[me].value = wtsum / wsum;
    const double parent_sse = wttsum - wtsum * wtsum / wsum;

    if (depth >= max_depth_ || idx.size() < 2 * static_cast<std::size_t>(min_leaf_) ||
        parent_sse <= 1e-12) {
      return me;
    }

    int best_feature = -1;
    double best_threshold = 0.0, best_gain = 0.0;
    std::vector<std::size_t> sorted = idx;
    for (std::size_t f = 0; f < x.cols(); ++f) {
      std::sort(sorted.begin(), sorted.end(),
                [&](std::size_t a, std::size_t b) { return x(a, f) < x(b, f); });
      double lw = 0.0, lt = 0.0, ltt = 0.0;
      for (std::size_t pos = 0; pos + 1 < sorted.size(); ++pos) {
        const std::size_t i = sorted[pos];
        const double wi = detail::weight_at(w, i);
        lw += wi;
        lt += wi * t[i];
        ltt += wi * t[i] * t[i];
        const double xv = x(i, f), xnext = x(sorted[pos + 1], f);
        if (xv == xnext) continue;  // can only cut between distinct values
        const std::size_t nl = pos + 1, nr = sorted.size() - nl;
        if (nl < static_cast<std::size_t>(min_leaf_) || nr < static_cast<std::size_t>(min_leaf_)) {
          continue;
        }
        const double rw = wsum - lw, rt = wtsum - lt, rtt = wttsum - ltt;
        if (lw <= 0.0 || rw <= 0.0) continue;
        const double sse = (ltt - lt * lt / lw) + (rtt - rt * rt / rw);
        const double gain = parent_sse - sse;
        if (gain > best_gain + 1e-12) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_threshold = 0.5 * (xv + xnext);
        }
      }
    }
    if (best_feature < 0) return me;

    std::vector<std::size_t> left, right;
    left.reserve(idx.size());
    right.reserve(idx.size());
    for (std::size_t i : idx) {
      (x(i, static_cast<std::size_t>(best_feature)) <= best_threshold ? left : right).push_back(i);
    }
    nodes_[me].feature = best_feature;
    nodes_[me].threshold = best_threshold;
    nodes_[me].left = build(x, t, w, left, depth + 1);
    nodes_[me].right = build(x, t, w, right, depth + 1);
    return me;
  }

  std::vector<TreeNode> nodes_;
  int max_depth_ = 6;
  int min_leaf_ = 10;
};

inline RegressionTree fit_tree(const Tensor& x, const std::vector<double>& t, int max_depth = 6,
                               int min_leaf = 10, const std::vector<double>& weights = {}) {
  return RegressionTree::fit(x, t, max_depth, min_leaf, weights);
}

enum class MccMode { line, nonl };

struct MccOptions {
  bool held_out = true;          // fit on 70%, correlate on the remaining 30%
  std::uint64_t split_seed = 0x5eedU;
  double ridge = 1e-8;
  int tree_max_depth = 6;
  int tree_min_leaf = 10;
};

/// Multiple correlation coefficient: corr(t, t_hat) with t_hat from the
/// designated sub-model. Held-out by default; in-sample available for strict
/// parity with reports that fit and evaluate on the same rows.
inline double mcc(const Tensor& x, const std::vector<double>& t, MccMode mode,
                  const MccOptions& opts = {}, const std::vector<double>& weights = {}) {
  const std::size_t n = x.rows();
  if (n != t.size()) {
    throw DimensionError("mcc: x rows " + std::to_string(n) + " vs t length " +
                         std::to_string(t.size()));
  }
  if (n < 10) throw DomainError("mcc needs at least 10 rows");
  detail::check_weights(weights, n, "mcc");

  std::vector<std::size_t> fit_idx, eval_idx;
  if (opts.held_out) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(opts.split_seed);
    rng.shuffle(perm);
    const std::size_t n_fit = (n * 7) / 10;
    fit_idx.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_fit));
    eval_idx.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_fit), perm.end());
  } else {
    fit_idx.resize(n);
    std::iota(fit_idx.begin(), fit_idx.end(), 0);
    eval_idx = fit_idx;
  }

  Tensor x_fit = x.take_rows(fit_idx);
  Tensor x_eval = x.take_rows(eval_idx);
  std::vector<double> t_fit, t_eval, w_fit, w_eval;
  for (std::size_t i : fit_idx) t_fit.push_back(t[i]);
  for (std::size_t i : eval_idx) t_eval.push_back(t[i]);
  if (!weights.empty()) {
    for (std::size_t i : fit_idx) w_fit.push_back(weights[i]);
    for (std::size_t i : eval_idx) w_eval.push_back(weights[i]);
  }

  std::vector<double> pred;
  if (mode == MccMode::line) {
    pred = ols_predict(fit_ols(x_fit, t_fit, opts.ridge, w_fit), x_eval);
  } else {
    const int min_leaf =
        std::min<int>(opts.tree_min_leaf, static_cast<int>(x_fit.rows() / 2));
    RegressionTree tree =
        RegressionTree::fit(x_fit, t_fit, opts.tree_max_depth, std::max(1, min_leaf), w_fit);
    pred = tree.predict(x_eval);
  }
  return pearson(t_eval, pred, w_eval);  // 0 when predictions are constant
}

struct MtefCurve {
  std::vector<double> t_levels;  // strictly ascending
  double dt = 0.0;
  std::vector<double> values;

  void validate() const {
    if (dt <= 0.0) throw ContractError("MtefCurve: dt must be positive");
    if (t_levels.size() != values.size()) {
      throw ContractError("MtefCurve: levels and values lengths differ");
    }
    for (std::size_t i = 1; i < t_levels.size(); ++i) {
      if (!(t_levels[i - 1] < t_levels[i])) {
        throw ContractError("MtefCurve: t_levels must be strictly ascending");
      }
    }
  }
};

/// Linear-interpolation quantile of unsorted data (q in [0,1]).
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw DomainError("quantile of empty data");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

/// Default evaluation grid: 20 evenly spaced levels between the 10th and 90th
/// percentile of the observed treatments, dt = span / 40.
inline MtefCurve make_grid(const std::vector<double>& t, std::size_t n_levels = 20) {
  if (t.size() < 2) throw DomainError("make_grid needs at least 2 treatment values");
  const double lo = quantile(t, 0.10), hi = quantile(t, 0.90);
  if (!(hi > lo)) throw DomainError("make_grid: degenerate treatment range");
  MtefCurve g;
  g.dt = (hi - lo) / 40.0;
  g.t_levels.resize(n_levels);
  for (std::size_t j = 0; j < n_levels; ++j) {
    g.t_levels[j] = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(n_levels - 1);
  }
  g.values.assign(n_levels, 0.0);
  return g;
}

/// A counterfactual predictor: outcomes for every row of x at a fixed
/// treatment level.
using Predictor = std::function<std::vector<double>(const Tensor& x, double t_level)>;

/// Finite-difference marginal effect of a predictor over a grid; the
/// expectation is the mean over all provided rows.
inline MtefCurve mtef_pred(const Predictor& model, const Tensor& x,
                           const std::vector<double>& t_levels, double dt) {
  if (dt <= 0.0) throw DomainError("mtef_pred: dt must be positive");
  if (x.rows() == 0) throw DomainError("mtef_pred: no rows to average over");
  MtefCurve curve;
  curve.t_levels = t_levels;
  curve.dt = dt;
  curve.values.resize(t_levels.size());
  auto mean_at = [&](double level) {
    const std::vector<double> pred = model(x, level);
    double s = 0.0;
    for (double v : pred) s += v;
    return s / static_cast<double>(pred.size());
  };
  for (std::size_t j = 0; j < t_levels.size(); ++j) {
    curve.values[j] = (mean_at(t_levels[j]) - mean_at(t_levels[j] - dt)) / dt;
  }
  return curve;
}

/// Ground-truth MTEF evaluated over the same grid.
inline MtefCurve true_mtef_curve(const synth::GroundTruth& gt, const std::vector<double>& t_levels,
                                 double dt) {
  MtefCurve curve;
  curve.t_levels = t_levels;
  curve.dt = dt;
  curve.values.resize(t_levels.size());
  for (std::size_t j = 0; j < t_levels.size(); ++j) {
    curve.values[j] = synth::true_mtef(gt, t_levels[j], dt);
  }
  return curve;
}

/// Rooted mean squared error between two curves on an identical grid.
inline double eps_mtef(const MtefCurve& truth, const MtefCurve& pred) {
  if (truth.t_levels != pred.t_levels || truth.dt != pred.dt) {
    throw ContractError("eps_mtef: curves are on different grids");
  }
  if (truth.values.size() != pred.values.size() || truth.values.empty()) {
    throw ContractError("eps_mtef: curve value lengths differ or empty");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < truth.values.size(); ++i) {
    const double d = truth.values[i] - pred.values[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(truth.values.size()));
}

}  // namespace drl::metrics
