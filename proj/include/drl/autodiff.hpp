#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "drl/errors.hpp"
#include "drl/linalg.hpp"
#include "drl/tensor.hpp"

namespace drl::ad {

// Reverse-mode autodiff over a define-by-run graph. Graphs are rebuilt every
// training step; parameter leaves persist across graphs and accumulate into
// `grad` until the optimizer zeroes them.

enum class Op {
  leaf,
  matmul,
  add,
  sub,
  mul,
  neg,
  sigmoid,
  tanh,
  relu,
  log,
  mean,
  sum,
  concat_cols,
  add_row,
};

class Node;
using NodePtr = std::shared_ptr<Node>;

class Node {
 public:
  Tensor value;
  Tensor grad;  // same shape as value, zero until backward() accumulates
  Op op = Op::leaf;
  std::vector<NodePtr> parents;
  bool requires_grad = false;

  Node(Tensor v, Op o, std::vector<NodePtr> ps, bool rg)
      : value(std::move(v)), grad(value.shape()), op(o), parents(std::move(ps)), requires_grad(rg) {}

  void zero_grad() { std::fill(grad.data().begin(), grad.data().end(), 0.0); }
};

/// Trainable leaf.
inline NodePtr parameter(Tensor value) {
  return std::make_shared<Node>(std::move(value), Op::leaf, std::vector<NodePtr>{}, true);
}

/// Non-trainable leaf (data, targets, constants). backward() never descends
/// into subgraphs made purely of these.
inline NodePtr constant(Tensor value) {
  return std::make_shared<Node>(std::move(value), Op::leaf, std::vector<NodePtr>{}, false);
}

/// Cuts the graph: a constant leaf holding `x`'s current value.
inline NodePtr detach(const NodePtr& x) { return constant(x->value); }

namespace detail {

inline bool any_requires_grad(const std::vector<NodePtr>& ps) {
  for (const auto& p : ps) {
    if (p->requires_grad) return true;
  }
  return false;
}

inline NodePtr make(Tensor value, Op op, std::vector<NodePtr> parents) {
  const bool rg = any_requires_grad(parents);
  return std::make_shared<Node>(std::move(value), op, std::move(parents), rg);
}

inline void require_same_shape(const NodePtr& a, const NodePtr& b, const char* opname) {
  if (!a->value.same_shape(b->value)) {
    throw DimensionError(std::string(opname) + ": shapes " + a->value.shape_string() + " and " +
                         b->value.shape_string() + " differ");
  }
}

constexpr double kLogClamp = 1e-7;

}  // namespace detail

inline NodePtr matmul(const NodePtr& a, const NodePtr& b) {
  if (a->value.rank() != 2 || b->value.rank() != 2 || a->value.cols() != b->value.rows()) {
    throw DimensionError("matmul: incompatible shapes " + a->value.shape_string() + " and " +
                         b->value.shape_string());
  }
  return detail::make(linalg::matmul(a->value, b->value), Op::matmul, {a, b});
}

inline NodePtr add(const NodePtr& a, const NodePtr& b) {
  detail::require_same_shape(a, b, "add");
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] += b->value[i];
  return detail::make(std::move(out), Op::add, {a, b});
}

inline NodePtr sub(const NodePtr& a, const NodePtr& b) {
  detail::require_same_shape(a, b, "sub");
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] -= b->value[i];
  return detail::make(std::move(out), Op::sub, {a, b});
}

inline NodePtr mul(const NodePtr& a, const NodePtr& b) {
  detail::require_same_shape(a, b, "mul");
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= b->value[i];
  return detail::make(std::move(out), Op::mul, {a, b});
}

inline NodePtr neg(const NodePtr& a) {
  Tensor out = a->value;
  for (double& v : out.data()) v = -v;
  return detail::make(std::move(out), Op::neg, {a});
}

inline NodePtr sigmoid(const NodePtr& a) {
  Tensor out = a->value;
  for (double& v : out.data()) v = 1.0 / (1.0 + std::exp(-v));
  return detail::make(std::move(out), Op::sigmoid, {a});
}

inline NodePtr tanh(const NodePtr& a) {
  Tensor out = a->value;
  for (double& v : out.data()) v = std::tanh(v);
  return detail::make(std::move(out), Op::tanh, {a});
}

inline NodePtr relu(const NodePtr& a) {
  Tensor out = a->value;
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return detail::make(std::move(out), Op::relu, {a});
}

/// Natural log of the argument clamped to [1e-7, inf). Entries below the
/// clamp are flat, so their gradient is zero.
inline NodePtr log(const NodePtr& a) {
  Tensor out = a->value;
  for (double& v : out.data()) v = std::log(std::max(v, detail::kLogClamp));
  return detail::make(std::move(out), Op::log, {a});
}

inline NodePtr mean(const NodePtr& a) {
  if (a->value.numel() == 0) throw DomainError("mean of empty tensor");
  double s = 0.0;
  for (double v : a->value.data()) s += v;
  return detail::make(Tensor::scalar(s / static_cast<double>(a->value.numel())), Op::mean, {a});
}

inline NodePtr sum(const NodePtr& a) {
  if (a->value.numel() == 0) throw DomainError("sum of empty tensor");
  double s = 0.0;
  for (double v : a->value.data()) s += v;
  return detail::make(Tensor::scalar(s), Op::sum, {a});
}

/// [n x p] ++ [n x q] -> [n x (p+q)]
inline NodePtr concat_cols(const NodePtr& a, const NodePtr& b) {
  if (a->value.rank() != 2 || b->value.rank() != 2 || a->value.rows() != b->value.rows()) {
    throw DimensionError("concat_cols: row counts of " + a->value.shape_string() + " and " +
                         b->value.shape_string() + " differ");
  }
  const std::size_t n = a->value.rows(), p = a->value.cols(), q = b->value.cols();
  Tensor out({n, p + q});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) out(i, j) = a->value(i, j);
    for (std::size_t j = 0; j < q; ++j) out(i, p + j) = b->value(i, j);
  }
  return detail::make(std::move(out), Op::concat_cols, {a, b});
}

/// Adds a [1 x k] row vector to every row of an [n x k] matrix (bias add).
inline NodePtr add_row(const NodePtr& m, const NodePtr& r) {
  if (m->value.rank() != 2 || r->value.rank() != 2 || r->value.rows() != 1 ||
      m->value.cols() != r->value.cols()) {
    throw DimensionError("add_row: shapes " + m->value.shape_string() + " and " +
                         r->value.shape_string() + " are not [n x k] + [1 x k]");
  }
  const std::size_t n = m->value.rows(), k = m->value.cols();
  Tensor out = m->value;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) out(i, j) += r->value(0, j);
  }
  return detail::make(std::move(out), Op::add_row, {m, r});
}

namespace detail {

inline std::vector<Node*> topo_order(Node* root) {
  // Iterative DFS; only subgraphs that require grad are visited.
  std::vector<Node*> order;
  std::unordered_map<Node*, int> state;  // 0 new, 1 open, 2 done
  std::vector<Node*> stack{root};
  while (!stack.empty()) {
    Node* n = stack.back();
    int& st = state[n];
    if (st == 0) {
      st = 1;
      for (const auto& p : n->parents) {
        if (p->requires_grad && state[p.get()] == 0) stack.push_back(p.get());
      }
    } else {
      stack.pop_back();
      if (st == 1) {
        st = 2;
        order.push_back(n);
      }
    }
  }
  return order;  // parents before children
}

/// Propagates the adjoint of `n` into its parents' adjoints.
inline void backprop_one(Node* n, const Tensor& adj,
                         const std::function<Tensor&(Node*)>& adj_of) {
  const auto& ps = n->parents;
  auto wants = [&](std::size_t i) { return ps[i]->requires_grad; };
  switch (n->op) {
    case Op::leaf:
      break;
    case Op::matmul: {
      if (wants(0)) {
        // a_adj += adj * b^T
        Tensor& aa = adj_of(ps[0].get());
        linalg::as_eigen(aa).noalias() +=
            linalg::as_eigen(adj) * linalg::as_eigen(ps[1]->value).transpose();
      }
      if (wants(1)) {
        Tensor& ba = adj_of(ps[1].get());
        linalg::as_eigen(ba).noalias() +=
            linalg::as_eigen(ps[0]->value).transpose() * linalg::as_eigen(adj);
      }
      break;
    }
    case Op::add: {
      for (int k = 0; k < 2; ++k) {
        if (!wants(k)) continue;
        Tensor& pa = adj_of(ps[k].get());
        for (std::size_t i = 0; i < adj.numel(); ++i) pa[i] += adj[i];
      }
      break;
    }
    case Op::sub: {
      if (wants(0)) {
        Tensor& pa = adj_of(ps[0].get());
        for (std::size_t i = 0; i < adj.numel(); ++i) pa[i] += adj[i];
      }
      if (wants(1)) {
        Tensor& pa = adj_of(ps[1].get());
        for (std::size_t i = 0; i < adj.numel(); ++i) pa[i] -= adj[i];
      }
      break;
    }
    case Op::mul: {
      if (wants(0)) {
        Tensor& pa = adj_of(ps[0].get());
        for (std::size_t i = 0; i < adj.numel(); ++i) pa[i] += adj[i] * ps[1]->value[i];
      }
      if (wants(1)) {
        Tensor& pa = adj_of(ps[1].get());
        for (std::size_t i = 0; i < adj.numel(); ++i) pa[i] += adj[i] * ps[0]->value[i];
      }
      break;
    }
    case Op::neg: {
      if (wants(0)) {
        Tensor& pa = adj_of(ps[0].get());
        for (std::size_t i = 0; i < adj.numel(); ++i) pa[i] -= adj[i];
      }
      break;
    }
    case Op::sigmoid: {
      if (wants(0)) {
        Tensor& pa = adj_of(ps[0].get());
        for (std::size_t i = 0; i < adj.numel(); ++i) {
          const double s = n->value[i];
          pa[i] += adj[i] * s * (1.0 - s);
        }
      }
      break;
    }
    case Op::tanh: {
      if (wants(0)) {
        Tensor& pa = adj_of(ps[0].get());
        for (std::size_t i = 0; i < adj.numel(); ++i) {
          const double y = n->value[i];
          pa[i] += adj[i] * (1.0 - y * y);
        }
      }
      break;
    }
    case Op::relu: {
      if (wants(0)) {
        Tensor& pa = adj_of(ps[0].get());
        for (std::size_t i = 0; i < adj.numel(); ++i) {
          if (ps[0]->value[i] > 0.0) pa[i] += adj[i];
        }
      }
      break;
    }
    case Op::log: {
      if (wants(0)) {
        Tensor& pa = adj_of(ps[0].get());
        for (std::size_t i = 0; i < adj.numel(); ++i) {
          const double x = ps[0]->value[i];
          if (x >= kLogClamp) pa[i] += adj[i] / x;
        }
      }
      break;
    }
    case Op::mean: {
      if (wants(0)) {
        Tensor& pa = adj_of(ps[0].get());
        const double g = adj[0] / static_cast<double>(ps[0]->value.numel());
        for (std::size_t i = 0; i < pa.numel(); ++i) pa[i] += g;
      }
      break;
    }
    case Op::sum: {
      if (wants(0)) {
        Tensor& pa = adj_of(ps[0].get());
        for (std::size_t i = 0; i < pa.numel(); ++i) pa[i] += adj[0];
      }
      break;
    }
    case Op::concat_cols: {
      const std::size_t rows = n->value.rows();
      const std::size_t p = ps[0]->value.cols(), q = ps[1]->value.cols();
      if (wants(0)) {
        Tensor& pa = adj_of(ps[0].get());
        for (std::size_t i = 0; i < rows; ++i)
          for (std::size_t j = 0; j < p; ++j) pa(i, j) += adj(i, j);
      }
      if (wants(1)) {
        Tensor& pa = adj_of(ps[1].get());
        for (std::size_t i = 0; i < rows; ++i)
          for (std::size_t j = 0; j < q; ++j) pa(i, j) += adj(i, p + j);
      }
      break;
    }
    case Op::add_row: {
      if (wants(0)) {
        Tensor& pa = adj_of(ps[0].get());
        for (std::size_t i = 0; i < adj.numel(); ++i) pa[i] += adj[i];
      }
      if (wants(1)) {
        Tensor& pa = adj_of(ps[1].get());
        const std::size_t rows = n->value.rows(), k = n->value.cols();
        for (std::size_t i = 0; i < rows; ++i)
          for (std::size_t j = 0; j < k; ++j) pa(0, j) += adj(i, j);
      }
      break;
    }
  }
}

}  // namespace detail

/// Accumulates d(root)/d(node) into `grad` of every reachable node that
/// requires grad. Pass-local adjoints keep repeated calls additive: two
/// backward passes without zeroing give exactly twice the gradient.
inline void backward(const NodePtr& root) {
  if (root->value.numel() != 1) {
    throw ContractError("backward requires a scalar root, got shape " +
                        root->value.shape_string());
  }
  if (!root->requires_grad) {
    return;  // nothing reachable wants a gradient
  }
  std::vector<Node*> order = detail::topo_order(root.get());
  std::unordered_map<Node*, Tensor> adjoints;
  adjoints.reserve(order.size());
  for (Node* n : order) adjoints.emplace(n, Tensor(n->value.shape()));
  adjoints.at(root.get())[0] = 1.0;

  std::function<Tensor&(Node*)> adj_of = [&](Node* n) -> Tensor& { return adjoints.at(n); };
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::backprop_one(*it, adjoints.at(*it), adj_of);
  }
  for (Node* n : order) {
    const Tensor& a = adjoints.at(n);
    for (std::size_t i = 0; i < a.numel(); ++i) n->grad[i] += a[i];
  }
}

inline void zero_grads(const std::vector<NodePtr>& params) {
  for (const auto& p : params) p->zero_grad();
}

/// Compares analytic gradients of `make_loss()` against central finite
/// differences over every element of `params`. Returns
/// max |analytic - numeric| / max(1, |numeric|).
inline double grad_check(const std::function<NodePtr()>& make_loss,
                         const std::vector<NodePtr>& params, double step) {
  if (step <= 0.0) throw DomainError("grad_check step must be positive");
  zero_grads(params);
  NodePtr loss = make_loss();
  if (!std::isfinite(loss->value.scalar_value())) {
    throw NumericError("grad_check: non-finite loss");
  }
  backward(loss);
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) analytic.push_back(p->grad);
  zero_grads(params);

  double max_rel = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& v = params[pi]->value;
    for (std::size_t i = 0; i < v.numel(); ++i) {
      const double saved = v[i];
      v[i] = saved + step;
      const double fp = make_loss()->value.scalar_value();
      v[i] = saved - step;
      const double fm = make_loss()->value.scalar_value();
      v[i] = saved;
      if (!std::isfinite(fp) || !std::isfinite(fm)) {
        throw NumericError("grad_check: non-finite loss during perturbation");
      }
      const double numeric = (fp - fm) / (2.0 * step);
      const double rel = std::abs(analytic[pi][i] - numeric) / std::max(1.0, std::abs(numeric));
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace drl::ad
