#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "drl/autodiff.hpp"
#include "drl/rng.hpp"

namespace drl::nn {

enum class Hidden { relu, tanh };
enum class Output { identity, sigmoid };

struct MlpConfig {
  std::vector<std::size_t> layer_sizes;  // input, hidden..., output
  Hidden hidden_activation = Hidden::relu;
  Output output_activation = Output::identity;

  void validate() const {
    if (layer_sizes.size() < 2) {
      throw ConfigError("MlpConfig needs at least input and output sizes");
    }
    for (std::size_t s : layer_sizes) {
      if (s == 0) throw ConfigError("MlpConfig layer size must be positive");
    }
  }
};

/// Fully connected network. Weights are fan-scaled uniform, biases zero,
/// reproducible from the injected generator.
class Mlp {
 public:
  Mlp() = default;

  Mlp(MlpConfig config, Rng& rng) : config_(std::move(config)) {
    config_.validate();
    const auto& ls = config_.layer_sizes;
    for (std::size_t l = 0; l + 1 < ls.size(); ++l) {
      const double bound = std::sqrt(6.0 / static_cast<double>(ls[l] + ls[l + 1]));
      weights_.push_back(ad::parameter(rng.uniform_tensor({ls[l], ls[l + 1]}, -bound, bound)));
      biases_.push_back(ad::parameter(Tensor::zeros({1, ls[l + 1]})));
    }
  }

  ad::NodePtr forward(const ad::NodePtr& input) const {
    if (input->value.rank() != 2 || input->value.cols() != config_.layer_sizes.front()) {
      throw DimensionError("Mlp::forward: input " + input->value.shape_string() +
                           " does not match first layer size " +
                           std::to_string(config_.layer_sizes.front()));
    }
    ad::NodePtr h = input;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      h = ad::add_row(ad::matmul(h, weights_[l]), biases_[l]);
      const bool last = (l + 1 == weights_.size());
      if (!last) {
        h = config_.hidden_activation == Hidden::relu ? ad::relu(h) : ad::tanh(h);
      } else if (config_.output_activation == Output::sigmoid) {
        h = ad::sigmoid(h);
      }
    }
    return h;
  }

  /// Forward pass on plain data, no graph retained.
  Tensor forward_values(const Tensor& input) const { return forward(ad::constant(input))->value; }

  std::vector<ad::NodePtr> parameters() const {
    std::vector<ad::NodePtr> out;
    out.reserve(weights_.size() * 2);
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      out.push_back(weights_[l]);
      out.push_back(biases_[l]);
    }
    return out;
  }

  /// Deep copy with fresh parameter nodes.
  Mlp clone() const {
    Mlp out;
    out.config_ = config_;
    for (const auto& w : weights_) out.weights_.push_back(ad::parameter(w->value));
    for (const auto& b : biases_) out.biases_.push_back(ad::parameter(b->value));
    return out;
  }

  /// Copies parameter values from another Mlp of identical topology.
  void load_values(const Mlp& other) {
    if (other.weights_.size() != weights_.size()) {
      throw DimensionError("Mlp::load_values: layer count mismatch");
    }
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      if (!weights_[l]->value.same_shape(other.weights_[l]->value)) {
        throw DimensionError("Mlp::load_values: weight shape mismatch at layer " +
                             std::to_string(l));
      }
      weights_[l]->value = other.weights_[l]->value;
      biases_[l]->value = other.biases_[l]->value;
    }
  }

  const MlpConfig& config() const noexcept { return config_; }
  std::size_t layer_count() const noexcept { return weights_.size(); }
  const ad::NodePtr& weight(std::size_t l) const { return weights_.at(l); }
  const ad::NodePtr& bias(std::size_t l) const { return biases_.at(l); }

 private:
  MlpConfig config_;
  std::vector<ad::NodePtr> weights_;
  std::vector<ad::NodePtr> biases_;
};

/// Mean squared error against a fixed target (Eq. style: (1/N) sum (y - yhat)^2).
inline ad::NodePtr mse_loss(const ad::NodePtr& pred, const Tensor& target) {
  if (pred->value.numel() == 0) throw DomainError("mse_loss on empty prediction");
  if (pred->value.numel() != target.numel()) {
    throw DimensionError("mse_loss: prediction " + pred->value.shape_string() + " vs target " +
                         target.shape_string());
  }
  Tensor t = target;
  if (!pred->value.same_shape(t)) t = Tensor(pred->value.shape(), target.data());
  ad::NodePtr diff = ad::sub(pred, ad::constant(t));
  return ad::mean(ad::mul(diff, diff));
}

/// Binary cross entropy; predictions are clamped away from {0,1} by the log op.
inline ad::NodePtr bce_loss(const ad::NodePtr& pred, const Tensor& target) {
  if (pred->value.numel() == 0) throw DomainError("bce_loss on empty prediction");
  if (pred->value.numel() != target.numel()) {
    throw DimensionError("bce_loss: prediction " + pred->value.shape_string() + " vs target " +
                         target.shape_string());
  }
  Tensor t = target;
  if (!pred->value.same_shape(t)) t = Tensor(pred->value.shape(), target.data());
  ad::NodePtr y = ad::constant(t);
  ad::NodePtr ones = ad::constant(Tensor::ones(pred->value.shape()));
  ad::NodePtr pos = ad::mul(y, ad::log(pred));
  ad::NodePtr negt = ad::mul(ad::sub(ones, y), ad::log(ad::sub(ones, pred)));
  return ad::neg(ad::mean(ad::add(pos, negt)));
}

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

inline AdamState adam_init(const std::vector<ad::NodePtr>& params) {
  AdamState s;
  s.m.reserve(params.size());
  s.v.reserve(params.size());
  for (const auto& p : params) {
    s.m.emplace_back(p->value.shape());
    s.v.emplace_back(p->value.shape());
  }
  return s;
}

/// Scales the joint gradient of `params` down to `max_norm` (L2 over all
/// elements) when it exceeds it. No-op for max_norm <= 0.
inline double clip_gradient_norm(const std::vector<ad::NodePtr>& params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params) {
    for (double g : p->grad.data()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (const auto& p : params) {
      for (double& g : p->grad.data()) g *= scale;
    }
  }
  return norm;
}

/// One Adam update with bias correction, reading each parameter's accumulated
/// grad. The caller zeroes gradients afterwards.
inline void adam_step(const std::vector<ad::NodePtr>& params, AdamState& state, double lr) {
  if (lr <= 0.0) throw ConfigError("adam_step: learning rate must be positive");
  if (params.size() != state.m.size()) {
    throw DimensionError("adam_step: state tracks " + std::to_string(state.m.size()) +
                         " parameters, got " + std::to_string(params.size()));
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& value = params[pi]->value;
    const Tensor& grad = params[pi]->grad;
    Tensor& m = state.m[pi];
    Tensor& v = state.v[pi];
    for (std::size_t i = 0; i < value.numel(); ++i) {
      const double g = grad[i];
      if (!std::isfinite(g)) {
        throw NumericError("adam_step: non-finite gradient in parameter " + std::to_string(pi) +
                           " at element " + std::to_string(i));
      }
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      value[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

}  // namespace drl::nn
