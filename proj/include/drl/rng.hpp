#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "drl/tensor.hpp"

namespace drl {

/// Seeded random source. All randomness in the library flows through an
/// injected Rng; there is no hidden global state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Derive an independent child stream. Used to make generation order
  /// insensitive to which components a caller actually draws.
  Rng fork() { return Rng(engine_()); }

  double uniform(double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    return d(engine_);
  }

  double normal(double mean = 0.0, double stddev = 1.0) {
    std::normal_distribution<double> d(mean, stddev);
    return d(engine_);
  }

  std::vector<double> normal_vector(std::size_t n, double mean = 0.0, double stddev = 1.0) {
    std::normal_distribution<double> d(mean, stddev);
    std::vector<double> out(n);
    for (double& v : out) v = d(engine_);
    return out;
  }

  Tensor normal_tensor(std::vector<std::size_t> shape, double mean = 0.0, double stddev = 1.0) {
    Tensor t(std::move(shape));
    std::normal_distribution<double> d(mean, stddev);
    for (double& v : t.data()) v = d(engine_);
    return t;
  }

  Tensor uniform_tensor(std::vector<std::size_t> shape, double lo, double hi) {
    Tensor t(std::move(shape));
    std::uniform_real_distribution<double> d(lo, hi);
    for (double& v : t.data()) v = d(engine_);
    return t;
  }

  /// Fisher-Yates shuffle, deterministic per stream state.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::uniform_int_distribution<std::size_t> d(0, i - 1);
      std::swap(v[i - 1], v[d(engine_)]);
    }
  }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace drl
