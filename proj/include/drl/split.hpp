#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "drl/errors.hpp"
#include "drl/metrics.hpp"
#include "drl/rng.hpp"
#include "drl/synthgen.hpp"

namespace drl::harness {

enum class SplitMode {
  random_602020,   // shuffled 60/20/20
  quantile80_ood,  // test = t above its 80th percentile; rest 75/25 train/val
};

struct SplitSpec {
  SplitMode mode = SplitMode::random_602020;
  std::uint64_t seed = 0;
};

struct SplitIndices {
  std::vector<std::size_t> train, val, test;
};

/// Deterministic index partition. The quantile mode's 75/25 train/val ratio
/// keeps the global 60/20 proportion of the random mode.
inline SplitIndices split(const synth::Dataset& data, const SplitSpec& spec) {
  const std::size_t n = data.size();
  if (n < 10) throw SplitError("split needs at least 10 rows, got " + std::to_string(n));
  Rng rng(spec.seed);
  SplitIndices out;

  if (spec.mode == SplitMode::random_602020) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    const std::size_t n_train = (n * 6) / 10;
    const std::size_t n_val = (n * 2) / 10;
    out.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.val.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train),
                   perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    out.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), perm.end());
  } else {
    const double threshold = metrics::quantile(data.t, 0.80);
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < n; ++i) {
      (data.t[i] > threshold ? out.test : rest).push_back(i);
    }
    if (out.test.empty()) {
      throw SplitError("quantile80 split: no rows above the 80th percentile (constant t?)");
    }
    rng.shuffle(rest);
    const std::size_t n_train = (rest.size() * 3) / 4;
    out.train.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.val.assign(rest.begin() + static_cast<std::ptrdiff_t>(n_train), rest.end());
  }

  if (out.train.empty() || out.val.empty() || out.test.empty()) {
    throw SplitError("split produced an empty part (n = " + std::to_string(n) + ")");
  }
  return out;
}

inline std::string split_mode_name(SplitMode m) {
  return m == SplitMode::random_602020 ? "random" : "quantile80";
}

inline SplitMode split_mode_from_name(const std::string& s) {
  if (s == "random") return SplitMode::random_602020;
  if (s == "quantile80") return SplitMode::quantile80_ood;
  throw ConfigError("unknown split mode '" + s + "' (expected random|quantile80)");
}

}  // namespace drl::harness
