#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "drl/baselines.hpp"
#include "drl/io.hpp"
#include "drl/metrics.hpp"
#include "drl/model.hpp"
#include "drl/split.hpp"
#include "drl/synthgen.hpp"

namespace drl::harness {

/// De-confounding and inference metrics for one fitted method on one dataset
/// draw. Fields that do not apply to a method stay empty.
struct MetricsReport {
  double pcc_before = 0.0;
  double mcc_line_before = 0.0;
  double mcc_nonl_before = 0.0;
  std::optional<double> pcc_after;
  std::optional<double> mcc_line_after;
  std::optional<double> mcc_nonl_after;
  std::optional<double> eps_mtef_train;
  std::optional<double> eps_mtef_test;
  std::optional<double> d_real_mean;  // discriminator equilibrium statistics
  std::optional<double> d_fake_mean;
};

struct BenchmarkCell {
  synth::Scenario scenario = synth::Scenario::A;
  std::string method;
  std::size_t repeat = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;  // set when ok is false
  MetricsReport metrics;
};

struct BenchmarkAggregate {
  synth::Scenario scenario = synth::Scenario::A;
  std::string method;
  std::size_t repeats_ok = 0;
  MetricsReport mean;
  MetricsReport stderr_;  // standard error of the mean; 0 for a single repeat
};

struct BenchmarkRequest {
  std::vector<synth::Scenario> scenarios{synth::Scenario::A};
  std::vector<std::string> methods{"drl", "msm", "icpw", "naive"};
  std::size_t repeats = 1;
  std::uint64_t base_seed = 0;
  std::size_t n = 4000;
  std::size_t d = 10;
  SplitMode split_mode = SplitMode::random_602020;
  DrlConfig drl_config;                 // seed/outcome_kind overridden per repeat
  baselines::NaiveConfig naive_config;  // likewise

  void validate() const {
    if (repeats < 1) throw ConfigError("BenchmarkRequest: repeats must be >= 1");
    if (scenarios.empty()) throw ConfigError("BenchmarkRequest: no scenarios");
    if (methods.empty()) throw ConfigError("BenchmarkRequest: no methods");
    for (const std::string& m : methods) {
      if (m != "drl" && m != "msm" && m != "icpw" && m != "naive") {
        throw ConfigError("BenchmarkRequest: unknown method '" + m + "'");
      }
    }
  }
};

struct BenchmarkReport {
  BenchmarkRequest request;
  std::vector<BenchmarkCell> cells;
  std::vector<BenchmarkAggregate> aggregates;
};

namespace detail {

struct RepeatContext {
  synth::Dataset train, val, test;
  synth::GroundTruth gt;
  metrics::MtefCurve grid_train, grid_test;   // levels/dt only
  metrics::MtefCurve truth_train, truth_test;
  MetricsReport before;  // raw-covariate correlation metrics, shared by methods
};

inline RepeatContext make_repeat_context(synth::Scenario scenario, std::size_t n, std::size_t d,
                                         std::uint64_t seed, SplitMode mode) {
  synth::ScenarioSpec spec;
  spec.scenario = scenario;
  spec.n = n;
  spec.d = d;
  spec.seed = seed;
  auto [data, gt] = synth::make_scenario(spec);
  SplitIndices idx = split(data, SplitSpec{mode, seed});

  RepeatContext ctx;
  ctx.train = data.take_rows(idx.train);
  ctx.val = data.take_rows(idx.val);
  ctx.test = data.take_rows(idx.test);
  ctx.gt = gt;
  ctx.grid_train = metrics::make_grid(ctx.train.t);
  ctx.grid_test = metrics::make_grid(ctx.test.t);
  ctx.truth_train = metrics::true_mtef_curve(gt, ctx.grid_train.t_levels, ctx.grid_train.dt);
  ctx.truth_test = metrics::true_mtef_curve(gt, ctx.grid_test.t_levels, ctx.grid_test.dt);

  ctx.before.pcc_before = metrics::pcc(ctx.train.x, ctx.train.t).value;
  ctx.before.mcc_line_before = metrics::mcc(ctx.train.x, ctx.train.t, metrics::MccMode::line);
  ctx.before.mcc_nonl_before = metrics::mcc(ctx.train.x, ctx.train.t, metrics::MccMode::nonl);
  return ctx;
}

inline void fill_eps(MetricsReport& rep, const RepeatContext& ctx,
                     const metrics::Predictor& pred) {
  metrics::MtefCurve pc_train =
      metrics::mtef_pred(pred, ctx.train.x, ctx.grid_train.t_levels, ctx.grid_train.dt);
  metrics::MtefCurve pc_test =
      metrics::mtef_pred(pred, ctx.test.x, ctx.grid_test.t_levels, ctx.grid_test.dt);
  rep.eps_mtef_train = metrics::eps_mtef(ctx.truth_train, pc_train);
  rep.eps_mtef_test = metrics::eps_mtef(ctx.truth_test, pc_test);
}

inline MetricsReport eval_drl(const RepeatContext& ctx, DrlConfig cfg, std::uint64_t seed) {
  cfg.seed = seed;
  cfg.outcome_kind = ctx.train.outcome_kind;
  auto [model, history] = train(ctx.train, cfg, &ctx.val);
  (void)history;
  MetricsReport rep = ctx.before;
  Tensor reps = representations(model, ctx.train.x);
  rep.pcc_after = metrics::pcc(reps, ctx.train.t).value;
  rep.mcc_line_after = metrics::mcc(reps, ctx.train.t, metrics::MccMode::line);
  rep.mcc_nonl_after = metrics::mcc(reps, ctx.train.t, metrics::MccMode::nonl);
  Rng eq_rng(seed ^ 0x9e3779b97f4a7c15ULL);
  EquilibriumStats eq = discriminator_stats(model, ctx.train, eq_rng);
  rep.d_real_mean = eq.d_real_mean;
  rep.d_fake_mean = eq.d_fake_mean;
  fill_eps(rep, ctx, make_predictor(model));
  return rep;
}

inline MetricsReport eval_msm(const RepeatContext& ctx, const std::vector<double>& weights) {
  baselines::MsmFit fit = baselines::msm_fit(ctx.train.t, ctx.train.y, weights);
  MetricsReport rep = ctx.before;
  if (!weights.empty()) {
    // weighted correlations of the reweighted sample
    rep.pcc_after = metrics::pcc(ctx.train.x, ctx.train.t, weights).value;
    rep.mcc_line_after =
        metrics::mcc(ctx.train.x, ctx.train.t, metrics::MccMode::line, {}, weights);
    rep.mcc_nonl_after =
        metrics::mcc(ctx.train.x, ctx.train.t, metrics::MccMode::nonl, {}, weights);
  } else {
    rep.pcc_after = rep.pcc_before;
    rep.mcc_line_after = rep.mcc_line_before;
    rep.mcc_nonl_after = rep.mcc_nonl_before;
  }
  metrics::MtefCurve pc_train =
      baselines::msm_mtef(fit, ctx.grid_train.t_levels, ctx.grid_train.dt);
  metrics::MtefCurve pc_test = baselines::msm_mtef(fit, ctx.grid_test.t_levels, ctx.grid_test.dt);
  rep.eps_mtef_train = metrics::eps_mtef(ctx.truth_train, pc_train);
  rep.eps_mtef_test = metrics::eps_mtef(ctx.truth_test, pc_test);
  return rep;
}

inline MetricsReport eval_naive(const RepeatContext& ctx, baselines::NaiveConfig cfg,
                                std::uint64_t seed) {
  cfg.seed = seed;
  cfg.outcome_kind = ctx.train.outcome_kind;
  auto [pred, history] = baselines::naive_net(ctx.train, cfg, &ctx.val);
  (void)history;
  MetricsReport rep = ctx.before;
  fill_eps(rep, ctx, pred.as_predictor());
  return rep;
}

}  // namespace detail

/// Runs the (scenario x method x repeat) grid. Each repeat draws a fresh
/// scenario (seed = base_seed + repeat), splits it, fits every method on the
/// train split with validation-based selection, and scores de-confounding
/// plus MTEF accuracy against the generator's oracle. Failures are recorded
/// per cell rather than aborting the run.
inline BenchmarkReport run_benchmark(const BenchmarkRequest& request) {
  request.validate();
  BenchmarkReport report;
  report.request = request;

  for (synth::Scenario scenario : request.scenarios) {
    for (std::size_t r = 0; r < request.repeats; ++r) {
      const std::uint64_t seed = request.base_seed + r;
      std::optional<detail::RepeatContext> ctx;
      std::string ctx_error;
      try {
        ctx = detail::make_repeat_context(scenario, request.n, request.d, seed,
                                          request.split_mode);
      } catch (const Error& e) {
        ctx_error = e.what();
      }
      std::optional<baselines::IcpwWeights> icpw;  // shared by the icpw cell
      for (const std::string& method : request.methods) {
        BenchmarkCell cell;
        cell.scenario = scenario;
        cell.method = method;
        cell.repeat = r;
        cell.seed = seed;
        if (!ctx) {
          cell.error = "scenario generation failed: " + ctx_error;
          report.cells.push_back(std::move(cell));
          continue;
        }
        try {
          if (method == "drl") {
            cell.metrics = detail::eval_drl(*ctx, request.drl_config, seed);
          } else if (method == "msm") {
            cell.metrics = detail::eval_msm(*ctx, {});
          } else if (method == "icpw") {
            if (!icpw) icpw = baselines::icpw_weights(ctx->train.x, ctx->train.t);
            cell.metrics = detail::eval_msm(*ctx, icpw->weights);
          } else {  // naive
            cell.metrics = detail::eval_naive(*ctx, request.naive_config, seed);
          }
          cell.ok = true;
        } catch (const Error& e) {
          cell.error = e.what();
        }
        report.cells.push_back(std::move(cell));
      }
    }
  }

  // aggregates per (scenario, method), recomputable from the cells
  for (synth::Scenario scenario : request.scenarios) {
    for (const std::string& method : request.methods) {
      BenchmarkAggregate agg;
      agg.scenario = scenario;
      agg.method = method;
      std::vector<const MetricsReport*> rows;
      for (const BenchmarkCell& cell : report.cells) {
        if (cell.scenario == scenario && cell.method == method && cell.ok) {
          rows.push_back(&cell.metrics);
        }
      }
      agg.repeats_ok = rows.size();
      if (!rows.empty()) {
        auto plain = [&](double MetricsReport::* member) {
          std::vector<double> vals;
          for (const MetricsReport* m : rows) vals.push_back(m->*member);
          double mean = 0.0;
          for (double v : vals) mean += v;
          mean /= static_cast<double>(vals.size());
          double sd = 0.0;
          if (vals.size() > 1) {
            for (double v : vals) sd += (v - mean) * (v - mean);
            sd = std::sqrt(sd / static_cast<double>(vals.size() - 1));
          }
          agg.mean.*member = mean;
          agg.stderr_.*member =
              vals.size() > 1 ? sd / std::sqrt(static_cast<double>(vals.size())) : 0.0;
        };
        plain(&MetricsReport::pcc_before);
        plain(&MetricsReport::mcc_line_before);
        plain(&MetricsReport::mcc_nonl_before);
        auto opt = [&](std::optional<double> MetricsReport::* member) {
          std::vector<double> vals;
          for (const MetricsReport* m : rows) {
            if ((m->*member).has_value()) vals.push_back(*(m->*member));
          }
          if (vals.empty()) return;
          double mean = 0.0;
          for (double v : vals) mean += v;
          mean /= static_cast<double>(vals.size());
          double sd = 0.0;
          if (vals.size() > 1) {
            for (double v : vals) sd += (v - mean) * (v - mean);
            sd = std::sqrt(sd / static_cast<double>(vals.size() - 1));
          }
          agg.mean.*member = mean;
          agg.stderr_.*member =
              vals.size() > 1 ? sd / std::sqrt(static_cast<double>(vals.size())) : 0.0;
        };
        opt(&MetricsReport::pcc_after);
        opt(&MetricsReport::mcc_line_after);
        opt(&MetricsReport::mcc_nonl_after);
        opt(&MetricsReport::eps_mtef_train);
        opt(&MetricsReport::eps_mtef_test);
        opt(&MetricsReport::d_real_mean);
        opt(&MetricsReport::d_fake_mean);
      }
      report.aggregates.push_back(std::move(agg));
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// report serialization (timestamp lives only under meta.created)

namespace detail {

inline json metrics_to_json(const MetricsReport& m) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return json{{"pcc_before", m.pcc_before},
              {"mcc_line_before", m.mcc_line_before},
              {"mcc_nonl_before", m.mcc_nonl_before},
              {"pcc_after", opt(m.pcc_after)},
              {"mcc_line_after", opt(m.mcc_line_after)},
              {"mcc_nonl_after", opt(m.mcc_nonl_after)},
              {"eps_mtef_train", opt(m.eps_mtef_train)},
              {"eps_mtef_test", opt(m.eps_mtef_test)},
              {"d_real_mean", opt(m.d_real_mean)},
              {"d_fake_mean", opt(m.d_fake_mean)}};
}

}  // namespace detail

inline json report_to_json(const BenchmarkReport& report, const std::string& timestamp) {
  json scenarios = json::array();
  for (synth::Scenario s : report.request.scenarios) {
    scenarios.push_back(std::string(1, synth::scenario_letter(s)));
  }
  json cells = json::array();
  for (const BenchmarkCell& c : report.cells) {
    cells.push_back(json{{"scenario", std::string(1, synth::scenario_letter(c.scenario))},
                         {"method", c.method},
                         {"repeat", c.repeat},
                         {"seed", c.seed},
                         {"ok", c.ok},
                         {"error", c.error},
                         {"metrics", detail::metrics_to_json(c.metrics)}});
  }
  json aggs = json::array();
  for (const BenchmarkAggregate& a : report.aggregates) {
    aggs.push_back(json{{"scenario", std::string(1, synth::scenario_letter(a.scenario))},
                        {"method", a.method},
                        {"repeats_ok", a.repeats_ok},
                        {"mean", detail::metrics_to_json(a.mean)},
                        {"stderr", detail::metrics_to_json(a.stderr_)}});
  }
  return json{{"format", "drl-benchmark-report"},
              {"format_version", 1},
              {"meta", json{{"created", timestamp}}},
              {"request",
               json{{"scenarios", std::move(scenarios)},
                    {"methods", report.request.methods},
                    {"repeats", report.request.repeats},
                    {"base_seed", report.request.base_seed},
                    {"n", report.request.n},
                    {"d", report.request.d},
                    {"split", split_mode_name(report.request.split_mode)},
                    {"drl_config", config_to_json(report.request.drl_config)}}},
              {"cells", std::move(cells)},
              {"aggregates", std::move(aggs)}};
}

inline void write_report(const std::filesystem::path& path, const BenchmarkReport& report,
                         const std::string& timestamp) {
  atomic_write_text(path, report_to_json(report, timestamp).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// grid search

struct GridSearchEntry {
  DrlConfig config;
  double score = std::numeric_limits<double>::quiet_NaN();  // validation l_c
  std::string error;  // non-empty when the run failed
};

struct GridSearchResult {
  DrlConfig best;
  double best_score = 0.0;
  std::vector<GridSearchEntry> entries;
};

/// Exhaustive search over a finite config space: trains each candidate on the
/// 60/20/20 train split and scores it by the best validation l_c. Ties break
/// to the lexically smallest canonical config serialization.
inline GridSearchResult grid_search(const std::vector<DrlConfig>& space,
                                    const synth::Dataset& dataset,
                                    std::uint64_t split_seed = 0) {
  if (space.empty()) throw SearchError("grid_search: empty config space");
  SplitIndices idx = split(dataset, SplitSpec{SplitMode::random_602020, split_seed});
  synth::Dataset tr = dataset.take_rows(idx.train);
  synth::Dataset va = dataset.take_rows(idx.val);

  GridSearchResult result;
  bool have_best = false;
  std::string best_key;
  for (const DrlConfig& cfg : space) {
    GridSearchEntry entry;
    entry.config = cfg;
    try {
      auto [model, history] = train(tr, cfg, &va);
      (void)model;
      entry.score = history.epochs.at(history.best_epoch).val_l_c;
    } catch (const Error& e) {
      entry.error = e.what();
    }
    const std::string key = config_to_json(cfg).dump();
    if (entry.error.empty() && std::isfinite(entry.score)) {
      const bool better = !have_best || entry.score < result.best_score ||
                          (entry.score == result.best_score && key < best_key);
      if (better) {
        result.best = cfg;
        result.best_score = entry.score;
        best_key = key;
        have_best = true;
      }
    }
    result.entries.push_back(std::move(entry));
  }
  if (!have_best) {
    throw SearchError("grid_search: every candidate failed or diverged (" +
                      std::to_string(space.size()) + " tried)");
  }
  return result;
}

/// Expands a JSON document of the form {"w_c": [0.1, 1.0], "lr_g": 1e-3, ...}
/// into the Cartesian product of array-valued keys applied over `base`.
inline std::vector<DrlConfig> expand_config_space(const json& j, const DrlConfig& base) {
  if (!j.is_object()) throw ParseError("config space must be a JSON object");
  std::vector<std::pair<std::string, std::vector<json>>> axes;
  DrlConfig fixed = base;
  for (const auto& [key, value] : j.items()) {
    if (value.is_array()) {
      if (value.empty()) throw ParseError("config space key '" + key + "' has no values");
      axes.emplace_back(key, std::vector<json>(value.begin(), value.end()));
    } else {
      apply_config_json(fixed, json{{key, value}});
    }
  }
  std::vector<DrlConfig> out;
  std::vector<std::size_t> pick(axes.size(), 0);
  while (true) {
    DrlConfig cfg = fixed;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      apply_config_json(cfg, json{{axes[a].first, axes[a].second[pick[a]]}});
    }
    out.push_back(cfg);
    std::size_t a = 0;
    for (; a < axes.size(); ++a) {
      if (++pick[a] < axes[a].second.size()) break;
      pick[a] = 0;
    }
    if (a == axes.size()) break;
  }
  return out;
}

}  // namespace drl::harness
