// Command line front end: generate synthetic scenarios, train and evaluate
// models, run benchmark grids, and emit MTEF curves.

#include <chrono>
#include <ctime>
#include <exception>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "drl/drl.hpp"

namespace {

using drl::DrlConfig;
using drl::harness::json;

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<drl::synth::Scenario> parse_scenarios(const std::string& csv) {
  std::vector<drl::synth::Scenario> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.size() != 1) throw drl::ConfigError("bad scenario token '" + tok + "'");
    out.push_back(drl::synth::scenario_from_letter(tok[0]));
  }
  if (out.empty()) throw drl::ConfigError("no scenarios given");
  return out;
}

std::vector<std::string> parse_csv_list(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

struct EvalViews {
  drl::synth::Dataset train, val, test;
};

EvalViews split_views(const drl::synth::Dataset& data, drl::harness::SplitMode mode,
                      std::uint64_t seed) {
  drl::harness::SplitIndices idx = drl::harness::split(data, {mode, seed});
  return {data.take_rows(idx.train), data.take_rows(idx.val), data.take_rows(idx.test)};
}

int cmd_generate(const std::string& scenario, std::size_t n, std::uint64_t seed,
                 const std::string& out, std::size_t d) {
  drl::synth::ScenarioSpec spec;
  spec.scenario = drl::synth::scenario_from_letter(scenario.at(0));
  spec.n = n;
  spec.d = d;
  spec.seed = seed;
  auto [data, gt] = drl::synth::make_scenario(spec);
  drl::harness::write_dataset_csv(out, data);
  drl::harness::DatasetMeta meta;
  meta.spec = spec;
  meta.ground_truth = gt;
  meta.outcome_kind = data.outcome_kind;
  drl::harness::write_dataset_meta(drl::harness::meta_path_for(out), meta);
  std::cout << "wrote " << out << " (" << n << " rows, d=" << d << ") and "
            << drl::harness::meta_path_for(out).string() << "\n";
  return 0;
}

int cmd_train(const std::string& data_path, const std::string& ckpt_path,
              const std::optional<std::string>& config_path, std::optional<std::uint64_t> seed,
              std::optional<std::size_t> epochs, std::optional<double> wc,
              std::optional<std::size_t> rep_dim) {
  drl::synth::Dataset data = drl::harness::read_dataset_csv(data_path);
  if (auto meta = drl::harness::try_read_dataset_meta(data_path)) {
    data.outcome_kind = meta->outcome_kind;
  }
  DrlConfig cfg;
  if (config_path) {
    json j;
    try {
      j = json::parse(drl::harness::read_text(*config_path));
    } catch (const json::exception& e) {
      throw drl::ParseError("config file '" + *config_path + "': " + e.what());
    }
    drl::harness::apply_config_json(cfg, j);
  }
  if (seed) cfg.seed = *seed;
  if (epochs) cfg.epochs = *epochs;
  if (wc) cfg.w_c = *wc;
  if (rep_dim) cfg.rep_dim = *rep_dim;
  cfg.outcome_kind = data.outcome_kind;

  EvalViews views = split_views(data, drl::harness::SplitMode::random_602020, cfg.seed);
  auto [model, history] = drl::train(views.train, cfg, &views.val);
  drl::harness::save_checkpoint(ckpt_path, model);
  const auto& last = history.epochs.empty() ? drl::EpochRecord{} : history.epochs.back();
  std::cout << "trained " << cfg.epochs << " epochs (best epoch " << history.best_epoch
            << "); final l_d=" << last.l_d << " l_g=" << last.l_g << " l_c=" << last.l_c
            << "; checkpoint " << ckpt_path << "\n";
  return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data_path,
             const std::string& report_path, const std::string& split_name) {
  drl::DrlModel model = drl::harness::load_checkpoint(ckpt_path);
  drl::synth::Dataset data = drl::harness::read_dataset_csv(data_path);
  std::optional<drl::harness::DatasetMeta> meta = drl::harness::try_read_dataset_meta(data_path);
  if (meta) data.outcome_kind = meta->outcome_kind;
  if (data.x.cols() != model.input_dim) {
    throw drl::DimensionError("dataset has d=" + std::to_string(data.x.cols()) +
                              " but checkpoint expects d=" + std::to_string(model.input_dim));
  }
  EvalViews views =
      split_views(data, drl::harness::split_mode_from_name(split_name), model.config.seed);

  drl::harness::MetricsReport rep;
  rep.pcc_before = drl::metrics::pcc(views.train.x, views.train.t).value;
  rep.mcc_line_before =
      drl::metrics::mcc(views.train.x, views.train.t, drl::metrics::MccMode::line);
  rep.mcc_nonl_before =
      drl::metrics::mcc(views.train.x, views.train.t, drl::metrics::MccMode::nonl);
  drl::Tensor reps = drl::representations(model, views.train.x);
  rep.pcc_after = drl::metrics::pcc(reps, views.train.t).value;
  rep.mcc_line_after = drl::metrics::mcc(reps, views.train.t, drl::metrics::MccMode::line);
  rep.mcc_nonl_after = drl::metrics::mcc(reps, views.train.t, drl::metrics::MccMode::nonl);
  drl::Rng eq_rng(model.config.seed ^ 0x9e3779b97f4a7c15ULL);
  drl::EquilibriumStats eq = drl::discriminator_stats(model, views.train, eq_rng);
  rep.d_real_mean = eq.d_real_mean;
  rep.d_fake_mean = eq.d_fake_mean;

  json out{{"format", "drl-eval-report"},
           {"format_version", 1},
           {"meta", json{{"created", now_iso8601()}}},
           {"checkpoint", ckpt_path},
           {"data", data_path},
           {"split", split_name},
           {"metrics", json{{"pcc_before", rep.pcc_before},
                            {"mcc_line_before", rep.mcc_line_before},
                            {"mcc_nonl_before", rep.mcc_nonl_before},
                            {"pcc_after", *rep.pcc_after},
                            {"mcc_line_after", *rep.mcc_line_after},
                            {"mcc_nonl_after", *rep.mcc_nonl_after},
                            {"d_real_mean", *rep.d_real_mean},
                            {"d_fake_mean", *rep.d_fake_mean}}}};

  if (meta) {
    auto grid_train = drl::metrics::make_grid(views.train.t);
    auto grid_test = drl::metrics::make_grid(views.test.t);
    auto pred = drl::make_predictor(model);
    auto eps = [&](const drl::synth::Dataset& part, const drl::metrics::MtefCurve& grid) {
      auto truth = drl::metrics::true_mtef_curve(meta->ground_truth, grid.t_levels, grid.dt);
      auto pc = drl::metrics::mtef_pred(pred, part.x, grid.t_levels, grid.dt);
      return drl::metrics::eps_mtef(truth, pc);
    };
    out["metrics"]["eps_mtef_train"] = eps(views.train, grid_train);
    out["metrics"]["eps_mtef_test"] = eps(views.test, grid_test);
  }
  drl::harness::atomic_write_text(report_path, out.dump(2) + "\n");
  std::cout << "wrote " << report_path << "\n";
  return 0;
}

int cmd_bench(const std::string& scenarios, const std::string& methods, std::size_t repeats,
              std::uint64_t seed, const std::string& out, std::size_t n, std::size_t d,
              const std::string& split_name, const std::optional<std::string>& config_path) {
  drl::harness::BenchmarkRequest req;
  req.scenarios = parse_scenarios(scenarios);
  req.methods = parse_csv_list(methods);
  req.repeats = repeats;
  req.base_seed = seed;
  req.n = n;
  req.d = d;
  req.split_mode = drl::harness::split_mode_from_name(split_name);
  if (config_path) {
    json j;
    try {
      j = json::parse(drl::harness::read_text(*config_path));
    } catch (const json::exception& e) {
      throw drl::ParseError("config file '" + *config_path + "': " + e.what());
    }
    drl::harness::apply_config_json(req.drl_config, j);
  }
  drl::harness::BenchmarkReport report = drl::harness::run_benchmark(req);
  drl::harness::write_report(out, report, now_iso8601());
  std::size_t failed = 0;
  for (const auto& c : report.cells) failed += c.ok ? 0 : 1;
  std::cout << "wrote " << out << " (" << report.cells.size() << " cells, " << failed
            << " failed)\n";
  return 0;
}

int cmd_gridsearch(const std::string& data_path, const std::string& space_path,
                   const std::string& out, std::uint64_t seed) {
  drl::synth::Dataset data = drl::harness::read_dataset_csv(data_path);
  if (auto meta = drl::harness::try_read_dataset_meta(data_path)) {
    data.outcome_kind = meta->outcome_kind;
  }
  json space_json;
  try {
    space_json = json::parse(drl::harness::read_text(space_path));
  } catch (const json::exception& e) {
    throw drl::ParseError("space file '" + space_path + "': " + e.what());
  }
  DrlConfig base;
  base.outcome_kind = data.outcome_kind;
  std::vector<DrlConfig> space = drl::harness::expand_config_space(space_json, base);
  drl::harness::GridSearchResult res = drl::harness::grid_search(space, data, seed);

  json entries = json::array();
  for (const auto& e : res.entries) {
    entries.push_back(json{{"config", drl::harness::config_to_json(e.config)},
                           {"score", std::isfinite(e.score) ? json(e.score) : json(nullptr)},
                           {"error", e.error}});
  }
  json doc{{"format", "drl-gridsearch-result"},
           {"format_version", 1},
           {"meta", json{{"created", now_iso8601()}}},
           {"best", drl::harness::config_to_json(res.best)},
           {"best_score", res.best_score},
           {"entries", std::move(entries)}};
  drl::harness::atomic_write_text(out, doc.dump(2) + "\n");
  std::cout << "evaluated " << space.size() << " configs; best val l_c = " << res.best_score
            << "; wrote " << out << "\n";
  return 0;
}

int cmd_mtef(const std::string& ckpt_path, const std::string& data_path, const std::string& out) {
  drl::DrlModel model = drl::harness::load_checkpoint(ckpt_path);
  drl::synth::Dataset data = drl::harness::read_dataset_csv(data_path);
  std::optional<drl::harness::DatasetMeta> meta = drl::harness::try_read_dataset_meta(data_path);
  if (data.x.cols() != model.input_dim) {
    throw drl::DimensionError("dataset has d=" + std::to_string(data.x.cols()) +
                              " but checkpoint expects d=" + std::to_string(model.input_dim));
  }
  drl::metrics::MtefCurve grid = drl::metrics::make_grid(data.t);
  drl::metrics::MtefCurve pred =
      drl::metrics::mtef_pred(drl::make_predictor(model), data.x, grid.t_levels, grid.dt);
  if (meta) {
    drl::metrics::MtefCurve truth =
        drl::metrics::true_mtef_curve(meta->ground_truth, grid.t_levels, grid.dt);
    drl::harness::atomic_write_text(out, drl::harness::mtef_curve_to_csv(pred, &truth));
  } else {
    drl::harness::atomic_write_text(out, drl::harness::mtef_curve_to_csv(pred));
  }
  std::cout << "wrote " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"De-confounding representation learning for continuous treatments"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Generate a synthetic scenario dataset");
  std::string gen_scenario;
  std::size_t gen_n = 0, gen_d = 10;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  gen->add_option("--scenario", gen_scenario, "Scenario letter")
      ->required()
      ->check(CLI::IsMember({"A", "B", "C", "D"}));
  gen->add_option("--n", gen_n, "Sample count")->required()->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed, "Generator seed")->required();
  gen->add_option("--out", gen_out, "Output CSV path")->required();
  gen->add_option("--d", gen_d, "Covariate dimension")->check(CLI::PositiveNumber);

  // train
  auto* tr = app.add_subcommand("train", "Train a model on a dataset CSV");
  std::string tr_data, tr_out;
  std::optional<std::string> tr_config;
  std::optional<std::uint64_t> tr_seed;
  std::optional<std::size_t> tr_epochs, tr_repdim;
  std::optional<double> tr_wc;
  tr->add_option("--data", tr_data, "Dataset CSV")->required();
  tr->add_option("--out", tr_out, "Checkpoint output path")->required();
  tr->add_option("--config", tr_config, "JSON config overrides");
  tr->add_option("--seed", tr_seed, "Training seed");
  tr->add_option("--epochs", tr_epochs, "Training epochs");
  tr->add_option("--wc", tr_wc, "Counterfactual loss weight w_c");
  tr->add_option("--rep-dim", tr_repdim, "Representation dimension");

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  std::string ev_ckpt, ev_data, ev_report, ev_split = "random";
  ev->add_option("--ckpt", ev_ckpt, "Checkpoint path")->required();
  ev->add_option("--data", ev_data, "Dataset CSV")->required();
  ev->add_option("--report", ev_report, "Report output path")->required();
  ev->add_option("--split", ev_split, "Split mode")
      ->check(CLI::IsMember({"random", "quantile80"}));

  // bench
  auto* be = app.add_subcommand("bench", "Run the benchmark grid");
  std::string be_scenarios = "A,B,C,D", be_methods = "drl,msm,icpw,naive", be_out,
              be_split = "random";
  std::size_t be_repeats = 1, be_n = 4000, be_d = 10;
  std::uint64_t be_seed = 0;
  std::optional<std::string> be_config;
  be->add_option("--scenarios", be_scenarios, "Comma-separated scenario letters");
  be->add_option("--methods", be_methods, "Comma-separated methods (drl,msm,icpw,naive)");
  be->add_option("--repeats", be_repeats, "Repeats per cell")->required();
  be->add_option("--seed", be_seed, "Base seed")->required();
  be->add_option("--out", be_out, "Report output path")->required();
  be->add_option("--n", be_n, "Samples per scenario draw");
  be->add_option("--d", be_d, "Covariate dimension");
  be->add_option("--split", be_split, "Split mode")
      ->check(CLI::IsMember({"random", "quantile80"}));
  be->add_option("--config", be_config, "JSON config overrides for the drl method");

  // gridsearch
  auto* gs = app.add_subcommand("gridsearch", "Grid search over a config space");
  std::string gs_data, gs_space, gs_out;
  std::uint64_t gs_seed = 0;
  gs->add_option("--data", gs_data, "Dataset CSV")->required();
  gs->add_option("--space", gs_space, "JSON config space")->required();
  gs->add_option("--out", gs_out, "Result output path")->required();
  gs->add_option("--seed", gs_seed, "Split seed");

  // mtef
  auto* mt = app.add_subcommand("mtef", "Emit the predicted MTEF curve as CSV");
  std::string mt_ckpt, mt_data, mt_out;
  mt->add_option("--ckpt", mt_ckpt, "Checkpoint path")->required();
  mt->add_option("--data", mt_data, "Dataset CSV")->required();
  mt->add_option("--out", mt_out, "Curve CSV output path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_generate(gen_scenario, gen_n, gen_seed, gen_out, gen_d);
    if (tr->parsed()) {
      return cmd_train(tr_data, tr_out, tr_config, tr_seed, tr_epochs, tr_wc, tr_repdim);
    }
    if (ev->parsed()) return cmd_eval(ev_ckpt, ev_data, ev_report, ev_split);
    if (be->parsed()) {
      return cmd_bench(be_scenarios, be_methods, be_repeats, be_seed, be_out, be_n, be_d,
                       be_split, be_config);
    }
    if (gs->parsed()) return cmd_gridsearch(gs_data, gs_space, gs_out, gs_seed);
    if (mt->parsed()) return cmd_mtef(mt_ckpt, mt_data, mt_out);
  } catch (const drl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
