#pragma once

#include <atomic>
#include <cerrno>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <filesystem>

#include <unistd.h>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "drl/baselines.hpp"
#include "drl/errors.hpp"
#include "drl/metrics.hpp"
#include "drl/model.hpp"
#include "drl/synthgen.hpp"

namespace drl::harness {

using nlohmann::json;

// ---------------------------------------------------------------------------
// atomic file output: write a temp sibling, then rename over the target

inline void atomic_write_text(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  static std::atomic<unsigned> counter{0};
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(::getpid()) + "-" + std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("failed writing '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ec2;
    fs::remove(tmp, ec2);
    throw IoError("failed to move temporary file onto '" + path.string() + "': " + ec.message());
  }
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// numeric formatting: 17 significant digits round-trip doubles bit-exactly

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// dataset CSV: header x0,...,x{d-1},t,y

inline std::string dataset_to_csv(const synth::Dataset& data) {
  const std::size_t n = data.x.rows(), d = data.x.cols();
  std::string out;
  out.reserve(n * (d + 2) * 12);
  for (std::size_t j = 0; j < d; ++j) {
    out += "x" + std::to_string(j) + ",";
  }
  out += "t,y\n";
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      out += format_double(data.x(i, j));
      out += ',';
    }
    out += format_double(data.t[i]);
    out += ',';
    out += format_double(data.y[i]);
    out += '\n';
  }
  return out;
}

inline void write_dataset_csv(const std::filesystem::path& path, const synth::Dataset& data) {
  atomic_write_text(path, dataset_to_csv(data));
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_double(const std::string& token, std::size_t lineno) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || (end != nullptr && *end != '\0') || errno == ERANGE) {
    throw ParseError("line " + std::to_string(lineno) + ": invalid numeric field '" + token + "'");
  }
  return v;
}

}  // namespace detail

inline synth::Dataset dataset_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty dataset CSV");
  const std::vector<std::string> header = detail::split_csv_line(line);
  if (header.size() < 3) {
    throw ParseError("dataset CSV header needs at least x0,t,y; got " +
                     std::to_string(header.size()) + " fields");
  }
  const std::size_t d = header.size() - 2;
  for (std::size_t j = 0; j < d; ++j) {
    if (header[j] != "x" + std::to_string(j)) {
      throw ParseError("dataset CSV header field " + std::to_string(j) + " is '" + header[j] +
                       "', expected 'x" + std::to_string(j) + "'");
    }
  }
  if (header[d] != "t" || header[d + 1] != "y") {
    throw ParseError("dataset CSV header must end with t,y");
  }

  std::vector<double> xdata;
  synth::Dataset data;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::vector<std::string> fields = detail::split_csv_line(line);
    if (fields.size() != d + 2) {
      throw ParseError("line " + std::to_string(lineno) + ": expected " + std::to_string(d + 2) +
                       " fields, got " + std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < d; ++j) xdata.push_back(detail::parse_double(fields[j], lineno));
    data.t.push_back(detail::parse_double(fields[d], lineno));
    data.y.push_back(detail::parse_double(fields[d + 1], lineno));
  }
  if (data.t.empty()) throw ParseError("dataset CSV has no rows");
  data.x = Tensor({data.t.size(), d}, std::move(xdata));
  return data;
}

inline synth::Dataset read_dataset_csv(const std::filesystem::path& path) {
  return dataset_from_csv(read_text(path));
}

// ---------------------------------------------------------------------------
// enum <-> string helpers

inline std::string outcome_kind_name(synth::OutcomeKind k) {
  return k == synth::OutcomeKind::binary ? "binary" : "continuous";
}
inline synth::OutcomeKind outcome_kind_from_name(const std::string& s) {
  if (s == "continuous") return synth::OutcomeKind::continuous;
  if (s == "binary") return synth::OutcomeKind::binary;
  throw ParseError("unknown outcome kind '" + s + "'");
}
inline std::string form_name(synth::FuncForm f) {
  return f == synth::FuncForm::line ? "line" : "nonl";
}
inline synth::FuncForm form_from_name(const std::string& s) {
  if (s == "line") return synth::FuncForm::line;
  if (s == "nonl") return synth::FuncForm::nonl;
  throw ParseError("unknown functional form '" + s + "'");
}
inline std::string hidden_name(nn::Hidden h) { return h == nn::Hidden::relu ? "relu" : "tanh"; }
inline nn::Hidden hidden_from_name(const std::string& s) {
  if (s == "relu") return nn::Hidden::relu;
  if (s == "tanh") return nn::Hidden::tanh;
  throw ParseError("unknown hidden activation '" + s + "'");
}
inline std::string output_name(nn::Output o) {
  return o == nn::Output::sigmoid ? "sigmoid" : "identity";
}
inline nn::Output output_from_name(const std::string& s) {
  if (s == "identity") return nn::Output::identity;
  if (s == "sigmoid") return nn::Output::sigmoid;
  throw ParseError("unknown output activation '" + s + "'");
}

// ---------------------------------------------------------------------------
// DrlConfig JSON

inline json config_to_json(const DrlConfig& c) {
  return json{{"rep_dim", c.rep_dim},
              {"w_c", c.w_c},
              {"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"lr_g", c.lr_g},
              {"lr_d", c.lr_d},
              {"lr_f", c.lr_f},
              {"steps_d", c.steps_d},
              {"steps_g", c.steps_g},
              {"steps_f", c.steps_f},
              {"seed", c.seed},
              {"outcome_kind", outcome_kind_name(c.outcome_kind)},
              {"g_hidden", c.g_hidden},
              {"c_hidden", c.c_hidden},
              {"c_out", c.c_out},
              {"d_hidden", c.d_hidden},
              {"f_hidden", c.f_hidden},
              {"non_saturating", c.non_saturating},
              {"standardize", c.standardize}};
}

/// Applies the keys present in `j` onto `config`; unknown keys are an error.
inline void apply_config_json(DrlConfig& config, const json& j) {
  if (!j.is_object()) throw ParseError("config document must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "rep_dim") config.rep_dim = value.get<std::size_t>();
      else if (key == "w_c") config.w_c = value.get<double>();
      else if (key == "epochs") config.epochs = value.get<std::size_t>();
      else if (key == "batch_size") config.batch_size = value.get<std::size_t>();
      else if (key == "lr_g") config.lr_g = value.get<double>();
      else if (key == "lr_d") config.lr_d = value.get<double>();
      else if (key == "lr_f") config.lr_f = value.get<double>();
      else if (key == "steps_d") config.steps_d = value.get<std::size_t>();
      else if (key == "steps_g") config.steps_g = value.get<std::size_t>();
      else if (key == "steps_f") config.steps_f = value.get<std::size_t>();
      else if (key == "seed") config.seed = value.get<std::uint64_t>();
      else if (key == "outcome_kind") config.outcome_kind = outcome_kind_from_name(value.get<std::string>());
      else if (key == "g_hidden") config.g_hidden = value.get<std::vector<std::size_t>>();
      else if (key == "c_hidden") config.c_hidden = value.get<std::vector<std::size_t>>();
      else if (key == "c_out") config.c_out = value.get<std::size_t>();
      else if (key == "d_hidden") config.d_hidden = value.get<std::vector<std::size_t>>();
      else if (key == "f_hidden") config.f_hidden = value.get<std::vector<std::size_t>>();
      else if (key == "non_saturating") config.non_saturating = value.get<bool>();
      else if (key == "standardize") config.standardize = value.get<bool>();
      else throw ParseError("unknown config key '" + key + "'");
    } catch (const json::exception& e) {
      throw ParseError("config key '" + key + "': " + e.what());
    }
  }
}

inline DrlConfig config_from_json(const json& j) {
  DrlConfig c;
  apply_config_json(c, j);
  return c;
}

// ---------------------------------------------------------------------------
// dataset metadata (sibling document carrying ground truth for oracle scoring)

struct DatasetMeta {
  synth::ScenarioSpec spec;
  synth::GroundTruth ground_truth;
  synth::OutcomeKind outcome_kind = synth::OutcomeKind::continuous;
};

inline std::filesystem::path meta_path_for(const std::filesystem::path& data_path) {
  std::filesystem::path p = data_path;
  p += ".meta.json";
  return p;
}

inline json meta_to_json(const DatasetMeta& m) {
  const std::size_t d = m.ground_truth.covariance.rows();
  json cov = json::array();
  for (std::size_t i = 0; i < d; ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < d; ++j) row.push_back(m.ground_truth.covariance(i, j));
    cov.push_back(std::move(row));
  }
  return json{{"format", "drl-dataset-meta"},
              {"format_version", 1},
              {"scenario", std::string(1, synth::scenario_letter(m.spec.scenario))},
              {"n", m.spec.n},
              {"d", m.spec.d},
              {"seed", m.spec.seed},
              {"noise_t_std", m.spec.noise_t_std},
              {"noise_y_std", m.spec.noise_y_std},
              {"outcome_kind", outcome_kind_name(m.outcome_kind)},
              {"ground_truth",
               json{{"w_xt", m.ground_truth.w_xt},
                    {"w_xy", m.ground_truth.w_xy},
                    {"w_ty", m.ground_truth.w_ty},
                    {"t_form", form_name(m.ground_truth.t_form)},
                    {"y_form", form_name(m.ground_truth.y_form)},
                    {"covariance", std::move(cov)}}}};
}

inline DatasetMeta meta_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != "drl-dataset-meta") {
      throw ParseError("not a dataset metadata document");
    }
    if (j.at("format_version").get<int>() != 1) {
      throw ParseError("unsupported dataset metadata version");
    }
    DatasetMeta m;
    const std::string sc = j.at("scenario").get<std::string>();
    if (sc.size() != 1) throw ParseError("scenario must be a single letter");
    m.spec.scenario = synth::scenario_from_letter(sc[0]);
    m.spec.n = j.at("n").get<std::size_t>();
    m.spec.d = j.at("d").get<std::size_t>();
    m.spec.seed = j.at("seed").get<std::uint64_t>();
    m.spec.noise_t_std = j.at("noise_t_std").get<double>();
    m.spec.noise_y_std = j.at("noise_y_std").get<double>();
    m.outcome_kind = outcome_kind_from_name(j.at("outcome_kind").get<std::string>());
    const json& gt = j.at("ground_truth");
    m.ground_truth.w_xt = gt.at("w_xt").get<std::vector<double>>();
    m.ground_truth.w_xy = gt.at("w_xy").get<std::vector<double>>();
    m.ground_truth.w_ty = gt.at("w_ty").get<double>();
    m.ground_truth.t_form = form_from_name(gt.at("t_form").get<std::string>());
    m.ground_truth.y_form = form_from_name(gt.at("y_form").get<std::string>());
    const json& cov = gt.at("covariance");
    const std::size_t d = m.spec.d;
    if (cov.size() != d) throw ParseError("covariance row count does not match d");
    Tensor c({d, d});
    for (std::size_t i = 0; i < d; ++i) {
      if (cov[i].size() != d) throw ParseError("covariance is not square");
      for (std::size_t jj = 0; jj < d; ++jj) c(i, jj) = cov[i][jj].get<double>();
    }
    m.ground_truth.covariance = std::move(c);
    return m;
  } catch (const json::exception& e) {
    throw ParseError(std::string("dataset metadata: ") + e.what());
  }
}

inline void write_dataset_meta(const std::filesystem::path& path, const DatasetMeta& m) {
  atomic_write_text(path, meta_to_json(m).dump(2) + "\n");
}

inline DatasetMeta read_dataset_meta(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw ParseError("cannot parse '" + path.string() + "': " + e.what());
  }
  return meta_from_json(j);
}

inline std::optional<DatasetMeta> try_read_dataset_meta(const std::filesystem::path& data_path) {
  const std::filesystem::path mp = meta_path_for(data_path);
  if (!std::filesystem::exists(mp)) return std::nullopt;
  return read_dataset_meta(mp);
}

// ---------------------------------------------------------------------------
// model checkpoint

constexpr int kCheckpointVersion = 1;

namespace detail {

inline json mlp_to_json(const nn::Mlp& net) {
  json layers = json::array();
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const Tensor& w = net.weight(l)->value;
    const Tensor& b = net.bias(l)->value;
    json wj = json::array();
    for (std::size_t i = 0; i < w.rows(); ++i) {
      json row = json::array();
      for (std::size_t j = 0; j < w.cols(); ++j) row.push_back(w(i, j));
      wj.push_back(std::move(row));
    }
    json bj = json::array();
    for (std::size_t j = 0; j < b.cols(); ++j) bj.push_back(b(0, j));
    layers.push_back(json{{"weight", std::move(wj)}, {"bias", std::move(bj)}});
  }
  return json{{"layer_sizes", net.config().layer_sizes},
              {"hidden", hidden_name(net.config().hidden_activation)},
              {"output", output_name(net.config().output_activation)},
              {"layers", std::move(layers)}};
}

inline nn::Mlp mlp_from_json(const json& j, const std::string& name) {
  nn::MlpConfig cfg;
  cfg.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
  cfg.hidden_activation = hidden_from_name(j.at("hidden").get<std::string>());
  cfg.output_activation = output_from_name(j.at("output").get<std::string>());
  cfg.validate();
  Rng rng(0);
  nn::Mlp net(cfg, rng);
  const json& layers = j.at("layers");
  if (layers.size() != cfg.layer_sizes.size() - 1) {
    throw ParseError("checkpoint network '" + name + "': expected " +
                     std::to_string(cfg.layer_sizes.size() - 1) + " layers, found " +
                     std::to_string(layers.size()));
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const json& wj = layers[l].at("weight");
    const json& bj = layers[l].at("bias");
    const std::size_t rows = cfg.layer_sizes[l], cols = cfg.layer_sizes[l + 1];
    if (wj.size() != rows) {
      throw ParseError("checkpoint network '" + name + "' layer " + std::to_string(l) +
                       ": weight rows " + std::to_string(wj.size()) + " do not chain with size " +
                       std::to_string(rows));
    }
    Tensor w({rows, cols});
    for (std::size_t i = 0; i < rows; ++i) {
      if (wj[i].size() != cols) {
        throw ParseError("checkpoint network '" + name + "' layer " + std::to_string(l) +
                         ": ragged weight matrix");
      }
      for (std::size_t jj = 0; jj < cols; ++jj) w(i, jj) = wj[i][jj].get<double>();
    }
    if (bj.size() != cols) {
      throw ParseError("checkpoint network '" + name + "' layer " + std::to_string(l) +
                       ": bias length " + std::to_string(bj.size()) + " vs " +
                       std::to_string(cols));
    }
    Tensor b({1, cols});
    for (std::size_t jj = 0; jj < cols; ++jj) b(0, jj) = bj[jj].get<double>();
    net.weight(l)->value = std::move(w);
    net.bias(l)->value = std::move(b);
  }
  return net;
}

}  // namespace detail

inline json checkpoint_to_json(const DrlModel& model) {
  return json{{"format", "drl-checkpoint"},
              {"format_version", kCheckpointVersion},
              {"input_dim", model.input_dim},
              {"config", config_to_json(model.config)},
              {"standardizer",
               json{{"x_mean", model.stats.x_mean},
                    {"x_std", model.stats.x_std},
                    {"t_mean", model.stats.t_mean},
                    {"t_std", model.stats.t_std},
                    {"y_mean", model.stats.y_mean},
                    {"y_std", model.stats.y_std}}},
              {"networks",
               json{{"g", detail::mlp_to_json(model.g)},
                    {"c", detail::mlp_to_json(model.c)},
                    {"d", detail::mlp_to_json(model.d)},
                    {"f", detail::mlp_to_json(model.f)}}}};
}

inline void save_checkpoint(const std::filesystem::path& path, const DrlModel& model) {
  atomic_write_text(path, checkpoint_to_json(model).dump() + "\n");
}

inline DrlModel checkpoint_from_json(const json& j) {
  try {
    if (!j.is_object() || !j.contains("format") ||
        j.at("format").get<std::string>() != "drl-checkpoint") {
      throw ParseError("not a drl checkpoint document");
    }
    if (j.at("format_version").get<int>() != kCheckpointVersion) {
      throw ParseError("unsupported checkpoint version " +
                       j.at("format_version").dump());
    }
    DrlModel m;
    m.config = config_from_json(j.at("config"));
    m.config.validate();
    m.input_dim = j.at("input_dim").get<std::size_t>();
    const json& st = j.at("standardizer");
    m.stats.x_mean = st.at("x_mean").get<std::vector<double>>();
    m.stats.x_std = st.at("x_std").get<std::vector<double>>();
    m.stats.t_mean = st.at("t_mean").get<double>();
    m.stats.t_std = st.at("t_std").get<double>();
    m.stats.y_mean = st.at("y_mean").get<double>();
    m.stats.y_std = st.at("y_std").get<double>();
    if (m.stats.x_mean.size() != m.input_dim || m.stats.x_std.size() != m.input_dim) {
      throw ParseError("standardizer dimensions do not match input_dim");
    }
    const json& nets = j.at("networks");
    m.g = detail::mlp_from_json(nets.at("g"), "g");
    m.c = detail::mlp_from_json(nets.at("c"), "c");
    m.d = detail::mlp_from_json(nets.at("d"), "d");
    m.f = detail::mlp_from_json(nets.at("f"), "f");

    // shape chain across networks
    const auto& gs = m.g.config().layer_sizes;
    const auto& cs = m.c.config().layer_sizes;
    const auto& ds = m.d.config().layer_sizes;
    const auto& fs = m.f.config().layer_sizes;
    if (gs.front() != m.input_dim) throw ParseError("G input width does not match input_dim");
    if (gs.back() != m.config.rep_dim) throw ParseError("G output width does not match rep_dim");
    if (cs.front() != m.config.rep_dim + 1) throw ParseError("C input width must be rep_dim + 1");
    if (ds.front() != cs.back()) throw ParseError("D input width must match C output width");
    if (ds.back() != 1) throw ParseError("D output width must be 1");
    if (fs.front() != m.config.rep_dim + 1) throw ParseError("F input width must be rep_dim + 1");
    if (fs.back() != 1) throw ParseError("F output width must be 1");
    return m;
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
}

inline DrlModel load_checkpoint(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw ParseError("cannot parse checkpoint '" + path.string() + "': " + e.what());
  }
  return checkpoint_from_json(j);
}

// ---------------------------------------------------------------------------
// MTEF curve CSV: t_level,dt,mtef_pred[,mtef_true]

inline std::string mtef_curve_to_csv(const metrics::MtefCurve& pred,
                                     const metrics::MtefCurve* truth = nullptr) {
  std::string out = truth != nullptr ? "t_level,dt,mtef_pred,mtef_true\n" : "t_level,dt,mtef_pred\n";
  for (std::size_t i = 0; i < pred.t_levels.size(); ++i) {
    out += format_double(pred.t_levels[i]);
    out += ',';
    out += format_double(pred.dt);
    out += ',';
    out += format_double(pred.values[i]);
    if (truth != nullptr) {
      out += ',';
      out += format_double(truth->values[i]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace drl::harness
