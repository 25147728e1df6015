#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mimic/checkpoint.hpp"
#include "mimic/error.hpp"
#include "mimic/metrics.hpp"
#include "mimic/series.hpp"
#include "mimic/synth.hpp"
#include "mimic/trainer.hpp"

namespace mimic {

using json = nlohmann::ordered_json;

// Shortest decimal that reads back to the same double; "nan" / "inf" for
// non-finite values.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

struct CsvSource {
  std::string path;
  ColumnSelector column = std::size_t{0};
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::variant<SynthSpec, CsvSource> data = SynthSpec{};
  std::size_t input_len = 16;
  std::size_t horizon = 1;
  SplitFractions splits;
  NormKind normalization = NormKind::zscore;
  ModelSpec model;  // input_len and horizon are taken from the window settings
  TrainConfig train;
  std::string output_dir = "runs";

  // Model and loss see the same (T, h) as the windows.
  void sync() {
    model.input_len = input_len;
    model.horizon = horizon;
    train.loss.horizon = static_cast<int>(horizon);
  }
};

namespace detail {

class ConfigReader {
 public:
  ConfigReader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw UsageError("config: '" + label() + "' must be an object");
  }

  // Every key of the object must have been named in `allowed`.
  void allow(std::initializer_list<const char*> allowed) const {
    std::set<std::string> names(allowed.begin(), allowed.end());
    for (const auto& [key, _] : node_.items()) {
      if (!names.count(key)) throw UsageError("config: unknown key '" + join(key) + "'");
    }
  }

  bool has(const char* key) const { return node_.contains(key); }

  ConfigReader child(const char* key) const { return ConfigReader(node_.at(key), join(key)); }

  const json& raw(const char* key) const { return node_.at(key); }

  std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  template <typename T>
  void read(const char* key, T& out) const {
    if (!node_.contains(key)) return;
    const auto& v = node_.at(key);
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw UsageError("");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw UsageError("");
        if constexpr (std::is_unsigned_v<T>) {
          if (v.is_number_integer() && !v.is_number_unsigned()) throw UsageError("");
        }
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw UsageError("");
      }
      out = v.get<T>();
    } catch (const std::exception&) {
      throw UsageError("config: field '" + join(key) + "' has the wrong type (got " + v.dump() + ")");
    }
  }

 private:
  std::string label() const { return path_.empty() ? "<root>" : path_; }

  const json& node_;
  std::string path_;
};

}  // namespace detail

// Parses the JSON experiment description. Unknown keys and type mismatches
// are errors naming the offending field; missing keys keep their defaults.
inline ExperimentConfig parse_config(const json& root) {
  ExperimentConfig cfg;
  const detail::ConfigReader top(root, "");
  top.allow({"name", "data", "window", "normalization", "model", "train", "output_dir"});
  top.read("name", cfg.name);
  top.read("output_dir", cfg.output_dir);

  if (!top.has("data")) throw UsageError("config: missing required key 'data'");
  const auto data = top.child("data");
  data.allow({"synth", "csv"});
  if (data.has("synth") == data.has("csv")) {
    throw UsageError("config: 'data' needs exactly one of 'synth' or 'csv'");
  }
  if (data.has("synth")) {
    const auto s = data.child("synth");
    s.allow({"n_points", "dt", "sigma", "mu", "trend_slope", "seed"});
    SynthSpec spec;
    s.read("n_points", spec.n_points);
    s.read("dt", spec.dt);
    s.read("sigma", spec.sigma);
    s.read("mu", spec.mu);
    s.read("trend_slope", spec.trend_slope);
    s.read("seed", spec.seed);
    spec.validate();
    cfg.data = spec;
  } else {
    const auto c = data.child("csv");
    c.allow({"path", "column"});
    CsvSource src;
    if (!c.has("path")) throw UsageError("config: missing required key 'data.csv.path'");
    c.read("path", src.path);
    if (c.has("column")) {
      const auto& col = c.raw("column");
      if (col.is_string()) {
        src.column = col.get<std::string>();
      } else if (col.is_number_unsigned()) {
        src.column = col.get<std::size_t>();
      } else {
        throw UsageError("config: field 'data.csv.column' must be a name or a nonnegative index");
      }
    }
    cfg.data = src;
  }

  if (top.has("window")) {
    const auto w = top.child("window");
    w.allow({"input_len", "horizon", "splits"});
    w.read("input_len", cfg.input_len);
    w.read("horizon", cfg.horizon);
    if (w.has("splits")) {
      const auto& s = w.raw("splits");
      if (!s.is_array() || s.size() != 3 || !s[0].is_number() || !s[1].is_number() || !s[2].is_number()) {
        throw UsageError("config: field 'window.splits' must be [train, val, test]");
      }
      cfg.splits = {s[0].get<double>(), s[1].get<double>(), s[2].get<double>()};
    }
  }

  if (top.has("normalization")) {
    std::string kind;
    top.read("normalization", kind);
    cfg.normalization = parse_norm_kind(kind);
  }

  if (top.has("model")) {
    const auto m = top.child("model");
    m.allow({"kind", "hidden_dim", "window", "init_seed"});
    std::string kind = to_string(cfg.model.kind);
    m.read("kind", kind);
    cfg.model.kind = parse_model_kind(kind);
    m.read("hidden_dim", cfg.model.hidden_dim);
    m.read("window", cfg.model.window);
    m.read("init_seed", cfg.model.init_seed);
  }

  if (top.has("train")) {
    const auto t = top.child("train");
    t.allow({"lr0", "decay_factor", "decay_every", "epochs", "batch_size", "seed", "lambda", "K", "objective",
             "selection", "adam"});
    t.read("lr0", cfg.train.lr0);
    t.read("decay_factor", cfg.train.decay_factor);
    t.read("decay_every", cfg.train.decay_every);
    t.read("epochs", cfg.train.epochs);
    t.read("batch_size", cfg.train.batch_size);
    t.read("seed", cfg.train.seed);
    t.read("lambda", cfg.train.loss.lambda);
    t.read("K", cfg.train.loss.K);
    if (t.has("objective")) {
      std::string o;
      t.read("objective", o);
      if (o == "regularized") cfg.train.objective = ObjectiveKind::regularized;
      else if (o == "mse") cfg.train.objective = ObjectiveKind::mse;
      else throw UsageError("config: 'train.objective' must be 'regularized' or 'mse'");
    }
    if (t.has("selection")) {
      std::string o;
      t.read("selection", o);
      if (o == "objective") cfg.train.selection = SelectionLoss::objective;
      else if (o == "mse") cfg.train.selection = SelectionLoss::mse;
      else throw UsageError("config: 'train.selection' must be 'objective' or 'mse'");
    }
    if (t.has("adam")) {
      const auto a = t.child("adam");
      a.allow({"beta1", "beta2", "epsilon"});
      a.read("beta1", cfg.train.adam.beta1);
      a.read("beta2", cfg.train.adam.beta2);
      a.read("epsilon", cfg.train.adam.epsilon);
    }
  }

  cfg.sync();
  cfg.model.validate();
  cfg.train.validate();
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError("config '" + path + "': " + e.what());
  }
  return parse_config(root);
}

inline json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  if (const auto* s = std::get_if<SynthSpec>(&cfg.data)) {
    j["data"]["synth"] = {{"n_points", s->n_points}, {"dt", s->dt},       {"sigma", s->sigma},
                          {"mu", s->mu},             {"trend_slope", s->trend_slope}, {"seed", s->seed}};
  } else {
    const auto& c = std::get<CsvSource>(cfg.data);
    j["data"]["csv"]["path"] = c.path;
    if (const auto* name = std::get_if<std::string>(&c.column)) j["data"]["csv"]["column"] = *name;
    else j["data"]["csv"]["column"] = std::get<std::size_t>(c.column);
  }
  j["window"] = {{"input_len", cfg.input_len},
                 {"horizon", cfg.horizon},
                 {"splits", {cfg.splits.train, cfg.splits.val, cfg.splits.test}}};
  j["normalization"] = to_string(cfg.normalization);
  j["model"] = {{"kind", to_string(cfg.model.kind)},
                {"hidden_dim", cfg.model.hidden_dim},
                {"window", cfg.model.window},
                {"init_seed", cfg.model.init_seed}};
  const auto& t = cfg.train;
  j["train"] = {{"lr0", t.lr0},
                {"decay_factor", t.decay_factor},
                {"decay_every", t.decay_every},
                {"epochs", t.epochs},
                {"batch_size", t.batch_size},
                {"seed", t.seed},
                {"lambda", t.loss.lambda},
                {"K", t.loss.K},
                {"objective", t.objective == ObjectiveKind::mse ? "mse" : "regularized"},
                {"selection", t.selection == SelectionLoss::mse ? "mse" : "objective"},
                {"adam", {{"beta1", t.adam.beta1}, {"beta2", t.adam.beta2}, {"epsilon", t.adam.epsilon}}}};
  j["output_dir"] = cfg.output_dir;
  return j;
}

struct PreparedData {
  TimeSeries raw;
  Normalizer normalizer;
  WindowedDataset dataset;
};

// Loads or generates the series, fits the normalizer on the leading train
// fraction of points, and windows the normalized series.
inline PreparedData prepare_data(const ExperimentConfig& cfg) {
  TimeSeries raw = std::holds_alternative<SynthSpec>(cfg.data)
                       ? generate(std::get<SynthSpec>(cfg.data))
                       : load_csv(std::get<CsvSource>(cfg.data).path, std::get<CsvSource>(cfg.data).column);
  const auto norm = fit_normalizer(raw, cfg.splits.train, cfg.normalization);
  auto ds = make_windows(norm.apply(raw), cfg.input_len, cfg.horizon, cfg.splits);
  return PreparedData{std::move(raw), norm, std::move(ds)};
}

inline json metrics_to_json(const MetricSet& m) {
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  return {{"mse", num(m.mse)},   {"s_mse", num(m.s_mse)}, {"mim", num(m.mim)}, {"mim_per_step", num(m.mim_per_step)},
          {"acc", num(m.acc)},   {"s_acc", num(m.s_acc)}, {"f1", num(m.f1)}};
}

// Report document. Wall time is deliberately absent so reruns are
// byte-identical.
inline json report_to_json(const ExperimentConfig& cfg, const PreparedData& data, const TrainReport& r) {
  json j;
  j["config"] = config_to_json(cfg);
  j["normalizer"] = {{"kind", to_string(data.normalizer.kind)},
                     {"offset", data.normalizer.offset},
                     {"scale", data.normalizer.scale}};
  j["samples"] = {{"train", data.dataset.count(Split::train)},
                  {"val", data.dataset.count(Split::val)},
                  {"test", data.dataset.count(Split::test)}};
  j["param_count"] = r.params.values.size();
  j["epochs"] = {{"train_loss", r.train_loss}, {"val_loss", r.val_loss}};
  j["best_epoch"] = r.best_epoch;
  j["best_val_loss"] = std::isfinite(r.best_val_loss) ? json(r.best_val_loss) : json(nullptr);
  j["test"] = metrics_to_json(r.test);
  return j;
}

inline const char* kMetricsHeader = "name,model,lambda,K,horizon,best_epoch,mse,s_mse,mim,mim_per_step,acc,s_acc,f1";

inline std::string metrics_row(const ExperimentConfig& cfg, const TrainReport& r) {
  std::ostringstream out;
  out << cfg.name << ',' << to_string(cfg.model.kind) << ',' << format_number(cfg.train.loss.lambda) << ','
      << cfg.train.loss.K << ',' << cfg.horizon << ',' << r.best_epoch << ',' << format_number(r.test.mse) << ','
      << format_number(r.test.s_mse) << ',' << format_number(r.test.mim) << ','
      << format_number(r.test.mim_per_step) << ',' << format_number(r.test.acc) << ','
      << format_number(r.test.s_acc) << ',' << format_number(r.test.f1);
  return out.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeError("cannot write '" + path.string() + "'");
  out << body;
  if (!out) throw RuntimeError("error writing '" + path.string() + "'");
}

// Writes report.json, metrics.csv and checkpoint.bin into `dir`.
inline void write_run_artifacts(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                                const PreparedData& data, const TrainReport& r) {
  std::filesystem::create_directories(dir);
  write_file(dir / "report.json", report_to_json(cfg, data, r).dump(2) + "\n");
  write_file(dir / "metrics.csv", std::string(kMetricsHeader) + "\n" + metrics_row(cfg, r) + "\n");
  save_checkpoint((dir / "checkpoint.bin").string(), r.model, r.params);
}

inline std::filesystem::path experiment_dir(const ExperimentConfig& cfg) {
  return std::filesystem::path(cfg.output_dir) / cfg.name;
}

struct RunResult {
  PreparedData data;
  TrainReport report;
};

inline RunResult run_train(const ExperimentConfig& cfg) {
  auto data = prepare_data(cfg);
  auto report = train(data.dataset, cfg.model, cfg.train);
  return RunResult{std::move(data), std::move(report)};
}

struct SweepResult {
  std::vector<TrainReport> reports;  // one per lambda, in input order
  MetricSet baseline;                // Avg. Window (n=1) on the same test split
};

inline MetricSet persistence_baseline(const WindowedDataset& ds) {
  ModelSpec spec;
  spec.kind = ModelKind::avg_window;
  spec.input_len = ds.input_len();
  spec.horizon = ds.horizon();
  spec.window = 1;
  return evaluate_split(ds, spec, init_params(spec), Split::test);
}

inline std::string summary_csv(std::span<const double> lambdas, const SweepResult& sweep, ModelKind kind) {
  std::ostringstream out;
  out << "method,lambda,mse,s_mse,mim,mim_per_step,acc,s_acc,f1\n";
  auto row = [&](const std::string& method, const std::string& lambda, const MetricSet& m) {
    out << method << ',' << lambda << ',' << format_number(m.mse) << ',' << format_number(m.s_mse) << ','
        << format_number(m.mim) << ',' << format_number(m.mim_per_step) << ',' << format_number(m.acc) << ','
        << format_number(m.s_acc) << ',' << format_number(m.f1) << '\n';
  };
  for (std::size_t i = 0; i < lambdas.size(); ++i) row(to_string(kind), format_number(lambdas[i]), sweep.reports[i].test);
  row("Avg. Window (n=1)", "", sweep.baseline);
  return out.str();
}

// One training run per lambda plus the persistence baseline. When
// `write` is set, each run lands in <outdir>/<name>/lambda_<value>/ and the
// table in <outdir>/<name>/summary.csv.
inline SweepResult run_sweep(const ExperimentConfig& cfg, std::span<const double> lambdas, bool write) {
  if (lambdas.empty()) throw UsageError("sweep needs at least one lambda");
  const auto data = prepare_data(cfg);
  SweepResult out;
  out.reports = lambda_sweep(data.dataset, cfg.model, cfg.train, lambdas);
  out.baseline = persistence_baseline(data.dataset);
  if (write) {
    const auto dir = experiment_dir(cfg);
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
      auto run_cfg = cfg;
      run_cfg.train.loss.lambda = lambdas[i];
      write_run_artifacts(dir / ("lambda_" + format_number(lambdas[i])), run_cfg, data, out.reports[i]);
    }
    write_file(dir / "summary.csv", summary_csv(lambdas, out, cfg.model.kind));
  }
  return out;
}

struct NoiseRow {
  double sigma;
  TrainReport report;
};

inline std::string noise_study_csv(std::span<const NoiseRow> rows) {
  std::ostringstream out;
  out << "sigma,mse,mim,mim_per_step\n";
  for (const auto& r : rows) {
    out << format_number(r.sigma) << ',' << format_number(r.report.test.mse) << ','
        << format_number(r.report.test.mim) << ',' << format_number(r.report.test.mim_per_step) << '\n';
  }
  return out.str();
}

// Regenerates the synthetic series at each noise level (same data seed) and
// trains one model per level.
inline std::vector<NoiseRow> run_noise_study(const ExperimentConfig& cfg, std::span<const double> sigmas, bool write) {
  if (!std::holds_alternative<SynthSpec>(cfg.data)) throw UsageError("noise-study needs a synth data source");
  if (sigmas.empty()) throw UsageError("noise-study needs at least one sigma");
  for (double s : sigmas) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw UsageError("noise-study: sigma values must be >= 0");
  }
  std::vector<NoiseRow> rows;
  for (double sigma : sigmas) {
    auto run_cfg = cfg;
    std::get<SynthSpec>(run_cfg.data).sigma = sigma;
    auto run = run_train(run_cfg);
    if (write) write_run_artifacts(experiment_dir(cfg) / ("sigma_" + format_number(sigma)), run_cfg, run.data, run.report);
    rows.push_back({sigma, std::move(run.report)});
  }
  if (write) write_file(experiment_dir(cfg) / "noise_study.csv", noise_study_csv(rows));
  return rows;
}

// Forecast from a targets column whose first row is the anchor z_0 and a
// predictions column with one row per remaining target.
inline Forecast forecast_from_columns(std::span<const double> targets_with_anchor, std::span<const double> predictions) {
  if (targets_with_anchor.size() < 2) throw UsageError("targets need an anchor row and at least one target");
  if (targets_with_anchor.size() != predictions.size() + 1) {
    throw UsageError("row count mismatch: " + std::to_string(targets_with_anchor.size() - 1) +
                     " targets after the anchor row but " + std::to_string(predictions.size()) + " predictions");
  }
  Forecast f{{targets_with_anchor.begin() + 1, targets_with_anchor.end()},
             {predictions.begin(), predictions.end()},
             targets_with_anchor.front()};
  f.validate();
  return f;
}

inline std::string diagnose_text(const Forecast& f, const MetricSet& m) {
  std::ostringstream out;
  out << std::left;
  auto line = [&](const char* label, double v) { out << std::setw(8) << label << format_number(v) << '\n'; };
  out << std::setw(8) << "n" << f.size() << '\n';
  line("MSE", m.mse);
  line("s-MSE", m.s_mse);
  line("MIM", m.mim);
  line("Acc", m.acc);
  line("s-Acc", m.s_acc);
  line("F1", m.f1);
  out << "MIMICKING: " << (m.mim > 0.0 ? "yes" : "no") << '\n';
  return out.str();
}

inline std::string diagnose_csv(const Forecast& f, const MetricSet& m) {
  std::ostringstream out;
  out << "n,mse,s_mse,mim,acc,s_acc,f1,mimicking\n"
      << f.size() << ',' << format_number(m.mse) << ',' << format_number(m.s_mse) << ',' << format_number(m.mim)
      << ',' << format_number(m.acc) << ',' << format_number(m.s_acc) << ',' << format_number(m.f1) << ','
      << (m.mim > 0.0 ? "yes" : "no") << '\n';
  return out.str();
}

}  // namespace mimic
