// mimic: command-line front end for the forecasting diagnostics toolkit.
//
//   mimic synth        write a synthetic sinusoid-plus-noise series as CSV
//   mimic diagnose     score predictions against targets and flag mimicking
//   mimic train        train one model from a JSON experiment config
//   mimic sweep        train once per lambda and write a summary table
//   mimic noise-study  train once per noise level on synthetic data
//
// Exit codes: 0 success, 1 usage or config error, 2 runtime error.

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mimic/experiment.hpp"

namespace {

constexpr int kUsage = 1;
constexpr int kRuntime = 2;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> config;
};

mimic::ExperimentConfig load_with_overrides(const Globals& g) {
  if (!g.config) throw mimic::UsageError("--config is required");
  auto cfg = mimic::load_config(*g.config);
  if (g.seed) {
    cfg.train.seed = *g.seed;
    cfg.model.init_seed = *g.seed;
  }
  if (g.out) cfg.output_dir = *g.out;
  return cfg;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_synth(const mimic::SynthSpec& spec, const Globals& g) {
  auto s = spec;
  if (g.seed) s.seed = *g.seed;
  const auto series = mimic::generate(s);
  std::string body = "value\n";
  for (double v : series.values()) body += mimic::format_number(v) + "\n";
  if (g.out) {
    mimic::write_file(*g.out, body);
  } else {
    std::cout << body;
  }
  return 0;
}

int cmd_diagnose(const std::string& targets, const std::string& predictions, const std::string& column,
                 const Globals& g) {
  mimic::ColumnSelector sel = std::size_t{0};
  if (!column.empty()) {
    if (column.find_first_not_of("0123456789") == std::string::npos) sel = std::stoul(column);
    else sel = column;
  }
  const auto z = mimic::read_csv_column(targets, sel);
  const auto zhat = mimic::read_csv_column(predictions, sel);
  const auto f = mimic::forecast_from_columns(z.values, zhat.values);
  const auto m = mimic::evaluate(f);
  std::cout << mimic::diagnose_text(f, m);
  if (g.out) mimic::write_file(*g.out, mimic::diagnose_csv(f, m));
  return 0;
}

int cmd_train(const Globals& g) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = load_with_overrides(g);
  const auto run = mimic::run_train(cfg);
  const auto dir = mimic::experiment_dir(cfg);
  mimic::write_run_artifacts(dir, cfg, run.data, run.report);
  const auto& t = run.report.test;
  std::cout << "best epoch " << run.report.best_epoch << "  test mse " << mimic::format_number(t.mse) << "  s-mse "
            << mimic::format_number(t.s_mse) << "  mim " << mimic::format_number(t.mim) << "\n"
            << "wrote " << dir.string() << " in " << seconds_since(t0) << " s\n";
  return 0;
}

int cmd_sweep(const std::vector<double>& lambdas, const Globals& g) {
  if (lambdas.empty()) throw mimic::UsageError("--lambdas needs at least one value");
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = load_with_overrides(g);
  const auto res = mimic::run_sweep(cfg, lambdas, true);
  std::cout << mimic::summary_csv(lambdas, res, cfg.model.kind) << "wrote "
            << (mimic::experiment_dir(cfg) / "summary.csv").string() << " in " << seconds_since(t0) << " s\n";
  return 0;
}

int cmd_noise_study(const std::vector<double>& sigmas, const Globals& g) {
  if (sigmas.empty()) throw mimic::UsageError("--sigmas needs at least one value");
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = load_with_overrides(g);
  const auto rows = mimic::run_noise_study(cfg, sigmas, true);
  std::cout << mimic::noise_study_csv(rows) << "wrote "
            << (mimic::experiment_dir(cfg) / "noise_study.csv").string() << " in " << seconds_since(t0) << " s\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mimicking diagnostics and anti-mimicking training for time-series forecasters"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  std::uint64_t seed = 0;
  std::string out, config;
  auto* seed_opt = app.add_option("--seed", seed, "Seed override (synth: data seed; train: model and batch seeds)");
  auto* out_opt = app.add_option("--out", out, "Output file (synth, diagnose) or output directory");
  auto* config_opt = app.add_option("--config", config, "JSON experiment config");

  mimic::SynthSpec synth;
  synth.seed = 0;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic series as CSV (column 'value')");
  synth_cmd->add_option("--n", synth.n_points, "Number of points")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--dt", synth.dt, "Time step between points");
  synth_cmd->add_option("--sigma", synth.sigma, "Noise standard deviation");
  synth_cmd->add_option("--mu", synth.mu, "Noise mean");
  synth_cmd->add_option("--trend", synth.trend_slope, "Slope of the added linear term");

  std::string targets, predictions, column;
  auto* diag_cmd = app.add_subcommand("diagnose", "Score predictions against targets (first target row is z0)");
  diag_cmd->add_option("targets", targets, "Targets CSV, anchor row first")->required();
  diag_cmd->add_option("predictions", predictions, "Predictions CSV")->required();
  diag_cmd->add_option("--column", column, "Column name or zero-based index (default 0)");

  auto* train_cmd = app.add_subcommand("train", "Train one model from --config");

  std::vector<double> lambdas;
  auto* sweep_cmd = app.add_subcommand("sweep", "Train once per lambda from --config");
  sweep_cmd->add_option("--lambdas", lambdas, "Lambda values")->delimiter(',')->required();

  std::vector<double> sigmas;
  auto* noise_cmd = app.add_subcommand("noise-study", "Train once per noise level from --config");
  noise_cmd->add_option("--sigmas", sigmas, "Noise standard deviations")->delimiter(',')->required();

  for (auto* sub : {synth_cmd, diag_cmd, train_cmd, sweep_cmd, noise_cmd}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  if (*seed_opt) g.seed = seed;
  if (*out_opt) g.out = out;
  if (*config_opt) g.config = config;

  try {
    if (*synth_cmd) return cmd_synth(synth, g);
    if (*diag_cmd) return cmd_diagnose(targets, predictions, column, g);
    if (*train_cmd) return cmd_train(g);
    if (*sweep_cmd) return cmd_sweep(lambdas, g);
    if (*noise_cmd) return cmd_noise_study(sigmas, g);
  } catch (const mimic::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
