#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mimic/error.hpp"
#include "mimic/loss.hpp"
#include "mimic/metrics.hpp"
#include "mimic/models.hpp"
#include "mimic/rng.hpp"
#include "mimic/series.hpp"

namespace mimic {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

// Bias-corrected Adam update, in place.
inline void adam_step(std::span<double> params, std::span<const double> grad, AdamState& state, double lr,
                      const AdamConfig& cfg = {}) {
  if (grad.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw UsageError("adam_step: parameter, gradient and state sizes differ");
  }
  ++state.step;
  const auto t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

enum class ObjectiveKind { regularized, mse };
enum class SelectionLoss { objective, mse };

struct TrainConfig {
  double lr0 = 1e-3;
  double decay_factor = 0.1;
  int decay_every = 10;
  int epochs = 100;
  std::size_t batch_size = 32;
  LossSpec loss;
  std::uint64_t seed = 0;
  AdamConfig adam;
  // mse trains through the plain squared-error path and ignores loss.lambda.
  ObjectiveKind objective = ObjectiveKind::regularized;
  // Loss on the validation split used to pick the best epoch.
  SelectionLoss selection = SelectionLoss::objective;

  void validate() const {
    if (!(lr0 > 0.0) || !std::isfinite(lr0)) throw UsageError("train: lr0 must be > 0");
    if (!(decay_factor > 0.0) || !std::isfinite(decay_factor)) throw UsageError("train: decay_factor must be > 0");
    if (decay_every < 1) throw UsageError("train: decay_every must be >= 1");
    if (epochs < 1) throw UsageError("train: epochs must be >= 1");
    if (batch_size < 1) throw UsageError("train: batch_size must be >= 1");
    loss.validate();
  }
};

// lr0 * decay_factor ^ floor(epoch / decay_every), epochs counted from 0.
inline double learning_rate(const TrainConfig& cfg, int epoch) {
  return cfg.lr0 * std::pow(cfg.decay_factor, static_cast<double>(epoch / cfg.decay_every));
}

struct TrainReport {
  ModelSpec model;
  TrainConfig config;
  std::vector<double> train_loss;  // per epoch, mean objective per sample
  std::vector<double> val_loss;    // per epoch, mean selection loss per sample
  std::vector<double> batch_loss;  // every optimizer step, mean objective over the batch
  int best_epoch = -1;
  double best_val_loss = std::numeric_limits<double>::quiet_NaN();
  MetricSet test;
  ModelParams params;  // parameters from best_epoch
  double wall_seconds = 0.0;
};

// Model forecasts for every sample of a split, in chronological order.
//
// With horizon 1 the consecutive one-step forecasts form a single Forecast
// over the split (anchored at the first sample's last input), so the
// change-of-direction metrics compare successive predictions. With a longer
// horizon each sample is its own Forecast.
inline std::vector<Forecast> split_forecasts(const WindowedDataset& data, const ModelSpec& spec,
                                             const ModelParams& params, Split which) {
  const auto idx = data.indices(which);
  if (idx.empty()) throw UsageError("split '" + to_string(which) + "' is empty");
  ForwardCache cache;
  std::vector<Forecast> out;
  if (data.horizon() == 1) {
    Forecast f;
    f.anchor = data[idx.front()].anchor;
    for (auto i : idx) {
      const auto s = data[i];
      f.targets.push_back(s.target[0]);
      f.predictions.push_back(forward(spec, params, s.input, cache)[0]);
    }
    out.push_back(std::move(f));
    return out;
  }
  for (auto i : idx) {
    const auto s = data[i];
    out.push_back(Forecast{{s.target.begin(), s.target.end()}, forward(spec, params, s.input, cache), s.anchor});
  }
  return out;
}

inline MetricSet evaluate_split(const WindowedDataset& data, const ModelSpec& spec, const ModelParams& params,
                                Split which) {
  const auto forecasts = split_forecasts(data, spec, params, which);
  return evaluate(std::span<const Forecast>(forecasts));
}

namespace detail {

// Mean per-sample loss of `objective` over a split.
template <Objective O>
double split_loss(const WindowedDataset& data, const ModelSpec& spec, const ModelParams& params,
                  const std::vector<std::size_t>& idx, const O& objective) {
  ForwardCache cache;
  std::vector<double> grad(data.horizon());
  double total = 0.0;
  for (auto i : idx) {
    const auto s = data[i];
    const auto pred = forward(spec, params, s.input, cache);
    double mse_part = 0.0, reg_part = 0.0;
    objective.accumulate(s.target, std::span<const double>(pred), s.input, mse_part, reg_part,
                         std::span<double>(grad));
    total += objective.combine(mse_part, reg_part);
  }
  return total / static_cast<double>(idx.size());
}

template <Objective O, Objective S>
TrainReport train_with(const WindowedDataset& data, const ModelSpec& spec, const TrainConfig& cfg,
                       const O& objective, const S& selector) {
  const auto t_start = std::chrono::steady_clock::now();
  spec.validate();
  cfg.validate();
  if (spec.input_len != data.input_len() || spec.horizon != data.horizon()) {
    throw UsageError("model spec (T, h) does not match the dataset windows");
  }
  if (static_cast<std::size_t>(cfg.loss.K) > spec.input_len) throw UsageError("train: K exceeds the input window");
  if (cfg.loss.horizon != static_cast<int>(spec.horizon)) throw UsageError("train: loss horizon differs from model horizon");

  auto train_idx = data.indices(Split::train);
  const auto val_idx = data.indices(Split::val);
  if (train_idx.empty()) throw UsageError("train: training split is empty");
  if (val_idx.empty()) throw UsageError("train: validation split is empty");

  TrainReport report;
  report.model = spec;
  report.config = cfg;

  ModelParams params = init_params(spec);
  report.params = params;
  if (spec.kind == ModelKind::avg_window) {
    report.best_val_loss = split_loss(data, spec, params, val_idx, selector);
    report.test = evaluate_split(data, spec, params, Split::test);
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return report;
  }

  AdamState adam(params.values.size());
  Rng order(cfg.seed);
  ForwardCache cache;
  std::vector<double> grad(params.values.size());
  std::vector<double> window_grad(spec.horizon);
  const double inv_batch = 1.0 / static_cast<double>(cfg.batch_size);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = learning_rate(cfg, epoch);
    order.shuffle(std::span<std::size_t>(train_idx));
    double epoch_total = 0.0;

    for (std::size_t start = 0; start < train_idx.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(train_idx.size(), start + cfg.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      double mse_part = 0.0, reg_part = 0.0;
      for (std::size_t b = start; b < stop; ++b) {
        const auto s = data[train_idx[b]];
        const auto pred = forward(spec, params, s.input, cache);
        objective.accumulate(s.target, std::span<const double>(pred), s.input, mse_part, reg_part,
                             std::span<double>(window_grad));
        for (auto& g : window_grad) g *= inv_batch;
        backward_accumulate(spec, params, s.input, cache, window_grad, grad);
      }
      const double batch_sum = objective.combine(mse_part, reg_part);
      if (!std::isfinite(batch_sum)) throw DivergenceError(epoch, "non-finite training loss");
      report.batch_loss.push_back(batch_sum * inv_batch);
      epoch_total += batch_sum;
      adam_step(params.values, grad, adam, lr, cfg.adam);
    }

    const double val = split_loss(data, spec, params, val_idx, selector);
    if (!std::isfinite(val)) throw DivergenceError(epoch, "non-finite validation loss");
    report.train_loss.push_back(epoch_total / static_cast<double>(train_idx.size()));
    report.val_loss.push_back(val);
    if (report.best_epoch < 0 || val < report.best_val_loss) {
      report.best_epoch = epoch;
      report.best_val_loss = val;
      report.params = params;
    }
  }

  if (data.count(Split::test) > 0) report.test = evaluate_split(data, spec, report.params, Split::test);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return report;
}

}  // namespace detail

// Adam with step-decayed learning rate; keeps the parameters of the epoch
// with the lowest validation loss and scores them on the test split. The
// test split is read only for that final scoring.
inline TrainReport train(const WindowedDataset& data, const ModelSpec& spec, const TrainConfig& cfg) {
  const MimickingObjective regularized{cfg.loss};
  const SquaredErrorObjective plain{};
  if (cfg.objective == ObjectiveKind::mse) return detail::train_with(data, spec, cfg, plain, plain);
  if (cfg.selection == SelectionLoss::mse) return detail::train_with(data, spec, cfg, regularized, plain);
  return detail::train_with(data, spec, cfg, regularized, regularized);
}

// One report per lambda, every run with the same seeds.
inline std::vector<TrainReport> lambda_sweep(const WindowedDataset& data, const ModelSpec& spec,
                                             const TrainConfig& cfg, std::span<const double> lambdas) {
  if (lambdas.empty()) throw UsageError("lambda sweep needs at least one lambda");
  std::vector<TrainReport> out;
  out.reserve(lambdas.size());
  for (double lambda : lambdas) {
    TrainConfig run = cfg;
    run.loss.lambda = lambda;
    out.push_back(train(data, spec, run));
  }
  return out;
}

}  // namespace mimic
