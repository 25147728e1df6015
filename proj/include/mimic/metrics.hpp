#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mimic/error.hpp"

namespace mimic {

// Targets z_1..z_n, predictions zhat_1..zhat_n, and the anchor z_0: the last
// observed value before the first target.
struct Forecast {
  std::vector<double> targets;
  std::vector<double> predictions;
  double anchor = 0.0;

  std::size_t size() const noexcept { return targets.size(); }

  void validate() const {
    if (targets.empty()) throw UsageError("forecast must have at least one target");
    if (targets.size() != predictions.size()) {
      throw UsageError("forecast has " + std::to_string(targets.size()) + " targets but " +
                       std::to_string(predictions.size()) + " predictions");
    }
    if (!std::isfinite(anchor)) throw UsageError("forecast anchor is not finite");
    for (std::size_t i = 0; i < targets.size(); ++i) {
      if (!std::isfinite(targets[i]) || !std::isfinite(predictions[i])) {
        throw UsageError("forecast entry " + std::to_string(i) + " is not finite");
      }
    }
  }

  // z_{i-1} for zero-based i, with z_{-1} meaning the anchor.
  double previous_target(std::size_t i) const { return i == 0 ? anchor : targets[i - 1]; }
};

inline double mse(const Forecast& f) {
  f.validate();
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double e = f.predictions[i] - f.targets[i];
    acc += e * e;
  }
  return acc / static_cast<double>(f.size());
}

// Mean squared distance of each prediction to the previous target.
inline double shifted_mse(const Forecast& f) {
  f.validate();
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double e = f.predictions[i] - f.previous_target(i);
    acc += e * e;
  }
  return acc / static_cast<double>(f.size());
}

// Sum of (z_i - zhat_i)^2 - (z_{i-1} - zhat_i)^2. Positive means the forecast
// sits closer to the previous target than to the current one, i.e. mimicking.
//
// Each term is evaluated as (z_i - z_{i-1})(z_i + z_{i-1} - 2 zhat_i) and the
// terms are summed with Neumaier compensation, since they often cancel.
inline double mim(const Forecast& f) {
  f.validate();
  double sum = 0.0, comp = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double prev = f.previous_target(i);
    const double term = (f.targets[i] - prev) * ((f.targets[i] - f.predictions[i]) + (prev - f.predictions[i]));
    const double t = sum + term;
    comp += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
    sum = t;
  }
  return sum + comp;
}

struct ChangeVector {
  std::vector<std::int8_t> signs;

  std::size_t size() const noexcept { return signs.size(); }
};

inline std::int8_t change(double a, double b) { return static_cast<std::int8_t>((a > b) - (a < b)); }

// signs[i] = sign(values[i] - values[i-1]) with values[-1] := first_prev.
inline ChangeVector change_vector(std::span<const double> values, double first_prev) {
  if (values.empty()) throw UsageError("change_vector needs a nonempty sequence");
  ChangeVector out;
  out.signs.reserve(values.size());
  double prev = first_prev;
  for (double v : values) {
    out.signs.push_back(change(v, prev));
    prev = v;
  }
  return out;
}

// Fraction of steps whose predicted direction matches the true direction
// `lag` steps earlier: lag 0 is Acc, lag 1 is shifted Acc. Both change
// vectors start from the anchor. Signs are ternary and 0 only matches 0.
inline double directional_accuracy(const Forecast& f, int lag) {
  f.validate();
  if (lag != 0 && lag != 1) throw UsageError("directional_accuracy: lag must be 0 or 1");
  const auto n = f.size();
  const auto shift = static_cast<std::size_t>(lag);
  if (n < 1 + shift) {
    throw UsageError("directional_accuracy: need at least " + std::to_string(1 + shift) + " steps for lag " +
                     std::to_string(lag));
  }
  const auto truth = change_vector(f.targets, f.anchor);
  const auto pred = change_vector(f.predictions, f.anchor);
  std::size_t hits = 0;
  for (std::size_t i = shift; i < n; ++i) hits += pred.signs[i] == truth.signs[i - shift];
  return static_cast<double>(hits) / static_cast<double>(n - shift);
}

// Binary F1 with `positive_sign` as the positive class; 0 when there are no
// true positives.
inline double f1_score(const ChangeVector& truth, const ChangeVector& pred, int positive_sign) {
  if (truth.size() != pred.size()) throw UsageError("f1: change vectors differ in length");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool t = truth.signs[i] == positive_sign;
    const bool p = pred.signs[i] == positive_sign;
    tp += t && p;
    fp += !t && p;
    fn += t && !p;
  }
  if (tp == 0) return 0.0;
  const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  return 2.0 * precision * recall / (precision + recall);
}

inline double f1_binary(const Forecast& f, int positive_sign = 1) {
  f.validate();
  if (positive_sign != 1 && positive_sign != -1) throw UsageError("f1_binary: positive_sign must be +1 or -1");
  return f1_score(change_vector(f.targets, f.anchor), change_vector(f.predictions, f.anchor), positive_sign);
}

// All diagnostics of one forecast, or the equal-weight average over several.
// s_acc is NaN when a forecast has a single step.
struct MetricSet {
  double mse = 0.0;
  double s_mse = 0.0;
  double mim = 0.0;
  double mim_per_step = 0.0;
  double acc = 0.0;
  double s_acc = 0.0;
  double f1 = 0.0;
};

inline MetricSet evaluate(const Forecast& f) {
  MetricSet m;
  m.mse = mse(f);
  m.s_mse = shifted_mse(f);
  m.mim = mim(f);
  m.mim_per_step = m.mim / static_cast<double>(f.size());
  m.acc = directional_accuracy(f, 0);
  m.s_acc = f.size() >= 2 ? directional_accuracy(f, 1) : std::numeric_limits<double>::quiet_NaN();
  m.f1 = f1_binary(f, 1);
  return m;
}

inline MetricSet evaluate(std::span<const Forecast> forecasts) {
  if (forecasts.empty()) throw UsageError("no forecasts to evaluate");
  MetricSet sum;
  for (const auto& f : forecasts) {
    const auto m = evaluate(f);
    sum.mse += m.mse;
    sum.s_mse += m.s_mse;
    sum.mim += m.mim;
    sum.mim_per_step += m.mim_per_step;
    sum.acc += m.acc;
    sum.s_acc += m.s_acc;
    sum.f1 += m.f1;
  }
  const auto n = static_cast<double>(forecasts.size());
  return {sum.mse / n, sum.s_mse / n, sum.mim / n, sum.mim_per_step / n, sum.acc / n, sum.s_acc / n, sum.f1 / n};
}

}  // namespace mimic
