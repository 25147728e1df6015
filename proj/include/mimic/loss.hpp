#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mimic/error.hpp"

namespace mimic {

// Weight of the anti-mimicking penalty, how many past observations it looks
// at, and the forecast horizon each window carries.
struct LossSpec {
  double lambda = 0.0;
  int K = 1;
  int horizon = 1;

  void validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw UsageError("loss: lambda must be finite and >= 0");
    if (K < 1) throw UsageError("loss: K must be >= 1");
    if (horizon < 1) throw UsageError("loss: horizon must be >= 1");
  }
};

// value == mse_part + lambda * reg_part; grad is dL/dzhat.
template <std::floating_point Real>
struct LossEval {
  Real value = 0;
  Real mse_part = 0;
  Real reg_part = 0;
  std::vector<Real> grad;
};

// One horizon window: targets, predictions, and the observations before the
// first target (most recent last; its back() is the anchor z_0).
template <std::floating_point Real>
struct HorizonWindow {
  std::span<const Real> target;
  std::span<const Real> prediction;
  std::span<const Real> history;
};

namespace detail {

template <std::floating_point Real>
void require_finite(std::span<const Real> xs, const char* what) {
  for (Real x : xs) {
    if (!std::isfinite(x)) throw UsageError(std::string("loss: non-finite value in ") + what);
  }
}

// Adds one window's terms to the running sums and writes its gradient.
//
//   L = sum_i (z_i - zhat_i)^2 + lambda sum_i sum_{k=1..K} [(z_i - z_{i-k})(z_i - zhat_i)]^2
//   dL/dzhat_i = -2 (z_i - zhat_i) (1 + lambda sum_k (z_i - z_{i-k})^2)
//
// z_{i-k} before the first target is read from the tail of `history`.
template <std::floating_point Real>
void accumulate_window(std::span<const Real> z, std::span<const Real> zhat, std::span<const Real> history,
                       const LossSpec& spec, Real& mse_part, Real& reg_part, std::span<Real> grad) {
  if (z.size() != zhat.size()) {
    throw UsageError("loss: " + std::to_string(z.size()) + " targets but " + std::to_string(zhat.size()) +
                     " predictions");
  }
  const auto K = static_cast<std::size_t>(spec.K);
  if (history.size() < K) {
    throw UsageError("loss: need " + std::to_string(K) + " history values, got " + std::to_string(history.size()));
  }
  require_finite(z, "targets");
  require_finite(zhat, "predictions");
  require_finite(history, "history");

  const auto lambda = static_cast<Real>(spec.lambda);
  const std::size_t hn = history.size();
  for (std::size_t i = 0; i < z.size(); ++i) {
    const Real err = z[i] - zhat[i];
    Real diff_sq = 0;
    Real reg = 0;
    for (std::size_t k = 1; k <= K; ++k) {
      const Real lagged = i >= k ? z[i - k] : history[hn - (k - i)];
      const Real d = z[i] - lagged;
      const Real term = d * err;
      diff_sq += d * d;
      reg += term * term;
    }
    mse_part += err * err;
    reg_part += reg;
    grad[i] = Real(-2) * err * (Real(1) + lambda * diff_sq);
  }
}

}  // namespace detail

// Regularized loss over one sequence of n steps (sum convention).
template <std::floating_point Real>
LossEval<Real> loss_eval(std::span<const Real> z, std::span<const Real> zhat, std::span<const Real> history,
                         const LossSpec& spec) {
  spec.validate();
  LossEval<Real> out;
  out.grad.resize(zhat.size());
  detail::accumulate_window(z, zhat, history, spec, out.mse_part, out.reg_part, std::span<Real>(out.grad));
  out.value = out.mse_part + static_cast<Real>(spec.lambda) * out.reg_part;
  return out;
}

template <std::floating_point Real>
LossEval<Real> loss_eval(const std::vector<Real>& z, const std::vector<Real>& zhat, const std::vector<Real>& history,
                         const LossSpec& spec) {
  return loss_eval(std::span<const Real>(z), std::span<const Real>(zhat), std::span<const Real>(history), spec);
}

// Sum of the loss over windows of length spec.horizon, each teacher-forced
// with its own targets and history. grad is the concatenation of the
// per-window gradients in window order.
template <std::floating_point Real>
LossEval<Real> loss_eval_multihorizon(std::span<const HorizonWindow<Real>> windows, const LossSpec& spec) {
  spec.validate();
  const auto h = static_cast<std::size_t>(spec.horizon);
  LossEval<Real> out;
  out.grad.resize(windows.size() * h);
  for (std::size_t w = 0; w < windows.size(); ++w) {
    if (windows[w].target.size() != h) {
      throw UsageError("loss: window " + std::to_string(w) + " has length " +
                       std::to_string(windows[w].target.size()) + ", horizon is " + std::to_string(h));
    }
    detail::accumulate_window(windows[w].target, windows[w].prediction, windows[w].history, spec, out.mse_part,
                              out.reg_part, std::span<Real>(out.grad).subspan(w * h, h));
  }
  out.value = out.mse_part + static_cast<Real>(spec.lambda) * out.reg_part;
  return out;
}

// Training objectives. Both expose evaluate(target, prediction, history) and
// accumulate into caller-owned sums, so a batch can be evaluated window by
// window without reallocating.
struct MimickingObjective {
  LossSpec spec;

  template <std::floating_point Real>
  void accumulate(std::span<const Real> z, std::span<const Real> zhat, std::span<const Real> history,
                  Real& mse_part, Real& reg_part, std::span<Real> grad) const {
    detail::accumulate_window(z, zhat, history, spec, mse_part, reg_part, grad);
  }

  template <std::floating_point Real>
  Real combine(Real mse_part, Real reg_part) const {
    return mse_part + static_cast<Real>(spec.lambda) * reg_part;
  }
};

struct SquaredErrorObjective {
  template <std::floating_point Real>
  void accumulate(std::span<const Real> z, std::span<const Real> zhat, std::span<const Real> /*history*/,
                  Real& mse_part, Real& /*reg_part*/, std::span<Real> grad) const {
    for (std::size_t i = 0; i < z.size(); ++i) {
      const Real err = z[i] - zhat[i];
      mse_part += err * err;
      grad[i] = Real(-2) * err;
    }
  }

  template <std::floating_point Real>
  Real combine(Real mse_part, Real /*reg_part*/) const {
    return mse_part;
  }
};

template <typename O>
concept Objective = requires(const O& o, std::span<const double> s, double& a, std::span<double> g) {
  o.accumulate(s, s, s, a, a, g);
  { o.combine(a, a) } -> std::convertible_to<double>;
};

// Largest relative gap between the analytic gradient and central finite
// differences of the loss value, with denominator max(|a|, |n|, 1e-12).
template <std::floating_point Real>
Real grad_check(std::span<const Real> z, std::span<const Real> zhat, std::span<const Real> history,
                const LossSpec& spec, Real epsilon) {
  if (!(epsilon > 0) || epsilon > Real(1e-3)) throw UsageError("grad_check: epsilon must be in (0, 1e-3]");
  const auto analytic = loss_eval(z, zhat, history, spec).grad;
  std::vector<Real> probe(zhat.begin(), zhat.end());
  Real worst = 0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const Real saved = probe[i];
    probe[i] = saved + epsilon;
    const Real up = loss_eval(z, std::span<const Real>(probe), history, spec).value;
    probe[i] = saved - epsilon;
    const Real down = loss_eval(z, std::span<const Real>(probe), history, spec).value;
    probe[i] = saved;
    const Real numeric = (up - down) / (Real(2) * epsilon);
    const Real denom = std::max({std::abs(analytic[i]), std::abs(numeric), Real(1e-12)});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

template <std::floating_point Real>
Real grad_check(const std::vector<Real>& z, const std::vector<Real>& zhat, const std::vector<Real>& history,
                const LossSpec& spec, Real epsilon) {
  return grad_check(std::span<const Real>(z), std::span<const Real>(zhat), std::span<const Real>(history), spec,
                    epsilon);
}

// Same check for a batch of horizon windows; every prediction entry is probed.
template <std::floating_point Real>
Real grad_check_multihorizon(std::span<const HorizonWindow<Real>> windows, const LossSpec& spec, Real epsilon) {
  if (!(epsilon > 0) || epsilon > Real(1e-3)) throw UsageError("grad_check: epsilon must be in (0, 1e-3]");
  const auto analytic = loss_eval_multihorizon(windows, spec).grad;
  std::vector<std::vector<Real>> probes;
  std::vector<HorizonWindow<Real>> shadow(windows.begin(), windows.end());
  probes.reserve(windows.size());
  for (std::size_t w = 0; w < windows.size(); ++w) {
    probes.emplace_back(windows[w].prediction.begin(), windows[w].prediction.end());
    shadow[w].prediction = probes.back();
  }
  const auto view = std::span<const HorizonWindow<Real>>(shadow);
  const std::size_t h = static_cast<std::size_t>(spec.horizon);
  Real worst = 0;
  for (std::size_t w = 0; w < probes.size(); ++w) {
    for (std::size_t i = 0; i < probes[w].size(); ++i) {
      Real& slot = probes[w][i];
      const Real saved = slot;
      slot = saved + epsilon;
      const Real up = loss_eval_multihorizon(view, spec).value;
      slot = saved - epsilon;
      const Real down = loss_eval_multihorizon(view, spec).value;
      slot = saved;
      const Real numeric = (up - down) / (Real(2) * epsilon);
      const Real a = analytic[w * h + i];
      const Real denom = std::max({std::abs(a), std::abs(numeric), Real(1e-12)});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace mimic
