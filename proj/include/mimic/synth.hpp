#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "mimic/error.hpp"
#include "mimic/rng.hpp"
#include "mimic/series.hpp"

namespace mimic {

struct SynthSpec {
  std::size_t n_points = 1000;
  double dt = 0.1;
  double sigma = 0.5;
  double mu = 0.0;
  double trend_slope = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_points < 2) throw UsageError("synth: n_points must be >= 2");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw UsageError("synth: dt must be > 0");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw UsageError("synth: sigma must be >= 0");
    if (!std::isfinite(mu) || !std::isfinite(trend_slope)) throw UsageError("synth: mu and trend must be finite");
  }
};

// Noise-free part of the benchmark signal.
inline double synth_signal(double t, double trend_slope) {
  constexpr double pi = std::numbers::pi;
  return std::sin(t) + std::sin(pi / 2.0 * t) + std::sin(-3.0 * pi / 2.0 * t) + trend_slope * t;
}

// values[k] = sin(t) + sin(pi/2 t) + sin(-3pi/2 t) + trend_slope t + eps_k,
// t = k dt, eps_k ~ N(mu, sigma^2) drawn with Rng::normal from `seed`.
// With sigma == 0 no random draws are made and eps_k = mu.
inline TimeSeries generate(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::vector<double> values(spec.n_points);
  for (std::size_t k = 0; k < spec.n_points; ++k) {
    const double t = static_cast<double>(k) * spec.dt;
    double y = synth_signal(t, spec.trend_slope);
    y += spec.sigma > 0.0 ? rng.normal(spec.mu, spec.sigma) : spec.mu;
    values[k] = y;
  }
  return TimeSeries(std::move(values), "value");
}

}  // namespace mimic
