#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mimic/error.hpp"
#include "mimic/rng.hpp"

namespace mimic {

enum class ModelKind { avg_window, linear_ar, mlp, rnn };

inline std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::avg_window: return "avg_window";
    case ModelKind::linear_ar: return "linear_ar";
    case ModelKind::mlp: return "mlp";
    case ModelKind::rnn: return "rnn";
  }
  return "?";
}

inline ModelKind parse_model_kind(std::string_view s) {
  if (s == "avg_window") return ModelKind::avg_window;
  if (s == "linear_ar") return ModelKind::linear_ar;
  if (s == "mlp") return ModelKind::mlp;
  if (s == "rnn") return ModelKind::rnn;
  throw UsageError("unknown model kind '" + std::string(s) + "' (expected avg_window, linear_ar, mlp or rnn)");
}

// input_len T values in, horizon h values out. hidden_dim applies to mlp and
// rnn, window (the averaging length n) to avg_window.
struct ModelSpec {
  ModelKind kind = ModelKind::mlp;
  std::size_t input_len = 16;
  std::size_t horizon = 1;
  std::size_t hidden_dim = 32;
  std::size_t window = 1;
  std::uint64_t init_seed = 0;

  void validate() const {
    if (input_len == 0) throw UsageError("model: input_len must be >= 1");
    if (horizon == 0) throw UsageError("model: horizon must be >= 1");
    if ((kind == ModelKind::mlp || kind == ModelKind::rnn) && hidden_dim == 0) {
      throw UsageError("model: hidden_dim must be >= 1");
    }
    if (kind == ModelKind::avg_window && (window == 0 || window > input_len)) {
      throw UsageError("model: avg_window needs 1 <= n <= T");
    }
  }
};

// Flat parameter vector plus the per-layer dimensions it was built for:
//   linear_ar  shape {T, h}      W[h x T], b[h]
//   mlp        shape {T, H, h}   W1[H x T], b1[H], W2[h x H], b2[h]
//   rnn        shape {T, H, h}   Wx[H], Wh[H x H], b[H], Wo[h x H], bo[h]
//   avg_window shape {T, n}      no parameters
// Matrices are row-major.
struct ModelParams {
  ModelKind kind = ModelKind::linear_ar;
  std::vector<std::size_t> shape;
  std::vector<double> values;
};

inline std::vector<std::size_t> param_shape(const ModelSpec& spec) {
  switch (spec.kind) {
    case ModelKind::avg_window: return {spec.input_len, spec.window};
    case ModelKind::linear_ar: return {spec.input_len, spec.horizon};
    case ModelKind::mlp:
    case ModelKind::rnn: return {spec.input_len, spec.hidden_dim, spec.horizon};
  }
  return {};
}

inline std::size_t param_count(const ModelSpec& spec) {
  const std::size_t T = spec.input_len, H = spec.hidden_dim, h = spec.horizon;
  switch (spec.kind) {
    case ModelKind::avg_window: return 0;
    case ModelKind::linear_ar: return h * T + h;
    case ModelKind::mlp: return H * T + H + h * H + h;
    case ModelKind::rnn: return H + H * H + H + h * H + h;
  }
  return 0;
}

inline void check_params(const ModelSpec& spec, const ModelParams& params) {
  if (params.kind != spec.kind || params.shape != param_shape(spec) || params.values.size() != param_count(spec)) {
    throw UsageError("model parameters do not match a " + to_string(spec.kind) + " spec");
  }
}

// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases included. The rnn cell
// uses fan_in = H + 1 (the concatenated [x_t; h_{t-1}]).
inline ModelParams init_params(const ModelSpec& spec) {
  spec.validate();
  ModelParams p{spec.kind, param_shape(spec), std::vector<double>(param_count(spec))};
  Rng rng(spec.init_seed);
  auto fill = [&](std::size_t from, std::size_t count, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = 0; i < count; ++i) p.values[from + i] = rng.uniform(-bound, bound);
  };
  const std::size_t T = spec.input_len, H = spec.hidden_dim, h = spec.horizon;
  switch (spec.kind) {
    case ModelKind::avg_window: break;
    case ModelKind::linear_ar: fill(0, h * T + h, T); break;
    case ModelKind::mlp:
      fill(0, H * T + H, T);
      fill(H * T + H, h * H + h, H);
      break;
    case ModelKind::rnn:
      fill(0, H + H * H + H, H + 1);
      fill(H + H * H + H, h * H + h, H);
      break;
  }
  return p;
}

// Mean of the last n inputs.
inline double avg_window_predict(std::span<const double> input, std::size_t n) {
  if (n == 0 || n > input.size()) {
    throw UsageError("avg_window: n = " + std::to_string(n) + " must be in [1, " + std::to_string(input.size()) + "]");
  }
  double sum = 0.0;
  for (double x : input.last(n)) sum += x;
  return sum / static_cast<double>(n);
}

// Intermediate activations kept by forward for the matching backward call.
struct ForwardCache {
  std::vector<double> hidden;  // mlp: pre-activations [H]; rnn: states h_0..h_T [(T+1) x H]
};

namespace detail {

inline void check_input(const ModelSpec& spec, std::span<const double> input) {
  if (input.size() != spec.input_len) {
    throw UsageError("model input has length " + std::to_string(input.size()) + ", expected " +
                     std::to_string(spec.input_len));
  }
}

// out[r] = b[r] + sum_c W[r, c] x[c]
inline void affine(std::span<const double> W, std::span<const double> b, std::span<const double> x,
                   std::span<double> out) {
  const std::size_t cols = x.size();
  for (std::size_t r = 0; r < out.size(); ++r) {
    double acc = b[r];
    const double* row = W.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    out[r] = acc;
  }
}

// gW += dy x^T, gb += dy, and dx = W^T dy when dx is nonempty.
inline void affine_backward(std::span<const double> W, std::span<const double> x, std::span<const double> dy,
                            std::span<double> gW, std::span<double> gb, std::span<double> dx) {
  const std::size_t cols = x.size();
  std::fill(dx.begin(), dx.end(), 0.0);
  for (std::size_t r = 0; r < dy.size(); ++r) {
    const double d = dy[r];
    gb[r] += d;
    double* grow = gW.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) grow[c] += d * x[c];
    if (!dx.empty()) {
      const double* row = W.data() + r * cols;
      for (std::size_t c = 0; c < cols; ++c) dx[c] += row[c] * d;
    }
  }
}

}  // namespace detail

// Forecast of spec.horizon values from one input window. avg_window produces
// multi-step output by feeding its own predictions back in.
inline std::vector<double> forward(const ModelSpec& spec, const ModelParams& params, std::span<const double> input,
                                   ForwardCache& cache) {
  detail::check_input(spec, input);
  check_params(spec, params);
  const std::size_t T = spec.input_len, H = spec.hidden_dim, h = spec.horizon;
  const std::span<const double> p = params.values;
  std::vector<double> out(h);

  switch (spec.kind) {
    case ModelKind::avg_window: {
      std::vector<double> window(input.begin(), input.end());
      for (std::size_t s = 0; s < h; ++s) {
        out[s] = avg_window_predict(std::span<const double>(window).last(T), spec.window);
        window.push_back(out[s]);
      }
      break;
    }
    case ModelKind::linear_ar:
      detail::affine(p.subspan(0, h * T), p.subspan(h * T, h), input, out);
      break;
    case ModelKind::mlp: {
      cache.hidden.resize(H);
      detail::affine(p.subspan(0, H * T), p.subspan(H * T, H), input, cache.hidden);
      std::vector<double> act(H);
      for (std::size_t j = 0; j < H; ++j) act[j] = std::max(0.0, cache.hidden[j]);
      detail::affine(p.subspan(H * T + H, h * H), p.subspan(H * T + H + h * H, h), act, out);
      break;
    }
    case ModelKind::rnn: {
      const auto Wx = p.subspan(0, H), Wh = p.subspan(H, H * H), b = p.subspan(H + H * H, H);
      cache.hidden.assign((T + 1) * H, 0.0);
      for (std::size_t t = 0; t < T; ++t) {
        const double* prev = cache.hidden.data() + t * H;
        double* cur = cache.hidden.data() + (t + 1) * H;
        for (std::size_t j = 0; j < H; ++j) {
          double a = b[j] + Wx[j] * input[t];
          const double* row = Wh.data() + j * H;
          for (std::size_t k = 0; k < H; ++k) a += row[k] * prev[k];
          cur[j] = std::tanh(a);
        }
      }
      const std::size_t o = H + H * H + H;
      detail::affine(p.subspan(o, h * H), p.subspan(o + h * H, h),
                     std::span<const double>(cache.hidden).subspan(T * H, H), out);
      break;
    }
  }
  return out;
}

inline std::vector<double> forward(const ModelSpec& spec, const ModelParams& params, std::span<const double> input) {
  ForwardCache cache;
  return forward(spec, params, input, cache);
}

// Adds dL/dparams to `grad` given dL/dprediction, using the cache filled by
// the forward call on the same input.
inline void backward_accumulate(const ModelSpec& spec, const ModelParams& params, std::span<const double> input,
                                const ForwardCache& cache, std::span<const double> upstream,
                                std::span<double> grad) {
  const std::size_t T = spec.input_len, H = spec.hidden_dim, h = spec.horizon;
  if (upstream.size() != h) throw UsageError("backward: upstream gradient length does not match horizon");
  if (grad.size() != params.values.size()) throw UsageError("backward: gradient buffer has wrong size");
  const std::span<const double> p = params.values;

  switch (spec.kind) {
    case ModelKind::avg_window: break;
    case ModelKind::linear_ar:
      detail::affine_backward(p.subspan(0, h * T), input, upstream, grad.subspan(0, h * T), grad.subspan(h * T, h), {});
      break;
    case ModelKind::mlp: {
      std::vector<double> act(H), dact(H);
      for (std::size_t j = 0; j < H; ++j) act[j] = std::max(0.0, cache.hidden[j]);
      const std::size_t o = H * T + H;
      detail::affine_backward(p.subspan(o, h * H), act, upstream, grad.subspan(o, h * H), grad.subspan(o + h * H, h),
                              dact);
      for (std::size_t j = 0; j < H; ++j) dact[j] = cache.hidden[j] > 0.0 ? dact[j] : 0.0;
      detail::affine_backward(p.subspan(0, H * T), input, dact, grad.subspan(0, H * T), grad.subspan(H * T, H), {});
      break;
    }
    case ModelKind::rnn: {
      const auto Wh = p.subspan(H, H * H);
      auto gWx = grad.subspan(0, H), gWh = grad.subspan(H, H * H), gb = grad.subspan(H + H * H, H);
      const std::size_t o = H + H * H + H;
      std::vector<double> dh(H), da(H);
      detail::affine_backward(p.subspan(o, h * H), std::span<const double>(cache.hidden).subspan(T * H, H), upstream,
                              grad.subspan(o, h * H), grad.subspan(o + h * H, h), dh);
      // Back through time: h_t = tanh(Wx x_t + Wh h_{t-1} + b).
      for (std::size_t t = T; t-- > 0;) {
        const double* cur = cache.hidden.data() + (t + 1) * H;
        const double* prev = cache.hidden.data() + t * H;
        for (std::size_t j = 0; j < H; ++j) da[j] = dh[j] * (1.0 - cur[j] * cur[j]);
        std::fill(dh.begin(), dh.end(), 0.0);
        for (std::size_t j = 0; j < H; ++j) {
          const double d = da[j];
          gWx[j] += d * input[t];
          gb[j] += d;
          double* grow = gWh.data() + j * H;
          const double* row = Wh.data() + j * H;
          for (std::size_t k = 0; k < H; ++k) {
            grow[k] += d * prev[k];
            dh[k] += row[k] * d;
          }
        }
      }
      break;
    }
  }
}

inline std::vector<double> backward(const ModelSpec& spec, const ModelParams& params, std::span<const double> input,
                                    std::span<const double> upstream) {
  ForwardCache cache;
  forward(spec, params, input, cache);
  std::vector<double> grad(params.values.size(), 0.0);
  backward_accumulate(spec, params, input, cache, upstream, grad);
  return grad;
}

enum class MultistepMode { direct, iterative };

// direct: one forward of a model whose output dimension is h. iterative: h
// one-step forwards, each sliding its own prediction into the window.
inline std::vector<double> predict_multistep(const ModelSpec& spec, const ModelParams& params,
                                             std::span<const double> input, std::size_t h, MultistepMode mode) {
  detail::check_input(spec, input);
  if (mode == MultistepMode::direct) {
    if (spec.horizon != h) {
      throw UsageError("direct prediction needs a model with output dimension " + std::to_string(h));
    }
    return forward(spec, params, input);
  }
  if (spec.horizon != 1) throw UsageError("iterative prediction needs a one-step model");
  std::vector<double> window(input.begin(), input.end());
  std::vector<double> out;
  out.reserve(h);
  ForwardCache cache;
  for (std::size_t s = 0; s < h; ++s) {
    const double next = forward(spec, params, std::span<const double>(window).last(spec.input_len), cache)[0];
    out.push_back(next);
    window.push_back(next);
  }
  return out;
}

}  // namespace mimic
