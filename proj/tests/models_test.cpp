#include "mimic/models.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "mimic/checkpoint.hpp"

using namespace mimic;

namespace {

ModelSpec make_spec(ModelKind kind, std::size_t T, std::size_t h, std::size_t H = 5, std::uint64_t seed = 3) {
  ModelSpec s;
  s.kind = kind;
  s.input_len = T;
  s.horizon = h;
  s.hidden_dim = H;
  s.init_seed = seed;
  return s;
}

std::vector<double> random_vec(std::mt19937_64& gen, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = d(gen);
  return v;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Worst relative gap between backward() and central differences of
// upstream . forward(params); gradients below 1e-4 in magnitude are compared
// against that floor.
double param_grad_error(const ModelSpec& spec, ModelParams params, const std::vector<double>& input,
                        const std::vector<double>& upstream) {
  const auto analytic = backward(spec, params, input, upstream);
  const double eps = 1e-6;
  double worst = 0.0;
  for (std::size_t i = 0; i < params.values.size(); ++i) {
    const double saved = params.values[i];
    params.values[i] = saved + eps;
    const double up = dot(upstream, forward(spec, params, input));
    params.values[i] = saved - eps;
    const double down = dot(upstream, forward(spec, params, input));
    params.values[i] = saved;
    const double numeric = (up - down) / (2 * eps);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-4});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace

TEST(AvgWindow, Examples) {
  const std::vector<double> in{1, 2, 3};
  EXPECT_EQ(avg_window_predict(in, 1), 3.0);
  EXPECT_EQ(avg_window_predict(in, 2), 2.5);
  const std::vector<double> flat{4, 4, 4, 4};
  for (std::size_t n = 1; n <= 4; ++n) EXPECT_EQ(avg_window_predict(flat, n), 4.0);
  EXPECT_THROW(avg_window_predict(in, 4), UsageError);
  EXPECT_THROW(avg_window_predict(in, 0), UsageError);
}

TEST(AvgWindow, MultiStepFeedsBack) {
  auto spec = make_spec(ModelKind::avg_window, 3, 2);
  spec.window = 2;
  const auto params = init_params(spec);
  EXPECT_TRUE(params.values.empty());
  const auto out = forward(spec, params, std::vector<double>{1, 2, 3});
  EXPECT_EQ(out[0], 2.5);
  EXPECT_EQ(out[1], 2.75);
}

TEST(Forward, ZeroWeightModelsEmitBias) {
  const std::vector<double> in{0.3, -1.0, 2.0, 0.7};
  auto lin = make_spec(ModelKind::linear_ar, 4, 1);
  auto p = init_params(lin);
  std::fill(p.values.begin(), p.values.end(), 0.0);
  p.values.back() = 1.75;
  EXPECT_EQ(forward(lin, p, in)[0], 1.75);

  auto mlp = make_spec(ModelKind::mlp, 4, 2);
  p = init_params(mlp);
  std::fill(p.values.begin(), p.values.end(), 0.0);
  p.values[p.values.size() - 2] = -0.5;
  p.values[p.values.size() - 1] = 0.25;
  EXPECT_EQ(forward(mlp, p, in), (std::vector<double>{-0.5, 0.25}));

  auto rnn = make_spec(ModelKind::rnn, 4, 1, 6);
  p = init_params(rnn);
  const std::size_t H = 6;
  std::fill(p.values.begin(), p.values.begin() + static_cast<std::ptrdiff_t>(H + H * H + H), 0.0);
  ForwardCache cache;
  const auto out = forward(rnn, p, in, cache);
  for (double hval : cache.hidden) EXPECT_EQ(hval, 0.0);
  EXPECT_EQ(out[0], p.values.back());
}

TEST(Forward, ShapeErrors) {
  const auto spec = make_spec(ModelKind::linear_ar, 4, 1);
  const auto p = init_params(spec);
  EXPECT_THROW(forward(spec, p, std::vector<double>{1, 2, 3}), UsageError);
  const auto other = make_spec(ModelKind::linear_ar, 5, 1);
  EXPECT_THROW(forward(other, p, std::vector<double>{1, 2, 3, 4, 5}), UsageError);
}

TEST(Init, SeedDeterminesParameters) {
  for (auto kind : {ModelKind::linear_ar, ModelKind::mlp, ModelKind::rnn}) {
    const auto spec = make_spec(kind, 8, 2, 7, 42);
    const auto a = init_params(spec);
    const auto b = init_params(spec);
    EXPECT_EQ(a.values, b.values);
    EXPECT_EQ(a.values.size(), param_count(spec));
    const auto c = init_params(make_spec(kind, 8, 2, 7, 43));
    EXPECT_NE(a.values, c.values);
    const double bound = 1.0 / std::sqrt(kind == ModelKind::rnn ? 2.0 : 7.0);
    for (double v : a.values) EXPECT_LE(std::abs(v), bound + 1e-15);
  }
}

TEST(Backward, ZeroUpstreamGivesZero) {
  std::mt19937_64 gen(1);
  for (auto kind : {ModelKind::linear_ar, ModelKind::mlp, ModelKind::rnn}) {
    const auto spec = make_spec(kind, 6, 3);
    const auto g = backward(spec, init_params(spec), random_vec(gen, 6), std::vector<double>(3, 0.0));
    for (double x : g) EXPECT_EQ(x, 0.0);
  }
}

TEST(Backward, LinearChainRule) {
  const auto spec = make_spec(ModelKind::linear_ar, 3, 1);
  const std::vector<double> in{0.5, -1.0, 2.0};
  const auto g = backward(spec, init_params(spec), in, std::vector<double>{1.5});
  EXPECT_EQ(g, (std::vector<double>{0.75, -1.5, 3.0, 1.5}));
}

TEST(Backward, MatchesFiniteDifferences) {
  std::mt19937_64 gen(17);
  for (auto kind : {ModelKind::linear_ar, ModelKind::mlp, ModelKind::rnn}) {
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t T = 2 + gen() % 8, h = 1 + gen() % 3, H = 1 + gen() % 8;
      const auto spec = make_spec(kind, T, h, H, gen());
      const auto params = init_params(spec);
      EXPECT_LE(param_grad_error(spec, params, random_vec(gen, T), random_vec(gen, h)), 1e-5)
          << to_string(kind) << " T=" << T << " h=" << h << " H=" << H;
    }
  }
}

TEST(Backward, RnnThroughTimeAtSeveralLengths) {
  std::mt19937_64 gen(19);
  for (std::size_t T : {2u, 5u, 16u}) {
    const auto spec = make_spec(ModelKind::rnn, T, 2, 8, 5);
    auto params = init_params(spec);
    // Larger recurrent weights so gradients actually flow through many steps.
    for (auto& v : params.values) v *= 2.0;
    EXPECT_LE(param_grad_error(spec, params, random_vec(gen, T), random_vec(gen, 2)), 1e-5) << "T=" << T;
  }
}

TEST(Multistep, HorizonOneModesAgree) {
  std::mt19937_64 gen(23);
  for (auto kind : {ModelKind::avg_window, ModelKind::linear_ar, ModelKind::mlp, ModelKind::rnn}) {
    const auto spec = make_spec(kind, 5, 1);
    const auto params = init_params(spec);
    const auto in = random_vec(gen, 5);
    const auto direct = predict_multistep(spec, params, in, 1, MultistepMode::direct);
    const auto iter = predict_multistep(spec, params, in, 1, MultistepMode::iterative);
    EXPECT_EQ(direct, iter);
    EXPECT_EQ(direct, forward(spec, params, in));
  }
}

TEST(Multistep, PersistenceRepeatsLastValue) {
  const auto spec = make_spec(ModelKind::avg_window, 4, 1);
  const auto out = predict_multistep(spec, init_params(spec), std::vector<double>{1, 5, 2, 9}, 6,
                                     MultistepMode::iterative);
  EXPECT_EQ(out, std::vector<double>(6, 9.0));
}

TEST(Multistep, LinearModelContinuesALine) {
  // x_{t+1} = 2 x_t - x_{t-1} reproduces any line exactly.
  const auto spec = make_spec(ModelKind::linear_ar, 3, 1);
  ModelParams p = init_params(spec);
  p.values = {0.0, -1.0, 2.0, 0.0};
  const auto out = predict_multistep(spec, p, std::vector<double>{1.0, 1.5, 2.0}, 4, MultistepMode::iterative);
  EXPECT_EQ(out, (std::vector<double>{2.5, 3.0, 3.5, 4.0}));
}

TEST(Multistep, ModeShapeErrors) {
  const auto spec = make_spec(ModelKind::mlp, 4, 3);
  const auto p = init_params(spec);
  const std::vector<double> in{1, 2, 3, 4};
  EXPECT_THROW(predict_multistep(spec, p, in, 2, MultistepMode::direct), UsageError);
  EXPECT_THROW(predict_multistep(spec, p, in, 3, MultistepMode::iterative), UsageError);
  EXPECT_EQ(predict_multistep(spec, p, in, 3, MultistepMode::direct).size(), 3u);
}

TEST(Checkpoint, RoundTripPreservesBits) {
  for (auto kind : {ModelKind::avg_window, ModelKind::linear_ar, ModelKind::mlp, ModelKind::rnn}) {
    const auto spec = make_spec(kind, 6, 2, 4, 9);
    auto params = init_params(spec);
    if (!params.values.empty()) params.values[0] = -0.0;
    std::stringstream buf;
    write_checkpoint(buf, spec, params);
    const auto back = read_checkpoint(buf);
    EXPECT_EQ(back.spec.kind, spec.kind);
    EXPECT_EQ(back.spec.input_len, 6u);
    EXPECT_EQ(back.params.shape, params.shape);
    ASSERT_EQ(back.params.values.size(), params.values.size());
    for (std::size_t i = 0; i < params.values.size(); ++i) {
      EXPECT_EQ(std::bit_cast<std::uint64_t>(back.params.values[i]), std::bit_cast<std::uint64_t>(params.values[i]));
    }
  }
}

TEST(Checkpoint, LittleEndianPayload) {
  const auto spec = make_spec(ModelKind::linear_ar, 1, 1);
  ModelParams p = init_params(spec);
  p.values = {1.0, -2.0};
  std::stringstream buf;
  write_checkpoint(buf, spec, p);
  const std::string bytes = buf.str();
  const auto payload = bytes.substr(bytes.find("end\n") + 4);
  ASSERT_EQ(payload.size(), 16u);
  // 1.0 == 0x3ff0000000000000
  EXPECT_EQ(static_cast<unsigned char>(payload[7]), 0x3f);
  EXPECT_EQ(static_cast<unsigned char>(payload[6]), 0xf0);
  EXPECT_EQ(static_cast<unsigned char>(payload[0]), 0x00);
  EXPECT_EQ(static_cast<unsigned char>(payload[15]), 0xc0);
}

TEST(Checkpoint, RejectsCorruptHeaderAndTruncation) {
  std::stringstream bad("not-a-checkpoint 1\n");
  EXPECT_THROW(read_checkpoint(bad), UsageError);
  const auto spec = make_spec(ModelKind::linear_ar, 2, 1);
  std::stringstream buf;
  write_checkpoint(buf, spec, init_params(spec));
  std::string s = buf.str();
  s.resize(s.size() - 3);
  std::stringstream cut(s);
  EXPECT_THROW(read_checkpoint(cut), UsageError);
}
