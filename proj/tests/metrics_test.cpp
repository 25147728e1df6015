#include "mimic/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace mimic;

namespace {

Forecast random_forecast(std::mt19937_64& gen, std::size_t n) {
  std::normal_distribution<double> d(0.0, 1.5);
  Forecast f;
  f.anchor = d(gen);
  for (std::size_t i = 0; i < n; ++i) {
    f.targets.push_back(d(gen));
    f.predictions.push_back(d(gen));
  }
  return f;
}

Forecast copy_last(const Forecast& f) {
  Forecast out = f;
  out.predictions.resize(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out.predictions[i] = f.previous_target(i);
  return out;
}

double sum_sq_changes(const Forecast& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double d = f.targets[i] - f.previous_target(i);
    s += d * d;
  }
  return s;
}

}  // namespace

TEST(Mse, HandValues) {
  EXPECT_EQ(mse({{1, 2}, {1, 2}, 0}), 0.0);
  EXPECT_DOUBLE_EQ(mse({{1, 2}, {0, 0}, 0}), 2.5);
  EXPECT_DOUBLE_EQ(mse({{0.5}, {0.25}, 0}), 0.0625);
}

TEST(Mse, RejectsMismatch) {
  EXPECT_THROW(mse({{1, 2}, {1}, 0}), UsageError);
  EXPECT_THROW(mse({{}, {}, 0}), UsageError);
  EXPECT_THROW(mse({{1}, {NAN}, 0}), UsageError);
}

TEST(ShiftedMse, HandValues) {
  EXPECT_EQ(shifted_mse({{1, 2}, {0, 1}, 0}), 0.0);
  EXPECT_DOUBLE_EQ(shifted_mse({{1, 2}, {1, 1}, 0}), 0.5);
}

TEST(Mim, PerfectAndCopyLast) {
  EXPECT_DOUBLE_EQ(mim({{1, 2}, {1, 2}, 0}), -2.0);
  EXPECT_DOUBLE_EQ(mim({{1, 2}, {0, 1}, 0}), 2.0);
}

TEST(Mim, IdentityWithMseDifference) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto f = random_forecast(gen, 1 + gen() % 20);
    const double lhs = mim(f);
    const double rhs = static_cast<double>(f.size()) * (mse(f) - shifted_mse(f));
    EXPECT_LE(std::abs(lhs - rhs), 1e-12 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(Mim, PerfectModelHitsLowerBoundAndCopyLastIsNonnegative) {
  std::mt19937_64 gen(6);
  for (int trial = 0; trial < 200; ++trial) {
    auto f = random_forecast(gen, 1 + gen() % 15);
    auto perfect = f;
    perfect.predictions = perfect.targets;
    EXPECT_NEAR(mim(perfect), -sum_sq_changes(f), 1e-12 * sum_sq_changes(f) + 1e-15);
    const auto copy = copy_last(f);
    EXPECT_EQ(shifted_mse(copy), 0.0);
    EXPECT_NEAR(mim(copy), sum_sq_changes(f), 1e-12 * sum_sq_changes(f) + 1e-15);
    EXPECT_GE(mim(copy), 0.0);
  }
}

TEST(ChangeVector, Examples) {
  const std::vector<double> v{1, 2, 1, 1};
  EXPECT_EQ(change_vector(v, 0.0).signs, (std::vector<std::int8_t>{1, 1, -1, 0}));
  const std::vector<double> flat{3, 3, 3};
  EXPECT_EQ(change_vector(flat, 3.0).signs, (std::vector<std::int8_t>{0, 0, 0}));
  const std::vector<double> up{1, 2, 3, 4};
  EXPECT_EQ(change_vector(up, 0.0).signs, (std::vector<std::int8_t>{1, 1, 1, 1}));
  EXPECT_THROW(change_vector(std::vector<double>{}, 0.0), UsageError);
}

TEST(DirectionalAccuracy, HandExample) {
  const Forecast f{{1, 2, 1, 1}, {0.5, 2.5, 0.5, 2}, 0};
  EXPECT_DOUBLE_EQ(directional_accuracy(f, 0), 0.75);
}

TEST(DirectionalAccuracy, PerfectAndCopyLast) {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 100; ++trial) {
    auto f = random_forecast(gen, 2 + gen() % 10);
    auto perfect = f;
    perfect.predictions = f.targets;
    EXPECT_EQ(directional_accuracy(perfect, 0), 1.0);
    EXPECT_EQ(directional_accuracy(copy_last(f), 1), 1.0);
  }
}

TEST(DirectionalAccuracy, MonotoneCopyLast) {
  // zhat_0 is the anchor, so copy-last predicts "no change" at the first step
  // and matches the constant +1 direction everywhere after it.
  Forecast f{{1, 2, 3, 4, 5}, {}, 0};
  f = copy_last(f);
  EXPECT_DOUBLE_EQ(directional_accuracy(f, 0), 4.0 / 5.0);
  EXPECT_EQ(directional_accuracy(f, 1), 1.0);
}

TEST(DirectionalAccuracy, ZeroOnlyMatchesZero) {
  const Forecast f{{1, 1}, {1, 2}, 1};
  EXPECT_DOUBLE_EQ(directional_accuracy(f, 0), 0.5);
}

TEST(DirectionalAccuracy, Errors) {
  EXPECT_THROW(directional_accuracy({{1}, {1}, 0}, 1), UsageError);
  EXPECT_THROW(directional_accuracy({{1, 2}, {1, 2}, 0}, 2), UsageError);
}

TEST(F1, HandConfusionMatrix) {
  const ChangeVector truth{{1, -1, 1, 0}};
  const ChangeVector pred{{1, 1, -1, 0}};
  EXPECT_DOUBLE_EQ(f1_score(truth, pred, 1), 0.5);
}

TEST(F1, PerfectAndAllNegative) {
  const Forecast f{{1, 0, 2, 1}, {1, 0, 2, 1}, 0};
  EXPECT_EQ(f1_binary(f, 1), 1.0);
  EXPECT_EQ(f1_binary(f, -1), 1.0);
  const Forecast down{{1, 0, 2, 1}, {-1, -2, -3, -4}, 0};
  EXPECT_EQ(f1_binary(down, 1), 0.0);
  EXPECT_THROW(f1_binary(f, 0), UsageError);
}

TEST(Metrics, RangesOverRandomForecasts) {
  std::mt19937_64 gen(9);
  for (int trial = 0; trial < 500; ++trial) {
    const auto m = evaluate(random_forecast(gen, 2 + gen() % 12));
    EXPECT_GE(m.acc, 0.0);
    EXPECT_LE(m.acc, 1.0);
    EXPECT_GE(m.s_acc, 0.0);
    EXPECT_LE(m.s_acc, 1.0);
    EXPECT_GE(m.f1, 0.0);
    EXPECT_LE(m.f1, 1.0);
    EXPECT_GE(m.mse, 0.0);
  }
}

TEST(Metrics, AggregateIsEqualWeightMean) {
  const std::vector<Forecast> fs{{{1, 2}, {1, 2}, 0}, {{1, 2}, {0, 0}, 0}};
  const auto m = evaluate(std::span<const Forecast>(fs));
  EXPECT_DOUBLE_EQ(m.mse, 1.25);
  EXPECT_TRUE(std::isnan(evaluate(Forecast{{1}, {1}, 0}).s_acc));
}
