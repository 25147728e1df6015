#include "mimic/series.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_util.hpp"

using namespace mimic;
using mimic::testing::TempDir;
using mimic::testing::write_text;

TEST(TimeSeries, RejectsShortOrNonFinite) {
  EXPECT_THROW(TimeSeries({1.0}), UsageError);
  EXPECT_THROW(TimeSeries({1.0, NAN}), UsageError);
  EXPECT_THROW(TimeSeries({INFINITY, 1.0}), UsageError);
  EXPECT_NO_THROW(TimeSeries({1.0, 2.0}));
}

TEST(LoadCsv, ByName) {
  TempDir dir("csv");
  write_text(dir.file("a.csv"), "v\n1\n2\n3\n");
  const auto s = load_csv(dir.file("a.csv"), std::string("v"));
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0], 1.0);
  EXPECT_EQ(s[2], 3.0);
  EXPECT_EQ(s.name(), "v");
}

TEST(LoadCsv, ByIndexWithoutHeader) {
  TempDir dir("csv");
  write_text(dir.file("a.csv"), "1.5\n-2.0\n");
  const auto s = load_csv(dir.file("a.csv"), std::size_t{0});
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0], 1.5);
  EXPECT_EQ(s[1], -2.0);
}

TEST(LoadCsv, ByIndexSkipsHeaderAndPicksColumn) {
  TempDir dir("csv");
  write_text(dir.file("a.csv"), "t,v\r\n0,10\r\n1,11\r\n\r\n2,12\r\n");
  const auto s = load_csv(dir.file("a.csv"), std::size_t{1});
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[2], 12.0);
}

TEST(LoadCsv, NonNumericCellNamesRow) {
  TempDir dir("csv");
  write_text(dir.file("a.csv"), "v\n1\nabc\n4\n");
  try {
    load_csv(dir.file("a.csv"), std::string("v"));
    FAIL() << "expected an error";
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos) << e.what();
  }
}

TEST(LoadCsv, MissingFileAndColumn) {
  TempDir dir("csv");
  EXPECT_THROW(load_csv(dir.file("nope.csv"), std::string("v")), UsageError);
  write_text(dir.file("a.csv"), "v\n1\n2\n");
  EXPECT_THROW(load_csv(dir.file("a.csv"), std::string("w")), UsageError);
  EXPECT_THROW(load_csv(dir.file("a.csv"), std::size_t{3}), UsageError);
}

TEST(Normalizer, ZscoreOnTwoPoints) {
  const auto n = fit_normalizer(TimeSeries({0.0, 2.0}), 1.0, NormKind::zscore);
  EXPECT_DOUBLE_EQ(n.offset, 1.0);
  EXPECT_DOUBLE_EQ(n.scale, 1.0);
  EXPECT_DOUBLE_EQ(n.apply(0.0), -1.0);
}

TEST(Normalizer, NoneIsIdentity) {
  const auto n = fit_normalizer(TimeSeries({3.0, 7.0, -1.0}), 0.5, NormKind::none);
  EXPECT_EQ(n.apply(3.25), 3.25);
  EXPECT_EQ(n.invert(-8.5), -8.5);
}

TEST(Normalizer, DegenerateTrainingRangeIsAnError) {
  EXPECT_THROW(fit_normalizer(TimeSeries({4.0, 4.0, 4.0}), 1.0, NormKind::zscore), UsageError);
  EXPECT_THROW(fit_normalizer(TimeSeries({4.0, 4.0, 4.0}), 1.0, NormKind::minmax), UsageError);
  EXPECT_THROW(fit_normalizer(TimeSeries({1.0, 2.0, 3.0}), 0.5, NormKind::zscore), UsageError);
}

TEST(Normalizer, FitsOnTrainingPrefixOnly) {
  // Last point is a huge outlier outside the first half.
  const TimeSeries s({0.0, 2.0, 0.0, 2.0, 1e9, 1e9, 1e9, 1e9});
  const auto n = fit_normalizer(s, 0.5, NormKind::minmax);
  EXPECT_EQ(n.offset, 0.0);
  EXPECT_EQ(n.scale, 2.0);
}

TEST(Normalizer, RoundTripProperty) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> val(-1e3, 1e3);
  for (auto kind : {NormKind::zscore, NormKind::minmax, NormKind::none}) {
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> xs(3 + gen() % 60);
      for (auto& x : xs) x = val(gen);
      const TimeSeries s(xs);
      const auto n = fit_normalizer(s, 0.7, kind);
      for (double x : xs) {
        const double back = n.invert(n.apply(x));
        EXPECT_LE(std::abs(back - x), 1e-12 * std::max(1.0, std::abs(x)));
      }
    }
  }
}

TEST(MakeWindows, CountAndFirstSample) {
  std::vector<double> xs{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const auto ds = make_windows(TimeSeries(xs), 3, 1);
  ASSERT_EQ(ds.size(), 7u);
  const auto s0 = ds[0];
  EXPECT_EQ(std::vector<double>(s0.input.begin(), s0.input.end()), (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(s0.target[0], 4.0);
  EXPECT_EQ(s0.anchor, 3.0);
}

TEST(MakeWindows, TooShort) { EXPECT_THROW(make_windows(TimeSeries({1, 2, 3, 4}), 3, 2), UsageError); }

TEST(MakeWindows, UnitWindowAnchors) {
  const auto ds = make_windows(TimeSeries({5, 6, 7}), 1, 1, {1.0, 0.0, 0.0});
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds[0].anchor, 5.0);
  EXPECT_EQ(ds[1].anchor, 6.0);
}

TEST(MakeWindows, BadFractions) {
  EXPECT_THROW(make_windows(TimeSeries({1, 2, 3, 4}), 1, 1, {0.5, 0.5, 0.5}), UsageError);
}

TEST(MakeWindows, WithoutDropsOneSplit) {
  std::vector<double> xs(40);
  for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = static_cast<double>(i);
  const auto ds = make_windows(TimeSeries(xs), 4, 1);
  const auto cut = ds.without(Split::test);
  EXPECT_EQ(cut.count(Split::test), 0u);
  EXPECT_EQ(cut.count(Split::train), ds.count(Split::train));
  EXPECT_EQ(cut.count(Split::val), ds.count(Split::val));
}

// Count formula, anchor identity and chronological splits over random sizes.
TEST(MakeWindows, InvariantsOverRandomSizes) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t T = 1 + gen() % 12;
    const std::size_t h = 1 + gen() % 6;
    const std::size_t len = T + h + gen() % 80;
    std::vector<double> xs(len);
    for (auto& x : xs) x = static_cast<double>(gen() % 1000) / 7.0;
    const auto ds = make_windows(TimeSeries(xs), T, h, {0.6, 0.2, 0.2});
    ASSERT_EQ(ds.size(), len - T - h + 1);

    int last_rank = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const auto s = ds[i];
      EXPECT_EQ(s.anchor, s.input[T - 1]);
      EXPECT_EQ(s.input[0], xs[s.start]);
      EXPECT_EQ(s.target[h - 1], xs[s.start + T + h - 1]);
      const int rank = static_cast<int>(s.split);
      EXPECT_GE(rank, last_rank) << "splits interleave at sample " << i;
      last_rank = rank;
    }
  }
}
