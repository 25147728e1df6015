#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "mimic/error.hpp"

namespace mimic {

// Univariate real-valued sequence. At least two points, all finite.
class TimeSeries {
 public:
  explicit TimeSeries(std::vector<double> values, std::string name = "value",
                      std::optional<std::string> freq_hint = std::nullopt)
      : values_(std::move(values)), name_(std::move(name)), freq_hint_(std::move(freq_hint)) {
    if (values_.size() < 2) {
      throw UsageError("time series needs at least 2 points, got " + std::to_string(values_.size()));
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i])) {
        throw UsageError("time series value at index " + std::to_string(i) + " is not finite");
      }
    }
  }

  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  const std::string& name() const noexcept { return name_; }
  const std::optional<std::string>& freq_hint() const noexcept { return freq_hint_; }

 private:
  std::vector<double> values_;
  std::string name_;
  std::optional<std::string> freq_hint_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t pos = 0;
  while (true) {
    const auto next = line.find(',', pos);
    cells.push_back(trim(line.substr(pos, next == std::string_view::npos ? next : next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return cells;
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return out;
}

}  // namespace detail

// Column by header name or by zero-based index.
using ColumnSelector = std::variant<std::string, std::size_t>;

struct CsvColumn {
  std::string name;
  std::vector<double> values;
};

// Reads one numeric column from a comma-separated file.
//
// The header row is optional when selecting by index: a first row whose
// selected cell is not numeric is taken as the header. Selecting by name
// requires the header. Blank lines are skipped. Errors report 1-based file
// line numbers.
inline CsvColumn read_csv_column(const std::string& path, const ColumnSelector& column) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open CSV file '" + path + "'");

  CsvColumn out{"value", {}};
  std::optional<std::size_t> col_index;
  if (const auto* idx = std::get_if<std::size_t>(&column)) col_index = *idx;

  std::string line;
  std::size_t line_no = 0;
  bool first_row = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_commas(line);

    if (first_row) {
      first_row = false;
      if (const auto* name = std::get_if<std::string>(&column)) {
        const auto it = std::find(cells.begin(), cells.end(), std::string_view(*name));
        if (it == cells.end()) throw UsageError("column '" + *name + "' not found in header of '" + path + "'");
        col_index = static_cast<std::size_t>(it - cells.begin());
        out.name = *name;
        continue;
      }
      if (*col_index < cells.size() && !detail::parse_double(cells[*col_index])) {
        out.name = std::string(cells[*col_index]);
        continue;
      }
    }

    if (*col_index >= cells.size()) {
      throw UsageError("row " + std::to_string(line_no) + " of '" + path + "' has no column " +
                       std::to_string(*col_index));
    }
    const auto v = detail::parse_double(cells[*col_index]);
    if (!v) {
      throw UsageError("row " + std::to_string(line_no) + " of '" + path + "': non-numeric cell '" +
                       std::string(cells[*col_index]) + "'");
    }
    out.values.push_back(*v);
  }
  if (first_row) throw UsageError("CSV file '" + path + "' is empty");
  return out;
}

inline TimeSeries load_csv(const std::string& path, const ColumnSelector& column) {
  auto col = read_csv_column(path, column);
  return TimeSeries(std::move(col.values), std::move(col.name));
}

enum class NormKind { zscore, minmax, none };

inline std::string to_string(NormKind k) {
  switch (k) {
    case NormKind::zscore: return "zscore";
    case NormKind::minmax: return "minmax";
    case NormKind::none: return "none";
  }
  return "none";
}

inline NormKind parse_norm_kind(std::string_view s) {
  if (s == "zscore") return NormKind::zscore;
  if (s == "minmax") return NormKind::minmax;
  if (s == "none") return NormKind::none;
  throw UsageError("unknown normalization '" + std::string(s) + "' (expected zscore, minmax or none)");
}

// Affine map x -> (x - offset) / scale. For zscore (offset, scale) = (mean, std),
// for minmax (min, max - min), for none (0, 1).
struct Normalizer {
  NormKind kind = NormKind::none;
  double offset = 0.0;
  double scale = 1.0;

  double apply(double x) const { return kind == NormKind::none ? x : (x - offset) / scale; }
  double invert(double y) const { return kind == NormKind::none ? y : y * scale + offset; }

  std::vector<double> apply(std::span<const double> xs) const {
    std::vector<double> out(xs.size());
    std::transform(xs.begin(), xs.end(), out.begin(), [this](double x) { return apply(x); });
    return out;
  }

  TimeSeries apply(const TimeSeries& s) const { return TimeSeries(apply(s.values()), s.name(), s.freq_hint()); }
};

// Fits on the first floor(train_fraction * len) points only.
inline Normalizer fit_normalizer(const TimeSeries& series, double train_fraction, NormKind kind) {
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
    throw UsageError("train_fraction must be in (0, 1], got " + std::to_string(train_fraction));
  }
  if (kind == NormKind::none) return {};

  const auto count = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(series.size())));
  if (count < 2) throw UsageError("normalizer needs at least 2 training points, got " + std::to_string(count));
  const auto train = series.values().first(count);

  if (kind == NormKind::zscore) {
    double mean = 0.0;
    for (double x : train) mean += x;
    mean /= static_cast<double>(count);
    double var = 0.0;
    for (double x : train) var += (x - mean) * (x - mean);
    const double sd = std::sqrt(var / static_cast<double>(count));
    if (!(sd > 0.0)) throw UsageError("zscore normalizer: training values have zero variance");
    return {NormKind::zscore, mean, sd};
  }

  const auto [lo, hi] = std::minmax_element(train.begin(), train.end());
  if (!(*hi > *lo)) throw UsageError("minmax normalizer: training values have min == max");
  return {NormKind::minmax, *lo, *hi - *lo};
}

enum class Split { train, val, test };

inline std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "train";
}

struct SplitFractions {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
};

// View of one supervised sample. anchor is the last input value, the z0 that
// precedes the first target.
struct Sample {
  std::size_t start;
  std::span<const double> input;
  std::span<const double> target;
  double anchor;
  Split split;
};

// Stride-1 supervised windows over a series, tagged with chronological splits.
class WindowedDataset {
 public:
  WindowedDataset(std::vector<double> values, std::size_t input_len, std::size_t horizon,
                  std::vector<std::size_t> starts, std::vector<Split> splits)
      : values_(std::move(values)),
        input_len_(input_len),
        horizon_(horizon),
        starts_(std::move(starts)),
        splits_(std::move(splits)) {}

  std::size_t size() const noexcept { return starts_.size(); }
  std::size_t input_len() const noexcept { return input_len_; }
  std::size_t horizon() const noexcept { return horizon_; }
  std::span<const double> values() const noexcept { return values_; }

  Sample operator[](std::size_t i) const {
    const std::size_t s = starts_[i];
    const auto all = std::span<const double>(values_);
    return Sample{s, all.subspan(s, input_len_), all.subspan(s + input_len_, horizon_),
                  values_[s + input_len_ - 1], splits_[i]};
  }

  std::vector<std::size_t> indices(Split which) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < splits_.size(); ++i) {
      if (splits_[i] == which) out.push_back(i);
    }
    return out;
  }

  std::size_t count(Split which) const {
    return static_cast<std::size_t>(std::count(splits_.begin(), splits_.end(), which));
  }

  // Same dataset with every sample of one split removed.
  WindowedDataset without(Split which) const {
    std::vector<std::size_t> starts;
    std::vector<Split> splits;
    for (std::size_t i = 0; i < size(); ++i) {
      if (splits_[i] == which) continue;
      starts.push_back(starts_[i]);
      splits.push_back(splits_[i]);
    }
    return WindowedDataset(values_, input_len_, horizon_, std::move(starts), std::move(splits));
  }

 private:
  std::vector<double> values_;
  std::size_t input_len_;
  std::size_t horizon_;
  std::vector<std::size_t> starts_;
  std::vector<Split> splits_;
};

// Sample i has input x[i, i+T), target x[i+T, i+T+h), anchor x[i+T-1].
// The first floor(N * train) samples are train, the next floor(N * val) are
// val, and the remainder test.
inline WindowedDataset make_windows(const TimeSeries& series, std::size_t input_len, std::size_t horizon,
                                   SplitFractions fractions = {}) {
  if (input_len == 0 || horizon == 0) throw UsageError("window length and horizon must be positive");
  if (series.size() < input_len + horizon) {
    throw UsageError("series too short: length " + std::to_string(series.size()) + " < T + h = " +
                     std::to_string(input_len + horizon));
  }
  const double sum = fractions.train + fractions.val + fractions.test;
  if (fractions.train < 0 || fractions.val < 0 || fractions.test < 0 || std::abs(sum - 1.0) > 1e-9) {
    throw UsageError("split fractions must be nonnegative and sum to 1");
  }

  const std::size_t n = series.size() - input_len - horizon + 1;
  const auto n_train = static_cast<std::size_t>(std::floor(fractions.train * static_cast<double>(n)));
  const auto n_val = std::min(n - n_train, static_cast<std::size_t>(std::floor(fractions.val * static_cast<double>(n))));

  std::vector<std::size_t> starts(n);
  std::vector<Split> splits(n);
  for (std::size_t i = 0; i < n; ++i) {
    starts[i] = i;
    splits[i] = i < n_train ? Split::train : (i < n_train + n_val ? Split::val : Split::test);
  }
  const auto v = series.values();
  return WindowedDataset(std::vector<double>(v.begin(), v.end()), input_len, horizon, std::move(starts),
                         std::move(splits));
}

}  // namespace mimic
