// Copyright 2026 The DSI Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <variant>
#include <vector>

#include "dsi/errors.hpp"

namespace dsi {

using ClassId = std::size_t;

/// n points in d dimensions with dense class ids 0..k-1.
///
/// Points are stored row-major as 64-bit reals. Class ids that no row uses are
/// dropped at construction and the remaining ids are compacted, keeping the
/// relative order of `class_names`. Instances are immutable.
class LabeledDataset {
 public:
  LabeledDataset(std::vector<double> points, std::size_t dims, std::vector<ClassId> labels,
                 std::vector<std::string> class_names)
      : points_(std::move(points)), dims_(dims), labels_(std::move(labels)) {
    if (dims_ == 0) throw ValidationError("dataset needs at least one feature column");
    if (labels_.empty()) throw ValidationError("empty dataset");
    if (points_.size() != labels_.size() * dims_) {
      throw ValidationError("point matrix size does not match labels x dims");
    }
    for (std::size_t i = 0; i < points_.size(); ++i) {
      if (!std::isfinite(points_[i])) {
        throw ValidationError("non-finite value at row " + std::to_string(i / dims_) +
                              ", column " + std::to_string(i % dims_));
      }
    }

    std::vector<std::size_t> used(class_names.size(), 0);
    for (ClassId l : labels_) {
      if (l >= class_names.size()) throw ValidationError("label id out of range of class names");
      ++used[l];
    }
    std::vector<ClassId> remap(class_names.size(), 0);
    for (std::size_t c = 0; c < class_names.size(); ++c) {
      if (used[c] == 0) continue;
      remap[c] = class_names_.size();
      class_names_.push_back(std::move(class_names[c]));
    }
    class_index_.resize(class_names_.size());
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      labels_[i] = remap[labels_[i]];
      class_index_[labels_[i]].push_back(i);
    }
  }

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t dims() const noexcept { return dims_; }
  std::size_t class_count() const noexcept { return class_names_.size(); }

  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(points_).subspan(i * dims_, dims_);
  }
  std::span<const double> values() const noexcept { return points_; }

  ClassId label(std::size_t i) const { return labels_.at(i); }
  std::span<const ClassId> labels() const noexcept { return labels_; }

  /// Row indices of class `c`, ascending.
  std::span<const std::size_t> class_rows(ClassId c) const { return class_index_.at(c); }
  const std::string& class_name(ClassId c) const { return class_names_.at(c); }
  std::span<const std::string> class_names() const noexcept { return class_names_; }

  /// Rows in the given order; classes left without rows are dropped.
  LabeledDataset select_rows(std::span<const std::size_t> rows) const {
    std::vector<double> pts;
    pts.reserve(rows.size() * dims_);
    std::vector<ClassId> labs;
    labs.reserve(rows.size());
    for (std::size_t r : rows) {
      if (r >= size()) throw ValidationError("row index out of range");
      auto src = row(r);
      pts.insert(pts.end(), src.begin(), src.end());
      labs.push_back(labels_[r]);
    }
    return LabeledDataset(std::move(pts), dims_, std::move(labs), class_names_);
  }

  friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;

 private:
  std::vector<double> points_;
  std::size_t dims_;
  std::vector<ClassId> labels_;
  std::vector<std::string> class_names_;
  std::vector<std::vector<std::size_t>> class_index_;
};

// ---------------------------------------------------------------------------
// CSV

/// Label column selected by header name or zero-based index. A name that is
/// not in the header but reads as an integer is taken as an index.
using ColumnRef = std::variant<std::size_t, std::string>;

struct CsvOptions {
  ColumnRef label_column = std::string("label");
  bool has_header = true;
  char delimiter = ',';
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
}

/// Non-negative decimal integer, or nullopt.
inline std::optional<std::size_t> parse_index(std::string_view s) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

}  // namespace detail

/// Parses CSV text. Labels are remapped to dense ids in first-appearance order.
inline LabeledDataset parse_csv(std::istream& in, const CsvOptions& opts = {},
                                const std::string& source = "<stream>") {
  std::string line;
  std::size_t line_no = 0;
  std::size_t label_col = 0;
  std::size_t columns = 0;

  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (!detail::trim(line).empty()) return true;
    }
    return false;
  };

  if (opts.has_header) {
    if (!next_line()) throw IngestError(source + ": empty dataset");
    const auto header = detail::split(line, opts.delimiter);
    columns = header.size();
    if (const auto* name = std::get_if<std::string>(&opts.label_column)) {
      auto it = std::find(header.begin(), header.end(), std::string_view(*name));
      if (it != header.end()) {
        label_col = static_cast<std::size_t>(std::distance(header.begin(), it));
      } else if (auto idx = detail::parse_index(*name)) {
        label_col = *idx;
      } else {
        throw IngestError(source + ": label column '" + *name + "' absent");
      }
    } else {
      label_col = std::get<std::size_t>(opts.label_column);
    }
  } else {
    if (const auto* name = std::get_if<std::string>(&opts.label_column)) {
      const auto idx = detail::parse_index(*name);
      if (!idx) throw IngestError(source + ": label column '" + *name + "' absent (file has no header)");
      label_col = *idx;
    } else {
      label_col = std::get<std::size_t>(opts.label_column);
    }
  }

  std::vector<double> points;
  std::vector<ClassId> labels;
  std::vector<std::string> names;

  while (next_line()) {
    const auto cells = detail::split(line, opts.delimiter);
    if (columns == 0) columns = cells.size();
    if (label_col >= columns) {
      throw IngestError(source + ": label column index " + std::to_string(label_col) + " absent");
    }
    if (cells.size() != columns) {
      throw IngestError(source + ": row " + std::to_string(line_no) + " has " +
                        std::to_string(cells.size()) + " cells, expected " + std::to_string(columns));
    }
    if (columns < 2) throw IngestError(source + ": no feature columns");
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c == label_col) {
        auto it = std::find(names.begin(), names.end(), cells[c]);
        labels.push_back(static_cast<ClassId>(std::distance(names.begin(), it)));
        if (it == names.end()) names.emplace_back(cells[c]);
        continue;
      }
      const std::string_view cell = cells[c];
      double v = 0.0;
      const char* first = cell.data();
      if (!cell.empty() && *first == '+') ++first;
      auto [ptr, ec] = std::from_chars(first, cell.data() + cell.size(), v);
      const std::string where = " at row " + std::to_string(line_no) + ", column " + std::to_string(c);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw IngestError(source + ": unparsable cell '" + std::string(cell) + "'" + where);
      }
      if (!std::isfinite(v)) {
        throw IngestError(source + ": non-finite value '" + std::string(cell) + "'" + where);
      }
      points.push_back(v);
    }
  }
  if (labels.empty()) throw IngestError(source + ": empty dataset");
  return LabeledDataset(std::move(points), columns - 1, std::move(labels), std::move(names));
}

inline LabeledDataset load_csv(const std::filesystem::path& path, const CsvOptions& opts = {}) {
  std::ifstream in(path);
  if (!in) throw IngestError(path.string() + ": cannot open file");
  return parse_csv(in, opts, path.string());
}

/// Writes `x0,...,x{d-1},label` with shortest round-trip number formatting.
inline void write_csv(std::ostream& out, const LabeledDataset& data, char delim = ',') {
  for (std::size_t j = 0; j < data.dims(); ++j) out << 'x' << j << delim;
  out << "label\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.row(i)) out << detail::format_double(v) << delim;
    out << data.class_name(data.label(i)) << '\n';
  }
}

inline void write_csv(const std::filesystem::path& path, const LabeledDataset& data, char delim = ',') {
  std::ofstream out(path);
  if (!out) throw IngestError(path.string() + ": cannot open for writing");
  write_csv(out, data, delim);
  if (!out) throw IngestError(path.string() + ": write failed");
}

// ---------------------------------------------------------------------------
// CIFAR-10 binary

inline constexpr std::size_t kCifarImageBytes = 3072;
inline constexpr std::size_t kCifarRecordBytes = kCifarImageBytes + 1;
inline constexpr std::array<const char*, 10> kCifarClassNames = {
    "airplane", "automobile", "bird", "cat", "deer", "dog", "frog", "horse", "ship", "truck"};

/// Reads CIFAR-10 binary batches: records of one label byte followed by
/// 1024 R, 1024 G and 1024 B bytes. Pixels are widened to doubles in [0,255].
/// Batches are concatenated in argument order.
inline LabeledDataset load_cifar10_binary(std::span<const std::filesystem::path> paths) {
  if (paths.empty()) throw IngestError("no CIFAR-10 batch files given");
  std::vector<double> points;
  std::vector<ClassId> labels;
  for (const auto& path : paths) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError(path.string() + ": cannot open file");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() % kCifarRecordBytes != 0) {
      throw IngestError(path.string() + ": malformed record (file size " + std::to_string(bytes.size()) +
                        " is not a multiple of " + std::to_string(kCifarRecordBytes) + ")");
    }
    const std::size_t records = bytes.size() / kCifarRecordBytes;
    points.reserve(points.size() + records * kCifarImageBytes);
    for (std::size_t r = 0; r < records; ++r) {
      const unsigned char* rec = bytes.data() + r * kCifarRecordBytes;
      if (rec[0] > 9) {
        throw IngestError(path.string() + ": record " + std::to_string(r) + " has label byte " +
                          std::to_string(rec[0]) + " > 9");
      }
      labels.push_back(rec[0]);
      for (std::size_t p = 1; p < kCifarRecordBytes; ++p) points.push_back(static_cast<double>(rec[p]));
    }
  }
  if (labels.empty()) throw IngestError("empty dataset");
  return LabeledDataset(std::move(points), kCifarImageBytes, std::move(labels),
                        std::vector<std::string>(kCifarClassNames.begin(), kCifarClassNames.end()));
}

// ---------------------------------------------------------------------------
// Subsampling

/// Either a fraction in (0,1] of the rows or an absolute row count.
struct SubsampleConfig {
  std::variant<double, std::size_t> amount = 1.0;
  std::size_t trials = 1;
  std::uint64_t seed = 0;

  /// Fractions resolve to round(fraction * n).
  std::size_t resolve_count(std::size_t n) const {
    if (const auto* f = std::get_if<double>(&amount)) {
      if (!(*f > 0.0 && *f <= 1.0)) throw ValidationError("subsample fraction must lie in (0,1]");
      return static_cast<std::size_t>(std::llround(*f * static_cast<double>(n)));
    }
    return std::get<std::size_t>(amount);
  }

  friend bool operator==(const SubsampleConfig&, const SubsampleConfig&) = default;
};

namespace detail {

/// Unbiased integer in [0, bound) by rejection; independent of the standard
/// library's distribution implementation.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = 0;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

}  // namespace detail

/// Uniform selection without replacement over all rows (not stratified).
/// Selected rows keep their original order. Deterministic in (seed, trial_index).
inline LabeledDataset subsample(const LabeledDataset& data, const SubsampleConfig& cfg,
                                std::size_t trial_index) {
  if (cfg.trials < 1) throw ValidationError("subsample trials must be >= 1");
  if (trial_index >= cfg.trials) throw ValidationError("trial index out of range");
  const std::size_t n = data.size();
  const std::size_t count = cfg.resolve_count(n);
  if (count < 2) throw ValidationError("subsample count must be >= 2");
  if (count > n) {
    throw ValidationError("subsample count " + std::to_string(count) + " exceeds dataset size " +
                          std::to_string(n));
  }

  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                    static_cast<std::uint32_t>(trial_index),
                    static_cast<std::uint32_t>(static_cast<std::uint64_t>(trial_index) >> 32)};
  std::mt19937_64 rng(seq);
  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = i;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(detail::uniform_below(rng, n - i));
    std::swap(rows[i], rows[j]);
  }
  rows.resize(count);
  std::sort(rows.begin(), rows.end());
  return data.select_rows(rows);
}

}  // namespace dsi
