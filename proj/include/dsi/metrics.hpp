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
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "dsi/dataset.hpp"
#include "dsi/errors.hpp"
#include "dsi/parallel.hpp"

namespace dsi {

enum class MetricKind { Euclidean, CityBlock, Chebyshev, Cosine, Correlation, Mahalanobis };

inline constexpr std::array<MetricKind, 6> kAllMetrics = {
    MetricKind::Euclidean, MetricKind::CityBlock,   MetricKind::Chebyshev,
    MetricKind::Cosine,    MetricKind::Correlation, MetricKind::Mahalanobis};

inline std::string_view to_string(MetricKind k) {
  switch (k) {
    case MetricKind::Euclidean: return "euclidean";
    case MetricKind::CityBlock: return "cityblock";
    case MetricKind::Chebyshev: return "chebyshev";
    case MetricKind::Cosine: return "cosine";
    case MetricKind::Correlation: return "correlation";
    case MetricKind::Mahalanobis: return "mahalanobis";
  }
  return "?";
}

inline MetricKind parse_metric(std::string_view name) {
  for (MetricKind k : kAllMetrics) {
    if (to_string(k) == name) return k;
  }
  if (name == "l2") return MetricKind::Euclidean;
  if (name == "l1" || name == "manhattan") return MetricKind::CityBlock;
  if (name == "linf") return MetricKind::Chebyshev;
  throw ValidationError("unknown metric '" + std::string(name) + "'");
}

/// Condition number above which a covariance estimate is rejected as singular.
inline constexpr double kMaxCovarianceCondition = 1e12;

/// A point-to-point metric plus its state.
///
/// A Mahalanobis spec may be created without a matrix; the DSI entry points
/// then estimate the pooled covariance of the data they are given. Direct
/// distance evaluation requires the matrix.
class MetricSpec {
 public:
  MetricSpec() = default;
  explicit MetricSpec(MetricKind kind) : kind_(kind) {}

  /// Validates that `inverse_covariance` is symmetric positive definite.
  static MetricSpec mahalanobis(const Eigen::MatrixXd& inverse_covariance) {
    if (inverse_covariance.rows() == 0 || inverse_covariance.rows() != inverse_covariance.cols()) {
      throw ValidationError("Mahalanobis inverse covariance must be a non-empty square matrix");
    }
    const double scale = std::max(1.0, inverse_covariance.cwiseAbs().maxCoeff());
    if (!inverse_covariance.isApprox(inverse_covariance.transpose(), 1e-10) &&
        (inverse_covariance - inverse_covariance.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
      throw NumericError("Mahalanobis inverse covariance is not symmetric");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(inverse_covariance);
    if (llt.info() != Eigen::Success) {
      throw NumericError("Mahalanobis inverse covariance is not positive definite");
    }
    MetricSpec spec(MetricKind::Mahalanobis);
    spec.inverse_covariance_ = std::make_shared<const Eigen::MatrixXd>(inverse_covariance);
    // S^-1 = L L^T, so (a-b)^T S^-1 (a-b) = |L^T a - L^T b|^2.
    spec.whitening_ = std::make_shared<const Eigen::MatrixXd>(llt.matrixU());
    return spec;
  }

  /// Pooled covariance of all rows (denominator n-1), inverted once.
  static MetricSpec mahalanobis_pooled(const LabeledDataset& data) {
    const std::size_t n = data.size();
    const std::size_t d = data.dims();
    if (n < 2) throw NumericError("singular covariance: need at least 2 points");
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x(
        data.values().data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    const Eigen::RowVectorXd mean = x.colwise().mean();
    const Eigen::MatrixXd centered = x.rowwise() - mean;
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) throw NumericError("singular covariance: eigensolver failed");
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > kMaxCovarianceCondition) {
      throw NumericError("singular covariance (condition number guard)");
    }
    const Eigen::MatrixXd inv = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
                                eig.eigenvectors().transpose();
    return mahalanobis(0.5 * (inv + inv.transpose()));
  }

  MetricKind kind() const noexcept { return kind_; }
  bool has_inverse_covariance() const noexcept { return inverse_covariance_ != nullptr; }
  const Eigen::MatrixXd& inverse_covariance() const {
    if (!inverse_covariance_) throw ValidationError("Mahalanobis metric has no covariance");
    return *inverse_covariance_;
  }
  /// Upper-triangular W with W^T W = S^-1.
  const Eigen::MatrixXd& whitening() const {
    if (!whitening_) throw ValidationError("Mahalanobis metric has no covariance");
    return *whitening_;
  }

 private:
  MetricKind kind_ = MetricKind::Euclidean;
  std::shared_ptr<const Eigen::MatrixXd> inverse_covariance_;
  std::shared_ptr<const Eigen::MatrixXd> whitening_;
};

// ---------------------------------------------------------------------------
// Kernels

namespace detail {

// Four independent accumulators; fixed association order keeps results
// reproducible while letting the compiler vectorize.
inline double sum_sq_diff(const double* a, const double* b, std::size_t d) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::size_t k = 0;
  for (; k + 4 <= d; k += 4) {
    const double t0 = a[k] - b[k], t1 = a[k + 1] - b[k + 1];
    const double t2 = a[k + 2] - b[k + 2], t3 = a[k + 3] - b[k + 3];
    s0 += t0 * t0;
    s1 += t1 * t1;
    s2 += t2 * t2;
    s3 += t3 * t3;
  }
  for (; k < d; ++k) {
    const double t = a[k] - b[k];
    s0 += t * t;
  }
  return (s0 + s1) + (s2 + s3);
}

inline double sum_abs_diff(const double* a, const double* b, std::size_t d) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::size_t k = 0;
  for (; k + 4 <= d; k += 4) {
    s0 += std::abs(a[k] - b[k]);
    s1 += std::abs(a[k + 1] - b[k + 1]);
    s2 += std::abs(a[k + 2] - b[k + 2]);
    s3 += std::abs(a[k + 3] - b[k + 3]);
  }
  for (; k < d; ++k) s0 += std::abs(a[k] - b[k]);
  return (s0 + s1) + (s2 + s3);
}

inline double max_abs_diff(const double* a, const double* b, std::size_t d) {
  double m = 0;
  for (std::size_t k = 0; k < d; ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

inline double dot(const double* a, const double* b, std::size_t d) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::size_t k = 0;
  for (; k + 4 <= d; k += 4) {
    s0 += a[k] * b[k];
    s1 += a[k + 1] * b[k + 1];
    s2 += a[k + 2] * b[k + 2];
    s3 += a[k + 3] * b[k + 3];
  }
  for (; k < d; ++k) s0 += a[k] * b[k];
  return (s0 + s1) + (s2 + s3);
}

}  // namespace detail

/// Points transformed once per metric so that every pair costs one pass:
/// centered rows for Correlation, whitened rows for Mahalanobis, and cached
/// squared norms for the angular metrics.
class PreparedPoints {
 public:
  PreparedPoints(const LabeledDataset& data, const MetricSpec& metric)
      : kind_(metric.kind()), n_(data.size()), dims_(data.dims()) {
    const auto src = data.values();
    switch (kind_) {
      case MetricKind::Mahalanobis: {
        const auto& w = metric.whitening();
        if (static_cast<std::size_t>(w.rows()) != dims_) {
          throw ValidationError("Mahalanobis covariance dimension " + std::to_string(w.rows()) +
                                " does not match data dimension " + std::to_string(dims_));
        }
        values_.resize(src.size());
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x(
            src.data(), static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(dims_));
        Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> y(
            values_.data(), static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(dims_));
        y.noalias() = x * w.transpose();
        break;
      }
      case MetricKind::Correlation:
        values_.assign(src.begin(), src.end());
        for (std::size_t i = 0; i < n_; ++i) {
          double* r = values_.data() + i * dims_;
          double mean = 0;
          for (std::size_t k = 0; k < dims_; ++k) mean += r[k];
          mean /= static_cast<double>(dims_);
          for (std::size_t k = 0; k < dims_; ++k) r[k] -= mean;
        }
        break;
      default:
        values_.assign(src.begin(), src.end());
    }
    if (kind_ == MetricKind::Cosine || kind_ == MetricKind::Correlation) {
      sq_norms_.resize(n_);
      for (std::size_t i = 0; i < n_; ++i) {
        const double* r = row(i);
        sq_norms_[i] = detail::dot(r, r, dims_);
        if (!(sq_norms_[i] > 0.0)) {
          throw NumericError(std::string(kind_ == MetricKind::Cosine ? "zero-norm" : "zero-variance") +
                             " vector at row " + std::to_string(i) + " under " +
                             std::string(to_string(kind_)) + " metric");
        }
      }
    }
  }

  std::size_t size() const noexcept { return n_; }
  std::size_t dims() const noexcept { return dims_; }
  MetricKind kind() const noexcept { return kind_; }
  const double* row(std::size_t i) const noexcept { return values_.data() + i * dims_; }

  double distance(std::size_t i, std::size_t j) const noexcept {
    const double* a = row(i);
    const double* b = row(j);
    switch (kind_) {
      case MetricKind::Euclidean:
      case MetricKind::Mahalanobis: return std::sqrt(detail::sum_sq_diff(a, b, dims_));
      case MetricKind::CityBlock: return detail::sum_abs_diff(a, b, dims_);
      case MetricKind::Chebyshev: return detail::max_abs_diff(a, b, dims_);
      case MetricKind::Cosine:
      case MetricKind::Correlation: {
        const double sim = detail::dot(a, b, dims_) / std::sqrt(sq_norms_[i] * sq_norms_[j]);
        return std::max(0.0, 1.0 - sim);
      }
    }
    return 0.0;
  }

 private:
  MetricKind kind_;
  std::size_t n_;
  std::size_t dims_;
  std::vector<double> values_;
  std::vector<double> sq_norms_;
};

/// Distance between two vectors. Cosine is 1 - cos(angle); Correlation is
/// 1 - Pearson correlation; Mahalanobis is sqrt((a-b)^T S^-1 (a-b)).
inline double point_distance(std::span<const double> a, std::span<const double> b,
                             const MetricSpec& metric = {}) {
  if (a.size() != b.size()) {
    throw ValidationError("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()));
  }
  if (a.empty()) throw ValidationError("vectors must have at least one dimension");
  if (metric.kind() == MetricKind::Mahalanobis && !metric.has_inverse_covariance()) {
    throw ValidationError("Mahalanobis metric requires an inverse covariance matrix");
  }
  std::vector<double> pts(a.begin(), a.end());
  pts.insert(pts.end(), b.begin(), b.end());
  const LabeledDataset pair(std::move(pts), a.size(), {0, 1}, {"a", "b"});
  return PreparedPoints(pair, metric).distance(0, 1);
}

// ---------------------------------------------------------------------------
// Distance samples

/// Which distance multiset a sample holds.
struct SampleSource {
  enum class Kind : std::uint8_t { Unspecified = 0, Icd = 1, BcdVsRest = 2, BcdPair = 3 };
  Kind kind = Kind::Unspecified;
  ClassId first = 0;
  ClassId second = 0;

  static SampleSource icd(ClassId c) { return {Kind::Icd, c, c}; }
  static SampleSource bcd_vs_rest(ClassId c) { return {Kind::BcdVsRest, c, c}; }
  static SampleSource bcd_pair(ClassId a, ClassId b) { return {Kind::BcdPair, a, b}; }

  std::string describe() const {
    switch (kind) {
      case Kind::Icd: return "ICD(" + std::to_string(first) + ")";
      case Kind::BcdVsRest: return "BCD(" + std::to_string(first) + " vs rest)";
      case Kind::BcdPair: return "BCD(" + std::to_string(first) + "," + std::to_string(second) + ")";
      default: return "sample";
    }
  }
  friend bool operator==(const SampleSource&, const SampleSource&) = default;
};

/// Sorted multiset of finite, non-negative distances.
class DistanceSample {
 public:
  DistanceSample() = default;
  explicit DistanceSample(std::vector<double> values, SampleSource source = {})
      : values_(std::move(values)), source_(source) {
    for (double v : values_) {
      if (!std::isfinite(v) || v < 0.0) throw NumericError("distance sample values must be finite and >= 0");
    }
    std::sort(values_.begin(), values_.end());
  }

  std::span<const double> values() const noexcept { return values_; }
  std::size_t count() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  const SampleSource& source() const noexcept { return source_; }

  friend bool operator==(const DistanceSample&, const DistanceSample&) = default;

 private:
  std::vector<double> values_;
  SampleSource source_;
};

/// Row-chunk size for the pairwise kernels.
inline constexpr std::size_t kPairRowGrain = 16;
/// Column tile size; keeps a tile of rows cache-resident for high-d data.
inline constexpr std::size_t kPairColTile = 64;

/// All unordered pairs within `rows`; m(m-1)/2 values in sorted order.
/// Each row chunk writes a fixed slice, so the output is independent of the
/// thread count.
inline DistanceSample icd_set(const PreparedPoints& pts, std::span<const std::size_t> rows,
                              SampleSource source, std::size_t threads = 0) {
  const std::size_t m = rows.size();
  std::vector<double> out(m < 2 ? 0 : m * (m - 1) / 2);
  parallel_for_chunks(m, kPairRowGrain, threads, [&](std::size_t i0, std::size_t i1) {
    for (std::size_t j0 = i0 + 1; j0 < m; j0 += kPairColTile) {
      const std::size_t j1 = std::min(m, j0 + kPairColTile);
      for (std::size_t i = i0; i < i1; ++i) {
        const std::size_t offset = i * (m - 1) - i * (i - 1) / 2;
        for (std::size_t j = std::max(j0, i + 1); j < j1; ++j) {
          out[offset + (j - i - 1)] = pts.distance(rows[i], rows[j]);
        }
      }
    }
  });
  return DistanceSample(std::move(out), source);
}

/// Every pair (a, b) with a in `rows_a`, b in `rows_b`; |a|*|b| values.
inline DistanceSample bcd_set(const PreparedPoints& pts, std::span<const std::size_t> rows_a,
                              std::span<const std::size_t> rows_b, SampleSource source,
                              std::size_t threads = 0) {
  const std::size_t ma = rows_a.size();
  const std::size_t mb = rows_b.size();
  std::vector<double> out(ma * mb);
  parallel_for_chunks(ma, kPairRowGrain, threads, [&](std::size_t i0, std::size_t i1) {
    for (std::size_t j0 = 0; j0 < mb; j0 += kPairColTile) {
      const std::size_t j1 = std::min(mb, j0 + kPairColTile);
      for (std::size_t i = i0; i < i1; ++i) {
        for (std::size_t j = j0; j < j1; ++j) out[i * mb + j] = pts.distance(rows_a[i], rows_b[j]);
      }
    }
  });
  return DistanceSample(std::move(out), source);
}

/// Rows of every class other than `c`, ascending.
inline std::vector<std::size_t> complement_rows(const LabeledDataset& data, ClassId c) {
  std::vector<std::size_t> rows;
  rows.reserve(data.size() - data.class_rows(c).size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.label(i) != c) rows.push_back(i);
  }
  return rows;
}

namespace detail {

inline void require_class(const LabeledDataset& data, ClassId c) {
  if (c >= data.class_count()) throw ValidationError("class " + std::to_string(c) + " absent");
}

}  // namespace detail

/// Intra-class distance multiset of class `c`.
inline DistanceSample icd_set(const LabeledDataset& data, ClassId c, const MetricSpec& metric = {},
                              std::size_t threads = 0) {
  detail::require_class(data, c);
  if (data.class_rows(c).size() < 2) {
    throw ValidationError("ICD undefined for singleton class " + std::to_string(c));
  }
  return icd_set(PreparedPoints(data, metric), data.class_rows(c), SampleSource::icd(c), threads);
}

/// Between-class distance multiset of class `c` against all other classes pooled.
inline DistanceSample bcd_set(const LabeledDataset& data, ClassId c, const MetricSpec& metric = {},
                              std::size_t threads = 0) {
  detail::require_class(data, c);
  const auto rest = complement_rows(data, c);
  if (rest.empty()) throw ValidationError("BCD undefined: empty complement (single-class dataset)");
  return bcd_set(PreparedPoints(data, metric), data.class_rows(c), rest, SampleSource::bcd_vs_rest(c),
                 threads);
}

// ---------------------------------------------------------------------------
// Spill format: the magic "DSIDIST1", then little-endian u64 fields (source
// kind, first class, second class, count), then `count` float64 values.

inline constexpr std::array<char, 8> kSampleMagic = {'D', 'S', 'I', 'D', 'I', 'S', 'T', '1'};

namespace detail {

inline void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> b{};
  for (int k = 0; k < 8; ++k) b[k] = static_cast<char>((v >> (8 * k)) & 0xff);
  out.write(b.data(), 8);
}

inline std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> b{};
  in.read(reinterpret_cast<char*>(b.data()), 8);
  if (!in) throw IngestError("truncated distance sample file");
  std::uint64_t v = 0;
  for (int k = 7; k >= 0; --k) v = (v << 8) | b[k];
  return v;
}

}  // namespace detail

inline void write_sample(const std::filesystem::path& path, const DistanceSample& sample) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestError(path.string() + ": cannot open for writing");
  out.write(kSampleMagic.data(), kSampleMagic.size());
  detail::put_u64(out, static_cast<std::uint64_t>(sample.source().kind));
  detail::put_u64(out, sample.source().first);
  detail::put_u64(out, sample.source().second);
  detail::put_u64(out, sample.count());
  for (double v : sample.values()) detail::put_u64(out, std::bit_cast<std::uint64_t>(v));
  if (!out) throw IngestError(path.string() + ": write failed");
}

inline DistanceSample read_sample(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError(path.string() + ": cannot open file");
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kSampleMagic) throw IngestError(path.string() + ": not a distance sample file");
  SampleSource src;
  const auto kind = detail::get_u64(in);
  if (kind > 3) throw IngestError(path.string() + ": unknown sample source kind");
  src.kind = static_cast<SampleSource::Kind>(kind);
  src.first = detail::get_u64(in);
  src.second = detail::get_u64(in);
  const auto count = detail::get_u64(in);
  std::vector<double> values;
  values.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) values.push_back(std::bit_cast<double>(detail::get_u64(in)));
  return DistanceSample(std::move(values), src);
}

}  // namespace dsi
