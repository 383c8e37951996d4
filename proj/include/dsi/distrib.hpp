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
#include <cmath>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "dsi/errors.hpp"
#include "dsi/metrics.hpp"

namespace dsi {

/// Right-continuous empirical CDF of a sorted sample.
class Ecdf {
 public:
  explicit Ecdf(std::span<const double> sorted) {
    if (sorted.empty()) throw ValidationError("ECDF of an empty sample");
    if (!std::is_sorted(sorted.begin(), sorted.end())) throw ValidationError("ECDF input must be sorted");
    const double n = static_cast<double>(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
      support_.push_back(sorted[i]);
      cumulative_.push_back(static_cast<double>(i + 1) / n);
    }
  }
  explicit Ecdf(const DistanceSample& s) : Ecdf(s.values()) {}

  /// Fraction of the sample that is <= x.
  double operator()(double x) const {
    const auto it = std::upper_bound(support_.begin(), support_.end(), x);
    if (it == support_.begin()) return 0.0;
    return cumulative_[static_cast<std::size_t>(it - support_.begin()) - 1];
  }

  std::span<const double> support() const noexcept { return support_; }
  std::span<const double> cumulative() const noexcept { return cumulative_; }

 private:
  std::vector<double> support_;
  std::vector<double> cumulative_;
};

namespace detail {

inline void require_nonempty(std::span<const double> p, std::span<const double> q) {
  if (p.empty() || q.empty()) throw ValidationError("divergence of an empty sample");
}

/// Walks the merged jump points of two sorted samples. At each distinct value
/// x, both cursors are advanced past every copy of x before `visit(x, Fp, Fq)`
/// is called, so both ECDFs are evaluated right-continuously at shared ties.
template <typename Visit>
void merge_sweep(std::span<const double> p, std::span<const double> q, Visit&& visit) {
  const double np = static_cast<double>(p.size());
  const double nq = static_cast<double>(q.size());
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < p.size() || j < q.size()) {
    double x = 0;
    if (j >= q.size() || (i < p.size() && p[i] <= q[j])) {
      x = p[i];
    } else {
      x = q[j];
    }
    while (i < p.size() && p[i] == x) ++i;
    while (j < q.size() && q[j] == x) ++j;
    visit(x, static_cast<double>(i) / np, static_cast<double>(j) / nq);
  }
}

}  // namespace detail

/// Two-sample Kolmogorov-Smirnov statistic sup_x |F_p(x) - F_q(x)| of sorted
/// samples. Statistic only; no p-value.
inline double ks_distance(std::span<const double> p, std::span<const double> q) {
  detail::require_nonempty(p, q);
  double sup = 0.0;
  detail::merge_sweep(p, q, [&](double, double fp, double fq) { sup = std::max(sup, std::abs(fp - fq)); });
  return sup;
}

/// W1 = integral |F_p - F_q| dx of sorted samples.
inline double wasserstein_distance(std::span<const double> p, std::span<const double> q) {
  detail::require_nonempty(p, q);
  double area = 0.0;
  double prev_x = 0.0;
  double prev_gap = 0.0;
  bool first = true;
  detail::merge_sweep(p, q, [&](double x, double fp, double fq) {
    if (!first) area += prev_gap * (x - prev_x);
    first = false;
    prev_x = x;
    prev_gap = std::abs(fp - fq);
  });
  return area;
}

/// W1 divided by the range of the union of both samples; 0 when that range is 0.
inline double normalized_wasserstein(std::span<const double> p, std::span<const double> q) {
  detail::require_nonempty(p, q);
  const double lo = std::min(p.front(), q.front());
  const double hi = std::max(p.back(), q.back());
  if (!(hi > lo)) return 0.0;
  return std::min(1.0, wasserstein_distance(p, q) / (hi - lo));
}

inline double ks_distance(const DistanceSample& p, const DistanceSample& q) {
  return ks_distance(p.values(), q.values());
}
inline double wasserstein_distance(const DistanceSample& p, const DistanceSample& q) {
  return wasserstein_distance(p.values(), q.values());
}
inline double normalized_wasserstein(const DistanceSample& p, const DistanceSample& q) {
  return normalized_wasserstein(p.values(), q.values());
}

/// Divergence used to compare an ICD sample with its BCD sample.
enum class Divergence { KS, WassersteinNormalized };

inline std::string_view to_string(Divergence d) {
  return d == Divergence::KS ? "ks" : "normw";
}

inline Divergence parse_divergence(std::string_view name) {
  if (name == "ks") return Divergence::KS;
  if (name == "normw" || name == "wasserstein" || name == "w") return Divergence::WassersteinNormalized;
  throw ValidationError("unknown divergence '" + std::string(name) + "'");
}

inline double divergence(Divergence kind, const DistanceSample& p, const DistanceSample& q) {
  return kind == Divergence::KS ? ks_distance(p, q) : normalized_wasserstein(p, q);
}

}  // namespace dsi
