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

#include <chrono>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dsi/dataset.hpp"
#include "dsi/distrib.hpp"
#include "dsi/errors.hpp"
#include "dsi/metrics.hpp"

namespace dsi {

struct DsiConfig {
  MetricSpec metric;
  Divergence divergence = Divergence::KS;
  std::optional<SubsampleConfig> subsample;
  /// Worker threads for the pairwise kernels; 0 = DSI_NUM_THREADS or hardware.
  std::size_t threads = 0;
  /// When set, every ICD/BCD sample is written there as icd_<c>.bin / bcd_<c>.bin.
  std::optional<std::filesystem::path> spill_dir;
};

/// Divergence between one class's ICD sample and its BCD sample.
struct ClassStatistic {
  ClassId class_id = 0;
  std::string class_name;
  double statistic = 0.0;
  std::size_t icd_count = 0;
  std::size_t bcd_count = 0;

  friend bool operator==(const ClassStatistic&, const ClassStatistic&) = default;
};

struct PhaseTimings {
  double distances_seconds = 0.0;
  double divergence_seconds = 0.0;
};

struct DsiReport {
  std::vector<ClassStatistic> per_class;
  /// Unweighted mean of per_class statistics.
  double dsi = 0.0;
  MetricKind metric = MetricKind::Euclidean;
  Divergence divergence = Divergence::KS;
  std::optional<SubsampleConfig> subsample;
  std::optional<std::size_t> trial_index;
  std::size_t points = 0;
  PhaseTimings timing;

  /// Equality over every field except timing.
  bool same_result(const DsiReport& o) const {
    return per_class == o.per_class && dsi == o.dsi && metric == o.metric && divergence == o.divergence &&
           subsample == o.subsample && trial_index == o.trial_index && points == o.points;
  }
};

struct DsiEstimate {
  double mean = 0.0;
  /// Sample standard deviation (n-1 denominator); 0 for a single trial.
  double sd = 0.0;
  std::vector<DsiReport> per_trial;
};

namespace detail {

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

inline void validate_classes(const LabeledDataset& data) {
  if (data.class_count() < 2) throw ValidationError("need at least 2 classes");
  for (ClassId c = 0; c < data.class_count(); ++c) {
    if (data.class_rows(c).size() < 2) {
      throw ValidationError("singleton class '" + data.class_name(c) + "': ICD needs at least 2 points");
    }
  }
}

/// Mahalanobis without an explicit matrix uses the pooled covariance of `data`.
inline MetricSpec resolve_metric(const MetricSpec& metric, const LabeledDataset& data) {
  if (metric.kind() == MetricKind::Mahalanobis && !metric.has_inverse_covariance()) {
    return MetricSpec::mahalanobis_pooled(data);
  }
  return metric;
}

inline void spill(const DsiConfig& cfg, const std::string& name, const DistanceSample& s) {
  if (!cfg.spill_dir) return;
  std::filesystem::create_directories(*cfg.spill_dir);
  write_sample(*cfg.spill_dir / name, s);
}

inline void finish(DsiReport& report) {
  double sum = 0.0;
  for (const auto& c : report.per_class) sum += c.statistic;
  report.dsi = sum / static_cast<double>(report.per_class.size());
}

inline DsiReport start_report(const LabeledDataset& data, const DsiConfig& cfg) {
  DsiReport r;
  r.metric = cfg.metric.kind();
  r.divergence = cfg.divergence;
  r.points = data.size();
  return r;
}

}  // namespace detail

/// DSI of a dataset with exactly two classes X and Y:
/// (div(ICD_x, BCD_xy) + div(ICD_y, BCD_xy)) / 2.
inline DsiReport dsi_two_class(const LabeledDataset& data, const DsiConfig& cfg = {}) {
  if (data.class_count() != 2) {
    throw ValidationError("two-class DSI needs exactly 2 classes, got " + std::to_string(data.class_count()));
  }
  detail::validate_classes(data);
  detail::Stopwatch clock;
  DsiReport report = detail::start_report(data, cfg);
  const PreparedPoints pts(data, detail::resolve_metric(cfg.metric, data));

  const auto bcd = bcd_set(pts, data.class_rows(0), data.class_rows(1), SampleSource::bcd_pair(0, 1), cfg.threads);
  report.timing.distances_seconds += clock.lap();
  detail::spill(cfg, "bcd_0_1.bin", bcd);
  for (ClassId c = 0; c < 2; ++c) {
    const auto icd = icd_set(pts, data.class_rows(c), SampleSource::icd(c), cfg.threads);
    report.timing.distances_seconds += clock.lap();
    detail::spill(cfg, "icd_" + std::to_string(c) + ".bin", icd);
    report.per_class.push_back({c, data.class_name(c), divergence(cfg.divergence, icd, bcd), icd.count(), bcd.count()});
    report.timing.divergence_seconds += clock.lap();
  }
  detail::finish(report);
  return report;
}

/// One-versus-others DSI: mean over classes of div(ICD_i, BCD(C_i vs rest)).
inline DsiReport dsi_multiclass(const LabeledDataset& data, const DsiConfig& cfg = {}) {
  detail::validate_classes(data);
  detail::Stopwatch clock;
  DsiReport report = detail::start_report(data, cfg);
  const PreparedPoints pts(data, detail::resolve_metric(cfg.metric, data));

  for (ClassId c = 0; c < data.class_count(); ++c) {
    const auto rest = complement_rows(data, c);
    const auto icd = icd_set(pts, data.class_rows(c), SampleSource::icd(c), cfg.threads);
    const auto bcd = bcd_set(pts, data.class_rows(c), rest, SampleSource::bcd_vs_rest(c), cfg.threads);
    report.timing.distances_seconds += clock.lap();
    detail::spill(cfg, "icd_" + std::to_string(c) + ".bin", icd);
    detail::spill(cfg, "bcd_" + std::to_string(c) + ".bin", bcd);
    report.per_class.push_back({c, data.class_name(c), divergence(cfg.divergence, icd, bcd), icd.count(), bcd.count()});
    report.timing.divergence_seconds += clock.lap();
  }
  detail::finish(report);
  return report;
}

/// Repeats dsi_multiclass on `cfg.subsample->trials` random row subsets and
/// summarizes the per-trial values.
inline DsiEstimate dsi_estimate(const LabeledDataset& data, const DsiConfig& cfg) {
  if (!cfg.subsample) throw ValidationError("DSI estimate requires a subsample configuration");
  const SubsampleConfig& sub = *cfg.subsample;
  if (sub.trials < 1) throw ValidationError("subsample trials must be >= 1");

  DsiEstimate est;
  for (std::size_t t = 0; t < sub.trials; ++t) {
    const LabeledDataset part = subsample(data, sub, t);
    if (part.class_count() < 2) {
      throw ValidationError("need at least 2 classes (trial " + std::to_string(t) + " kept " +
                            std::to_string(part.class_count()) + ")");
    }
    DsiReport r = dsi_multiclass(part, cfg);
    r.subsample = sub;
    r.trial_index = t;
    est.per_trial.push_back(std::move(r));
  }
  double sum = 0.0;
  for (const auto& r : est.per_trial) sum += r.dsi;
  est.mean = sum / static_cast<double>(est.per_trial.size());
  if (est.per_trial.size() > 1) {
    double ss = 0.0;
    for (const auto& r : est.per_trial) ss += (r.dsi - est.mean) * (r.dsi - est.mean);
    est.sd = std::sqrt(ss / static_cast<double>(est.per_trial.size() - 1));
  }
  return est;
}

}  // namespace dsi
