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

#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "dsi/separability.hpp"

namespace dsi {

using Json = nlohmann::ordered_json;

/// Bumped on any breaking change to the serialized layout.
inline constexpr int kReportSchemaVersion = 1;

struct SweepRow {
  double param = 0.0;
  MetricKind metric = MetricKind::Euclidean;
  Divergence divergence = Divergence::KS;
  double dsi = 0.0;
  PhaseTimings timing;
};

/// Top-level document written by the CLI.
struct ReportDocument {
  int schema_version = kReportSchemaVersion;
  std::vector<std::string> command;
  std::variant<DsiReport, DsiEstimate, std::vector<SweepRow>> body;
};

// Enum <-> string mappings reuse the names accepted on the command line.

inline void to_json(Json& j, const PhaseTimings& t) {
  j = Json{{"distances_seconds", t.distances_seconds}, {"divergence_seconds", t.divergence_seconds}};
}
inline void from_json(const Json& j, PhaseTimings& t) {
  t.distances_seconds = j.at("distances_seconds").get<double>();
  t.divergence_seconds = j.at("divergence_seconds").get<double>();
}

inline void to_json(Json& j, const SubsampleConfig& s) {
  j = Json::object();
  if (const auto* f = std::get_if<double>(&s.amount)) {
    j["fraction"] = *f;
  } else {
    j["count"] = std::get<std::size_t>(s.amount);
  }
  j["trials"] = s.trials;
  j["seed"] = s.seed;
}
inline void from_json(const Json& j, SubsampleConfig& s) {
  if (j.contains("fraction")) {
    s.amount = j.at("fraction").get<double>();
  } else {
    s.amount = j.at("count").get<std::size_t>();
  }
  s.trials = j.at("trials").get<std::size_t>();
  s.seed = j.at("seed").get<std::uint64_t>();
}

inline void to_json(Json& j, const ClassStatistic& c) {
  j = Json{{"class_id", c.class_id},
           {"class_name", c.class_name},
           {"statistic", c.statistic},
           {"icd_count", c.icd_count},
           {"bcd_count", c.bcd_count}};
}
inline void from_json(const Json& j, ClassStatistic& c) {
  c.class_id = j.at("class_id").get<ClassId>();
  c.class_name = j.at("class_name").get<std::string>();
  c.statistic = j.at("statistic").get<double>();
  c.icd_count = j.at("icd_count").get<std::size_t>();
  c.bcd_count = j.at("bcd_count").get<std::size_t>();
}

inline void to_json(Json& j, const DsiReport& r) {
  j = Json::object();
  j["dsi"] = r.dsi;
  j["metric"] = std::string(to_string(r.metric));
  j["divergence"] = std::string(to_string(r.divergence));
  j["points"] = r.points;
  j["per_class"] = r.per_class;
  j["subsample"] = r.subsample ? Json(*r.subsample) : Json(nullptr);
  j["trial_index"] = r.trial_index ? Json(*r.trial_index) : Json(nullptr);
  j["timing"] = r.timing;
}
inline void from_json(const Json& j, DsiReport& r) {
  r.dsi = j.at("dsi").get<double>();
  r.metric = parse_metric(j.at("metric").get<std::string>());
  r.divergence = parse_divergence(j.at("divergence").get<std::string>());
  r.points = j.at("points").get<std::size_t>();
  r.per_class = j.at("per_class").get<std::vector<ClassStatistic>>();
  r.subsample.reset();
  if (!j.at("subsample").is_null()) r.subsample = j.at("subsample").get<SubsampleConfig>();
  r.trial_index.reset();
  if (!j.at("trial_index").is_null()) r.trial_index = j.at("trial_index").get<std::size_t>();
  r.timing = j.at("timing").get<PhaseTimings>();
}

inline void to_json(Json& j, const DsiEstimate& e) {
  j = Json{{"mean", e.mean}, {"sd", e.sd}, {"trials", e.per_trial}};
}
inline void from_json(const Json& j, DsiEstimate& e) {
  e.mean = j.at("mean").get<double>();
  e.sd = j.at("sd").get<double>();
  e.per_trial = j.at("trials").get<std::vector<DsiReport>>();
}

inline void to_json(Json& j, const SweepRow& r) {
  j = Json{{"param", r.param},
           {"metric", std::string(to_string(r.metric))},
           {"divergence", std::string(to_string(r.divergence))},
           {"dsi", r.dsi},
           {"timing", r.timing}};
}
inline void from_json(const Json& j, SweepRow& r) {
  r.param = j.at("param").get<double>();
  r.metric = parse_metric(j.at("metric").get<std::string>());
  r.divergence = parse_divergence(j.at("divergence").get<std::string>());
  r.dsi = j.at("dsi").get<double>();
  r.timing = j.at("timing").get<PhaseTimings>();
}

namespace detail {

inline void add_timing(PhaseTimings& total, const PhaseTimings& t) {
  total.distances_seconds += t.distances_seconds;
  total.divergence_seconds += t.divergence_seconds;
}

}  // namespace detail

/// Document-level "timings" is the sum over the body and is recomputed, not
/// read back, when parsing.
inline void to_json(Json& j, const ReportDocument& doc) {
  j = Json::object();
  j["schema_version"] = doc.schema_version;
  j["command"] = doc.command;
  PhaseTimings total;
  if (const auto* r = std::get_if<DsiReport>(&doc.body)) {
    j["kind"] = "dsi";
    j["report"] = *r;
    total = r->timing;
  } else if (const auto* e = std::get_if<DsiEstimate>(&doc.body)) {
    j["kind"] = "estimate";
    j["estimate"] = *e;
    for (const auto& t : e->per_trial) detail::add_timing(total, t.timing);
  } else {
    const auto& rows = std::get<std::vector<SweepRow>>(doc.body);
    j["kind"] = "sweep";
    j["sweep"] = rows;
    for (const auto& r : rows) detail::add_timing(total, r.timing);
  }
  j["timings"] = total;
}

inline void from_json(const Json& j, ReportDocument& doc) {
  doc.schema_version = j.at("schema_version").get<int>();
  if (doc.schema_version != kReportSchemaVersion) {
    throw IngestError("unsupported report schema version " + std::to_string(doc.schema_version));
  }
  doc.command = j.at("command").get<std::vector<std::string>>();
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "dsi") {
    doc.body = j.at("report").get<DsiReport>();
  } else if (kind == "estimate") {
    doc.body = j.at("estimate").get<DsiEstimate>();
  } else if (kind == "sweep") {
    doc.body = j.at("sweep").get<std::vector<SweepRow>>();
  } else {
    throw IngestError("unknown report kind '" + kind + "'");
  }
}

/// Copy of a serialized report with every "timing"/"timings" member removed,
/// for determinism comparisons.
inline Json without_timings(Json j) {
  if (j.is_object()) {
    j.erase("timing");
    j.erase("timings");
    for (auto& [key, value] : j.items()) value = without_timings(value);
  } else if (j.is_array()) {
    for (auto& value : j) value = without_timings(value);
  }
  return j;
}

}  // namespace dsi
