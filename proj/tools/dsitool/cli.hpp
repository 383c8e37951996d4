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
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dsi/all.hpp"
#include "dsi/report.hpp"

namespace dsi::cli {

/// Process exit codes.
enum ExitCode : int { kOk = 0, kIngestFailure = 1, kValidationFailure = 2, kNumericFailure = 3 };

namespace detail {

inline std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestError(path.string() + ": cannot open for writing");
  out << text;
  if (!out) throw IngestError(path.string() + ": write failed");
}

inline void write_report(const std::string& path, const ReportDocument& doc) {
  if (path.empty()) return;
  write_text(path, Json(doc).dump(2) + "\n");
}

struct DsiOptions {
  std::string csv;
  std::vector<std::string> cifar;
  std::string label_col = "label";
  bool no_header = false;
  char delimiter = ',';
  std::string metric = "euclidean";
  std::string divergence = "ks";
  double fraction = 0.0;
  std::size_t count = 0;
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  std::string output;
  std::string spill_dir;
};

struct SynthOptions {
  std::string family;
  std::size_t points = 1000;
  std::optional<double> noise;
  std::uint64_t seed = 0;
  std::string output;
};

struct SweepOptions {
  std::string family = "blobs";
  std::vector<std::string> params;
  std::vector<std::string> metrics = {"euclidean"};
  std::vector<std::string> divergences = {"ks"};
  std::size_t points = 1000;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  std::string output;
  std::string json;
};

inline int run_dsi(const DsiOptions& o, const std::vector<std::string>& echo, std::ostream& out) {
  if (o.csv.empty() == o.cifar.empty()) throw ValidationError("give exactly one of --csv or --cifar10");
  DsiConfig cfg;
  cfg.metric = MetricSpec(parse_metric(o.metric));
  cfg.divergence = parse_divergence(o.divergence);
  cfg.threads = o.threads;
  if (!o.spill_dir.empty()) cfg.spill_dir = o.spill_dir;

  const LabeledDataset data = [&] {
    if (!o.csv.empty()) {
      CsvOptions copts;
      copts.label_column = o.label_col;
      copts.has_header = !o.no_header;
      copts.delimiter = o.delimiter;
      return load_csv(o.csv, copts);
    }
    std::vector<std::filesystem::path> paths(o.cifar.begin(), o.cifar.end());
    return load_cifar10_binary(paths);
  }();

  ReportDocument doc;
  doc.command = echo;
  const bool subsampled = o.fraction > 0.0 || o.count > 0 || o.trials > 1;
  if (!subsampled) {
    DsiReport r = dsi_multiclass(data, cfg);
    doc.body = r;
    write_report(o.output, doc);
    out << "dsi = " << fixed4(r.dsi) << "\n";
    return kOk;
  }
  if (o.fraction > 0.0 && o.count > 0) throw ValidationError("give at most one of --fraction or --count");
  SubsampleConfig sub;
  if (o.count > 0) {
    sub.amount = o.count;
  } else if (o.fraction > 0.0) {
    sub.amount = o.fraction;
  }
  sub.trials = o.trials;
  sub.seed = o.seed;
  cfg.subsample = sub;
  DsiEstimate e = dsi_estimate(data, cfg);
  const double mean = e.mean;
  const double sd = e.sd;
  const std::size_t trials = e.per_trial.size();
  doc.body = std::move(e);
  write_report(o.output, doc);
  out << "dsi = " << fixed4(mean) << " +/- " << fixed4(sd) << " (mean +/- sd over " << trials << " trials)\n";
  return kOk;
}

inline int run_synth(const SynthOptions& o, std::ostream& out) {
  synth::GeneratorSpec spec;
  spec.family = synth::parse_family(o.family);
  spec.points_per_class = o.points;
  spec.noise_or_sd = o.noise;
  spec.seed = o.seed;
  const LabeledDataset data = synth::generate(spec);
  write_csv(o.output, data);
  out << "wrote " << data.size() << " rows (" << synth::to_string(spec.family) << ") to " << o.output << "\n";
  return kOk;
}

inline std::vector<double> parse_params(const std::vector<std::string>& raw) {
  std::vector<double> values;
  for (const auto& item : raw) {
    const std::string_view cell = dsi::detail::trim(item);
    if (cell.empty()) continue;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
      throw ValidationError("bad parameter value '" + std::string(cell) + "'");
    }
    values.push_back(v);
  }
  if (values.empty()) throw ValidationError("empty parameter list");
  return values;
}

inline int run_sweep(const SweepOptions& o, const std::vector<std::string>& echo, std::ostream& out) {
  const std::vector<double> params = parse_params(o.params);
  synth::GeneratorSpec base;
  base.family = synth::parse_family(o.family);
  base.points_per_class = o.points;
  base.seed = o.seed;
  std::vector<MetricKind> metrics;
  for (const auto& m : o.metrics) metrics.push_back(parse_metric(m));
  std::vector<Divergence> divergences;
  for (const auto& d : o.divergences) divergences.push_back(parse_divergence(d));
  if (metrics.empty() || divergences.empty()) throw ValidationError("empty metric or divergence list");

  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const LabeledDataset data = synth::generate(synth::sweep_spec(base, params[i], i));
    for (MetricKind m : metrics) {
      for (Divergence d : divergences) {
        DsiConfig cfg;
        cfg.metric = MetricSpec(m);
        cfg.divergence = d;
        cfg.threads = o.threads;
        const DsiReport r = dsi_two_class(data, cfg);
        rows.push_back({params[i], m, d, r.dsi, r.timing});
      }
    }
  }

  std::ostringstream csv;
  csv << "param,metric,divergence,dsi\n";
  for (const auto& r : rows) {
    csv << dsi::detail::format_double(r.param) << ',' << to_string(r.metric) << ',' << to_string(r.divergence)
        << ',' << dsi::detail::format_double(r.dsi) << '\n';
  }
  if (!o.json.empty()) {
    ReportDocument doc;
    doc.command = echo;
    doc.body = rows;
    write_report(o.json, doc);
  }
  if (o.output.empty()) {
    out << csv.str();
  } else {
    write_text(o.output, csv.str());
    out << "wrote " << rows.size() << " rows to " << o.output << "\n";
  }
  return kOk;
}

}  // namespace detail

/// Runs one command. `args` excludes the program name. Nothing is written to
/// `out` unless the command succeeds; failures print one line to `err`.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Distance-based separability index of labeled datasets", "dsitool"};
  app.require_subcommand(1);

  detail::DsiOptions dopt;
  auto* dsi_cmd = app.add_subcommand("dsi", "Compute the DSI of a CSV or CIFAR-10 dataset");
  auto* csv_opt = dsi_cmd->add_option("--csv", dopt.csv, "CSV input file");
  auto* cifar_opt = dsi_cmd->add_option("--cifar10", dopt.cifar, "CIFAR-10 binary batch files");
  csv_opt->excludes(cifar_opt);
  dsi_cmd->add_option("--label-col", dopt.label_col, "Label column name or zero-based index")
      ->capture_default_str();
  dsi_cmd->add_flag("--no-header", dopt.no_header, "CSV has no header row");
  dsi_cmd->add_option("--delimiter", dopt.delimiter, "CSV delimiter")->capture_default_str();
  dsi_cmd->add_option("--metric", dopt.metric,
                      "euclidean|cityblock|chebyshev|cosine|correlation|mahalanobis")
      ->capture_default_str();
  dsi_cmd->add_option("--divergence", dopt.divergence, "ks|normw")->capture_default_str();
  auto* frac_opt = dsi_cmd->add_option("--fraction", dopt.fraction, "Subsample fraction in (0,1]");
  auto* count_opt = dsi_cmd->add_option("--count", dopt.count, "Subsample row count");
  frac_opt->excludes(count_opt);
  dsi_cmd->add_option("--trials", dopt.trials, "Subsample trials")->capture_default_str();
  dsi_cmd->add_option("--seed", dopt.seed, "Subsample seed")->capture_default_str();
  dsi_cmd->add_option("--threads", dopt.threads, "Worker threads (0 = auto)");
  dsi_cmd->add_option("-o,--output", dopt.output, "JSON report path");
  dsi_cmd->add_option("--spill-dir", dopt.spill_dir, "Write every distance sample to this directory");

  detail::SynthOptions sopt;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic two-class dataset as CSV");
  synth_cmd->add_option("--family", sopt.family, "random|spirals|xor|moons|circles|blobs")->required();
  synth_cmd->add_option("-n,--points", sopt.points, "Points per class")->capture_default_str();
  synth_cmd->add_option("--noise,--sd", sopt.noise, "Noise SD (cluster SD for blobs)");
  synth_cmd->add_option("--seed", sopt.seed, "Generator seed")->capture_default_str();
  synth_cmd->add_option("-o,--output", sopt.output, "CSV output path")->required();

  detail::SweepOptions wopt;
  auto* sweep_cmd = app.add_subcommand("sweep", "DSI over a generator parameter sweep, as long-format CSV");
  sweep_cmd->add_option("--family", wopt.family, "Generator family")->capture_default_str();
  sweep_cmd->add_option("--params", wopt.params, "Parameter values (noise / cluster SD)")
      ->delimiter(',')
      ->required();
  sweep_cmd->add_option("--metrics", wopt.metrics, "Metric list")->delimiter(',');
  sweep_cmd->add_option("--divergences", wopt.divergences, "Divergence list")->delimiter(',');
  sweep_cmd->add_option("-n,--points", wopt.points, "Points per class")->capture_default_str();
  sweep_cmd->add_option("--seed", wopt.seed, "Base seed; position i uses seed + i")->capture_default_str();
  sweep_cmd->add_option("--threads", wopt.threads, "Worker threads (0 = auto)");
  sweep_cmd->add_option("-o,--output", wopt.output, "CSV output path (default: stdout)");
  sweep_cmd->add_option("--json", wopt.json, "Also write a JSON report here");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kValidationFailure;
  }

  try {
    if (dsi_cmd->parsed()) return detail::run_dsi(dopt, args, out);
    if (synth_cmd->parsed()) return detail::run_synth(sopt, out);
    return detail::run_sweep(wopt, args, out);
  } catch (const IngestError& e) {
    err << "error: " << e.what() << "\n";
    return kIngestFailure;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kValidationFailure;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << "\n";
    return kNumericFailure;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kIngestFailure;
  }
}

}  // namespace dsi::cli
