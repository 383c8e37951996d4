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

// Acceptance suite: one line per criterion, nonzero exit if any criterion fails.
// Criterion 6 needs the CIFAR-10 binary batches; set DSI_CIFAR10_DIR to the
// directory holding data_batch_1.bin .. data_batch_5.bin.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "distrib_oracle.hpp"
#include "dsi/all.hpp"
#include "dsi/report.hpp"
#include "test_support.hpp"

namespace {

using namespace dsi;

enum class Outcome { Pass, Fail, Skip };

struct Verdict {
  Outcome outcome;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string join(const std::vector<double>& v, const char* f = "%.4f") {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(f, v[i]);
  return s;
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] < v[i - 1])) return false;
  }
  return true;
}

double spread(const std::vector<double>& v) {
  return *std::max_element(v.begin(), v.end()) - *std::min_element(v.begin(), v.end());
}

// 1. Same-distribution limit.
Verdict same_distribution_limit() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> mean(2, 0.0);
  const std::size_t sizes[2] = {1000, 2000};
  for (int k = 0; k < 2; ++k) {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      synth::GeneratorSpec spec;
      spec.family = synth::Family::Random;
      spec.points_per_class = sizes[k];
      spec.seed = seed;
      mean[k] += dsi_two_class(synth::generate(spec)).dsi / 8.0;
    }
  }
  const double secs = seconds_since(t0);
  const bool ok = mean[0] >= 0.004 && mean[0] <= 0.009 && mean[1] >= 0.002 && mean[1] <= 0.005 &&
                  mean[1] < mean[0] && secs < 60.0;
  return {ok ? Outcome::Pass : Outcome::Fail,
          "mean DSI 1000/class=" + fmt("%.5f", mean[0]) + " (band [0.004,0.009]), 2000/class=" +
              fmt("%.5f", mean[1]) + " (band [0.002,0.005]), " + fmt("%.1f", secs) + " s (< 60 s)"};
}

// 2. Cardinality exactness.
Verdict cardinality() {
  std::mt19937_64 rng(2024);
  std::size_t checks = 0, failures = 0;
  for (int t = 0; t < 300; ++t) {
    const auto d = testing::random_dataset(rng, 2 + rng() % 3, 2, 60, 1 + rng() % 3);
    const PreparedPoints pts(d, MetricSpec{});
    for (ClassId c = 0; c < d.class_count(); ++c) {
      const std::size_t m = d.class_rows(c).size();
      const auto rest = complement_rows(d, c);
      failures += icd_set(pts, d.class_rows(c), SampleSource::icd(c)).count() != m * (m - 1) / 2;
      failures += bcd_set(pts, d.class_rows(c), rest, SampleSource::bcd_vs_rest(c)).count() != m * rest.size();
      checks += 2;
      for (ClassId o = c + 1; o < d.class_count(); ++o) {
        const std::size_t mo = d.class_rows(o).size();
        failures += bcd_set(pts, d.class_rows(c), d.class_rows(o), SampleSource::bcd_pair(c, o)).count() != m * mo;
        ++checks;
      }
    }
  }
  return {failures == 0 ? Outcome::Pass : Outcome::Fail,
          std::to_string(checks) + " cardinality checks over 300 datasets, " + std::to_string(failures) +
              " mismatches"};
}

// 3. KS / W oracle equivalence.
Verdict oracle_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  double worst_ks = 0.0, worst_w = 0.0;
  for (int t = 0; t < 200; ++t) {
    std::vector<double> p(1 + rng() % 100), q(1 + rng() % 100);
    const bool ties = t % 2 == 0;
    for (auto& x : p) x = ties ? std::floor(u(rng)) : u(rng);
    for (auto& x : q) x = ties ? std::floor(u(rng)) : u(rng);
    const DistanceSample sp(p), sq(q);
    worst_ks = std::max(worst_ks, std::abs(ks_distance(sp, sq) - oracle::ks_brute(p, q)));
    worst_w = std::max(worst_w, std::abs(wasserstein_distance(sp, sq) - oracle::wasserstein_brute(p, q)));
  }
  const double secs = seconds_since(t0);
  const bool ok = worst_ks <= 1e-12 && worst_w <= 1e-12 && secs < 5.0;
  return {ok ? Outcome::Pass : Outcome::Fail, "max |KS - brute|=" + fmt("%.2e", worst_ks) + ", max |W - brute|=" +
                                                  fmt("%.2e", worst_w) + " (tol 1e-12), " + fmt("%.2f", secs) +
                                                  " s (< 5 s)"};
}

// 4. Separability ordering of the six families.
Verdict family_ordering() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> complexity;
  for (synth::Family f : synth::kAllFamilies) {
    synth::GeneratorSpec spec;
    spec.family = f;
    spec.points_per_class = 1000;
    complexity.push_back(1.0 - dsi_two_class(synth::generate(spec)).dsi);
  }
  const double secs = seconds_since(t0);
  const bool ok = strictly_decreasing(complexity) && complexity.front() > 0.98 && complexity.back() < 0.10 &&
                  secs < 120.0;
  return {ok ? Outcome::Pass : Outcome::Fail,
          "1-DSI random/spirals/xor/moons/circles/blobs = " + join(complexity) + ", " + fmt("%.1f", secs) +
              " s (< 120 s)"};
}

// 5. Cluster-SD monotonicity across metrics, KS vs normalized W spread.
Verdict cluster_sd_sweep() {
  const auto t0 = std::chrono::steady_clock::now();
  synth::GeneratorSpec base;
  base.family = synth::Family::Blobs;
  base.points_per_class = 1000;
  std::vector<double> euclid, city, cheb, normw;
  for (std::size_t i = 0; i < 9; ++i) {
    const auto data = synth::generate(synth::sweep_spec(base, static_cast<double>(i + 1), i));
    DsiConfig cfg;
    euclid.push_back(dsi_two_class(data, cfg).dsi);
    cfg.divergence = Divergence::WassersteinNormalized;
    normw.push_back(dsi_two_class(data, cfg).dsi);
    cfg.divergence = Divergence::KS;
    cfg.metric = MetricSpec(MetricKind::CityBlock);
    city.push_back(dsi_two_class(data, cfg).dsi);
    cfg.metric = MetricSpec(MetricKind::Chebyshev);
    cheb.push_back(dsi_two_class(data, cfg).dsi);
  }
  const double secs = seconds_since(t0);
  const bool ok = strictly_decreasing(euclid) && strictly_decreasing(city) && strictly_decreasing(cheb) &&
                  spread(euclid) > spread(normw) && secs < 120.0;
  return {ok ? Outcome::Pass : Outcome::Fail,
          "SD 1..9 euclidean [" + join(euclid) + "] cityblock [" + join(city) + "] chebyshev [" + join(cheb) +
              "] normW [" + join(normw) + "]; spread KS=" + fmt("%.4f", spread(euclid)) +
              " normW=" + fmt("%.4f", spread(normw)) + ", " + fmt("%.1f", secs) + " s (< 120 s)"};
}

// 6. CIFAR-10 subsample reproduction.
Verdict cifar_subsample() {
  const char* env = std::getenv("DSI_CIFAR10_DIR");
  const std::filesystem::path dir = env ? env : "cifar-10-batches-bin";
  std::vector<std::filesystem::path> batches;
  for (int b = 1; b <= 5; ++b) batches.push_back(dir / ("data_batch_" + std::to_string(b) + ".bin"));
  for (const auto& p : batches) {
    if (!std::filesystem::exists(p)) {
      return {Outcome::Skip, "CIFAR-10 batches not found (" + p.string() + "); set DSI_CIFAR10_DIR to run"};
    }
  }
  const auto t0 = std::chrono::steady_clock::now();
  const auto data = load_cifar10_binary(batches);
  DsiConfig cfg;
  cfg.subsample = SubsampleConfig{std::size_t{1000}, 8, 7};
  const auto est = dsi_estimate(data, cfg);
  const double secs = seconds_since(t0);
  const bool ok = data.size() == 50000 && est.mean >= 0.090 && est.mean <= 0.120 && est.sd >= 0.002 &&
                  est.sd <= 0.012 && secs < 600.0;
  return {ok ? Outcome::Pass : Outcome::Fail,
          "8 x 1000 images: mean=" + fmt("%.4f", est.mean) + " (band [0.090,0.120]) sd=" + fmt("%.4f", est.sd) +
              " (band [0.002,0.012]), " + fmt("%.1f", secs) + " s (< 600 s)"};
}

// 7. Invariance suite.
Verdict invariance() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> angle(0.0, 6.283185307179586);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const auto d = testing::random_dataset(rng, 2, 20, 120, 2);
    const double base = dsi_multiclass(d).dsi;
    std::vector<ClassId> swapped(d.labels().begin(), d.labels().end());
    for (auto& l : swapped) l = 1 - l;
    const std::vector<double> raw(d.values().begin(), d.values().end());
    const std::vector<std::string> names(d.class_names().begin(), d.class_names().end());
    const double swap_dsi = dsi_multiclass(LabeledDataset(raw, 2, swapped, names)).dsi;
    const double perm_dsi = dsi_multiclass(testing::permuted(d, rng)).dsi;
    const double th = angle(rng), c = scale(rng);
    std::vector<double> iso, scaled;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double x = d.row(i)[0], y = d.row(i)[1];
      iso.push_back(std::cos(th) * x - std::sin(th) * y + 12.5);
      iso.push_back(std::sin(th) * x + std::cos(th) * y - 3.25);
      scaled.push_back(c * x);
      scaled.push_back(c * y);
    }
    const std::vector<ClassId> labels(d.labels().begin(), d.labels().end());
    const double iso_dsi = dsi_multiclass(LabeledDataset(iso, 2, labels, names)).dsi;
    const double scaled_dsi = dsi_multiclass(LabeledDataset(scaled, 2, labels, names)).dsi;
    for (double v : {swap_dsi, perm_dsi, iso_dsi, scaled_dsi}) worst = std::max(worst, std::abs(v - base));
  }
  return {worst < 1e-9 ? Outcome::Pass : Outcome::Fail,
          "max |delta DSI| over label-swap, permutation, isometry, scaling on 20 datasets = " + fmt("%.2e", worst) +
              " (< 1e-9)"};
}

// 8. Determinism under parallelism.
Verdict determinism() {
  const std::size_t max_threads = std::max<std::size_t>(8, std::thread::hardware_concurrency());
  std::mt19937_64 rng(88);
  std::size_t mismatches = 0;
  for (int t = 0; t < 10; ++t) {
    const auto d = testing::random_dataset(rng, 2 + rng() % 4, 30, 200, 1 + rng() % 8);
    DsiConfig one;
    one.threads = 1;
    DsiConfig many;
    many.threads = max_threads;
    const auto a = without_timings(Json(dsi_multiclass(d, one))).dump();
    const auto b = without_timings(Json(dsi_multiclass(d, many))).dump();
    mismatches += a != b;
  }
  return {mismatches == 0 ? Outcome::Pass : Outcome::Fail,
          "10 datasets, 1 vs " + std::to_string(max_threads) + " threads: " + std::to_string(mismatches) +
              " differing reports"};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria = {
      {"AC1 same-distribution limit", same_distribution_limit},
      {"AC2 cardinality exactness", cardinality},
      {"AC3 KS/W oracle equivalence", oracle_equivalence},
      {"AC4 family separability ordering", family_ordering},
      {"AC5 cluster-SD monotonicity", cluster_sd_sweep},
      {"AC6 CIFAR-10 subsample estimate", cifar_subsample},
      {"AC7 invariance suite", invariance},
      {"AC8 determinism under parallelism", determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {Outcome::Fail, std::string("exception: ") + e.what()};
    }
    const char* tag = v.outcome == Outcome::Pass ? "PASS" : (v.outcome == Outcome::Skip ? "SKIP" : "FAIL");
    std::printf("[%s] %s: %s\n", tag, c.name, v.detail.c_str());
    std::fflush(stdout);
    failed += v.outcome == Outcome::Fail;
  }
  std::printf("%d criterion(s) failed\n", failed);
  return failed == 0 ? 0 : 1;
}
