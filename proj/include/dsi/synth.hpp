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

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dsi/dataset.hpp"
#include "dsi/errors.hpp"
#include "dsi/separability.hpp"

namespace dsi::synth {

/// Two-class, two-dimensional dataset families.
enum class Family { Random, Spirals, XOR, Moons, Circles, Blobs };

inline constexpr std::array<Family, 6> kAllFamilies = {Family::Random, Family::Spirals, Family::XOR,
                                                       Family::Moons,  Family::Circles, Family::Blobs};

inline std::string_view to_string(Family f) {
  switch (f) {
    case Family::Random: return "random";
    case Family::Spirals: return "spirals";
    case Family::XOR: return "xor";
    case Family::Moons: return "moons";
    case Family::Circles: return "circles";
    case Family::Blobs: return "blobs";
  }
  return "?";
}

inline Family parse_family(std::string_view name) {
  for (Family f : kAllFamilies) {
    if (to_string(f) == name) return f;
  }
  throw ValidationError("unknown family '" + std::string(name) + "'");
}

/// Noise (or cluster SD for Blobs) used when the spec leaves it unset.
/// Random and XOR have no noise parameter.
inline double default_noise(Family f) {
  switch (f) {
    case Family::Spirals: return 0.02;
    case Family::Moons: return 0.1;
    case Family::Circles: return 0.05;
    case Family::Blobs: return 1.0;
    default: return 0.0;
  }
}

using Point2 = std::array<double, 2>;

struct GeneratorSpec {
  Family family = Family::Random;
  std::size_t points_per_class = 1000;
  std::optional<double> noise_or_sd;
  std::uint64_t seed = 0;
  /// Cluster centers of the Blobs family.
  std::array<Point2, 2> blob_centers = {Point2{0.0, 0.0}, Point2{10.0, 10.0}};

  double noise() const { return noise_or_sd.value_or(default_noise(family)); }
};

/// Generates `points_per_class` points for class 0, then as many for class 1.
///
///   Random   both classes i.i.d. uniform on [0,1)^2
///   Spirals  r = 0.1 + 0.9t, theta = 3*pi*t + pi*class, t ~ U[0,1]
///   XOR      uniform on [-1,1]^2, class 0 where x*y > 0; axis points redrawn
///   Moons    (cos t, sin t) vs (1 - cos t, 0.5 - sin t), t ~ U[0,pi]
///   Circles  radius 1.0 (class 0) vs radius 0.5 (class 1), uniform angle
///   Blobs    isotropic Gaussians with SD = noise at blob_centers
///
/// Spirals, Moons and Circles add isotropic Gaussian noise of SD noise().
inline LabeledDataset generate(const GeneratorSpec& spec) {
  if (spec.points_per_class < 2) throw ValidationError("points_per_class must be >= 2");
  const double noise = spec.noise();
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw ValidationError("noise/SD must be finite and >= 0");

  const std::size_t m = spec.points_per_class;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto jitter = [&](double v) { return noise > 0.0 ? v + noise * gauss(rng) : v; };

  std::array<std::vector<Point2>, 2> cls;
  cls[0].reserve(m);
  cls[1].reserve(m);
  constexpr double pi = std::numbers::pi;

  switch (spec.family) {
    case Family::Random:
      for (auto& c : cls) {
        for (std::size_t i = 0; i < m; ++i) {
          const double x = unit(rng);
          c.push_back({x, unit(rng)});
        }
      }
      break;
    case Family::Spirals:
      for (std::size_t k = 0; k < 2; ++k) {
        for (std::size_t i = 0; i < m; ++i) {
          const double t = unit(rng);
          const double r = 0.1 + 0.9 * t;
          const double theta = 3.0 * pi * t + pi * static_cast<double>(k);
          const double x = jitter(r * std::cos(theta));
          cls[k].push_back({x, jitter(r * std::sin(theta))});
        }
      }
      break;
    case Family::XOR: {
      std::uniform_real_distribution<double> square(-1.0, 1.0);
      while (cls[0].size() < m || cls[1].size() < m) {
        const double x = square(rng);
        const double y = square(rng);
        const double s = x * y;
        if (s == 0.0) continue;
        auto& c = cls[s > 0.0 ? 0 : 1];
        if (c.size() < m) c.push_back({x, y});
      }
      break;
    }
    case Family::Moons:
      for (std::size_t k = 0; k < 2; ++k) {
        for (std::size_t i = 0; i < m; ++i) {
          const double t = pi * unit(rng);
          const double bx = k == 0 ? std::cos(t) : 1.0 - std::cos(t);
          const double by = k == 0 ? std::sin(t) : 0.5 - std::sin(t);
          const double x = jitter(bx);
          cls[k].push_back({x, jitter(by)});
        }
      }
      break;
    case Family::Circles:
      for (std::size_t k = 0; k < 2; ++k) {
        const double radius = k == 0 ? 1.0 : 0.5;
        for (std::size_t i = 0; i < m; ++i) {
          const double a = 2.0 * pi * unit(rng);
          const double x = jitter(radius * std::cos(a));
          cls[k].push_back({x, jitter(radius * std::sin(a))});
        }
      }
      break;
    case Family::Blobs:
      for (std::size_t k = 0; k < 2; ++k) {
        const Point2 c = spec.blob_centers[k];
        for (std::size_t i = 0; i < m; ++i) {
          const double x = jitter(c[0]);
          cls[k].push_back({x, jitter(c[1])});
        }
      }
      break;
  }

  std::vector<double> points;
  points.reserve(4 * m);
  std::vector<ClassId> labels;
  labels.reserve(2 * m);
  for (ClassId k = 0; k < 2; ++k) {
    for (const auto& p : cls[k]) {
      points.push_back(p[0]);
      points.push_back(p[1]);
      labels.push_back(k);
    }
  }
  return LabeledDataset(std::move(points), 2, std::move(labels), {"0", "1"});
}

/// The dataset for sweep position `index`: noise set to `param`, seed = base seed + index.
inline GeneratorSpec sweep_spec(const GeneratorSpec& base, double param, std::size_t index) {
  GeneratorSpec s = base;
  s.noise_or_sd = param;
  s.seed = base.seed + index;
  return s;
}

struct SweepPoint {
  double param = 0.0;
  DsiReport report;
};

/// Regenerates the dataset for every parameter value and computes its DSI.
inline std::vector<SweepPoint> sweep(const GeneratorSpec& base, std::span<const double> params,
                                     const DsiConfig& cfg = {}) {
  if (params.empty()) throw ValidationError("sweep needs at least one parameter value");
  std::vector<SweepPoint> out;
  out.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    out.push_back({params[i], dsi_two_class(generate(sweep_spec(base, params[i], i)), cfg)});
  }
  return out;
}

}  // namespace dsi::synth
