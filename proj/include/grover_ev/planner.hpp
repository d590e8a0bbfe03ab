#pragma once

// Iteration-count planning: EV attenuation A_m, the standard stopping point,
// and the truncated stopping point (exact scan plus the arcsine estimate).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "grover_ev/constants.hpp"
#include "grover_ev/state_vector.hpp"

namespace grover_ev {

/// A_m = (sin^2[(2m+1)theta/2] N - M) / (N - M). Zero at m = 0 by construction.
inline double attenuation(std::uint64_t universe, std::uint64_t marked_count, std::size_t m) {
  const double theta = grover_angle(universe, marked_count);
  if (m == 0) return 0.0;
  const double n = static_cast<double>(universe);
  const double count = static_cast<double>(marked_count);
  const double s = std::sin((2.0 * static_cast<double>(m) + 1.0) * theta / 2.0);
  return (s * s * n - count) / (n - count);
}

/// floor(pi / (2 theta)).
inline std::size_t m_standard(std::uint64_t universe, std::uint64_t marked_count) {
  const double theta = grover_angle(universe, marked_count);
  // theta is one ulp high at M = N/2, where pi/(2 theta) must floor to 1.
  return static_cast<std::size_t>(std::floor(kPi / (2.0 * theta) + 1e-12));
}

struct TruncationResult {
  std::size_t iterations = 0;
  /// The threshold was never exceeded up to m_standard; iterations == m_standard.
  bool saturated = false;
};

/// Smallest m with A_m > a_th, capped at m_standard.
inline TruncationResult m_truncated(std::uint64_t universe, std::uint64_t marked_count, double a_th) {
  if (!(a_th >= 0.0 && a_th < 1.0)) {
    throw std::invalid_argument("threshold must satisfy 0 <= a_th < 1");
  }
  const auto standard = m_standard(universe, marked_count);
  for (std::size_t m = 0; m <= standard; ++m) {
    if (attenuation(universe, marked_count, m) > a_th) return {m, false};
  }
  return {standard, true};
}

/// Closed-form approximation to the truncated stopping point:
/// m_stand (2/pi) arcsin sqrt(r + (1 - r) M/N), r = a_th / a_stand, a_stand = 1/M.
inline double m_truncated_estimate(std::uint64_t universe, std::uint64_t marked_count, double a_th) {
  const auto standard = m_standard(universe, marked_count);
  const double a_stand = 1.0 / static_cast<double>(marked_count);
  if (!(a_th >= 0.0) || a_th > a_stand) {
    throw std::invalid_argument("estimate needs 0 <= a_th <= a_stand = 1/M");
  }
  const double r = a_th / a_stand;
  const double fraction = static_cast<double>(marked_count) / static_cast<double>(universe);
  const double arg = std::sqrt(r + (1.0 - r) * fraction);
  return static_cast<double>(standard) * (2.0 / kPi) * std::asin(std::min(arg, 1.0));
}

struct TruncationPlan {
  std::uint64_t universe = 0;
  std::uint64_t marked_count = 0;
  double theta = 0.0;
  double a_th = 0.0;
  double a_stand = 0.0;
  std::size_t m_stand = 0;
  std::size_t m_trunc = 0;
  /// Empty when a_th > a_stand, where the estimate is undefined.
  std::optional<double> m_trunc_estimate;
  double ratio = 1.0;
  bool saturated = false;
};

inline TruncationPlan make_plan(std::uint64_t universe, std::uint64_t marked_count, double a_th) {
  TruncationPlan plan;
  plan.universe = universe;
  plan.marked_count = marked_count;
  plan.theta = grover_angle(universe, marked_count);
  plan.a_th = a_th;
  plan.a_stand = 1.0 / static_cast<double>(marked_count);
  plan.m_stand = m_standard(universe, marked_count);
  const auto trunc = m_truncated(universe, marked_count, a_th);
  plan.m_trunc = trunc.iterations;
  plan.saturated = trunc.saturated;
  if (a_th <= plan.a_stand) plan.m_trunc_estimate = m_truncated_estimate(universe, marked_count, a_th);
  // m_stand == 0 only when M > N/2; nothing to truncate.
  plan.ratio = plan.m_stand == 0 ? 1.0
                                 : static_cast<double>(plan.m_trunc) / static_cast<double>(plan.m_stand);
  return plan;
}

inline void to_json(nlohmann::json& j, const TruncationPlan& plan) {
  j = nlohmann::json{{"N", plan.universe},
                     {"M", plan.marked_count},
                     {"theta", plan.theta},
                     {"a_th", plan.a_th},
                     {"a_stand", plan.a_stand},
                     {"m_stand", plan.m_stand},
                     {"m_trunc", plan.m_trunc},
                     {"m_trunc_estimate", nullptr},
                     {"ratio", plan.ratio},
                     {"saturated", plan.saturated}};
  if (plan.m_trunc_estimate) j["m_trunc_estimate"] = *plan.m_trunc_estimate;
}

}  // namespace grover_ev
