#pragma once

// Dense statevector, marked-set oracle, diffusion and the Grover iterate.
//
// Bit convention: qubit k (1-based) is bit k-1 of the basis label x, so
// qubit 1 is the least significant bit and x = x_L ... x_1.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "grover_ev/constants.hpp"

namespace grover_ev {

using Amplitude = std::complex<double>;

/// 2^L, the database size for an L-qubit register.
inline std::uint64_t universe_size(std::size_t qubit_count) {
  return std::uint64_t{1} << qubit_count;
}

/// Value (0 or 1) of qubit k in basis label x.
inline unsigned qubit_bit(std::uint64_t x, std::size_t k) {
  return static_cast<unsigned>((x >> (k - 1)) & 1U);
}

inline bool is_power_of_two(std::uint64_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// log2 of a power of two.
inline std::size_t qubits_for(std::uint64_t n) {
  if (!is_power_of_two(n)) {
    throw std::invalid_argument("universe size " + std::to_string(n) + " is not a power of two");
  }
  std::size_t l = 0;
  while ((std::uint64_t{1} << l) < n) ++l;
  return l;
}

class StateVector {
 public:
  StateVector(std::size_t qubit_count, std::vector<Amplitude> amplitudes)
      : qubit_count_(qubit_count), amplitudes_(std::move(amplitudes)) {
    check_qubit_count(qubit_count);
    if (amplitudes_.size() != universe_size(qubit_count)) {
      throw std::invalid_argument("amplitude count must equal 2^qubit_count");
    }
  }

  /// Computational basis state |x>.
  static StateVector basis(std::size_t qubit_count, std::uint64_t x) {
    check_qubit_count(qubit_count);
    if (x >= universe_size(qubit_count)) {
      throw std::invalid_argument("basis label out of range");
    }
    std::vector<Amplitude> amps(universe_size(qubit_count));
    amps[x] = 1.0;
    return {qubit_count, std::move(amps)};
  }

  std::size_t qubit_count() const noexcept { return qubit_count_; }
  std::uint64_t size() const noexcept { return amplitudes_.size(); }

  std::span<const Amplitude> amplitudes() const noexcept { return amplitudes_; }
  std::span<Amplitude> amplitudes() noexcept { return amplitudes_; }

  const Amplitude& operator[](std::uint64_t x) const { return amplitudes_[x]; }
  Amplitude& operator[](std::uint64_t x) { return amplitudes_[x]; }

  double squared_norm() const noexcept {
    double sum = 0.0;
    for (const auto& c : amplitudes_) sum += std::norm(c);
    return sum;
  }

  /// Largest |a_x - b_x| over all labels; registers must match in size.
  double max_deviation(const StateVector& other) const {
    if (other.size() != size()) {
      throw std::invalid_argument("cannot compare registers of different size");
    }
    double worst = 0.0;
    for (std::uint64_t x = 0; x < size(); ++x) {
      worst = std::max(worst, std::abs(amplitudes_[x] - other.amplitudes_[x]));
    }
    return worst;
  }

  static void check_qubit_count(std::size_t qubit_count) {
    if (qubit_count < 1 || qubit_count > kMaxQubits) {
      throw std::invalid_argument("qubit count must be in [1, " + std::to_string(kMaxQubits) +
                                  "], got " + std::to_string(qubit_count));
    }
  }

 private:
  std::size_t qubit_count_;
  std::vector<Amplitude> amplitudes_;
};

/// The set S of marked locations. Stored sorted and duplicate-free.
class MarkedSet {
 public:
  MarkedSet(std::vector<std::uint64_t> locations, std::uint64_t universe)
      : locations_(std::move(locations)), universe_(universe) {
    std::sort(locations_.begin(), locations_.end());
    if (locations_.empty()) {
      throw std::invalid_argument("marked set must be nonempty");
    }
    if (std::adjacent_find(locations_.begin(), locations_.end()) != locations_.end()) {
      throw std::invalid_argument("marked locations must be distinct");
    }
    if (locations_.back() >= universe_) {
      throw std::invalid_argument("marked location " + std::to_string(locations_.back()) +
                                  " outside [0, " + std::to_string(universe_) + ")");
    }
    if (locations_.size() >= universe_) {
      throw std::invalid_argument("marked count must be smaller than the universe");
    }
  }

  std::span<const std::uint64_t> locations() const noexcept { return locations_; }
  std::uint64_t universe_size() const noexcept { return universe_; }
  std::uint64_t count() const noexcept { return locations_.size(); }

  /// The oracle predicate f(x).
  bool contains(std::uint64_t x) const {
    return std::binary_search(locations_.begin(), locations_.end(), x);
  }

 private:
  std::vector<std::uint64_t> locations_;
  std::uint64_t universe_;
};

/// Unit-cost oracle accounting for one run.
struct OracleLedger {
  std::uint64_t invocations = 0;

  void charge(std::uint64_t queries = 1) noexcept { invocations += queries; }
};

inline StateVector new_uniform(std::size_t qubit_count) {
  StateVector::check_qubit_count(qubit_count);
  const auto n = universe_size(qubit_count);
  return {qubit_count, std::vector<Amplitude>(n, Amplitude{1.0 / std::sqrt(static_cast<double>(n))})};
}

namespace detail {
inline void check_same_universe(const StateVector& state, const MarkedSet& marked) {
  if (marked.universe_size() != state.size()) {
    throw std::invalid_argument("marked set universe " + std::to_string(marked.universe_size()) +
                                " does not match register size " + std::to_string(state.size()));
  }
}
}  // namespace detail

/// U_f: negate the amplitude of every marked label. One oracle query.
inline StateVector apply_oracle(StateVector state, const MarkedSet& marked, OracleLedger& ledger) {
  detail::check_same_universe(state, marked);
  for (auto x : marked.locations()) state[x] = -state[x];
  ledger.charge();
  return state;
}

/// D: inversion about the mean, c_x -> -c_x + 2<c>.
inline StateVector apply_diffusion(StateVector state) {
  auto amps = state.amplitudes();
  Amplitude sum{0.0, 0.0};
  for (const auto& c : amps) sum += c;
  const Amplitude twice_mean = 2.0 * sum / static_cast<double>(amps.size());
  for (auto& c : amps) c = twice_mean - c;
  return state;
}

/// G = D U_f.
inline StateVector apply_grover(StateVector state, const MarkedSet& marked, OracleLedger& ledger) {
  return apply_diffusion(apply_oracle(std::move(state), marked, ledger));
}

/// m applications of G starting from the uniform state.
inline StateVector iterate_grover(std::size_t qubit_count, const MarkedSet& marked, std::size_t m,
                                  OracleLedger& ledger) {
  auto state = new_uniform(qubit_count);
  for (std::size_t i = 0; i < m; ++i) state = apply_grover(std::move(state), marked, ledger);
  return state;
}

/// Rotation angle of G in its two-dimensional invariant plane,
/// sin(theta/2) = sqrt(M/N). For M = 1 this is cos(theta) = 1 - 2/N.
inline double grover_angle(std::uint64_t universe, std::uint64_t marked_count) {
  if (marked_count < 1 || marked_count >= universe) {
    throw std::invalid_argument("marked count must satisfy 1 <= M < N (M=" +
                                std::to_string(marked_count) + ", N=" + std::to_string(universe) + ")");
  }
  return 2.0 * std::asin(std::sqrt(static_cast<double>(marked_count) / static_cast<double>(universe)));
}

/// Analytic state after m iterates: sin[(2m+1)theta/2]/sqrt(M) on S and
/// cos[(2m+1)theta/2]/sqrt(N-M) elsewhere.
inline StateVector closed_form_state(std::size_t qubit_count, const MarkedSet& marked, std::size_t m) {
  StateVector::check_qubit_count(qubit_count);
  const auto n = universe_size(qubit_count);
  if (marked.universe_size() != n) {
    throw std::invalid_argument("marked set universe does not match register size");
  }
  const auto count = marked.count();
  const double half_angle = (2.0 * static_cast<double>(m) + 1.0) * grover_angle(n, count) / 2.0;
  const double on = std::sin(half_angle) / std::sqrt(static_cast<double>(count));
  const double off = std::cos(half_angle) / std::sqrt(static_cast<double>(n - count));

  std::vector<Amplitude> amps(n, Amplitude{off});
  for (auto x : marked.locations()) amps[x] = on;
  return {qubit_count, std::move(amps)};
}

/// Debug dump: [[re, im], ...] in label order.
inline void to_json(nlohmann::json& j, const StateVector& state) {
  j = nlohmann::json::array();
  for (const auto& c : state.amplitudes()) j.push_back({c.real(), c.imag()});
}

}  // namespace grover_ev
