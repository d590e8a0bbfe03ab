#pragma once

// <sigma_z(k)> readout: exact, and under a finite-ensemble model where each
// of `shots` molecules is measured once in the computational basis.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "grover_ev/constants.hpp"
#include "grover_ev/state_vector.hpp"

namespace grover_ev {

struct EnsembleModel {
  /// 0 means an infinite ensemble (exact expectation values).
  std::uint64_t shots = 0;
  std::uint64_t seed = 0;
  /// Additive Gaussian noise on each reported EV.
  double gaussian_noise_sigma = 0.0;
};

/// Conditional bit flip applied before readout in a correlated run.
struct Correlation {
  std::size_t target_qubit = 0;
  /// fixed_bits[i] is the determined value of qubit i+1.
  std::vector<unsigned> fixed_bits;

  bool operator==(const Correlation&) const = default;
};

struct RunMetadata {
  std::size_t iterates_used = 0;
  std::uint64_t oracle_invocations = 0;
  std::optional<Correlation> correlation;
};

struct RunRecord {
  /// evs[k-1] = <sigma_z(k)>.
  std::vector<double> evs;
  std::size_t iterates_used = 0;
  std::uint64_t oracle_invocations = 0;
  std::optional<Correlation> correlation;

  bool operator==(const RunRecord&) const = default;
};

enum class SignDecision { bit0, bit1, undecided };

/// Independent 64-bit seed for sub-stream `stream` of `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::uint32_t words[2];
  seq.generate(std::begin(words), std::end(words));
  return (std::uint64_t{words[1]} << 32) | words[0];
}

namespace detail {

inline void check_qubit_index(const StateVector& state, std::size_t k) {
  if (k < 1 || k > state.qubit_count()) {
    throw std::invalid_argument("qubit index " + std::to_string(k) + " outside [1, " +
                                std::to_string(state.qubit_count()) + "]");
  }
}

inline void check_model(const EnsembleModel& model) {
  if (!(model.gaussian_noise_sigma >= 0.0) || !std::isfinite(model.gaussian_noise_sigma)) {
    throw std::invalid_argument("noise sigma must be a finite non-negative number");
  }
}

// Stream 0 drives basis sampling; stream 1+k drives the noise on qubit k.
inline std::mt19937_64 sampling_engine(std::uint64_t seed) { return std::mt19937_64{derive_seed(seed, 0)}; }
inline std::mt19937_64 noise_engine(std::uint64_t seed, std::size_t k) {
  return std::mt19937_64{derive_seed(seed, 1 + k)};
}

inline double add_noise(double ev, const EnsembleModel& model, std::size_t k) {
  const double sigma = model.gaussian_noise_sigma;
  if (sigma == 0.0) return ev;
  auto engine = noise_engine(model.seed, k);
  std::normal_distribution<double> gauss(0.0, sigma);
  const double bound = 1.0 + 3.0 * sigma;
  return std::clamp(ev + gauss(engine), -bound, bound);
}

}  // namespace detail

/// Sum_x |c_x|^2 (-1)^{x_k}.
inline double exact_ev(const StateVector& state, std::size_t k) {
  detail::check_qubit_index(state, k);
  double zero = 0.0;
  double one = 0.0;
  const auto amps = state.amplitudes();
  for (std::uint64_t x = 0; x < amps.size(); ++x) {
    (qubit_bit(x, k) ? one : zero) += std::norm(amps[x]);
  }
  return zero - one;
}

/// exact_ev for every qubit, in qubit order.
inline std::vector<double> exact_evs(const StateVector& state) {
  std::vector<double> evs(state.qubit_count());
  for (std::size_t k = 1; k <= evs.size(); ++k) evs[k - 1] = exact_ev(state, k);
  return evs;
}

/// Inverse-CDF sampler over the basis distribution |c_x|^2.
class BasisSampler {
 public:
  explicit BasisSampler(const StateVector& state) : qubit_count_(state.qubit_count()) {
    cumulative_.reserve(state.size());
    double running = 0.0;
    for (const auto& c : state.amplitudes()) {
      running += std::norm(c);
      cumulative_.push_back(running);
    }
  }

  std::size_t qubit_count() const noexcept { return qubit_count_; }

  template <class Engine>
  std::uint64_t draw(Engine& engine) const {
    std::uniform_real_distribution<double> uniform(0.0, cumulative_.back());
    const double u = uniform(engine);
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    const auto last = static_cast<std::uint64_t>(cumulative_.size() - 1);
    return std::min(static_cast<std::uint64_t>(it - cumulative_.begin()), last);
  }

  /// Empirical <sigma_z(k)> for every k from one shared set of `shots` samples.
  std::vector<double> empirical_evs(std::uint64_t shots, std::uint64_t seed) const {
    auto engine = detail::sampling_engine(seed);
    std::vector<std::uint64_t> ones(qubit_count_, 0);
    for (std::uint64_t i = 0; i < shots; ++i) {
      const auto x = draw(engine);
      for (std::size_t k = 1; k <= qubit_count_; ++k) ones[k - 1] += qubit_bit(x, k);
    }
    std::vector<double> evs(qubit_count_);
    const double n = static_cast<double>(shots);
    for (std::size_t k = 0; k < qubit_count_; ++k) {
      evs[k] = (n - 2.0 * static_cast<double>(ones[k])) / n;
    }
    return evs;
  }

 private:
  std::size_t qubit_count_;
  std::vector<double> cumulative_;
};

/// Applies the model's additive noise to a full set of per-qubit EVs.
inline std::vector<double> with_noise(std::vector<double> evs, const EnsembleModel& model) {
  detail::check_model(model);
  for (std::size_t k = 1; k <= evs.size(); ++k) evs[k - 1] = detail::add_noise(evs[k - 1], model, k);
  return evs;
}

/// Finite-ensemble estimate of <sigma_z(k)>. Deterministic in model.seed and
/// consistent with measure_all (same samples for every k).
inline double sampled_ev(const StateVector& state, std::size_t k, const EnsembleModel& model) {
  detail::check_qubit_index(state, k);
  detail::check_model(model);
  double ev = 0.0;
  if (model.shots == 0) {
    ev = exact_ev(state, k);
  } else {
    ev = BasisSampler(state).empirical_evs(model.shots, model.seed)[k - 1];
  }
  return detail::add_noise(ev, model, k);
}

inline RunRecord measure_all(const StateVector& state, const EnsembleModel& model, RunMetadata meta) {
  detail::check_model(model);
  RunRecord record;
  record.evs = with_noise(model.shots == 0 ? exact_evs(state)
                                            : BasisSampler(state).empirical_evs(model.shots, model.seed),
                          model);
  record.iterates_used = meta.iterates_used;
  record.oracle_invocations = meta.oracle_invocations;
  record.correlation = std::move(meta.correlation);
  return record;
}

/// ev > threshold -> bit 0; ev < -threshold -> bit 1; otherwise undecided.
inline SignDecision decide_sign(double ev, double threshold) {
  if (ev > threshold) return SignDecision::bit0;
  if (ev < -threshold) return SignDecision::bit1;
  return SignDecision::undecided;
}

/// 5/sqrt(shots) for a finite ensemble, 1e-9 for an exact one.
inline double default_threshold(const EnsembleModel& model) {
  if (model.shots == 0) return kExactEnsembleThreshold;
  return kSigmaMultiple / std::sqrt(static_cast<double>(model.shots));
}

inline void to_json(nlohmann::json& j, const Correlation& c) {
  j = nlohmann::json{{"target_qubit", c.target_qubit}, {"fixed_bits", c.fixed_bits}};
}

inline void to_json(nlohmann::json& j, const RunRecord& record) {
  j = nlohmann::json{{"evs", record.evs},
                     {"m", record.iterates_used},
                     {"oracle_invocations", record.oracle_invocations},
                     {"correlation", nullptr}};
  if (record.correlation) j["correlation"] = *record.correlation;
}

}  // namespace grover_ev
