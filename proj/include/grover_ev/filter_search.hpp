#pragma once

// Filtered-EV search for one marked item among M. Bits of a marked location
// are read one stage at a time: stage k+1 averages the unmodified run with a
// run where a conditional flip C_{k+1} moves every label whose first k bits
// disagree with the bits found so far, which cancels their contribution to
// <sigma_z(k+1)>.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "grover_ev/constants.hpp"
#include "grover_ev/measurement.hpp"
#include "grover_ev/state_vector.hpp"

namespace grover_ev {

/// Count of primitive boolean operations spent evaluating g.
struct PrimitiveOpTally {
  std::uint64_t xors = 0;
  std::uint64_t products = 0;

  std::uint64_t total() const noexcept { return xors + products; }
};

/// g = prod_i (x_i XOR s_i XOR 1) XOR 1: 0 when x matches s on all k bits.
/// Index i-1 of both sequences holds qubit i. Costs 3k primitive ops
/// (2k XORs in the factors, k-1 products, one final XOR).
inline unsigned eval_g(std::span<const unsigned> x_bits, std::span<const unsigned> s_bits,
                       PrimitiveOpTally& tally) {
  if (x_bits.size() != s_bits.size() || x_bits.empty()) {
    throw std::invalid_argument("g needs two bit sequences of equal nonzero length");
  }
  unsigned product = 1;
  for (std::size_t i = 0; i < x_bits.size(); ++i) {
    if (x_bits[i] > 1 || s_bits[i] > 1) throw std::invalid_argument("bit values must be 0 or 1");
    const unsigned factor = x_bits[i] ^ s_bits[i] ^ 1U;
    tally.xors += 2;
    if (i == 0) {
      product = factor;
    } else {
      product *= factor;
      ++tally.products;
    }
  }
  ++tally.xors;
  return product ^ 1U;
}

inline unsigned eval_g(std::span<const unsigned> x_bits, std::span<const unsigned> s_bits) {
  PrimitiveOpTally tally;
  return eval_g(x_bits, s_bits, tally);
}

/// Primitive ops to evaluate g once per stage k = 1 .. L-1: 3 L (L-1) / 2.
inline std::uint64_t g_schedule_cost(std::size_t qubit_count) {
  const std::uint64_t l = qubit_count;
  return l == 0 ? 0 : 3 * l * (l - 1) / 2;
}

/// C_{target}(s): flips qubit `target` on every label whose first k = target-1
/// bits differ from s_bits.
inline StateVector apply_correlation(StateVector state, std::size_t target, std::span<const unsigned> s_bits) {
  const std::size_t k = s_bits.size();
  if (k < 1 || target != k + 1 || target > state.qubit_count()) {
    throw std::invalid_argument("correlation target " + std::to_string(target) +
                                " needs exactly target-1 >= 1 fixed bits and target <= " +
                                std::to_string(state.qubit_count()));
  }
  const std::uint64_t flip = std::uint64_t{1} << (target - 1);
  std::array<unsigned, kMaxQubits> prefix{};
  for (std::uint64_t x = 0; x < state.size(); ++x) {
    if (x & flip) continue;
    for (std::size_t i = 0; i < k; ++i) prefix[i] = qubit_bit(x, i + 1);
    if (eval_g(std::span<const unsigned>(prefix.data(), k), s_bits) == 1U) {
      std::swap(state[x], state[x | flip]);
    }
  }
  return state;
}

/// Mean of the plain and correlated EVs on the correlation target.
inline double averaged_ev(const RunRecord& plain, const RunRecord& correlated, std::size_t target) {
  if (plain.correlation) throw std::invalid_argument("plain run must not carry a correlation");
  if (!correlated.correlation || correlated.correlation->target_qubit != target) {
    throw std::invalid_argument("correlated run was not taken with target qubit " + std::to_string(target));
  }
  if (plain.iterates_used != correlated.iterates_used) {
    throw std::invalid_argument("runs used different iterate counts");
  }
  if (target < 1 || target > plain.evs.size() || plain.evs.size() != correlated.evs.size()) {
    throw std::invalid_argument("target qubit outside the measured register");
  }
  return (plain.evs[target - 1] + correlated.evs[target - 1]) / 2.0;
}

struct SearchResult {
  std::uint64_t location = 0;
  bool verified = false;
  std::uint64_t total_runs = 0;
  /// Iterate queries plus verification queries.
  std::uint64_t oracle_invocations = 0;
  std::uint64_t iterate_invocations = 0;
  std::uint64_t verification_queries = 0;
  std::uint64_t branch_events = 0;
  std::size_t iterates_per_run = 0;
  /// bits[i] is qubit i+1 of the location.
  std::vector<unsigned> bits;
};

/// Every branch of the bit search failed verification.
class search_failure : public std::runtime_error {
 public:
  search_failure(const std::string& what, SearchResult partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}

  const SearchResult& partial() const noexcept { return partial_; }

 private:
  SearchResult partial_;
};

/// Runs the filtered-EV protocol with m iterates per run and returns a
/// verified marked location. One plain run is reused by every stage; each
/// stage k >= 1 adds one correlated run. Undecided EVs branch (bit 0 first)
/// and the finished candidate is checked with a single oracle query, with
/// backtracking to the latest open branch on failure.
inline SearchResult extract_location(const MarkedSet& marked, std::size_t m, const EnsembleModel& model,
                                     double a_th) {
  if (m < 1) throw std::invalid_argument("search needs at least one Grover iterate");
  if (!(a_th >= 0.0)) throw std::invalid_argument("threshold must be non-negative");
  detail::check_model(model);
  const std::size_t qubits = qubits_for(marked.universe_size());

  SearchResult result;
  result.iterates_per_run = m;

  // The evolution before readout is deterministic, so it is simulated once;
  // each run is still charged its own m oracle queries.
  OracleLedger prepared_ledger;
  const StateVector prepared = iterate_grover(qubits, marked, m, prepared_ledger);

  auto execute_run = [&](std::optional<Correlation> correlation) {
    OracleLedger ledger;
    ledger.charge(prepared_ledger.invocations);
    StateVector state = prepared;
    if (correlation) state = apply_correlation(std::move(state), correlation->target_qubit, correlation->fixed_bits);
    EnsembleModel run_model = model;
    run_model.seed = derive_seed(model.seed, result.total_runs);
    ++result.total_runs;
    result.iterate_invocations += ledger.invocations;
    return measure_all(state, run_model, {m, ledger.invocations, std::move(correlation)});
  };

  const RunRecord plain = execute_run(std::nullopt);

  std::vector<std::vector<unsigned>> open_branches;
  std::vector<unsigned> prefix;
  OracleLedger verification;
  while (true) {
    while (prefix.size() < qubits) {
      const std::size_t target = prefix.size() + 1;
      double ev = plain.evs[0];
      if (target > 1) {
        const RunRecord correlated = execute_run(Correlation{target, prefix});
        ev = averaged_ev(plain, correlated, target);
      }
      switch (decide_sign(ev, a_th)) {
        case SignDecision::bit0: prefix.push_back(0); break;
        case SignDecision::bit1: prefix.push_back(1); break;
        case SignDecision::undecided:
          ++result.branch_events;
          open_branches.push_back(prefix);
          open_branches.back().push_back(1);
          prefix.push_back(0);
          break;
      }
    }

    std::uint64_t candidate = 0;
    for (std::size_t i = 0; i < qubits; ++i) candidate |= std::uint64_t{prefix[i]} << i;
    verification.charge();
    result.location = candidate;
    result.bits = prefix;
    result.verification_queries = verification.invocations;
    result.oracle_invocations = result.iterate_invocations + result.verification_queries;
    if (marked.contains(candidate)) {
      result.verified = true;
      return result;
    }
    if (open_branches.empty()) {
      throw search_failure("all branches failed verification; the EV signs did not lead to a marked item", result);
    }
    prefix = std::move(open_branches.back());
    open_branches.pop_back();
  }
}

inline void to_json(nlohmann::json& j, const SearchResult& r) {
  j = nlohmann::json{{"location", r.location},
                     {"verified", r.verified},
                     {"total_runs", r.total_runs},
                     {"oracle_invocations", r.oracle_invocations},
                     {"iterate_invocations", r.iterate_invocations},
                     {"verification_queries", r.verification_queries},
                     {"branch_events", r.branch_events},
                     {"m", r.iterates_per_run},
                     {"bits", r.bits}};
}

}  // namespace grover_ev
