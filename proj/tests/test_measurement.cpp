#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "grover_ev/measurement.hpp"
#include "grover_ev/planner.hpp"
#include "grover_ev/state_vector.hpp"
#include "oracles.hpp"

using namespace grover_ev;
using Catch::Matchers::WithinAbs;

TEST_CASE("exact_ev", "[measurement]") {
  const auto uniform = new_uniform(5);
  for (std::size_t k = 1; k <= 5; ++k) CHECK_THAT(exact_ev(uniform, k), WithinAbs(0.0, 1e-15));

  for (std::uint64_t s = 0; s < 16; ++s) {
    const auto basis = StateVector::basis(4, s);
    for (std::size_t k = 1; k <= 4; ++k) CHECK(exact_ev(basis, k) == (oracles::bit(s, k) ? -1.0 : 1.0));
  }

  const MarkedSet five({5}, 16);
  for (std::size_t m = 0; m <= 6; ++m) {
    const auto state = closed_form_state(4, five, m);
    for (std::size_t k = 1; k <= 4; ++k) {
      const double sign = oracles::bit(5, k) ? -1.0 : 1.0;
      CHECK_THAT(exact_ev(state, k), WithinAbs(sign * attenuation(16, 1, m), 1e-12));
    }
  }

  CHECK_THROWS_AS(exact_ev(uniform, 0), std::invalid_argument);
  CHECK_THROWS_AS(exact_ev(uniform, 6), std::invalid_argument);
}

TEST_CASE("exact_ev is linear in the probabilities", "[measurement][property]") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Amplitude> amps(32);
    double norm = 0.0;
    for (auto& a : amps) {
      a = {gauss(rng), gauss(rng)};
      norm += std::norm(a);
    }
    std::vector<double> probabilities(32);
    for (std::size_t x = 0; x < 32; ++x) {
      amps[x] /= std::sqrt(norm);
      probabilities[x] = std::norm(amps[x]);
    }
    const StateVector state(5, amps);
    for (std::size_t k = 1; k <= 5; ++k) {
      CHECK_THAT(exact_ev(state, k), WithinAbs(oracles::ev_from_probabilities(probabilities, k), 1e-14));
    }
  }
}

TEST_CASE("sampled_ev", "[measurement]") {
  const auto state = closed_form_state(4, MarkedSet({5}, 16), 1);

  SECTION("shots = 0 and sigma = 0 reproduce exact_ev") {
    for (std::size_t k = 1; k <= 4; ++k) CHECK(sampled_ev(state, k, {0, 42, 0.0}) == exact_ev(state, k));
  }

  SECTION("a basis state gives the exact sign for any shot count") {
    const auto basis = StateVector::basis(4, 9);
    for (std::uint64_t n : {1, 2, 17, 1000}) {
      for (std::size_t k = 1; k <= 4; ++k) {
        CHECK(sampled_ev(basis, k, {n, n * 31, 0.0}) == (oracles::bit(9, k) ? -1.0 : 1.0));
      }
    }
  }

  SECTION("uniform state at n = 1e4 stays inside five standard errors") {
    const auto uniform = new_uniform(3);
    const std::uint64_t n = 10000;
    int outside = 0;
    for (std::uint64_t seed = 0; seed < 2000; ++seed) {
      if (std::abs(sampled_ev(uniform, 1, {n, seed, 0.0})) > 5.0 / std::sqrt(double(n))) ++outside;
    }
    // At most 0.01% of seeds may fall outside; 2000 seeds allow none.
    CHECK(outside == 0);
  }

  SECTION("same seed gives the same estimate, different seeds differ") {
    CHECK(sampled_ev(state, 2, {500, 9, 0.0}) == sampled_ev(state, 2, {500, 9, 0.0}));
    CHECK(sampled_ev(state, 2, {500, 9, 0.0}) != sampled_ev(state, 2, {500, 10, 0.0}));
  }

  SECTION("errors") {
    CHECK_THROWS_AS(sampled_ev(state, 0, {}), std::invalid_argument);
    CHECK_THROWS_AS(sampled_ev(state, 1, {10, 1, -0.5}), std::invalid_argument);
  }
}

TEST_CASE("sampled_ev is an unbiased estimator", "[measurement][property]") {
  const auto state = closed_form_state(5, MarkedSet({19}, 32), 2);
  const std::uint64_t n = 200;
  for (std::size_t k = 1; k <= 5; ++k) {
    double mean = 0.0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) mean += sampled_ev(state, k, {n, seed, 0.0});
    mean /= 1000.0;
    CHECK(std::abs(mean - exact_ev(state, k)) <= 5.0 / std::sqrt(1000.0 * n));
  }
}

TEST_CASE("gaussian noise is bounded and seeded", "[measurement]") {
  const auto state = StateVector::basis(3, 0);
  const double sigma = 0.4;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const auto record = measure_all(state, {0, seed, sigma}, {});
    for (double ev : record.evs) CHECK(std::abs(ev) <= 1.0 + 3.0 * sigma);
  }
  CHECK(measure_all(state, {0, 4, sigma}, {}).evs != measure_all(state, {0, 5, sigma}, {}).evs);
  // Each qubit gets its own noise draw.
  const auto evs = measure_all(state, {0, 4, sigma}, {}).evs;
  CHECK(evs[0] != evs[1]);
}

TEST_CASE("decide_sign", "[measurement]") {
  CHECK(decide_sign(0.4375, 0.25) == SignDecision::bit0);
  CHECK(decide_sign(-1.0, 0.999) == SignDecision::bit1);
  CHECK(decide_sign(0.0, 0.1) == SignDecision::undecided);
  CHECK(decide_sign(0.25, 0.25) == SignDecision::undecided);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> ev(-1.0, 1.0);
  std::uniform_real_distribution<double> th(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double e = ev(rng);
    const double t = th(rng);
    const auto a = decide_sign(e, t);
    const auto b = decide_sign(-e, t);
    if (a == SignDecision::bit0) CHECK(b == SignDecision::bit1);
    if (a == SignDecision::bit1) CHECK(b == SignDecision::bit0);
    if (a == SignDecision::undecided) CHECK(b == SignDecision::undecided);
  }
}

TEST_CASE("default_threshold", "[measurement]") {
  CHECK(default_threshold({0, 0, 0.0}) == kExactEnsembleThreshold);
  CHECK_THAT(default_threshold({10000, 0, 0.0}), WithinAbs(0.05, 1e-15));
}

TEST_CASE("measure_all", "[measurement]") {
  const auto basis = StateVector::basis(4, 6);
  const auto record = measure_all(basis, {}, {3, 3, std::nullopt});
  CHECK(record.evs == std::vector<double>{1.0, -1.0, -1.0, 1.0});
  CHECK(record.iterates_used == 3);
  CHECK(record.oracle_invocations == 3);

  const auto zeros = measure_all(new_uniform(4), {}, {});
  for (double ev : zeros.evs) CHECK_THAT(ev, WithinAbs(0.0, 1e-15));

  const auto state = closed_form_state(4, MarkedSet({11}, 16), 1);
  const EnsembleModel model{4096, 77, 0.05};
  const auto first = measure_all(state, model, {1, 1, Correlation{2, {1}}});
  CHECK(first == measure_all(state, model, {1, 1, Correlation{2, {1}}}));

  SECTION("one shared sample set across qubits matches per-qubit sampled_ev") {
    for (std::size_t k = 1; k <= 4; ++k) CHECK(first.evs[k - 1] == sampled_ev(state, k, model));
  }
}

TEST_CASE("RunRecord JSON schema", "[measurement]") {
  RunRecord record{{0.5, -0.25}, 2, 2, std::nullopt};
  CHECK(nlohmann::json(record).dump() == R"({"correlation":null,"evs":[0.5,-0.25],"m":2,"oracle_invocations":2})");
  record.correlation = Correlation{2, {1}};
  CHECK(nlohmann::json(record)["correlation"].dump() == R"({"fixed_bits":[1],"target_qubit":2})");
}
