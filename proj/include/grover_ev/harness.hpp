#pragma once

// Experiment configuration, sweep grids and result writers behind the
// grover-ev command line tool.
//
// Sweep CSV schema (column order is fixed):
//   N,M,m,a_th,A_m,m_stand,m_trunc,m_trunc_estimate,ev_sign_error_rate,seed
// Floating-point columns use 12 significant digits; undefined values are
// written as `nan`.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "grover_ev/constants.hpp"
#include "grover_ev/filter_search.hpp"
#include "grover_ev/measurement.hpp"
#include "grover_ev/planner.hpp"
#include "grover_ev/state_vector.hpp"

namespace grover_ev::harness {

/// Invalid command-line configuration (exit code 2).
class config_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class OutputFormat { json, csv };

enum class SweepVariable { m, a_th, universe, shots };

struct SweepSpec {
  SweepVariable variable = SweepVariable::m;
  std::vector<double> values;
};

struct ExperimentConfig {
  std::string command;
  std::uint64_t universe = 0;
  std::optional<std::uint64_t> marked_count;
  std::vector<std::uint64_t> marked;
  std::optional<double> a_th;
  std::uint64_t shots = 0;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  std::optional<std::size_t> m_override;
  OutputFormat format = OutputFormat::json;
  std::string out;
  std::uint64_t trials = 1000;
  std::optional<SweepSpec> sweep;
};

inline std::string_view to_string(SweepVariable v) {
  switch (v) {
    case SweepVariable::m: return "m";
    case SweepVariable::a_th: return "a_th";
    case SweepVariable::universe: return "N";
    case SweepVariable::shots: return "shots";
  }
  return "?";
}

namespace detail {

inline double parse_number(std::string_view text) {
  const std::string s(text);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
    throw config_error("not a number: '" + s + "'");
  }
  return v;
}

inline std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

inline bool is_integral(double v) { return v >= 0 && std::floor(v) == v; }

}  // namespace detail

/// Parses VAR=VALUES where VAR is m, a_th, N or shots and VALUES is a comma
/// list or an inclusive integer range lo:hi[:step]. For N a range lists the
/// powers of two in [lo, hi].
inline SweepSpec parse_sweep(std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos) throw config_error("sweep must look like VAR=VALUES");
  const auto name = text.substr(0, eq);
  const auto values = text.substr(eq + 1);

  SweepSpec spec;
  if (name == "m") spec.variable = SweepVariable::m;
  else if (name == "a_th") spec.variable = SweepVariable::a_th;
  else if (name == "N") spec.variable = SweepVariable::universe;
  else if (name == "shots") spec.variable = SweepVariable::shots;
  else throw config_error("unknown sweep variable '" + std::string(name) + "' (use m, a_th, N or shots)");

  if (values.find(':') != std::string_view::npos) {
    const auto bounds = detail::split(values, ':');
    if (bounds.size() < 2 || bounds.size() > 3) throw config_error("range must be lo:hi or lo:hi:step");
    const double lo = detail::parse_number(bounds[0]);
    const double hi = detail::parse_number(bounds[1]);
    const double step = bounds.size() == 3 ? detail::parse_number(bounds[2]) : 1.0;
    if (!detail::is_integral(lo) || !detail::is_integral(hi) || !detail::is_integral(step) || step == 0 || lo > hi) {
      throw config_error("range bounds must be non-negative integers with lo <= hi and step >= 1");
    }
    if (spec.variable == SweepVariable::a_th) throw config_error("a_th takes a comma list, not a range");
    if (spec.variable == SweepVariable::universe) {
      for (double n = 1; n <= hi; n *= 2) {
        if (n >= lo) spec.values.push_back(n);
      }
    } else {
      for (double v = lo; v <= hi; v += step) spec.values.push_back(v);
    }
  } else {
    for (auto part : detail::split(values, ',')) spec.values.push_back(detail::parse_number(part));
  }
  if (spec.values.empty()) throw config_error("sweep has no grid points");
  for (double v : spec.values) {
    if (spec.variable != SweepVariable::a_th && !detail::is_integral(v)) {
      throw config_error("sweep over " + std::string(name) + " needs non-negative integers");
    }
  }
  return spec;
}

inline std::uint64_t marked_count(const ExperimentConfig& config) {
  return config.marked.empty() ? config.marked_count.value_or(0) : config.marked.size();
}

inline void check_universe(std::uint64_t universe, bool needs_statevector) {
  if (universe < 2 || !is_power_of_two(universe)) {
    throw config_error("--n must be a power of two >= 2, got " + std::to_string(universe));
  }
  if (universe > (std::uint64_t{1} << 62)) throw config_error("--n is larger than 2^62");
  if (needs_statevector && universe > universe_size(kMaxQubits)) {
    throw config_error("--n exceeds the statevector cap of 2^" + std::to_string(kMaxQubits));
  }
}

/// Checks the invariants of a parsed configuration and fills in the
/// marked count from an explicit list.
inline void validate(ExperimentConfig& config) {
  const bool sweeping_n = config.sweep && config.sweep->variable == SweepVariable::universe;
  if (!sweeping_n) check_universe(config.universe, config.command == "search");
  if (!config.marked.empty()) {
    if (config.marked_count && *config.marked_count != config.marked.size()) {
      throw config_error("--m-count disagrees with the number of --marked locations");
    }
    config.marked_count = config.marked.size();
    const std::set<std::uint64_t> distinct(config.marked.begin(), config.marked.end());
    if (distinct.size() != config.marked.size()) throw config_error("--marked locations must be distinct");
    if (sweeping_n) throw config_error("an explicit --marked list cannot be combined with a sweep over N");
    for (auto x : config.marked) {
      if (x >= config.universe) throw config_error("marked location " + std::to_string(x) + " is outside [0, N)");
    }
  }
  if (!config.marked_count) throw config_error("give --m-count or --marked");
  if (*config.marked_count < 1) throw config_error("need at least one marked item");
  if (!sweeping_n && *config.marked_count >= config.universe) throw config_error("need M < N");
  if (config.a_th && !(*config.a_th >= 0.0 && *config.a_th < 1.0)) throw config_error("--a-th must be in [0, 1)");
  if (!(config.sigma >= 0.0) || !std::isfinite(config.sigma)) throw config_error("--sigma must be >= 0");
  if (config.m_override && *config.m_override < 1 && config.command == "search") {
    throw config_error("search needs --m >= 1");
  }
  if (config.command == "search" && config.format != OutputFormat::json) {
    throw config_error("search writes JSON only");
  }
  if (config.command == "sweep") {
    if (!config.sweep) throw config_error("sweep needs --sweep VAR=VALUES");
    if (config.trials < 1) throw config_error("--trials must be >= 1");
    for (double v : config.sweep->values) {
      switch (config.sweep->variable) {
        case SweepVariable::a_th:
          if (!(v >= 0.0 && v < 1.0)) throw config_error("swept a_th values must be in [0, 1)");
          break;
        case SweepVariable::universe:
          check_universe(static_cast<std::uint64_t>(v), false);
          if (*config.marked_count >= static_cast<std::uint64_t>(v)) throw config_error("need M < N at every grid point");
          break;
        default: break;
      }
    }
  }
}

/// The marked set for universe size N: the explicit list, or M distinct
/// locations drawn from a stream of the config seed keyed by N.
inline MarkedSet resolve_marked(const ExperimentConfig& config, std::uint64_t universe) {
  if (!config.marked.empty()) return {config.marked, universe};
  const auto count = marked_count(config);
  std::mt19937_64 engine{derive_seed(config.seed, universe)};
  std::uniform_int_distribution<std::uint64_t> pick(0, universe - 1);
  std::set<std::uint64_t> chosen;
  while (chosen.size() < count) chosen.insert(pick(engine));
  return {std::vector<std::uint64_t>(chosen.begin(), chosen.end()), universe};
}

inline EnsembleModel ensemble(const ExperimentConfig& config) { return {config.shots, config.seed, config.sigma}; }

inline double resolved_threshold(const ExperimentConfig& config) {
  return config.a_th.value_or(default_threshold(ensemble(config)));
}

inline nlohmann::json config_json(const ExperimentConfig& config) {
  nlohmann::json j{{"command", config.command},
                   {"N", config.universe},
                   {"M", marked_count(config)},
                   {"marked", config.marked},
                   {"a_th", resolved_threshold(config)},
                   {"a_th_source", config.a_th ? "flag" : "default-policy"},
                   {"shots", config.shots},
                   {"sigma", config.sigma},
                   {"seed", config.seed},
                   {"m_override", nullptr},
                   {"format", config.format == OutputFormat::json ? "json" : "csv"},
                   {"out", config.out}};
  if (config.m_override) j["m_override"] = *config.m_override;
  if (config.command == "sweep") {
    j["trials"] = config.trials;
    if (config.sweep) j["sweep"] = {{"variable", to_string(config.sweep->variable)}, {"values", config.sweep->values}};
  }
  return j;
}

struct SweepRow {
  std::uint64_t universe = 0;
  std::uint64_t marked_count = 0;
  std::size_t m = 0;
  double a_th = 0.0;
  double attenuation = 0.0;
  std::size_t m_stand = 0;
  std::size_t m_trunc = 0;
  std::optional<double> m_trunc_estimate;
  std::optional<double> ev_sign_error_rate;
  std::uint64_t seed = 0;
};

/// One grid point: the config with the swept variable substituted.
struct GridPoint {
  std::uint64_t universe = 0;
  std::optional<double> a_th;
  std::uint64_t shots = 0;
  std::optional<std::size_t> m;
};

inline std::vector<GridPoint> grid(const ExperimentConfig& config) {
  const GridPoint base{config.universe, config.a_th, config.shots, config.m_override};
  if (!config.sweep) return {base};
  std::vector<GridPoint> points;
  for (double v : config.sweep->values) {
    GridPoint p = base;
    switch (config.sweep->variable) {
      case SweepVariable::m: p.m = static_cast<std::size_t>(v); break;
      case SweepVariable::a_th: p.a_th = v; break;
      case SweepVariable::universe: p.universe = static_cast<std::uint64_t>(v); break;
      case SweepVariable::shots: p.shots = static_cast<std::uint64_t>(v); break;
    }
    points.push_back(p);
  }
  return points;
}

/// Fraction of sign decisions that miss the marked set's bitwise majority
/// (undecided counts as a miss), over `trials` seeded ensembles. Qubits where
/// S has no majority are skipped; empty when nothing is scored.
inline std::optional<double> sign_error_rate(const MarkedSet& marked, std::size_t m, const EnsembleModel& model,
                                             double a_th, std::uint64_t trials) {
  const std::size_t qubits = qubits_for(marked.universe_size());
  std::vector<int> reference(qubits, 0);
  for (std::size_t k = 1; k <= qubits; ++k) {
    for (auto x : marked.locations()) reference[k - 1] += qubit_bit(x, k) ? -1 : 1;
  }

  const StateVector state = closed_form_state(qubits, marked, m);
  const auto exact = exact_evs(state);
  const std::optional<BasisSampler> sampler =
      model.shots > 0 ? std::optional<BasisSampler>(std::in_place, state) : std::nullopt;
  if (model.shots == 0 && model.gaussian_noise_sigma == 0.0) trials = 1;

  std::uint64_t scored = 0;
  std::uint64_t missed = 0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    EnsembleModel trial = model;
    trial.seed = derive_seed(model.seed, t);
    const auto evs = with_noise(sampler ? sampler->empirical_evs(trial.shots, trial.seed) : exact, trial);
    for (std::size_t k = 0; k < qubits; ++k) {
      if (reference[k] == 0) continue;
      const auto expected = reference[k] > 0 ? SignDecision::bit0 : SignDecision::bit1;
      ++scored;
      if (decide_sign(evs[k], a_th) != expected) ++missed;
    }
  }
  if (scored == 0) return std::nullopt;
  return static_cast<double>(missed) / static_cast<double>(scored);
}

/// Evaluates one grid point. The error rate needs a statevector and is left
/// empty above the qubit cap or when `simulate` is false.
inline SweepRow compute_row(const ExperimentConfig& config, const GridPoint& point, std::uint64_t row_seed,
                            bool simulate = true) {
  const auto marked = simulate && point.universe <= universe_size(kMaxQubits)
                          ? std::optional<MarkedSet>(resolve_marked(config, point.universe))
                          : std::nullopt;
  const std::uint64_t count = marked ? marked->count() : marked_count(config);
  const EnsembleModel model{point.shots, row_seed, config.sigma};

  SweepRow row;
  row.universe = point.universe;
  row.marked_count = count;
  row.seed = row_seed;
  row.a_th = point.a_th.value_or(default_threshold(model));
  const auto plan = make_plan(point.universe, count, row.a_th);
  row.m_stand = plan.m_stand;
  row.m_trunc = plan.m_trunc;
  row.m_trunc_estimate = plan.m_trunc_estimate;
  row.m = point.m.value_or(plan.m_trunc);
  row.attenuation = attenuation(point.universe, count, row.m);
  if (marked) row.ev_sign_error_rate = sign_error_rate(*marked, row.m, model, row.a_th, config.trials);
  return row;
}

/// Worker count: GROVER_EV_THREADS when set to a positive integer, else the
/// hardware concurrency; never more than the number of rows.
inline std::size_t sweep_threads(std::size_t rows) {
  std::size_t threads = std::max(1U, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("GROVER_EV_THREADS")) {
    const long requested = std::strtol(env, nullptr, 10);
    if (requested > 0) threads = static_cast<std::size_t>(requested);
  }
  return std::max<std::size_t>(1, std::min(threads, rows));
}

/// Runs every grid point concurrently. Row i uses seed ^ i, and rows come
/// back in grid order whatever the scheduling.
inline std::vector<SweepRow> run_sweep(const ExperimentConfig& config) {
  const auto points = grid(config);
  std::vector<SweepRow> rows(points.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      try {
        rows[i] = compute_row(config, points[i], config.seed ^ static_cast<std::uint64_t>(i));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const auto threads = sweep_threads(points.size());
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return rows;
}

inline constexpr std::string_view kCsvHeader =
    "N,M,m,a_th,A_m,m_stand,m_trunc,m_trunc_estimate,ev_sign_error_rate,seed";

inline std::string format_real(std::optional<double> v) {
  if (!v || std::isnan(*v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", *v);
  return buf;
}

inline std::string csv_line(const SweepRow& r) {
  return std::to_string(r.universe) + ',' + std::to_string(r.marked_count) + ',' + std::to_string(r.m) + ',' +
         format_real(r.a_th) + ',' + format_real(r.attenuation) + ',' + std::to_string(r.m_stand) + ',' +
         std::to_string(r.m_trunc) + ',' + format_real(r.m_trunc_estimate) + ',' +
         format_real(r.ev_sign_error_rate) + ',' + std::to_string(r.seed);
}

inline void write_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << kCsvHeader << '\n';
  for (const auto& r : rows) os << csv_line(r) << '\n';
}

inline nlohmann::json row_json(const SweepRow& r) {
  nlohmann::json j{{"N", r.universe},       {"M", r.marked_count},   {"m", r.m},
                   {"a_th", r.a_th},        {"A_m", r.attenuation},  {"m_stand", r.m_stand},
                   {"m_trunc", r.m_trunc},  {"m_trunc_estimate", nullptr},
                   {"ev_sign_error_rate", nullptr}, {"seed", r.seed}};
  if (r.m_trunc_estimate) j["m_trunc_estimate"] = *r.m_trunc_estimate;
  if (r.ev_sign_error_rate) j["ev_sign_error_rate"] = *r.ev_sign_error_rate;
  return j;
}

}  // namespace grover_ev::harness
