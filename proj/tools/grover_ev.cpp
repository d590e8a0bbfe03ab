// grover-ev: plan, search and sweep truncated / filtered EV Grover runs.
//
// Exit codes: 0 success, 1 search failure, 2 usage or configuration error.

#include <array>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "grover_ev/filter_search.hpp"
#include "grover_ev/harness.hpp"
#include "grover_ev/planner.hpp"

namespace {

using grover_ev::harness::config_error;
using grover_ev::harness::ExperimentConfig;
using grover_ev::harness::OutputFormat;
using nlohmann::json;

constexpr int kExitSearchFailure = 1;
constexpr int kExitUsage = 2;

struct RawOptions {
  CLI::Option* m_count = nullptr;
  CLI::Option* a_th = nullptr;
  CLI::Option* m = nullptr;
  CLI::Option* format = nullptr;
  CLI::Option* sweep = nullptr;
  std::uint64_t m_count_value = 0;
  double a_th_value = 0.0;
  std::size_t m_value = 0;
  std::string format_value;
  std::string sweep_value;
};

void add_common(CLI::App* sub, ExperimentConfig& config, RawOptions& raw) {
  // Not required for sweeps over N.
  sub->add_option("--n", config.universe, "Database size N (a power of two)");
  raw.m_count = sub->add_option("--m-count", raw.m_count_value, "Number of marked items M");
  sub->add_option("--marked", config.marked, "Explicit marked locations, comma separated")->delimiter(',');
  raw.a_th = sub->add_option("--a-th", raw.a_th_value,
                             "Threshold EV attenuation (default 5/sqrt(shots), or 1e-9 when exact)");
  sub->add_option("--shots", config.shots, "Ensemble size per run (0 = exact EVs)");
  sub->add_option("--sigma", config.sigma, "Additive Gaussian noise on every EV");
  sub->add_option("--seed", config.seed, "Seed for every random draw");
  raw.m = sub->add_option("--m", raw.m_value, "Override the number of Grover iterates");
  raw.format = sub->add_option("--format", raw.format_value, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  sub->add_option("--out", config.out, "Write to PATH instead of standard output");
}

std::ostream& open_output(const std::string& path, std::ofstream& file) {
  if (path.empty()) return std::cout;
  file.open(path);
  if (!file) throw config_error("cannot write to '" + path + "'");
  return file;
}

int run_plan(const ExperimentConfig& config) {
  const auto plan = grover_ev::make_plan(config.universe, *config.marked_count,
                                         grover_ev::harness::resolved_threshold(config));
  std::ofstream file;
  auto& os = open_output(config.out, file);
  if (config.format == OutputFormat::csv) {
    grover_ev::harness::GridPoint point{config.universe, config.a_th, config.shots, config.m_override};
    grover_ev::harness::write_csv(os, {grover_ev::harness::compute_row(config, point, config.seed, false)});
  } else {
    json j = plan;
    j["config"] = grover_ev::harness::config_json(config);
    os << j.dump() << '\n';
  }
  return 0;
}

int run_search(const ExperimentConfig& config) {
  const auto marked = grover_ev::harness::resolve_marked(config, config.universe);
  const double a_th = grover_ev::harness::resolved_threshold(config);
  const std::size_t m = config.m_override.value_or(
      std::max<std::size_t>(1, grover_ev::m_truncated(marked.universe_size(), marked.count(), a_th).iterations));
  std::ofstream file;
  auto& os = open_output(config.out, file);
  try {
    json j = grover_ev::extract_location(marked, m, grover_ev::harness::ensemble(config), a_th);
    j["config"] = grover_ev::harness::config_json(config);
    os << j.dump() << '\n';
    return 0;
  } catch (const grover_ev::search_failure& e) {
    json j{{"error", e.what()}, {"partial", e.partial()}, {"config", grover_ev::harness::config_json(config)}};
    os << j.dump() << '\n';
    std::cerr << "search failed: " << e.what() << '\n';
    return kExitSearchFailure;
  }
}

int run_sweep_command(const ExperimentConfig& config) {
  const auto rows = grover_ev::harness::run_sweep(config);
  std::ofstream file;
  auto& os = open_output(config.out, file);
  const json config_record = grover_ev::harness::config_json(config);
  if (config.format == OutputFormat::json) {
    json j{{"config", config_record}, {"rows", json::array()}};
    for (const auto& r : rows) j["rows"].push_back(grover_ev::harness::row_json(r));
    os << j.dump() << '\n';
    return 0;
  }
  grover_ev::harness::write_csv(os, rows);
  // The CSV schema is fixed, so the resolved config travels alongside it.
  if (config.out.empty()) {
    std::cerr << "# config " << config_record.dump() << '\n';
  } else {
    std::ofstream sidecar(config.out + ".config.json");
    if (!sidecar) throw config_error("cannot write '" + config.out + ".config.json'");
    sidecar << config_record.dump(2) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Truncated and filtered expectation-value Grover search: plan, search, sweep"};
  app.require_subcommand(1);

  ExperimentConfig config;
  std::array<RawOptions, 3> raws;
  auto* plan = app.add_subcommand("plan", "Print the truncation plan for (N, M, a_th)");
  auto* search = app.add_subcommand("search", "Locate a marked item with the filtered-EV protocol");
  auto* sweep = app.add_subcommand("sweep", "Evaluate a grid of plans and sign-error rates as CSV");
  const std::array<CLI::App*, 3> subs{plan, search, sweep};
  for (std::size_t i = 0; i < subs.size(); ++i) add_common(subs[i], config, raws[i]);
  raws[2].sweep = sweep->add_option("--sweep", raws[2].sweep_value, "VAR=VALUES with VAR in {m, a_th, N, shots}")->required();
  sweep->add_option("--trials", config.trials, "Seeded ensembles per grid point for the sign-error rate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    std::size_t chosen = 0;
    while (!subs[chosen]->parsed()) ++chosen;
    const RawOptions& raw = raws[chosen];
    config.command = subs[chosen]->get_name();
    if (raw.m_count->count()) config.marked_count = raw.m_count_value;
    if (raw.a_th->count()) config.a_th = raw.a_th_value;
    if (raw.m->count()) config.m_override = raw.m_value;
    config.format = config.command == "sweep" ? OutputFormat::csv : OutputFormat::json;
    if (raw.format->count()) config.format = raw.format_value == "csv" ? OutputFormat::csv : OutputFormat::json;
    if (config.command == "search" && config.format == OutputFormat::csv) {
      throw config_error("search writes JSON only");
    }
    if (config.command == "sweep") config.sweep = grover_ev::harness::parse_sweep(raw.sweep_value);
    grover_ev::harness::validate(config);

    if (config.command == "plan") return run_plan(config);
    if (config.command == "search") return run_search(config);
    return run_sweep_command(config);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}
