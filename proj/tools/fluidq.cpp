// fluidq: fit Markov fluid models from power traces, solve their stationary
// reliability, compute decay rates, simulate, and size batteries.
//
// Exit codes: 0 success; 2 io, 3 parse, 4 model, 5 drift, 6 numeric;
// 1 unexpected failure.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fluidq/ctmc.hpp"
#include "fluidq/error.hpp"
#include "fluidq/fit.hpp"
#include "fluidq/fluid.hpp"
#include "fluidq/io.hpp"
#include "fluidq/ldp.hpp"
#include "fluidq/sim.hpp"
#include "fluidq/sizing.hpp"
#include "fluidq/version.hpp"

namespace {

using fluidq::Error;
using fluidq::ErrorCategory;
using nlohmann::json;

constexpr double kJoulesPerKwh = 3.6e6;

int exit_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::io: return 2;
    case ErrorCategory::parse: return 3;
    case ErrorCategory::model: return 4;
    case ErrorCategory::drift: return 5;
    case ErrorCategory::numeric: return 6;
  }
  return 1;
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::io, "cannot open config " + path);
  try {
    json config = json::parse(in);
    if (!config.is_object()) {
      throw Error(ErrorCategory::parse, path + ": config must be a JSON object");
    }
    return config;
  } catch (const json::exception& e) {
    throw Error(ErrorCategory::parse, path + ": " + e.what());
  }
}

// Energy values are SI numbers, or strings with a unit suffix
// ("2.5e6 J", "700 kWh").
double parse_energy(const json& value, const std::string& field) {
  if (value.is_number()) return value.get<double>();
  if (value.is_string()) {
    const std::string text = value.get<std::string>();
    std::istringstream stream(text);
    double magnitude = 0.0;
    std::string unit;
    if (!(stream >> magnitude)) {
      throw Error(ErrorCategory::parse, field + ": bad energy value \"" + text + "\"");
    }
    stream >> unit;
    double factor = 1.0;
    if (unit.empty() || unit == "J") factor = 1.0;
    else if (unit == "kJ") factor = 1e3;
    else if (unit == "MJ") factor = 1e6;
    else if (unit == "GJ") factor = 1e9;
    else if (unit == "kWh" || unit == "kwh" || unit == "KWH") factor = kJoulesPerKwh;
    else {
      throw Error(ErrorCategory::parse,
                  field + ": unknown energy unit \"" + unit + "\"");
    }
    return magnitude * factor;
  }
  throw Error(ErrorCategory::parse, field + " must be a number or a string");
}

// flag > config > default
class Settings {
 public:
  Settings(const CLI::App* app, json config) : app_(app), config_(std::move(config)) {}

  bool flag_given(const std::string& flag) const { return app_->count(flag) > 0; }

  template <typename T>
  T flag_value(const std::string& flag) const {
    return app_->get_option(flag)->as<T>();
  }

  template <typename T>
  T get(const std::string& flag, const std::string& key, T fallback) const {
    if (app_->count(flag) > 0) {
      return app_->get_option(flag)->as<T>();
    }
    if (config_.contains(key)) {
      try {
        return config_.at(key).get<T>();
      } catch (const json::exception& e) {
        throw Error(ErrorCategory::parse, "config field \"" + key + "\": " + e.what());
      }
    }
    return fallback;
  }

  template <typename T>
  T require(const std::string& flag, const std::string& key) const {
    if (app_->count(flag) == 0 && !config_.contains(key)) {
      throw Error(ErrorCategory::parse,
                  "missing required parameter \"" + key + "\" (flag " + flag + ")");
    }
    return get<T>(flag, key, T{});
  }

  double energy(const std::string& flag, const std::string& key,
                std::optional<double> fallback = std::nullopt) const {
    if (app_->count(flag) > 0) {
      return parse_energy(json(app_->get_option(flag)->as<std::string>()), key);
    }
    if (config_.contains(key)) return parse_energy(config_.at(key), key);
    if (fallback) return *fallback;
    throw Error(ErrorCategory::parse,
                "missing required parameter \"" + key + "\" (flag " + flag + ")");
  }

  bool has(const std::string& flag, const std::string& key) const {
    return app_->count(flag) > 0 || config_.contains(key);
  }

  const json& config() const { return config_; }

 private:
  const CLI::App* app_;
  json config_;
};

struct OutputTarget {
  std::string path;  // empty = stdout

  template <typename Fn>
  void write(Fn&& fn) const {
    if (path.empty()) {
      fn(std::cout);
      return;
    }
    std::ofstream out(path);
    if (!out) throw Error(ErrorCategory::io, "cannot write " + path);
    fn(out);
    if (!out) throw Error(ErrorCategory::io, "failed while writing " + path);
  }
};

std::string config_hash(const json& effective) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%016llx",
                static_cast<unsigned long long>(fluidq::fnv1a_hash(effective.dump())));
  return buffer;
}

void save_json(const json& doc, const std::string& path) {
  if (path.empty()) {
    std::cout << doc.dump(2) << "\n";
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCategory::io, "cannot write " + path);
  out << doc.dump(2) << "\n";
}

std::vector<double> bmax_grid(const Settings& settings) {
  if (settings.flag_given("--bmax")) {
    return settings.flag_value<std::vector<double>>("--bmax");
  }
  if (settings.config().contains("bmax")) {
    const json& value = settings.config().at("bmax");
    std::vector<double> grid;
    if (value.is_array()) {
      for (const auto& entry : value) grid.push_back(parse_energy(entry, "bmax"));
    } else {
      grid.push_back(parse_energy(value, "bmax"));
    }
    if (grid.empty()) {
      throw Error(ErrorCategory::parse, "bmax array is empty");
    }
    return grid;
  }
  const double lo = settings.energy("--bmax-min", "bmax_min");
  const double hi = settings.energy("--bmax-max", "bmax_max");
  const int count = settings.get<int>("--bmax-count", "bmax_count", 50);
  const std::string spacing =
      settings.get<std::string>("--bmax-spacing", "bmax_spacing", "log");
  if (!(lo > 0.0) || !(hi > lo) || count < 2) {
    throw Error(ErrorCategory::parse, "need 0 < bmax_min < bmax_max and count >= 2");
  }
  std::vector<double> grid(count);
  for (int k = 0; k < count; ++k) {
    const double t = static_cast<double>(k) / (count - 1);
    grid[k] = spacing == "linear" ? lo + t * (hi - lo)
                                  : lo * std::pow(hi / lo, t);
  }
  return grid;
}

fluidq::TraceFilter filter_from(const Settings& settings) {
  fluidq::TraceFilter filter;
  filter.months = settings.get<std::vector<int>>("--months", "months", {});
  filter.hour_begin = settings.get<int>("--hour-begin", "hour_begin", 0);
  filter.hour_end = settings.get<int>("--hour-end", "hour_end", 24);
  if (filter.hour_begin < 0 || filter.hour_begin > 23 || filter.hour_end < 1 ||
      filter.hour_end > 24) {
    throw Error(ErrorCategory::parse, "hours must satisfy 0 <= begin <= 23, 1 <= end <= 24");
  }
  return filter;
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

int run_fit(const Settings& settings) {
  const std::string trace_path = settings.require<std::string>("--trace", "trace");
  const double demand = settings.require<double>("--demand", "demand");
  std::vector<double> edges =
      settings.get<std::vector<double>>("--bin-edges", "bin_edges", {});
  if (edges.empty()) {
    throw Error(ErrorCategory::parse, "missing required parameter \"bin_edges\"");
  }

  const fluidq::TraceFilter filter = filter_from(settings);
  const fluidq::Trace trace = fluidq::read_trace_csv(trace_path, filter);
  const double tau = settings.get<double>("--tau", "tau", trace.sample_interval);

  fluidq::FitOptions options;
  options.min_row_transitions =
      settings.get<int>("--min-row-transitions", "min_row_transitions", 10);
  options.pseudo_count = settings.get<double>("--pseudo-count", "pseudo_count", 0.0);

  const fluidq::BinningSpec binning(edges);
  const fluidq::FitResult fit =
      fluidq::fit_pipeline(trace.segments(), tau, binning, demand, options);

  const std::string model_path =
      settings.get<std::string>("--output-model", "output_model", "model.json");
  fluidq::write_model(fit.model, model_path);
  const std::string fitted_path =
      settings.get<std::string>("--output-fitted", "output_fitted", "");
  if (!fitted_path.empty()) fluidq::write_fitted(fit.fitted, fitted_path);

  const double delta = fluidq::drift(fit.model);
  std::cerr << "fit: " << fit.fitted.retained_bins.size() << " states ("
            << fit.fitted.dropped_states.size() << " bins dropped), tau = " << tau
            << " s\n";
  std::cerr << "drift = " << delta << " (" << (delta > 0 ? "positive" : "negative")
            << "), surplus states = " << fit.model.surplus_states().size()
            << ", deficit states = " << fit.model.deficit_states().size() << "\n";
  for (const auto& warning : fit.warnings) {
    std::cerr << "warning: " << warning << "\n";
  }
  std::cerr << "model written to " << model_path << "\n";

  // optional goodness-of-fit table: solver LOLP of the fitted model against
  // the empirical LOLP of replaying the trace itself
  if (settings.has("--eval-bmax", "eval_bmax")) {
    const std::vector<double> grid =
        settings.get<std::vector<double>>("--eval-bmax", "eval_bmax", {});
    OutputTarget target{settings.get<std::string>("--output", "output", "")};
    target.write([&](std::ostream& out) {
      fluidq::TableWriter table(out, {"bmax", "model_lolp", "empirical_lolp"},
                                {{"command", "fit"},
                                 {"config", config_hash(settings.config())},
                                 {"trace", trace_path}});
      for (double bmax : grid) {
        const double model_lolp =
            fluidq::reliability(fluidq::solve_stationary(fit.model, bmax)).lolp;
        const double empirical =
            fluidq::trace_replay(trace.values, tau, demand, bmax).lolp;
        table.row({bmax, model_lolp, empirical});
      }
    });
  }
  return 0;
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

int run_solve(const Settings& settings) {
  const std::string model_path = settings.require<std::string>("--model", "model");
  const fluidq::NetGenModel model = fluidq::read_model(model_path).model;
  const std::vector<double> grid = bmax_grid(settings);
  const bool with_log = settings.get<bool>("--log-lolp", "log_lolp", false);
  const bool kwh = settings.get<std::string>("--units", "units", "si") == "kwh";
  const double energy_scale = kwh ? 1.0 / kJoulesPerKwh : 1.0;

  const double delta = fluidq::drift(model);
  std::vector<std::pair<std::string, std::string>> metadata = {
      {"command", "solve"},
      {"config", config_hash(settings.config())},
      {"model", model_path},
      {"drift", fluidq::format_double(delta)},
      {"energy_units", kwh ? "kWh" : "SI"}};
  if (delta < 0.0) {
    const fluidq::LolpLowerBound bound = fluidq::lolp_lower_bound(model);
    metadata.emplace_back("lolp_lower_bound", fluidq::format_double(bound.bound));
    metadata.emplace_back("bound_tight", bound.tight ? "true" : "false");
    std::cerr << "negative drift: LOLP > " << bound.bound
              << (bound.tight ? " (tight: single deficit state)\n"
                              : " (loose: several deficit states)\n");
  }

  std::vector<std::string> columns = {"bmax", "lolp", "llr", "overflow_prob"};
  if (with_log) columns.push_back("log_lolp");

  OutputTarget target{settings.get<std::string>("--output", "output", "")};
  target.write([&](std::ostream& out) {
    fluidq::TableWriter table(out, columns, metadata);
    for (double bmax : grid) {
      const fluidq::ReliabilityReport report =
          fluidq::reliability(fluidq::solve_stationary(model, bmax));
      std::vector<double> row = {bmax * energy_scale, report.lolp, report.llr,
                                 report.overflow_prob};
      if (with_log) row.push_back(std::log(report.lolp));
      table.row(row);
    }
  });
  return 0;
}

// ---------------------------------------------------------------------------
// decay
// ---------------------------------------------------------------------------

int run_decay(const Settings& settings) {
  const std::string model_path = settings.require<std::string>("--model", "model");
  const fluidq::NetGenModel model = fluidq::read_model(model_path).model;
  const int samples = settings.get<int>("--cgf-samples", "cgf_samples", 41);

  const fluidq::DecayRateReport report = fluidq::decay_rate_report(model, samples);

  json doc;
  doc["schema"] = "fluidq.decay/1";
  doc["config"] = config_hash(settings.config());
  doc["lambda_ld"] = report.lambda_ld;
  doc["lambda_eig"] = report.lambda_eig;
  doc["agreement_gap"] = report.agreement_gap;
  doc["theta_domain"] = {report.theta_min, report.theta_max};
  json table = json::array();
  for (const auto& [theta, value] : report.cgf_samples) {
    table.push_back({theta, value});
  }
  doc["cgf_samples"] = std::move(table);
  save_json(doc, settings.get<std::string>("--output", "output", ""));

  const std::string cgf_path = settings.get<std::string>("--cgf-table", "cgf_table", "");
  if (!cgf_path.empty()) {
    OutputTarget target{cgf_path};
    target.write([&](std::ostream& out) {
      fluidq::TableWriter table_writer(
          out, {"theta", "cgf"},
          {{"command", "decay"}, {"config", config_hash(settings.config())}});
      for (const auto& [theta, value] : report.cgf_samples) {
        table_writer.row({theta, value});
      }
    });
  }

  std::cerr << "decay rate: " << report.lambda_eig << " (eigenvalue route), "
            << report.lambda_ld << " (large-deviations route), gap "
            << report.agreement_gap << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

int run_simulate(const Settings& settings) {
  const std::string mode = settings.get<std::string>("--mode", "mode", "ctmc");
  const double bmax = settings.energy("--bmax", "bmax");

  fluidq::SimulateOptions options;
  if (settings.has("--b0", "b0")) options.b0 = settings.energy("--b0", "b0");
  options.burn_in_fraction = settings.get<double>("--burn-in", "burn_in", 0.01);
  options.batch_count = settings.get<int>("--batches", "batches", 20);

  std::vector<std::uint64_t> seeds;
  for (int s : settings.get<std::vector<int>>("--seeds", "seeds", {})) {
    seeds.push_back(static_cast<std::uint64_t>(s));
  }
  if (seeds.empty()) {
    const int start = settings.get<int>("--seed-start", "seed_start", 1);
    const int count = settings.get<int>("--seed-count", "seed_count", 1);
    for (int k = 0; k < count; ++k) seeds.push_back(start + k);
  }
  std::sort(seeds.begin(), seeds.end());

  std::vector<fluidq::SimulationStats> runs;
  if (mode == "ctmc") {
    const fluidq::NetGenModel model =
        fluidq::read_model(settings.require<std::string>("--model", "model")).model;
    const double horizon = settings.require<double>("--horizon", "horizon");
    for (auto seed : seeds) {
      runs.push_back(fluidq::simulate_ctmc_replay(model, bmax, horizon, seed, options));
    }
  } else if (mode == "dtmc") {
    const fluidq::FittedModel fitted =
        fluidq::read_fitted(settings.require<std::string>("--fitted", "fitted"));
    const double demand = settings.require<double>("--demand", "demand");
    const double horizon = settings.require<double>("--horizon", "horizon");
    for (auto seed : seeds) {
      runs.push_back(fluidq::simulate_dtmc_replay(fitted.t_matrix, fitted.tau,
                                                  fitted.retained_centers(), demand,
                                                  bmax, horizon, seed, options));
    }
  } else if (mode == "trace") {
    const std::string trace_path = settings.require<std::string>("--trace", "trace");
    const double demand = settings.require<double>("--demand", "demand");
    const fluidq::Trace trace =
        fluidq::read_trace_csv(trace_path, filter_from(settings));
    runs.push_back(fluidq::trace_replay(trace.values, trace.sample_interval, demand,
                                        bmax, options));
  } else {
    throw Error(ErrorCategory::parse, "mode must be ctmc, dtmc, or trace");
  }

  OutputTarget target{settings.get<std::string>("--output", "output", "")};
  target.write([&](std::ostream& out) {
    fluidq::TableWriter table(
        out,
        {"seed", "lolp", "stderr_lolp", "llr", "overflow_rate", "full_prob",
         "horizon"},
        {{"command", "simulate"},
         {"config", config_hash(settings.config())},
         {"mode", mode},
         {"bmax", fluidq::format_double(bmax)}});
    for (const auto& stats : runs) {
      table.row({static_cast<double>(stats.seed), stats.lolp, stats.stderr_lolp,
                 stats.llr, stats.overflow_rate, stats.full_prob, stats.horizon});
    }
    if (runs.size() > 1) {
      // pooled row (seed -1): mean of per-seed estimates, stderr across seeds
      double mean = 0.0;
      for (const auto& stats : runs) mean += stats.lolp;
      mean /= runs.size();
      double variance = 0.0;
      for (const auto& stats : runs) {
        variance += (stats.lolp - mean) * (stats.lolp - mean);
      }
      variance /= runs.size() - 1;
      double llr = 0.0, overflow = 0.0, full = 0.0, horizon = 0.0;
      for (const auto& stats : runs) {
        llr += stats.llr;
        overflow += stats.overflow_rate;
        full += stats.full_prob;
        horizon += stats.horizon;
      }
      table.row({-1.0, mean, std::sqrt(variance / runs.size()), llr / runs.size(),
                 overflow / runs.size(), full / runs.size(), horizon});
    }
  });
  return 0;
}

// ---------------------------------------------------------------------------
// size
// ---------------------------------------------------------------------------

int run_size(const Settings& settings) {
  const std::string model_path = settings.require<std::string>("--model", "model");
  const fluidq::NetGenModel model = fluidq::read_model(model_path).model;

  std::vector<double> deltas = settings.get<std::vector<double>>("--delta", "delta", {});
  if (deltas.empty() && settings.config().contains("delta") &&
      settings.config().at("delta").is_number()) {
    deltas.push_back(settings.config().at("delta").get<double>());
  }
  const std::vector<double> epsilons =
      settings.get<std::vector<double>>("--epsilon", "epsilon", {});
  if (deltas.empty() && epsilons.empty()) {
    throw Error(ErrorCategory::parse, "size needs delta targets or epsilon factors");
  }

  fluidq::SizeExactOptions exact_options;
  exact_options.allow_negative_drift =
      settings.get<bool>("--allow-negative-drift", "allow_negative_drift", false);
  const bool with_exact = settings.get<bool>("--exact", "exact", false);

  json doc;
  doc["schema"] = "fluidq.size/1";
  doc["config"] = config_hash(settings.config());
  const double lambda = fluidq::decay_rate_eig(model);
  doc["lambda"] = lambda;

  json targets = json::array();
  for (double delta : deltas) {
    const fluidq::SizingResult result =
        fluidq::sizing_report(model, delta, with_exact, exact_options);
    json entry;
    entry["delta"] = delta;
    entry["estimate_bmax"] = result.estimate_bmax;
    entry["estimate_bmax_kwh"] = result.estimate_bmax / kJoulesPerKwh;
    if (result.exact_bmax) {
      entry["exact_bmax"] = *result.exact_bmax;
      entry["exact_bmax_kwh"] = *result.exact_bmax / kJoulesPerKwh;
      entry["offset"] = *result.offset;
    }
    targets.push_back(std::move(entry));
    std::cerr << "delta " << delta << ": estimate " << result.estimate_bmax;
    if (result.exact_bmax) std::cerr << ", exact " << *result.exact_bmax;
    std::cerr << "\n";
  }
  doc["targets"] = std::move(targets);

  json increments = json::array();
  for (double epsilon : epsilons) {
    const double additional = fluidq::incremental_size(lambda, epsilon);
    increments.push_back({{"epsilon", epsilon},
                          {"additional_bmax", additional},
                          {"additional_bmax_kwh", additional / kJoulesPerKwh}});
  }
  doc["increments"] = std::move(increments);

  save_json(doc, settings.get<std::string>("--output", "output", ""));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Markov fluid reliability analysis for storage-backed generation"};
  app.set_version_flag("--version", fluidq::kVersion);
  app.require_subcommand(1);

  struct SubcommandSpec {
    CLI::App* cmd = nullptr;
    std::string config_path;
    int (*run)(const Settings&) = nullptr;
  };
  std::vector<SubcommandSpec> specs(5);

  const auto add_common = [](CLI::App* cmd, SubcommandSpec& spec) {
    cmd->add_option("--config", spec.config_path, "JSON config file");
    cmd->add_option("--output", "output path (default stdout)");
  };

  // fit
  specs[0].run = run_fit;
  specs[0].cmd = app.add_subcommand("fit", "fit a Markov model from a power trace");
  add_common(specs[0].cmd, specs[0]);
  specs[0].cmd->add_option("--trace", "trace CSV path");
  specs[0].cmd->add_option("--demand", "constant demand (power units)");
  specs[0].cmd->add_option("--bin-edges", "quantization bin edges")->expected(-1);
  specs[0].cmd->add_option("--tau", "sampling interval override (s)");
  specs[0].cmd->add_option("--months", "months filter (1..12)")->expected(-1);
  specs[0].cmd->add_option("--hour-begin", "hour window start (inclusive)");
  specs[0].cmd->add_option("--hour-end", "hour window end (exclusive, wraps)");
  specs[0].cmd->add_option("--min-row-transitions", "insufficient-data threshold");
  specs[0].cmd->add_option("--pseudo-count", "Laplace smoothing pseudo count");
  specs[0].cmd->add_option("--output-model", "model JSON output path");
  specs[0].cmd->add_option("--output-fitted", "fitted-model JSON output path");
  specs[0].cmd->add_option("--eval-bmax", "battery sizes for the fit-quality table")
      ->expected(-1);

  // solve
  specs[1].run = run_solve;
  specs[1].cmd = app.add_subcommand("solve", "stationary LOLP/LLR over a bmax grid");
  add_common(specs[1].cmd, specs[1]);
  specs[1].cmd->add_option("--model", "model JSON path");
  specs[1].cmd->add_option("--bmax", "explicit bmax grid")->expected(-1);
  specs[1].cmd->add_option("--bmax-min", "grid start");
  specs[1].cmd->add_option("--bmax-max", "grid end");
  specs[1].cmd->add_option("--bmax-count", "grid size");
  specs[1].cmd->add_option("--bmax-spacing", "log or linear");
  specs[1].cmd->add_flag("--log-lolp", "append a log(LOLP) column");
  specs[1].cmd->add_option("--units", "si or kwh for energy output columns");

  // decay
  specs[2].run = run_decay;
  specs[2].cmd = app.add_subcommand("decay", "LOLP decay rate by both routes");
  add_common(specs[2].cmd, specs[2]);
  specs[2].cmd->add_option("--model", "model JSON path");
  specs[2].cmd->add_option("--cgf-samples", "number of Lambda(theta) samples");
  specs[2].cmd->add_option("--cgf-table", "CSV path for the Lambda(theta) table");

  // simulate
  specs[3].run = run_simulate;
  specs[3].cmd = app.add_subcommand("simulate", "Monte Carlo and trace replay");
  add_common(specs[3].cmd, specs[3]);
  specs[3].cmd->add_option("--mode", "ctmc, dtmc, or trace");
  specs[3].cmd->add_option("--model", "model JSON path (ctmc mode)");
  specs[3].cmd->add_option("--fitted", "fitted-model JSON path (dtmc mode)");
  specs[3].cmd->add_option("--trace", "trace CSV path (trace mode)");
  specs[3].cmd->add_option("--demand", "constant demand (dtmc/trace modes)");
  specs[3].cmd->add_option("--bmax", "battery size (energy)");
  specs[3].cmd->add_option("--horizon", "simulation horizon (time units)");
  specs[3].cmd->add_option("--seeds", "explicit seed list")->expected(-1);
  specs[3].cmd->add_option("--seed-start", "first seed");
  specs[3].cmd->add_option("--seed-count", "number of seeds");
  specs[3].cmd->add_option("--b0", "initial battery level (energy)");
  specs[3].cmd->add_option("--burn-in", "burn-in fraction");
  specs[3].cmd->add_option("--batches", "batch-means batch count");
  specs[3].cmd->add_option("--months", "months filter (trace mode)")->expected(-1);
  specs[3].cmd->add_option("--hour-begin", "hour window start (trace mode)");
  specs[3].cmd->add_option("--hour-end", "hour window end (trace mode)");

  // size
  specs[4].run = run_size;
  specs[4].cmd = app.add_subcommand("size", "battery sizing for LOLP targets");
  add_common(specs[4].cmd, specs[4]);
  specs[4].cmd->add_option("--model", "model JSON path");
  specs[4].cmd->add_option("--delta", "target LOLP values")->expected(-1);
  specs[4].cmd->add_option("--epsilon", "LOLP shrink factors")->expected(-1);
  specs[4].cmd->add_flag("--exact", "bisect the fluid solver for exact sizes");
  specs[4].cmd->add_flag("--allow-negative-drift", "bisect under negative drift");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 3;
  }

  try {
    for (const auto& spec : specs) {
      if (spec.cmd->parsed()) {
        const Settings settings(spec.cmd, load_config(spec.config_path));
        return spec.run(settings);
      }
    }
    return 1;
  } catch (const Error& e) {
    std::cerr << "error[" << to_string(e.category()) << "]: " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
