#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif
#include <nlohmann/json.hpp>

#include "discard/discard.hpp"

namespace discard::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitData = 1;
inline constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataOptions {
  std::string samples;
  std::string landings;
  std::string species;
  std::string gear;
  int year = 0;
  double max_length_cm = 250.0;
  bool allow_multi_sample_ashore = false;
};

struct EstimateOptions {
  std::optional<double> d_max;
  double bin_width = 1.0;
  std::string undetermined = "drop";
  std::string aggregate = "fitted";
  std::string selection = "m1";
  std::size_t m3_min_obs = 90;
  double condition_factor = 0.01;
  double weight_exponent = 3.0;
};

struct CommonOptions {
  std::string format = "csv";
  std::string out;
  unsigned threads = 0;
  std::uint64_t seed = 0;
};

inline void add_data_flags(CLI::App& app, DataOptions& d, bool samples_required) {
  auto* s = app.add_option("--samples", d.samples, "Samples CSV (stratum,ship_id,location_id,sample_id,length_cm)");
  if (samples_required) s->required();
  app.add_option("--landings", d.landings, "Landings CSV (species,gear,year,total_biomass_kg)");
  app.add_option("--species", d.species, "Species label to look up in the landings file");
  app.add_option("--gear", d.gear, "Gear label to look up in the landings file");
  app.add_option("--year", d.year, "Year to look up in the landings file");
  app.add_option("--max-length", d.max_length_cm, "Ingest sanity bound on length (cm)")->capture_default_str();
  app.add_flag("--allow-multi-sample-ashore", d.allow_multi_sample_ashore,
               "Accept ashore ships with more than one sample");
}

inline void add_estimate_flags(CLI::App& app, EstimateOptions& e) {
  app.add_option("--d-max", e.d_max, "Length (cm) above which no fish is discarded");
  app.add_option("--bin-width", e.bin_width, "Length class width (cm)")
      ->check(CLI::IsMember({1.0, 2.0}))
      ->capture_default_str();
  app.add_option("--undetermined", e.undetermined, "Classes with no catch: drop|zero")
      ->check(CLI::IsMember({"drop", "zero"}))
      ->capture_default_str();
  app.add_option("--aggregate", e.aggregate, "Aggregate rate from: fitted|raw")
      ->check(CLI::IsMember({"fitted", "raw"}))
      ->capture_default_str();
  app.add_option("--selection", e.selection, "Data usage: m1 (all), m2 (same ships), m3 (same locations)")
      ->check(CLI::IsMember({"m1", "m2", "m3"}))
      ->capture_default_str();
  app.add_option("--m3-min-obs", e.m3_min_obs, "m3: minimum observations per location and stratum")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--condition-factor", e.condition_factor, "W[g] = factor * L^exponent")->capture_default_str();
  app.add_option("--weight-exponent", e.weight_exponent, "Length-weight exponent")->capture_default_str();
}

inline void add_common_flags(CLI::App& app, CommonOptions& c, bool seeded) {
  app.add_option("--format", c.format, "Output format: csv|json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  app.add_option("--out", c.out, "Output file (default: standard output)");
  app.add_option("--threads", c.threads, "Worker threads (0 = auto)")->capture_default_str();
  if (seeded) app.add_option("--seed", c.seed, "Master random seed")->capture_default_str();
}

inline std::string fmt(double v) { return csv::shortest(v); }

inline EstimatorConfig make_estimator_config(const EstimateOptions& e, std::optional<double> fallback_d_max = {}) {
  EstimatorConfig cfg;
  if (e.d_max) {
    cfg.d_max_cm = *e.d_max;
  } else if (fallback_d_max) {
    cfg.d_max_cm = *fallback_d_max;
  } else {
    throw UsageError("--d-max is required");
  }
  if (!(cfg.d_max_cm > 0.0)) throw UsageError("--d-max must be positive");
  cfg.bin_width_cm = e.bin_width;
  cfg.undetermined = e.undetermined == "zero" ? UndeterminedPolicy::ZeroFill : UndeterminedPolicy::Drop;
  cfg.aggregate = e.aggregate == "raw" ? AggregateMode::RawProportions : AggregateMode::FittedLogistic;
  cfg.condition_factor = e.condition_factor;
  cfg.weight_exponent = e.weight_exponent;
  return cfg;
}

inline SelectionMethod make_selection(const EstimateOptions& e) {
  if (e.selection == "m2") return SelectionMethod::same_ships();
  if (e.selection == "m3") return SelectionMethod::same_locations(e.m3_min_obs);
  return SelectionMethod::all();
}

inline void echo_data(Metadata& meta, const DataOptions& d) {
  meta.emplace_back("samples", d.samples);
  meta.emplace_back("landings", d.landings);
  meta.emplace_back("species", d.species);
  meta.emplace_back("gear", d.gear);
  meta.emplace_back("year", std::to_string(d.year));
  meta.emplace_back("max_length_cm", fmt(d.max_length_cm));
  meta.emplace_back("allow_multi_sample_ashore", d.allow_multi_sample_ashore ? "true" : "false");
}

inline void echo_estimator(Metadata& meta, const EstimateOptions& e, const EstimatorConfig& cfg) {
  meta.emplace_back("d_max_cm", fmt(cfg.d_max_cm));
  meta.emplace_back("bin_width_cm", fmt(cfg.bin_width_cm));
  meta.emplace_back("undetermined", e.undetermined);
  meta.emplace_back("aggregate", e.aggregate);
  meta.emplace_back("selection", e.selection);
  meta.emplace_back("m3_min_obs", std::to_string(e.m3_min_obs));
  meta.emplace_back("condition_factor", fmt(cfg.condition_factor));
  meta.emplace_back("weight_exponent", fmt(cfg.weight_exponent));
}

/// Reads samples and landings; throws UsageError when the landings lookup keys are missing.
inline SurveyDataset load_dataset(const DataOptions& d) {
  if (d.landings.empty() || d.species.empty() || d.gear.empty()) {
    throw UsageError("--landings, --species, --gear and --year are required");
  }
  IngestOptions ingest;
  ingest.max_length_cm = d.max_length_cm;
  ingest.single_sample_ashore = !d.allow_multi_sample_ashore;
  StrataPair strata = read_samples(d.samples, ingest);
  LandingsRecord landings = read_landings(d.landings, d.species, d.gear, d.year);
  SurveyDataset dataset = make_dataset(std::move(strata), std::move(landings));
  const auto violations = validate(dataset, {d.max_length_cm, !d.allow_multi_sample_ashore});
  if (!violations.empty()) {
    std::string msg = "dataset is invalid (" + std::to_string(violations.size()) + " violations):";
    for (const auto& v : violations) msg += "\n  " + v;
    throw Error(msg);
  }
  return dataset;
}

/// Writes `payload` to --out (and a human summary to `out`), or the payload itself to `out`.
template <typename Payload>
void emit(const CommonOptions& c, const Payload& payload, const Metadata& meta, std::ostream& out,
          const std::string& summary) {
  const OutputFormat format = c.format == "json" ? OutputFormat::Json : OutputFormat::Csv;
  if (c.out.empty()) {
    write_results(out, payload, format, meta);
  } else {
    write_results(c.out, payload, format, meta);
    out << summary;
  }
}

inline void banner(std::ostream& err, const Metadata& meta) {
  err << "discard " << kVersion;
  for (const auto& [k, v] : meta) {
    if (k != "version") err << ' ' << k << '=' << v;
  }
  err << '\n';
}

inline std::string estimate_summary(const DiscardEstimate& est) {
  std::ostringstream s;
  s << "discard rate (numbers): " << std::setprecision(6) << est.discard_rate_numbers << '\n'
    << "raising factor k:       " << est.k << '\n'
    << "landed numbers:         " << est.n_landed_total << '\n'
    << "D50 (cm):               " << est.d50_cm << '\n'
    << "b (1/cm):               " << est.b_slope << (est.fit_degenerate ? "  (degenerate fit)" : "") << '\n'
    << "length classes:         " << est.per_length.size() << " (" << est.undetermined_count() << " undetermined)\n";
  return s.str();
}

inline int cmd_validate(const DataOptions& d, std::ostream& out) {
  IngestOptions ingest;
  ingest.max_length_cm = d.max_length_cm;
  ingest.strict = false;
  const StrataPair strata = read_samples(d.samples, ingest);
  const ValidationOptions vopts{d.max_length_cm, !d.allow_multi_sample_ashore};
  std::vector<std::string> violations;
  validate(strata.at_sea, vopts, violations);
  validate(strata.ashore, vopts, violations);
  if (!d.landings.empty()) {
    try {
      read_landings(d.landings, d.species, d.gear, d.year);
    } catch (const Error& e) {
      violations.push_back(std::string("landings: ") + e.what());
    }
  }
  for (const auto& v : violations) out << v << '\n';
  out << violations.size() << " violations\n";
  return violations.empty() ? kExitOk : kExitData;
}

inline std::vector<EstimatorVariant> parse_variants(const std::string& list) {
  std::vector<EstimatorVariant> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "standard") {
      out.push_back(EstimatorVariant::Standard);
    } else if (item == "zerofill") {
      out.push_back(EstimatorVariant::ZeroFill);
    } else if (item == "bin2") {
      out.push_back(EstimatorVariant::Bin2cm);
    } else {
      throw UsageError("unknown variant '" + item + "' (expected standard, zerofill, bin2)");
    }
  }
  if (out.empty()) throw UsageError("--variants must name at least one variant");
  return out;
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("'" + path + "': " + e.what());
  }
}

/**
 * Entry point shared by the executable and the tests. Exit codes: 0 success,
 * 1 data or validation error, 2 usage error.
 */
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Length-based discard rate estimation, hierarchical bootstrap and monitoring-scheme simulation"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  DataOptions data;
  EstimateOptions est_opts;
  CommonOptions common;
  std::string strategy = "all";
  std::size_t replicates = 5000;
  double ci = 0.95;
  bool dump_replicates = false;
  std::string mode = "synthetic";
  std::string population_path;
  std::string grid = "table1";
  std::size_t runs = 5000;
  std::string variants = "standard";
  bool per_length = false;
  SourceFilter filter;

  auto* validate_cmd = app.add_subcommand("validate", "Check a samples file (and optional landings) for invariant violations");
  add_data_flags(*validate_cmd, data, true);

  auto* estimate_cmd = app.add_subcommand("estimate", "Estimate the discard rate");
  add_data_flags(*estimate_cmd, data, true);
  add_estimate_flags(*estimate_cmd, est_opts);
  add_common_flags(*estimate_cmd, common, false);

  auto* bootstrap_cmd = app.add_subcommand("bootstrap", "Percentile bootstrap confidence interval of the discard rate");
  add_data_flags(*bootstrap_cmd, data, true);
  add_estimate_flags(*bootstrap_cmd, est_opts);
  add_common_flags(*bootstrap_cmd, common, true);
  bootstrap_cmd->add_option("--strategy", strategy, "Resampling: all|ship|independent")
      ->check(CLI::IsMember({"all", "ship", "independent"}))
      ->capture_default_str();
  bootstrap_cmd->add_option("--replicates", replicates, "Bootstrap replicates")->capture_default_str();
  bootstrap_cmd->add_option("--ci", ci, "Confidence level")->capture_default_str();
  bootstrap_cmd->add_flag("--dump-replicates", dump_replicates, "Include every replicate rate in the output");

  auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo precision and bias of monitoring schemes");
  add_data_flags(*simulate_cmd, data, false);
  add_estimate_flags(*simulate_cmd, est_opts);
  add_common_flags(*simulate_cmd, common, true);
  simulate_cmd->add_option("--mode", mode, "Data source: synthetic|resample")
      ->check(CLI::IsMember({"synthetic", "resample"}))
      ->capture_default_str();
  simulate_cmd->add_option("--population", population_path, "Synthetic population JSON (default: built-in)");
  simulate_cmd->add_option("--grid", grid, "Scheme grid JSON file, or 'table1'")->capture_default_str();
  simulate_cmd->add_option("--runs", runs, "Monte Carlo runs per scheme")->capture_default_str();
  simulate_cmd->add_option("--variants", variants, "Comma list of standard,zerofill,bin2")->capture_default_str();
  simulate_cmd->add_flag("--per-length", per_length, "Also emit per-length mean discard proportions");
  simulate_cmd->add_option("--min-source-samples", filter.sea_min_samples,
                           "resample: minimum samples per at-sea source ship")
      ->capture_default_str();
  simulate_cmd->add_option("--min-source-ashore-samples", filter.ashore_min_samples,
                           "resample: minimum samples per ashore source ship")
      ->capture_default_str();
  simulate_cmd->add_option("--min-source-obs", filter.min_obs_per_sample, "resample: minimum fish per source sample")
      ->capture_default_str();

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (validate_cmd->parsed()) return cmd_validate(data, out);

    Metadata meta{{"version", kVersion}};
    if (estimate_cmd->parsed()) {
      const EstimatorConfig cfg = make_estimator_config(est_opts);
      meta.emplace_back("command", "estimate");
      echo_data(meta, data);
      echo_estimator(meta, est_opts, cfg);
      banner(err, meta);
      const SurveyDataset dataset = select(load_dataset(data), make_selection(est_opts));
      const DiscardEstimate result = estimate(dataset, cfg);
      emit(common, result, meta, out, estimate_summary(result));
      return kExitOk;
    }

    if (bootstrap_cmd->parsed()) {
      const EstimatorConfig cfg = make_estimator_config(est_opts);
      BootstrapConfig boot;
      boot.strategy = strategy == "ship"          ? BootstrapStrategy::HighestLevel
                      : strategy == "independent" ? BootstrapStrategy::IndependentObservations
                                                  : BootstrapStrategy::AllLevels;
      boot.replicates = replicates;
      boot.ci_level = ci;
      boot.seed = common.seed;
      boot.threads = common.threads;
      if (replicates < 2) throw UsageError("--replicates must be >= 2");
      if (!(ci > 0.0 && ci < 1.0)) throw UsageError("--ci must lie in (0, 1)");
      meta.emplace_back("command", "bootstrap");
      meta.emplace_back("seed", std::to_string(common.seed));
      echo_data(meta, data);
      echo_estimator(meta, est_opts, cfg);
      meta.emplace_back("strategy", strategy);
      meta.emplace_back("replicates", std::to_string(replicates));
      meta.emplace_back("ci", fmt(ci));
      meta.emplace_back("dump_replicates", dump_replicates ? "true" : "false");
      banner(err, meta);
      const SurveyDataset dataset = select(load_dataset(data), make_selection(est_opts));
      const BootstrapReport report{run_bootstrap(dataset, cfg, boot), dump_replicates};
      std::ostringstream s;
      s << std::setprecision(6) << "point estimate: " << report.result.point_estimate << '\n'
        << ci * 100 << "% CI: [" << report.result.ci_low << ", " << report.result.ci_high
        << "]  range " << report.result.ci_range << '\n'
        << "failed replicates: " << report.result.n_failed << " of " << replicates << '\n';
      emit(common, report, meta, out, s.str());
      return kExitOk;
    }

    if (simulate_cmd->parsed()) {
      if (runs < 2) throw UsageError("--runs must be >= 2");
      const std::vector<EstimatorVariant> variant_list = parse_variants(variants);
      std::optional<SimulationSource> source;
      std::optional<double> fallback_d_max;
      std::string population_echo;
      if (mode == "synthetic") {
        if (!data.samples.empty()) throw UsageError("--samples is only valid with --mode resample");
        SyntheticPopulation pop = population_path.empty() ? SyntheticPopulation::default_population()
                                                          : population_from_json(read_json_file(population_path));
        fallback_d_max = pop.d_max_cm;
        population_echo = to_json(pop).dump();
        source = SimulationSource::synthetic(std::move(pop));
      } else if (data.samples.empty()) {
        throw UsageError("--mode resample requires --samples");
      } else if (!population_path.empty()) {
        throw UsageError("--population is only valid with --mode synthetic");
      }
      const EstimatorConfig cfg = make_estimator_config(est_opts, fallback_d_max);
      const std::vector<MonitoringScheme> schemes =
          grid == "table1" ? table1_grid() : grid_from_json(read_json_file(grid));

      meta.emplace_back("command", "simulate");
      meta.emplace_back("seed", std::to_string(common.seed));
      meta.emplace_back("mode", mode);
      if (mode == "synthetic") {
        meta.emplace_back("population", population_path.empty() ? "builtin" : population_path);
        meta.emplace_back("population_json", population_echo);
      } else {
        echo_data(meta, data);
        meta.emplace_back("min_source_samples", std::to_string(filter.sea_min_samples));
        meta.emplace_back("min_source_ashore_samples", std::to_string(filter.ashore_min_samples));
        meta.emplace_back("min_source_obs", std::to_string(filter.min_obs_per_sample));
      }
      meta.emplace_back("grid", grid);
      meta.emplace_back("runs", std::to_string(runs));
      meta.emplace_back("variants", variants);
      meta.emplace_back("per_length", per_length ? "true" : "false");
      echo_estimator(meta, est_opts, cfg);
      banner(err, meta);

      if (!source) {
        const SurveyDataset dataset = select(load_dataset(data), make_selection(est_opts));
        source = SimulationSource::resampled(apply_source_filter(dataset, filter));
      }
      SimulationConfig sim;
      sim.runs = runs;
      sim.seed = common.seed;
      sim.threads = common.threads;
      sim.per_length = per_length;
      const SchemeTable table{sweep(*source, schemes, cfg, sim, variant_list)};

      std::ostringstream s;
      s << std::left << std::setw(10) << "variant" << std::setw(14) << "sea" << std::setw(14) << "ashore"
        << std::setw(12) << "mean_rate" << std::setw(12) << "ci_range" << "bias\n";
      s << std::setprecision(4);
      for (const auto& row : table.rows) {
        auto d = [](const StratumDesign& x) {
          return std::to_string(x.n_ships) + "x" + std::to_string(x.n_samples_per_ship) + "x" +
                 std::to_string(x.n_obs_per_sample);
        };
        s << std::setw(10) << to_string(row.variant) << std::setw(14) << d(row.scheme.sea) << std::setw(14)
          << d(row.scheme.ashore) << std::setw(12) << row.mean_rate << std::setw(12) << row.ci_range << row.bias
          << '\n';
      }
      emit(common, table, meta, out, s.str());
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace discard::cli
