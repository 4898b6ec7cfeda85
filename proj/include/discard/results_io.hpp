#pragma once

#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "discard/bootstrap.hpp"
#include "discard/error.hpp"
#include "discard/estimator.hpp"
#include "discard/ingest.hpp"
#include "discard/simulate.hpp"

namespace discard {

enum class OutputFormat { Csv, Json };

/// Ordered key/value pairs echoed into every output (run configuration, seed, version).
using Metadata = std::vector<std::pair<std::string, std::string>>;

/// Bootstrap output, optionally with every successful replicate.
struct BootstrapReport {
  BootstrapResult result;
  bool include_replicates = false;
};

/// Simulation output table.
struct SchemeTable {
  std::vector<SchemeResult> rows;
};

namespace detail {

inline void write_meta_csv(std::ostream& out, const Metadata& meta) {
  for (const auto& [k, v] : meta) out << "# " << k << '=' << v << '\n';
}

inline nlohmann::ordered_json meta_json(const Metadata& meta) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [k, v] : meta) j[k] = v;
  return j;
}

/// JSON has no NaN; undetermined or unavailable values become null.
inline nlohmann::ordered_json num(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

inline std::string scheme_fields(const MonitoringScheme& s) {
  return std::to_string(s.sea.n_ships) + ',' + std::to_string(s.sea.n_samples_per_ship) + ',' +
         std::to_string(s.sea.n_obs_per_sample) + ',' + std::to_string(s.ashore.n_ships) + ',' +
         std::to_string(s.ashore.n_samples_per_ship) + ',' + std::to_string(s.ashore.n_obs_per_sample);
}

inline nlohmann::ordered_json design_json(const StratumDesign& d) {
  return {{"n_ships", d.n_ships}, {"n_samples_per_ship", d.n_samples_per_ship}, {"n_obs_per_sample", d.n_obs_per_sample}};
}

}  // namespace detail

inline constexpr const char* kEstimateSummaryHeader =
    "rate,k,n_landed_total,w_mean_kg,d50_cm,b_slope,fit_degenerate,n_classes,n_undetermined";
inline constexpr const char* kEstimateClassHeader = "lower_cm,midpoint_cm,n_landed,n_catch,p_discard,zero_filled,p_fitted";
inline constexpr const char* kBootstrapHeader = "point_estimate,ci_low,ci_high,ci_range,n_failed,n_successful";
inline constexpr const char* kSchemeHeader =
    "variant,sea_ships,sea_samples,sea_obs,ashore_ships,ashore_samples,ashore_obs,mean_rate,ci_low,ci_high,ci_range,"
    "reference_rate,bias,n_runs,n_failed";
inline constexpr const char* kPerLengthHeader =
    "variant,sea_ships,sea_samples,sea_obs,ashore_ships,ashore_samples,ashore_obs,lower_cm,mean_p,n_determined,"
    "reference_p";

/**
 * CSV layout: optional `# key=value` metadata lines, then one or more
 * blocks separated by a blank line, each with its own header. Numbers are
 * printed with 17 significant digits; an undetermined proportion is an
 * empty field.
 */
inline void write_csv(std::ostream& out, const DiscardEstimate& est, const Metadata& meta = {}) {
  detail::write_meta_csv(out, meta);
  out << kEstimateSummaryHeader << '\n'
      << csv::number(est.discard_rate_numbers) << ',' << csv::number(est.k) << ',' << csv::number(est.n_landed_total)
      << ',' << csv::number(est.w_mean_kg) << ',' << csv::number(est.d50_cm) << ',' << csv::number(est.b_slope) << ','
      << (est.fit_degenerate ? 1 : 0) << ',' << est.per_length.size() << ',' << est.undetermined_count() << "\n\n";
  out << kEstimateClassHeader << '\n';
  for (const auto& c : est.per_length) {
    out << csv::number(c.lower_cm) << ',' << csv::number(c.midpoint_cm) << ',' << csv::number(c.n_landed) << ','
        << csv::number(c.n_catch) << ',' << (c.p_discard ? csv::number(*c.p_discard) : std::string()) << ','
        << (c.zero_filled ? 1 : 0) << ',' << csv::number(c.p_fitted) << '\n';
  }
}

inline void write_csv(std::ostream& out, const BootstrapReport& report, const Metadata& meta = {}) {
  const auto& r = report.result;
  detail::write_meta_csv(out, meta);
  out << kBootstrapHeader << '\n'
      << csv::number(r.point_estimate) << ',' << csv::number(r.ci_low) << ',' << csv::number(r.ci_high) << ','
      << csv::number(r.ci_range) << ',' << r.n_failed << ',' << r.replicate_rates.size() << '\n';
  if (report.include_replicates) {
    out << "\nreplicate,rate\n";
    for (std::size_t i = 0; i < r.replicate_rates.size(); ++i) {
      out << r.replicate_indices[i] << ',' << csv::number(r.replicate_rates[i]) << '\n';
    }
  }
}

inline void write_csv(std::ostream& out, const SchemeTable& table, const Metadata& meta = {}) {
  detail::write_meta_csv(out, meta);
  out << kSchemeHeader << '\n';
  bool any_per_length = false;
  for (const auto& row : table.rows) {
    any_per_length = any_per_length || !row.per_length.empty();
    out << to_string(row.variant) << ',' << detail::scheme_fields(row.scheme) << ',' << csv::number(row.mean_rate)
        << ',' << csv::number(row.ci_low) << ',' << csv::number(row.ci_high) << ',' << csv::number(row.ci_range) << ','
        << csv::number(row.reference_rate) << ',' << csv::number(row.bias) << ',' << row.n_runs << ','
        << row.n_failed << '\n';
  }
  if (!any_per_length) return;
  out << '\n' << kPerLengthHeader << '\n';
  for (const auto& row : table.rows) {
    for (const auto& pl : row.per_length) {
      out << to_string(row.variant) << ',' << detail::scheme_fields(row.scheme) << ',' << csv::number(pl.lower_cm)
          << ',' << csv::number(pl.mean_p) << ',' << pl.n_determined << ',' << csv::number(pl.reference_p) << '\n';
    }
  }
}

inline nlohmann::ordered_json to_json(const DiscardEstimate& est) {
  nlohmann::ordered_json classes = nlohmann::ordered_json::array();
  for (const auto& c : est.per_length) {
    classes.push_back({{"lower_cm", c.lower_cm},
                       {"midpoint_cm", c.midpoint_cm},
                       {"n_landed", c.n_landed},
                       {"n_catch", c.n_catch},
                       {"p_discard", c.p_discard ? nlohmann::ordered_json(*c.p_discard) : nlohmann::ordered_json(nullptr)},
                       {"zero_filled", c.zero_filled},
                       {"p_fitted", c.p_fitted}});
  }
  return {{"rate", est.discard_rate_numbers},
          {"k", est.k},
          {"n_landed_total", est.n_landed_total},
          {"w_mean_kg", est.w_mean_kg},
          {"d50_cm", detail::num(est.d50_cm)},
          {"b_slope", detail::num(est.b_slope)},
          {"fit_degenerate", est.fit_degenerate},
          {"n_undetermined", est.undetermined_count()},
          {"per_length", std::move(classes)}};
}

inline nlohmann::ordered_json to_json(const BootstrapReport& report) {
  const auto& r = report.result;
  nlohmann::ordered_json j{{"point_estimate", r.point_estimate}, {"ci_low", r.ci_low},
                           {"ci_high", r.ci_high},               {"ci_range", r.ci_range},
                           {"n_failed", r.n_failed},             {"n_successful", r.replicate_rates.size()}};
  if (report.include_replicates) {
    nlohmann::ordered_json reps = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < r.replicate_rates.size(); ++i) {
      reps.push_back({{"replicate", r.replicate_indices[i]}, {"rate", r.replicate_rates[i]}});
    }
    j["replicates"] = std::move(reps);
  }
  return j;
}

inline nlohmann::ordered_json to_json(const SchemeTable& table) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : table.rows) {
    nlohmann::ordered_json j{{"variant", to_string(row.variant)},
                             {"sea", detail::design_json(row.scheme.sea)},
                             {"ashore", detail::design_json(row.scheme.ashore)},
                             {"mean_rate", row.mean_rate},
                             {"ci_low", row.ci_low},
                             {"ci_high", row.ci_high},
                             {"ci_range", row.ci_range},
                             {"reference_rate", row.reference_rate},
                             {"bias", row.bias},
                             {"n_runs", row.n_runs},
                             {"n_failed", row.n_failed}};
    if (!row.per_length.empty()) {
      nlohmann::ordered_json pl = nlohmann::ordered_json::array();
      for (const auto& c : row.per_length) {
        pl.push_back({{"lower_cm", c.lower_cm},
                      {"mean_p", c.mean_p},
                      {"n_determined", c.n_determined},
                      {"reference_p", detail::num(c.reference_p)}});
      }
      j["per_length"] = std::move(pl);
    }
    rows.push_back(std::move(j));
  }
  return rows;
}

template <typename Payload>
void write_results(std::ostream& out, const Payload& payload, OutputFormat format, const Metadata& meta = {}) {
  if (format == OutputFormat::Csv) {
    write_csv(out, payload, meta);
  } else {
    nlohmann::ordered_json doc{{"config", detail::meta_json(meta)}, {"result", to_json(payload)}};
    out << doc.dump(2) << '\n';
  }
}

/// Writes `payload` to `path` as CSV or JSON.
template <typename Payload>
void write_results(const std::string& path, const Payload& payload, OutputFormat format, const Metadata& meta = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write output file '" + path + "'");
  write_results(out, payload, format, meta);
  out.flush();
  if (!out) throw Error("error writing output file '" + path + "'");
}

namespace detail {

/// CSV blocks of a results file, metadata lines skipped. Each block is header + rows.
inline std::vector<std::vector<std::vector<std::string>>> read_blocks(std::istream& in, Metadata* meta) {
  std::vector<std::vector<std::vector<std::string>>> blocks;
  std::vector<std::vector<std::string>> cur;
  std::string line;
  while (std::getline(in, line)) {
    csv::strip_cr(line);
    if (line.rfind("# ", 0) == 0) {
      if (meta) {
        const auto eq = line.find('=');
        if (eq != std::string::npos) meta->emplace_back(line.substr(2, eq - 2), line.substr(eq + 1));
      }
      continue;
    }
    if (line.empty()) {
      if (!cur.empty()) blocks.push_back(std::move(cur));
      cur.clear();
      continue;
    }
    cur.push_back(csv::split(line));
  }
  if (!cur.empty()) blocks.push_back(std::move(cur));
  return blocks;
}

inline double to_double(const std::string& s) {
  double v = 0.0;
  if (!csv::parse_double(s, v)) throw Error("results file: '" + s + "' is not a number");
  return v;
}

inline std::size_t to_size(const std::string& s) {
  long long v = 0;
  if (!csv::parse_int(s, v) || v < 0) throw Error("results file: '" + s + "' is not a count");
  return static_cast<std::size_t>(v);
}

inline EstimatorVariant parse_variant(const std::string& s) {
  if (s == "standard") return EstimatorVariant::Standard;
  if (s == "zerofill") return EstimatorVariant::ZeroFill;
  if (s == "bin2") return EstimatorVariant::Bin2cm;
  throw Error("unknown estimator variant '" + s + "'");
}

inline MonitoringScheme parse_scheme(const std::vector<std::string>& f, std::size_t at) {
  return {{to_size(f[at]), to_size(f[at + 1]), to_size(f[at + 2])},
          {to_size(f[at + 3]), to_size(f[at + 4]), to_size(f[at + 5])}};
}

}  // namespace detail

inline DiscardEstimate read_estimate_csv(std::istream& in, Metadata* meta = nullptr) {
  const auto blocks = detail::read_blocks(in, meta);
  if (blocks.size() != 2 || blocks[0].size() != 2) throw Error("estimate file: expected summary and class blocks");
  const auto& s = blocks[0][1];
  DiscardEstimate est;
  est.discard_rate_numbers = detail::to_double(s[0]);
  est.k = detail::to_double(s[1]);
  est.n_landed_total = detail::to_double(s[2]);
  est.w_mean_kg = detail::to_double(s[3]);
  est.d50_cm = detail::to_double(s[4]);
  est.b_slope = detail::to_double(s[5]);
  est.fit_degenerate = s[6] == "1";
  for (std::size_t i = 1; i < blocks[1].size(); ++i) {
    const auto& f = blocks[1][i];
    LengthClassEstimate c;
    c.lower_cm = detail::to_double(f[0]);
    c.midpoint_cm = detail::to_double(f[1]);
    c.n_landed = detail::to_double(f[2]);
    c.n_catch = detail::to_double(f[3]);
    if (!f[4].empty()) c.p_discard = detail::to_double(f[4]);
    c.zero_filled = f[5] == "1";
    c.p_fitted = detail::to_double(f[6]);
    est.per_length.push_back(c);
  }
  return est;
}

inline BootstrapReport read_bootstrap_csv(std::istream& in, Metadata* meta = nullptr) {
  const auto blocks = detail::read_blocks(in, meta);
  if (blocks.empty() || blocks[0].size() != 2) throw Error("bootstrap file: missing summary block");
  const auto& s = blocks[0][1];
  BootstrapReport report;
  auto& r = report.result;
  r.point_estimate = detail::to_double(s[0]);
  r.ci_low = detail::to_double(s[1]);
  r.ci_high = detail::to_double(s[2]);
  r.ci_range = detail::to_double(s[3]);
  r.n_failed = detail::to_size(s[4]);
  if (blocks.size() > 1) {
    report.include_replicates = true;
    for (std::size_t i = 1; i < blocks[1].size(); ++i) {
      r.replicate_indices.push_back(detail::to_size(blocks[1][i][0]));
      r.replicate_rates.push_back(detail::to_double(blocks[1][i][1]));
    }
  }
  return report;
}

inline SchemeTable read_scheme_table_csv(std::istream& in, Metadata* meta = nullptr) {
  const auto blocks = detail::read_blocks(in, meta);
  SchemeTable table;
  if (blocks.empty()) throw Error("scheme table: missing header");
  for (std::size_t i = 1; i < blocks[0].size(); ++i) {
    const auto& f = blocks[0][i];
    if (f.size() != 15) throw Error("scheme table: expected 15 fields");
    SchemeResult row;
    row.variant = detail::parse_variant(f[0]);
    row.scheme = detail::parse_scheme(f, 1);
    row.mean_rate = detail::to_double(f[7]);
    row.ci_low = detail::to_double(f[8]);
    row.ci_high = detail::to_double(f[9]);
    row.ci_range = detail::to_double(f[10]);
    row.reference_rate = detail::to_double(f[11]);
    row.bias = detail::to_double(f[12]);
    row.n_runs = detail::to_size(f[13]);
    row.n_failed = detail::to_size(f[14]);
    table.rows.push_back(std::move(row));
  }
  if (blocks.size() > 1) {
    for (std::size_t i = 1; i < blocks[1].size(); ++i) {
      const auto& f = blocks[1][i];
      const auto variant = detail::parse_variant(f[0]);
      const auto scheme = detail::parse_scheme(f, 1);
      for (auto& row : table.rows) {
        if (row.variant == variant && row.scheme == scheme) {
          row.per_length.push_back({detail::to_double(f[7]), detail::to_double(f[8]), detail::to_size(f[9]),
                                    detail::to_double(f[10])});
          break;
        }
      }
    }
  }
  return table;
}

/**
 * Population JSON:
 *   {"components": [{"weight": 1, "mean_cm": 48, "sd_cm": 10}],
 *    "ship_effect_sd_cm": 5, "tow_effect_sd_cm": 2, "true_d50_cm": 36, "true_b": -0.5,
 *    "true_landed_biomass_kg": 1e7, "max_length_cm": 250, "d_max_cm": 55}
 * `max_length_cm` and `d_max_cm` are optional.
 */
inline SyntheticPopulation population_from_json(const nlohmann::json& j) {
  try {
    SyntheticPopulation pop;
    for (const auto& c : j.at("components")) {
      pop.components.push_back({c.value("weight", 1.0), c.at("mean_cm").get<double>(), c.at("sd_cm").get<double>()});
    }
    pop.ship_effect_sd_cm = j.at("ship_effect_sd_cm").get<double>();
    pop.tow_effect_sd_cm = j.at("tow_effect_sd_cm").get<double>();
    pop.true_d50_cm = j.at("true_d50_cm").get<double>();
    pop.true_b = j.at("true_b").get<double>();
    pop.true_landed_biomass_kg = j.at("true_landed_biomass_kg").get<double>();
    pop.max_length_cm = j.value("max_length_cm", 250.0);
    if (j.contains("d_max_cm")) pop.d_max_cm = j.at("d_max_cm").get<double>();
    pop.check();
    return pop;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("population: ") + e.what());
  }
}

inline nlohmann::ordered_json to_json(const SyntheticPopulation& pop) {
  nlohmann::ordered_json comps = nlohmann::ordered_json::array();
  for (const auto& c : pop.components) comps.push_back({{"weight", c.weight}, {"mean_cm", c.mean_cm}, {"sd_cm", c.sd_cm}});
  nlohmann::ordered_json j{{"components", std::move(comps)},
                           {"ship_effect_sd_cm", pop.ship_effect_sd_cm},
                           {"tow_effect_sd_cm", pop.tow_effect_sd_cm},
                           {"true_d50_cm", pop.true_d50_cm},
                           {"true_b", pop.true_b},
                           {"true_landed_biomass_kg", pop.true_landed_biomass_kg},
                           {"max_length_cm", pop.max_length_cm}};
  if (pop.d_max_cm) j["d_max_cm"] = *pop.d_max_cm;
  return j;
}

/// Grid JSON: array of {"sea": {n_ships, n_samples_per_ship, n_obs_per_sample}, "ashore": {...}}.
inline std::vector<MonitoringScheme> grid_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_array()) throw Error("grid: expected a JSON array of schemes");
    std::vector<MonitoringScheme> grid;
    auto design = [](const nlohmann::json& d) {
      return StratumDesign{d.at("n_ships").get<std::size_t>(), d.at("n_samples_per_ship").get<std::size_t>(),
                           d.at("n_obs_per_sample").get<std::size_t>()};
    };
    for (const auto& item : j) {
      MonitoringScheme s{design(item.at("sea")), design(item.at("ashore"))};
      s.check();
      grid.push_back(s);
    }
    return grid;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("grid: ") + e.what());
  }
}

inline nlohmann::ordered_json to_json(const std::vector<MonitoringScheme>& grid) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& s : grid) arr.push_back({{"sea", detail::design_json(s.sea)}, {"ashore", detail::design_json(s.ashore)}});
  return arr;
}

}  // namespace discard
