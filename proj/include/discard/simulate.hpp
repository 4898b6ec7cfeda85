#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "discard/domain.hpp"
#include "discard/error.hpp"
#include "discard/estimator.hpp"
#include "discard/rng.hpp"
#include "discard/stats.hpp"

namespace discard {

/// Ships x samples per ship x fish per sample for one stratum.
struct StratumDesign {
  std::size_t n_ships = 1;
  std::size_t n_samples_per_ship = 1;
  std::size_t n_obs_per_sample = 1;

  std::size_t total_observations() const { return n_ships * n_samples_per_ship * n_obs_per_sample; }

  friend bool operator==(const StratumDesign&, const StratumDesign&) = default;
};

struct MonitoringScheme {
  StratumDesign sea;
  StratumDesign ashore;

  void check() const {
    for (const auto* d : {&sea, &ashore}) {
      if (d->n_ships < 1 || d->n_samples_per_ship < 1 || d->n_obs_per_sample < 1) {
        throw Error("monitoring scheme: all counts must be >= 1");
      }
    }
  }

  friend bool operator==(const MonitoringScheme&, const MonitoringScheme&) = default;
};

/// The standard grid: 18 at-sea designs crossed with 4 ashore designs, at-sea major.
inline std::vector<MonitoringScheme> table1_grid() {
  std::vector<StratumDesign> sea;
  for (std::size_t ships : {10, 20, 40})
    for (std::size_t samples : {1, 2})
      for (std::size_t fish : {25, 50, 100}) sea.push_back({ships, samples, fish});
  const std::vector<StratumDesign> ashore{{10, 1, 100}, {10, 2, 100}, {20, 1, 100}, {20, 2, 100}};
  std::vector<MonitoringScheme> grid;
  grid.reserve(sea.size() * ashore.size());
  for (const auto& s : sea)
    for (const auto& a : ashore) grid.push_back({s, a});
  return grid;
}

struct LengthComponent {
  double weight = 1.0;
  double mean_cm = 0.0;
  double sd_cm = 1.0;

  friend bool operator==(const LengthComponent&, const LengthComponent&) = default;
};

/**
 * Generator for synthetic survey data. Catch lengths follow a normal
 * mixture shifted by a normal ship effect and a normal tow effect; landed
 * fish are catch fish that survive discarding with probability
 * 1 - logistic(L; true_d50_cm, true_b).
 */
struct SyntheticPopulation {
  std::vector<LengthComponent> components;
  double ship_effect_sd_cm = 0.0;
  double tow_effect_sd_cm = 0.0;
  double true_d50_cm = 36.0;
  double true_b = -0.5;
  double true_landed_biomass_kg = 1.0e7;
  double max_length_cm = 250.0;
  /// Suggested D_max for estimation when the caller supplies none.
  std::optional<double> d_max_cm;

  void check() const {
    if (components.empty()) throw Error("population: at least one length component is required");
    double wsum = 0.0;
    for (const auto& c : components) {
      if (!(c.weight > 0.0) || !(c.sd_cm > 0.0)) throw Error("population: component weight and sd must be positive");
      wsum += c.weight;
    }
    if (!(wsum > 0.0)) throw Error("population: component weights sum to zero");
    if (!(ship_effect_sd_cm >= 0.0) || !(tow_effect_sd_cm >= 0.0)) throw Error("population: effect sds must be >= 0");
    if (!(true_landed_biomass_kg > 0.0)) throw Error("population: landed biomass must be positive");
    if (!(max_length_cm > 0.0)) throw Error("population: max length must be positive");
  }

  /// Cod-like default: lengths ~ N(48, 10) cm, ship sd 5 cm, tow sd 2 cm, D50 36 cm, b -0.5 / cm.
  static SyntheticPopulation default_population() {
    SyntheticPopulation pop;
    pop.components = {{1.0, 48.0, 10.0}};
    pop.ship_effect_sd_cm = 5.0;
    pop.tow_effect_sd_cm = 2.0;
    pop.true_d50_cm = 36.0;
    pop.true_b = -0.5;
    pop.true_landed_biomass_kg = 1.0e7;
    pop.d_max_cm = 55.0;
    return pop;
  }

  friend bool operator==(const SyntheticPopulation&, const SyntheticPopulation&) = default;
};

/**
 * Discarded fraction by numbers of the population's catch, by midpoint-rule
 * integration of the discard probability over the marginal catch density
 * (mixture components widened by the ship and tow effects) on a `step_cm`
 * grid over (0, max_length_cm].
 */
inline double true_discard_fraction(const SyntheticPopulation& pop, double step_cm = 0.1) {
  pop.check();
  const double effect_var = pop.ship_effect_sd_cm * pop.ship_effect_sd_cm + pop.tow_effect_sd_cm * pop.tow_effect_sd_cm;
  double mass = 0.0;
  double discarded = 0.0;
  const auto n = static_cast<std::size_t>(std::ceil(pop.max_length_cm / step_cm));
  for (std::size_t i = 0; i < n; ++i) {
    const double len = (static_cast<double>(i) + 0.5) * step_cm;
    double density = 0.0;
    for (const auto& c : pop.components) {
      const double sd = std::sqrt(c.sd_cm * c.sd_cm + effect_var);
      const double z = (len - c.mean_cm) / sd;
      density += c.weight * std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
    }
    mass += density;
    discarded += density * logistic(len, pop.true_d50_cm, pop.true_b);
  }
  return discarded / mass;
}

namespace detail {

inline double draw_catch_length(const SyntheticPopulation& pop, double shift, Rng& rng) {
  double wsum = 0.0;
  for (const auto& c : pop.components) wsum += c.weight;
  for (int attempt = 0; attempt < 1000000; ++attempt) {
    double u = rng.uniform01() * wsum;
    const LengthComponent* comp = &pop.components.back();
    for (const auto& c : pop.components) {
      if (u < c.weight) {
        comp = &c;
        break;
      }
      u -= c.weight;
    }
    const double len = rng.normal(comp->mean_cm + shift, comp->sd_cm);
    if (len > 0.0 && len <= pop.max_length_cm) return len;
  }
  throw Error("population: could not draw a length inside (0, max_length_cm]");
}

inline Stratum generate_stratum(const SyntheticPopulation& pop, StratumKind kind, const StratumDesign& design,
                                Rng& rng) {
  Stratum out{kind, {}};
  out.ships.reserve(design.n_ships);
  const std::string prefix = kind == StratumKind::AtSea ? "sea" : "ashore";
  for (std::size_t i = 0; i < design.n_ships; ++i) {
    const double ship_shift = rng.normal(0.0, pop.ship_effect_sd_cm);
    ShipRecord ship{prefix + "-" + std::to_string(i), "synthetic", {}};
    ship.samples.reserve(design.n_samples_per_ship);
    for (std::size_t j = 0; j < design.n_samples_per_ship; ++j) {
      const double shift = ship_shift + rng.normal(0.0, pop.tow_effect_sd_cm);
      Sample sample{std::to_string(j), {}};
      sample.observations.reserve(design.n_obs_per_sample);
      std::size_t attempts = 0;
      while (sample.observations.size() < design.n_obs_per_sample) {
        const double len = draw_catch_length(pop, shift, rng);
        if (kind == StratumKind::Ashore) {
          if (++attempts > 1000000 * design.n_obs_per_sample) {
            throw Error("population: landed fish too rare to fill an ashore sample");
          }
          if (rng.uniform01() < logistic(len, pop.true_d50_cm, pop.true_b)) continue;
        }
        sample.observations.push_back({len});
      }
      ship.samples.push_back(std::move(sample));
    }
    out.ships.push_back(std::move(ship));
  }
  return out;
}

inline Stratum resample_stratum_design(const Stratum& src, const StratumDesign& design, Rng& rng) {
  if (src.ships.empty()) throw Error("resample_scheme: " + std::string(to_string(src.kind)) + " stratum is empty");
  Stratum out{src.kind, {}};
  out.ships.reserve(design.n_ships);
  for (std::size_t i = 0; i < design.n_ships; ++i) {
    const ShipRecord& ship_src = src.ships[rng.uniform_index(src.ships.size())];
    if (ship_src.samples.empty()) throw Error("resample_scheme: ship '" + ship_src.ship_id + "' has no samples");
    ShipRecord ship{ship_src.ship_id + "#" + std::to_string(i), ship_src.location_id, {}};
    ship.samples.reserve(design.n_samples_per_ship);
    for (std::size_t j = 0; j < design.n_samples_per_ship; ++j) {
      const Sample& sample_src = ship_src.samples[rng.uniform_index(ship_src.samples.size())];
      Sample sample{std::to_string(j), {}};
      const std::size_t n = sample_src.observations.size();
      if (n == 0) throw Error("resample_scheme: sample '" + sample_src.sample_id + "' has no observations");
      sample.observations.reserve(design.n_obs_per_sample);
      for (std::size_t k = 0; k < design.n_obs_per_sample; ++k) {
        sample.observations.push_back(sample_src.observations[rng.uniform_index(n)]);
      }
      ship.samples.push_back(std::move(sample));
    }
    out.ships.push_back(std::move(ship));
  }
  return out;
}

}  // namespace detail

/// Synthetic dataset with exactly the scheme's dimensions. Ashore ships may hold several samples.
inline SurveyDataset generate(const SyntheticPopulation& pop, const MonitoringScheme& scheme, Rng& rng) {
  pop.check();
  scheme.check();
  SurveyDataset out;
  out.at_sea = detail::generate_stratum(pop, StratumKind::AtSea, scheme.sea, rng);
  out.ashore = detail::generate_stratum(pop, StratumKind::Ashore, scheme.ashore, rng);
  out.landings = {"synthetic", "synthetic", 0, pop.true_landed_biomass_kg};
  return out;
}

/// Three-level draw with replacement (ships, then samples, then fish) to the scheme's dimensions.
inline SurveyDataset resample_scheme(const SurveyDataset& source, const MonitoringScheme& scheme, Rng& rng) {
  scheme.check();
  SurveyDataset out;
  out.at_sea = detail::resample_stratum_design(source.at_sea, scheme.sea, rng);
  out.ashore = detail::resample_stratum_design(source.ashore, scheme.ashore, rng);
  out.landings = source.landings;
  return out;
}

/// Eligibility of real ships as simulation sources.
struct SourceFilter {
  std::size_t sea_min_samples = 2;
  std::size_t ashore_min_samples = 1;
  std::size_t min_obs_per_sample = 100;
};

/// Drops samples with fewer than min_obs_per_sample fish, then ships left with too few samples.
inline SurveyDataset apply_source_filter(const SurveyDataset& dataset, const SourceFilter& filter) {
  auto filter_stratum = [&](const Stratum& in, std::size_t min_samples) {
    Stratum out{in.kind, {}};
    for (const auto& ship : in.ships) {
      ShipRecord kept{ship.ship_id, ship.location_id, {}};
      for (const auto& s : ship.samples)
        if (s.observations.size() >= filter.min_obs_per_sample) kept.samples.push_back(s);
      if (!kept.samples.empty() && kept.samples.size() >= min_samples) out.ships.push_back(std::move(kept));
    }
    if (out.ships.empty()) {
      throw Error("source filter left no " + std::string(to_string(in.kind)) + " ships");
    }
    return out;
  };
  SurveyDataset out;
  out.at_sea = filter_stratum(dataset.at_sea, filter.sea_min_samples);
  out.ashore = filter_stratum(dataset.ashore, filter.ashore_min_samples);
  out.landings = dataset.landings;
  return out;
}

enum class EstimatorVariant {
  Standard,  ///< 1 cm classes, undetermined classes dropped
  ZeroFill,  ///< 1 cm classes, undetermined classes set to zero
  Bin2cm,    ///< 2 cm classes, undetermined classes dropped
};

inline std::string to_string(EstimatorVariant v) {
  switch (v) {
    case EstimatorVariant::Standard:
      return "standard";
    case EstimatorVariant::ZeroFill:
      return "zerofill";
    case EstimatorVariant::Bin2cm:
      return "bin2";
  }
  return "?";
}

/// `base` with the variant's binning and undetermined-class policy.
inline EstimatorConfig apply_variant(EstimatorConfig base, EstimatorVariant v) {
  base.bin_width_cm = v == EstimatorVariant::Bin2cm ? 2.0 : 1.0;
  base.undetermined = v == EstimatorVariant::ZeroFill ? UndeterminedPolicy::ZeroFill : UndeterminedPolicy::Drop;
  return base;
}

/// Where simulated datasets come from: a synthetic population or a real dataset to resample.
class SimulationSource {
 public:
  static SimulationSource synthetic(SyntheticPopulation pop) {
    pop.check();
    return SimulationSource(std::move(pop));
  }
  static SimulationSource resampled(SurveyDataset dataset) { return SimulationSource(std::move(dataset)); }

  bool is_synthetic() const { return std::holds_alternative<SyntheticPopulation>(source_); }

  SurveyDataset draw(const MonitoringScheme& scheme, Rng& rng) const {
    if (const auto* pop = std::get_if<SyntheticPopulation>(&source_)) return generate(*pop, scheme, rng);
    return resample_scheme(std::get<SurveyDataset>(source_), scheme, rng);
  }

  /// Known truth for a population; the Standard estimate on the full source otherwise.
  double reference_rate(const EstimatorConfig& base) const {
    if (const auto* pop = std::get_if<SyntheticPopulation>(&source_)) return true_discard_fraction(*pop);
    return estimate(std::get<SurveyDataset>(source_), apply_variant(base, EstimatorVariant::Standard))
        .discard_rate_numbers;
  }

  /// Reference per-class discard proportion (NaN when unknown) for classes of width `bin_width_cm`.
  std::map<double, double> reference_per_length(const EstimatorConfig& cfg) const {
    std::map<double, double> out;
    if (const auto* pop = std::get_if<SyntheticPopulation>(&source_)) {
      for (double lower = 0.0; lower < pop->max_length_cm; lower += cfg.bin_width_cm) {
        out[lower] = logistic(lower + 0.5 * cfg.bin_width_cm, pop->true_d50_cm, pop->true_b);
      }
      return out;
    }
    const DiscardEstimate ref = estimate(std::get<SurveyDataset>(source_), cfg);
    for (const auto& c : ref.per_length) out[c.lower_cm] = c.p_discard ? *c.p_discard : std::nan("");
    return out;
  }

  const SyntheticPopulation* population() const { return std::get_if<SyntheticPopulation>(&source_); }
  const SurveyDataset* dataset() const { return std::get_if<SurveyDataset>(&source_); }

 private:
  explicit SimulationSource(std::variant<SyntheticPopulation, SurveyDataset> s) : source_(std::move(s)) {}
  std::variant<SyntheticPopulation, SurveyDataset> source_;
};

struct SimulationConfig {
  std::size_t runs = 5000;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  double ci_level = 0.95;
  double max_failed_fraction = 0.2;
  bool per_length = false;

  void check() const {
    if (runs < 2) throw Error("simulate: runs must be >= 2");
    if (!(ci_level > 0.0 && ci_level < 1.0)) throw Error("simulate: ci level must lie in (0, 1)");
  }
};

/// Mean raw discard proportion of one length class over the runs where it was determined.
struct PerLengthSummary {
  double lower_cm = 0.0;
  double mean_p = 0.0;
  std::size_t n_determined = 0;
  double reference_p = 0.0;

  friend bool operator==(const PerLengthSummary&, const PerLengthSummary&) = default;
};

struct SchemeResult {
  MonitoringScheme scheme;
  EstimatorVariant variant = EstimatorVariant::Standard;
  double mean_rate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double ci_range = 0.0;  ///< precision: width of the percentile interval of run estimates
  double reference_rate = 0.0;
  double bias = 0.0;  ///< mean_rate - reference_rate
  std::size_t n_runs = 0;
  std::size_t n_failed = 0;
  std::vector<PerLengthSummary> per_length;

  friend bool operator==(const SchemeResult&, const SchemeResult&) = default;
};

/**
 * Monte Carlo evaluation of one scheme under each requested variant. Run r
 * draws its dataset from Rng(seed).derive(scheme_index).derive(r); all
 * variants are evaluated on the same draws.
 */
inline std::vector<SchemeResult> evaluate_scheme(const SimulationSource& source, const MonitoringScheme& scheme,
                                                 const EstimatorConfig& base, const SimulationConfig& cfg,
                                                 const std::vector<EstimatorVariant>& variants,
                                                 std::size_t scheme_index = 0, std::optional<double> reference = {}) {
  cfg.check();
  scheme.check();
  if (variants.empty()) throw Error("simulate: no estimator variants requested");
  const double reference_rate = reference ? *reference : source.reference_rate(base);

  std::vector<EstimatorConfig> configs;
  for (auto v : variants) configs.push_back(apply_variant(base, v));

  using PerLength = std::vector<std::pair<double, double>>;
  struct RunOutcome {
    std::optional<double> rate;
    PerLength per_length;
  };
  std::vector<std::vector<RunOutcome>> outcomes(variants.size(), std::vector<RunOutcome>(cfg.runs));

  const Rng scheme_rng = Rng(cfg.seed).derive(scheme_index);
  parallel_for(cfg.runs, cfg.threads, [&](std::size_t r) {
    Rng rng = scheme_rng.derive(r);
    const SurveyDataset draw = source.draw(scheme, rng);
    for (std::size_t v = 0; v < configs.size(); ++v) {
      try {
        const DiscardEstimate est = estimate(draw, configs[v]);
        outcomes[v][r].rate = est.discard_rate_numbers;
        if (cfg.per_length) {
          for (const auto& c : est.per_length)
            if (c.p_discard) outcomes[v][r].per_length.emplace_back(c.lower_cm, *c.p_discard);
        }
      } catch (const EstimationError&) {
      }
    }
  });

  std::vector<SchemeResult> results;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    SchemeResult res;
    res.scheme = scheme;
    res.variant = variants[v];
    res.reference_rate = reference_rate;
    std::vector<double> rates;
    rates.reserve(cfg.runs);
    std::map<double, std::pair<double, std::size_t>> sums;
    for (const auto& run : outcomes[v]) {
      if (!run.rate) {
        ++res.n_failed;
        continue;
      }
      rates.push_back(*run.rate);
      for (const auto& [lower, p] : run.per_length) {
        auto& acc = sums[lower];
        acc.first += p;
        ++acc.second;
      }
    }
    res.n_runs = rates.size();
    if (static_cast<double>(res.n_failed) > cfg.max_failed_fraction * static_cast<double>(cfg.runs) || rates.empty()) {
      throw UnstableError("simulate unstable: " + std::to_string(res.n_failed) + " of " + std::to_string(cfg.runs) +
                              " runs failed (variant " + to_string(variants[v]) + ")",
                          res.n_failed, cfg.runs);
    }
    res.mean_rate = mean(rates);
    const PercentileInterval ci = percentile_interval(std::move(rates), cfg.ci_level);
    res.ci_low = ci.low;
    res.ci_high = ci.high;
    res.ci_range = ci.range();
    res.bias = res.mean_rate - reference_rate;
    if (cfg.per_length) {
      const auto ref = source.reference_per_length(configs[v]);
      for (const auto& [lower, acc] : sums) {
        auto it = ref.find(lower);
        res.per_length.push_back({lower, acc.first / static_cast<double>(acc.second), acc.second,
                                  it == ref.end() ? std::nan("") : it->second});
      }
    }
    results.push_back(std::move(res));
  }
  return results;
}

/// Every scheme under every variant, scheme-major. Scheme i uses derivation index i.
inline std::vector<SchemeResult> sweep(const SimulationSource& source, const std::vector<MonitoringScheme>& grid,
                                       const EstimatorConfig& base, const SimulationConfig& cfg,
                                       const std::vector<EstimatorVariant>& variants) {
  if (grid.empty()) throw Error("simulate: empty scheme grid");
  const double reference = source.reference_rate(base);
  std::vector<SchemeResult> out;
  out.reserve(grid.size() * variants.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto rows = evaluate_scheme(source, grid[i], base, cfg, variants, i, reference);
    for (auto& row : rows) out.push_back(std::move(row));
  }
  return out;
}

}  // namespace discard
