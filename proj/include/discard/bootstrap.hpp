#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "discard/domain.hpp"
#include "discard/error.hpp"
#include "discard/estimator.hpp"
#include "discard/rng.hpp"
#include "discard/stats.hpp"

namespace discard {

enum class BootstrapStrategy {
  AllLevels,                ///< ships, then samples, then fish, each with replacement
  HighestLevel,             ///< ships with replacement, their contents untouched
  IndependentObservations,  ///< fish pooled per stratum, hierarchy ignored
};

inline std::string to_string(BootstrapStrategy s) {
  switch (s) {
    case BootstrapStrategy::AllLevels:
      return "all";
    case BootstrapStrategy::HighestLevel:
      return "ship";
    case BootstrapStrategy::IndependentObservations:
      return "independent";
  }
  return "?";
}

struct BootstrapConfig {
  BootstrapStrategy strategy = BootstrapStrategy::AllLevels;
  std::size_t replicates = 5000;
  double ci_level = 0.95;
  std::uint64_t seed = 0;
  unsigned threads = 0;  ///< 0 = hardware concurrency; does not affect results
  /// Maximum tolerated share of replicates whose estimation fails.
  double max_failed_fraction = 0.2;

  void check() const {
    if (replicates < 2) throw Error("bootstrap: replicates must be >= 2");
    if (!(ci_level > 0.0 && ci_level < 1.0)) throw Error("bootstrap: ci level must lie in (0, 1)");
  }
};

struct BootstrapResult {
  double point_estimate = 0.0;
  std::vector<double> replicate_rates;         ///< successful replicates, in replicate order
  std::vector<std::size_t> replicate_indices;  ///< replicate index of each entry above
  double ci_low = 0.0;
  double ci_high = 0.0;
  double ci_range = 0.0;
  std::size_t n_failed = 0;

  friend bool operator==(const BootstrapResult&, const BootstrapResult&) = default;
};

namespace detail {

inline Sample resample_sample(const Sample& src, std::string id, Rng& rng) {
  Sample out{std::move(id), {}};
  const std::size_t n = src.observations.size();
  out.observations.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.observations.push_back(src.observations[rng.uniform_index(n)]);
  return out;
}

inline Stratum resample_stratum(const Stratum& in, BootstrapStrategy strategy, Rng& rng) {
  Stratum out{in.kind, {}};
  if (in.ships.empty()) return out;
  if (strategy == BootstrapStrategy::IndependentObservations) {
    std::vector<const LengthObservation*> pooled;
    std::string location;
    for (const auto& ship : in.ships) {
      if (location.empty()) location = ship.location_id;
      for (const auto& sample : ship.samples)
        for (const auto& obs : sample.observations) pooled.push_back(&obs);
    }
    Sample sample{"pooled", {}};
    sample.observations.reserve(pooled.size());
    for (std::size_t i = 0; i < pooled.size(); ++i) sample.observations.push_back(*pooled[rng.uniform_index(pooled.size())]);
    out.ships.push_back(ShipRecord{"pooled", location, {std::move(sample)}});
    return out;
  }
  const std::size_t n_ships = in.ships.size();
  out.ships.reserve(n_ships);
  for (std::size_t i = 0; i < n_ships; ++i) {
    const ShipRecord& src = in.ships[rng.uniform_index(n_ships)];
    ShipRecord ship{src.ship_id + "#" + std::to_string(i), src.location_id, {}};
    if (strategy == BootstrapStrategy::HighestLevel) {
      ship.samples = src.samples;
    } else {
      const std::size_t n_samples = src.samples.size();
      ship.samples.reserve(n_samples);
      for (std::size_t j = 0; j < n_samples; ++j) {
        const Sample& s = src.samples[rng.uniform_index(n_samples)];
        ship.samples.push_back(resample_sample(s, s.sample_id + "#" + std::to_string(j), rng));
      }
    }
    out.ships.push_back(std::move(ship));
  }
  return out;
}

}  // namespace detail

/**
 * One bootstrap draw of the dataset. Drawn ships (and, for AllLevels, drawn
 * samples) get a `#<draw>` suffix on their id so repeated draws stay
 * distinct. Landings pass through unchanged.
 */
inline SurveyDataset resample(const SurveyDataset& dataset, BootstrapStrategy strategy, Rng& rng) {
  SurveyDataset out;
  out.at_sea = detail::resample_stratum(dataset.at_sea, strategy, rng);
  out.ashore = detail::resample_stratum(dataset.ashore, strategy, rng);
  out.landings = dataset.landings;
  return out;
}

/**
 * Percentile bootstrap of the aggregate discard rate. Replicate r draws from
 * Rng(seed).derive(r), so results are independent of thread count. Replicates
 * whose estimate fails are excluded and counted in n_failed.
 */
inline BootstrapResult run_bootstrap(const SurveyDataset& dataset, const EstimatorConfig& est_cfg,
                                     const BootstrapConfig& cfg) {
  cfg.check();
  BootstrapResult result;
  result.point_estimate = estimate(dataset, est_cfg).discard_rate_numbers;

  const Rng master(cfg.seed);
  std::vector<std::optional<double>> rates(cfg.replicates);
  parallel_for(cfg.replicates, cfg.threads, [&](std::size_t r) {
    Rng rng = master.derive(r);
    const SurveyDataset draw = resample(dataset, cfg.strategy, rng);
    try {
      rates[r] = estimate(draw, est_cfg).discard_rate_numbers;
    } catch (const EstimationError&) {
    }
  });

  for (std::size_t r = 0; r < rates.size(); ++r) {
    if (rates[r]) {
      result.replicate_rates.push_back(*rates[r]);
      result.replicate_indices.push_back(r);
    } else {
      ++result.n_failed;
    }
  }
  if (static_cast<double>(result.n_failed) > cfg.max_failed_fraction * static_cast<double>(cfg.replicates) ||
      result.replicate_rates.empty()) {
    throw UnstableError("bootstrap unstable: " + std::to_string(result.n_failed) + " of " +
                            std::to_string(cfg.replicates) + " replicates failed",
                        result.n_failed, cfg.replicates);
  }
  const PercentileInterval ci = percentile_interval(result.replicate_rates, cfg.ci_level);
  result.ci_low = ci.low;
  result.ci_high = ci.high;
  result.ci_range = ci.range();
  return result;
}

}  // namespace discard
