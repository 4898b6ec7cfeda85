#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace discard {

/// One length-measured fish. Lengths are kept unrounded; binning happens in the estimator.
struct LengthObservation {
  double length_cm = 0.0;

  friend bool operator==(const LengthObservation&, const LengthObservation&) = default;
};

/// A tow (at sea) or a landing sample (ashore).
struct Sample {
  std::string sample_id;
  std::vector<LengthObservation> observations;

  friend bool operator==(const Sample&, const Sample&) = default;
};

/**
 * Samples taken from one ship at one location. A ship sampled at two
 * locations appears as two records sharing `ship_id`.
 */
struct ShipRecord {
  std::string ship_id;
  std::string location_id;
  std::vector<Sample> samples;

  std::size_t observation_count() const {
    std::size_t n = 0;
    for (const auto& s : samples) n += s.observations.size();
    return n;
  }

  friend bool operator==(const ShipRecord&, const ShipRecord&) = default;
};

enum class StratumKind { AtSea, Ashore };

inline std::string_view to_string(StratumKind kind) {
  return kind == StratumKind::AtSea ? "sea" : "ashore";
}

struct Stratum {
  StratumKind kind = StratumKind::AtSea;
  std::vector<ShipRecord> ships;

  bool empty() const { return ships.empty(); }

  std::size_t observation_count() const {
    std::size_t n = 0;
    for (const auto& ship : ships) n += ship.observation_count();
    return n;
  }

  friend bool operator==(const Stratum&, const Stratum&) = default;
};

struct LandingsRecord {
  std::string species;
  std::string gear;
  int year = 0;
  double total_biomass_kg = 0.0;

  friend bool operator==(const LandingsRecord&, const LandingsRecord&) = default;
};

/// One species/gear/year worth of length samples from both strata plus the landed biomass.
struct SurveyDataset {
  Stratum at_sea{StratumKind::AtSea, {}};
  Stratum ashore{StratumKind::Ashore, {}};
  LandingsRecord landings;

  friend bool operator==(const SurveyDataset&, const SurveyDataset&) = default;
};

struct ValidationOptions {
  double max_length_cm = 250.0;
  /// Ashore sampling cannot separate tows, so each ashore record holds one sample.
  /// Synthetic designs with several ashore samples per ship turn this off.
  bool single_sample_ashore = true;
};

/// Appends every invariant violation of one stratum to `out`.
inline void validate(const Stratum& stratum, const ValidationOptions& opts, std::vector<std::string>& out) {
  const std::string name{to_string(stratum.kind)};
  if (stratum.ships.empty()) {
    out.push_back(name + " stratum: no ships");
    return;
  }
  std::set<std::pair<std::string, std::string>> seen_ships;
  for (const auto& ship : stratum.ships) {
    const std::string where = name + " ship '" + ship.ship_id + "' at location '" + ship.location_id + "'";
    if (!seen_ships.emplace(ship.ship_id, ship.location_id).second) {
      out.push_back(where + ": duplicate ship record");
    }
    if (ship.samples.empty()) {
      out.push_back(where + ": no samples");
      continue;
    }
    if (stratum.kind == StratumKind::Ashore && opts.single_sample_ashore && ship.samples.size() != 1) {
      out.push_back(where + ": ashore ship has " + std::to_string(ship.samples.size()) +
                    " samples, expected exactly 1");
    }
    std::set<std::string> seen_samples;
    for (const auto& sample : ship.samples) {
      const std::string swhere = where + " sample '" + sample.sample_id + "'";
      if (!seen_samples.insert(sample.sample_id).second) out.push_back(swhere + ": duplicate sample id");
      if (sample.observations.empty()) out.push_back(swhere + ": no observations");
      for (std::size_t i = 0; i < sample.observations.size(); ++i) {
        const double len = sample.observations[i].length_cm;
        if (!(len > 0.0)) {
          out.push_back(swhere + " observation " + std::to_string(i) + ": length_cm " + std::to_string(len) +
                        " is not positive");
        } else if (len > opts.max_length_cm) {
          out.push_back(swhere + " observation " + std::to_string(i) + ": length_cm " + std::to_string(len) +
                        " exceeds " + std::to_string(opts.max_length_cm));
        }
      }
    }
  }
}

/// Every invariant violation in `dataset`; empty means valid.
inline std::vector<std::string> validate(const SurveyDataset& dataset, const ValidationOptions& opts = {}) {
  std::vector<std::string> out;
  validate(dataset.at_sea, opts, out);
  validate(dataset.ashore, opts, out);
  if (!(dataset.landings.total_biomass_kg > 0.0)) {
    out.push_back("landings: total_biomass_kg " + std::to_string(dataset.landings.total_biomass_kg) +
                  " is not positive");
  }
  return out;
}

}  // namespace discard
