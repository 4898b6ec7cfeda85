#pragma once

#include <map>
#include <set>
#include <string>

#include "discard/domain.hpp"
#include "discard/error.hpp"

namespace discard {

/// Which part of the data enters the estimate.
struct SelectionMethod {
  enum class Kind {
    All,            ///< M1: everything
    SameShips,      ///< M2: ships sampled both at sea and ashore
    SameLocations,  ///< M3: locations with enough observations in both strata
  };

  Kind kind = Kind::All;
  std::size_t min_obs = 90;  ///< M3 threshold, per location and stratum

  static SelectionMethod all() { return {Kind::All, 90}; }
  static SelectionMethod same_ships() { return {Kind::SameShips, 90}; }
  static SelectionMethod same_locations(std::size_t min_obs = 90) { return {Kind::SameLocations, min_obs}; }

  friend bool operator==(const SelectionMethod&, const SelectionMethod&) = default;
};

inline std::string to_string(const SelectionMethod& m) {
  switch (m.kind) {
    case SelectionMethod::Kind::All:
      return "m1";
    case SelectionMethod::Kind::SameShips:
      return "m2";
    case SelectionMethod::Kind::SameLocations:
      return "m3";
  }
  return "?";
}

namespace detail {

template <typename Keep>
Stratum filter_ships(const Stratum& in, Keep keep) {
  Stratum out{in.kind, {}};
  for (const auto& ship : in.ships)
    if (keep(ship)) out.ships.push_back(ship);
  return out;
}

inline std::map<std::string, std::size_t> observations_by_location(const Stratum& stratum) {
  std::map<std::string, std::size_t> counts;
  for (const auto& ship : stratum.ships) counts[ship.location_id] += ship.observation_count();
  return counts;
}

}  // namespace detail

inline SurveyDataset select(const SurveyDataset& dataset, const SelectionMethod& method) {
  if (method.kind == SelectionMethod::Kind::SameLocations && method.min_obs < 1) {
    throw Error("selection m3: min_obs must be >= 1");
  }
  SurveyDataset out;
  out.landings = dataset.landings;
  switch (method.kind) {
    case SelectionMethod::Kind::All:
      return dataset;
    case SelectionMethod::Kind::SameShips: {
      std::set<std::string> sea_ids, ashore_ids;
      for (const auto& s : dataset.at_sea.ships) sea_ids.insert(s.ship_id);
      for (const auto& s : dataset.ashore.ships) ashore_ids.insert(s.ship_id);
      out.at_sea = detail::filter_ships(dataset.at_sea, [&](const auto& s) { return ashore_ids.contains(s.ship_id); });
      out.ashore = detail::filter_ships(dataset.ashore, [&](const auto& s) { return sea_ids.contains(s.ship_id); });
      break;
    }
    case SelectionMethod::Kind::SameLocations: {
      const auto sea = detail::observations_by_location(dataset.at_sea);
      const auto ashore = detail::observations_by_location(dataset.ashore);
      std::set<std::string> keep;
      for (const auto& [loc, n] : sea) {
        auto it = ashore.find(loc);
        if (n >= method.min_obs && it != ashore.end() && it->second >= method.min_obs) keep.insert(loc);
      }
      auto in_keep = [&](const auto& s) { return keep.contains(s.location_id); };
      out.at_sea = detail::filter_ships(dataset.at_sea, in_keep);
      out.ashore = detail::filter_ships(dataset.ashore, in_keep);
      break;
    }
  }
  for (const Stratum* s : {&out.at_sea, &out.ashore}) {
    if (s->empty()) {
      throw Error("selection emptied stratum: method " + to_string(method) + " left no " +
                  std::string(to_string(s->kind)) + " ships");
    }
  }
  return out;
}

}  // namespace discard
