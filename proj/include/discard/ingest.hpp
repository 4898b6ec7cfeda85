#pragma once

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "discard/domain.hpp"
#include "discard/error.hpp"

namespace discard {

namespace csv {

/// Splits one CSV record. Supports double-quoted fields with "" escapes; no embedded newlines.
inline std::vector<std::string> split(std::string_view line, bool* ok = nullptr) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  bool good = true;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      if (!cur.empty()) good = false;
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) good = false;
  fields.push_back(std::move(cur));
  if (ok) *ok = good;
  return fields;
}

inline std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

/// Shortest-safe round-trip formatting: 17 significant digits.
inline std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Shortest text that reads back to the same double.
inline std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline bool parse_double(std::string_view text, double& out) {
  std::string s(text);
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

inline bool parse_int(std::string_view text, long long& out) {
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

inline void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

/// Column positions of `required` names in a header row.
inline std::vector<std::size_t> locate_columns(const std::vector<std::string>& header,
                                               const std::vector<std::string>& required, const std::string& path) {
  std::vector<std::size_t> pos;
  for (const auto& name : required) {
    std::size_t found = header.size();
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) found = i;
    if (found == header.size()) throw ParseError(path, 1, "missing column '" + name + "'");
    pos.push_back(found);
  }
  return pos;
}

}  // namespace csv

/// At-sea and ashore strata read from one samples file.
struct StrataPair {
  Stratum at_sea{StratumKind::AtSea, {}};
  Stratum ashore{StratumKind::Ashore, {}};

  friend bool operator==(const StrataPair&, const StrataPair&) = default;
};

struct IngestOptions {
  double max_length_cm = 250.0;
  bool single_sample_ashore = true;
  /// When false, out-of-range lengths and multi-sample ashore ships are
  /// accepted so that `validate` can report them; syntax errors still throw.
  bool strict = true;
};

/**
 * Reads `stratum,ship_id,location_id,sample_id,length_cm` rows and groups
 * them into ships (keyed by ship and location) and samples, keeping first
 * appearance order and row order within a sample. Extra columns are ignored.
 */
inline StrataPair read_samples(std::istream& in, const std::string& name, const IngestOptions& opts = {}) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(name, 1, "missing header row");
  csv::strip_cr(line);
  const auto header = csv::split(line);
  const auto col = csv::locate_columns(header, {"stratum", "ship_id", "location_id", "sample_id", "length_cm"}, name);

  StrataPair out;
  // (ship index, sample index) lookup per stratum
  std::map<std::tuple<int, std::string, std::string>, std::size_t> ship_index;
  std::map<std::tuple<int, std::size_t, std::string>, std::size_t> sample_index;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    csv::strip_cr(line);
    if (line.empty()) continue;
    bool ok = true;
    const auto fields = csv::split(line, &ok);
    if (!ok) throw ParseError(name, line_no, "malformed quoting");
    if (fields.size() != header.size()) {
      throw ParseError(name, line_no,
                       "expected " + std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()));
    }
    const std::string& token = fields[col[0]];
    int stratum_id;
    if (token == "sea") {
      stratum_id = 0;
    } else if (token == "ashore") {
      stratum_id = 1;
    } else {
      throw ParseError(name, line_no, "unknown stratum '" + token + "' (expected 'sea' or 'ashore')");
    }
    double length = 0.0;
    if (!csv::parse_double(fields[col[4]], length)) {
      throw ParseError(name, line_no, "length_cm '" + fields[col[4]] + "' is not a number");
    }
    if (opts.strict && !(length > 0.0)) throw ParseError(name, line_no, "length_cm must be positive");
    if (opts.strict && length > opts.max_length_cm) {
      throw ParseError(name, line_no, "length_cm " + fields[col[4]] + " exceeds " + csv::number(opts.max_length_cm));
    }
    const std::string& ship_id = fields[col[1]];
    const std::string& location_id = fields[col[2]];
    const std::string& sample_id = fields[col[3]];
    if (ship_id.empty() || sample_id.empty()) throw ParseError(name, line_no, "empty ship_id or sample_id");

    Stratum& stratum = stratum_id == 0 ? out.at_sea : out.ashore;
    auto [sit, new_ship] = ship_index.try_emplace({stratum_id, ship_id, location_id}, stratum.ships.size());
    if (new_ship) stratum.ships.push_back(ShipRecord{ship_id, location_id, {}});
    ShipRecord& ship = stratum.ships[sit->second];
    auto [pit, new_sample] = sample_index.try_emplace({stratum_id, sit->second, sample_id}, ship.samples.size());
    if (new_sample) {
      if (stratum_id == 1 && opts.strict && opts.single_sample_ashore && !ship.samples.empty()) {
        throw ParseError(name, line_no,
                         "ashore ship '" + ship_id + "' at location '" + location_id +
                             "' has more than one sample; ashore records carry exactly one sample");
      }
      ship.samples.push_back(Sample{sample_id, {}});
    }
    ship.samples[pit->second].observations.push_back({length});
  }
  return out;
}

inline StrataPair read_samples(const std::string& path, const IngestOptions& opts = {}) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open samples file");
  return read_samples(in, path, opts);
}

inline void write_samples(std::ostream& out, const StrataPair& strata) {
  out << "stratum,ship_id,location_id,sample_id,length_cm\n";
  for (const Stratum* s : {&strata.at_sea, &strata.ashore}) {
    const std::string token{to_string(s->kind)};
    for (const auto& ship : s->ships)
      for (const auto& sample : ship.samples)
        for (const auto& obs : sample.observations) {
          out << token << ',' << csv::quote(ship.ship_id) << ',' << csv::quote(ship.location_id) << ','
              << csv::quote(sample.sample_id) << ',' << csv::shortest(obs.length_cm) << '\n';
        }
  }
}

inline void write_samples(const std::string& path, const StrataPair& strata) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write samples file '" + path + "'");
  write_samples(out, strata);
  if (!out) throw Error("error writing samples file '" + path + "'");
}

/// The landings row for (species, gear, year).
inline LandingsRecord read_landings(std::istream& in, const std::string& name, const std::string& species,
                                    const std::string& gear, int year) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(name, 1, "missing header row");
  csv::strip_cr(line);
  const auto header = csv::split(line);
  const auto col = csv::locate_columns(header, {"species", "gear", "year", "total_biomass_kg"}, name);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    csv::strip_cr(line);
    if (line.empty()) continue;
    bool ok = true;
    const auto fields = csv::split(line, &ok);
    if (!ok || fields.size() != header.size()) throw ParseError(name, line_no, "malformed row");
    long long row_year = 0;
    if (!csv::parse_int(fields[col[2]], row_year)) throw ParseError(name, line_no, "year is not an integer");
    if (fields[col[0]] != species || fields[col[1]] != gear || row_year != year) continue;
    double biomass = 0.0;
    if (!csv::parse_double(fields[col[3]], biomass)) throw ParseError(name, line_no, "total_biomass_kg is not a number");
    if (!(biomass > 0.0)) throw ParseError(name, line_no, "total_biomass_kg must be positive");
    return LandingsRecord{species, gear, year, biomass};
  }
  throw Error("no landings record for species '" + species + "', gear '" + gear + "', year " + std::to_string(year) +
              " in " + name);
}

inline LandingsRecord read_landings(const std::string& path, const std::string& species, const std::string& gear,
                                    int year) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open landings file");
  return read_landings(in, path, species, gear, year);
}

inline SurveyDataset make_dataset(StrataPair strata, LandingsRecord landings) {
  return SurveyDataset{std::move(strata.at_sea), std::move(strata.ashore), std::move(landings)};
}

}  // namespace discard
