#pragma once

#include <filesystem>
#include <fstream>
#include <cmath>
#include <initializer_list>
#include <random>
#include <string>
#include <vector>

#include "discard/discard.hpp"

namespace discard::testing {

inline Sample make_sample(std::string id, std::initializer_list<double> lengths) {
  Sample s{std::move(id), {}};
  for (double l : lengths) s.observations.push_back({l});
  return s;
}

inline Sample make_sample(std::string id, const std::vector<double>& lengths) {
  Sample s{std::move(id), {}};
  for (double l : lengths) s.observations.push_back({l});
  return s;
}

inline ShipRecord make_ship(std::string ship, std::string location, std::vector<Sample> samples) {
  return ShipRecord{std::move(ship), std::move(location), std::move(samples)};
}

/// Minimal valid dataset: one ship per stratum.
inline SurveyDataset tiny_dataset() {
  SurveyDataset d;
  d.at_sea.ships.push_back(make_ship("A", "X", {make_sample("1", {30.0, 45.0, 60.0})}));
  d.ashore.ships.push_back(make_ship("B", "X", {make_sample("1", {45.0, 60.0, 70.0})}));
  d.landings = {"cod", "btrawl", 2002, 1.0e6};
  return d;
}

/// Random but valid hierarchical dataset drawn with a std engine (independent of discard::Rng).
inline SurveyDataset random_dataset(unsigned seed, int max_ships = 5) {
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<int> n_ships(1, max_ships), n_samples(1, 3), n_obs(1, 12), loc(0, 3);
  std::uniform_real_distribution<double> len(5.0, 120.0);
  SurveyDataset d;
  for (Stratum* s : {&d.at_sea, &d.ashore}) {
    const int ships = n_ships(gen);
    for (int i = 0; i < ships; ++i) {
      ShipRecord ship{"ship" + std::to_string(i % 4), "loc" + std::to_string(loc(gen)), {}};
      bool duplicate = false;
      for (const auto& other : s->ships) duplicate = duplicate || (other.ship_id == ship.ship_id && other.location_id == ship.location_id);
      if (duplicate) continue;
      const int samples = s->kind == StratumKind::Ashore ? 1 : n_samples(gen);
      for (int j = 0; j < samples; ++j) {
        Sample sample{"s" + std::to_string(j), {}};
        const int obs = n_obs(gen);
        for (int k = 0; k < obs; ++k) sample.observations.push_back({std::round(len(gen) * 10.0) / 10.0});
        ship.samples.push_back(std::move(sample));
      }
      s->ships.push_back(std::move(ship));
    }
  }
  d.landings = {"cod", "btrawl", 2002, 5.0e6};
  return d;
}

/// Temporary file removed on destruction.
class TempFile {
 public:
  explicit TempFile(const std::string& name, const std::string& contents = "") {
    path_ = (std::filesystem::temp_directory_path() / ("discard_test_" + std::to_string(counter()++) + "_" + name)).string();
    if (!contents.empty()) {
      std::ofstream(path_) << contents;
    }
  }
  ~TempFile() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
  TempFile(const TempFile&) = delete;
  TempFile& operator=(const TempFile&) = delete;

  const std::string& path() const { return path_; }

  std::string read() const {
    std::ifstream in(path_, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  }

 private:
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string path_;
};

}  // namespace discard::testing
