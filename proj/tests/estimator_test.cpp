#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "discard/estimator.hpp"
#include "test_support.hpp"

namespace discard {
namespace {

using testing::make_sample;
using testing::make_ship;

EstimatorConfig config(double d_max, AggregateMode mode = AggregateMode::RawProportions) {
  EstimatorConfig cfg;
  cfg.d_max_cm = d_max;
  cfg.aggregate = mode;
  return cfg;
}

// Independent length-weight relation for oracles: grams to kilograms.
double oracle_weight_kg(double length_cm) { return 0.01 * length_cm * length_cm * length_cm / 1000.0; }

std::vector<double> repeat(double length, int n) { return std::vector<double>(static_cast<std::size_t>(n), length); }

std::vector<double> concat(std::initializer_list<std::vector<double>> parts) {
  std::vector<double> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

/**
 * Three 1 cm classes at 30, 50 and 70 cm with D_max = 55. Ashore proportions
 * are 0 / 80/180 / 100/180 and the biomass is chosen so that 180 fish were
 * landed: landed numbers 0, 80, 100. Catch proportions 0.3, 0.3, 0.4.
 * By hand: k = 100 / 0.4 = 250, caught numbers 75, 75, 100, discard
 * ratios 1, 0 (clamped from -5/75), 0, raw rate 75 / 250 = 0.3.
 */
SurveyDataset toy() {
  SurveyDataset d;
  d.at_sea.ships = {make_ship("S", "X", {make_sample("1", concat({repeat(30.2, 3), repeat(50.2, 3), repeat(70.2, 4)}))})};
  d.ashore.ships = {make_ship("A", "X", {make_sample("1", concat({repeat(50.7, 80), repeat(70.7, 100)}))})};
  d.landings = {"cod", "btrawl", 2002, 80.0 * oracle_weight_kg(50.5) + 100.0 * oracle_weight_kg(70.5)};
  return d;
}

TEST(Weight, Kilograms) {
  EstimatorConfig cfg;
  EXPECT_DOUBLE_EQ(weight_of(10.0, cfg), 0.01);
  EXPECT_DOUBLE_EQ(weight_of(50.0, cfg), 1.25);
  EXPECT_THROW(weight_of(0.0, cfg), EstimationError);
}

TEST(Binning, FloorAndMidpoint) {
  LengthDistribution d(1.0);
  EXPECT_EQ(d.lower_bound_of(30.0), 30.0);
  EXPECT_EQ(d.lower_bound_of(30.99), 30.0);
  EXPECT_EQ(d.midpoint(30.0), 30.5);
  LengthDistribution two(2.0);
  EXPECT_EQ(two.lower_bound_of(31.9), 30.0);
  EXPECT_EQ(two.lower_bound_of(32.0), 32.0);
  EXPECT_EQ(two.midpoint(30.0), 31.0);
}

TEST(Pool, EqualWeightAcrossShipsAndSamples) {
  Stratum s{StratumKind::AtSea,
            {make_ship("A", "X", {make_sample("1", {30.1, 30.9}), make_sample("2", {31.0})}),
             make_ship("B", "X", {make_sample("1", {29.5, 31.2, 31.3, 31.4})})}};
  const auto d = pool(s, 1.0);
  EXPECT_EQ(d.total(), 7.0);
  EXPECT_EQ(d.bins(), (std::map<double, double>{{29.0, 1.0}, {30.0, 2.0}, {31.0, 4.0}}));
  const auto two = pool(s, 2.0);
  EXPECT_EQ(two.bins(), (std::map<double, double>{{28.0, 1.0}, {30.0, 6.0}}));
}

TEST(LandedNumbers, TwoClassMeanWeight) {
  // classes with midpoints 50 and 100 in equal proportion: W = (1.25 + 10) / 2 = 5.625 kg
  LengthDistribution ashore(1.0);
  ashore.add_class(49.5, 3.0);
  ashore.add_class(99.5, 3.0);
  const auto landed = landed_numbers(ashore, {"cod", "g", 1, 11250.0}, EstimatorConfig{});
  EXPECT_DOUBLE_EQ(landed.w_mean_kg, 5.625);
  EXPECT_DOUBLE_EQ(landed.n_total, 2000.0);
  EXPECT_DOUBLE_EQ(landed.per_class.at(49.5), 1000.0);
  EXPECT_DOUBLE_EQ(landed.per_class.total(), 2000.0);
}

TEST(Estimate, ToyOracle) {
  const auto est = estimate(toy(), config(55.0));
  EXPECT_NEAR(est.n_landed_total, 180.0, 1e-9);
  EXPECT_NEAR(est.k, 250.0, 1e-9);
  ASSERT_EQ(est.per_length.size(), 3u);
  const double lower[] = {30.0, 50.0, 70.0};
  const double n_catch[] = {75.0, 75.0, 100.0};
  const double n_landed[] = {0.0, 80.0, 100.0};
  const double p[] = {1.0, 0.0, 0.0};
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& c = est.per_length[i];
    EXPECT_EQ(c.lower_cm, lower[i]);
    EXPECT_EQ(c.midpoint_cm, lower[i] + 0.5);
    EXPECT_NEAR(c.n_catch, n_catch[i], 1e-9);
    EXPECT_NEAR(c.n_landed, n_landed[i], 1e-9);
    ASSERT_TRUE(c.p_discard.has_value());
    EXPECT_NEAR(*c.p_discard, p[i], 1e-12);
  }
  EXPECT_NEAR(est.discard_rate_numbers, 0.3, 1e-12);
}

TEST(Estimate, ReferenceRangeIsStrictlyAboveDmax) {
  // the 50 cm class sits above D_max = 49.9 but not above D_max = 50
  const auto at_50 = estimate(toy(), config(50.0));
  EXPECT_NEAR(at_50.k, 250.0, 1e-9);
  const auto at_49 = estimate(toy(), config(49.9));
  EXPECT_NEAR(at_49.k, 180.0 / 0.7, 1e-9);
}

TEST(Estimate, NoDiscardIdentity) {
  for (unsigned seed = 0; seed < 30; ++seed) {
    auto d = testing::random_dataset(seed);
    d.at_sea = d.ashore;
    d.at_sea.kind = StratumKind::AtSea;
    for (auto mode : {AggregateMode::RawProportions, AggregateMode::FittedLogistic}) {
      const auto est = estimate(d, config(1.0, mode));
      for (const auto& c : est.per_length) {
        EXPECT_EQ(c.n_catch, c.n_landed);
        ASSERT_TRUE(c.p_discard.has_value());
        EXPECT_EQ(*c.p_discard, 0.0);
        EXPECT_EQ(c.p_fitted, 0.0);
      }
      EXPECT_EQ(est.discard_rate_numbers, 0.0);
      EXPECT_TRUE(est.fit_degenerate);
    }
  }
}

TEST(Estimate, ReferenceRangeNumbersMatch) {
  for (unsigned seed = 0; seed < 40; ++seed) {
    const auto d = testing::random_dataset(seed);
    const auto cfg = config(60.0);
    DiscardEstimate est;
    try {
      est = estimate(d, cfg);
    } catch (const EstimationError&) {
      continue;
    }
    double landed = 0.0, caught = 0.0;
    for (const auto& c : est.per_length) {
      if (c.lower_cm > cfg.d_max_cm) {
        landed += c.n_landed;
        caught += c.n_catch;
      }
      if (c.p_discard) {
        EXPECT_GE(*c.p_discard, 0.0);
        EXPECT_LE(*c.p_discard, 1.0);
      }
    }
    EXPECT_NEAR(caught, landed, 1e-9 * landed);
    EXPECT_GE(est.discard_rate_numbers, 0.0);
    EXPECT_LE(est.discard_rate_numbers, 1.0);
  }
}

TEST(Estimate, BiomassScalesNumbersNotRates) {
  auto d = toy();
  const auto a = estimate(d, config(55.0));
  d.landings.total_biomass_kg *= 7.0;
  const auto b = estimate(d, config(55.0));
  EXPECT_NEAR(b.k, 7.0 * a.k, 1e-9 * b.k);
  EXPECT_NEAR(b.discard_rate_numbers, a.discard_rate_numbers, 1e-14);
}

TEST(Estimate, UndeterminedPolicies) {
  // ashore has a 60 cm class that no at-sea fish falls into
  auto d = toy();
  for (int i = 0; i < 20; ++i) d.ashore.ships[0].samples[0].observations.push_back({60.3});
  auto cfg = config(55.0);
  const auto dropped = estimate(d, cfg);
  EXPECT_EQ(dropped.undetermined_count(), 1u);
  cfg.undetermined = UndeterminedPolicy::ZeroFill;
  const auto filled = estimate(d, cfg);
  EXPECT_EQ(filled.undetermined_count(), 0u);
  const auto it = std::find_if(filled.per_length.begin(), filled.per_length.end(),
                               [](const auto& c) { return c.lower_cm == 60.0; });
  ASSERT_NE(it, filled.per_length.end());
  EXPECT_TRUE(it->zero_filled);
  EXPECT_EQ(*it->p_discard, 0.0);
  // the zero-filled class counts as caught-and-landed, diluting the raw rate
  const double expected = dropped.discard_rate_numbers * dropped.k / (dropped.k + it->n_landed);
  EXPECT_NEAR(filled.k, dropped.k, 1e-9);
  EXPECT_NEAR(filled.discard_rate_numbers, expected, 1e-12);
}

TEST(Estimate, FittedModeRecoversCurve) {
  // at sea 10000 fish per class 20..80; ashore keeps round(10000 (1 - p)) per class
  const double d50 = 36.0, b = -0.5;
  std::vector<double> sea, ashore;
  double caught = 0.0, discarded = 0.0, landed_kg = 0.0;
  for (int lower = 20; lower <= 80; ++lower) {
    const double mid = lower + 0.5;
    const double p = 1.0 / (1.0 + std::exp(-b * (mid - d50)));
    const int keep = static_cast<int>(std::lround(10000.0 * (1.0 - p)));
    auto s = repeat(lower + 0.25, 10000);
    sea.insert(sea.end(), s.begin(), s.end());
    auto a = repeat(lower + 0.25, keep);
    ashore.insert(ashore.end(), a.begin(), a.end());
    caught += 10000.0;
    discarded += 10000.0 * (lower <= 60 ? p : 0.0);
    landed_kg += keep * oracle_weight_kg(mid);
  }
  SurveyDataset data;
  data.at_sea.ships = {make_ship("S", "X", {make_sample("1", sea)})};
  data.ashore.ships = {make_ship("A", "X", {make_sample("1", ashore)})};
  data.landings = {"cod", "btrawl", 2002, landed_kg};
  const auto est = estimate(data, config(60.0, AggregateMode::FittedLogistic));
  EXPECT_NEAR(est.k, 61.0 * 10000.0, 1e-3);  // 61 classes at 10000 each
  EXPECT_NEAR(est.d50_cm, d50, 0.01);
  EXPECT_NEAR(est.b_slope, b, 0.005);
  EXPECT_FALSE(est.fit_degenerate);
  EXPECT_NEAR(est.discard_rate_numbers, discarded / caught, 1e-4);
  for (const auto& c : est.per_length) {
    if (c.lower_cm > 60.0) EXPECT_EQ(c.p_fitted, 0.0);
  }
}

TEST(Estimate, RawModeToleratesFitFailure) {
  // only two determined classes: fitting is impossible, the raw rate still exists
  SurveyDataset d;
  d.at_sea.ships = {make_ship("S", "X", {make_sample("1", {30.2, 70.2})})};
  d.ashore.ships = {make_ship("A", "X", {make_sample("1", {70.7})})};
  d.landings = {"cod", "btrawl", 2002, 10.0};
  const auto est = estimate(d, config(55.0));
  EXPECT_TRUE(std::isnan(est.d50_cm));
  EXPECT_NEAR(est.discard_rate_numbers, 0.5, 1e-12);
  EXPECT_THROW(estimate(d, config(55.0, AggregateMode::FittedLogistic)), EstimationError);
}

TEST(Estimate, Errors) {
  auto d = toy();
  try {
    estimate(d, config(80.0));
    FAIL();
  } catch (const EstimationError& e) {
    EXPECT_NE(std::string(e.what()).find("empty reference range"), std::string::npos);
  }
  EXPECT_THROW(estimate(d, EstimatorConfig{}), EstimationError);  // D_max unset
  auto no_landed = d;
  no_landed.ashore.ships[0].samples[0].observations = {{50.7}};
  EXPECT_THROW(estimate(no_landed, config(55.0)), EstimationError);
  auto empty = d;
  empty.at_sea.ships.clear();
  EXPECT_THROW(estimate(empty, config(55.0)), EstimationError);
}

TEST(DiscardProportions, BinWidthMismatch) {
  ClassNumbers a{1.0, 1.0, {{30.0, 1.0}}};
  ClassNumbers b{2.0, 1.0, {{30.0, 1.0}}};
  EXPECT_THROW(discard_proportions(a, b, config(55.0)), EstimationError);
}

TEST(Estimate, Deterministic) {
  const auto d = testing::random_dataset(11);
  const auto a = estimate(d, config(40.0));
  const auto b = estimate(d, config(40.0));
  EXPECT_EQ(a.discard_rate_numbers, b.discard_rate_numbers);
  EXPECT_EQ(a.per_length, b.per_length);
  EXPECT_EQ(std::isnan(a.d50_cm), std::isnan(b.d50_cm));
}

}  // namespace
}  // namespace discard
