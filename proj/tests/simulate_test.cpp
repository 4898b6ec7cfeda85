#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "discard/simulate.hpp"
#include "test_support.hpp"

namespace discard {
namespace {

EstimatorConfig base_config(AggregateMode mode = AggregateMode::RawProportions) {
  EstimatorConfig cfg;
  cfg.d_max_cm = 55.0;
  cfg.aggregate = mode;
  return cfg;
}

SimulationConfig sim_config(std::size_t runs, std::uint64_t seed = 1) {
  SimulationConfig cfg;
  cfg.runs = runs;
  cfg.seed = seed;
  cfg.threads = 1;
  return cfg;
}

TEST(Grid, TableOneCardinality) {
  const auto grid = table1_grid();
  ASSERT_EQ(grid.size(), 72u);
  const MonitoringScheme first{{10, 1, 25}, {10, 1, 100}};
  const MonitoringScheme last{{40, 2, 100}, {20, 2, 100}};
  EXPECT_EQ(grid.front(), first);
  EXPECT_EQ(grid.back(), last);
  std::set<std::vector<std::size_t>> distinct;
  for (const auto& s : grid) {
    distinct.insert({s.sea.n_ships, s.sea.n_samples_per_ship, s.sea.n_obs_per_sample, s.ashore.n_ships,
                     s.ashore.n_samples_per_ship, s.ashore.n_obs_per_sample});
  }
  EXPECT_EQ(distinct.size(), 72u);
  EXPECT_EQ(grid[1].ashore, (StratumDesign{10, 2, 100}));
  EXPECT_EQ(grid[4].sea, (StratumDesign{10, 1, 50}));
}

TEST(Truth, StepCurveMatchesNormalTail) {
  // a very steep curve discards everything below D50: fraction = Phi((D50 - mu) / sd)
  auto pop = SyntheticPopulation::default_population();
  pop.true_b = -200.0;
  const double sd = std::sqrt(10.0 * 10.0 + 5.0 * 5.0 + 2.0 * 2.0);
  const double expected = 0.5 * std::erfc(-(36.0 - 48.0) / (sd * std::sqrt(2.0)));
  EXPECT_NEAR(true_discard_fraction(pop, 0.01), expected, 1e-4);
}

TEST(Truth, MatchesMonteCarlo) {
  const auto pop = SyntheticPopulation::default_population();
  std::mt19937_64 gen(7);
  std::normal_distribution<double> len(48.0, 10.0), ship(0.0, 5.0), tow(0.0, 2.0);
  const int n = 2'000'000;
  double discarded = 0.0;
  for (int i = 0; i < n; ++i) {
    const double l = len(gen) + ship(gen) + tow(gen);
    discarded += 1.0 / (1.0 + std::exp(0.5 * (l - 36.0)));
  }
  EXPECT_NEAR(true_discard_fraction(pop), discarded / n, 1e-3);
}

TEST(Truth, MixtureWeightsNormalise) {
  SyntheticPopulation a = SyntheticPopulation::default_population();
  a.components = {{1.0, 30.0, 5.0}, {3.0, 60.0, 8.0}};
  SyntheticPopulation b = a;
  b.components = {{0.25, 30.0, 5.0}, {0.75, 60.0, 8.0}};
  EXPECT_DOUBLE_EQ(true_discard_fraction(a), true_discard_fraction(b));
}

TEST(Generate, Dimensions) {
  Rng rng(3);
  const MonitoringScheme scheme{{3, 2, 7}, {4, 2, 5}};
  const auto d = generate(SyntheticPopulation::default_population(), scheme, rng);
  ASSERT_EQ(d.at_sea.ships.size(), 3u);
  ASSERT_EQ(d.ashore.ships.size(), 4u);
  for (const auto& ship : d.at_sea.ships) {
    ASSERT_EQ(ship.samples.size(), 2u);
    for (const auto& s : ship.samples) EXPECT_EQ(s.observations.size(), 7u);
  }
  EXPECT_EQ(d.ashore.observation_count(), 40u);
  EXPECT_EQ(d.landings.total_biomass_kg, 1e7);
  EXPECT_TRUE(validate(d, {250.0, false}).empty());
}

TEST(Generate, LandedFishAreLarger) {
  Rng rng(4);
  const auto d = generate(SyntheticPopulation::default_population(), {{20, 2, 100}, {20, 2, 100}}, rng);
  auto mean_length = [](const Stratum& s) {
    double sum = 0.0;
    for (const auto& ship : s.ships)
      for (const auto& sample : ship.samples)
        for (const auto& o : sample.observations) sum += o.length_cm;
    return sum / static_cast<double>(s.observation_count());
  };
  EXPECT_GT(mean_length(d.ashore), mean_length(d.at_sea) + 1.0);
}

TEST(Generate, DeterministicPerPath) {
  const auto pop = SyntheticPopulation::default_population();
  const MonitoringScheme scheme{{2, 1, 10}, {2, 1, 10}};
  Rng a = Rng(9).derive(2).derive(5);
  Rng b = Rng(9).derive(2).derive(5);
  Rng c = Rng(9).derive(2).derive(6);
  const auto da = generate(pop, scheme, a);
  EXPECT_EQ(da, generate(pop, scheme, b));
  EXPECT_NE(da, generate(pop, scheme, c));
}

TEST(ResampleScheme, DrawsFromSource) {
  const auto src = testing::random_dataset(12);
  Rng rng(5);
  const auto d = resample_scheme(src, {{6, 3, 4}, {2, 1, 9}}, rng);
  EXPECT_EQ(d.at_sea.observation_count(), 72u);
  EXPECT_EQ(d.ashore.observation_count(), 18u);
  std::set<double> lengths;
  for (const auto& ship : src.at_sea.ships)
    for (const auto& s : ship.samples)
      for (const auto& o : s.observations) lengths.insert(o.length_cm);
  for (const auto& ship : d.at_sea.ships)
    for (const auto& s : ship.samples)
      for (const auto& o : s.observations) EXPECT_TRUE(lengths.contains(o.length_cm));
}

TEST(SourceFilter, DropsSmallSamplesThenShips) {
  using testing::make_sample;
  using testing::make_ship;
  SurveyDataset d;
  d.at_sea.ships = {make_ship("A", "X", {make_sample("1", std::vector<double>(100, 40.0)),
                                         make_sample("2", std::vector<double>(100, 41.0))}),
                    make_ship("B", "X", {make_sample("1", std::vector<double>(100, 40.0)),
                                         make_sample("2", std::vector<double>(99, 41.0))})};
  d.ashore.ships = {make_ship("C", "X", {make_sample("1", std::vector<double>(100, 50.0))}),
                    make_ship("D", "X", {make_sample("1", std::vector<double>(10, 50.0))})};
  const auto f = apply_source_filter(d, {});
  ASSERT_EQ(f.at_sea.ships.size(), 1u);
  EXPECT_EQ(f.at_sea.ships[0].ship_id, "A");
  ASSERT_EQ(f.ashore.ships.size(), 1u);
  EXPECT_EQ(f.ashore.ships[0].ship_id, "C");
  EXPECT_THROW(apply_source_filter(d, {3, 1, 100}), Error);
}

TEST(Variant, Settings) {
  const auto base = base_config();
  EXPECT_EQ(apply_variant(base, EstimatorVariant::Standard).bin_width_cm, 1.0);
  EXPECT_EQ(apply_variant(base, EstimatorVariant::ZeroFill).undetermined, UndeterminedPolicy::ZeroFill);
  EXPECT_EQ(apply_variant(base, EstimatorVariant::Bin2cm).bin_width_cm, 2.0);
  EXPECT_EQ(apply_variant(base, EstimatorVariant::Bin2cm).undetermined, UndeterminedPolicy::Drop);
}

TEST(Evaluate, SummaryMatchesRuns) {
  const auto source = SimulationSource::synthetic(SyntheticPopulation::default_population());
  const MonitoringScheme scheme{{10, 1, 25}, {10, 1, 100}};
  const auto res = evaluate_scheme(source, scheme, base_config(), sim_config(40), {EstimatorVariant::Standard});
  ASSERT_EQ(res.size(), 1u);
  // recompute from the documented draw path
  std::vector<double> rates;
  for (std::size_t r = 0; r < 40; ++r) {
    Rng rng = Rng(1).derive(0).derive(r);
    rates.push_back(estimate(generate(SyntheticPopulation::default_population(), scheme, rng), base_config())
                        .discard_rate_numbers);
  }
  double sum = 0.0;
  for (double r : rates) sum += r;
  EXPECT_DOUBLE_EQ(res[0].mean_rate, sum / 40.0);
  EXPECT_DOUBLE_EQ(res[0].ci_low, quantile(rates, 0.025));
  EXPECT_DOUBLE_EQ(res[0].ci_high, quantile(rates, 0.975));
  EXPECT_DOUBLE_EQ(res[0].reference_rate, true_discard_fraction(SyntheticPopulation::default_population()));
  EXPECT_DOUBLE_EQ(res[0].bias, res[0].mean_rate - res[0].reference_rate);
  EXPECT_EQ(res[0].n_runs, 40u);
}

TEST(Evaluate, VariantsShareDraws) {
  const auto source = SimulationSource::synthetic(SyntheticPopulation::default_population());
  const MonitoringScheme scheme{{10, 1, 25}, {10, 1, 100}};
  const auto all = evaluate_scheme(source, scheme, base_config(), sim_config(30),
                                   {EstimatorVariant::Standard, EstimatorVariant::ZeroFill, EstimatorVariant::Bin2cm});
  ASSERT_EQ(all.size(), 3u);
  const auto zero_only = evaluate_scheme(source, scheme, base_config(), sim_config(30), {EstimatorVariant::ZeroFill});
  EXPECT_EQ(all[1], zero_only[0]);
  EXPECT_EQ(all[2].variant, EstimatorVariant::Bin2cm);
}

TEST(Evaluate, ThreadCountDoesNotMatter) {
  const auto source = SimulationSource::synthetic(SyntheticPopulation::default_population());
  auto cfg = sim_config(50, 3);
  cfg.per_length = true;
  const MonitoringScheme scheme{{10, 2, 25}, {10, 1, 100}};
  const auto one = evaluate_scheme(source, scheme, base_config(), cfg, {EstimatorVariant::Standard});
  cfg.threads = 6;
  EXPECT_EQ(evaluate_scheme(source, scheme, base_config(), cfg, {EstimatorVariant::Standard}), one);
}

TEST(Evaluate, PerLengthReference) {
  const auto source = SimulationSource::synthetic(SyntheticPopulation::default_population());
  auto cfg = sim_config(20);
  cfg.per_length = true;
  const auto res =
      evaluate_scheme(source, {{10, 1, 50}, {10, 1, 100}}, base_config(), cfg, {EstimatorVariant::Bin2cm})[0];
  ASSERT_FALSE(res.per_length.empty());
  for (const auto& pl : res.per_length) {
    EXPECT_EQ(std::fmod(pl.lower_cm, 2.0), 0.0);
    EXPECT_NEAR(pl.reference_p, 1.0 / (1.0 + std::exp(0.5 * (pl.lower_cm + 1.0 - 36.0))), 1e-12);
    EXPECT_GE(pl.n_determined, 1u);
    EXPECT_LE(pl.n_determined, 20u);
  }
}

TEST(Evaluate, ResampledSourceReference) {
  Rng rng(21);
  const auto data = generate(SyntheticPopulation::default_population(), {{15, 2, 100}, {15, 1, 100}}, rng);
  const auto source = SimulationSource::resampled(data);
  EXPECT_EQ(source.reference_rate(base_config()), estimate(data, base_config()).discard_rate_numbers);
  const auto res =
      evaluate_scheme(source, {{10, 1, 50}, {10, 1, 100}}, base_config(), sim_config(30), {EstimatorVariant::Standard});
  EXPECT_LT(std::abs(res[0].bias), 0.2);
}

TEST(Sweep, SchemeMajorWithIndexedStreams) {
  const auto source = SimulationSource::synthetic(SyntheticPopulation::default_population());
  const std::vector<MonitoringScheme> grid{{{10, 1, 25}, {10, 1, 100}}, {{10, 1, 50}, {10, 1, 100}}};
  const std::vector<EstimatorVariant> variants{EstimatorVariant::Standard, EstimatorVariant::ZeroFill};
  const auto rows = sweep(source, grid, base_config(), sim_config(10), variants);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[2].scheme, grid[1]);
  EXPECT_EQ(rows[3].variant, EstimatorVariant::ZeroFill);
  EXPECT_EQ(rows[2], evaluate_scheme(source, grid[1], base_config(), sim_config(10), variants, 1)[0]);
  EXPECT_THROW(sweep(source, {}, base_config(), sim_config(10), variants), Error);
}

TEST(Evaluate, Checks) {
  const auto source = SimulationSource::synthetic(SyntheticPopulation::default_population());
  EXPECT_THROW(evaluate_scheme(source, {{0, 1, 1}, {1, 1, 1}}, base_config(), sim_config(10), {EstimatorVariant::Standard}),
               Error);
  EXPECT_THROW(evaluate_scheme(source, {{1, 1, 1}, {1, 1, 1}}, base_config(), sim_config(1), {EstimatorVariant::Standard}),
               Error);
  EXPECT_THROW(evaluate_scheme(source, {{1, 1, 1}, {1, 1, 1}}, base_config(), sim_config(10), {}), Error);
  EXPECT_THROW(SimulationSource::synthetic(SyntheticPopulation{}), Error);
}

}  // namespace
}  // namespace discard
