#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "discard/domain.hpp"
#include "discard/error.hpp"
#include "discard/logistic.hpp"

namespace discard {

enum class UndeterminedPolicy {
  Drop,      ///< classes with no caught fish are left undetermined
  ZeroFill,  ///< classes with no caught fish are taken as not discarded
};

enum class AggregateMode {
  FittedLogistic,  ///< weight the fitted curve by numbers caught
  RawProportions,  ///< weight the per-class ratios by numbers caught
};

struct EstimatorConfig {
  /// W[g] = condition_factor * L[cm] ^ weight_exponent
  double condition_factor = 0.01;
  double weight_exponent = 3.0;
  /// No fish in a class whose lower bound exceeds this length is discarded. Must be set.
  double d_max_cm = std::numeric_limits<double>::quiet_NaN();
  double bin_width_cm = 1.0;
  UndeterminedPolicy undetermined = UndeterminedPolicy::Drop;
  AggregateMode aggregate = AggregateMode::FittedLogistic;
  FitOptions fit{};

  void check() const {
    if (!(condition_factor > 0.0)) throw EstimationError("condition_factor must be positive");
    if (!(weight_exponent > 0.0)) throw EstimationError("weight_exponent must be positive");
    if (!(d_max_cm > 0.0)) throw EstimationError("d_max_cm must be set to a positive length");
    if (!(bin_width_cm > 0.0)) throw EstimationError("bin_width_cm must be positive");
  }
};

/**
 * Counts per length class. A class is identified by its lower bound; a fish
 * of length L belongs to the class starting at floor(L / width) * width and
 * is represented by the class midpoint.
 */
class LengthDistribution {
 public:
  explicit LengthDistribution(double bin_width_cm) : width_(bin_width_cm) {
    if (!(bin_width_cm > 0.0)) throw EstimationError("bin width must be positive");
  }

  double bin_width() const noexcept { return width_; }
  const std::map<double, double>& bins() const noexcept { return bins_; }
  double total() const noexcept { return total_; }

  double lower_bound_of(double length_cm) const { return std::floor(length_cm / width_) * width_; }
  double midpoint(double lower_cm) const { return lower_cm + 0.5 * width_; }

  void add(double length_cm, double count = 1.0) { add_class(lower_bound_of(length_cm), count); }

  /// Adds `count` to the class with the given lower bound, which need not lie on the bin grid.
  void add_class(double lower_cm, double count) {
    if (!(count >= 0.0)) throw EstimationError("class counts must be non-negative");
    bins_[lower_cm] += count;
    total_ += count;
  }

  double proportion(double lower_cm) const {
    if (total_ <= 0.0) return 0.0;
    auto it = bins_.find(lower_cm);
    return it == bins_.end() ? 0.0 : it->second / total_;
  }

  std::map<double, double> proportions() const {
    std::map<double, double> out;
    for (const auto& [lower, count] : bins_) out.emplace(lower, total_ > 0.0 ? count / total_ : 0.0);
    return out;
  }

 private:
  double width_;
  std::map<double, double> bins_;
  double total_ = 0.0;
};

/**
 * Absolute numbers per length class, held as scale * proportion so that
 * numbers raised from identical distributions compare equal bit for bit.
 */
struct ClassNumbers {
  double bin_width_cm = 1.0;
  double scale = 1.0;
  std::map<double, double> proportions;

  static ClassNumbers from_numbers(double bin_width_cm, std::map<double, double> numbers) {
    return ClassNumbers{bin_width_cm, 1.0, std::move(numbers)};
  }

  double at(double lower_cm) const {
    auto it = proportions.find(lower_cm);
    return it == proportions.end() ? 0.0 : scale * it->second;
  }

  double total() const {
    double sum = 0.0;
    for (const auto& [lower, p] : proportions) sum += p;
    return scale * sum;
  }

  std::map<double, double> numbers() const {
    std::map<double, double> out;
    for (const auto& [lower, p] : proportions) out.emplace(lower, scale * p);
    return out;
  }
};

struct LandedNumbers {
  double w_mean_kg = 0.0;
  double n_total = 0.0;
  ClassNumbers per_class;
};

struct ClassDiscard {
  std::optional<double> p;  ///< empty when undetermined
  bool zero_filled = false;
};

struct LengthClassEstimate {
  double lower_cm = 0.0;
  double midpoint_cm = 0.0;
  double n_landed = 0.0;
  double n_catch = 0.0;
  std::optional<double> p_discard;
  bool zero_filled = false;
  double p_fitted = 0.0;  ///< fitted curve at the midpoint, 0 above D_max

  friend bool operator==(const LengthClassEstimate&, const LengthClassEstimate&) = default;
};

struct DiscardEstimate {
  double k = 0.0;
  double n_landed_total = 0.0;
  double w_mean_kg = 0.0;
  std::vector<LengthClassEstimate> per_length;
  /// Fitted logistic; NaN when the fit was not possible in RawProportions mode.
  double d50_cm = std::numeric_limits<double>::quiet_NaN();
  double b_slope = std::numeric_limits<double>::quiet_NaN();
  bool fit_degenerate = false;
  double discard_rate_numbers = 0.0;

  std::size_t undetermined_count() const {
    return static_cast<std::size_t>(
        std::count_if(per_length.begin(), per_length.end(), [](const auto& c) { return !c.p_discard; }));
  }

  friend bool operator==(const DiscardEstimate&, const DiscardEstimate&) = default;
};

/// Individual weight in kg; the length-weight relation yields grams.
inline double weight_of(double length_cm, const EstimatorConfig& cfg) {
  if (!(length_cm > 0.0)) throw EstimationError("weight_of: length must be positive");
  return cfg.condition_factor * std::pow(length_cm, cfg.weight_exponent) / 1000.0;
}

/// All observations in a stratum pooled with equal weight and binned.
inline LengthDistribution pool(const Stratum& stratum, double bin_width_cm) {
  LengthDistribution dist(bin_width_cm);
  // dense tally by class index first; std::map insertion per fish dominates otherwise
  std::vector<double> tally;
  long long first = 0;
  for (const auto& ship : stratum.ships)
    for (const auto& sample : ship.samples)
      for (const auto& obs : sample.observations) {
        const auto idx = static_cast<long long>(std::floor(obs.length_cm / bin_width_cm));
        if (tally.empty()) {
          first = idx;
          tally.assign(1, 0.0);
        } else if (idx < first) {
          tally.insert(tally.begin(), static_cast<std::size_t>(first - idx), 0.0);
          first = idx;
        } else if (idx - first >= static_cast<long long>(tally.size())) {
          tally.resize(static_cast<std::size_t>(idx - first + 1), 0.0);
        }
        tally[static_cast<std::size_t>(idx - first)] += 1.0;
      }
  for (std::size_t i = 0; i < tally.size(); ++i) {
    if (tally[i] > 0.0) dist.add_class(static_cast<double>(first + static_cast<long long>(i)) * bin_width_cm, tally[i]);
  }
  return dist;
}

inline LandedNumbers landed_numbers(const LengthDistribution& ashore, const LandingsRecord& landings,
                                    const EstimatorConfig& cfg) {
  if (!(ashore.total() > 0.0)) throw EstimationError("landed_numbers: ashore distribution is empty");
  if (!(landings.total_biomass_kg > 0.0)) throw EstimationError("landed_numbers: landed biomass must be positive");
  LandedNumbers out;
  out.per_class.bin_width_cm = ashore.bin_width();
  for (const auto& [lower, count] : ashore.bins()) {
    out.w_mean_kg += (count / ashore.total()) * weight_of(ashore.midpoint(lower), cfg);
  }
  if (!(out.w_mean_kg > 0.0)) throw EstimationError("landed_numbers: mean weight is zero");
  out.n_total = landings.total_biomass_kg / out.w_mean_kg;
  out.per_class.scale = out.n_total;
  out.per_class.proportions = ashore.proportions();
  return out;
}

/// Scales catch proportions to numbers by matching landed numbers over classes above D_max.
inline double raising_factor(const ClassNumbers& landed, const LengthDistribution& catch_dist, double d_max_cm) {
  double landed_above = 0.0;
  for (const auto& [lower, p] : landed.proportions)
    if (lower > d_max_cm) landed_above += p;
  double catch_above = 0.0;
  for (const auto& [lower, p] : catch_dist.proportions())
    if (lower > d_max_cm) catch_above += p;
  if (!(catch_above > 0.0)) throw EstimationError("cannot raise: empty reference range (no catch above D_max)");
  if (!(landed.scale * landed_above > 0.0)) throw EstimationError("cannot raise: no landed fish above D_max");
  return landed.scale * (landed_above / catch_above);
}

inline ClassNumbers catch_numbers(double k, const LengthDistribution& catch_dist) {
  if (!(k > 0.0)) throw EstimationError("catch_numbers: raising factor must be positive");
  return ClassNumbers{catch_dist.bin_width(), k, catch_dist.proportions()};
}

/// Per-class discarded proportion over the union of landed and caught classes, clamped to [0, 1].
inline std::map<double, ClassDiscard> discard_proportions(const ClassNumbers& landed, const ClassNumbers& caught,
                                                          const EstimatorConfig& cfg) {
  if (landed.bin_width_cm != caught.bin_width_cm) {
    throw EstimationError("discard_proportions: landed and catch numbers use different bin widths");
  }
  std::map<double, ClassDiscard> out;
  auto visit = [&](double lower) {
    if (out.contains(lower)) return;
    const double n_catch = caught.at(lower);
    const double n_landed = landed.at(lower);
    ClassDiscard cd;
    if (n_catch > 0.0) {
      cd.p = std::clamp((n_catch - n_landed) / n_catch, 0.0, 1.0);
    } else if (cfg.undetermined == UndeterminedPolicy::ZeroFill) {
      cd.p = 0.0;
      cd.zero_filled = true;
    }
    out.emplace(lower, cd);
  };
  for (const auto& [lower, p] : caught.proportions) visit(lower);
  for (const auto& [lower, p] : landed.proportions) visit(lower);
  return out;
}

/**
 * Length-based discard estimate for one dataset.
 *
 * Pools each stratum, raises landed biomass to numbers via the mean weight,
 * raises catch proportions with the reference range above D_max, takes
 * per-class discard ratios and fits the logistic discard curve to them.
 *
 * The aggregate rate is a numbers-caught weighted mean over all classes:
 * FittedLogistic uses the curve (zero above D_max), RawProportions uses the
 * determined ratios. In RawProportions mode a zero-filled class enters the
 * denominator with its landed numbers, since "nothing discarded" means the
 * catch equals the landings there; a fit failure leaves d50/b as NaN instead
 * of failing the estimate. When every determined ratio is zero the curve is
 * taken as identically zero and the fit is flagged degenerate.
 */
inline DiscardEstimate estimate(const SurveyDataset& dataset, const EstimatorConfig& cfg) {
  cfg.check();
  if (dataset.at_sea.empty() || dataset.ashore.empty()) {
    throw EstimationError("estimate: both the at-sea and the ashore stratum must be non-empty");
  }
  const LengthDistribution landed_dist = pool(dataset.ashore, cfg.bin_width_cm);
  const LandedNumbers landed = landed_numbers(landed_dist, dataset.landings, cfg);
  const LengthDistribution catch_dist = pool(dataset.at_sea, cfg.bin_width_cm);
  const double k = raising_factor(landed.per_class, catch_dist, cfg.d_max_cm);
  const ClassNumbers caught = catch_numbers(k, catch_dist);
  const auto proportions = discard_proportions(landed.per_class, caught, cfg);

  DiscardEstimate est;
  est.k = k;
  est.n_landed_total = landed.n_total;
  est.w_mean_kg = landed.w_mean_kg;
  est.per_length.reserve(proportions.size());

  std::vector<LogisticPoint> points;
  points.reserve(proportions.size());
  for (const auto& [lower, cd] : proportions) {
    LengthClassEstimate c;
    c.lower_cm = lower;
    c.midpoint_cm = catch_dist.midpoint(lower);
    c.n_landed = landed.per_class.at(lower);
    c.n_catch = caught.at(lower);
    c.p_discard = cd.p;
    c.zero_filled = cd.zero_filled;
    if (cd.p) points.push_back({c.midpoint_cm, *cd.p, c.n_catch});
    est.per_length.push_back(c);
  }

  // Every determined ratio zero: the least-squares optimum is the zero curve,
  // reached only as D50 runs off to minus infinity, so take it directly.
  const bool all_zero = !points.empty() && std::all_of(points.begin(), points.end(), [](const auto& pt) {
    return pt.p == 0.0 || !(pt.weight > 0.0);
  });
  if (all_zero) {
    est.fit_degenerate = true;
  } else if (cfg.aggregate == AggregateMode::FittedLogistic) {
    const LogisticFit fit = fit_logistic(points, cfg.fit);
    est.d50_cm = fit.d50_cm;
    est.b_slope = fit.b_slope;
    est.fit_degenerate = fit.degenerate;
  } else {
    try {
      const LogisticFit fit = fit_logistic(points, cfg.fit);
      est.d50_cm = fit.d50_cm;
      est.b_slope = fit.b_slope;
      est.fit_degenerate = fit.degenerate;
    } catch (const EstimationError&) {
    }
  }

  const bool have_fit = std::isfinite(est.d50_cm) && std::isfinite(est.b_slope);
  double numerator = 0.0;
  double denominator = 0.0;
  for (auto& c : est.per_length) {
    if (have_fit && c.lower_cm <= cfg.d_max_cm) c.p_fitted = logistic(c.midpoint_cm, est.d50_cm, est.b_slope);
    if (cfg.aggregate == AggregateMode::FittedLogistic) {
      numerator += c.p_fitted * c.n_catch;
      denominator += c.n_catch;
    } else if (c.zero_filled) {
      denominator += c.n_landed;
    } else {
      if (c.p_discard) numerator += *c.p_discard * c.n_catch;
      denominator += c.n_catch;
    }
  }
  est.discard_rate_numbers = denominator > 0.0 ? std::clamp(numerator / denominator, 0.0, 1.0) : 0.0;
  return est;
}

}  // namespace discard
