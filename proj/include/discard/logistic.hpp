#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "discard/error.hpp"

namespace discard {

/// 1 / (1 + exp(-b (L - d50))), evaluated without overflow.
inline double logistic(double length_cm, double d50_cm, double b_slope) {
  const double z = b_slope * (length_cm - d50_cm);
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct LogisticPoint {
  double length_cm = 0.0;
  double p = 0.0;
  double weight = 1.0;
};

struct FitOptions {
  double step_tolerance = 1e-8;
  int max_iterations = 500;
  /// |b| below this, or a singular normal matrix at the solution, flags the fit as degenerate.
  double degenerate_slope = 1e-6;
};

struct LogisticFit {
  double d50_cm = 0.0;
  double b_slope = 0.0;
  int iterations = 0;
  double weighted_sse = 0.0;
  bool degenerate = false;
};

namespace detail {

/// Starting point: first crossing of p = 0.5 between neighbouring classes, else the median class.
inline LogisticFit initial_guess(std::span<const LogisticPoint> sorted) {
  LogisticFit guess;
  guess.d50_cm = sorted[sorted.size() / 2].length_cm;
  guess.b_slope = -0.5;
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    const double a = sorted[i].p - 0.5;
    const double c = sorted[i + 1].p - 0.5;
    if (a == 0.0 && c == 0.0) continue;
    if ((a >= 0.0 && c < 0.0) || (a <= 0.0 && c > 0.0)) {
      const double t = a / (a - c);
      guess.d50_cm = sorted[i].length_cm + t * (sorted[i + 1].length_cm - sorted[i].length_cm);
      guess.b_slope = c < a ? -0.5 : 0.5;
      break;
    }
  }
  return guess;
}

}  // namespace detail

/**
 * Weighted least-squares fit of the logistic discard curve.
 *
 * Levenberg-Marquardt on (d50, b) with Marquardt diagonal scaling. Stops
 * when an accepted step moves both parameters by less than
 * `step_tolerance`, or when no damping level reduces the weighted SSE any
 * further (a numerical minimum). Points with non-positive weight are ignored.
 *
 * Throws EstimationError for fewer than three usable points and FitError
 * after `max_iterations`.
 */
inline LogisticFit fit_logistic(std::span<const LogisticPoint> points, const FitOptions& opts = {}) {
  std::vector<LogisticPoint> pts;
  pts.reserve(points.size());
  double wsum = 0.0;
  for (const auto& pt : points) {
    if (pt.weight > 0.0 && std::isfinite(pt.weight) && std::isfinite(pt.p) && std::isfinite(pt.length_cm)) {
      pts.push_back(pt);
      wsum += pt.weight;
    }
  }
  if (pts.size() < 3) {
    throw EstimationError("insufficient classes for logistic fit: " + std::to_string(pts.size()) +
                          " determined, need 3");
  }
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.length_cm < b.length_cm; });
  for (auto& pt : pts) pt.weight /= wsum;

  auto sse = [&](double d50, double b) {
    double s = 0.0;
    for (const auto& pt : pts) {
      const double r = pt.p - logistic(pt.length_cm, d50, b);
      s += pt.weight * r * r;
    }
    return s;
  };

  LogisticFit fit = detail::initial_guess(pts);
  double current = sse(fit.d50_cm, fit.b_slope);
  double lambda = 1e-3;
  double a11 = 0.0, a12 = 0.0, a22 = 0.0;

  auto normal_equations = [&](double& g1, double& g2) {
    a11 = a12 = a22 = g1 = g2 = 0.0;
    for (const auto& pt : pts) {
      const double f = logistic(pt.length_cm, fit.d50_cm, fit.b_slope);
      const double s = f * (1.0 - f);
      const double j1 = -fit.b_slope * s;             // df/dd50
      const double j2 = (pt.length_cm - fit.d50_cm) * s;  // df/db
      const double r = pt.p - f;
      a11 += pt.weight * j1 * j1;
      a12 += pt.weight * j1 * j2;
      a22 += pt.weight * j2 * j2;
      g1 += pt.weight * j1 * r;
      g2 += pt.weight * j2 * r;
    }
  };

  auto finish = [&](int iterations) {
    fit.iterations = iterations;
    fit.weighted_sse = current;
    double g1 = 0.0, g2 = 0.0;
    normal_equations(g1, g2);
    const double det = a11 * a22 - a12 * a12;
    fit.degenerate = std::abs(fit.b_slope) < opts.degenerate_slope || !(det > 1e-12 * a11 * a22);
    return fit;
  };

  for (int iter = 1; iter <= opts.max_iterations; ++iter) {
    double g1 = 0.0, g2 = 0.0;
    normal_equations(g1, g2);
    const double d1 = std::max(a11, 1e-12);
    const double d2 = std::max(a22, 1e-12);
    while (true) {
      const double m11 = a11 + lambda * d1;
      const double m22 = a22 + lambda * d2;
      const double det = m11 * m22 - a12 * a12;
      double step1 = 0.0, step2 = 0.0;
      if (det > 0.0 && std::isfinite(det)) {
        step1 = (m22 * g1 - a12 * g2) / det;
        step2 = (m11 * g2 - a12 * g1) / det;
      }
      const double next_d50 = fit.d50_cm + step1;
      const double next_b = fit.b_slope + step2;
      const double trial = sse(next_d50, next_b);
      if (std::isfinite(trial) && trial <= current && det > 0.0) {
        fit.d50_cm = next_d50;
        fit.b_slope = next_b;
        current = trial;
        lambda = std::max(lambda * 0.3, 1e-12);
        if (std::abs(step1) < opts.step_tolerance && std::abs(step2) < opts.step_tolerance) return finish(iter);
        break;
      }
      lambda *= 10.0;
      if (lambda > 1e16) return finish(iter);
    }
  }
  throw FitError("logistic fit did not converge in " + std::to_string(opts.max_iterations) + " iterations",
                 fit.d50_cm, fit.b_slope);
}

}  // namespace discard
