#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "distmfa/histogram.hpp"

namespace distmfa {

namespace detail {

inline double lerp_knot(double t0, double t1, double v0, double v1, double t) {
  if (t == t0) return v0;
  if (t == t1) return v1;
  return v0 + (t - t0) / (t1 - t0) * (v1 - v0);
}

// Walks the union of the two knot grids; both functions are linear inside
// every reported segment. fn(width, fa, fb, ga, gb) receives the endpoint
// values on [t, t + width].
template <typename Fn>
void sweep_merged_segments(const QuantileFunction& f, const QuantileFunction& g,
                           Fn&& fn) {
  const std::vector<double>& tf = f.levels();
  const std::vector<double>& vf = f.values();
  const std::vector<double>& tg = g.levels();
  const std::vector<double>& vg = g.values();
  std::size_t i = 0, j = 0;
  double t = 0.0;
  while (t < 1.0) {
    while (i + 2 < tf.size() && tf[i + 1] <= t) ++i;
    while (j + 2 < tg.size() && tg[j + 1] <= t) ++j;
    const double next = std::min(tf[i + 1], tg[j + 1]);
    const double fa = lerp_knot(tf[i], tf[i + 1], vf[i], vf[i + 1], t);
    const double fb = lerp_knot(tf[i], tf[i + 1], vf[i], vf[i + 1], next);
    const double ga = lerp_knot(tg[j], tg[j + 1], vg[j], vg[j + 1], t);
    const double gb = lerp_knot(tg[j], tg[j + 1], vg[j], vg[j + 1], next);
    fn(next - t, fa, fb, ga, gb);
    t = next;
  }
}

template <typename Fn>
void sweep_segments(const QuantileFunction& f, Fn&& fn) {
  const std::vector<double>& tf = f.levels();
  const std::vector<double>& vf = f.values();
  for (std::size_t i = 0; i + 1 < tf.size(); ++i) {
    const double w = tf[i + 1] - tf[i];
    if (w > 0.0) fn(w, vf[i], vf[i + 1]);
  }
}

}  // namespace detail

/// Integral of the quantile function over [0,1]; equals the distribution mean.
inline double qf_mean(const QuantileFunction& f) {
  double acc = 0.0;
  detail::sweep_segments(f, [&](double w, double a, double b) {
    acc += w * (a + b) / 2.0;
  });
  return acc;
}

/// Integral of f*g over [0,1] on the merged knot grid (exact for piecewise
/// linear inputs).
inline double qf_product_integral(const QuantileFunction& f, const QuantileFunction& g) {
  double acc = 0.0;
  detail::sweep_merged_segments(f, g, [&](double w, double fa, double fb, double ga,
                                          double gb) {
    acc += w * (2.0 * fa * ga + fa * gb + fb * ga + 2.0 * fb * gb) / 6.0;
  });
  return acc;
}

/// Standard deviation of the distribution with quantile function f.
inline double qf_std(const QuantileFunction& f) {
  const double mean = qf_mean(f);
  double sq = 0.0;
  detail::sweep_segments(f, [&](double w, double a, double b) {
    sq += w * (a * a + a * b + b * b) / 3.0;
  });
  return std::sqrt(std::max(0.0, sq - mean * mean));
}

/// Squared L2 distance between quantile functions, integrated exactly on the
/// merged knot grid.
inline double wasserstein_sq_integral(const QuantileFunction& f,
                                      const QuantileFunction& g) {
  double acc = 0.0;
  detail::sweep_merged_segments(f, g, [&](double w, double fa, double fb, double ga,
                                          double gb) {
    const double da = fa - ga, db = fb - gb;
    acc += w * (da * da + da * db + db * db) / 3.0;
  });
  return acc;
}

/// Closed form of the same squared distance for two histograms on a common
/// equal-mass grid: mean of squared center gaps plus one third of squared
/// radius gaps.
inline double wasserstein_sq_closed(const EquiDepthHistogram& f,
                                    const EquiDepthHistogram& g) {
  detail::require(f.size() == g.size(),
                  "wasserstein_sq_closed: histograms must share the bin count; "
                  "homogenize them first");
  double acc = 0.0;
  for (std::size_t l = 0; l < f.size(); ++l) {
    const double dc = f.centers()[l] - g.centers()[l];
    const double dr = f.radii()[l] - g.radii()[l];
    acc += dc * dc + dr * dr / 3.0;
  }
  return acc / static_cast<double>(f.size());
}

inline double wasserstein_distance(const QuantileFunction& f, const QuantileFunction& g) {
  return std::sqrt(wasserstein_sq_integral(f, g));
}

/// Additive split of the squared distance into location, scale and shape
/// parts; rho is the correlation of the two quantile functions over [0,1].
/// A degenerate side (zero spread) is treated as perfectly correlated, so its
/// shape term vanishes.
struct DistanceDecomposition {
  double location = 0.0;
  double scale = 0.0;
  double shape = 0.0;
  double rho = 1.0;
  double total() const { return location + scale + shape; }
};

inline DistanceDecomposition decompose_distance(const QuantileFunction& f,
                                                const QuantileFunction& g) {
  const double mf = qf_mean(f), mg = qf_mean(g);
  const double sf = qf_std(f), sg = qf_std(g);
  DistanceDecomposition d;
  d.location = (mf - mg) * (mf - mg);
  d.scale = (sf - sg) * (sf - sg);
  if (sf * sg > 0.0) {
    const double cov = qf_product_integral(f, g) - mf * mg;
    d.rho = std::clamp(cov / (sf * sg), -1.0, 1.0);
    d.shape = 2.0 * sf * sg * (1.0 - d.rho);
  }
  return d;
}

/// Barycenter of equal-mass histograms on a shared grid: bin-wise average of
/// centers and radii.
inline EquiDepthHistogram frechet_mean(std::span<const EquiDepthHistogram> hs) {
  detail::require(!hs.empty(), "frechet_mean: empty collection");
  const std::size_t s = hs.front().size();
  for (const EquiDepthHistogram& h : hs)
    detail::require(h.size() == s,
                    "frechet_mean: histograms must share the bin count; homogenize first");
  std::vector<double> centers(s, 0.0), radii(s, 0.0);
  for (const EquiDepthHistogram& h : hs) {
    for (std::size_t l = 0; l < s; ++l) {
      centers[l] += h.centers()[l];
      radii[l] += h.radii()[l];
    }
  }
  const double inv = 1.0 / static_cast<double>(hs.size());
  for (std::size_t l = 0; l < s; ++l) {
    centers[l] *= inv;
    radii[l] *= inv;
  }
  return EquiDepthHistogram(std::move(centers), std::move(radii));
}

/// Mean squared distance to the barycenter.
inline double distributional_variance(std::span<const EquiDepthHistogram> hs) {
  const EquiDepthHistogram bary = frechet_mean(hs);
  double acc = 0.0;
  for (const EquiDepthHistogram& h : hs) acc += wasserstein_sq_closed(h, bary);
  return acc / static_cast<double>(hs.size());
}

}  // namespace distmfa
