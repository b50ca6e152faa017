#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace distmfa {

/// One bin of a histogram: the interval [lo, hi] carries probability mass
/// `weight`. Zero-width bins (lo == hi) represent point masses.
struct Bin {
  double lo = 0.0;
  double hi = 0.0;
  double weight = 0.0;
};

namespace detail {

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

inline bool is_finite(double x) { return std::isfinite(x); }

// Scale-aware slack for contiguity checks: 1e-9 absolute, widened for data
// whose magnitude makes an ulp larger than that.
inline double contiguity_slack(double magnitude) {
  return std::max(1e-9, 8.0 * std::numeric_limits<double>::epsilon() * magnitude);
}

}  // namespace detail

/// A univariate distribution stored as weighted bins, sorted ascending and
/// non-overlapping, with mass uniform inside each bin. Weights sum to one.
class Histogram {
 public:
  explicit Histogram(std::vector<Bin> bins) : bins_(std::move(bins)) {
    detail::require(!bins_.empty(), "Histogram: needs at least one bin");
    double sum = 0.0;
    for (std::size_t i = 0; i < bins_.size(); ++i) {
      const Bin& b = bins_[i];
      detail::require(detail::is_finite(b.lo) && detail::is_finite(b.hi) &&
                          detail::is_finite(b.weight),
                      "Histogram: non-finite bin");
      detail::require(b.lo <= b.hi, "Histogram: bin lower bound exceeds upper bound");
      detail::require(b.weight > 0.0 && b.weight <= 1.0,
                      "Histogram: bin weight must lie in (0,1]");
      if (i > 0) {
        detail::require(bins_[i - 1].hi <= b.lo,
                        "Histogram: bins must be sorted and non-overlapping");
      }
      sum += b.weight;
    }
    detail::require(std::abs(sum - 1.0) <= 1e-12, "Histogram: weights must sum to 1");
    cumulative_.resize(bins_.size() + 1);
    cumulative_[0] = 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < bins_.size(); ++i) {
      acc += bins_[i].weight;
      cumulative_[i + 1] = acc;
    }
    cumulative_.back() = 1.0;  // pin the last level despite rounding
  }

  std::size_t size() const { return bins_.size(); }
  const std::vector<Bin>& bins() const { return bins_; }
  /// Cumulative weights w_0 = 0 < w_1 < ... < w_s = 1 (size() + 1 values).
  const std::vector<double>& cumulative_weights() const { return cumulative_; }
  double min() const { return bins_.front().lo; }
  double max() const { return bins_.back().hi; }

 private:
  std::vector<Bin> bins_;
  std::vector<double> cumulative_;
};

/// A histogram whose s bins carry equal mass 1/s, stored as bin centers and
/// radii (half-widths). Bin l spans [center(l) - radius(l), center(l) + radius(l)].
class EquiDepthHistogram {
 public:
  EquiDepthHistogram(std::vector<double> centers, std::vector<double> radii)
      : centers_(std::move(centers)), radii_(std::move(radii)) {
    detail::require(!centers_.empty(), "EquiDepthHistogram: needs at least one bin");
    detail::require(centers_.size() == radii_.size(),
                    "EquiDepthHistogram: centers/radii size mismatch");
    double mag = 0.0;
    for (std::size_t l = 0; l < centers_.size(); ++l) {
      detail::require(detail::is_finite(centers_[l]) && detail::is_finite(radii_[l]),
                      "EquiDepthHistogram: non-finite entry");
      detail::require(radii_[l] >= 0.0, "EquiDepthHistogram: negative radius");
      mag = std::max(mag, std::abs(centers_[l]) + radii_[l]);
    }
    const double slack = detail::contiguity_slack(mag);
    for (std::size_t l = 0; l + 1 < centers_.size(); ++l) {
      detail::require(upper(l) <= lower(l + 1) + slack,
                      "EquiDepthHistogram: bins must be contiguous and non-decreasing");
    }
  }

  /// Builds from the s+1 bin boundaries (non-decreasing).
  static EquiDepthHistogram from_bounds(std::span<const double> bounds) {
    detail::require(bounds.size() >= 2, "EquiDepthHistogram: needs at least 2 bounds");
    std::vector<double> centers(bounds.size() - 1);
    std::vector<double> radii(bounds.size() - 1);
    for (std::size_t l = 0; l + 1 < bounds.size(); ++l) {
      detail::require(bounds[l] <= bounds[l + 1],
                      "EquiDepthHistogram: bounds must be non-decreasing");
      centers[l] = (bounds[l] + bounds[l + 1]) / 2.0;
      radii[l] = (bounds[l + 1] - bounds[l]) / 2.0;
    }
    return EquiDepthHistogram(std::move(centers), std::move(radii));
  }

  std::size_t size() const { return centers_.size(); }
  const std::vector<double>& centers() const { return centers_; }
  const std::vector<double>& radii() const { return radii_; }
  double lower(std::size_t l) const { return centers_[l] - radii_[l]; }
  double upper(std::size_t l) const { return centers_[l] + radii_[l]; }
  double min() const { return lower(0); }
  double max() const { return upper(size() - 1); }

  /// The s+1 bin boundaries, clamped to be non-decreasing.
  std::vector<double> bounds() const {
    std::vector<double> b(size() + 1);
    b[0] = lower(0);
    for (std::size_t l = 0; l < size(); ++l) b[l + 1] = std::max(b[l], upper(l));
    return b;
  }

 private:
  std::vector<double> centers_;
  std::vector<double> radii_;
};

/// Piecewise-linear inverse CDF on [0,1]. Levels are non-decreasing with
/// t_0 = 0 and t_m = 1; a repeated level marks a jump of the underlying
/// quantile function (a gap in the support). Evaluation is left-continuous.
class QuantileFunction {
 public:
  QuantileFunction(std::vector<double> levels, std::vector<double> values)
      : levels_(std::move(levels)), values_(std::move(values)) {
    detail::require(levels_.size() == values_.size() && levels_.size() >= 2,
                    "QuantileFunction: needs matching levels/values, at least 2 knots");
    detail::require(levels_.front() == 0.0 && levels_.back() == 1.0,
                    "QuantileFunction: levels must start at 0 and end at 1");
    for (std::size_t k = 0; k < levels_.size(); ++k) {
      detail::require(detail::is_finite(levels_[k]) && detail::is_finite(values_[k]),
                      "QuantileFunction: non-finite knot");
      if (k > 0) {
        detail::require(levels_[k] >= levels_[k - 1],
                        "QuantileFunction: levels must be non-decreasing");
        detail::require(values_[k] >= values_[k - 1],
                        "QuantileFunction: values must be non-decreasing");
        if (k > 1) {
          detail::require(levels_[k] > levels_[k - 2],
                          "QuantileFunction: more than two knots share a level");
        }
      }
    }
  }

  const std::vector<double>& levels() const { return levels_; }
  const std::vector<double>& values() const { return values_; }
  double min() const { return values_.front(); }
  double max() const { return values_.back(); }

  /// Evaluates F^{-1}(t); t is clamped to [0,1]. At a jump the lower value is
  /// returned.
  double operator()(double t) const {
    if (t <= 0.0) return values_.front();
    if (t >= 1.0) return values_.back();
    // first knot with level >= t; the segment ending there contains t
    auto it = std::lower_bound(levels_.begin(), levels_.end(), t);
    std::size_t k = static_cast<std::size_t>(it - levels_.begin());
    if (levels_[k] == t) return values_[k];
    double t0 = levels_[k - 1], t1 = levels_[k];
    double v0 = values_[k - 1], v1 = values_[k];
    return v0 + (t - t0) / (t1 - t0) * (v1 - v0);
  }

 private:
  std::vector<double> levels_;
  std::vector<double> values_;
};

/// First four moments of a distribution. `degenerate` is set when the
/// standard deviation is zero, in which case skewness and kurtosis are
/// reported as zero.
struct DistributionSummary {
  double mean = 0.0;
  double stddev = 0.0;
  double skewness = 0.0;
  double kurtosis = 0.0;
  bool degenerate = false;
};

/// Empirical quantile of sorted data by linear interpolation of order
/// statistics (the interpolation used by the common `quantile` defaults).
inline double empirical_quantile(std::span<const double> sorted, double p) {
  detail::require(!sorted.empty(), "empirical_quantile: empty sample");
  p = std::clamp(p, 0.0, 1.0);
  const double h = p * static_cast<double>(sorted.size() - 1);
  const std::size_t k = std::min(static_cast<std::size_t>(h), sorted.size() - 1);
  if (k + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(k);
  return sorted[k] + frac * (sorted[k + 1] - sorted[k]);
}

/// Builds the equi-depth histogram whose bin bounds are the empirical
/// l/bin_count quantiles of the samples.
inline EquiDepthHistogram histogram_from_samples(std::span<const double> samples,
                                                 int bin_count) {
  detail::require(!samples.empty(), "histogram_from_samples: empty sample list");
  detail::require(bin_count >= 1, "histogram_from_samples: bin count must be >= 1");
  std::vector<double> sorted(samples.begin(), samples.end());
  for (double x : sorted)
    detail::require(detail::is_finite(x), "histogram_from_samples: non-finite sample");
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> bounds(static_cast<std::size_t>(bin_count) + 1);
  for (int l = 0; l <= bin_count; ++l) {
    bounds[static_cast<std::size_t>(l)] =
        empirical_quantile(sorted, static_cast<double>(l) / bin_count);
  }
  return EquiDepthHistogram::from_bounds(bounds);
}

namespace detail {

// Shared knot-building for both histogram flavours. Boundaries where the next
// bin starts above the previous bin's end become jumps (duplicate levels);
// ulp-scale overlaps are snapped to keep values non-decreasing.
inline QuantileFunction knots_to_qf(const std::vector<double>& levels_in,
                                    const std::vector<double>& lowers,
                                    const std::vector<double>& uppers) {
  const std::size_t s = lowers.size();
  std::vector<double> levels;
  std::vector<double> values;
  levels.reserve(2 * s);
  values.reserve(2 * s);
  levels.push_back(0.0);
  values.push_back(lowers[0]);
  for (std::size_t l = 0; l < s; ++l) {
    const double level = levels_in[l + 1];
    double top = std::max(uppers[l], values.back());
    levels.push_back(level);
    values.push_back(top);
    if (l + 1 < s) {
      double next_lo = std::max(lowers[l + 1], top);
      if (next_lo > top) {
        levels.push_back(level);
        values.push_back(next_lo);
      }
    }
  }
  return QuantileFunction(std::move(levels), std::move(values));
}

}  // namespace detail

/// Converts a histogram to its quantile function: linear between the bin
/// boundaries, with a jump wherever the support has a gap.
inline QuantileFunction to_quantile_function(const Histogram& h) {
  std::vector<double> lowers(h.size());
  std::vector<double> uppers(h.size());
  for (std::size_t l = 0; l < h.size(); ++l) {
    lowers[l] = h.bins()[l].lo;
    uppers[l] = h.bins()[l].hi;
  }
  return detail::knots_to_qf(h.cumulative_weights(), lowers, uppers);
}

inline QuantileFunction to_quantile_function(const EquiDepthHistogram& h) {
  const std::size_t s = h.size();
  std::vector<double> levels(s + 1);
  for (std::size_t l = 0; l <= s; ++l)
    levels[l] = static_cast<double>(l) / static_cast<double>(s);
  std::vector<double> lowers(s);
  std::vector<double> uppers(s);
  for (std::size_t l = 0; l < s; ++l) {
    lowers[l] = h.lower(l);
    uppers[l] = h.upper(l);
  }
  return detail::knots_to_qf(levels, lowers, uppers);
}

/// Equi-depth histogram as a plain histogram with weight 1/s per bin.
inline Histogram to_histogram(const EquiDepthHistogram& h) {
  const double w = 1.0 / static_cast<double>(h.size());
  std::vector<double> b = h.bounds();
  std::vector<Bin> bins(h.size());
  for (std::size_t l = 0; l < h.size(); ++l) bins[l] = Bin{b[l], b[l + 1], w};
  return Histogram(std::move(bins));
}

/// Re-quantizes a quantile function into `bin_count` equal-mass bins bounded
/// by the l/bin_count quantiles.
inline EquiDepthHistogram requantize(const QuantileFunction& f, int bin_count) {
  detail::require(bin_count >= 1, "requantize: bin count must be >= 1");
  std::vector<double> bounds(static_cast<std::size_t>(bin_count) + 1);
  for (int l = 0; l <= bin_count; ++l)
    bounds[static_cast<std::size_t>(l)] = f(static_cast<double>(l) / bin_count);
  return EquiDepthHistogram::from_bounds(bounds);
}

/// Rewrites every histogram on a common grid of `bin_count` equal-mass bins
/// so that the closed-form distance applies across the collection.
inline std::vector<EquiDepthHistogram> homogenize(std::span<const Histogram> histograms,
                                                  int bin_count) {
  detail::require(bin_count >= 1, "homogenize: bin count must be >= 1");
  std::vector<EquiDepthHistogram> out;
  out.reserve(histograms.size());
  for (const Histogram& h : histograms)
    out.push_back(requantize(to_quantile_function(h), bin_count));
  return out;
}

inline std::vector<EquiDepthHistogram> homogenize(
    std::span<const EquiDepthHistogram> histograms, int bin_count) {
  detail::require(bin_count >= 1, "homogenize: bin count must be >= 1");
  std::vector<EquiDepthHistogram> out;
  out.reserve(histograms.size());
  for (const EquiDepthHistogram& h : histograms)
    out.push_back(requantize(to_quantile_function(h), bin_count));
  return out;
}

namespace detail {

// Accumulates exact piecewise-uniform moments over (lo, hi, weight) bins.
// The first pass fixes the mean; central moments use shifted closed forms to
// avoid cancellation.
template <typename BinRange>
DistributionSummary summarize_bins(const BinRange& bins) {
  double mean = 0.0;
  for (const auto& [lo, hi, w] : bins) mean += w * (lo + hi) / 2.0;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (const auto& [lo, hi, w] : bins) {
    const double u = lo - mean, v = hi - mean;
    m2 += w * (u * u + u * v + v * v) / 3.0;
    m3 += w * (v * v + u * u) * (v + u) / 4.0;
    m4 += w * (u * u * u * u + u * u * u * v + u * u * v * v + u * v * v * v +
               v * v * v * v) / 5.0;
  }
  DistributionSummary s;
  s.mean = mean;
  const double var = std::max(0.0, m2);
  s.stddev = std::sqrt(var);
  if (s.stddev > 0.0) {
    s.skewness = m3 / (var * s.stddev);
    s.kurtosis = m4 / (var * var);
  } else {
    s.degenerate = true;
  }
  return s;
}

}  // namespace detail

/// Exact moments of the piecewise-uniform density; kurtosis is the fourth
/// standardized moment.
inline DistributionSummary summarize(const Histogram& h) {
  std::vector<std::tuple<double, double, double>> bins;
  bins.reserve(h.size());
  for (const Bin& b : h.bins()) bins.emplace_back(b.lo, b.hi, b.weight);
  return detail::summarize_bins(bins);
}

inline DistributionSummary summarize(const EquiDepthHistogram& h) {
  const double w = 1.0 / static_cast<double>(h.size());
  std::vector<std::tuple<double, double, double>> bins;
  bins.reserve(h.size());
  for (std::size_t l = 0; l < h.size(); ++l)
    bins.emplace_back(h.lower(l), h.upper(l), w);
  return detail::summarize_bins(bins);
}

}  // namespace distmfa
