#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "distmfa/histogram.hpp"
#include "distmfa/wasserstein.hpp"

namespace distmfa {

/// Row metric over units: positive weights summing to one.
class UnitWeights {
 public:
  explicit UnitWeights(Eigen::Index n)
      : w_(Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n))) {
    detail::require(n >= 1, "UnitWeights: need at least one unit");
  }

  explicit UnitWeights(Eigen::VectorXd w) : w_(std::move(w)) {
    detail::require(w_.size() >= 1, "UnitWeights: need at least one unit");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < w_.size(); ++i) {
      detail::require(std::isfinite(w_[i]) && w_[i] > 0.0,
                      "UnitWeights: weights must be positive");
      sum += w_[i];
    }
    detail::require(std::abs(sum - 1.0) <= 1e-12, "UnitWeights: weights must sum to 1");
  }

  Eigen::Index size() const { return w_.size(); }
  const Eigen::VectorXd& vector() const { return w_; }
  double operator[](Eigen::Index i) const { return w_[i]; }

 private:
  Eigen::VectorXd w_;
};

/// One variable's units-by-quantiles matrix. Column 0 holds the minima, column
/// l > 0 the l/K quantiles. Rows are non-decreasing until the table is
/// centered; centering subtracts column means and freezes the table.
class QuantileTable {
 public:
  QuantileTable(std::string variable_id, Eigen::MatrixXd entries)
      : variable_id_(std::move(variable_id)), entries_(std::move(entries)) {
    detail::require(entries_.rows() >= 1 && entries_.cols() >= 2,
                    "QuantileTable: need at least one unit and two columns");
    detail::require(entries_.allFinite(), "QuantileTable: non-finite entry");
    for (Eigen::Index i = 0; i < entries_.rows(); ++i) {
      for (Eigen::Index l = 1; l < entries_.cols(); ++l) {
        detail::require(entries_(i, l) >= entries_(i, l - 1),
                        "QuantileTable: rows must be non-decreasing");
      }
    }
    column_means_ = Eigen::VectorXd::Zero(entries_.cols());
  }

  const std::string& variable_id() const { return variable_id_; }
  Eigen::Index units() const { return entries_.rows(); }
  Eigen::Index columns() const { return entries_.cols(); }
  Eigen::Index quantile_count() const { return entries_.cols() - 1; }
  const Eigen::MatrixXd& entries() const { return entries_; }
  bool centered() const { return centered_; }
  /// Means removed by centering (zero until then).
  const Eigen::VectorXd& column_means() const { return column_means_; }

  friend QuantileTable center_columns(const QuantileTable& t);

 private:
  std::string variable_id_;
  Eigen::MatrixXd entries_;
  Eigen::VectorXd column_means_;
  bool centered_ = false;
};

/// Stacks one row of quantile bounds per unit: [min, q_{1/K}, ..., max].
inline QuantileTable build_quantile_table(std::string variable_id,
                                          std::span<const EquiDepthHistogram> hs) {
  detail::require(!hs.empty(), "build_quantile_table: no histograms");
  const std::size_t s = hs.front().size();
  for (const EquiDepthHistogram& h : hs)
    detail::require(h.size() == s,
                    "build_quantile_table: histograms must share the bin count; "
                    "homogenize them first");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(hs.size()),
                    static_cast<Eigen::Index>(s + 1));
  for (std::size_t i = 0; i < hs.size(); ++i) {
    std::vector<double> b = hs[i].bounds();
    for (std::size_t l = 0; l <= s; ++l)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l)) = b[l];
  }
  return QuantileTable(std::move(variable_id), std::move(m));
}

/// Removes column means (two passes, so a large common offset leaves no
/// residual). The result no longer has monotone rows.
inline QuantileTable center_columns(const QuantileTable& t) {
  detail::require(!t.centered(), "center_columns: table already centered");
  QuantileTable out = t;
  Eigen::VectorXd means = out.entries_.colwise().mean();
  out.entries_.rowwise() -= means.transpose();
  Eigen::VectorXd residual = out.entries_.colwise().mean();
  out.entries_.rowwise() -= residual.transpose();
  out.column_means_ = means + residual;
  out.centered_ = true;
  return out;
}

/// Weighted cross-product S = Q^T W Q of a centered table.
inline Eigen::MatrixXd covariance_block(const QuantileTable& t, const UnitWeights& w) {
  detail::require(t.centered(), "covariance_block: table must be centered");
  detail::require(w.size() == t.units(), "covariance_block: weight size mismatch");
  Eigen::MatrixXd s =
      t.entries().transpose() * w.vector().asDiagonal() * t.entries();
  return ((s + s.transpose()) / 2.0).eval();
}

/// How the quantile grid resolution relates the table's inertia to the
/// distributional variance of the underlying histograms: the per-cell trace
/// mean exceeds the variance by a gap that shrinks as the grid refines.
struct TraceGapReport {
  double trace = 0.0;          // raw trace of Q^T W Q, uniform weights
  double trace_over_k = 0.0;   // trace / K
  double variance = 0.0;       // mean squared distance to the barycenter
  double gap = 0.0;            // trace_over_k - variance
  double gap_explicit = 0.0;   // the same gap from the centered radii
};

inline TraceGapReport trace_variance_gap(const QuantileTable& t,
                                         std::span<const EquiDepthHistogram> hs) {
  detail::require(t.centered(), "trace_variance_gap: table must be centered");
  detail::require(static_cast<std::size_t>(t.units()) == hs.size(),
                  "trace_variance_gap: unit count mismatch");
  const std::size_t s = hs.empty() ? 0 : hs.front().size();
  detail::require(static_cast<Eigen::Index>(s) == t.quantile_count(),
                  "trace_variance_gap: bin count does not match the table");

  const Eigen::Index n = t.units();
  const double k = static_cast<double>(t.quantile_count());

  TraceGapReport r;
  const UnitWeights uniform(n);
  Eigen::MatrixXd cov = covariance_block(t, uniform);
  r.trace = cov.trace();
  r.trace_over_k = r.trace / k;
  r.variance = distributional_variance(hs);
  r.gap = r.trace_over_k - r.variance;

  // gap from first principles: per-bin squared centered quantities,
  // q-columns on one side, centers and radii on the other
  std::vector<double> mean_c(s, 0.0), mean_r(s, 0.0);
  for (const EquiDepthHistogram& h : hs) {
    for (std::size_t l = 0; l < s; ++l) {
      mean_c[l] += h.centers()[l];
      mean_r[l] += h.radii()[l];
    }
  }
  for (std::size_t l = 0; l < s; ++l) {
    mean_c[l] /= static_cast<double>(n);
    mean_r[l] /= static_cast<double>(n);
  }
  double q_sq = t.entries().squaredNorm();
  double cr_sq = 0.0;
  for (const EquiDepthHistogram& h : hs) {
    for (std::size_t l = 0; l < s; ++l) {
      const double c = h.centers()[l] - mean_c[l];
      const double rr = h.radii()[l] - mean_r[l];
      cr_sq += c * c + rr * rr / 3.0;
    }
  }
  r.gap_explicit = (q_sq - cr_sq) / (static_cast<double>(n) * k);
  return r;
}

/// How the first and last quantile columns participate in the analysis.
struct ExtremesPolicy {
  enum class Kind { active, supplementary, weighted };
  Kind kind = Kind::active;
  double weight = 1.0;

  static ExtremesPolicy active() { return {}; }
  static ExtremesPolicy supplementary() { return {Kind::supplementary, 0.0}; }
  static ExtremesPolicy weighted(double w) {
    detail::require(std::isfinite(w) && w >= 0.0,
                    "ExtremesPolicy: weight must be non-negative");
    return {Kind::weighted, w};
  }
};

/// Aligned tables, one per variable, plus a base metric weight per column.
/// Weight zero marks a supplementary column: it is projected onto the axes
/// but does not shape them.
class BlockSet {
 public:
  explicit BlockSet(std::vector<QuantileTable> blocks,
                    ExtremesPolicy extremes = ExtremesPolicy::active())
      : blocks_(std::move(blocks)) {
    detail::require(!blocks_.empty(), "BlockSet: need at least one block");
    const Eigen::Index n = blocks_.front().units();
    for (const QuantileTable& b : blocks_)
      detail::require(b.units() == n, "BlockSet: blocks must share the unit rows");
    double edge = 1.0;
    if (extremes.kind == ExtremesPolicy::Kind::supplementary) edge = 0.0;
    if (extremes.kind == ExtremesPolicy::Kind::weighted) edge = extremes.weight;
    column_weights_.reserve(blocks_.size());
    for (const QuantileTable& b : blocks_) {
      std::vector<double> w(static_cast<std::size_t>(b.columns()), 1.0);
      w.front() = edge;
      w.back() = edge;
      column_weights_.push_back(std::move(w));
    }
  }

  std::size_t block_count() const { return blocks_.size(); }
  Eigen::Index units() const { return blocks_.front().units(); }
  const std::vector<QuantileTable>& blocks() const { return blocks_; }
  const QuantileTable& block(std::size_t j) const { return blocks_.at(j); }
  const std::vector<double>& column_weights(std::size_t j) const {
    return column_weights_.at(j);
  }

 private:
  std::vector<QuantileTable> blocks_;
  std::vector<std::vector<double>> column_weights_;
};

/// Side-by-side view of all blocks with the bookkeeping to map a global
/// column back to (block, local column).
struct ConcatenatedView {
  Eigen::MatrixXd matrix;
  std::vector<std::size_t> block_of_column;
  std::vector<std::size_t> local_of_column;
  std::vector<std::size_t> block_offsets;
};

inline ConcatenatedView concatenate(const BlockSet& set) {
  Eigen::Index total = 0;
  for (const QuantileTable& b : set.blocks()) total += b.columns();
  ConcatenatedView v;
  v.matrix.resize(set.units(), total);
  Eigen::Index at = 0;
  for (std::size_t j = 0; j < set.block_count(); ++j) {
    const QuantileTable& b = set.block(j);
    v.block_offsets.push_back(static_cast<std::size_t>(at));
    v.matrix.middleCols(at, b.columns()) = b.entries();
    for (Eigen::Index l = 0; l < b.columns(); ++l) {
      v.block_of_column.push_back(j);
      v.local_of_column.push_back(static_cast<std::size_t>(l));
    }
    at += b.columns();
  }
  return v;
}

}  // namespace distmfa
