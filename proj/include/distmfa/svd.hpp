#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "distmfa/histogram.hpp"

namespace distmfa {

/// Result of a generalized SVD m = u diag(lambda) v^T with u orthonormal under
/// the row metric and v orthonormal under the column metric. `spectrum` holds
/// every singular value (descending); `singular_values`, `u` and `v` keep only
/// the axes whose squared value exceeds 1e-12 of the leading one.
struct EigenSystem {
  Eigen::VectorXd spectrum;
  Eigen::VectorXd singular_values;
  Eigen::MatrixXd u;
  Eigen::MatrixXd v;
  Eigen::Index rank() const { return singular_values.size(); }
};

namespace detail {

// Canonical orientation: the largest-|loading| row of each v column is made
// positive (first such row on ties). Keeps reruns and rebuilds bit-identical.
inline void orient_axes(Eigen::MatrixXd& u, Eigen::MatrixXd& v) {
  for (Eigen::Index a = 0; a < v.cols(); ++a) {
    Eigen::Index best = 0;
    double mag = -1.0;
    for (Eigen::Index k = 0; k < v.rows(); ++k) {
      if (std::abs(v(k, a)) > mag) {
        mag = std::abs(v(k, a));
        best = k;
      }
    }
    if (v(best, a) < 0.0) {
      v.col(a) = -v.col(a);
      u.col(a) = -u.col(a);
    }
  }
}

// Ties between equal singular values are broken by the lexicographically
// larger oriented loading column, so axis order never depends on solver
// internals.
inline std::vector<Eigen::Index> tie_stable_order(const Eigen::VectorXd& s,
                                                  const Eigen::MatrixXd& v) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(s.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (s[a] != s[b]) return s[a] > s[b];
    for (Eigen::Index k = 0; k < v.rows(); ++k) {
      if (v(k, a) != v(k, b)) return v(k, a) > v(k, b);
    }
    return a < b;
  });
  return idx;
}

}  // namespace detail

/// SVD of the triplet (m, row_metric, col_metric), computed through the plain
/// SVD of diag(sqrt(w)) m diag(sqrt(a)).
inline EigenSystem weighted_svd(const Eigen::MatrixXd& m,
                                const Eigen::VectorXd& row_metric,
                                const Eigen::VectorXd& col_metric) {
  detail::require(m.rows() >= 1 && m.cols() >= 1, "weighted_svd: empty matrix");
  detail::require(m.allFinite(), "weighted_svd: non-finite entries");
  detail::require(row_metric.size() == m.rows(), "weighted_svd: row metric size mismatch");
  detail::require(col_metric.size() == m.cols(), "weighted_svd: column metric size mismatch");
  for (Eigen::Index i = 0; i < row_metric.size(); ++i)
    detail::require(std::isfinite(row_metric[i]) && row_metric[i] > 0.0,
                    "weighted_svd: row metric must be positive");
  for (Eigen::Index k = 0; k < col_metric.size(); ++k)
    detail::require(std::isfinite(col_metric[k]) && col_metric[k] > 0.0,
                    "weighted_svd: column metric must be positive");

  const Eigen::VectorXd sw = row_metric.cwiseSqrt();
  const Eigen::VectorXd sa = col_metric.cwiseSqrt();
  Eigen::MatrixXd scaled = sw.asDiagonal() * m * sa.asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(scaled,
                                        Eigen::ComputeThinU | Eigen::ComputeThinV);

  Eigen::MatrixXd u = sw.cwiseInverse().asDiagonal() * svd.matrixU();
  Eigen::MatrixXd v = sa.cwiseInverse().asDiagonal() * svd.matrixV();
  Eigen::VectorXd s = svd.singularValues();
  detail::orient_axes(u, v);
  std::vector<Eigen::Index> order = detail::tie_stable_order(s, v);

  const double lead = s.size() > 0 ? s[order[0]] : 0.0;
  Eigen::Index kept = 0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    const double val = s[order[r]];
    if (lead > 0.0 && val * val > 1e-12 * lead * lead) ++kept;
  }

  EigenSystem out;
  out.spectrum.resize(s.size());
  for (std::size_t r = 0; r < order.size(); ++r)
    out.spectrum[static_cast<Eigen::Index>(r)] = s[order[r]];
  out.singular_values.resize(kept);
  out.u.resize(m.rows(), kept);
  out.v.resize(m.cols(), kept);
  for (Eigen::Index r = 0; r < kept; ++r) {
    out.singular_values[r] = s[order[static_cast<std::size_t>(r)]];
    out.u.col(r) = u.col(order[static_cast<std::size_t>(r)]);
    out.v.col(r) = v.col(order[static_cast<std::size_t>(r)]);
  }
  return out;
}

}  // namespace distmfa
