#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numeric>
#include <vector>

namespace testsupport {

struct EigenPair {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // columns aligned with values
};

// Brute-force cyclic Jacobi diagonalization, deliberately independent of the
// solver used by the library.
inline EigenPair jacobi_eigen_sym(Eigen::MatrixXd a) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  const double scale = std::max(1.0, a.norm());
  for (int sweep = 0; sweep < 200; ++sweep) {
    double off = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (std::sqrt(off) <= 1e-15 * scale) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t =
            (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](Eigen::Index x, Eigen::Index y) { return a(x, x) > a(y, y); });
  EigenPair out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    out.values[r] = a(idx[static_cast<std::size_t>(r)], idx[static_cast<std::size_t>(r)]);
    out.vectors.col(r) = v.col(idx[static_cast<std::size_t>(r)]);
  }
  return out;
}

// Generalized spectrum of (m, row metric w, column metric a) via the plain
// eigenproblem of the scaled cross-product; mirrors nothing of the library
// path except the orientation rule applied afterwards.
inline EigenPair cross_product_axes(const Eigen::MatrixXd& m, const Eigen::VectorXd& w,
                                    const Eigen::VectorXd& a) {
  const Eigen::MatrixXd scaled =
      w.cwiseSqrt().asDiagonal() * m * a.cwiseSqrt().asDiagonal();
  EigenPair pair = jacobi_eigen_sym(scaled.transpose() * scaled);
  pair.vectors = a.cwiseSqrt().cwiseInverse().asDiagonal() * pair.vectors;
  for (Eigen::Index c = 0; c < pair.vectors.cols(); ++c) {
    Eigen::Index best = 0;
    double mag = -1.0;
    for (Eigen::Index k = 0; k < pair.vectors.rows(); ++k) {
      if (std::abs(pair.vectors(k, c)) > mag) {
        mag = std::abs(pair.vectors(k, c));
        best = k;
      }
    }
    if (pair.vectors(best, c) < 0.0) pair.vectors.col(c) = -pair.vectors.col(c);
  }
  return pair;
}

}  // namespace testsupport
