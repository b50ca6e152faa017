#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "distmfa/quantile_table.hpp"
#include "distmfa/svd.hpp"

namespace distmfa {

/// One block's own principal axes, used to normalize it before the global
/// analysis. `block_weight` is the inverse of the first eigenvalue, so every
/// block enters the global step with a leading eigenvalue of one.
struct PartialPca {
  std::string block_id;
  std::vector<Eigen::Index> active_columns;
  EigenSystem system;
  Eigen::MatrixXd factor_scores;
  double first_eigenvalue = 0.0;
  double block_weight = 0.0;
};

namespace detail {

inline double table_scale(const QuantileTable& t) {
  return std::max(1.0, t.column_means().cwiseAbs().maxCoeff());
}

// PCA of the block restricted to its positively weighted columns; nullopt when
// the block carries no variance worth normalizing by.
inline std::optional<PartialPca> block_pca(const QuantileTable& t, const UnitWeights& w,
                                           const std::vector<double>& col_weights) {
  std::vector<Eigen::Index> active;
  for (std::size_t l = 0; l < col_weights.size(); ++l) {
    require(std::isfinite(col_weights[l]) && col_weights[l] >= 0.0,
            "block_pca: column weights must be non-negative");
    if (col_weights[l] > 0.0) active.push_back(static_cast<Eigen::Index>(l));
  }
  if (active.empty()) return std::nullopt;

  Eigen::MatrixXd q(t.units(), static_cast<Eigen::Index>(active.size()));
  Eigen::VectorXd metric(static_cast<Eigen::Index>(active.size()));
  for (std::size_t c = 0; c < active.size(); ++c) {
    q.col(static_cast<Eigen::Index>(c)) = t.entries().col(active[c]);
    metric[static_cast<Eigen::Index>(c)] = col_weights[static_cast<std::size_t>(active[c])];
  }
  EigenSystem sys = weighted_svd(q, w.vector(), metric);
  if (sys.rank() == 0 || sys.singular_values[0] <= 1e-12 * table_scale(t))
    return std::nullopt;

  PartialPca p;
  p.block_id = t.variable_id();
  p.active_columns = std::move(active);
  p.factor_scores = sys.u * sys.singular_values.asDiagonal();
  p.first_eigenvalue = sys.singular_values[0] * sys.singular_values[0];
  p.block_weight = 1.0 / p.first_eigenvalue;
  p.system = std::move(sys);
  return p;
}

struct WeightedCorr {
  double value = 0.0;
  bool degenerate = false;
};

inline WeightedCorr weighted_corr(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& w) {
  const double mx = w.dot(x), my = w.dot(y);
  const Eigen::VectorXd cx = x.array() - mx;
  const Eigen::VectorXd cy = y.array() - my;
  const double vx = w.dot(cx.cwiseProduct(cx));
  const double vy = w.dot(cy.cwiseProduct(cy));
  const double tx = 1e-12 * std::max(1.0, std::abs(mx));
  const double ty = 1e-12 * std::max(1.0, std::abs(my));
  WeightedCorr out;
  if (vx <= tx * tx || vy <= ty * ty) {
    out.degenerate = true;
    return out;
  }
  out.value = std::clamp(w.dot(cx.cwiseProduct(cy)) / std::sqrt(vx * vy), -1.0, 1.0);
  return out;
}

}  // namespace detail

/// Block analysis with every column active under the identity column metric.
inline PartialPca partial_pca(const QuantileTable& t, const UnitWeights& w) {
  detail::require(t.centered(), "partial_pca: table must be centered");
  detail::require(w.size() == t.units(), "partial_pca: weight size mismatch");
  std::vector<double> ones(static_cast<std::size_t>(t.columns()), 1.0);
  std::optional<PartialPca> p = detail::block_pca(t, w, ones);
  if (!p) throw std::invalid_argument("partial_pca: degenerate block " + t.variable_id());
  return std::move(*p);
}

/// Per-axis contribution shares. `unit_cr` rows are units; each axis column
/// sums to one over units, and the column versions sum to one over all active
/// columns. `unit_ca`/`column_ca` are squared cosines: shares of each row's
/// inertia carried by the axis, summing to one across retained axes.
struct Contributions {
  Eigen::MatrixXd unit_cr;
  Eigen::MatrixXd unit_ca;
  std::vector<Eigen::MatrixXd> column_cr;
  std::vector<Eigen::MatrixXd> column_ca;
};

/// Everything the global analysis produces. Axes are indexed 0-based here;
/// reports print them 1-based.
struct MfaModel {
  std::vector<std::string> block_ids;
  std::vector<QuantileTable> blocks;
  std::vector<std::vector<double>> column_base_weights;
  Eigen::VectorXd unit_weights;

  std::vector<std::size_t> active_blocks;
  std::vector<int> active_slot_of_block;
  std::vector<std::string> degenerate_block_ids;
  std::vector<PartialPca> partials;
  std::vector<double> block_weights;

  EigenSystem global;
  Eigen::VectorXd eigenvalues;
  Eigen::VectorXd percent_inertia;
  Eigen::VectorXd cumulative_percent;
  double total_inertia = 0.0;
  std::vector<std::size_t> col_block;
  std::vector<Eigen::Index> col_local;

  Eigen::MatrixXd individual_coords;
  std::vector<Eigen::MatrixXd> partial_coords;
  std::vector<Eigen::MatrixXd> variable_scores;
  std::optional<Eigen::MatrixXd> compromise_scores;
  Contributions contributions;
  std::vector<Eigen::MatrixXd> column_axis_corr;
  std::vector<Eigen::MatrixXd> partial_axis_corr;
  Eigen::MatrixXd rv;

  Eigen::Index axis_count() const { return eigenvalues.size(); }
  Eigen::Index units() const { return individual_coords.rows(); }
};

/// Similarity of two centered blocks: trace of the crossed covariances over
/// the geometric mean of their own. 1 means identical unit geometry.
inline double rv_coefficient(const QuantileTable& a, const QuantileTable& b,
                             const UnitWeights& w) {
  detail::require(a.centered() && b.centered(), "rv_coefficient: tables must be centered");
  detail::require(a.units() == b.units() && w.size() == a.units(),
                  "rv_coefficient: unit rows must match");
  const Eigen::MatrixXd wa = w.vector().asDiagonal() * a.entries();
  const double n11 = (a.entries().transpose() * wa).squaredNorm();
  const double n22 =
      (b.entries().transpose() * (w.vector().asDiagonal() * b.entries())).squaredNorm();
  detail::require(n11 > 0.0 && n22 > 0.0, "rv_coefficient: degenerate block");
  const double n12 = (b.entries().transpose() * wa).squaredNorm();
  return n12 / std::sqrt(n11 * n22);
}

/// Two-step analysis: normalize each block by its first eigenvalue, then run
/// one weighted SVD on the side-by-side active columns. Degenerate blocks are
/// set aside (listed in `degenerate_block_ids`) rather than poisoning the
/// metric; at least one live block is required.
inline MfaModel global_mfa(const BlockSet& set, const UnitWeights& w) {
  const Eigen::Index n = set.units();
  detail::require(w.size() == n, "global_mfa: weight size mismatch");
  for (const QuantileTable& b : set.blocks())
    detail::require(b.centered(), "global_mfa: blocks must be centered");

  MfaModel model;
  model.unit_weights = w.vector();
  for (std::size_t j = 0; j < set.block_count(); ++j) {
    model.block_ids.push_back(set.block(j).variable_id());
    model.blocks.push_back(set.block(j));
    model.column_base_weights.push_back(set.column_weights(j));
  }

  model.active_slot_of_block.assign(set.block_count(), -1);
  model.block_weights.assign(set.block_count(),
                             std::numeric_limits<double>::quiet_NaN());
  for (std::size_t j = 0; j < set.block_count(); ++j) {
    std::optional<PartialPca> p =
        detail::block_pca(set.block(j), UnitWeights(w.vector()), set.column_weights(j));
    if (!p) {
      model.degenerate_block_ids.push_back(set.block(j).variable_id());
      continue;
    }
    model.active_slot_of_block[j] = static_cast<int>(model.active_blocks.size());
    model.active_blocks.push_back(j);
    model.block_weights[j] = p->block_weight;
    model.partials.push_back(std::move(*p));
  }
  detail::require(!model.active_blocks.empty(), "global_mfa: all blocks degenerate");

  // side-by-side active columns under the metric a_j * base weight
  Eigen::Index total = 0;
  for (const PartialPca& p : model.partials)
    total += static_cast<Eigen::Index>(p.active_columns.size());
  Eigen::MatrixXd q(n, total);
  Eigen::VectorXd metric(total);
  std::vector<Eigen::Index> block_offset(model.partials.size());
  Eigen::Index at = 0;
  for (std::size_t jj = 0; jj < model.partials.size(); ++jj) {
    const PartialPca& p = model.partials[jj];
    const std::size_t j = model.active_blocks[jj];
    const QuantileTable& t = model.blocks[j];
    block_offset[jj] = at;
    for (Eigen::Index l : p.active_columns) {
      q.col(at) = t.entries().col(l);
      metric[at] = p.block_weight *
                   model.column_base_weights[j][static_cast<std::size_t>(l)];
      model.col_block.push_back(j);
      model.col_local.push_back(l);
      ++at;
    }
  }

  model.global = weighted_svd(q, w.vector(), metric);
  const Eigen::Index axes = model.global.rank();
  model.eigenvalues = model.global.singular_values.array().square();
  model.total_inertia = model.global.spectrum.squaredNorm();
  model.percent_inertia = 100.0 * model.eigenvalues / model.total_inertia;
  model.cumulative_percent.resize(axes);
  double cum = 0.0;
  for (Eigen::Index a = 0; a < axes; ++a) {
    cum += model.percent_inertia[a];
    model.cumulative_percent[a] = cum;
  }

  model.individual_coords = model.global.u * model.global.singular_values.asDiagonal();

  const double p_count = static_cast<double>(model.partials.size());
  for (std::size_t jj = 0; jj < model.partials.size(); ++jj) {
    const PartialPca& p = model.partials[jj];
    const std::size_t j = model.active_blocks[jj];
    const QuantileTable& t = model.blocks[j];
    const Eigen::Index cols = static_cast<Eigen::Index>(p.active_columns.size());
    Eigen::MatrixXd qa(n, cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
      const Eigen::Index l = p.active_columns[static_cast<std::size_t>(c)];
      qa.col(c) = t.entries().col(l) * metric[block_offset[jj] + c];
    }
    model.partial_coords.push_back(
        p_count * qa * model.global.v.middleRows(block_offset[jj], cols));
  }

  // column coordinates over every column, supplementary ones projected after
  // the fact: g = Q^T W u per axis
  const Eigen::MatrixXd wu = w.vector().asDiagonal() * model.global.u;
  std::vector<Eigen::MatrixXd> g(set.block_count());
  for (std::size_t j = 0; j < set.block_count(); ++j) {
    g[j] = model.blocks[j].entries().transpose() * wu;
    if (model.active_slot_of_block[j] >= 0) {
      model.variable_scores.push_back(model.block_weights[j] * g[j]);
    } else {
      model.variable_scores.emplace_back();
    }
  }

  bool same_cols = true;
  for (std::size_t jj = 1; jj < model.active_blocks.size(); ++jj) {
    if (model.blocks[model.active_blocks[jj]].columns() !=
        model.blocks[model.active_blocks[0]].columns())
      same_cols = false;
  }
  if (same_cols) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(
        model.blocks[model.active_blocks[0]].columns(), axes);
    for (std::size_t j : model.active_blocks) acc += model.variable_scores[j];
    model.compromise_scores = acc / p_count;
  }

  // contribution shares
  const Eigen::ArrayXXd f2 = model.individual_coords.array().square();
  model.contributions.unit_cr.resize(n, axes);
  model.contributions.unit_ca.resize(n, axes);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double row = f2.row(i).sum();
    for (Eigen::Index a = 0; a < axes; ++a) {
      model.contributions.unit_cr(i, a) = w.vector()[i] * f2(i, a) / model.eigenvalues[a];
      model.contributions.unit_ca(i, a) = row > 0.0 ? f2(i, a) / row : 0.0;
    }
  }
  for (std::size_t j = 0; j < set.block_count(); ++j) {
    const Eigen::Index cols = model.blocks[j].columns();
    Eigen::MatrixXd cr = Eigen::MatrixXd::Zero(cols, axes);
    Eigen::MatrixXd ca = Eigen::MatrixXd::Zero(cols, axes);
    const bool live = model.active_slot_of_block[j] >= 0;
    for (Eigen::Index l = 0; l < cols; ++l) {
      const double g_row = g[j].row(l).squaredNorm();
      for (Eigen::Index a = 0; a < axes; ++a) {
        if (live) {
          const double aw = model.block_weights[j] *
                            model.column_base_weights[j][static_cast<std::size_t>(l)];
          cr(l, a) = aw * g[j](l, a) * g[j](l, a) / model.eigenvalues[a];
        }
        ca(l, a) = g_row > 0.0 ? g[j](l, a) * g[j](l, a) / g_row : 0.0;
      }
    }
    model.contributions.column_cr.push_back(std::move(cr));
    model.contributions.column_ca.push_back(std::move(ca));
  }

  // correlation of each column with each axis; flat columns marked NaN
  for (std::size_t j = 0; j < set.block_count(); ++j) {
    const QuantileTable& t = model.blocks[j];
    Eigen::MatrixXd corr(t.columns(), axes);
    for (Eigen::Index l = 0; l < t.columns(); ++l) {
      const double var = t.entries().col(l).cwiseProduct(t.entries().col(l)).dot(w.vector());
      const double tol = 1e-12 * detail::table_scale(t);
      for (Eigen::Index a = 0; a < axes; ++a) {
        corr(l, a) = var > tol * tol
                         ? std::clamp(g[j](l, a) / std::sqrt(var), -1.0, 1.0)
                         : std::numeric_limits<double>::quiet_NaN();
      }
    }
    model.column_axis_corr.push_back(std::move(corr));
  }

  for (const PartialPca& p : model.partials) {
    const Eigen::Index dims = std::min<Eigen::Index>(3, p.system.rank());
    Eigen::MatrixXd corr(dims, axes);
    const Eigen::MatrixXd cov =
        p.factor_scores.leftCols(dims).transpose() * w.vector().asDiagonal() *
        model.individual_coords;
    for (Eigen::Index d = 0; d < dims; ++d) {
      for (Eigen::Index a = 0; a < axes; ++a) {
        corr(d, a) = std::clamp(cov(d, a) / (p.system.singular_values[d] *
                                             model.global.singular_values[a]),
                                -1.0, 1.0);
      }
    }
    model.partial_axis_corr.push_back(std::move(corr));
  }

  const std::size_t p = set.block_count();
  model.rv = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(p),
                                       static_cast<Eigen::Index>(p),
                                       std::numeric_limits<double>::quiet_NaN());
  for (std::size_t j1 = 0; j1 < p; ++j1) {
    if (model.active_slot_of_block[j1] < 0) continue;
    for (std::size_t j2 = 0; j2 < p; ++j2) {
      if (model.active_slot_of_block[j2] < 0) continue;
      model.rv(static_cast<Eigen::Index>(j1), static_cast<Eigen::Index>(j2)) =
          rv_coefficient(model.blocks[j1], model.blocks[j2],
                         UnitWeights(w.vector()));
    }
  }
  return model;
}

inline Eigen::VectorXd individual_coordinates(const MfaModel& m, Eigen::Index axis) {
  detail::require(axis >= 0 && axis < m.axis_count(), "individual_coordinates: bad axis");
  return m.individual_coords.col(axis);
}

inline Eigen::VectorXd partial_individual_coordinates(const MfaModel& m,
                                                      std::size_t block,
                                                      Eigen::Index axis) {
  detail::require(block < m.block_ids.size(), "partial_individual_coordinates: bad block");
  detail::require(axis >= 0 && axis < m.axis_count(), "partial_individual_coordinates: bad axis");
  const int slot = m.active_slot_of_block[block];
  detail::require(slot >= 0, "partial_individual_coordinates: degenerate block " +
                                 m.block_ids[block]);
  return m.partial_coords[static_cast<std::size_t>(slot)].col(axis);
}

inline Eigen::VectorXd variable_scores(const MfaModel& m, std::size_t block,
                                       Eigen::Index axis) {
  detail::require(block < m.block_ids.size(), "variable_scores: bad block");
  detail::require(axis >= 0 && axis < m.axis_count(), "variable_scores: bad axis");
  detail::require(m.active_slot_of_block[block] >= 0,
                  "variable_scores: degenerate block " + m.block_ids[block]);
  return m.variable_scores[block].col(axis);
}

inline Eigen::VectorXd compromise_scores(const MfaModel& m, Eigen::Index axis) {
  detail::require(m.compromise_scores.has_value(),
                  "compromise_scores: blocks do not share a quantile grid");
  detail::require(axis >= 0 && axis < m.axis_count(), "compromise_scores: bad axis");
  return m.compromise_scores->col(axis);
}

/// How each axis lines up with the classic per-unit moments, globally and
/// against each block's own leading axes. Degenerate rows mark constant
/// moment series (correlation meaningless).
struct MomentAxisRow {
  std::string variable;
  std::string moment;
  std::string scope;
  std::string partial_variable;
  Eigen::Index axis = 0;
  double correlation = 0.0;
  bool degenerate = false;
};

inline std::vector<MomentAxisRow> moment_axis_diagnostics(
    const MfaModel& model, const std::vector<std::vector<DistributionSummary>>& summaries) {
  const Eigen::Index n = model.units();
  detail::require(static_cast<Eigen::Index>(summaries.size()) == n,
                  "moment_axis_diagnostics: need one summary row per unit");
  for (const auto& row : summaries)
    detail::require(row.size() == model.block_ids.size(),
                    "moment_axis_diagnostics: need one summary per block");

  const char* names[4] = {"mean", "std", "skewness", "kurtosis"};
  std::vector<MomentAxisRow> out;
  for (std::size_t j = 0; j < model.block_ids.size(); ++j) {
    for (int mo = 0; mo < 4; ++mo) {
      Eigen::VectorXd x(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const DistributionSummary& s = summaries[static_cast<std::size_t>(i)][j];
        x[i] = mo == 0 ? s.mean : mo == 1 ? s.stddev : mo == 2 ? s.skewness : s.kurtosis;
      }
      for (Eigen::Index a = 0; a < model.axis_count(); ++a) {
        detail::WeightedCorr c = detail::weighted_corr(
            x, model.individual_coords.col(a), model.unit_weights);
        out.push_back({model.block_ids[j], names[mo], "global", "", a, c.value,
                       c.degenerate});
      }
      const int slot = model.active_slot_of_block[j];
      if (slot < 0) continue;
      const PartialPca& p = model.partials[static_cast<std::size_t>(slot)];
      const Eigen::Index dims = std::min<Eigen::Index>(3, p.system.rank());
      for (Eigen::Index d = 0; d < dims; ++d) {
        detail::WeightedCorr c = detail::weighted_corr(
            x, p.factor_scores.col(d), model.unit_weights);
        out.push_back({model.block_ids[j], names[mo], "partial", model.block_ids[j],
                       d, c.value, c.degenerate});
      }
    }
  }
  return out;
}

}  // namespace distmfa
