#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "distmfa/histogram.hpp"
#include "distmfa/quantile_table.hpp"

namespace distmfa {

/// Complete grid of distribution-valued observations: one histogram per unit
/// per variable, cells indexed [unit][variable].
struct DistributionalTable {
  std::vector<std::string> unit_ids;
  std::vector<std::string> variable_ids;
  std::vector<std::vector<Histogram>> cells;
};

inline void validate_table(const DistributionalTable& t) {
  detail::require(!t.unit_ids.empty(), "table: needs at least one unit");
  detail::require(!t.variable_ids.empty(), "table: needs at least one variable");
  detail::require(t.cells.size() == t.unit_ids.size(),
                  "table: one cell row per unit required");
  for (std::size_t i = 0; i < t.cells.size(); ++i) {
    detail::require(t.cells[i].size() == t.variable_ids.size(),
                    "table: unit '" + t.unit_ids[i] + "' has an incomplete cell row");
  }
  for (std::size_t i = 0; i < t.unit_ids.size(); ++i) {
    detail::require(!t.unit_ids[i].empty(), "table: empty unit id");
    for (std::size_t k = i + 1; k < t.unit_ids.size(); ++k)
      detail::require(t.unit_ids[i] != t.unit_ids[k],
                      "table: duplicate unit id '" + t.unit_ids[i] + "'");
  }
  for (std::size_t j = 0; j < t.variable_ids.size(); ++j) {
    detail::require(!t.variable_ids[j].empty(), "table: empty variable id");
    for (std::size_t k = j + 1; k < t.variable_ids.size(); ++k)
      detail::require(t.variable_ids[j] != t.variable_ids[k],
                      "table: duplicate variable id '" + t.variable_ids[j] + "'");
  }
}

inline std::size_t unit_index(const DistributionalTable& t, const std::string& id) {
  for (std::size_t i = 0; i < t.unit_ids.size(); ++i)
    if (t.unit_ids[i] == id) return i;
  throw std::invalid_argument("unknown unit '" + id + "'");
}

inline std::size_t variable_index(const DistributionalTable& t, const std::string& id) {
  for (std::size_t j = 0; j < t.variable_ids.size(); ++j)
    if (t.variable_ids[j] == id) return j;
  throw std::invalid_argument("unknown variable '" + id + "'");
}

/// Grid resolution and column policy for turning a table into blocks.
struct AnalysisOptions {
  int default_bins = 20;
  std::map<std::string, int> bins_by_variable;
  ExtremesPolicy extremes = ExtremesPolicy::active();

  int bins_for(const std::string& variable) const {
    auto it = bins_by_variable.find(variable);
    const int k = it == bins_by_variable.end() ? default_bins : it->second;
    detail::require(k >= 1, "analysis options: bin count must be >= 1");
    return k;
  }
};

/// Table rewritten on per-variable quantile grids, ready for the factor
/// analysis: centered blocks plus the homogenized cells and their moments.
struct PreparedAnalysis {
  std::vector<std::vector<EquiDepthHistogram>> homogenized;  // [variable][unit]
  std::vector<std::vector<DistributionSummary>> summaries;   // [unit][variable]
  BlockSet blocks;
};

inline PreparedAnalysis prepare_analysis(const DistributionalTable& t,
                                         const AnalysisOptions& options) {
  validate_table(t);
  std::vector<std::vector<EquiDepthHistogram>> homog;
  std::vector<QuantileTable> tables;
  for (std::size_t j = 0; j < t.variable_ids.size(); ++j) {
    std::vector<Histogram> column;
    column.reserve(t.unit_ids.size());
    for (std::size_t i = 0; i < t.unit_ids.size(); ++i) column.push_back(t.cells[i][j]);
    std::vector<EquiDepthHistogram> eq =
        homogenize(column, options.bins_for(t.variable_ids[j]));
    tables.push_back(center_columns(build_quantile_table(t.variable_ids[j], eq)));
    homog.push_back(std::move(eq));
  }
  std::vector<std::vector<DistributionSummary>> summaries(t.unit_ids.size());
  for (std::size_t i = 0; i < t.unit_ids.size(); ++i) {
    summaries[i].reserve(t.variable_ids.size());
    for (std::size_t j = 0; j < t.variable_ids.size(); ++j)
      summaries[i].push_back(summarize(homog[j][i]));
  }
  return PreparedAnalysis{std::move(homog), std::move(summaries),
                          BlockSet(std::move(tables), options.extremes)};
}

}  // namespace distmfa
