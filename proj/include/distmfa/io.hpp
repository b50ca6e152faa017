#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "distmfa/dataset.hpp"
#include "distmfa/mfa.hpp"

namespace distmfa {

/// Malformed input text; `line` is 1-based when it applies.
class parse_error : public std::runtime_error {
 public:
  explicit parse_error(const std::string& msg, std::size_t line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg
                                    : msg),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Well-formed input that breaks a table rule; names the offending ids.
class validation_error : public std::runtime_error {
 public:
  explicit validation_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Shortest decimal string that parses back to the same double.
inline std::string format_double(double x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

inline double parse_strict_double(std::string_view field, std::size_t line) {
  const std::string_view s = trim(field);
  if (s.empty()) throw parse_error("empty numeric field", line);
  double out = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto res = std::from_chars(first, last, out);
  if (res.ec != std::errc() || res.ptr != last)
    throw parse_error("invalid number '" + std::string(s) + "'", line);
  if (!std::isfinite(out))
    throw parse_error("non-finite number '" + std::string(s) + "'", line);
  return out;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == '\n') {
      std::string_view line = text.substr(start, i - start);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      lines.push_back(line);
      start = i + 1;
    }
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

}  // namespace detail

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

/// Reads long-format microdata (columns unit, variable, value in any order)
/// and bins each (unit, variable) group on its own quantile grid. Every unit
/// must observe every variable.
inline DistributionalTable parse_microdata_csv(const std::string& text,
                                               const AnalysisOptions& options = {}) {
  const std::vector<std::string_view> lines = detail::split_lines(text);
  if (lines.empty()) throw parse_error("empty input");

  const std::vector<std::string_view> header = detail::split_csv_line(lines[0]);
  int unit_col = -1, var_col = -1, value_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string_view name = detail::trim(header[c]);
    if (name == "unit") unit_col = static_cast<int>(c);
    else if (name == "variable") var_col = static_cast<int>(c);
    else if (name == "value") value_col = static_cast<int>(c);
  }
  if (unit_col < 0 || var_col < 0 || value_col < 0)
    throw parse_error("header must name the unit, variable and value columns", 1);

  DistributionalTable table;
  std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) continue;
    const std::vector<std::string_view> fields = detail::split_csv_line(lines[ln]);
    if (fields.size() != header.size())
      throw parse_error("expected " + std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()),
                        ln + 1);
    const std::string unit(detail::trim(fields[static_cast<std::size_t>(unit_col)]));
    const std::string var(detail::trim(fields[static_cast<std::size_t>(var_col)]));
    if (unit.empty()) throw parse_error("empty unit id", ln + 1);
    if (var.empty()) throw parse_error("empty variable id", ln + 1);
    const double value =
        detail::parse_strict_double(fields[static_cast<std::size_t>(value_col)], ln + 1);
    if (std::find(table.unit_ids.begin(), table.unit_ids.end(), unit) ==
        table.unit_ids.end())
      table.unit_ids.push_back(unit);
    if (std::find(table.variable_ids.begin(), table.variable_ids.end(), var) ==
        table.variable_ids.end())
      table.variable_ids.push_back(var);
    groups[{unit, var}].push_back(value);
  }
  if (table.unit_ids.empty()) throw parse_error("no data rows");

  for (const std::string& unit : table.unit_ids) {
    std::vector<Histogram> row;
    for (const std::string& var : table.variable_ids) {
      auto it = groups.find({unit, var});
      if (it == groups.end())
        throw validation_error("unit '" + unit + "' has no rows for variable '" + var +
                               "'");
      row.push_back(
          to_histogram(histogram_from_samples(it->second, options.bins_for(var))));
    }
    table.cells.push_back(std::move(row));
  }
  validate_table(table);
  return table;
}

namespace detail {

inline const nlohmann::ordered_json& json_field(const nlohmann::ordered_json& obj,
                                                const char* key,
                                                const std::string& where) {
  if (!obj.contains(key))
    throw validation_error(where + ": missing '" + key + "'");
  return obj.at(key);
}

inline Histogram parse_cell(const nlohmann::ordered_json& cell, const std::string& where) {
  if (!cell.is_object()) throw validation_error(where + ": cell must be an object");
  const nlohmann::ordered_json& bounds = json_field(cell, "bounds", where);
  const nlohmann::ordered_json& weights = json_field(cell, "weights", where);
  if (!bounds.is_array() || bounds.size() < 2)
    throw validation_error(where + ": bounds must list at least two numbers");
  if (!weights.is_array() || weights.size() + 1 != bounds.size())
    throw validation_error(where + ": need one weight per bin");
  std::vector<double> b(bounds.size());
  for (std::size_t l = 0; l < bounds.size(); ++l) {
    if (!bounds[l].is_number())
      throw validation_error(where + ": bounds must be numbers");
    b[l] = bounds[l].get<double>();
    if (l > 0 && b[l] < b[l - 1])
      throw validation_error(where + ": bounds must be non-decreasing");
  }
  double sum = 0.0;
  std::vector<double> w(weights.size());
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (!weights[l].is_number())
      throw validation_error(where + ": weights must be numbers");
    w[l] = weights[l].get<double>();
    if (w[l] < 0.0) throw validation_error(where + ": weights must be non-negative");
    sum += w[l];
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw validation_error(where + ": weights must sum to 1");
  // renormalize only when the slack would fail the strict histogram check,
  // so emit/parse cycles keep their bytes
  if (std::abs(sum - 1.0) > 1e-12)
    for (double& x : w) x /= sum;
  std::vector<Bin> bins;
  for (std::size_t l = 0; l < w.size(); ++l)
    if (w[l] > 0.0) bins.push_back({b[l], b[l + 1], w[l]});
  if (bins.empty()) throw validation_error(where + ": all weights are zero");
  try {
    return Histogram(std::move(bins));
  } catch (const std::invalid_argument& e) {
    throw validation_error(where + ": " + e.what());
  }
}

}  // namespace detail

/// Reads the canonical histogram-table document: units with one cell per
/// variable, each cell a bounds/weights pair. The first unit fixes the
/// variable set; every other unit must match it exactly.
inline DistributionalTable parse_histogram_json(const std::string& text) {
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw parse_error(e.what());
  }
  if (!doc.is_object() || !doc.contains("units") || !doc["units"].is_array() ||
      doc["units"].empty())
    throw validation_error("document must hold a non-empty 'units' array");

  DistributionalTable table;
  for (const nlohmann::ordered_json& unit : doc["units"]) {
    if (!unit.is_object() || !unit.contains("id") || !unit["id"].is_string())
      throw validation_error("every unit needs a string 'id'");
    const std::string id = unit["id"].get<std::string>();
    const std::string where = "unit '" + id + "'";
    if (!unit.contains("cells") || !unit["cells"].is_object())
      throw validation_error(where + ": missing 'cells' object");
    const nlohmann::ordered_json& cells = unit["cells"];

    if (table.unit_ids.empty()) {
      for (auto it = cells.begin(); it != cells.end(); ++it)
        table.variable_ids.push_back(it.key());
      if (table.variable_ids.empty())
        throw validation_error(where + ": no variables");
    }
    std::vector<Histogram> row;
    for (const std::string& var : table.variable_ids) {
      if (!cells.contains(var))
        throw validation_error(where + ": missing variable '" + var + "'");
      row.push_back(detail::parse_cell(cells.at(var), where + " variable '" + var + "'"));
    }
    if (cells.size() != table.variable_ids.size()) {
      for (auto it = cells.begin(); it != cells.end(); ++it) {
        if (std::find(table.variable_ids.begin(), table.variable_ids.end(), it.key()) ==
            table.variable_ids.end())
          throw validation_error(where + ": unexpected variable '" + it.key() + "'");
      }
    }
    table.unit_ids.push_back(id);
    table.cells.push_back(std::move(row));
  }
  try {
    validate_table(table);
  } catch (const std::invalid_argument& e) {
    throw validation_error(e.what());
  }
  return table;
}

/// Canonical serialization of a table. The shared-bounds encoding bridges any
/// support gap with an explicit zero-weight bin, which the parser drops again.
inline std::string emit_histogram_json(const DistributionalTable& table) {
  validate_table(table);
  nlohmann::ordered_json units = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < table.unit_ids.size(); ++i) {
    nlohmann::ordered_json cells = nlohmann::ordered_json::object();
    for (std::size_t j = 0; j < table.variable_ids.size(); ++j) {
      const Histogram& h = table.cells[i][j];
      nlohmann::ordered_json bounds = nlohmann::ordered_json::array();
      nlohmann::ordered_json weights = nlohmann::ordered_json::array();
      bounds.push_back(h.bins().front().lo);
      for (std::size_t l = 0; l < h.size(); ++l) {
        const Bin& b = h.bins()[l];
        if (l > 0 && b.lo != h.bins()[l - 1].hi) {
          bounds.push_back(b.lo);
          weights.push_back(0.0);
        }
        bounds.push_back(b.hi);
        weights.push_back(b.weight);
      }
      cells[table.variable_ids[j]] = {{"bounds", std::move(bounds)},
                                      {"weights", std::move(weights)}};
    }
    units.push_back({{"id", table.unit_ids[i]}, {"cells", std::move(cells)}});
  }
  nlohmann::ordered_json doc{{"units", std::move(units)}};
  return doc.dump(2) + "\n";
}

enum class ReportFormat { csv, json };

namespace detail {

inline std::string axis_header(Eigen::Index axes) {
  std::string s;
  for (Eigen::Index a = 0; a < axes; ++a) s += ",axis_" + std::to_string(a + 1);
  return s;
}

inline std::string fixed2(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", x);
  return std::string(buf);
}

inline nlohmann::ordered_json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline nlohmann::ordered_json vector_json(const Eigen::VectorXd& v) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

}  // namespace detail

/// Eigenvalue table: full-precision eigenvalues, percents rounded to 2
/// decimals as conventional for inertia tables.
inline std::string render_eigenvalues_csv(const MfaModel& m) {
  std::string out = "component,eigenvalue,pct_variance,cum_pct_variance\n";
  for (Eigen::Index a = 0; a < m.axis_count(); ++a) {
    out += std::to_string(a + 1) + "," + format_double(m.eigenvalues[a]) + "," +
           detail::fixed2(m.percent_inertia[a]) + "," +
           detail::fixed2(m.cumulative_percent[a]) + "\n";
  }
  return out;
}

inline std::string render_variable_scores_csv(const MfaModel& m) {
  std::string out = "variable,column,role" + detail::axis_header(m.axis_count()) + "\n";
  auto emit_rows = [&](const std::string& id, const Eigen::MatrixXd& scores,
                       const std::vector<double>* base) {
    for (Eigen::Index l = 0; l < scores.rows(); ++l) {
      const char* role =
          base == nullptr ? "compromise"
          : (*base)[static_cast<std::size_t>(l)] > 0.0 ? "active" : "supplementary";
      out += id + ",q" + std::to_string(l) + "," + role;
      for (Eigen::Index a = 0; a < scores.cols(); ++a)
        out += "," + format_double(scores(l, a));
      out += "\n";
    }
  };
  for (std::size_t j = 0; j < m.block_ids.size(); ++j) {
    if (m.variable_scores[j].size() == 0) continue;
    emit_rows(m.block_ids[j], m.variable_scores[j], &m.column_base_weights[j]);
  }
  if (m.compromise_scores) emit_rows("compromise", *m.compromise_scores, nullptr);
  return out;
}

inline std::string render_individual_scores_csv(const MfaModel& m,
                                                const std::vector<std::string>& unit_ids) {
  detail::require(static_cast<Eigen::Index>(unit_ids.size()) == m.units(),
                  "render_individual_scores_csv: unit id count mismatch");
  std::string out = "unit,scope" + detail::axis_header(m.axis_count()) + "\n";
  for (Eigen::Index i = 0; i < m.units(); ++i) {
    out += unit_ids[static_cast<std::size_t>(i)] + ",global";
    for (Eigen::Index a = 0; a < m.axis_count(); ++a)
      out += "," + format_double(m.individual_coords(i, a));
    out += "\n";
  }
  for (std::size_t jj = 0; jj < m.active_blocks.size(); ++jj) {
    const std::string scope = "partial:" + m.block_ids[m.active_blocks[jj]];
    for (Eigen::Index i = 0; i < m.units(); ++i) {
      out += unit_ids[static_cast<std::size_t>(i)] + "," + scope;
      for (Eigen::Index a = 0; a < m.axis_count(); ++a)
        out += "," + format_double(m.partial_coords[jj](i, a));
      out += "\n";
    }
  }
  return out;
}

inline std::string render_contributions_csv(const MfaModel& m,
                                            const std::vector<std::string>& unit_ids) {
  detail::require(static_cast<Eigen::Index>(unit_ids.size()) == m.units(),
                  "render_contributions_csv: unit id count mismatch");
  std::string out = "entity,id,axis,contribution,cos2\n";
  for (Eigen::Index i = 0; i < m.units(); ++i) {
    for (Eigen::Index a = 0; a < m.axis_count(); ++a) {
      out += "unit," + unit_ids[static_cast<std::size_t>(i)] + "," +
             std::to_string(a + 1) + "," +
             format_double(m.contributions.unit_cr(i, a)) + "," +
             format_double(m.contributions.unit_ca(i, a)) + "\n";
    }
  }
  for (std::size_t j = 0; j < m.block_ids.size(); ++j) {
    const Eigen::MatrixXd& cr = m.contributions.column_cr[j];
    const Eigen::MatrixXd& ca = m.contributions.column_ca[j];
    for (Eigen::Index l = 0; l < cr.rows(); ++l) {
      for (Eigen::Index a = 0; a < m.axis_count(); ++a) {
        out += "column," + m.block_ids[j] + ":q" + std::to_string(l) + "," +
               std::to_string(a + 1) + "," + format_double(cr(l, a)) + "," +
               format_double(ca(l, a)) + "\n";
      }
    }
  }
  return out;
}

inline std::string render_rv_csv(const MfaModel& m) {
  std::string out = "variable";
  for (const std::string& id : m.block_ids) out += "," + id;
  out += "\n";
  for (std::size_t j1 = 0; j1 < m.block_ids.size(); ++j1) {
    out += m.block_ids[j1];
    for (std::size_t j2 = 0; j2 < m.block_ids.size(); ++j2)
      out += "," + format_double(m.rv(static_cast<Eigen::Index>(j1),
                                      static_cast<Eigen::Index>(j2)));
    out += "\n";
  }
  return out;
}

inline std::string render_model_json(const MfaModel& m,
                                     const std::vector<std::string>& unit_ids,
                                     const std::vector<MomentAxisRow>& diagnostics = {}) {
  detail::require(static_cast<Eigen::Index>(unit_ids.size()) == m.units(),
                  "render_model_json: unit id count mismatch");
  nlohmann::ordered_json doc;
  doc["units"] = unit_ids;
  doc["axes"] = {{"eigenvalues", detail::vector_json(m.eigenvalues)},
                 {"percent_inertia", detail::vector_json(m.percent_inertia)},
                 {"cumulative_percent", detail::vector_json(m.cumulative_percent)},
                 {"total_inertia", m.total_inertia}};
  nlohmann::ordered_json blocks = nlohmann::ordered_json::array();
  for (std::size_t j = 0; j < m.block_ids.size(); ++j) {
    const bool live = m.active_slot_of_block[j] >= 0;
    nlohmann::ordered_json b;
    b["id"] = m.block_ids[j];
    b["quantile_count"] = m.blocks[j].quantile_count();
    b["degenerate"] = !live;
    b["block_weight"] = m.block_weights[j];
    b["column_base_weights"] = m.column_base_weights[j];
    b["column_means"] = detail::vector_json(m.blocks[j].column_means());
    if (live) {
      const PartialPca& p =
          m.partials[static_cast<std::size_t>(m.active_slot_of_block[j])];
      b["first_eigenvalue"] = p.first_eigenvalue;
      b["partial_eigenvalues"] =
          detail::vector_json(p.system.singular_values.array().square().matrix());
    }
    blocks.push_back(std::move(b));
  }
  doc["blocks"] = std::move(blocks);
  doc["individual_coordinates"] = detail::matrix_json(m.individual_coords);
  nlohmann::ordered_json partial = nlohmann::ordered_json::object();
  for (std::size_t jj = 0; jj < m.active_blocks.size(); ++jj)
    partial[m.block_ids[m.active_blocks[jj]]] = detail::matrix_json(m.partial_coords[jj]);
  doc["partial_coordinates"] = std::move(partial);
  nlohmann::ordered_json scores = nlohmann::ordered_json::object();
  for (std::size_t j = 0; j < m.block_ids.size(); ++j)
    if (m.variable_scores[j].size() > 0)
      scores[m.block_ids[j]] = detail::matrix_json(m.variable_scores[j]);
  doc["variable_scores"] = std::move(scores);
  doc["compromise_scores"] =
      m.compromise_scores ? detail::matrix_json(*m.compromise_scores)
                          : nlohmann::ordered_json();
  doc["contributions"] = {{"unit_cr", detail::matrix_json(m.contributions.unit_cr)},
                          {"unit_ca", detail::matrix_json(m.contributions.unit_ca)}};
  nlohmann::ordered_json col_cr = nlohmann::ordered_json::object();
  nlohmann::ordered_json col_ca = nlohmann::ordered_json::object();
  for (std::size_t j = 0; j < m.block_ids.size(); ++j) {
    col_cr[m.block_ids[j]] = detail::matrix_json(m.contributions.column_cr[j]);
    col_ca[m.block_ids[j]] = detail::matrix_json(m.contributions.column_ca[j]);
  }
  doc["contributions"]["column_cr"] = std::move(col_cr);
  doc["contributions"]["column_ca"] = std::move(col_ca);
  nlohmann::ordered_json corr = nlohmann::ordered_json::object();
  for (std::size_t j = 0; j < m.block_ids.size(); ++j)
    corr[m.block_ids[j]] = detail::matrix_json(m.column_axis_corr[j]);
  doc["column_axis_correlations"] = std::move(corr);
  nlohmann::ordered_json pcorr = nlohmann::ordered_json::object();
  for (std::size_t jj = 0; jj < m.active_blocks.size(); ++jj)
    pcorr[m.block_ids[m.active_blocks[jj]]] =
        detail::matrix_json(m.partial_axis_corr[jj]);
  doc["partial_axis_correlations"] = std::move(pcorr);
  doc["rv"] = detail::matrix_json(m.rv);
  doc["degenerate_blocks"] = m.degenerate_block_ids;
  if (!diagnostics.empty()) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const MomentAxisRow& r : diagnostics) {
      rows.push_back({{"variable", r.variable},
                      {"moment", r.moment},
                      {"scope", r.scope},
                      {"axis", r.axis + 1},
                      {"correlation", r.correlation},
                      {"degenerate", r.degenerate}});
    }
    doc["moment_axis_correlations"] = std::move(rows);
  }
  return doc.dump(2) + "\n";
}

/// Writes the report files for one format into `out_dir` and returns their
/// paths: the five CSV tables, or model.json.
inline std::vector<std::string> emit_model_report(
    const MfaModel& m, const std::vector<std::string>& unit_ids,
    const std::string& out_dir, ReportFormat format,
    const std::vector<MomentAxisRow>& diagnostics = {}) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::vector<std::string> written;
  auto emit = [&](const char* name, const std::string& content) {
    const std::string path = (fs::path(out_dir) / name).string();
    write_file(path, content);
    written.push_back(path);
  };
  if (format == ReportFormat::csv) {
    emit("eigenvalues.csv", render_eigenvalues_csv(m));
    emit("variable_scores.csv", render_variable_scores_csv(m));
    emit("individual_scores.csv", render_individual_scores_csv(m, unit_ids));
    emit("contributions.csv", render_contributions_csv(m, unit_ids));
    emit("rv_matrix.csv", render_rv_csv(m));
  } else {
    emit("model.json", render_model_json(m, unit_ids, diagnostics));
  }
  return written;
}

}  // namespace distmfa
