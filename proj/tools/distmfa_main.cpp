#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <distmfa/dataset.hpp>
#include <distmfa/io.hpp>
#include <distmfa/mfa.hpp>
#include <distmfa/plots.hpp>
#include <distmfa/simulate.hpp>
#include <distmfa/wasserstein.hpp>

namespace {

std::string infer_format(const std::string& path, const std::string& override_fmt) {
  if (!override_fmt.empty()) return override_fmt;
  std::string ext = std::filesystem::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".csv") return "csv";
  if (ext == ".json") return "json";
  throw distmfa::validation_error("cannot infer the format of '" + path +
                                  "' from its extension, pass --format");
}

distmfa::AnalysisOptions make_options(int quantiles,
                                      const std::vector<std::string>& per_variable,
                                      const std::string& extremes) {
  distmfa::AnalysisOptions opt;
  opt.default_bins = quantiles;
  for (const std::string& entry : per_variable) {
    const std::size_t eq = entry.find('=');
    if (eq == std::string::npos || eq == 0)
      throw distmfa::validation_error("--quantiles-for expects VARIABLE=COUNT, got '" +
                                      entry + "'");
    int count = 0;
    try {
      std::size_t used = 0;
      count = std::stoi(entry.substr(eq + 1), &used);
      if (used != entry.size() - eq - 1) throw std::invalid_argument("trailing text");
    } catch (const std::exception&) {
      throw distmfa::validation_error("--quantiles-for expects an integer count in '" +
                                      entry + "'");
    }
    opt.bins_by_variable[entry.substr(0, eq)] = count;
  }
  if (extremes == "active") {
    opt.extremes = distmfa::ExtremesPolicy::active();
  } else if (extremes == "supplementary") {
    opt.extremes = distmfa::ExtremesPolicy::supplementary();
  } else if (extremes.rfind("weight:", 0) == 0) {
    double w = 0.0;
    try {
      std::size_t used = 0;
      w = std::stod(extremes.substr(7), &used);
      if (used != extremes.size() - 7) throw std::invalid_argument("trailing text");
    } catch (const std::exception&) {
      throw distmfa::validation_error("--extremes weight:W needs a number, got '" +
                                      extremes + "'");
    }
    if (!(w > 0.0 && w <= 1.0))
      throw distmfa::validation_error("--extremes weight must lie in (0, 1]");
    opt.extremes = distmfa::ExtremesPolicy::weighted(w);
  } else {
    throw distmfa::validation_error(
        "--extremes must be active, supplementary or weight:W");
  }
  return opt;
}

distmfa::DistributionalTable load_table(const std::string& path,
                                        const std::string& format,
                                        const distmfa::AnalysisOptions& opt) {
  const std::string text = distmfa::read_file(path);
  if (infer_format(path, format) == "csv")
    return distmfa::parse_microdata_csv(text, opt);
  return distmfa::parse_histogram_json(text);
}

std::string safe_name(const std::string& id) {
  std::string out = id;
  for (char& c : out) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '.' || c == '-' || c == '_';
    if (!ok) c = '_';
  }
  return out;
}

void note_written(const std::string& path) { std::cout << "wrote " << path << "\n"; }

struct IngestArgs {
  std::string input, output = "histograms.json", format;
  int quantiles = 20;
  std::vector<std::string> per_variable;
};

int run_ingest(const IngestArgs& a) {
  const distmfa::AnalysisOptions opt = make_options(a.quantiles, a.per_variable, "active");
  const distmfa::DistributionalTable table = load_table(a.input, a.format, opt);
  distmfa::write_file(a.output, distmfa::emit_histogram_json(table));
  note_written(a.output);
  return 0;
}

struct MfaArgs {
  std::string input, out_dir = "report", format;
  int quantiles = 20;
  std::vector<std::string> per_variable;
  std::string extremes = "active";
  std::vector<std::string> plots;
  std::vector<int> plane{1, 2};
  bool no_labels = false;
  bool no_shading = false;
};

int run_mfa(const MfaArgs& a) {
  const distmfa::AnalysisOptions opt =
      make_options(a.quantiles, a.per_variable, a.extremes);
  const distmfa::DistributionalTable table = load_table(a.input, a.format, opt);
  const distmfa::PreparedAnalysis prep = distmfa::prepare_analysis(table, opt);
  const distmfa::UnitWeights weights(static_cast<Eigen::Index>(table.unit_ids.size()));
  const distmfa::MfaModel model = distmfa::global_mfa(prep.blocks, weights);
  for (const std::string& id : model.degenerate_block_ids)
    std::cerr << "distmfa: variable '" << id
              << "' has no spread and was set aside as degenerate\n";
  const std::vector<distmfa::MomentAxisRow> diagnostics =
      distmfa::moment_axis_diagnostics(model, prep.summaries);

  for (const std::string& path :
       distmfa::emit_model_report(model, table.unit_ids, a.out_dir,
                                  distmfa::ReportFormat::csv))
    note_written(path);
  for (const std::string& path :
       distmfa::emit_model_report(model, table.unit_ids, a.out_dir,
                                  distmfa::ReportFormat::json, diagnostics))
    note_written(path);

  bool fan = false, circle = false, plane = false, scree = false;
  for (const std::string& kind : a.plots) {
    if (kind == "fan") fan = true;
    else if (kind == "circle") circle = true;
    else if (kind == "plane") plane = true;
    else if (kind == "scree") scree = true;
    else if (kind == "all") fan = circle = plane = scree = true;
    else
      throw distmfa::validation_error("--plots accepts fan, circle, plane, scree or all, got '" +
                                      kind + "'");
  }
  if (!(fan || circle || plane || scree)) return 0;

  if (a.plane.size() != 2)
    throw distmfa::validation_error("--plane expects two axis numbers, e.g. 1,2");
  if (a.plane[0] < 1 || a.plane[1] < 1)
    throw distmfa::validation_error("--plane axes are numbered from 1");
  distmfa::PlotOptions po;
  po.axis_a = a.plane[0] - 1;
  po.axis_b = a.plane[1] - 1;
  po.labels = !a.no_labels;
  po.mean_shading = !a.no_shading;
  const std::string suffix =
      "_" + std::to_string(a.plane[0]) + "_" + std::to_string(a.plane[1]) + ".svg";
  const std::filesystem::path dir(a.out_dir);

  auto emit_plot = [&](const std::string& name, const std::string& svg) {
    const std::string path = (dir / name).string();
    distmfa::write_file(path, svg);
    note_written(path);
  };
  if (fan) emit_plot("fan" + suffix, distmfa::render_fan_svg(model, po));
  if (circle) emit_plot("circle" + suffix, distmfa::render_circle_svg(model, po));
  if (plane) {
    for (const std::string& var : table.variable_ids)
      emit_plot("plane_" + safe_name(var) + suffix,
                distmfa::render_plane_svg(model, table, var, po));
    if (table.variable_ids.size() == 2)
      emit_plot("plane_mirrored" + suffix,
                distmfa::render_plane_mirrored_svg(model, table, table.variable_ids[0],
                                                   table.variable_ids[1], po));
  }
  if (scree) emit_plot("scree.svg", distmfa::render_scree_svg(model));
  return 0;
}

struct SimulateArgs {
  std::string output = "microdata.csv";
  std::uint64_t seed = 1;
  int units = 10;
  int draws = 1000;
};

int run_simulate(const SimulateArgs& a) {
  distmfa::SimulationConfig cfg;
  cfg.seed = a.seed;
  cfg.units = a.units;
  cfg.draws = a.draws;
  distmfa::write_file(a.output, distmfa::simulate_microdata(cfg));
  note_written(a.output);
  return 0;
}

struct DistanceArgs {
  std::string input, format, unit_a, unit_b, variable;
  int quantiles = 20;
};

int run_distance(const DistanceArgs& a) {
  distmfa::AnalysisOptions opt;
  opt.default_bins = a.quantiles;
  const distmfa::DistributionalTable table = load_table(a.input, a.format, opt);
  const std::size_t ia = distmfa::unit_index(table, a.unit_a);
  const std::size_t ib = distmfa::unit_index(table, a.unit_b);
  const std::size_t j = distmfa::variable_index(table, a.variable);
  const distmfa::QuantileFunction qa = distmfa::to_quantile_function(table.cells[ia][j]);
  const distmfa::QuantileFunction qb = distmfa::to_quantile_function(table.cells[ib][j]);
  const double sq = distmfa::wasserstein_sq_integral(qa, qb);
  const distmfa::DistanceDecomposition parts = distmfa::decompose_distance(qa, qb);
  std::cout << "squared_distance " << distmfa::format_double(sq) << "\n"
            << "distance " << distmfa::format_double(std::sqrt(sq)) << "\n"
            << "location " << distmfa::format_double(parts.location) << "\n"
            << "scale " << distmfa::format_double(parts.scale) << "\n"
            << "shape " << distmfa::format_double(parts.shape) << "\n"
            << "rho " << distmfa::format_double(parts.rho) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distribution-valued data tables: quantile encodings, global factor "
               "planes and distance decompositions"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "distmfa 0.1.0");
  app.set_config("--config", "", "read defaults from an INI file, flags win");
  app.fallthrough();

  IngestArgs ingest;
  CLI::App* c_ingest =
      app.add_subcommand("ingest", "normalize an input table into the canonical "
                                   "histogram document");
  c_ingest->add_option("input,--input", ingest.input,
                       "microdata csv or histogram json")
      ->required();
  c_ingest->add_option("-o,--out", ingest.output, "output path")
      ->capture_default_str();
  c_ingest->add_option("--format", ingest.format, "input format when the extension is ambiguous")
      ->check(CLI::IsMember({"csv", "json"}));
  c_ingest->add_option("--quantiles", ingest.quantiles, "bins per sampled histogram")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  c_ingest->add_option("--quantiles-for", ingest.per_variable,
                       "per-variable override, VARIABLE=COUNT");

  MfaArgs mfa;
  CLI::App* c_mfa = app.add_subcommand("mfa", "run the full analysis and write the "
                                              "report tables and plots");
  c_mfa->add_option("input,--input", mfa.input, "microdata csv or histogram json")
      ->required();
  c_mfa->add_option("-o,--out,--out-dir", mfa.out_dir, "report directory")
      ->capture_default_str();
  c_mfa->add_option("--format", mfa.format, "input format when the extension is ambiguous")
      ->check(CLI::IsMember({"csv", "json"}));
  c_mfa->add_option("--quantiles", mfa.quantiles, "quantile grid size per variable")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  c_mfa->add_option("--quantiles-for", mfa.per_variable,
                    "per-variable override, VARIABLE=COUNT");
  c_mfa->add_option("--extremes", mfa.extremes,
                    "role of the min/max columns: active, supplementary or weight:W")
      ->capture_default_str();
  c_mfa->add_option("--plots", mfa.plots, "fan, circle, plane, scree or all")
      ->delimiter(',');
  c_mfa->add_option("--plane", mfa.plane, "1-based axis pair for the plots")
      ->delimiter(',')
      ->expected(2)
      ->capture_default_str();
  c_mfa->add_flag("--no-labels", mfa.no_labels, "drop point labels from the plots");
  c_mfa->add_flag("--no-shading", mfa.no_shading,
                  "color plane glyphs by variable instead of by mean level");

  SimulateArgs sim;
  CLI::App* c_sim = app.add_subcommand("simulate", "write a two-variable benchmark "
                                                   "microdata file");
  c_sim->add_option("-o,--out", sim.output, "output path")->capture_default_str();
  c_sim->add_option("--seed", sim.seed, "generator seed")->capture_default_str();
  c_sim->add_option("--units", sim.units, "number of units")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  c_sim->add_option("--draws", sim.draws, "samples per unit and variable")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  DistanceArgs dist;
  CLI::App* c_dist = app.add_subcommand("distance", "squared distance between two "
                                                    "units on one variable, split into "
                                                    "location, scale and shape");
  c_dist->add_option("input,--input", dist.input, "microdata csv or histogram json")
      ->required();
  c_dist->add_option("--unit-a", dist.unit_a, "first unit id")->required();
  c_dist->add_option("--unit-b", dist.unit_b, "second unit id")->required();
  c_dist->add_option("--variable", dist.variable, "variable id")->required();
  c_dist->add_option("--format", dist.format, "input format when the extension is ambiguous")
      ->check(CLI::IsMember({"csv", "json"}));
  c_dist->add_option("--quantiles", dist.quantiles, "bins per sampled histogram")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (c_ingest->parsed()) return run_ingest(ingest);
    if (c_mfa->parsed()) return run_mfa(mfa);
    if (c_sim->parsed()) return run_simulate(sim);
    return run_distance(dist);
  } catch (const distmfa::parse_error& e) {
    std::cerr << "distmfa: " << e.what() << "\n";
    return 2;
  } catch (const distmfa::validation_error& e) {
    std::cerr << "distmfa: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "distmfa: " << e.what() << "\n";
    return 1;
  }
}
