// Acceptance gate: one line per criterion, nonzero exit when any fails.
// Criterion 8 needs an external histogram document named by the
// DISTMFA_BLOOD_JSON environment variable and is skipped without it.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <distmfa/dataset.hpp>
#include <distmfa/io.hpp>
#include <distmfa/mfa.hpp>
#include <distmfa/plots.hpp>
#include <distmfa/simulate.hpp>
#include <distmfa/wasserstein.hpp>

#include "oracle.hpp"
#include "support.hpp"

using namespace distmfa;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int n, bool ok, const std::string& detail) {
  std::printf("criterion %d %s: %s\n", n, ok ? "PASS" : "FAIL", detail.c_str());
  if (!ok) ++g_failures;
}

void skip(int n, const std::string& detail) {
  std::printf("criterion %d SKIP: %s\n", n, detail.c_str());
}

std::string num(double v) { return format_double(v); }

double max_abs(const Eigen::MatrixXd& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

QuantileTable random_centered_table(testsupport::Rng& rng, const std::string& id,
                                    int units, int bins) {
  std::vector<EquiDepthHistogram> hs;
  hs.reserve(static_cast<std::size_t>(units));
  for (int i = 0; i < units; ++i) hs.push_back(testsupport::random_equi_depth(rng, bins));
  return center_columns(build_quantile_table(id, hs));
}

QuantileFunction gaussian_qf(double mean, double sd, int knots) {
  std::vector<double> levels(static_cast<std::size_t>(knots) + 1);
  std::vector<double> values(static_cast<std::size_t>(knots) + 1);
  const double half = 0.5 / knots;
  for (int l = 0; l <= knots; ++l) {
    const double t = static_cast<double>(l) / knots;
    levels[static_cast<std::size_t>(l)] = t;
    values[static_cast<std::size_t>(l)] =
        mean + sd * normal_quantile(std::clamp(t, half, 1.0 - half));
  }
  return QuantileFunction(levels, values);
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> ranks(const std::vector<double>& x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos)
    r[order[pos]] = static_cast<double>(pos);
  return r;
}

void criterion_1() {
  testsupport::Rng rng(2001);
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int s = rng.uniform_int(2, 50);
    const EquiDepthHistogram a = testsupport::random_equi_depth(rng, s);
    const EquiDepthHistogram b = testsupport::random_equi_depth(rng, s);
    const double closed = wasserstein_sq_closed(a, b);
    const double integral =
        wasserstein_sq_integral(to_quantile_function(a), to_quantile_function(b));
    worst = std::max(worst, std::abs(closed - integral) / std::max(closed, 1e-300));
  }
  const double ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - start)
                        .count();
  report(1, worst <= 1e-10 && ms < 1000.0,
         "closed vs integral on 50 pairs, worst relative error " + num(worst) +
             ", " + num(ms) + " ms");
}

void criterion_2() {
  testsupport::Rng rng(2002);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const QuantileFunction f =
        to_quantile_function(testsupport::random_histogram(rng, rng.uniform_int(1, 8)));
    const QuantileFunction g =
        to_quantile_function(testsupport::random_histogram(rng, rng.uniform_int(1, 8)));
    const DistanceDecomposition d = decompose_distance(f, g);
    const double sq = wasserstein_sq_integral(f, g);
    worst = std::max(worst, std::abs(d.location + d.scale + d.shape - sq));
  }
  const QuantileFunction f = gaussian_qf(0.0, 1.0, 1000);
  const QuantileFunction g = gaussian_qf(2.0, 2.0, 1000);
  const DistanceDecomposition d = decompose_distance(f, g);
  const bool fixture_ok = d.location >= 3.9 && d.location <= 4.1 && d.scale >= 0.95 &&
                          d.scale <= 1.05 && d.shape <= 0.02;
  report(2, worst <= 1e-9 && fixture_ok,
         "identity residual " + num(worst) + "; gaussian fixture location " +
             num(d.location) + " scale " + num(d.scale) + " shape " + num(d.shape));
}

void criterion_3() {
  testsupport::Rng rng(2003);
  bool ok = true;
  double worst_drop = 0.0;
  for (int ds = 0; ds < 20 && ok; ++ds) {
    const int n = rng.uniform_int(3, 8);
    const int s = rng.uniform_int(2, 10);
    std::vector<EquiDepthHistogram> hs;
    for (int i = 0; i < n; ++i) hs.push_back(testsupport::random_equi_depth(rng, s));
    const EquiDepthHistogram bary = frechet_mean(hs);
    double base = 0.0;
    for (const EquiDepthHistogram& h : hs) base += wasserstein_sq_closed(h, bary);

    for (int tweak = 0; tweak < 100; ++tweak) {
      std::vector<double> bounds = bary.bounds();
      const double eps = rng.uniform(1e-4, 0.2);
      for (double& b : bounds) b += rng.uniform(-eps, eps);
      std::sort(bounds.begin(), bounds.end());
      const EquiDepthHistogram cand = EquiDepthHistogram::from_bounds(bounds);
      double total = 0.0;
      for (const EquiDepthHistogram& h : hs) total += wasserstein_sq_closed(h, cand);
      worst_drop = std::max(worst_drop, base - total);
      if (total < base - 1e-12) {
        ok = false;
        break;
      }
    }
  }
  report(3, ok,
         "2000 perturbations of 20 barycenters, best improvement " + num(worst_drop));
}

void criterion_4() {
  testsupport::Rng rng(2004);

  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = rng.uniform_int(3, 9);
    const int s = rng.uniform_int(2, 12);
    std::vector<EquiDepthHistogram> hs;
    for (int i = 0; i < n; ++i) hs.push_back(testsupport::random_equi_depth(rng, s));
    const QuantileTable t = center_columns(build_quantile_table("y", hs));
    const TraceGapReport r = trace_variance_gap(t, hs);
    worst = std::max(worst, std::abs(r.gap - r.gap_explicit));
  }

  const int n = 10;
  std::vector<std::vector<double>> samples(n);
  for (int i = 0; i < n; ++i) {
    const double mean = rng.uniform(-2.0, 2.0);
    const double sd = rng.uniform(0.5, 2.0);
    for (int k = 0; k < 3000; ++k)
      samples[static_cast<std::size_t>(i)].push_back(
          mean + sd * normal_quantile(std::clamp(rng.uniform(), 1e-12, 1.0 - 1e-12)));
  }
  std::vector<double> gaps;
  for (const int k : {10, 20, 40, 80}) {
    std::vector<EquiDepthHistogram> hs;
    for (int i = 0; i < n; ++i)
      hs.push_back(histogram_from_samples(samples[static_cast<std::size_t>(i)], k));
    const QuantileTable t = center_columns(build_quantile_table("y", hs));
    gaps.push_back(std::abs(trace_variance_gap(t, hs).gap));
  }
  int inversions = 0;
  bool small_inversions = true;
  for (std::size_t k = 1; k < gaps.size(); ++k) {
    if (gaps[k] > gaps[k - 1]) {
      ++inversions;
      small_inversions = small_inversions && gaps[k] <= 1.05 * gaps[k - 1];
    }
  }
  std::string trail;
  for (double gp : gaps) trail += (trail.empty() ? "" : " ") + num(gp);
  report(4, worst <= 1e-10 && inversions <= 1 && small_inversions,
         "identity residual " + num(worst) + "; gaps over refining grids " + trail);
}

void criterion_5() {
  testsupport::Rng rng(2005);
  double worst = 0.0;
  std::string fail;
  for (int trial = 0; trial < 10; ++trial) {
    const int n = rng.uniform_int(4, 9);
    std::vector<QuantileTable> blocks;
    const int nblocks = rng.uniform_int(2, 3);
    for (int j = 0; j < nblocks; ++j)
      blocks.push_back(random_centered_table(rng, "y" + std::to_string(j + 1), n,
                                             rng.uniform_int(3, 6)));
    const UnitWeights w(n);
    const MfaModel m = global_mfa(BlockSet(blocks), w);
    const Eigen::Index L = m.axis_count();

    const Eigen::MatrixXd uwu =
        m.global.u.transpose() * w.vector().asDiagonal() * m.global.u;
    worst = std::max(worst, max_abs(uwu - Eigen::MatrixXd::Identity(L, L)));

    Eigen::VectorXd metric(static_cast<Eigen::Index>(m.col_block.size()));
    for (std::size_t c = 0; c < m.col_block.size(); ++c)
      metric[static_cast<Eigen::Index>(c)] =
          m.block_weights[m.col_block[c]] *
          m.column_base_weights[m.col_block[c]][static_cast<std::size_t>(m.col_local[c])];
    const Eigen::MatrixXd vav =
        m.global.v.transpose() * metric.asDiagonal() * m.global.v;
    worst = std::max(worst, max_abs(vav - Eigen::MatrixXd::Identity(L, L)));

    for (std::size_t j : m.active_blocks) {
      const PartialPca& p = m.partials[static_cast<std::size_t>(m.active_slot_of_block[j])];
      if (std::abs(m.block_weights[j] * p.first_eigenvalue - 1.0) > 1e-10)
        fail = "normalized first eigenvalue off on block " + m.block_ids[j];
    }

    Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(n, L);
    for (const Eigen::MatrixXd& pc : m.partial_coords) avg += pc;
    avg /= static_cast<double>(m.partial_coords.size());
    worst = std::max(worst, max_abs(avg - m.individual_coords));

    for (Eigen::Index a = 0; a < L; ++a)
      worst = std::max(worst, std::abs(m.contributions.unit_cr.col(a).sum() - 1.0));
    for (Eigen::Index i = 0; i < n; ++i)
      worst = std::max(worst, std::abs(m.contributions.unit_ca.row(i).sum() - 1.0));
  }

  {
    std::vector<QuantileTable> equal;
    equal.push_back(random_centered_table(rng, "y1", 7, 5));
    equal.push_back(random_centered_table(rng, "y2", 7, 5));
    const MfaModel m = global_mfa(BlockSet(equal), UnitWeights(7));
    if (!m.compromise_scores.has_value()) {
      fail = "compromise missing on equal grids";
    } else {
      const Eigen::MatrixXd mean = (m.variable_scores[0] + m.variable_scores[1]) / 2.0;
      if (max_abs(mean - *m.compromise_scores) != 0.0)
        fail = "compromise is not exactly the mean of variable scores";
    }
  }

  report(5, worst <= 1e-8 && fail.empty(),
         fail.empty() ? "orthonormality, averaging and contribution sums, worst residual " +
                            num(worst)
                      : fail);
}

void criterion_6() {
  testsupport::Rng rng(2006);
  double worst_val = 0.0, worst_vec = 0.0;
  for (int trial = 0; trial < 25; ++trial) {
    const int n = rng.uniform_int(4, 10);
    const int nblocks = rng.uniform_int(1, 3);
    std::vector<QuantileTable> blocks;
    int total_cols = 0;
    for (int j = 0; j < nblocks; ++j) {
      const int reserved = 3 * (nblocks - j - 1);  // min 3 columns per later block
      const int bins_max = std::min(5, 12 - total_cols - reserved - 1);
      const int bins = rng.uniform_int(2, std::max(2, bins_max));
      total_cols += bins + 1;
      blocks.push_back(
          random_centered_table(rng, "y" + std::to_string(j + 1), n, bins));
    }
    const UnitWeights w(n);
    const MfaModel m = global_mfa(BlockSet(blocks), w);

    Eigen::MatrixXd q(n, static_cast<Eigen::Index>(m.col_block.size()));
    Eigen::VectorXd metric(q.cols());
    for (Eigen::Index c = 0; c < q.cols(); ++c) {
      const std::size_t j = m.col_block[static_cast<std::size_t>(c)];
      q.col(c) = blocks[j].entries().col(m.col_local[static_cast<std::size_t>(c)]);
      metric[c] = m.block_weights[j] *
                  m.column_base_weights[j][static_cast<std::size_t>(
                      m.col_local[static_cast<std::size_t>(c)])];
    }
    const testsupport::EigenPair oracle =
        testsupport::cross_product_axes(q, w.vector(), metric);
    for (Eigen::Index a = 0; a < m.axis_count(); ++a) {
      worst_val = std::max(worst_val, std::abs(m.eigenvalues[a] - oracle.values[a]) /
                                          std::max(1.0, oracle.values[0]));
      const double gap = a == 0 ? 1.0
                                : (oracle.values[a - 1] - oracle.values[a]) /
                                      std::max(1.0, oracle.values[0]);
      if (gap > 1e-6)
        worst_vec = std::max(worst_vec, max_abs(m.global.v.col(a) - oracle.vectors.col(a)));
    }
  }
  report(6, worst_val <= 1e-8 && worst_vec <= 1e-8,
         "25 instances vs independent eigensolver, eigenvalue residual " +
             num(worst_val) + ", axis residual " + num(worst_vec));
}

void criterion_7() {
  const auto start = std::chrono::steady_clock::now();
  SimulationConfig cfg;  // seed 1, 10 units, 1000 draws
  AnalysisOptions opt;
  opt.default_bins = 18;
  const DistributionalTable table = parse_microdata_csv(simulate_microdata(cfg), opt);
  const PreparedAnalysis prep = prepare_analysis(table, opt);
  const MfaModel m =
      global_mfa(prep.blocks, UnitWeights(static_cast<Eigen::Index>(table.unit_ids.size())));

  std::string fail;
  const std::size_t gauss = variable_index(table, "y1");
  const std::size_t beta = variable_index(table, "y2");
  const PartialPca& pg = m.partials[static_cast<std::size_t>(m.active_slot_of_block[gauss])];
  const PartialPca& pb = m.partials[static_cast<std::size_t>(m.active_slot_of_block[beta])];

  const double gauss_total = pg.system.spectrum.squaredNorm();
  const double gauss_plane =
      (pg.system.rank() >= 2
           ? pg.system.singular_values[0] * pg.system.singular_values[0] +
                 pg.system.singular_values[1] * pg.system.singular_values[1]
           : gauss_total) /
      gauss_total * 100.0;
  if (gauss_plane < 99.0) fail = "gaussian first partial plane " + num(gauss_plane) + "%";

  std::vector<double> sds, coords;
  for (int u = 0; u < cfg.units; ++u) {
    sds.push_back(simulated_gauss_sd(u));
    coords.push_back(pg.factor_scores(u, 0));
  }
  const double spearman = pearson(ranks(sds), ranks(coords));
  if (std::abs(std::abs(spearman) - 1.0) > 1e-12)
    fail = "spread rank correlation " + num(spearman);

  const double beta_total = pb.system.spectrum.squaredNorm();
  const double beta_first = pb.system.singular_values[0] *
                            pb.system.singular_values[0] / beta_total * 100.0;
  if (beta_first < 80.0) fail = "beta first axis " + num(beta_first) + "%";
  std::vector<double> means, bcoords;
  for (std::size_t i = 0; i < table.unit_ids.size(); ++i) {
    means.push_back(prep.summaries[i][beta].mean);
    bcoords.push_back(pb.factor_scores(static_cast<Eigen::Index>(i), 0));
  }
  const double mean_corr = pearson(means, bcoords);
  if (std::abs(mean_corr) < 0.99)
    fail = "beta axis vs means correlation " + num(mean_corr);

  const double global_plane = m.percent_inertia[0] + m.percent_inertia[1];
  if (global_plane < 85.0) fail = "global first plane " + num(global_plane) + "%";

  const double ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - start)
                        .count();
  if (ms >= 10000.0) fail = "runtime " + num(ms) + " ms";

  report(7, fail.empty(),
         fail.empty() ? "seeded benchmark: gaussian plane " + num(gauss_plane) +
                            "%, spread rank corr " + num(spearman) + ", beta axis " +
                            num(beta_first) + "% (mean corr " + num(mean_corr) +
                            "), global plane " + num(global_plane) + "%, " + num(ms) + " ms"
                      : fail);
}

void criterion_8() {
  const char* path = std::getenv("DISTMFA_BLOOD_JSON");
  if (path == nullptr || std::string(path).empty()) {
    skip(8, "set DISTMFA_BLOOD_JSON to the exported 14-group blood table to enable");
    return;
  }
  const std::string text = read_file(path);
  const DistributionalTable table = parse_histogram_json(text);
  AnalysisOptions opt;
  opt.default_bins = 20;
  const PreparedAnalysis prep = prepare_analysis(table, opt);
  const MfaModel m =
      global_mfa(prep.blocks, UnitWeights(static_cast<Eigen::Index>(table.unit_ids.size())));

  std::string fail;
  const double expected_pct[3] = {71.55, 20.98, 3.63};
  for (int a = 0; a < 3; ++a) {
    if (m.axis_count() <= a || std::abs(m.percent_inertia[a] - expected_pct[a]) > 0.5) {
      fail = "component " + std::to_string(a + 1) + " explains " +
             (m.axis_count() > a ? num(m.percent_inertia[a]) : "nothing") +
             "%, expected " + num(expected_pct[a]);
      break;
    }
  }

  static const std::map<std::string, std::vector<double>> expected_kurtosis = {
      {"chol", {3.37, 3.23, 2.95, 3.18, 2.65, 2.68, 3.04, 2.85, 3.16, 2.83, 2.74, 3.37,
                1.92, 2.56}},
      {"hemog", {3.08, 4.10, 3.60, 2.81, 2.77, 2.91, 2.72, 2.14, 2.83, 2.61, 3.44, 2.34,
                 2.37, 2.42}},
      {"hemat", {3.00, 2.72, 2.50, 2.51, 2.58, 2.61, 2.73, 1.96, 2.73, 2.66, 2.49, 2.63,
                 1.86, 1.94}}};
  if (fail.empty() && table.unit_ids.size() != 14)
    fail = "expected 14 groups, found " + std::to_string(table.unit_ids.size());
  double worst_kurt = 0.0;
  if (fail.empty()) {
    for (std::size_t j = 0; j < table.variable_ids.size() && fail.empty(); ++j) {
      std::string lowered = table.variable_ids[j];
      std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      const std::vector<double>* column = nullptr;
      for (const auto& [key, values] : expected_kurtosis)
        if (lowered.find(key) != std::string::npos) column = &values;
      if (column == nullptr) {
        fail = "unrecognized variable '" + table.variable_ids[j] + "'";
        break;
      }
      for (std::size_t i = 0; i < table.unit_ids.size(); ++i) {
        const double got = prep.summaries[i][j].kurtosis;
        worst_kurt = std::max(worst_kurt, std::abs(got - (*column)[i]));
      }
    }
    if (fail.empty() && worst_kurt > 0.02)
      fail = "kurtosis off by " + num(worst_kurt);
  }

  report(8, fail.empty(),
         fail.empty() ? "first three components " + num(m.percent_inertia[0]) + "/" +
                            num(m.percent_inertia[1]) + "/" + num(m.percent_inertia[2]) +
                            "%, kurtosis within " + num(worst_kurt)
                      : fail);
}

void criterion_9() {
  testsupport::Rng rng(2009);
  double worst_self = 0.0, worst_sym = 0.0;
  bool in_range = true;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = rng.uniform_int(4, 9);
    const QuantileTable a = random_centered_table(rng, "a", n, rng.uniform_int(2, 6));
    const QuantileTable b = random_centered_table(rng, "b", n, rng.uniform_int(2, 6));
    const UnitWeights w(n);
    worst_self = std::max(worst_self, std::abs(rv_coefficient(a, a, w) - 1.0));
    const double ab = rv_coefficient(a, b, w);
    worst_sym = std::max(worst_sym, std::abs(ab - rv_coefficient(b, a, w)));
    in_range = in_range && ab >= 0.0 && ab <= 1.0 + 1e-12;
  }
  report(9, worst_self <= 1e-12 && worst_sym <= 1e-14 && in_range,
         "self similarity residual " + num(worst_self) + ", asymmetry " + num(worst_sym));
}

void criterion_10() {
  const fs::path dir = testsupport::make_temp_dir("accept");
  auto run = [&](const std::string& args) {
    const std::string cmd = "cd '" + dir.string() + "' && '" + DISTMFA_CLI_PATH "' " +
                            args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  };

  std::string fail;
  if (run("simulate --seed 5 --units 9 --draws 400 -o micro.csv") != 0)
    fail = "simulate failed";
  if (fail.empty() && run("mfa micro.csv -o r1 --quantiles 12 --plots all") != 0)
    fail = "first run failed";
  if (fail.empty() && run("mfa micro.csv -o r2 --quantiles 12 --plots all") != 0)
    fail = "second run failed";
  std::size_t compared = 0;
  if (fail.empty()) {
    for (const auto& entry : fs::directory_iterator(dir / "r1")) {
      const fs::path other = dir / "r2" / entry.path().filename();
      if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) {
        fail = "outputs differ: " + entry.path().filename().string();
        break;
      }
      ++compared;
    }
    if (fail.empty() && compared == 0) fail = "no outputs were produced";
  }
  fs::remove_all(dir);
  report(10, fail.empty(),
         fail.empty() ? "two runs produced " + std::to_string(compared) +
                            " byte-identical report files"
                      : fail);
}

}  // namespace

int main() {
  try {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
  } catch (const std::exception& e) {
    std::printf("acceptance run aborted: %s\n", e.what());
    return 1;
  }
  if (g_failures > 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all criteria satisfied\n");
  return 0;
}
