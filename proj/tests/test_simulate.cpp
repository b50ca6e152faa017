#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <string>

#include "distmfa/simulate.hpp"

using namespace distmfa;

TEST_CASE("inverse normal cdf") {
  CHECK(std::abs(normal_quantile(0.5)) <= 1e-15);
  CHECK(std::abs(normal_quantile(0.975) - 1.959963984540054) <= 1e-12);
  CHECK(std::abs(normal_quantile(0.84134474606854293) - 1.0) <= 1e-10);
  for (double p : {0.001, 0.01, 0.2, 0.5, 0.77, 0.99, 0.9999}) {
    CHECK(std::abs(normal_quantile(p) + normal_quantile(1.0 - p)) <= 1e-10);
    const double x = normal_quantile(p);
    CHECK(std::abs(0.5 * std::erfc(-x / std::sqrt(2.0)) - p) <= 1e-13);
  }
  CHECK_THROWS_AS(normal_quantile(0.0), std::invalid_argument);
  CHECK_THROWS_AS(normal_quantile(1.0), std::invalid_argument);
}

TEST_CASE("simulation is deterministic in the seed") {
  SimulationConfig c;
  c.seed = 42;
  c.units = 4;
  c.draws = 50;
  CHECK(simulate_microdata(c) == simulate_microdata(c));
  SimulationConfig other = c;
  other.seed = 43;
  CHECK(simulate_microdata(c) != simulate_microdata(other));
}

TEST_CASE("simulated blocks respect their design") {
  SimulationConfig c;
  c.seed = 1;
  c.units = 10;
  c.draws = 1000;
  std::string csv = simulate_microdata(c);

  std::map<std::string, std::vector<double>> y1, y2;
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  REQUIRE(line == "unit,variable,value");
  while (std::getline(in, line)) {
    const std::size_t c1 = line.find(','), c2 = line.find(',', c1 + 1);
    const std::string unit = line.substr(0, c1);
    const std::string var = line.substr(c1 + 1, c2 - c1 - 1);
    const double v = std::stod(line.substr(c2 + 1));
    (var == "y1" ? y1 : y2)[unit].push_back(v);
  }
  REQUIRE(y1.size() == 10);
  REQUIRE(y2.size() == 10);

  for (int u = 0; u < 10; ++u) {
    std::string id = "u" + std::string(u < 9 ? "0" : "") + std::to_string(u + 1);
    REQUIRE(y1[id].size() == 1000);

    double mean = 0.0;
    for (double v : y1[id]) mean += v;
    mean /= 1000.0;
    CHECK(std::abs(mean - simulated_gauss_mean()) <= 0.1);

    double var = 0.0;
    for (double v : y1[id]) var += (v - mean) * (v - mean);
    var /= 999.0;
    CHECK(std::abs(std::sqrt(var) - simulated_gauss_sd(u)) <=
          0.12 * simulated_gauss_sd(u));

    const double lo = simulated_beta_shift(u);
    const double hi = lo + simulated_beta_scale(u);
    double bmean = 0.0;
    for (double v : y2[id]) {
      CHECK(v >= lo);
      CHECK(v <= hi);
      bmean += v;
    }
    bmean /= 1000.0;
    // Beta(2,5) has mean 2/7
    CHECK(std::abs(bmean - (lo + simulated_beta_scale(u) * 2.0 / 7.0)) <= 0.05);
  }
}
