#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include "distmfa/histogram.hpp"
#include "distmfa/io.hpp"

namespace distmfa {

/// Inverse standard normal CDF: rational approximation refined by one Halley
/// step, accurate to close to machine precision on (0, 1).
inline double normal_quantile(double p) {
  detail::require(p > 0.0 && p < 1.0, "normal_quantile: p must lie in (0,1)");
  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double lo = 0.02425, hi = 1.0 - 0.02425;
  double x;
  if (p < lo) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= hi) {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double err = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = err * 2.506628274631000502 * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

namespace detail {

class SimRng {
 public:
  explicit SimRng(std::uint64_t seed) : engine_(seed) {}
  // strictly inside (0,1) so inverse-CDF sampling never degenerates
  double uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  std::mt19937_64 engine_;
};

inline double normal_draw(SimRng& rng, double mean, double sd) {
  return mean + sd * normal_quantile(rng.uniform_open());
}

// gamma for shape >= 1 by squeeze-and-accept on a cubed normal
inline double gamma_draw(SimRng& rng, double shape) {
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / (3.0 * std::sqrt(d));
  for (;;) {
    const double x = normal_quantile(rng.uniform_open());
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = rng.uniform_open();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
  }
}

inline double beta_draw(SimRng& rng, double alpha, double beta) {
  const double g1 = gamma_draw(rng, alpha);
  const double g2 = gamma_draw(rng, beta);
  return g1 / (g1 + g2);
}

}  // namespace detail

/// Benchmark-style design: one block where only the spread moves and one
/// where location and scale both move. `units` gaussian units share a common
/// mean with linearly growing spread; the beta units shift by their index and
/// cycle through four scales.
struct SimulationConfig {
  std::uint64_t seed = 1;
  int units = 10;
  int draws = 1000;
};

inline double simulated_gauss_mean() { return 5.0; }
inline double simulated_gauss_sd(int unit) { return 0.5 + 0.25 * unit; }
inline double simulated_beta_shift(int unit) { return static_cast<double>(unit); }
inline double simulated_beta_scale(int unit) { return 1.0 + 0.5 * (unit % 4); }

/// Long-format microdata for the design above, deterministic in the seed.
/// Variable y1 is the gaussian block, y2 the shifted and scaled Beta(2,5).
inline std::string simulate_microdata(const SimulationConfig& config) {
  detail::require(config.units >= 1, "simulate: need at least one unit");
  detail::require(config.draws >= 1, "simulate: need at least one draw");
  detail::SimRng rng(config.seed);
  auto unit_id = [&](int u) {
    std::string n = std::to_string(u + 1);
    if (config.units >= 10 && n.size() < 2) n = "0" + n;
    return "u" + n;
  };
  std::string out = "unit,variable,value\n";
  for (int u = 0; u < config.units; ++u) {
    const std::string id = unit_id(u);
    for (int k = 0; k < config.draws; ++k) {
      const double x =
          detail::normal_draw(rng, simulated_gauss_mean(), simulated_gauss_sd(u));
      out += id + ",y1," + format_double(x) + "\n";
    }
  }
  for (int u = 0; u < config.units; ++u) {
    const std::string id = unit_id(u);
    for (int k = 0; k < config.draws; ++k) {
      const double x = simulated_beta_shift(u) +
                       simulated_beta_scale(u) * detail::beta_draw(rng, 2.0, 5.0);
      out += id + ",y2," + format_double(x) + "\n";
    }
  }
  return out;
}

}  // namespace distmfa
