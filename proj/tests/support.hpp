#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "distmfa/histogram.hpp"

namespace testsupport {

// Seeded generator used by all randomized tests so failures reproduce.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(engine_() % static_cast<std::uint64_t>(hi - lo + 1));
  }

 private:
  std::mt19937_64 engine_;
};

inline distmfa::EquiDepthHistogram random_equi_depth(Rng& rng, int bins) {
  std::vector<double> bounds;
  bounds.push_back(rng.uniform(-5.0, 5.0));
  for (int l = 0; l < bins; ++l) {
    double width = rng.uniform() < 0.1 ? 0.0 : rng.uniform(0.0, 2.0);
    bounds.push_back(bounds.back() + width);
  }
  return distmfa::EquiDepthHistogram::from_bounds(bounds);
}

// Histogram with uneven weights and occasional support gaps.
inline distmfa::Histogram random_histogram(Rng& rng, int bins) {
  std::vector<distmfa::Bin> out;
  double x = rng.uniform(-5.0, 5.0);
  std::vector<double> weights(static_cast<std::size_t>(bins));
  double sum = 0.0;
  for (double& w : weights) {
    w = rng.uniform(0.1, 1.0);
    sum += w;
  }
  for (int l = 0; l < bins; ++l) {
    if (l > 0 && rng.uniform() < 0.3) x += rng.uniform(0.0, 1.0);
    double lo = x;
    x += rng.uniform(0.0, 1.5);
    out.push_back({lo, x, weights[static_cast<std::size_t>(l)] / sum});
  }
  return distmfa::Histogram(out);
}

inline std::filesystem::path make_temp_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  std::filesystem::path p =
      std::filesystem::temp_directory_path() /
      ("distmfa_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
       std::to_string(counter++));
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testsupport
