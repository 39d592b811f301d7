#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unistd.h>
#include <vector>

#include "multiamdahl/model.hpp"

namespace testutil {

inline double rel_diff(double a, double b) {
  double scale = std::max(std::fabs(a), std::fabs(b));
  return scale == 0.0 ? 0.0 : std::fabs(a - b) / scale;
}

// weights drawn uniformly from the simplex via exponential spacings
inline std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t n) {
  std::exponential_distribution<double> exp1(1.0);
  std::vector<double> w(n);
  double sum = 0.0;
  for (auto& v : w) {
    v = exp1(rng) + 1e-3;
    sum += v;
  }
  for (auto& v : w) v /= sum;
  return w;
}

inline double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

inline multiamdahl::Scenario random_powerlaw_scenario(std::mt19937_64& rng, std::size_t n,
                                                      double budget_lo = 2.0,
                                                      double budget_hi = 256.0) {
  std::uniform_real_distribution<double> beta_dist(0.3, 1.5);
  auto weights = random_simplex(rng, n);
  std::vector<multiamdahl::Segment> segs;
  for (std::size_t i = 0; i < n; ++i)
    segs.push_back({"seg_" + std::to_string(i), weights[i],
                    multiamdahl::PowerLaw{log_uniform(rng, 0.5, 200.0), beta_dist(rng)}});
  return multiamdahl::Scenario(std::move(segs),
                               multiamdahl::StaticBudget{log_uniform(rng, budget_lo, budget_hi)},
                               multiamdahl::Objective::total_time);
}

// plain scalar bisection for hand-built oracles inside tests
inline double bisect(const std::function<double(double)>& f, double lo, double hi,
                     int iters = 200) {
  double flo = f(lo);
  for (int i = 0; i < iters; ++i) {
    double mid = 0.5 * (lo + hi);
    double fm = f(mid);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

inline std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("test helper: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    base_ = std::filesystem::temp_directory_path() /
            ("multiamdahl_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::create_directories(base_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(base_, ec);
  }
  std::string path(const std::string& name) const { return (base_ / name).string(); }

 private:
  std::filesystem::path base_;
};

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline Csv parse_csv(const std::string& text) {
  Csv out;
  std::istringstream lines(text);
  std::string line;
  bool first = true;
  while (std::getline(lines, line)) {
    std::istringstream cells(line);
    std::string cell;
    if (first) {
      while (std::getline(cells, cell, ',')) out.header.push_back(cell);
      first = false;
      continue;
    }
    std::vector<double> row;
    while (std::getline(cells, cell, ',')) row.push_back(std::stod(cell));
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace testutil
