#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>

#include "ultra/jsonio.hpp"

namespace ultra {

struct EstimateWithError {
  double value = 0;
  double se = 0;  // standard error
  std::size_t n_samples = 0;
  std::string mode = "mc";  // "exact" or "mc"

  double z() const { return se > 0 ? value / se : (value == 0 ? 0.0 : INFINITY); }
};

// (sum, sum of squares, count); merges are associative so per-index partials
// combined in index order give worker-independent results.
struct Accumulator {
  double sum = 0, sumsq = 0;
  std::size_t count = 0;

  void add(double x) {
    sum += x;
    sumsq += x * x;
    ++count;
  }
  void merge(const Accumulator& o) {
    sum += o.sum;
    sumsq += o.sumsq;
    count += o.count;
  }
  double mean() const { return count ? sum / static_cast<double>(count) : 0.0; }
  double variance() const {
    if (count < 2) return 0;
    double n = static_cast<double>(count);
    double v = (sumsq - sum * sum / n) / (n - 1);
    return v > 0 ? v : 0;
  }
  double stderr_of_mean() const { return count ? std::sqrt(variance() / static_cast<double>(count)) : 0.0; }
  EstimateWithError estimate(std::string mode = "mc") const {
    return {mean(), stderr_of_mean(), count, std::move(mode)};
  }
};

inline Json to_json(const EstimateWithError& e) {
  return Json{{"estimate", e.value}, {"stderr", e.se}, {"samples", e.n_samples}, {"mode", e.mode}};
}

}  // namespace ultra
