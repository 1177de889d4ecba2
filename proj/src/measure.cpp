#include "ultra/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ultra {

AtomicMeasure::AtomicMeasure(std::vector<double> masses) { set_masses(std::move(masses)); }

void AtomicMeasure::set_masses(std::vector<double> masses) {
  masses_ = std::move(masses);
  for (double m : masses_)
    if (m < 0 || !std::isfinite(m)) throw std::invalid_argument("atom masses must be finite and >= 0");
  cumulative_.resize(masses_.size());
  std::partial_sum(masses_.begin(), masses_.end(), cumulative_.begin());
}

std::size_t AtomicMeasure::draw(Rng& rng) const {
  if (cumulative_.empty() || !(cumulative_.back() > 0))
    throw std::runtime_error("cannot draw from a measure with empty support");
  double u = std::uniform_real_distribution<double>(0.0, cumulative_.back())(rng);
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  std::size_t i = static_cast<std::size_t>(it - cumulative_.begin());
  return std::min(i, masses_.size() - 1);
}

ExplicitMeasure::ExplicitMeasure(std::vector<double> masses, std::vector<std::vector<double>> gram)
    : AtomicMeasure(std::move(masses)), gram_(std::move(gram)) {
  if (gram_.size() != size()) throw std::invalid_argument("gram matrix size mismatch");
  for (const auto& row : gram_)
    if (row.size() != size()) throw std::invalid_argument("gram matrix must be square");
}

MeasureCheck check_measure(const AtomicMeasure& mu, std::size_t max_pairs) {
  MeasureCheck c;
  c.mass_total = std::accumulate(mu.masses().begin(), mu.masses().end(), 0.0);
  c.mass_ok = std::abs(c.mass_total - 1.0) <= 1e-12;
  c.symmetric = true;
  c.bounded = true;
  std::size_t n = mu.size();
  std::size_t stride = 1;
  while ((n / stride) * (n / stride) > max_pairs) ++stride;
  for (std::size_t i = 0; i < n; i += stride)
    for (std::size_t j = i; j < n; j += stride) {
      double a = mu.overlap(i, j);
      if (std::abs(a) > 1.0 + 1e-12) c.bounded = false;
      if (a != mu.overlap(j, i)) c.symmetric = false;
    }
  return c;
}

double DiscreteLaw::mass_in(double lo, double hi, bool lo_open, bool hi_open) const {
  double s = 0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    double x = atoms[i];
    bool above = lo_open ? x > lo : x >= lo;
    bool below = hi_open ? x < hi : x <= hi;
    if (above && below) s += masses[i];
  }
  return s;
}

double DiscreteLaw::total() const { return std::accumulate(masses.begin(), masses.end(), 0.0); }

}  // namespace ultra
