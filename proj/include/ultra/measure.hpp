#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ultra/rng.hpp"

namespace ultra {

// Finite random measure on the unit ball: atoms, masses and an overlap oracle.
class AtomicMeasure {
 public:
  virtual ~AtomicMeasure() = default;

  std::size_t size() const { return masses_.size(); }
  double mass(std::size_t i) const { return masses_[i]; }
  const std::vector<double>& masses() const { return masses_; }

  virtual double overlap(std::size_t i, std::size_t j) const = 0;
  virtual std::string label(std::size_t i) const { return std::to_string(i); }

  // i.i.d. draw by mass
  std::size_t draw(Rng& rng) const;

 protected:
  AtomicMeasure() = default;
  explicit AtomicMeasure(std::vector<double> masses);
  void set_masses(std::vector<double> masses);

 private:
  std::vector<double> masses_;
  std::vector<double> cumulative_;
};

// Masses plus an explicit Gram matrix.
class ExplicitMeasure : public AtomicMeasure {
 public:
  ExplicitMeasure(std::vector<double> masses, std::vector<std::vector<double>> gram);
  double overlap(std::size_t i, std::size_t j) const override { return gram_[i][j]; }

 private:
  std::vector<std::vector<double>> gram_;
};

struct MeasureCheck {
  bool mass_ok = false;
  bool symmetric = false;
  bool bounded = false;
  double mass_total = 0;
  bool ok() const { return mass_ok && symmetric && bounded; }
};

// Full check for small supports; pairs are subsampled beyond max_pairs.
MeasureCheck check_measure(const AtomicMeasure& mu, std::size_t max_pairs = 1u << 22);

// Discrete law on the real line (overlap distributions).
struct DiscreteLaw {
  std::vector<double> atoms;   // increasing
  std::vector<double> masses;

  // mass of [lo, hi] with optional open ends
  double mass_in(double lo, double hi, bool lo_open = false, bool hi_open = false) const;
  double total() const;
};

}  // namespace ultra
