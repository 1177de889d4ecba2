#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ultra/cascades.hpp"
#include "ultra/jsonio.hpp"
#include "ultra/measure.hpp"
#include "ultra/rng.hpp"
#include "ultra/stats.hpp"

namespace ultra {

// Exact-enumeration cap on the number of spins.
inline constexpr int kMaxSpins = 14;
// Critical inverse temperature of the REM.
inline const double kBetaCritical = std::sqrt(2.0 * std::log(2.0));

using Config = std::vector<int>;  // entries ±1

enum class Variant { rem, grem, pspin };

struct ModelSpec {
  Variant variant = Variant::rem;
  int N = 8;
  double beta = 1.0;
  std::map<int, double> betas;  // pspin: p -> β_p
  std::vector<int> blocks;      // grem: spins per block, summing to N
  std::vector<double> zeta;     // grem: 0 = ζ_0 < ... < ζ_B = 1, B = blocks.size()
  std::string rounding_note;    // grem blocks rounded from q increments

  void validate() const;
};

// Configuration index s <-> spins: σ_i = +1 when bit i of s is 0.
Config config_at(std::uint32_t s, int N);
std::uint32_t config_index(const Config& s);

double overlap(const Config& a, const Config& b);
inline double overlap_index(std::uint32_t a, std::uint32_t b, int N) {
  return 1.0 - 2.0 * __builtin_popcount(a ^ b) / N;
}
double covariance(const ModelSpec& model, const Config& a, const Config& b);

struct DisorderRealization {
  ModelSpec model;
  std::vector<double> energies;  // H(σ) by configuration index
};

DisorderRealization sample_disorder(const ModelSpec& model, Rng& rng);

// G(σ) = e^{-βH(σ)} / Z over the hypercube, overlap R.
class GibbsMeasure : public AtomicMeasure {
 public:
  GibbsMeasure(const DisorderRealization& d, double beta);

  double overlap(std::size_t i, std::size_t j) const override {
    return overlap_index(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), N_);
  }
  std::string label(std::size_t i) const override;

  int N() const { return N_; }
  double beta() const { return beta_; }
  double log_z() const { return log_z_; }

 private:
  int N_;
  double beta_;
  double log_z_;
};

GibbsMeasure gibbs(const DisorderRealization& d, double beta);

// Law of R_12 under G⊗G for one measure, indexed by Hamming distance d
// (R = 1 - 2d/N). Exact, O(N 2^N).
std::vector<double> exact_overlap_law(const GibbsMeasure& g);
void walsh_hadamard(std::vector<double>& a);

struct Histogram {
  std::vector<double> edges;  // bins [lo, hi), last bin closed
  std::vector<double> mass;
  std::vector<double> se;
  std::string mode = "exact";
  std::size_t n_disorder = 0;
  std::size_t n_pairs = 0;  // per disorder, mc mode

  std::size_t bin_of(double x) const;  // edges.size()-1 when outside
  double mass_above(double x) const;   // total over bins with lo >= x
  std::string csv() const;
  Json to_json() const;
};

// One bin per overlap value of N spins.
std::vector<double> overlap_bins(int N);

enum class EstimatorMode { exact, mc };

Histogram empirical_overlap_law(const ModelSpec& model, double beta, std::size_t n_disorder,
                                std::size_t n_pairs, const std::vector<double>& edges, Rng& rng,
                                EstimatorMode mode = EstimatorMode::exact, int workers = 1);

OverlapMatrix sample_replicas(const GibbsMeasure& g, std::size_t n, Rng& rng);

double free_energy(const DisorderRealization& d, double beta);
double log_partition(const DisorderRealization& d, double beta);

// (1/(aN)) log Ê Z^a - (1/N) Ê log Z from per-disorder log Z values.
EstimateWithError dfm_gap_from_logz(const std::vector<double>& logz, double a, int N);
EstimateWithError dfm_gap(const ModelSpec& model, double beta, double a, std::size_t n_disorder, Rng& rng,
                          int workers = 1);

ModelSpec model_from_json(const Json& j);
Json model_to_json(const ModelSpec& m);

}  // namespace ultra
