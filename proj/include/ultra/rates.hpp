#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ultra/rng.hpp"

namespace ultra::rates {

// C(θ) = E L^{1/θ} for L = S^{-θ}
double c_theta(double theta);

// Tail bound on E Σ_{n≥m} v_n for PD(θ); m >= 2.
double phi_bound(double m, double theta);

// P(v_n >= ((1+δ)L/n)^{1/θ}) bound
double pd_concentration_bound(int n, double delta);
double pd_concentration_threshold(double L, int n, double delta, double theta);

// b such that a PPP(μ_θ) has more than m points in (1/b, b) with prob >= 1-η
double ppp_localization_b(double eta, double m, double theta);
// b(η/m^r, ζ_1) with ζ_1 the smallest level
double b_bar(double eta, double m, int r, double zeta_min);
// log of b_bar, usable when b_bar overflows
double log_b_bar(double eta, double m, int r, double zeta_min);

// Uniform probability-gap decay model D(N).
struct DecayModel {
  enum class Kind { power_law, tabulated };
  Kind kind = Kind::power_law;
  double c = 1.0;      // D(N) = c N^{-γ}
  double gamma = 1.0;
  std::vector<std::pair<double, double>> table;  // (N, D) pairs, N increasing, D decreasing

  double D(double N) const;
  // smallest N with D(N) <= target, given log(target); returns log N
  double log_inverse(double log_target) const;
};

struct RateInputs {
  int r = 1;
  std::vector<double> zeta;  // ζ_k = ζ[0, q_{k+1}), k = 0..r-1, strictly increasing
  double eps = 0.1;
  double delta = 0.1;
  double eta = 0.1;
  std::optional<DecayModel> D;

  void validate() const;
};

// Largest m accepted before the search reports overflow.
inline constexpr std::uint64_t kMaxTruncation = std::uint64_t{1} << 62;

// Smallest integer m >= 2 with Φ(m; θ) <= target. Throws std::overflow_error past kMaxTruncation.
std::uint64_t solve_phi(double target, double theta);

struct MStar {
  std::vector<std::uint64_t> m;  // m_0..m_{r-1}
  std::uint64_t m_star = 0;
};
MStar m_star(double eps, double eta, int r, const std::vector<double>& zeta);

struct PStar {
  std::uint64_t m_star = 0;
  double log_b_bar = 0;
  double log_p_star = 0;  // log p_* (p_* itself may underflow)
  double p_star = 0;
};
// p_* = (m_* b̄²)^{-r m_*^r} with m_* = m_*(ε, η/4) and b̄ at η/4
PStar p_star(double eps, double eta, int r, const std::vector<double>& zeta);

// M_* = log η / log(1 - p_*); returned as log M_*.
double log_M_star(double eta, double log_p);
double M_star(double eta, double p);

// Bernstein smoothing B_n f(x). Exact tensor sum for d <= 3, Monte Carlo above.
using CubeFunction = std::function<double(const std::vector<double>&)>;
double bernstein_apply(const CubeFunction& f, int n, const std::vector<double>& x,
                       Rng* rng = nullptr, int mc_samples = 20000);
double bernstein_bound(int d, int n, double lip);

// Quantities of the lower-rate calculation. Values that overflow doubles are
// carried as iterated logarithms.
struct RateOutputs {
  double nu = 1;
  int K = 0;
  double alpha = 0;
  double log_m_double_star = 0;
  double m_double_star = 0;          // may be +inf
  double log_b_double_bar = 0;
  double log_neg_log_p = 0;          // log(-log p_**)
  double log_log_M = 0;              // log log M_**
  double log_log_I = 0;              // log log I(ν)
  double log_n0 = 0;
  double n0 = 0;                     // may be +inf
  std::optional<double> log_log_N0;  // needs a decay model
  std::optional<double> log_log_log_N0;
  std::string zeta_note;
};

RateOutputs quant_rates(const RateInputs& in, double nu);

// Largest integer ν >= 1 with N_0(ν) <= N, N given as log log log N. 0 when none.
// Throws std::invalid_argument when no decay model is set.
int invert_rates(const RateInputs& in, double log_log_log_N, int nu_max = 64);

}  // namespace ultra::rates
