#include "ultra/rates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ultra::rates {

namespace {

void require_theta(double theta) {
  if (!(theta > 0 && theta < 1)) throw std::invalid_argument("theta must lie in (0,1)");
}

double logaddexp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

double c_theta(double theta) {
  require_theta(theta);
  return std::exp(std::lgamma(1.0 + 1.0 / theta) - std::lgamma(1.0 - theta) / theta);
}

double phi_bound(double m, double theta) {
  require_theta(theta);
  if (m < 2) throw std::invalid_argument("phi_bound needs m >= 2");
  double power = c_theta(theta) * std::pow(2.0, 1.0 / theta + 1.0) *
                 std::pow(m, -(1.0 - theta) / theta) * theta / (1.0 - theta);
  double geometric = std::exp(-m / 8.0) / (1.0 - std::exp(-1.0 / 8.0));
  return power + geometric;
}

double pd_concentration_bound(int n, double delta) {
  if (!(delta > 0 && delta < 1)) throw std::invalid_argument("delta must lie in (0,1)");
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  return std::exp(-n * delta * delta / 8.0);
}

double pd_concentration_threshold(double L, int n, double delta, double theta) {
  require_theta(theta);
  return std::pow((1.0 + delta) * L / n, 1.0 / theta);
}

double ppp_localization_b(double eta, double m, double theta) {
  require_theta(theta);
  if (!(eta > 0 && eta < 1)) throw std::invalid_argument("eta must lie in (0,1)");
  if (m < 1) throw std::invalid_argument("m must be >= 1");
  return std::pow(std::log(1.0 / eta) + 4.0 * m + 1.0, 1.0 / theta);
}

double log_b_bar(double eta, double m, int r, double zeta_min) {
  require_theta(zeta_min);
  if (!(eta > 0 && eta < 1)) throw std::invalid_argument("eta must lie in (0,1)");
  return std::log(std::log(1.0 / eta) + r * std::log(m) + 4.0 * m + 1.0) / zeta_min;
}

double b_bar(double eta, double m, int r, double zeta_min) {
  return std::exp(log_b_bar(eta, m, r, zeta_min));
}

double DecayModel::D(double N) const {
  if (kind == Kind::power_law) return c * std::pow(N, -gamma);
  if (table.empty()) throw std::invalid_argument("empty decay table");
  if (N <= table.front().first) return table.front().second;
  for (std::size_t i = 1; i < table.size(); ++i) {
    if (N <= table[i].first) {
      auto [n0, d0] = table[i - 1];
      auto [n1, d1] = table[i];
      double t = (std::log(N) - std::log(n0)) / (std::log(n1) - std::log(n0));
      return std::exp(std::log(d0) + t * (std::log(d1) - std::log(d0)));
    }
  }
  return table.back().second;
}

double DecayModel::log_inverse(double log_target) const {
  if (kind == Kind::power_law) {
    if (!(gamma > 0 && c > 0)) throw std::invalid_argument("power law needs c, gamma > 0");
    return std::max(0.0, (std::log(c) - log_target) / gamma);
  }
  if (table.size() < 2) throw std::invalid_argument("decay table needs two points");
  for (std::size_t i = 1; i < table.size(); ++i) {
    auto [n0, d0] = table[i - 1];
    auto [n1, d1] = table[i];
    if (std::log(d1) <= log_target || i + 1 == table.size()) {
      // log-log interpolation, extrapolating the last segment
      double slope = (std::log(d1) - std::log(d0)) / (std::log(n1) - std::log(n0));
      if (!(slope < 0)) throw std::invalid_argument("decay table must be decreasing");
      return std::log(n0) + (log_target - std::log(d0)) / slope;
    }
  }
  return std::log(table.back().first);
}

void RateInputs::validate() const {
  if (r < 1) throw std::invalid_argument("r must be >= 1");
  if (static_cast<int>(zeta.size()) != r) throw std::invalid_argument("need r zeta levels");
  for (std::size_t k = 0; k < zeta.size(); ++k) {
    require_theta(zeta[k]);
    if (k && !(zeta[k] > zeta[k - 1])) throw std::invalid_argument("zeta levels must increase");
  }
  for (double t : {eps, delta, eta})
    if (!(t > 0 && t < 1)) throw std::invalid_argument("tolerances must lie in (0,1)");
}

std::uint64_t solve_phi(double target, double theta) {
  require_theta(theta);
  if (!(target > 0)) throw std::invalid_argument("target must be positive");
  if (phi_bound(2, theta) <= target) return 2;
  std::uint64_t lo = 2, hi = 4;
  while (phi_bound(static_cast<double>(hi), theta) > target) {
    if (hi >= kMaxTruncation) throw std::overflow_error("truncation level exceeds overflow guard");
    lo = hi;
    hi *= 2;
  }
  // Φ(lo) > target >= Φ(hi)
  while (hi - lo > 1) {
    std::uint64_t mid = lo + (hi - lo) / 2;
    if (phi_bound(static_cast<double>(mid), theta) <= target)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

MStar m_star(double eps, double eta, int r, const std::vector<double>& zeta) {
  if (static_cast<int>(zeta.size()) != r) throw std::invalid_argument("need r zeta levels");
  MStar out;
  double m_bar = 1.0;
  for (int k = 0; k < r; ++k) {
    double target = eta * eps / std::pow(r * m_bar, 2.0);
    std::uint64_t mk = solve_phi(target, zeta[static_cast<std::size_t>(k)]);
    out.m.push_back(mk);
    out.m_star = std::max(out.m_star, mk);
    m_bar *= static_cast<double>(mk);
  }
  return out;
}

PStar p_star(double eps, double eta, int r, const std::vector<double>& zeta) {
  PStar out;
  out.m_star = m_star(eps, eta / 4, r, zeta).m_star;
  double m = static_cast<double>(out.m_star);
  double zmin = *std::min_element(zeta.begin(), zeta.end());
  out.log_b_bar = log_b_bar(eta / 4, m, r, zmin);
  out.log_p_star = -r * std::pow(m, r) * (std::log(m) + 2.0 * out.log_b_bar);
  out.p_star = std::exp(out.log_p_star);
  return out;
}

double log_M_star(double eta, double log_p) {
  if (!(eta > 0 && eta < 1)) throw std::invalid_argument("eta must lie in (0,1)");
  double ll_eta = std::log(std::log(1.0 / eta));
  if (log_p < -30) return ll_eta - log_p;  // -log(1-p) = p to double precision
  return ll_eta - std::log(-std::log1p(-std::exp(log_p)));
}

double M_star(double eta, double p) {
  if (!(p > 0 && p < 1)) throw std::invalid_argument("p must lie in (0,1)");
  return std::log(eta) / std::log1p(-p);
}

double bernstein_bound(int d, int n, double lip) {
  if (d < 1 || n < 1) throw std::invalid_argument("bernstein_bound needs d, n >= 1");
  return d * lip / (2.0 * std::sqrt(static_cast<double>(n)));
}

namespace {

std::vector<double> binomial_pmf(int n, double x) {
  std::vector<double> p(static_cast<std::size_t>(n) + 1, 0.0);
  if (x <= 0) {
    p[0] = 1;
    return p;
  }
  if (x >= 1) {
    p[static_cast<std::size_t>(n)] = 1;
    return p;
  }
  double lx = std::log(x), l1x = std::log1p(-x);
  for (int k = 0; k <= n; ++k)
    p[static_cast<std::size_t>(k)] = std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                                              std::lgamma(n - k + 1.0) + k * lx + (n - k) * l1x);
  return p;
}

}  // namespace

double bernstein_apply(const CubeFunction& f, int n, const std::vector<double>& x, Rng* rng,
                       int mc_samples) {
  if (n < 1) throw std::invalid_argument("bernstein_apply needs n >= 1");
  for (double xi : x)
    if (!(xi >= 0 && xi <= 1)) throw std::invalid_argument("point outside the unit cube");
  std::size_t d = x.size();
  std::vector<double> y(d);
  if (d <= 3) {
    std::vector<std::vector<double>> pmf;
    for (double xi : x) pmf.push_back(binomial_pmf(n, xi));
    std::vector<int> k(d, 0);
    double total = 0;
    while (true) {
      double w = 1;
      for (std::size_t i = 0; i < d; ++i) {
        w *= pmf[i][static_cast<std::size_t>(k[i])];
        y[i] = static_cast<double>(k[i]) / n;
      }
      if (w > 0) total += w * f(y);
      std::size_t i = 0;
      while (i < d && ++k[i] > n) k[i++] = 0;
      if (i == d) break;
    }
    return total;
  }
  if (!rng) throw std::invalid_argument("bernstein_apply needs an rng for d > 3");
  double total = 0;
  for (int s = 0; s < mc_samples; ++s) {
    for (std::size_t i = 0; i < d; ++i)
      y[i] = static_cast<double>(std::binomial_distribution<int>(n, x[i])(*rng)) / n;
    total += f(y);
  }
  return total / mc_samples;
}

RateOutputs quant_rates(const RateInputs& in, double nu) {
  in.validate();
  if (nu < 1) throw std::invalid_argument("nu must be >= 1");
  RateOutputs o;
  o.nu = nu;
  const double r = in.r;

  double k_min = kInf, inv_alpha = 1.0 / 8.0;
  for (double z : in.zeta) {
    k_min = std::min(k_min, 4.0 * c_theta(z) * z / (1.0 - z) + 10.0);
    inv_alpha = std::min(inv_alpha, (1.0 - z) / z);
  }
  o.K = static_cast<int>(std::ceil(k_min));
  o.alpha = 1.0 / inv_alpha;

  double expo = 2.0 * o.alpha * std::pow(o.alpha + 1.0, r - 1.0);
  double lm = expo * (std::log(static_cast<double>(o.K)) + 2.0 * std::log(r) + 2.0 * nu * std::log(2.0));
  o.log_m_double_star = lm;
  o.m_double_star = lm < 700 ? std::exp(lm) : kInf;

  double z1 = *std::min_element(in.zeta.begin(), in.zeta.end());
  o.zeta_note = "zeta_1 taken as the smallest level";
  o.log_b_double_bar = (std::log(5.0) + lm) / z1;
  o.log_neg_log_p = std::log(r) + r * lm + std::log(4.0 / z1 + 1.0) + std::log(lm);
  o.log_log_M = logaddexp(std::log(std::log(4.0)), std::log(r) + (r + 1) * lm + std::log(4.0 / z1 + 2.0));

  // log I = A + 3 log M
  double A = std::log(9.0) + 2.0 * (std::log(16.0) + 2 * r * lm + 6.0 * nu * std::log(2.0)) + 6 * r * lm;
  o.log_log_I = logaddexp(std::log(A), std::log(3.0) + o.log_log_M);

  o.log_n0 = std::log(2.0 / std::log(2.0)) +
             logaddexp(std::log(std::log(12.0)), std::log(r) + std::log(4.0 / z1 + 1.0) + (r + 1) * lm);
  o.n0 = o.log_n0 < 700 ? std::exp(o.log_n0) : kInf;

  if (in.D) {
    const DecayModel& D = *in.D;
    if (o.log_log_I < 700) {
      double log_I = std::exp(o.log_log_I);
      double log_N0;
      if (D.kind == DecayModel::Kind::power_law) {
        // log N_0 = (log c + I) / γ
        if (log_I < 700) {
          log_N0 = (std::log(D.c) + std::exp(log_I)) / D.gamma;
          o.log_log_N0 = std::log(log_N0);
        } else {
          o.log_log_N0 = log_I - std::log(D.gamma);
        }
      } else {
        if (log_I < 700) {
          log_N0 = D.log_inverse(-std::exp(log_I));
          o.log_log_N0 = std::log(log_N0);
        } else {
          // extrapolated log-log slope s: log N_0 ≈ I / |s|
          double log_t1 = std::log(D.table.back().second), log_t0 = std::log(D.table[D.table.size() - 2].second);
          double s = (log_t1 - log_t0) / (std::log(D.table.back().first) -
                                           std::log(D.table[D.table.size() - 2].first));
          o.log_log_N0 = log_I - std::log(-s);
        }
      }
      o.log_log_log_N0 = *o.log_log_N0 > 0 ? std::log(*o.log_log_N0) : -kInf;
    } else {
      o.log_log_N0 = kInf;
      o.log_log_log_N0 = o.log_log_I;
    }
  }
  return o;
}

int invert_rates(const RateInputs& in, double log_log_log_N, int nu_max) {
  if (!in.D) throw std::invalid_argument("invert_rates needs a decay model");
  int best = 0;
  for (int nu = 1; nu <= nu_max; ++nu) {
    auto o = quant_rates(in, nu);
    if (*o.log_log_log_N0 <= log_log_log_N)
      best = nu;
    else
      break;
  }
  return best;
}

}  // namespace ultra::rates
