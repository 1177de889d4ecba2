#include "doctest.h"

#include <cmath>

#include "ultra/cascades.hpp"
#include "ultra/rates.hpp"

using namespace ultra;
using namespace ultra::rates;

TEST_CASE("C(theta) closed forms") {
  CHECK(std::abs(c_theta(0.5) - 2.0 / M_PI) < 1e-12);
  // Γ(1+1/θ)/Γ(1−θ)^{1/θ} by direct tgamma
  for (double th : {0.1, 0.25, 0.75, 0.9})
    CHECK(c_theta(th) == doctest::Approx(std::tgamma(1 + 1 / th) / std::pow(std::tgamma(1 - th), 1 / th)).epsilon(1e-12));
  for (int i = 1; i < 99; ++i) CHECK(c_theta(i / 100.0) > 0);
  CHECK_THROWS(c_theta(1.0));
  CHECK_THROWS(c_theta(0.0));
}

TEST_CASE("C(0.5) agrees with the PD normalizer") {
  auto rng = make_stream(11);
  double s = 0, s2 = 0;
  const int n = 4000;
  for (int i = 0; i < n; ++i) {
    auto pd = sample_pd(0.5, 2000, rng);
    double x = std::pow(pd.L, 2.0);
    s += x;
    s2 += x * x;
  }
  double mean = s / n, se = std::sqrt((s2 / n - mean * mean) / n);
  CHECK(std::abs(mean - c_theta(0.5)) < 3 * se + 1e-3);
}

TEST_CASE("phi bound values") {
  double c = std::tgamma(3.0) / std::pow(std::tgamma(0.5), 2);
  double expect = c * 8 / 2 * 1 + std::exp(-0.25) / (1 - std::exp(-0.125));
  CHECK(phi_bound(2, 0.5) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(std::abs(phi_bound(2, 0.5) - 9.175) < 0.01);
  double prev = phi_bound(2, 0.4);
  for (int m = 3; m <= 10000; m += 7) {
    double v = phi_bound(m, 0.4);
    CHECK(v < prev);
    prev = v;
  }
  CHECK_THROWS(phi_bound(1, 0.5));
}

TEST_CASE("PD concentration bound") {
  CHECK(pd_concentration_bound(8, 0.9) == doctest::Approx(std::exp(-0.81)));
  for (int n = 1; n < 50; ++n) CHECK(pd_concentration_bound(n, 0.3) <= 1.0);
  CHECK_THROWS(pd_concentration_bound(4, 1.5));

  auto rng = make_stream(3);
  int hits = 0, trials = 4000;
  for (int t = 0; t < trials; ++t) {
    auto pd = sample_pd(0.5, 200, rng);
    if (pd.atoms[19] >= pd_concentration_threshold(pd.L, 20, 0.5, 0.5)) ++hits;
  }
  CHECK(static_cast<double>(hits) / trials <= pd_concentration_bound(20, 0.5));
}

TEST_CASE("PPP localization radius") {
  CHECK(ppp_localization_b(std::exp(-1.0), 1, 0.5) == doctest::Approx(36.0));
  CHECK(ppp_localization_b(0.1, 3, 0.5) > ppp_localization_b(0.1, 2, 0.5));
  CHECK(ppp_localization_b(0.01, 3, 0.5) > ppp_localization_b(0.1, 3, 0.5));
  CHECK(b_bar(0.1, 3, 2, 0.4) == doctest::Approx(ppp_localization_b(0.1 / 9, 3, 0.4)));

  // fraction of PPP(μ_θ) draws with at most m points in (1/b, b)
  double eta = 0.1, theta = 0.5;
  int m = 3;
  double b = ppp_localization_b(eta, m, theta);
  auto rng = make_stream(5);
  std::exponential_distribution<double> e(1.0);
  int bad = 0, trials = 20000;
  for (int t = 0; t < trials; ++t) {
    // u = Γ^{-1/θ} ∈ (1/b, b) iff Γ ∈ (b^{-θ}, b^{θ})
    double g = 0, lo = std::pow(b, -theta), hi = std::pow(b, theta);
    int count = 0;
    while ((g += e(rng)) < hi)
      if (g > lo) ++count;
    if (count <= m) ++bad;
  }
  CHECK(static_cast<double>(bad) / trials < eta);
}

TEST_CASE("solve_phi agrees with a scan") {
  for (double target : {0.5, 0.1, 0.02})
    for (double th : {0.3, 0.5}) {
      std::uint64_t m = 2;
      while (phi_bound(static_cast<double>(m), th) > target) ++m;
      CHECK(solve_phi(target, th) == m);
    }
  CHECK_THROWS_AS(solve_phi(1e-300, 0.9), std::overflow_error);
}

TEST_CASE("m_star recursion") {
  auto one = m_star(0.2, 0.5, 1, {0.5});
  std::uint64_t m = 2;
  while (phi_bound(static_cast<double>(m), 0.5) > 0.1) ++m;
  CHECK(one.m_star == m);

  auto a = m_star(0.2, 0.5, 2, {0.3, 0.5});
  auto b = m_star(0.1, 0.5, 2, {0.3, 0.5});
  CHECK(b.m_star >= a.m_star);
  REQUIRE(a.m.size() == 2);
  CHECK(a.m[1] == solve_phi(0.5 * 0.2 / std::pow(2.0 * a.m[0], 2), 0.5));
}

TEST_CASE("p_star and M_star") {
  auto p = p_star(0.9, 0.9, 1, {0.5});
  // recompute from the pieces: log p = -r m^r log(m b^2)
  double m = static_cast<double>(p.m_star);
  CHECK(p.log_p_star == doctest::Approx(-m * (std::log(m) + 2 * p.log_b_bar)));
  CHECK(p.log_p_star < 0);
  CHECK(p.m_star == m_star(0.9, 0.9 / 4, 1, {0.5}).m_star);

  double pp = 0.01;
  double M = M_star(0.9, pp);
  CHECK(M * std::log1p(-pp) == doctest::Approx(std::log(0.9)));
  CHECK(std::exp(log_M_star(0.9, std::log(pp))) == doctest::Approx(M).epsilon(1e-9));
  // tiny p: log form stays finite
  auto deep = p_star(0.1, 0.1, 2, {0.3, 0.6});
  CHECK(std::isfinite(log_M_star(0.1, deep.log_p_star)));
  CHECK(log_M_star(0.1, deep.log_p_star) > 0);
}

TEST_CASE("Bernstein operator") {
  auto linear = [](const std::vector<double>& y) { return 0.3 * y[0] - 0.2 * y[1] + 0.1; };
  CHECK(bernstein_apply(linear, 17, {0.4, 0.9}) == doctest::Approx(linear({0.4, 0.9})).epsilon(1e-12));
  CHECK(bernstein_bound(2, 100, 1.0) == doctest::Approx(0.1));

  auto kink = [](const std::vector<double>& y) { return std::abs(y[0] - 0.5); };
  double sup = 0;
  for (int i = 0; i <= 1000; ++i) {
    double x = i / 1000.0;
    sup = std::max(sup, std::abs(bernstein_apply(kink, 100, {x}) - kink({x})));
  }
  CHECK(sup <= bernstein_bound(1, 100, 1.0));
  CHECK_THROWS(bernstein_apply(kink, 10, {1.5}));

  auto rng = make_stream(9);
  auto sum4 = [](const std::vector<double>& y) { return y[0] + y[1] + y[2] + y[3]; };
  double v = bernstein_apply(sum4, 20, {0.1, 0.2, 0.3, 0.4}, &rng, 20000);
  CHECK(std::abs(v - 1.0) < 0.01);
}

TEST_CASE("quantitative rates") {
  RateInputs in;
  in.r = 1;
  in.zeta = {0.5};
  in.D = DecayModel{};
  in.D->c = 1;
  in.D->gamma = 0.5;
  CHECK_THROWS(invert_rates(RateInputs{1, {0.5}, 0.1, 0.1, 0.1, std::nullopt}, 10.0));

  double prev_m = 0, prev_n0 = 0;
  for (int nu = 1; nu <= 6; ++nu) {
    auto o = quant_rates(in, nu);
    CHECK(o.alpha >= 8);
    CHECK(o.log_m_double_star > prev_m);
    CHECK(o.log_n0 > prev_n0);
    prev_m = o.log_m_double_star;
    prev_n0 = o.log_n0;
    REQUIRE(o.log_log_log_N0.has_value());
    // the triple log of 1/D(N_0) stays below a power of m_**
    CHECK(*o.log_log_log_N0 <= 3 * o.log_m_double_star);
  }
  // K and α from their definitions
  auto o = quant_rates(in, 1);
  CHECK(o.K == static_cast<int>(std::ceil(4 * c_theta(0.5) * 1.0 + 10)));
  CHECK(o.alpha == doctest::Approx(8.0));

  int prev = 0;
  for (double lll = 0; lll < 400; lll += 10) {
    int nu = invert_rates(in, lll);
    CHECK(nu >= prev);
    prev = nu;
  }
  CHECK(prev > 1);
}
