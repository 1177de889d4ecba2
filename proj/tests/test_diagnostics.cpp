#include "doctest.h"

#include <cmath>
#include <memory>

#include "ultra/diagnostics.hpp"

using namespace ultra;

namespace {

std::shared_ptr<ExplicitMeasure> uniform(std::vector<std::vector<double>> gram) {
  std::size_t n = gram.size();
  return std::make_shared<ExplicitMeasure>(std::vector<double>(n, 1.0 / n), std::move(gram));
}

std::vector<Partition> pd_samples(double theta, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Partition> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(sample_pd(theta, 2000, rng).atoms);
  return out;
}

ModelSpec small_pspin(int N) {
  ModelSpec m;
  m.variant = Variant::pspin;
  m.N = N;
  m.betas = {{2, 1.0}, {3, 0.5}};
  return m;
}

// dense copy of a measure, so the generic (non-Gibbs) code paths run on it
std::shared_ptr<ExplicitMeasure> dense_copy(const AtomicMeasure& mu) {
  std::vector<std::vector<double>> gram(mu.size(), std::vector<double>(mu.size()));
  for (std::size_t a = 0; a < mu.size(); ++a)
    for (std::size_t b = 0; b < mu.size(); ++b) gram[a][b] = mu.overlap(a, b);
  return std::make_shared<ExplicitMeasure>(mu.masses(), gram);
}

}  // namespace

TEST_CASE("replica functions") {
  ReplicaFunction f = replica_function_from_json(Json::parse(R"([{"i":1,"j":2,"ge":0.5},{"i":2,"j":3,"pow":2}])"));
  CHECK(f.arity() == 3);
  CHECK_FALSE(f.only_r12());
  OverlapMatrix M{3, {1, 0.6, 0.1, 0.6, 1, 0.5, 0.1, 0.5, 1}, {0, 1, 2}};
  CHECK(f.eval(M) == doctest::Approx(0.25));
  M.data[1] = M.data[3] = 0.4;
  CHECK(f.eval(M) == 0.0);
  CHECK(ReplicaFunction{}.eval(M) == 1.0);
  CHECK(replica_function_from_json(Json()).constant());
  CHECK_THROWS_AS(replica_function_from_json(Json::parse(R"([{"i":1,"j":1,"ge":0.5}])")), std::invalid_argument);
  CHECK_THROWS_AS(replica_function_from_json(Json::parse(R"([{"i":1,"j":2}])")), std::invalid_argument);
}

TEST_CASE("GG residual: constant test function is exactly zero") {
  GibbsSource src(small_pspin(6), 1.0);
  Rng rng(1);
  auto e = gg_residual(src, ReplicaFunction{}, Monomial{1}, 3, 4, 100, rng);
  CHECK(e.value == 0.0);
  CHECK(e.se == 0.0);
  CHECK(e.mode == "exact");
}

TEST_CASE("GG residual: exact paths agree, MC agrees with exact") {
  Rng rng(7);
  auto d = sample_disorder(small_pspin(6), rng);
  auto g = std::make_shared<GibbsMeasure>(d, 1.5);
  auto f = ReplicaFunction::indicator_ge(0.3);
  Rng r1(3), r2(3);
  auto via_wht = gg_residual(FixedSource(g), f, Monomial{1}, 2, 1, 0, r1, EstimatorMode::exact);
  auto via_sum = gg_residual(FixedSource(dense_copy(*g)), f, Monomial{1}, 2, 1, 0, r2, EstimatorMode::exact);
  CHECK(via_wht.value == doctest::Approx(via_sum.value).epsilon(1e-9));
  CHECK(via_wht.mode == "exact");

  Rng r3(11);
  auto mc = gg_residual(FixedSource(g), f, Monomial{1}, 2, 1, 200000, r3);
  CHECK(mc.mode == "mc");
  CHECK(mc.se > 0);
  CHECK(std::abs(mc.value - via_wht.value) < 4 * mc.se + 1e-3);

  CHECK_THROWS_AS(gg_residual(FixedSource(g), ReplicaFunction::indicator_ge(0.3, 1, 3), Monomial{1}, 3, 1, 0, r3,
                              EstimatorMode::exact),
                  std::invalid_argument);
  CHECK_THROWS_AS(gg_residual(FixedSource(g), ReplicaFunction::indicator_ge(0.3, 1, 3), Monomial{1}, 2, 1, 10, r3),
                  std::invalid_argument);
}

TEST_CASE("GG residual vanishes for an RPC with small dust") {
  RPCSource src({{0.2, 0.4}, {0.4, 0.9}}, {20, 20});
  Rng rng(5);
  auto e = gg_residual(src, ReplicaFunction::indicator_ge(0.6), Monomial{1}, 2, 400, 0, rng, EstimatorMode::exact);
  CHECK(e.se > 0);
  CHECK(e.value < 4 * e.se);
}

TEST_CASE("GG residual is worker independent") {
  GibbsSource src(small_pspin(6), 1.0);
  auto f = ReplicaFunction::indicator_ge(0.3);
  Rng a(9), b(9);
  auto e1 = gg_residual(src, f, Monomial{2}, 3, 12, 500, a, EstimatorMode::mc, 1);
  auto e3 = gg_residual(src, f, Monomial{2}, 3, 12, 500, b, EstimatorMode::mc, 3);
  CHECK(e1.value == e3.value);
  CHECK(e1.se == e3.se);
}

TEST_CASE("ultrametric violation") {
  // x, y orthogonal, z at overlap 0.5 with both: (x,y,z) and (y,x,z) violate
  auto mu = uniform({{1, 0, 0.5}, {0, 1, 0.5}, {0.5, 0.5, 1}});
  Rng rng(1);
  auto e = ultrametric_violation(FixedSource(mu), 0.1, 1, 0, rng, EstimatorMode::exact);
  CHECK(e.value == doctest::Approx(2.0 / 27));
  CHECK(e.se == 0.0);
  CHECK(ultrametric_violation(FixedSource(mu), 0.6, 1, 0, rng, EstimatorMode::exact).value == 0.0);
  auto mc = ultrametric_violation(FixedSource(mu), 0.1, 1, 100000, rng);
  CHECK(std::abs(mc.value - 2.0 / 27) < 4 * mc.se);

  RPCSource rpc({{0.3, 0.6}, {0.4, 0.8}}, {4, 4});
  CHECK(ultrametric_violation(rpc, 0.0, 5, 0, rng, EstimatorMode::exact).value == 0.0);

  GibbsSource sk(small_pspin(5), 1.0);
  Rng r1(4), r2(4);
  auto ex = ultrametric_violation(sk, 0.1, 1, 0, r1, EstimatorMode::exact);
  auto m = ultrametric_violation(sk, 0.1, 1, 100000, r2);
  CHECK(ex.value > 0);
  CHECK(std::abs(m.value - ex.value) < 4 * m.se);
  CHECK_THROWS_AS(ultrametric_violation(GibbsSource(small_pspin(9), 1.0), 0.1, 1, 0, r1, EstimatorMode::exact),
                  std::invalid_argument);
}

TEST_CASE("uniform hypercube oracles") {
  ModelSpec m;
  m.variant = Variant::rem;
  m.N = 8;
  GibbsSource flat(m, 0.0);
  Rng r1(1), r2(2);
  auto ex = ultrametric_violation(flat, 0.0, 1, 0, r1, EstimatorMode::exact);
  auto mc = ultrametric_violation(flat, 0.0, 1, 200000, r2);
  CHECK(ex.value > 0);
  CHECK(std::abs(mc.value - ex.value) <= 3 * mc.se);

  // R < -ε  <=>  Hamming distance d > N(1+ε)/2, d ~ Bin(N, 1/2)
  for (double eps : {0.1, 0.3, 0.5}) {
    double tail = 0;
    for (int d = 0; d <= 8; ++d)
      if (1.0 - 2.0 * d / 8 < -eps) tail += std::tgamma(9.0) / (std::tgamma(d + 1.0) * std::tgamma(9.0 - d)) / 256.0;
    Rng r(3);
    CHECK(positivity_defect(flat, eps, 1, 0, r, EstimatorMode::exact).value == doctest::Approx(tail).epsilon(1e-12));
  }
}

TEST_CASE("positivity defect") {
  auto mu = uniform({{1, -0.5}, {-0.5, 1}});
  Rng rng(1);
  CHECK(positivity_defect(FixedSource(mu), 0.1, 1, 0, rng, EstimatorMode::exact).value == doctest::Approx(0.5));
  CHECK(positivity_defect(FixedSource(mu), 0.6, 1, 0, rng, EstimatorMode::exact).value == 0.0);

  Rng d(2);
  auto g = std::make_shared<GibbsMeasure>(sample_disorder(small_pspin(7), d), 0.8);
  auto a = positivity_defect(FixedSource(g), 0.05, 1, 0, rng, EstimatorMode::exact);
  auto b = positivity_defect(FixedSource(dense_copy(*g)), 0.05, 1, 0, rng, EstimatorMode::exact);
  CHECK(a.value == doctest::Approx(b.value).epsilon(1e-12));
  CHECK(a.value > 0);
}

TEST_CASE("error bars scale like one over root n") {
  Rng d(2);
  auto g = std::make_shared<GibbsMeasure>(sample_disorder(small_pspin(7), d), 0.8);
  FixedSource src(g);
  Rng r1(10), r2(20);
  auto small = positivity_defect(src, 0.0, 1, 40000, r1);
  auto big = positivity_defect(src, 0.0, 1, 80000, r2);
  double ratio = big.se / small.se;
  CHECK(ratio == doctest::Approx(1 / std::sqrt(2.0)).epsilon(0.1));
  CHECK(big.n_samples == 80000);
}

TEST_CASE("disorder averages use between-disorder spread") {
  GibbsSource src(small_pspin(6), 1.0);
  Rng a(1), b(1);
  auto e = positivity_defect(src, 0.0, 30, 0, a, EstimatorMode::exact);
  CHECK(e.mode == "exact");
  CHECK(e.se > 0);
  auto m = positivity_defect(src, 0.0, 30, 2000, b);
  CHECK(std::abs(m.value - e.value) < 4 * (m.se + e.se));
}

TEST_CASE("PD moments and the recursion") {
  for (double th : {0.3, 0.7}) {
    CHECK(pd_talagrand_S(th, {2}) == doctest::Approx(1 - th));
    CHECK(pd_talagrand_S(th, {3}) == doctest::Approx((1 - th) * (2 - th) / 2));
    // exchangeable-partition oracle
    CHECK(pd_talagrand_S(th, {4}) == doctest::Approx((1 - th) * (2 - th) * (3 - th) / 6));
    CHECK(pd_talagrand_S(th, {2, 2}) ==
          doctest::Approx(((1 - th) * (2 - th) * (3 - th) + th * (1 - th) * (1 - th)) / 6));
    CHECK(pd_talagrand_S(th, {3, 2}) ==
          doctest::Approx(((1 - th) * (2 - th) * (3 - th) * (4 - th) + th * (1 - th) * (1 - th) * (2 - th)) / 24));
    CHECK(pd_talagrand_S(th, {2, 1, 3}) == doctest::Approx(pd_talagrand_S(th, {3, 2})));
  }
  auto v = pd_samples(0.4, 20000, 3);
  auto m2 = pd_moment(v, 2);
  auto m3 = pd_moment(v, 3);
  CHECK(std::abs(m2.value - 0.6) < 4 * m2.se);
  CHECK(std::abs(m3.value - pd_talagrand_S(0.4, {3})) < 4 * m3.se);
  CHECK_THROWS_AS(pd_moment(v, 1), std::invalid_argument);
  CHECK_THROWS_AS(pd_talagrand_S(1.2, {2}), std::invalid_argument);
}

TEST_CASE("Talagrand residual") {
  auto v = pd_samples(0.5, 10000, 8);
  for (auto comp : {std::vector<int>{2}, std::vector<int>{3}, std::vector<int>{2, 2}, std::vector<int>{1, 3}}) {
    auto e = talagrand_residual(v, comp);
    CHECK(e.se > 0);
    CHECK(e.value < 4 * e.se);
  }
  std::vector<Partition> single(10, Partition{1.0});
  CHECK(talagrand_residual(single, {1, 0}).value == 0.0);
  CHECK(talagrand_residual(single, {1, 0, 0}).value == 0.0);
  CHECK(talagrand_residual(single, {3, 2}).value == 0.0);
  // two equal atoms break the identity for (2): 2·(1/4) ≠ (1/2)² + 1/2
  std::vector<Partition> two(10, Partition{0.5, 0.5});
  CHECK(talagrand_residual(two, {2}).value == doctest::Approx(0.25));
  CHECK_THROWS_AS(talagrand_residual(v, {0, 2}), std::invalid_argument);
}

TEST_CASE("smoothed indicators") {
  CHECK(phi_kappa(0.5, 0.8, 0.2) == 0.0);
  CHECK(phi_kappa(0.7, 0.8, 0.2) == doctest::Approx(0.5));
  CHECK(phi_kappa(0.8, 0.8, 0.2) == 1.0);
  CHECK(phi_kappa(-1, 0.8, 0.2) == 0.0);
  CHECK_THROWS_AS(phi_kappa(0.5, 0.8, 0.0), std::invalid_argument);
  CHECK(phi_kappa_lambda(0.5, 0.8, 0.3, 0.1) == 0.0);
  CHECK(phi_kappa_lambda(0.6, 0.8, 0.3, 0.1) == doctest::Approx(0.5));
  CHECK(phi_kappa_lambda(0.75, 0.8, 0.3, 0.1) == 1.0);
  CHECK_THROWS_AS(phi_kappa_lambda(0.5, 0.8, 0.1, 0.1), std::invalid_argument);
}

TEST_CASE("indicator approximation gap") {
  // clusters {0,1}, {2,3}; atom 4 behaves like dust
  std::vector<double> w{0.2, 0.2, 0.2, 0.2, 0.2};
  std::vector<std::vector<double>> gram{{1, 0.9, 0.1, 0.1, 0},
                                        {0.9, 1, 0.1, 0.1, 0},
                                        {0.1, 0.1, 1, 0.9, 0},
                                        {0.1, 0.1, 0.9, 1, 0},
                                        {0, 0, 0, 0, 0.9}};
  ExplicitMeasure mu(w, gram);
  ClusterDecomposition dec;
  dec.shape = TreeShape({2});
  dec.q = {0.9};
  dec.membership = {{1, 1, 2, 2, kNoCluster}};
  auto e = indicator_approx_gap(mu, dec, 0.5);
  CHECK(e.mode == "exact");
  CHECK(e.value == doctest::Approx(0.04));
  Rng rng(1);
  auto m = indicator_approx_gap(mu, dec, 0.5, &rng, 200000, 0);
  CHECK(std::abs(m.value - 0.04) < 4 * m.se);
  CHECK_THROWS_AS(indicator_approx_gap(mu, dec, 0.5, nullptr, 10, 0), std::invalid_argument);
}

TEST_CASE("comparison with RPC moments") {
  RPCParams p{{0.3, 0.6}, {0.4, 0.8}};
  Rng rng(4);
  std::vector<WeightedTree> Y;
  for (int i = 0; i < 3000; ++i) Y.push_back(sample_rpc(p, {30, 30}, rng).tree);
  std::vector<MassMoment> moments{{{{Vertex{1}, 1}}}, {{{Vertex{1}, 2}, {Vertex{2}, 1}}}, {{{Vertex{1, 1}, 1}}}};
  auto gaps = compare_to_rpc(Y, p, moments, {30, 30}, 3000, rng);
  REQUIRE(gaps.size() == 3);
  for (const auto& g : gaps) {
    CHECK(g.se > 0);
    CHECK(std::abs(g.gap) < 4 * g.se);
  }
  CHECK(moments[1].describe() == "Y[1]^2*Y[2]^1");
  // vertices beyond the sampled tree count as zero
  MassMoment far{{{Vertex{40}, 1}}};
  CHECK(far.eval(Y[0]) == 0.0);
}

TEST_CASE("diagnostic record fields") {
  auto j = diagnostic_record("gg", Json{{"variant", "rem"}}, {0.1, 0.01, 100, "mc"}, 42);
  for (const char* k : {"test", "model", "estimate", "stderr", "samples", "seed", "mode"}) CHECK(j.contains(k));
  CHECK(j["seed"] == 42);
}

TEST_CASE("overlap histogram on a source") {
  RPCSource rpc({{0.3, 0.7}, {0.4, 0.8}}, {6, 6});
  std::vector<double> edges{-0.1, 0.2, 0.6, 1.0};
  Rng a(3);
  auto h = overlap_histogram(rpc, edges, 50, 0, a);
  CHECK(h.mode == "exact");
  CHECK(h.mass[0] + h.mass[1] + h.mass[2] == doctest::Approx(1.0));
  CHECK(h.se[1] > 0);

  Rng d(2);
  auto g = std::make_shared<GibbsMeasure>(sample_disorder(small_pspin(6), d), 1.0);
  Rng r1(1), r2(1);
  auto spectral = overlap_histogram(FixedSource(g), overlap_bins(6), 1, 0, r1);
  auto dense = overlap_histogram(FixedSource(dense_copy(*g)), overlap_bins(6), 1, 0, r2);
  for (std::size_t b = 0; b < spectral.mass.size(); ++b) CHECK(spectral.mass[b] == doctest::Approx(dense.mass[b]));
  Rng r3(1);
  auto mc = overlap_histogram(FixedSource(g), overlap_bins(6), 1, 50000, r3, EstimatorMode::mc);
  CHECK(mc.n_pairs == 50000);
  for (std::size_t b = 0; b < mc.mass.size(); ++b)
    CHECK(std::abs(mc.mass[b] - spectral.mass[b]) <= 4 * mc.se[b] + 1e-4);
}
