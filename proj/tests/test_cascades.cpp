#include "doctest.h"

#include <cmath>
#include <numeric>

#include "ultra/cascades.hpp"
#include "ultra/rates.hpp"

using namespace ultra;

namespace {

double sum_sq(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return s;
}

struct Moments {
  double s = 0, s2 = 0;
  int n = 0;
  void add(double x) {
    s += x;
    s2 += x * x;
    ++n;
  }
  double mean() const { return s / n; }
  double se() const { return std::sqrt(std::max(0.0, s2 / n - mean() * mean()) / n); }
};

}  // namespace

TEST_CASE("ranked PPP atoms from forced arrivals") {
  auto u = ppp_from_arrivals(0.5, {1, 2, 3});
  CHECK(u[0] == 1.0);
  CHECK(u[1] == doctest::Approx(0.25));
  CHECK(u[2] == doctest::Approx(1.0 / 9));
  for (double th : {0.1, 0.7}) CHECK(ppp_from_arrivals(th, {1.0})[0] == 1.0);
  auto rng = make_stream(1);
  CHECK_THROWS(sample_ppp_ranked(1.2, 5, rng));
  auto v = sample_ppp_ranked(0.4, 50, rng);
  CHECK(std::is_sorted(v.rbegin(), v.rend()));
}

TEST_CASE("PPP intensity of an interval") {
  const double theta = 0.5, a = 0.1, b = 2.0;
  auto rng = make_stream(2);
  Moments m;
  for (int t = 0; t < 10000; ++t) {
    auto u = sample_ppp_ranked(theta, 100, rng);
    REQUIRE(u.back() < a);
    m.add(static_cast<double>(std::count_if(u.begin(), u.end(), [&](double x) { return x > a && x < b; })));
  }
  double expect = std::pow(a, -theta) - std::pow(b, -theta);
  CHECK(std::abs(m.mean() - expect) < 3 * m.se());
}

TEST_CASE("PD sample identities") {
  auto rng = make_stream(3);
  auto one = sample_pd(0.3, 1, rng);
  CHECK(one.atoms == std::vector<double>{1.0});
  auto pd = sample_pd(0.6, 300, rng);
  CHECK(std::accumulate(pd.atoms.begin(), pd.atoms.end(), 0.0) == doctest::Approx(1.0));
  for (std::size_t n = 0; n < pd.atoms.size(); ++n)
    CHECK(std::pow(pd.atoms[n], pd.theta) * pd.arrivals[n] == doctest::Approx(pd.L).epsilon(1e-12));
  CHECK(sample_pd(0.5, 10, rng, 0.01).tail_flagged);
  CHECK_FALSE(sample_pd(0.5, 10, rng, 100.0).tail_flagged);
  CHECK_THROWS(sample_pd(0.0, 10, rng));
}

TEST_CASE("PD second moment") {
  auto rng = make_stream(4);
  Moments m;
  for (int i = 0; i < 4000; ++i) m.add(sum_sq(sample_pd(0.5, 1000, rng).atoms));
  CHECK(std::abs(m.mean() - 0.5) < 3 * m.se());
}

TEST_CASE("RPC depth one is PD") {
  RPCParams p{{0.4}, {0.9}};
  auto rng = make_stream(5);
  Moments m;
  for (int i = 0; i < 3000; ++i) {
    auto c = sample_rpc(p, 500, rng);
    m.add(sum_sq(c.tree.level(1)));
  }
  CHECK(std::abs(m.mean() - 0.6) < 3 * m.se() + 0.005);
}

TEST_CASE("RPC single path") {
  RPCParams p{{0.3, 0.7}, {0.4, 0.8}};
  auto rng = make_stream(6);
  auto c = sample_rpc(p, 1, rng);
  CHECK(c.shape().size() == 2);
  CHECK(c.tree.at({1}) >= c.tree.at({1, 1}));
  CHECK(c.tree.at({1, 1}) == doctest::Approx(1 - c.dust).epsilon(1e-12));
  CHECK(validate_cascade(c).valid());
}

TEST_CASE("RPC level laws by second moments") {
  RPCParams p{{0.3, 0.7}, {0.4, 0.8}};
  auto rng = make_stream(7);
  Moments l1, l2, dust;
  for (int i = 0; i < 2000; ++i) {
    auto c = sample_rpc(p, {15, 1000}, rng);
    REQUIRE(validate_cascade(c).valid());
    l1.add(sum_sq(c.tree.level(1)));
    l2.add(sum_sq(c.tree.level(2)));
    dust.add(c.dust);
  }
  CHECK(std::abs(l1.mean() - 0.7) < 0.02);
  CHECK(std::abs(l2.mean() - 0.3) < 0.02);
  // expected dust under the summed per-level tail bounds
  CHECK(dust.mean() <= rates::phi_bound(15, 0.3) + rates::phi_bound(1000, 0.7));
}

TEST_CASE("validate_cascade reports") {
  CascadeWeights good{WeightedTree(TreeShape({2, 1}), {0.6, 0.4, 0.6, 0.4}), 0.0};
  auto rep = validate_cascade(good);
  CHECK(rep.valid());
  CHECK(rep.proper);

  CascadeWeights unsorted{WeightedTree(TreeShape({2}), {0.4, 0.6}), 0.0};
  auto r2 = validate_cascade(unsorted);
  CHECK_FALSE(r2.standard_order);

  CascadeWeights heavy{WeightedTree(TreeShape({2, 2}), {0.6, 0.4, 0.4, 0.3, 0.2, 0.1}), 0.0};
  auto r3 = validate_cascade(heavy);
  CHECK_FALSE(r3.parent_dominates);

  CascadeWeights improper{WeightedTree(TreeShape({2}), {0.5, 0.3}), 0.2};
  auto r4 = validate_cascade(improper);
  CHECK(r4.valid());
  CHECK_FALSE(r4.proper);
}

TEST_CASE("ROSt embedding inner products") {
  CascadeWeights c{WeightedTree(TreeShape({2, 2}), {0.6, 0.3, 0.4, 0.2, 0.2, 0.1}), 0.1};
  auto mu = embed_rost(c, {0.4, 0.8});
  const auto& emb = mu.embedding();
  CHECK(mu.overlap(0, 1) == 0.4);  // (1,1),(1,2)
  CHECK(mu.overlap(0, 2) == 0.0);  // (1,1),(2,1)
  CHECK(mu.overlap(0, 0) == 0.8);
  CHECK(mu.overlap(mu.dust_atom(), 0) == 0.0);
  CHECK(mu.overlap(mu.dust_atom(), mu.dust_atom()) == 0.8);
  CHECK(mu.leaf(3) == Vertex{2, 2});
  for (std::size_t i = 0; i < mu.leaf_count(); ++i) {
    auto hi = emb.leaf_vector(mu.leaf(i));
    CHECK(RostEmbedding::inner(hi, emb.dust_vector()) == 0.0);
    for (std::size_t j = 0; j < mu.leaf_count(); ++j)
      CHECK(RostEmbedding::inner(hi, emb.leaf_vector(mu.leaf(j))) == doctest::Approx(mu.overlap(i, j)).epsilon(1e-15));
  }
  CHECK(RostEmbedding::inner(emb.dust_vector(), emb.dust_vector()) == doctest::Approx(0.8));
  CHECK(std::accumulate(mu.masses().begin(), mu.masses().end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(check_measure(mu).ok());
  CHECK_THROWS(embed_rost(c, {0.4}));
}

TEST_CASE("RPC overlap law") {
  auto law = rpc_overlap_law({{0.3, 0.7}, {0.4, 0.8}});
  CHECK(law.atoms == std::vector<double>{0.0, 0.4, 0.8});
  CHECK(law.masses[0] == doctest::Approx(0.3));
  CHECK(law.masses[1] == doctest::Approx(0.4));
  CHECK(law.masses[2] == doctest::Approx(0.3));
  auto one = rpc_overlap_law({{0.35}, {0.6}});
  CHECK(one.masses[0] == doctest::Approx(0.35));
  CHECK(one.masses[1] == doctest::Approx(0.65));
  CHECK(one.total() == doctest::Approx(1.0));
}

TEST_CASE("sampled overlap matrices of an RPC") {
  RPCParams p{{0.3, 0.6}, {0.4, 0.8}};
  auto rng = make_stream(8);
  auto c = sample_rpc(p, {6, 6}, rng);
  auto mu = embed_rost(c, p.q);
  auto one = sample_overlap_matrix(mu, 1, rng);
  CHECK(one.n == 1);
  CHECK(one.at(0, 0) == 0.8);
  for (int rep = 0; rep < 20; ++rep) {
    auto M = sample_overlap_matrix(mu, 8, rng);
    CHECK(M.symmetric());
    CHECK(M.is_psd());
    for (std::size_t i = 0; i < M.n; ++i)
      for (std::size_t j = 0; j < M.n; ++j) {
        double x = M.at(i, j);
        CHECK((x == 0.0 || x == 0.4 || x == 0.8));
        for (std::size_t k = 0; k < M.n; ++k) CHECK(M.at(i, j) >= std::min(M.at(i, k), M.at(k, j)));
      }
  }
  ExplicitMeasure empty({0.0, 0.0}, {{1, 0}, {0, 1}});
  CHECK_THROWS(sample_overlap_matrix(empty, 2, rng));
}

TEST_CASE("gamma map") {
  std::vector<double> q{0.4, 0.8};
  CHECK(gamma_map(0.5, q) == 0.4);
  CHECK(gamma_map(0.9, q) == 0.8);
  CHECK(gamma_map(0.2, q) == 0.0);
  CHECK(gamma_map(-0.3, q) == 0.0);
  CHECK(gamma_map(0.4, q) == 0.4);
  for (int i = -100; i <= 100; ++i) {
    double x = i / 100.0;
    CHECK(gamma_map(gamma_map(x, q), q) == gamma_map(x, q));
  }
}

namespace {

OverlapMatrix matrix(std::size_t n, std::vector<double> d) {
  OverlapMatrix M;
  M.n = n;
  M.data = std::move(d);
  return M;
}

}  // namespace

TEST_CASE("overlap tree encoding") {
  std::vector<double> q{0.4, 0.8};
  auto two = encode_overlap_tree(matrix(2, {0.8, 0.4, 0.4, 0.8}), q);
  CHECK(two.depth == 3);
  CHECK(meet(two.paths[0], two.paths[1]).size() == 1);

  auto three = encode_overlap_tree(matrix(3, {0.8, 0.8, 0, 0.8, 0.8, 0, 0, 0, 0.8}), q);
  CHECK(meet(three.paths[0], three.paths[2]).empty());
  CHECK(meet(three.paths[0], three.paths[1]).size() == 2);
  for (const auto& p : three.paths) CHECK(p.size() == 3);

  CHECK_THROWS_AS(encode_overlap_tree(matrix(3, {0.8, 0.8, 0, 0.8, 0.8, 0.4, 0, 0.4, 0.8}), q), NonUltrametricError);
  try {
    encode_overlap_tree(matrix(3, {0.8, 0.8, 0, 0.8, 0.8, 0.4, 0, 0.4, 0.8}), q);
  } catch (const NonUltrametricError& e) {
    CHECK(std::string(e.what()).find("triple") != std::string::npos);
  }
  CHECK_THROWS_AS(encode_overlap_tree(matrix(2, {0.8, 0.5, 0.5, 0.8}), q), std::invalid_argument);
}

TEST_CASE("overlap tree round trip on sampled RPC matrices") {
  RPCParams p{{0.2, 0.5, 0.8}, {0.3, 0.6, 0.9}};
  auto rng = make_stream(12);
  for (int rep = 0; rep < 30; ++rep) {
    auto c = sample_rpc(p, {3, 3, 3}, rng);
    auto mu = embed_rost(c, p.q);
    auto M = sample_overlap_matrix(mu, 6, rng);
    auto back = decode_overlap_tree(encode_overlap_tree(M, p.q));
    // brute-force reconstruction: every entry reproduced
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 6; ++j) CHECK(back.at(i, j) == M.at(i, j));
  }
}

TEST_CASE("serialization") {
  RPCParams p{{0.3, 0.7}, {0.4, 0.8}};
  auto rng = make_stream(13);
  auto c = sample_rpc(p, {3, 2}, rng);
  auto j = cascade_to_json(c);
  CHECK(j["shape"] == Json::array({3, 2}));
  CHECK(j["weights"].contains("[1,2]"));
  auto back = cascade_from_json(Json::parse(j.dump()));
  CHECK(back.tree.weights == c.tree.weights);
  CHECK(back.dust == c.dust);

  auto mu = embed_rost(c, p.q);
  auto M = sample_overlap_matrix(mu, 3, rng);
  auto csv = overlap_matrix_csv(M);
  CHECK(csv.rfind("n,3\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}
