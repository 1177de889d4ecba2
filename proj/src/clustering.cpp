#include "ultra/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace ultra {

namespace {

// Parent and depth of each vertex in enumerate order.
struct FlatTree {
  std::vector<Vertex> vertices;
  std::vector<int> depth;
  std::vector<std::size_t> parent;  // kNoCluster for depth 1

  explicit FlatTree(const TreeShape& shape) : vertices(enumerate(shape)) {
    depth.reserve(vertices.size());
    parent.reserve(vertices.size());
    for (const auto& v : vertices) {
      depth.push_back(static_cast<int>(v.size()));
      parent.push_back(v.size() == 1 ? kNoCluster : vertex_index(ultra::parent(v), shape));
    }
  }
};

double set_mass(const AtomicMeasure& mu, const std::vector<std::size_t>& s) {
  double m = 0;
  for (std::size_t x : s) m += mu.mass(x);
  return m;
}

double intersection_mass(const AtomicMeasure& mu, const std::vector<std::size_t>& a,
                         const std::vector<std::size_t>& b) {
  double m = 0;
  auto i = a.begin(), j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j)
      ++i;
    else if (*j < *i)
      ++j;
    else {
      m += mu.mass(*i);
      ++i;
      ++j;
    }
  }
  return m;
}

void check_levels(const std::vector<double>& q, int depth) {
  if (static_cast<int>(q.size()) < depth) throw std::invalid_argument("q: need one radius per depth");
}

void check_increasing(const std::vector<double>& q) {
  if (q.empty()) throw std::invalid_argument("q: empty sequence");
  for (std::size_t k = 0; k < q.size(); ++k) {
    if (!(q[k] > 0 && q[k] <= 1)) throw std::invalid_argument("q: levels must lie in (0,1]");
    if (k > 0 && !(q[k] > q[k - 1])) throw std::invalid_argument("q: levels must be strictly increasing");
  }
}

}  // namespace

bool AdmissibleReport::window_ok() const {
  return std::all_of(window_mass.begin(), window_mass.end(), [&](double m) { return m <= tol.atom_cap; });
}

bool AdmissibleReport::gap_ok() const {
  return std::all_of(gap_mass.begin(), gap_mass.end(), [&](double m) { return m >= tol.gap_mass; });
}

bool AdmissibleReport::edges_ok() const {
  auto in = [&](double m) { return m >= tol.edge_mass && m <= 1 - tol.edge_mass; };
  return in(lower_edge) && in(upper_edge);
}

Json AdmissibleReport::to_json() const {
  return Json{{"q", q},
              {"window_mass", window_mass},
              {"gap_mass", gap_mass},
              {"lower_edge", lower_edge},
              {"upper_edge", upper_edge},
              {"tolerances",
               {{"window", tol.window}, {"atom_cap", tol.atom_cap}, {"gap_mass", tol.gap_mass}, {"edge_mass", tol.edge_mass}}},
              {"window_ok", window_ok()},
              {"gap_ok", gap_ok()},
              {"edges_ok", edges_ok()},
              {"ok", ok()}};
}

AdmissibleReport validate_admissible(const DiscreteLaw& law, const std::vector<double>& q,
                                     const AdmissibleTolerances& tol) {
  check_increasing(q);
  AdmissibleReport rep;
  rep.q = q;
  rep.tol = tol;
  for (double qk : q) rep.window_mass.push_back(law.mass_in(qk - tol.window, qk + tol.window, true, true));
  for (std::size_t k = 0; k + 1 < q.size(); ++k) rep.gap_mass.push_back(law.mass_in(q[k], q[k + 1]));
  rep.lower_edge = law.mass_in(0.0, q.front());
  rep.upper_edge = law.mass_in(q.back(), 1.0);
  return rep;
}

std::vector<double> interlacing_levels(const std::vector<double>& q) {
  check_increasing(q);
  std::vector<double> out;
  double prev = 0;
  for (double qk : q) {
    out.push_back(0.5 * (prev + qk));
    prev = qk;
  }
  return out;
}

BallFamily build_balls(const AtomicMeasure& mu, const TreeShape& shape, std::vector<std::size_t> centers,
                       const std::vector<double>& q) {
  check_levels(q, shape.depth());
  if (centers.size() != shape.size()) throw std::invalid_argument("build_balls: one center per vertex");
  for (std::size_t c : centers)
    if (c >= mu.size()) throw std::invalid_argument("build_balls: center outside the measure");
  BallFamily fam;
  fam.shape = shape;
  fam.q = q;
  fam.centers = std::move(centers);
  fam.sets.resize(shape.size());
  std::vector<std::size_t> all(mu.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  for (int k = 1; k <= shape.depth(); ++k) {
    const std::size_t off = shape.level_offset(k), n = shape.level_size(k);
    const double qk = q[k - 1];
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t idx = off + j;
      const auto& pool = k == 1 ? all : fam.sets[shape.level_offset(k - 1) + j / shape.m[k - 1]];
      const std::size_t c = fam.centers[idx];
      auto& out = fam.sets[idx];
      for (std::size_t x : pool)
        if (mu.overlap(c, x) >= qk) out.push_back(x);
    }
  }
  return fam;
}

BallFamily build_balls_from_map(const AtomicMeasure& mu, const TreeShape& shape,
                                const std::map<Vertex, std::size_t>& centers, const std::vector<double>& q) {
  std::vector<std::size_t> flat(shape.size(), kNoCluster);
  for (const auto& [v, c] : centers) {
    if (!shape.contains(v) || v.empty()) throw std::invalid_argument("build_balls: center vertex outside the shape");
    flat[vertex_index(v, shape)] = c;
  }
  if (std::find(flat.begin(), flat.end(), kNoCluster) != flat.end())
    throw std::invalid_argument("build_balls: centers must cover the shape");
  return build_balls(mu, shape, std::move(flat), q);
}

BallWeights ball_weights(const AtomicMeasure& mu, const BallFamily& family) {
  BallWeights W;
  W.shape = family.shape;
  const std::size_t V = family.sets.size();
  W.single.resize(V);
  W.pair.assign(V * V, 0.0);
  for (std::size_t i = 0; i < V; ++i) W.single[i] = set_mass(mu, family.sets[i]);
  for (std::size_t i = 0; i < V; ++i) {
    W.pair[i * V + i] = W.single[i];
    for (std::size_t j = i + 1; j < V; ++j)
      W.pair[i * V + j] = W.pair[j * V + i] = intersection_mass(mu, family.sets[i], family.sets[j]);
  }
  return W;
}

Json ExhaustionCheck::to_json() const {
  return Json{{"depth_sums", depth_sums}, {"min_slack", min_slack},       {"max_slack", max_slack},
              {"cousin_total", cousin_total}, {"cousin_limit", cousin_limit}, {"depth_ok", depth_ok},
              {"slack_ok", slack_ok},     {"cousin_ok", cousin_ok},       {"boundary", boundary},
              {"ok", ok()}};
}

ExhaustionCheck check_exhaustion_event(const BallWeights& W, double eps, double delta) {
  const TreeShape& shape = W.shape;
  const int r = shape.depth();
  const std::size_t V = W.single.size();
  if (V != shape.size()) throw std::invalid_argument("check_exhaustion_event: weights do not cover the shape");
  ExhaustionCheck c;
  c.depth_ok = true;
  for (int k = 1; k <= r; ++k) {
    double s = 0;
    for (std::size_t j = 0; j < shape.level_size(k); ++j) s += W.single[shape.level_offset(k) + j];
    c.depth_sums.push_back(s);
    if (!(s > 1 - eps)) c.depth_ok = false;
  }
  c.slack_ok = true;
  c.min_slack = INFINITY;
  c.max_slack = -INFINITY;
  for (int k = 1; k < r; ++k) {
    const std::size_t off = shape.level_offset(k), coff = shape.level_offset(k + 1);
    const std::size_t mk = static_cast<std::size_t>(shape.m[k]);
    for (std::size_t j = 0; j < shape.level_size(k); ++j) {
      double kids = 0;
      for (std::size_t t = 0; t < mk; ++t) kids += W.single[coff + j * mk + t];
      double slack = W.single[off + j] - kids;
      c.slacks.push_back(slack);
      c.min_slack = std::min(c.min_slack, slack);
      c.max_slack = std::max(c.max_slack, slack);
      if (!(slack > 0 && slack < eps)) c.slack_ok = false;
      if (slack == 0 || slack == eps) c.boundary = true;
    }
  }
  if (c.slacks.empty()) c.min_slack = c.max_slack = 0;
  FlatTree ft(shape);
  for (std::size_t i = 0; i < V; ++i)
    for (std::size_t j = i + 1; j < V; ++j)
      if (relation(ft.vertices[i], ft.vertices[j]) == Relation::cousins) c.cousin_total += W.pair[i * V + j];
  c.cousin_limit = delta / (static_cast<double>(V) * static_cast<double>(V));
  c.cousin_ok = c.cousin_total >= 0 && c.cousin_total < c.cousin_limit;
  return c;
}

TreeShape greedy_tree_shape(const WeightedTree& masses, double eps) {
  const int r = masses.shape.depth();
  if (r < 1) throw std::invalid_argument("greedy_tree_shape: empty tree");
  if (eps >= 1) return TreeShape(std::vector<int>(r, 1));
  std::vector<int> m;
  // depth 1: least count with cumulative mass above 1 - ε
  {
    auto lvl = masses.level(1);
    double s = 0;
    int c = 0;
    while (c < static_cast<int>(lvl.size()) && !(s > 1 - eps)) s += lvl[c++];
    if (!(s > 1 - eps)) throw std::domain_error("greedy_tree_shape: depth 1 cannot reach 1 - eps");
    m.push_back(std::max(c, 1));
  }
  for (int k = 2; k <= r; ++k) {
    TreeShape partial(m);
    auto parents = enumerate(partial);
    parents.erase(std::remove_if(parents.begin(), parents.end(), [&](const Vertex& v) { return static_cast<int>(v.size()) != k - 1; }),
                  parents.end());
    const int avail = masses.shape.m[k - 1];
    int mt = 1;
    for (const auto& a : parents) {
      double target = masses.at(a) - eps, s = 0;
      int c = 0;
      while (c < avail && !(s > target)) {
        Vertex ch = a;
        ch.push_back(++c);
        s += masses.at(ch);
      }
      if (!(s > target)) throw std::domain_error("greedy_tree_shape: children cannot recover the parent mass");
      mt = std::max(mt, c);
    }
    // raise until the depth-k total clears 1 - ε
    auto total = [&](int mk) {
      double s = 0;
      for (const auto& a : parents)
        for (int j = 1; j <= mk; ++j) {
          Vertex ch = a;
          ch.push_back(j);
          s += masses.at(ch);
        }
      return s;
    };
    while (!(total(mt) > 1 - eps)) {
      if (mt >= avail) throw std::domain_error("greedy_tree_shape: depth " + std::to_string(k) + " cannot reach 1 - eps");
      ++mt;
    }
    m.push_back(mt);
  }
  return TreeShape(m);
}

std::optional<SearchResult> search_exhaustion(const AtomicMeasure& mu, const std::vector<double>& q, double eps,
                                              double delta, const TreeShape& shape, std::size_t M, Rng& rng,
                                              std::size_t* tried) {
  check_levels(q, shape.depth());
  if (M < 1) throw std::invalid_argument("search_exhaustion: M must be >= 1");
  const std::size_t V = shape.size();
  for (std::size_t i = 1; i <= M; ++i) {
    std::vector<std::size_t> centers(V);
    for (auto& c : centers) c = mu.draw(rng);
    auto fam = build_balls(mu, shape, std::move(centers), q);
    auto W = ball_weights(mu, fam);
    auto chk = check_exhaustion_event(W, eps, delta);
    if (chk.ok()) {
      if (tried) *tried = i;
      return SearchResult{std::move(fam), std::move(W), std::move(chk), i};
    }
  }
  if (tried) *tried = M;
  return std::nullopt;
}

ClusterDecomposition clean_clusters(const BallFamily& family, const AtomicMeasure& mu) {
  const TreeShape& shape = family.shape;
  const std::size_t V = family.sets.size();
  FlatTree ft(shape);
  // vertices whose ball holds each atom
  std::vector<std::vector<std::size_t>> holders(mu.size());
  for (std::size_t v = 0; v < V; ++v)
    for (std::size_t x : family.sets[v]) holders[x].push_back(v);

  ClusterDecomposition d;
  d.shape = shape;
  d.q = family.q;
  d.sets.resize(V);
  for (std::size_t v = 0; v < V; ++v)
    for (std::size_t x : family.sets[v]) {
      bool clash = std::any_of(holders[x].begin(), holders[x].end(), [&](std::size_t w) {
        return relation(ft.vertices[v], ft.vertices[w]) == Relation::cousins;
      });
      if (!clash) d.sets[v].push_back(x);
    }
  d.masses.resize(V);
  for (std::size_t v = 0; v < V; ++v) d.masses[v] = set_mass(mu, d.sets[v]);
  d.membership.assign(shape.depth(), std::vector<std::size_t>(mu.size(), kNoCluster));
  for (std::size_t v = 0; v < V; ++v)
    for (std::size_t x : d.sets[v]) d.membership[ft.depth[v] - 1][x] = v;

  double min_depth = INFINITY;
  for (int k = 1; k <= shape.depth(); ++k) {
    double s = 0;
    for (std::size_t j = 0; j < shape.level_size(k); ++j) s += d.masses[shape.level_offset(k) + j];
    d.depth_sums.push_back(s);
    min_depth = std::min(min_depth, s);
  }
  d.min_slack = INFINITY;
  d.max_slack = -INFINITY;
  std::vector<double> kids(V, 0.0);
  for (std::size_t v = 0; v < V; ++v)
    if (ft.parent[v] != kNoCluster) kids[ft.parent[v]] += d.masses[v];
  bool any = false;
  for (std::size_t v = 0; v < V; ++v)
    if (ft.depth[v] < shape.depth()) {
      double s = d.masses[v] - kids[v];
      d.min_slack = std::min(d.min_slack, s);
      d.max_slack = std::max(d.max_slack, s);
      any = true;
    }
  if (!any) d.min_slack = d.max_slack = 0;
  d.eps_achieved = std::max(1 - min_depth, d.max_slack);
  return d;
}

Json ClusterStats::to_json() const {
  Json gj = Json::array();
  for (const auto& p : g) gj.push_back({{"a", to_string(p.a)}, {"b", to_string(p.b)}, {"g", p.g}});
  return Json{{"a", a}, {"b", b}, {"f_total", f_total}, {"g_total", g_total}, {"f", f}, {"g", gj},
              {"mode", mode}, {"samples", samples}};
}

ClusterStats clustering_stats(const AtomicMeasure& mu, const ClusterDecomposition& dec, double eps, Rng* rng,
                              std::size_t mc_pairs, std::size_t exact_limit) {
  const TreeShape& shape = dec.shape;
  const std::size_t V = dec.sets.size();
  FlatTree ft(shape);
  ClusterStats st;
  st.a = eps;
  st.f.assign(V, 0.0);

  // sibling pairs γ < η sharing a parent (the root included)
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> pair_index;
  for (std::size_t i = 0; i < V; ++i)
    for (std::size_t j = i + 1; j < V; ++j)
      if (ft.depth[i] == ft.depth[j] && ft.parent[i] == ft.parent[j]) {
        pair_index[{i, j}] = st.g.size();
        st.g.push_back({ft.vertices[i], ft.vertices[j], 0.0});
      }

  auto below = [&](std::size_t v) { return dec.q[ft.depth[v] - 1] - eps; };
  auto above = [&](std::size_t v) { return dec.q[ft.depth[v] - 1] + eps; };

  if (mu.size() <= exact_limit) {
    st.mode = "exact";
    for (std::size_t v = 0; v < V; ++v) {
      const auto& C = dec.sets[v];
      double thr = below(v), s = 0;
      for (std::size_t x : C)
        for (std::size_t y : C)
          if (mu.overlap(x, y) <= thr) s += mu.mass(x) * mu.mass(y);
      st.f[v] = s;
    }
    for (auto& [ij, gi] : pair_index) {
      const auto& A = dec.sets[ij.first];
      const auto& B = dec.sets[ij.second];
      double thr = above(ij.first), s = 0;
      for (std::size_t x : A)
        for (std::size_t y : B)
          if (mu.overlap(x, y) >= thr) s += mu.mass(x) * mu.mass(y);
      st.g[gi].g = s;
    }
  } else {
    if (!rng) throw std::invalid_argument("clustering_stats: Monte Carlo mode needs an rng");
    st.mode = "mc";
    st.samples = mc_pairs;
    std::vector<double> fc(V, 0.0), gc(st.g.size(), 0.0);
    for (std::size_t t = 0; t < mc_pairs; ++t) {
      std::size_t x = mu.draw(*rng), y = mu.draw(*rng);
      double R = mu.overlap(x, y);
      for (int k = 1; k <= shape.depth(); ++k) {
        std::size_t a = dec.membership[k - 1][x], b = dec.membership[k - 1][y];
        if (a == kNoCluster || b == kNoCluster) continue;
        if (a == b) {
          if (R <= below(a)) fc[a] += 1;
        } else if (ft.parent[a] == ft.parent[b] && R >= above(a)) {
          // unordered pair: each ordering of (x, y) counts half
          gc[pair_index.at({std::min(a, b), std::max(a, b)})] += 0.5;
        }
      }
    }
    for (std::size_t v = 0; v < V; ++v) st.f[v] = fc[v] / static_cast<double>(mc_pairs);
    for (std::size_t i = 0; i < gc.size(); ++i) st.g[i].g = gc[i] / static_cast<double>(mc_pairs);
  }
  for (double f : st.f) {
    st.f_total += f;
    st.b = std::max(st.b, f);
  }
  for (const auto& p : st.g) {
    st.g_total += p.g;
    st.b = std::max(st.b, p.g);
  }
  return st;
}

WeightedTree pad_tree(const WeightedTree& w, const TreeShape& target) {
  if (target.depth() != w.shape.depth()) throw std::invalid_argument("pad_tree: depth mismatch");
  for (int k = 0; k < target.depth(); ++k)
    if (target.m[k] < w.shape.m[k]) throw std::invalid_argument("pad_tree: target shape is smaller");
  WeightedTree out(target);
  for (const auto& v : enumerate(w.shape)) out.at(v) = w.at(v);
  return out;
}

StandardOrdered cluster_masses(const ClusterDecomposition& dec, const std::optional<TreeShape>& pad) {
  WeightedTree w(dec.shape, dec.masses);
  return standard_order(pad ? pad_tree(w, *pad) : w);
}

Json OrthogonalReport::to_json() const {
  return Json{{"k0", k0},          {"eps", eps},           {"values", values}, {"masses", masses},
              {"pairs_ok", pairs_ok}, {"floors_ok", floors_ok}, {"pass", pass()}};
}

OrthogonalReport orthogonal_structure_check(const AtomicMeasure& mu, const std::vector<std::vector<std::size_t>>& clusters,
                                            double eps, std::size_t k0, const std::vector<double>& floors) {
  if (k0 < 1 || k0 > clusters.size()) throw std::invalid_argument("orthogonal_structure_check: need 1 <= k0 <= #clusters");
  OrthogonalReport rep;
  rep.k0 = k0;
  rep.eps = eps;
  rep.values.assign(k0 * k0, 0.0);
  rep.pairs_ok = true;
  for (std::size_t k = 0; k < k0; ++k) rep.masses.push_back(set_mass(mu, clusters[k]));
  for (std::size_t k = 0; k < k0; ++k)
    for (std::size_t l = 0; l < k0; ++l) {
      if (k == l) continue;
      double s = 0;
      for (std::size_t x : clusters[k])
        for (std::size_t y : clusters[l]) s += mu.mass(x) * mu.mass(y) * std::abs(mu.overlap(x, y));
      rep.values[k * k0 + l] = s;
      if (!(s < eps)) rep.pairs_ok = false;
    }
  for (std::size_t k = 0; k < std::min(k0, floors.size()); ++k)
    if (rep.masses[k] < floors[k]) rep.floors_ok = false;
  return rep;
}

Json PureStateResult::to_json() const {
  Json sets = Json::array();
  for (const auto& s : leaf_sets) sets.push_back(s.size());
  return Json{{"found", found},         {"block", block}, {"leaf_sizes", sets}, {"masses", masses},
              {"deviation", deviation}, {"h", h},         {"h_total", h_total}};
}

PureStateResult pure_state_variant(const AtomicMeasure& mu, const std::vector<double>& q_lower, double q_star,
                                   double Delta, double eps, double delta, const TreeShape& shape, std::size_t M,
                                   Rng& rng) {
  if (!(q_star > 0 && q_star <= 1)) throw std::invalid_argument("pure_state_variant: q_star must lie in (0,1]");
  if (!(Delta > 0)) throw std::invalid_argument("pure_state_variant: Delta must be positive");
  if (!(Delta < q_star)) throw std::invalid_argument("pure_state_variant: Delta must be below q_star");
  std::vector<double> q = q_lower;
  q.push_back(q_star - Delta);
  check_increasing(q);
  if (shape.depth() != static_cast<int>(q.size())) throw std::invalid_argument("pure_state_variant: shape depth mismatch");

  PureStateResult res;
  auto found = search_exhaustion(mu, q, eps, delta, shape, M, rng);
  if (!found) return res;
  res.found = true;
  res.block = found->block;
  auto dec = clean_clusters(found->family, mu);
  const std::size_t off = dec.leaf_offset(), n = shape.level_size(shape.depth());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dec.masses[off + a] > dec.masses[off + b]; });
  for (std::size_t j : order) {
    const auto& A = dec.sets[off + j];
    double dev = 0;
    for (std::size_t x : A)
      for (std::size_t y : A) dev += mu.mass(x) * mu.mass(y) * std::abs(mu.overlap(x, y) - q_star);
    std::size_t c = found->family.centers[off + j];
    std::vector<std::size_t> S;
    for (std::size_t x = 0; x < mu.size(); ++x)
      if (mu.overlap(x, c) >= q_star - Delta - eps) S.push_back(x);
    double h = 0;
    for (std::size_t x : S)
      for (std::size_t y : S)
        if (mu.overlap(x, y) >= q_star + Delta) h += mu.mass(x) * mu.mass(y);
    res.leaf_sets.push_back(A);
    res.masses.push_back(dec.masses[off + j]);
    res.deviation.push_back(dev);
    res.h.push_back(h);
    res.h_total += h;
  }
  return res;
}

namespace {

// Prefix closure of the vertices named by the terms, with per-term index lists.
struct MomentPlan {
  std::vector<Vertex> closure;
  std::vector<std::vector<std::vector<std::size_t>>> paths;  // term -> vertex in E -> closure ids along the path

  MomentPlan(const std::vector<MomentTerm>& terms, const std::vector<double>& q) {
    if (terms.empty()) throw std::invalid_argument("moment: no terms");
    std::set<Vertex> all;
    for (const auto& t : terms) {
      if (t.E.empty() || t.E.size() > 2) throw std::invalid_argument("moment: E must hold one or two vertices");
      if (t.power < 1) throw std::invalid_argument("moment: powers must be >= 1");
      for (const auto& v : t.E) {
        if (v.empty()) throw std::invalid_argument("moment: the root has no ball");
        for (int x : v)
          if (x < 1) throw std::invalid_argument("moment: vertex entries must be >= 1");
        check_levels(q, static_cast<int>(v.size()));
        for (std::size_t l = 1; l <= v.size(); ++l) all.insert(Vertex(v.begin(), v.begin() + l));
      }
    }
    closure.assign(all.begin(), all.end());
    for (const auto& t : terms) {
      std::vector<std::vector<std::size_t>> per;
      for (const auto& v : t.E) {
        std::vector<std::size_t> ids;
        for (std::size_t l = 1; l <= v.size(); ++l)
          ids.push_back(std::lower_bound(closure.begin(), closure.end(), Vertex(v.begin(), v.begin() + l)) - closure.begin());
        per.push_back(ids);
      }
      paths.push_back(per);
    }
  }
};

}  // namespace

EstimateWithError ball_moment(const AtomicMeasure& mu, const std::vector<double>& q,
                              const std::vector<MomentTerm>& terms, std::size_t samples, Rng& rng) {
  MomentPlan plan(terms, q);
  Accumulator acc;
  std::vector<std::size_t> centers(plan.closure.size());
  for (std::size_t s = 0; s < samples; ++s) {
    for (auto& c : centers) c = mu.draw(rng);
    double prod = 1;
    for (std::size_t t = 0; t < terms.size(); ++t) {
      double W = 0;
      for (std::size_t x = 0; x < mu.size(); ++x) {
        bool in = true;
        for (const auto& path : plan.paths[t])
          for (std::size_t id : path)
            if (!(mu.overlap(centers[id], x) >= q[plan.closure[id].size() - 1])) {
              in = false;
              break;
            }
        if (in) W += mu.mass(x);
      }
      prod *= std::pow(W, terms[t].power);
    }
    acc.add(prod);
  }
  return acc.estimate();
}

EstimateWithError replica_event_probability(const AtomicMeasure& mu, const std::vector<double>& q,
                                            const std::vector<MomentTerm>& terms, std::size_t samples, Rng& rng) {
  MomentPlan plan(terms, q);
  Accumulator acc;
  std::vector<std::size_t> centers(plan.closure.size());
  for (std::size_t s = 0; s < samples; ++s) {
    for (auto& c : centers) c = mu.draw(rng);
    bool event = true;
    for (std::size_t t = 0; t < terms.size(); ++t)
      for (int j = 0; j < terms[t].power; ++j) {
        std::size_t x = mu.draw(rng);
        for (const auto& path : plan.paths[t])
          for (std::size_t id : path)
            if (!(mu.overlap(centers[id], x) >= q[plan.closure[id].size() - 1])) event = false;
      }
    acc.add(event ? 1.0 : 0.0);
  }
  return acc.estimate();
}

Json decomposition_to_json(const ClusterDecomposition& dec, const AtomicMeasure& mu, bool atom_lists) {
  Json verts = Json::array();
  auto vs = enumerate(dec.shape);
  for (std::size_t v = 0; v < vs.size(); ++v) {
    Json e{{"vertex", to_string(vs[v])}, {"mass", dec.masses[v]}, {"count", dec.sets[v].size()}};
    if (atom_lists) {
      Json ids = Json::array();
      for (std::size_t x : dec.sets[v]) ids.push_back(mu.label(x));
      e["atoms"] = ids;
    }
    verts.push_back(e);
  }
  return Json{{"shape", dec.shape.m},       {"q", dec.q},
              {"clusters", verts},          {"depth_sums", dec.depth_sums},
              {"min_slack", dec.min_slack}, {"max_slack", dec.max_slack},
              {"eps_achieved", dec.eps_achieved}};
}

}  // namespace ultra
