#include "ultra/cascades.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "ultra/rates.hpp"

namespace ultra {

namespace {

void require_theta(double theta) {
  if (!(theta > 0 && theta < 1)) throw std::invalid_argument("theta must lie in (0,1)");
}

// E T^s for T = Σ of PPP(μ_θ) atoms (positive θ-stable), s < θ
double stable_moment(double theta, double s) {
  return std::exp(std::lgamma(1.0 - s / theta) + (s / theta) * std::lgamma(1.0 - theta) -
                  std::lgamma(1.0 - s));
}

}  // namespace

void RPCParams::validate() const {
  if (q.empty()) throw std::invalid_argument("cascade depth must be >= 1");
  if (zeta.size() != q.size()) throw std::invalid_argument("zeta and q must both have length r");
  for (std::size_t k = 0; k < zeta.size(); ++k) {
    if (!(zeta[k] > 0 && zeta[k] < 1)) throw std::invalid_argument("zeta levels must lie in (0,1)");
    if (k && !(zeta[k] > zeta[k - 1])) throw std::invalid_argument("zeta must be strictly increasing");
    if (!(q[k] > 0 && q[k] <= 1)) throw std::invalid_argument("q levels must lie in (0,1]");
    if (k && !(q[k] > q[k - 1])) throw std::invalid_argument("q must be strictly increasing");
  }
}

std::vector<double> unit_arrivals(std::size_t K, Rng& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> g(K);
  double t = 0;
  for (auto& x : g) x = (t += e(rng));
  return g;
}

std::vector<double> ppp_from_arrivals(double theta, const std::vector<double>& arrivals) {
  require_theta(theta);
  std::vector<double> u(arrivals.size());
  for (std::size_t k = 0; k < u.size(); ++k) u[k] = std::pow(arrivals[k], -1.0 / theta);
  return u;
}

std::vector<double> sample_ppp_ranked(double theta, std::size_t K, Rng& rng) {
  require_theta(theta);
  if (K < 1) throw std::invalid_argument("K must be >= 1");
  return ppp_from_arrivals(theta, unit_arrivals(K, rng));
}

PDSample pd_from_arrivals(double theta, std::vector<double> arrivals, double phi_tol) {
  require_theta(theta);
  if (arrivals.empty()) throw std::invalid_argument("K must be >= 1");
  PDSample s;
  s.theta = theta;
  s.atoms = ppp_from_arrivals(theta, arrivals);
  s.arrivals = std::move(arrivals);
  s.S = std::accumulate(s.atoms.begin(), s.atoms.end(), 0.0);
  for (auto& v : s.atoms) v /= s.S;
  s.L = std::pow(s.S, -theta);
  auto K = s.atoms.size();
  s.tail_flagged = K < 2 || rates::phi_bound(static_cast<double>(K), theta) > phi_tol;
  return s;
}

PDSample sample_pd(double theta, std::size_t K, Rng& rng, double phi_tol) {
  require_theta(theta);
  if (K < 1) throw std::invalid_argument("K must be >= 1");
  return pd_from_arrivals(theta, unit_arrivals(K, rng), phi_tol);
}

CascadeWeights sample_rpc(const RPCParams& params, const std::vector<int>& m, Rng& rng) {
  params.validate();
  const int r = params.r();
  if (static_cast<int>(m.size()) != r) throw std::invalid_argument("need one truncation per level");
  TreeShape shape(m);

  // Scale of an unexplored depth-(k+1) subtree seen from its parent's PPP:
  // c_{k+1} = (E X_{k+1}^{ζ_k})^{1/ζ_k}, with X_r = 1 and X_{k+1} = c_{k+2} T_{ζ_{k+1}} in law.
  std::vector<double> scale(static_cast<std::size_t>(r) + 1, 1.0);
  for (int k = r - 2; k >= 0; --k) {
    double zk = params.zeta[static_cast<std::size_t>(k)], zn = params.zeta[static_cast<std::size_t>(k + 1)];
    scale[static_cast<std::size_t>(k + 1)] =
        scale[static_cast<std::size_t>(k + 2)] * std::pow(stable_moment(zn, zk), 1.0 / zk);
  }

  // u[k]: child atoms of the depth-k vertices (depth k+1, lexicographic); tail[k]: missing mass per vertex
  std::vector<std::vector<double>> u(static_cast<std::size_t>(r)), tail(static_cast<std::size_t>(r));
  std::exponential_distribution<double> expo(1.0);
  for (int k = 0; k < r; ++k) {
    double z = params.zeta[static_cast<std::size_t>(k)];
    auto parents = shape.level_size(k);
    auto mk = static_cast<std::size_t>(m[static_cast<std::size_t>(k)]);
    auto& uk = u[static_cast<std::size_t>(k)];
    auto& tk = tail[static_cast<std::size_t>(k)];
    uk.resize(parents * mk);
    tk.resize(parents);
    double c = scale[static_cast<std::size_t>(k + 1)] * z / (1.0 - z);
    for (std::size_t p = 0; p < parents; ++p) {
      double g = 0;
      for (std::size_t j = 0; j < mk; ++j) {
        g += expo(rng);
        uk[p * mk + j] = std::exp(-std::log(g) / z);
      }
      // conditional mean of Σ_{n>m} Γ_n^{-1/ζ} given Γ_m, times the subtree scale
      tk[p] = c * std::pow(g, 1.0 - 1.0 / z);
    }
  }

  // subtree totals, bottom-up
  std::vector<std::vector<double>> S(static_cast<std::size_t>(r) + 1);
  S[static_cast<std::size_t>(r)].assign(shape.level_size(r), 1.0);
  for (int k = r - 1; k >= 0; --k) {
    auto parents = shape.level_size(k);
    auto mk = static_cast<std::size_t>(m[static_cast<std::size_t>(k)]);
    auto& sk = S[static_cast<std::size_t>(k)];
    const auto& below = S[static_cast<std::size_t>(k + 1)];
    const auto& uk = u[static_cast<std::size_t>(k)];
    sk.resize(parents);
    for (std::size_t p = 0; p < parents; ++p) {
      double s = tail[static_cast<std::size_t>(k)][p];
      for (std::size_t j = 0; j < mk; ++j) s += uk[p * mk + j] * below[p * mk + j];
      sk[p] = s;
    }
  }
  const double Z = S[0][0];

  WeightedTree raw(shape);
  std::vector<double> w{1.0}, next;
  double leaf_total = 0;
  for (int k = 0; k < r; ++k) {
    auto mk = static_cast<std::size_t>(m[static_cast<std::size_t>(k)]);
    auto off = shape.level_offset(k + 1);
    next.resize(w.size() * mk);
    for (std::size_t p = 0; p < w.size(); ++p)
      for (std::size_t j = 0; j < mk; ++j) {
        std::size_t c = p * mk + j;
        next[c] = w[p] * u[static_cast<std::size_t>(k)][c];
        raw.weights[off + c] = next[c] * S[static_cast<std::size_t>(k + 1)][c] / Z;
      }
    std::swap(w, next);
  }
  for (double x : w) leaf_total += x;

  CascadeWeights out;
  out.tree = standard_order(raw).tree;
  out.dust = std::max(0.0, (Z - leaf_total) / Z);
  return out;
}

CascadeWeights sample_rpc(const RPCParams& params, int m, Rng& rng) {
  if (m < 1) throw std::invalid_argument("truncation must be >= 1");
  return sample_rpc(params, std::vector<int>(params.q.size(), m), rng);
}

CascadeReport validate_cascade(const CascadeWeights& c, double tol) {
  CascadeReport rep;
  const auto& shape = c.shape();
  const auto& w = c.tree.weights;
  auto note = [&](bool& flag, std::string msg) {
    flag = false;
    rep.violations.push_back(std::move(msg));
  };
  for (double x : w)
    if (x < 0 || x > 1 + tol) {
      note(rep.level_sums, "weight outside [0,1]");
      break;
    }
  for (int k = 0; k < shape.depth(); ++k) {
    auto parents = shape.level_size(k);
    auto mk = static_cast<std::size_t>(shape.m[static_cast<std::size_t>(k)]);
    auto off = shape.level_offset(k + 1);
    double level = 0;
    for (std::size_t p = 0; p < parents; ++p) {
      double sum = 0;
      for (std::size_t j = 0; j < mk; ++j) {
        double x = w[off + p * mk + j];
        sum += x;
        level += x;
        if (j && x > w[off + p * mk + j - 1] + tol && rep.standard_order)
          note(rep.standard_order, "children of a depth-" + std::to_string(k) + " vertex not decreasing");
      }
      double parent = k == 0 ? 1.0 : w[shape.level_offset(k) + p];
      if (sum > parent + tol) {
        if (rep.parent_dominates)
          note(rep.parent_dominates, "children outweigh parent at depth " + std::to_string(k));
      } else if (sum < parent - tol) {
        rep.proper = false;
      }
    }
    if (level > 1 + tol) note(rep.level_sums, "depth-" + std::to_string(k + 1) + " total exceeds 1");
  }
  if (c.dust < -tol || c.dust > 1 + tol) note(rep.level_sums, "dust outside [0,1]");
  if (c.dust > tol) rep.proper = false;
  if (!rep.valid()) rep.proper = false;
  return rep;
}

std::vector<std::pair<std::size_t, double>> RostEmbedding::leaf_vector(const Vertex& leaf) const {
  std::vector<std::pair<std::size_t, double>> out;
  Vertex prefix;
  double prev = 0;
  for (std::size_t d = 0; d < leaf.size(); ++d) {
    prefix.push_back(leaf[d]);
    out.emplace_back(vertex_index(prefix, shape), std::sqrt(q[d] - prev));
    prev = q[d];
  }
  return out;
}

std::vector<std::pair<std::size_t, double>> RostEmbedding::dust_vector() const {
  return {{shape.size(), std::sqrt(q.back())}};
}

double RostEmbedding::inner(const std::vector<std::pair<std::size_t, double>>& a,
                            const std::vector<std::pair<std::size_t, double>>& b) {
  double s = 0;
  for (const auto& [i, x] : a)
    for (const auto& [j, y] : b)
      if (i == j) s += x * y;
  return s;
}

RostMeasure::RostMeasure(const CascadeWeights& c, std::vector<double> q) {
  const auto& shape = c.shape();
  if (static_cast<int>(q.size()) != shape.depth())
    throw std::invalid_argument("q length must equal the cascade depth");
  for (std::size_t k = 0; k < q.size(); ++k)
    if (!(q[k] > 0 && q[k] <= 1) || (k && !(q[k] > q[k - 1])))
      throw std::invalid_argument("q must be strictly increasing in (0,1]");
  emb_ = RostEmbedding{shape, std::move(q)};
  int r = shape.depth();
  leaf_count_ = shape.level_size(r);
  divisor_.assign(static_cast<std::size_t>(r) + 1, 1);
  for (int k = r - 1; k >= 0; --k)
    divisor_[static_cast<std::size_t>(k)] =
        divisor_[static_cast<std::size_t>(k + 1)] * static_cast<std::size_t>(shape.m[static_cast<std::size_t>(k)]);
  auto leaves = c.tree.level(r);
  std::vector<double> masses(leaves.begin(), leaves.end());
  masses.push_back(c.dust);
  // absorb rounding so the masses sum to one
  double total = std::accumulate(masses.begin(), masses.end(), 0.0);
  for (auto& x : masses) x /= total;
  set_masses(std::move(masses));
}

std::size_t RostMeasure::ancestor(std::size_t i, int k) const { return i / divisor_[static_cast<std::size_t>(k)]; }

double RostMeasure::overlap(std::size_t i, std::size_t j) const {
  const auto& q = emb_.q;
  bool di = is_dust(i), dj = is_dust(j);
  if (di || dj) return (di && dj) ? q.back() : 0.0;
  if (i == j) return q.back();
  int r = static_cast<int>(q.size());
  int k = r;
  while (k > 0 && ancestor(i, k) != ancestor(j, k)) --k;
  return k == 0 ? 0.0 : q[static_cast<std::size_t>(k - 1)];
}

Vertex RostMeasure::leaf(std::size_t i) const {
  if (is_dust(i)) throw std::invalid_argument("dust atom is not a leaf");
  return vertex_at(emb_.shape.level_offset(emb_.shape.depth()) + i, emb_.shape);
}

std::string RostMeasure::label(std::size_t i) const { return is_dust(i) ? "dust" : to_string(leaf(i)); }

RostMeasure embed_rost(const CascadeWeights& c, const std::vector<double>& q) { return RostMeasure(c, q); }

DiscreteLaw rpc_overlap_law(const RPCParams& params) {
  params.validate();
  DiscreteLaw law;
  double prev = 0;
  int r = params.r();
  for (int k = 0; k <= r; ++k) {
    double z = k < r ? params.zeta[static_cast<std::size_t>(k)] : 1.0;
    law.atoms.push_back(k == 0 ? 0.0 : params.q[static_cast<std::size_t>(k - 1)]);
    law.masses.push_back(z - prev);
    prev = z;
  }
  return law;
}

bool OverlapMatrix::symmetric() const {
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (at(i, j) != at(j, i)) return false;
  return true;
}

double OverlapMatrix::min_eigenvalue() const {
  if (n == 0) return 0;
  Eigen::MatrixXd A(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = at(i, j);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

OverlapMatrix sample_overlap_matrix(const AtomicMeasure& mu, std::size_t n, Rng& rng) {
  OverlapMatrix M;
  M.n = n;
  M.atoms.resize(n);
  for (auto& a : M.atoms) a = mu.draw(rng);
  M.data.resize(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) M.data[i * n + j] = M.data[j * n + i] = mu.overlap(M.atoms[i], M.atoms[j]);
  return M;
}

double gamma_map(double x, const std::vector<double>& q) {
  double level = 0;
  for (double qk : q)
    if (x >= qk) level = qk;
  return level;
}

NonUltrametricError::NonUltrametricError(std::size_t i_, std::size_t j_, std::size_t k_)
    : std::runtime_error("overlap matrix is not ultrametric at triple (" + std::to_string(i_) + "," +
                         std::to_string(j_) + "," + std::to_string(k_) + ")"),
      i(i_), j(j_), k(k_) {}

OverlapTree encode_overlap_tree(const OverlapMatrix& M, const std::vector<double>& q, double tol) {
  const std::size_t n = M.n;
  const int r = static_cast<int>(q.size());
  OverlapTree t;
  t.depth = r + 1;
  t.levels.push_back(0.0);
  t.levels.insert(t.levels.end(), q.begin(), q.end());
  if (n == 0) return t;
  t.self_overlap = M.at(0, 0);
  for (std::size_t i = 0; i < n; ++i)
    if (std::abs(M.at(i, i) - t.self_overlap) > tol)
      throw std::invalid_argument("diagonal entries must share one self-overlap");

  std::vector<int> lev(n * n, r);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      double x = M.at(i, j);
      int found = -1;
      for (int k = 0; k <= r; ++k)
        if (std::abs(x - t.levels[static_cast<std::size_t>(k)]) <= tol) found = k;
      if (found < 0) {
        std::ostringstream os;
        os << "entry (" << i << "," << j << ") = " << x << " is not a q level";
        throw std::invalid_argument(os.str());
      }
      lev[i * n + j] = found;
    }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) {
        if (i == j || j == k || i == k) continue;
        if (lev[i * n + j] < std::min(lev[i * n + k], lev[k * n + j])) throw NonUltrametricError(i, j, k);
      }

  t.paths.assign(n, Vertex{});
  // representative replica of each group at the current depth
  for (int d = 1; d <= r + 1; ++d) {
    std::vector<std::size_t> rep(n);
    for (std::size_t i = 0; i < n; ++i) {
      rep[i] = i;
      for (std::size_t j = 0; j < i; ++j)
        if (d <= r && lev[i * n + j] >= d) {
          rep[i] = rep[j];
          break;
        }
    }
    // child index = order of first appearance among groups with the same parent path
    std::vector<std::size_t> firsts;
    for (std::size_t i = 0; i < n; ++i) {
      if (rep[i] != i) {
        t.paths[i].push_back(t.paths[rep[i]].back());
        continue;
      }
      int idx = 1;
      for (std::size_t f : firsts)
        if (std::equal(t.paths[f].begin(), t.paths[f].end() - 1, t.paths[i].begin())) ++idx;
      t.paths[i].push_back(idx);
      firsts.push_back(i);
    }
  }
  return t;
}

OverlapMatrix decode_overlap_tree(const OverlapTree& t) {
  OverlapMatrix M;
  M.n = t.paths.size();
  M.data.assign(M.n * M.n, 0.0);
  for (std::size_t i = 0; i < M.n; ++i)
    for (std::size_t j = 0; j < M.n; ++j)
      M.data[i * M.n + j] = i == j ? t.self_overlap : t.levels[meet(t.paths[i], t.paths[j]).size()];
  return M;
}

Json cascade_to_json(const CascadeWeights& c) {
  Json j;
  j["shape"] = c.shape().m;
  Json w = Json::object();
  auto verts = enumerate(c.shape());
  for (std::size_t i = 0; i < verts.size(); ++i) w[to_string(verts[i])] = c.tree.weights[i];
  j["weights"] = std::move(w);
  j["dust"] = c.dust;
  return j;
}

CascadeWeights cascade_from_json(const Json& j) {
  CascadeWeights c;
  TreeShape shape(j.at("shape").get<std::vector<int>>());
  c.tree = WeightedTree(shape);
  for (const auto& [key, val] : j.at("weights").items()) c.tree.at(parse_vertex(key)) = val.get<double>();
  c.dust = j.at("dust").get<double>();
  return c;
}

std::string overlap_matrix_csv(const OverlapMatrix& M) {
  std::ostringstream os;
  os << "n," << M.n << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < M.n; ++i) {
    for (std::size_t j = 0; j < M.n; ++j) os << (j ? "," : "") << M.at(i, j);
    os << '\n';
  }
  return os.str();
}

}  // namespace ultra
