#include "ultra/diagnostics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "ultra/parallel.hpp"

namespace ultra {

namespace {

// Above this many atoms the triple sum is not attempted.
constexpr std::size_t kExactTripleLimit = 256;
constexpr std::size_t kExactPairLimit = 4096;

struct DisorderPart {
  Accumulator acc;
  double exact = 0;
  bool is_exact = false;
};

// Mean over disorders. Between-disorder spread gives the error bar once there
// are at least two disorders, otherwise the within-measure spread does.
EstimateWithError combine(const std::vector<DisorderPart>& parts, const std::string& mode) {
  EstimateWithError e;
  e.mode = mode;
  if (parts.empty()) return e;
  Accumulator between;
  std::size_t inner = 0;
  for (const auto& p : parts) {
    between.add(p.is_exact ? p.exact : p.acc.mean());
    inner += p.is_exact ? 1 : p.acc.count;
  }
  e.value = between.mean();
  e.n_samples = inner;
  if (parts.size() >= 2)
    e.se = between.stderr_of_mean();
  else
    e.se = parts[0].is_exact ? 0.0 : parts[0].acc.stderr_of_mean();
  return e;
}

template <class Fn>
std::vector<DisorderPart> per_disorder(const ReplicaSource& src, std::size_t n_disorder, Rng& rng, int workers,
                                       Fn&& fn) {
  if (n_disorder == 0) throw std::invalid_argument("n_disorder must be positive");
  std::uint64_t base = rng();
  std::vector<DisorderPart> out(n_disorder);
  parallel_for(n_disorder, workers, [&](std::size_t i) {
    Rng r = make_stream(base, i);
    auto mu = src.realize(r);
    out[i] = fn(*mu, r);
  });
  return out;
}

const GibbsMeasure* as_gibbs(const AtomicMeasure& mu) { return dynamic_cast<const GibbsMeasure*>(&mu); }

// (G * F)(s) = Σ_t G_t F(s ^ t)
std::vector<double> xor_convolve(std::vector<double> g, std::vector<double> f) {
  walsh_hadamard(g);
  walsh_hadamard(f);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= f[i];
  walsh_hadamard(g);
  double inv = 1.0 / static_cast<double>(g.size());
  for (auto& x : g) x *= inv;
  return g;
}

const char* mode_name(EstimatorMode m) { return m == EstimatorMode::exact ? "exact" : "mc"; }

}  // namespace

std::shared_ptr<const AtomicMeasure> GibbsSource::realize(Rng& rng) const {
  return std::make_shared<GibbsMeasure>(sample_disorder(model_, rng), beta_);
}

Json GibbsSource::describe() const {
  Json j = model_to_json(model_);
  j["beta"] = beta_;
  return j;
}

std::shared_ptr<const AtomicMeasure> RPCSource::realize(Rng& rng) const {
  return std::make_shared<RostMeasure>(sample_rpc(params_, m_, rng), params_.q);
}

Json RPCSource::describe() const {
  return Json{{"source", "rpc"}, {"zeta", params_.zeta}, {"q", params_.q}, {"m", m_}};
}

double OverlapFactor::eval(double R) const {
  switch (kind) {
    case Kind::ge:
      return R >= threshold ? 1.0 : 0.0;
    case Kind::lt:
      return R < threshold ? 1.0 : 0.0;
    case Kind::power:
      return std::pow(R, p);
  }
  return 0;
}

int ReplicaFunction::arity() const {
  int a = 0;
  for (const auto& f : factors) a = std::max({a, f.i, f.j});
  return a;
}

bool ReplicaFunction::only_r12() const {
  return std::all_of(factors.begin(), factors.end(), [](const OverlapFactor& f) {
    return std::min(f.i, f.j) == 1 && std::max(f.i, f.j) == 2;
  });
}

double ReplicaFunction::eval(const OverlapMatrix& M) const {
  double v = 1;
  for (const auto& f : factors) {
    v *= f.eval(M.at(static_cast<std::size_t>(f.i - 1), static_cast<std::size_t>(f.j - 1)));
    if (v == 0) break;
  }
  return v;
}

double ReplicaFunction::eval_r12(double R) const {
  double v = 1;
  for (const auto& f : factors) v *= f.eval(R);
  return v;
}

ReplicaFunction ReplicaFunction::indicator_ge(double q, int i, int j) {
  ReplicaFunction f;
  f.factors.push_back({i, j, OverlapFactor::Kind::ge, q, 1});
  return f;
}

double Monomial::eval(double x) const { return std::pow(x, p); }

ReplicaFunction replica_function_from_json(const Json& j) {
  ReplicaFunction f;
  if (j.is_null()) return f;
  if (!j.is_array()) throw std::invalid_argument("test function must be an array of factors");
  for (const auto& e : j) {
    OverlapFactor o;
    o.i = e.value("i", 1);
    o.j = e.value("j", 2);
    if (o.i < 1 || o.j < 1 || o.i == o.j) throw std::invalid_argument("factor needs two distinct replicas");
    if (e.contains("ge")) {
      o.kind = OverlapFactor::Kind::ge;
      o.threshold = e["ge"].get<double>();
    } else if (e.contains("lt")) {
      o.kind = OverlapFactor::Kind::lt;
      o.threshold = e["lt"].get<double>();
    } else if (e.contains("pow")) {
      o.kind = OverlapFactor::Kind::power;
      o.p = e["pow"].get<int>();
      if (o.p < 0) throw std::invalid_argument("factor power must be non-negative");
    } else {
      throw std::invalid_argument("factor needs one of ge, lt, pow");
    }
    f.factors.push_back(o);
  }
  return f;
}

EstimateWithError gg_residual(const ReplicaSource& src, const ReplicaFunction& f, const Monomial& psi, int n,
                              std::size_t n_disorder, std::size_t samples, Rng& rng, EstimatorMode mode,
                              int workers) {
  if (n < 1) throw std::invalid_argument("n must be at least 1");
  if (f.arity() > n) throw std::invalid_argument("test function uses more than n replicas");
  if (psi.p < 0) throw std::invalid_argument("psi power must be non-negative");
  // Constant f: the identity reads nEψ - Eψ - (n-1)Eψ, identically zero.
  if (f.constant()) return {0.0, 0.0, n_disorder * samples, "exact"};
  if (mode == EstimatorMode::exact && !(n == 2 && f.only_r12()))
    throw std::invalid_argument("exact mode needs n = 2 and f depending on R_12 only");
  if (mode == EstimatorMode::mc && samples == 0) throw std::invalid_argument("samples must be positive");

  // Per disorder: means of A = f ψ(R_{1,n+1}), B = f, C = ψ(R_12), D = Σ_k f ψ(R_1k),
  // plus per-sample terms when a single disorder has to carry the error bar.
  struct Terms {
    double A = 0, B = 0, C = 0, D = 0;
    std::vector<std::array<double, 4>> rows;
  };
  std::uint64_t base = rng();
  std::vector<Terms> terms(n_disorder);
  if (n_disorder == 0) throw std::invalid_argument("n_disorder must be positive");
  bool keep_rows = n_disorder == 1 && mode == EstimatorMode::mc;
  parallel_for(n_disorder, workers, [&](std::size_t d) {
    Rng r = make_stream(base, d);
    auto mu = src.realize(r);
    Terms& t = terms[d];
    if (mode == EstimatorMode::exact) {
      if (const GibbsMeasure* g = as_gibbs(*mu)) {
        std::size_t K = g->size();
        std::vector<double> F(K), P(K), FP(K);
        for (std::size_t x = 0; x < K; ++x) {
          double R = overlap_index(0, static_cast<std::uint32_t>(x), g->N());
          F[x] = f.eval_r12(R);
          P[x] = psi.eval(R);
          FP[x] = F[x] * P[x];
        }
        auto GF = xor_convolve(g->masses(), F);
        auto GP = xor_convolve(g->masses(), P);
        auto GFP = xor_convolve(g->masses(), FP);
        for (std::size_t s = 0; s < K; ++s) {
          double w = g->mass(s);
          t.A += w * GF[s] * GP[s];
          t.B += w * GF[s];
          t.C += w * GP[s];
          t.D += w * GFP[s];
        }
      } else {
        std::size_t K = mu->size();
        if (K > kExactPairLimit) throw std::invalid_argument("measure too large for exact mode");
        for (std::size_t a = 0; a < K; ++a) {
          double sf = 0, sp = 0, sfp = 0;
          for (std::size_t b = 0; b < K; ++b) {
            double R = mu->overlap(a, b), w = mu->mass(b);
            double fv = f.eval_r12(R), pv = psi.eval(R);
            sf += w * fv;
            sp += w * pv;
            sfp += w * fv * pv;
          }
          double w = mu->mass(a);
          t.A += w * sf * sp;
          t.B += w * sf;
          t.C += w * sp;
          t.D += w * sfp;
        }
      }
      return;
    }
    for (std::size_t s = 0; s < samples; ++s) {
      OverlapMatrix M = sample_overlap_matrix(*mu, static_cast<std::size_t>(n) + 1, r);
      double fv = f.eval(M);
      double a = fv * psi.eval(M.at(0, static_cast<std::size_t>(n)));
      double c = psi.eval(M.at(0, 1));
      double dd = 0;
      if (fv != 0)
        for (int k = 2; k <= n; ++k) dd += fv * psi.eval(M.at(0, static_cast<std::size_t>(k - 1)));
      t.A += a;
      t.B += fv;
      t.C += c;
      t.D += dd;
      if (keep_rows) t.rows.push_back({a, fv, c, dd});
    }
    double inv = 1.0 / static_cast<double>(samples);
    t.A *= inv;
    t.B *= inv;
    t.C *= inv;
    t.D *= inv;
  });

  double A = 0, B = 0, C = 0, D = 0;
  for (const auto& t : terms) {
    A += t.A;
    B += t.B;
    C += t.C;
    D += t.D;
  }
  double nd = static_cast<double>(n_disorder);
  A /= nd;
  B /= nd;
  C /= nd;
  D /= nd;
  double residual = n * A - B * C - D;

  auto influence = [&](double a, double b, double c, double d) {
    return n * (a - A) - C * (b - B) - B * (c - C) - (d - D);
  };
  Accumulator infl;
  if (n_disorder >= 2) {
    for (const auto& t : terms) infl.add(influence(t.A, t.B, t.C, t.D));
  } else if (keep_rows) {
    for (const auto& row : terms[0].rows) infl.add(influence(row[0], row[1], row[2], row[3]));
  }
  EstimateWithError e;
  e.value = std::abs(residual);
  e.se = infl.stderr_of_mean();
  e.mode = mode_name(mode);
  e.n_samples = mode == EstimatorMode::exact ? n_disorder : n_disorder * samples;
  return e;
}

EstimateWithError ultrametric_violation(const ReplicaSource& src, double eps, std::size_t n_disorder,
                                        std::size_t samples, Rng& rng, EstimatorMode mode, int workers) {
  if (eps < 0) throw std::invalid_argument("eps must be non-negative");
  if (mode == EstimatorMode::mc && samples == 0) throw std::invalid_argument("samples must be positive");
  auto parts = per_disorder(src, n_disorder, rng, workers, [&](const AtomicMeasure& mu, Rng& r) {
    DisorderPart p;
    if (mode == EstimatorMode::exact) {
      std::size_t K = mu.size();
      if (K > kExactTripleLimit) throw std::invalid_argument("measure too large for the exact triple sum");
      double total = 0;
      for (std::size_t a = 0; a < K; ++a)
        for (std::size_t b = 0; b < K; ++b) {
          double wab = mu.mass(a) * mu.mass(b), R12 = mu.overlap(a, b);
          for (std::size_t c = 0; c < K; ++c)
            if (R12 < std::min(mu.overlap(a, c), mu.overlap(b, c)) - eps) total += wab * mu.mass(c);
        }
      p.exact = total;
      p.is_exact = true;
      return p;
    }
    for (std::size_t s = 0; s < samples; ++s) {
      std::size_t a = mu.draw(r), b = mu.draw(r), c = mu.draw(r);
      double R12 = mu.overlap(a, b);
      p.acc.add(R12 < std::min(mu.overlap(a, c), mu.overlap(b, c)) - eps ? 1.0 : 0.0);
    }
    return p;
  });
  return combine(parts, mode_name(mode));
}

EstimateWithError positivity_defect(const ReplicaSource& src, double eps, std::size_t n_disorder,
                                    std::size_t samples, Rng& rng, EstimatorMode mode, int workers) {
  if (eps < 0) throw std::invalid_argument("eps must be non-negative");
  if (mode == EstimatorMode::mc && samples == 0) throw std::invalid_argument("samples must be positive");
  auto parts = per_disorder(src, n_disorder, rng, workers, [&](const AtomicMeasure& mu, Rng& r) {
    DisorderPart p;
    if (mode == EstimatorMode::exact) {
      double total = 0;
      if (const GibbsMeasure* g = as_gibbs(mu)) {
        auto law = exact_overlap_law(*g);
        for (std::size_t d = 0; d < law.size(); ++d)
          if (1.0 - 2.0 * static_cast<double>(d) / g->N() < -eps) total += law[d];
      } else {
        std::size_t K = mu.size();
        if (K > kExactPairLimit) throw std::invalid_argument("measure too large for exact mode");
        for (std::size_t a = 0; a < K; ++a)
          for (std::size_t b = 0; b < K; ++b)
            if (mu.overlap(a, b) < -eps) total += mu.mass(a) * mu.mass(b);
      }
      p.exact = total;
      p.is_exact = true;
      return p;
    }
    for (std::size_t s = 0; s < samples; ++s) p.acc.add(mu.overlap(mu.draw(r), mu.draw(r)) < -eps ? 1.0 : 0.0);
    return p;
  });
  return combine(parts, mode_name(mode));
}

Histogram overlap_histogram(const ReplicaSource& src, const std::vector<double>& edges, std::size_t n_disorder,
                            std::size_t pairs, Rng& rng, EstimatorMode mode, int workers) {
  if (edges.size() < 2) throw std::invalid_argument("bins: need at least two edges");
  for (std::size_t b = 1; b < edges.size(); ++b)
    if (!(edges[b] > edges[b - 1])) throw std::invalid_argument("bins: edges must be strictly increasing");
  if (n_disorder == 0) throw std::invalid_argument("n_disorder must be positive");
  if (mode == EstimatorMode::mc && pairs == 0) throw std::invalid_argument("pairs must be positive");
  Histogram h;
  h.edges = edges;
  std::size_t nb = edges.size() - 1;
  std::uint64_t base = rng();
  std::vector<std::vector<double>> per(n_disorder);
  parallel_for(n_disorder, workers, [&](std::size_t d) {
    Rng r = make_stream(base, d);
    auto mu = src.realize(r);
    std::vector<double> m(nb, 0.0);
    if (mode == EstimatorMode::exact) {
      if (const GibbsMeasure* g = as_gibbs(*mu)) {
        auto law = exact_overlap_law(*g);
        for (std::size_t k = 0; k < law.size(); ++k) {
          std::size_t b = h.bin_of(1.0 - 2.0 * static_cast<double>(k) / g->N());
          if (b < nb) m[b] += law[k];
        }
      } else {
        std::size_t K = mu->size();
        if (K > kExactPairLimit) throw std::invalid_argument("measure too large for exact mode");
        for (std::size_t a = 0; a < K; ++a)
          for (std::size_t b2 = 0; b2 < K; ++b2) {
            std::size_t b = h.bin_of(mu->overlap(a, b2));
            if (b < nb) m[b] += mu->mass(a) * mu->mass(b2);
          }
      }
    } else {
      double w = 1.0 / static_cast<double>(pairs);
      for (std::size_t s = 0; s < pairs; ++s) {
        std::size_t b = h.bin_of(mu->overlap(mu->draw(r), mu->draw(r)));
        if (b < nb) m[b] += w;
      }
    }
    per[d] = std::move(m);
  });
  h.mass.assign(nb, 0.0);
  h.se.assign(nb, 0.0);
  for (std::size_t b = 0; b < nb; ++b) {
    Accumulator acc;
    for (const auto& m : per) acc.add(m[b]);
    h.mass[b] = acc.mean();
    if (n_disorder >= 2) {
      h.se[b] = acc.stderr_of_mean();
    } else if (mode == EstimatorMode::mc) {
      double p = h.mass[b];
      h.se[b] = std::sqrt(p * (1 - p) / static_cast<double>(pairs));
    }
  }
  h.mode = mode_name(mode);
  h.n_disorder = n_disorder;
  h.n_pairs = mode == EstimatorMode::mc ? pairs : 0;
  return h;
}

namespace {

double power_sum(const Partition& v, int k) {
  double s = 0;
  for (double x : v)
    if (x > 0) s += k == 0 ? 1.0 : std::pow(x, k);
  return s;
}

}  // namespace

EstimateWithError pd_moment(const std::vector<Partition>& samples, int k) {
  if (k < 2) throw std::invalid_argument("moment order must be at least 2");
  Accumulator acc;
  for (const auto& v : samples) acc.add(power_sum(v, k));
  return acc.estimate();
}

double pd_talagrand_S(double theta, std::vector<int> composition) {
  if (!(theta > 0 && theta < 1)) throw std::invalid_argument("theta must lie in (0,1)");
  std::map<std::vector<int>, double> memo;
  std::function<double(std::vector<int>)> S = [&](std::vector<int> c) -> double {
    // Σ v = 1, so unit parts drop out; order does not matter.
    c.erase(std::remove(c.begin(), c.end(), 1), c.end());
    for (int x : c)
      if (x < 1) throw std::invalid_argument("parts must be positive");
    std::sort(c.begin(), c.end(), std::greater<int>());
    if (c.empty()) return 1.0;
    if (c.size() == 1 && c[0] == 2) return 1.0 - theta;
    if (auto it = memo.find(c); it != memo.end()) return it->second;
    // Peel one from the largest part a: n' S(a, R) = (S(2) + a - 2) S(a-1, R) + Σ_k R_k S(R, R_k + a - 1)
    int a = c[0];
    std::vector<int> rest(c.begin() + 1, c.end());
    double n1 = a - 1;
    double np = n1;
    for (int x : rest) np += x;
    std::vector<int> lower = rest;
    lower.push_back(a - 1);
    double v = (S({2}) + (a - 2)) * S(lower);
    for (std::size_t k = 0; k < rest.size(); ++k) {
      std::vector<int> merged = rest;
      merged[k] += a - 1;
      v += rest[k] * S(merged);
    }
    v /= np;
    memo[c] = v;
    return v;
  };
  return S(std::move(composition));
}

EstimateWithError talagrand_residual(const std::vector<Partition>& samples, const std::vector<int>& c) {
  if (c.empty() || c[0] < 1) throw std::invalid_argument("composition needs n_1 >= 1");
  for (int x : c)
    if (x < 0) throw std::invalid_argument("composition parts must be non-negative");
  if (samples.empty()) throw std::invalid_argument("no samples");
  std::size_t s = c.size();
  int n = 0;
  for (int x : c) n += x;
  // rows: X1 = p_{n1+1} Π p_{nk}, X2 = Π p_{nk}, P2 = p_2, Y_k = p_{nk+n1} Π_{j≠k} p_{nj}
  std::vector<std::vector<double>> rows;
  rows.reserve(samples.size());
  for (const auto& v : samples) {
    std::vector<double> p(s);
    for (std::size_t k = 0; k < s; ++k) p[k] = power_sum(v, c[k]);
    double tail = 1;
    for (std::size_t k = 1; k < s; ++k) tail *= p[k];
    std::vector<double> row(3 + s - 1);
    row[0] = power_sum(v, c[0] + 1) * tail;
    row[1] = p[0] * tail;
    row[2] = power_sum(v, 2);
    for (std::size_t k = 1; k < s; ++k) {
      double y = power_sum(v, c[k] + c[0]);
      for (std::size_t j = 1; j < s; ++j)
        if (j != k) y *= p[j];
      row[2 + k] = y;
    }
    rows.push_back(std::move(row));
  }
  std::size_t width = rows[0].size();
  std::vector<double> mean(width, 0.0);
  for (const auto& row : rows)
    for (std::size_t i = 0; i < width; ++i) mean[i] += row[i];
  for (auto& m : mean) m /= static_cast<double>(rows.size());
  double n1m1 = c[0] - 1;
  double r = n * mean[0] - mean[2] * mean[1] - n1m1 * mean[1];
  for (std::size_t k = 1; k < s; ++k) r -= c[k] * mean[2 + k];
  Accumulator infl;
  for (const auto& row : rows) {
    double x = n * (row[0] - mean[0]) - mean[1] * (row[2] - mean[2]) - (mean[2] + n1m1) * (row[1] - mean[1]);
    for (std::size_t k = 1; k < s; ++k) x -= c[k] * (row[2 + k] - mean[2 + k]);
    infl.add(x);
  }
  return {std::abs(r), infl.stderr_of_mean(), samples.size(), "mc"};
}

double phi_kappa(double x, double q_r, double kappa) {
  if (!(kappa > 0)) throw std::invalid_argument("kappa must be positive");
  if (x >= q_r) return 1.0;
  if (x <= q_r - kappa) return 0.0;
  return (x - (q_r - kappa)) / kappa;
}

double phi_kappa_lambda(double x, double q_star, double kappa, double lambda) {
  if (!(lambda > 0 && kappa > lambda)) throw std::invalid_argument("need kappa > lambda > 0");
  if (x >= q_star - lambda) return 1.0;
  if (x <= q_star - kappa) return 0.0;
  return (x - (q_star - kappa)) / (kappa - lambda);
}

EstimateWithError indicator_approx_gap(const AtomicMeasure& mu, const ClusterDecomposition& dec, double kappa,
                                       Rng* rng, std::size_t mc_pairs, std::size_t exact_limit) {
  if (dec.q.empty() || dec.membership.empty()) throw std::invalid_argument("decomposition has no levels");
  double q_r = dec.q.back();
  const auto& leaf = dec.membership.back();
  auto term = [&](std::size_t a, std::size_t b) {
    double U = (leaf[a] != kNoCluster && leaf[a] == leaf[b]) ? 1.0 : 0.0;
    return std::abs(U - phi_kappa(mu.overlap(a, b), q_r, kappa));
  };
  std::size_t K = mu.size();
  if (K <= exact_limit) {
    double total = 0;
    for (std::size_t a = 0; a < K; ++a)
      for (std::size_t b = 0; b < K; ++b) total += mu.mass(a) * mu.mass(b) * term(a, b);
    return {total, 0.0, K * K, "exact"};
  }
  if (!rng) throw std::invalid_argument("a random stream is needed beyond the exact limit");
  Accumulator acc;
  for (std::size_t s = 0; s < mc_pairs; ++s) acc.add(term(mu.draw(*rng), mu.draw(*rng)));
  return acc.estimate();
}

double MassMoment::eval(const WeightedTree& y) const {
  double v = 1;
  for (const auto& [vert, p] : factors) {
    double w = y.shape.contains(vert) ? y.at(vert) : 0.0;
    v *= std::pow(w, p);
  }
  return v;
}

std::string MassMoment::describe() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < factors.size(); ++i) {
    if (i) os << '*';
    os << "Y" << to_string(factors[i].first) << '^' << factors[i].second;
  }
  return os.str();
}

std::vector<MomentGap> compare_to_rpc(const std::vector<WeightedTree>& Y, const RPCParams& params,
                                      const std::vector<MassMoment>& moments, const std::vector<int>& m,
                                      std::size_t rpc_samples, Rng& rng) {
  if (Y.empty() || rpc_samples == 0) throw std::invalid_argument("need samples on both sides");
  std::vector<Accumulator> emp(moments.size()), ref(moments.size());
  for (const auto& y : Y)
    for (std::size_t i = 0; i < moments.size(); ++i) emp[i].add(moments[i].eval(y));
  for (std::size_t s = 0; s < rpc_samples; ++s) {
    auto c = sample_rpc(params, m, rng);
    for (std::size_t i = 0; i < moments.size(); ++i) ref[i].add(moments[i].eval(c.tree));
  }
  std::vector<MomentGap> out;
  for (std::size_t i = 0; i < moments.size(); ++i) {
    MomentGap g;
    g.moment = moments[i];
    g.empirical = emp[i].mean();
    g.rpc = ref[i].mean();
    g.gap = g.empirical - g.rpc;
    double ve = emp[i].stderr_of_mean(), vr = ref[i].stderr_of_mean();
    g.se = std::sqrt(ve * ve + vr * vr);
    g.n_empirical = emp[i].count;
    g.n_rpc = ref[i].count;
    out.push_back(std::move(g));
  }
  return out;
}

Json diagnostic_record(const std::string& test, const Json& model, const EstimateWithError& e, std::uint64_t seed) {
  return Json{{"test", test},       {"model", model},         {"estimate", e.value},
              {"stderr", e.se},     {"samples", e.n_samples}, {"mode", e.mode},
              {"seed", seed}};
}

}  // namespace ultra
