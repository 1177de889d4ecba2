#include "ultra/spinglass.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "ultra/parallel.hpp"

namespace ultra {

namespace {

std::uint32_t low_mask(int bits) { return bits >= 32 ? ~0u : ((1u << bits) - 1u); }

double ipow(double x, int p) {
  double r = 1;
  for (int i = 0; i < p; ++i) r *= x;
  return r;
}

}  // namespace

void ModelSpec::validate() const {
  if (N < 1) throw std::invalid_argument("N: must be >= 1");
  if (N > kMaxSpins)
    throw std::invalid_argument("N: " + std::to_string(N) + " exceeds the exact-enumeration cap " +
                                std::to_string(kMaxSpins));
  if (!(beta >= 0) || !std::isfinite(beta)) throw std::invalid_argument("beta: must be finite and >= 0");
  switch (variant) {
    case Variant::rem:
      break;
    case Variant::pspin:
      if (betas.empty()) throw std::invalid_argument("betas: need at least one p");
      for (auto [p, b] : betas) {
        if (p < 1) throw std::invalid_argument("betas: p must be >= 1");
        if (!std::isfinite(b)) throw std::invalid_argument("betas: coefficient must be finite");
        if (std::pow(static_cast<double>(N), p) > 1e8)
          throw std::invalid_argument("betas: N^p too large for the monomial expansion");
      }
      break;
    case Variant::grem: {
      if (blocks.empty()) throw std::invalid_argument("blocks: need at least one block");
      int total = 0;
      for (int b : blocks) {
        if (b < 1) throw std::invalid_argument("blocks: sizes must be >= 1");
        total += b;
      }
      if (total != N) throw std::invalid_argument("blocks: sizes must sum to N");
      if (zeta.size() != blocks.size() + 1) throw std::invalid_argument("zeta: need one more level than blocks");
      if (zeta.front() != 0.0 || zeta.back() != 1.0) throw std::invalid_argument("zeta: must run from 0 to 1");
      for (std::size_t k = 1; k < zeta.size(); ++k)
        if (!(zeta[k] > zeta[k - 1])) throw std::invalid_argument("zeta: must be strictly increasing");
      break;
    }
  }
}

Config config_at(std::uint32_t s, int N) {
  Config c(N);
  for (int i = 0; i < N; ++i) c[i] = (s >> i) & 1u ? -1 : 1;
  return c;
}

std::uint32_t config_index(const Config& s) {
  std::uint32_t x = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != 1 && s[i] != -1) throw std::invalid_argument("config entries must be +1 or -1");
    if (s[i] == -1) x |= 1u << i;
  }
  return x;
}

double overlap(const Config& a, const Config& b) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("overlap: length mismatch");
  long dot = 0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  return static_cast<double>(dot) / static_cast<double>(a.size());
}

double covariance(const ModelSpec& model, const Config& a, const Config& b) {
  double R = overlap(a, b);
  double N = model.N;
  switch (model.variant) {
    case Variant::rem:
      return a == b ? N : 0.0;
    case Variant::pspin: {
      double xi = 0;
      for (auto [p, bp] : model.betas) xi += bp * bp * ipow(R, p);
      return N * xi;
    }
    case Variant::grem: {
      double xi = 0;
      std::size_t end = 0;
      for (std::size_t k = 0; k < model.blocks.size(); ++k) {
        end += model.blocks[k];
        if (!std::equal(a.begin(), a.begin() + end, b.begin())) break;
        xi += model.zeta[k + 1] - model.zeta[k];
      }
      return N * xi;
    }
  }
  return 0;
}

void walsh_hadamard(std::vector<double>& a) {
  std::size_t n = a.size();
  for (std::size_t h = 1; h < n; h <<= 1)
    for (std::size_t i = 0; i < n; i += h << 1)
      for (std::size_t j = i; j < i + h; ++j) {
        double x = a[j], y = a[j + h];
        a[j] = x + y;
        a[j + h] = x - y;
      }
}

DisorderRealization sample_disorder(const ModelSpec& model, Rng& rng) {
  model.validate();
  const int N = model.N;
  const std::size_t n = std::size_t{1} << N;
  std::normal_distribution<double> gauss(0.0, 1.0);
  DisorderRealization d{model, std::vector<double>(n, 0.0)};
  auto& H = d.energies;
  switch (model.variant) {
    case Variant::rem: {
      double s = std::sqrt(static_cast<double>(N));
      for (auto& h : H) h = s * gauss(rng);
      break;
    }
    case Variant::grem: {
      int prefix = 0;
      for (std::size_t k = 0; k < model.blocks.size(); ++k) {
        prefix += model.blocks[k];
        double scale = std::sqrt(N * (model.zeta[k + 1] - model.zeta[k]));
        std::vector<double> g(std::size_t{1} << prefix);
        for (auto& x : g) x = gauss(rng);
        std::uint32_t mask = low_mask(prefix);
        for (std::size_t s = 0; s < n; ++s) H[s] += scale * g[s & mask];
      }
      break;
    }
    case Variant::pspin: {
      // Σ_{i_1..i_p} g σ_{i_1}...σ_{i_p} is a character sum: the monomial of a
      // tuple is (-1)^{popcount(s & m)} with m the XOR of its bits.
      std::vector<double> coef(n, 0.0);
      for (auto [p, bp] : model.betas) {
        double scale = bp * std::pow(static_cast<double>(N), -(p - 1) / 2.0);
        std::vector<int> idx(p, 0);
        while (true) {
          std::uint32_t m = 0;
          for (int i : idx) m ^= 1u << i;
          coef[m] += scale * gauss(rng);
          int pos = p - 1;
          while (pos >= 0 && ++idx[pos] == N) idx[pos--] = 0;
          if (pos < 0) break;
        }
      }
      walsh_hadamard(coef);
      H = std::move(coef);
      break;
    }
  }
  return d;
}

GibbsMeasure::GibbsMeasure(const DisorderRealization& d, double beta) : N_(d.model.N), beta_(beta) {
  if (!(beta >= 0) || !std::isfinite(beta)) throw std::invalid_argument("gibbs: beta must be finite and >= 0");
  const auto& H = d.energies;
  if (H.size() != (std::size_t{1} << N_)) throw std::invalid_argument("gibbs: energy vector size");
  double mx = -INFINITY;
  for (double h : H) mx = std::max(mx, -beta * h);
  std::vector<double> w(H.size());
  double sum = 0;
  for (std::size_t s = 0; s < H.size(); ++s) sum += (w[s] = std::exp(-beta * H[s] - mx));
  for (auto& x : w) x /= sum;
  log_z_ = mx + std::log(sum);
  set_masses(std::move(w));
}

std::string GibbsMeasure::label(std::size_t i) const {
  std::string s(N_, '+');
  for (int k = 0; k < N_; ++k)
    if ((i >> k) & 1u) s[k] = '-';
  return s;
}

GibbsMeasure gibbs(const DisorderRealization& d, double beta) { return GibbsMeasure(d, beta); }

std::vector<double> exact_overlap_law(const GibbsMeasure& g) {
  // autocorrelation A(x) = Σ_s G(s) G(s^x) via the Walsh-Hadamard transform
  std::vector<double> a = g.masses();
  walsh_hadamard(a);
  for (auto& x : a) x *= x;
  walsh_hadamard(a);
  const double inv = 1.0 / static_cast<double>(a.size());
  std::vector<double> law(g.N() + 1, 0.0);
  for (std::size_t x = 0; x < a.size(); ++x) law[__builtin_popcount(static_cast<std::uint32_t>(x))] += a[x] * inv;
  for (auto& v : law) v = std::max(v, 0.0);
  return law;
}

std::size_t Histogram::bin_of(double x) const {
  std::size_t nb = edges.size() - 1;
  if (x < edges.front() || x > edges.back()) return nb;
  if (x == edges.back()) return nb - 1;
  return static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), x) - edges.begin()) - 1;
}

double Histogram::mass_above(double x) const {
  double s = 0;
  for (std::size_t b = 0; b + 1 < edges.size(); ++b)
    if (edges[b] >= x) s += mass[b];
  return s;
}

std::string Histogram::csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "bin_lo,bin_hi,mass,stderr\n";
  for (std::size_t b = 0; b + 1 < edges.size(); ++b)
    os << edges[b] << ',' << edges[b + 1] << ',' << mass[b] << ',' << se[b] << '\n';
  return os.str();
}

Json Histogram::to_json() const {
  return Json{{"mode", mode},  {"n_disorder", n_disorder}, {"n_pairs", n_pairs},
              {"edges", edges}, {"mass", mass},             {"stderr", se}};
}

std::vector<double> overlap_bins(int N) {
  std::vector<double> e(N + 2);
  for (int k = 0; k <= N + 1; ++k) e[k] = -1.0 - 1.0 / N + 2.0 * k / N;
  return e;
}

Histogram empirical_overlap_law(const ModelSpec& model, double beta, std::size_t n_disorder, std::size_t n_pairs,
                                const std::vector<double>& edges, Rng& rng, EstimatorMode mode, int workers) {
  if (n_disorder < 1) throw std::invalid_argument("n_disorder must be >= 1");
  if (mode == EstimatorMode::mc && n_pairs < 1) throw std::invalid_argument("n_pairs must be >= 1");
  if (edges.size() < 2) throw std::invalid_argument("bins: need at least two edges");
  for (std::size_t b = 1; b < edges.size(); ++b)
    if (!(edges[b] > edges[b - 1])) throw std::invalid_argument("bins: edges must be strictly increasing");
  model.validate();

  Histogram h;
  h.edges = edges;
  h.mode = mode == EstimatorMode::exact ? "exact" : "mc";
  h.n_disorder = n_disorder;
  h.n_pairs = mode == EstimatorMode::mc ? n_pairs : 0;
  const std::size_t nb = edges.size() - 1;
  const std::uint64_t base = rng();

  std::vector<std::vector<double>> per(n_disorder);
  parallel_for(n_disorder, workers, [&](std::size_t i) {
    Rng r = make_stream(base, i);
    auto g = gibbs(sample_disorder(model, r), beta);
    std::vector<double> m(nb + 1, 0.0);
    if (mode == EstimatorMode::exact) {
      auto law = exact_overlap_law(g);
      for (int d = 0; d <= model.N; ++d) m[h.bin_of(1.0 - 2.0 * d / model.N)] += law[d];
    } else {
      for (std::size_t t = 0; t < n_pairs; ++t) m[h.bin_of(g.overlap(g.draw(r), g.draw(r)))] += 1.0;
      for (auto& x : m) x /= static_cast<double>(n_pairs);
    }
    per[i] = std::move(m);
  });

  std::vector<Accumulator> acc(nb);
  for (const auto& m : per)
    for (std::size_t b = 0; b < nb; ++b) acc[b].add(m[b]);
  for (const auto& a : acc) {
    h.mass.push_back(a.mean());
    h.se.push_back(a.stderr_of_mean());
  }
  return h;
}

OverlapMatrix sample_replicas(const GibbsMeasure& g, std::size_t n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample_replicas: n must be >= 1");
  return sample_overlap_matrix(g, n, rng);
}

double log_partition(const DisorderRealization& d, double beta) {
  if (!(beta >= 0)) throw std::invalid_argument("beta must be >= 0");
  double mx = -INFINITY;
  for (double h : d.energies) mx = std::max(mx, -beta * h);
  double sum = 0;
  for (double h : d.energies) sum += std::exp(-beta * h - mx);
  return mx + std::log(sum);
}

double free_energy(const DisorderRealization& d, double beta) { return log_partition(d, beta) / d.model.N; }

EstimateWithError dfm_gap_from_logz(const std::vector<double>& logz, double a, int N) {
  if (!(a < 0)) throw std::invalid_argument("dfm_gap: a must be negative");
  if (logz.empty()) throw std::invalid_argument("dfm_gap: no disorder samples");
  const std::size_t n = logz.size();
  const double nn = static_cast<double>(n);
  // center on the first sample so a deterministic Z gives exactly 0
  std::vector<double> d(n), x(n);
  double mx = -INFINITY, dbar = 0;
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = logz[i] - logz[0];
    mx = std::max(mx, a * d[i]);
    dbar += d[i];
  }
  dbar /= nn;
  double xbar = 0;
  for (std::size_t i = 0; i < n; ++i) xbar += (x[i] = std::exp(a * d[i] - mx));
  xbar /= nn;
  double gap = (mx + std::log(xbar)) / (a * N) - dbar / N + 0.0;
  // delta method on the joint (Ê e^{a d}, Ê d)
  Accumulator infl;
  for (std::size_t i = 0; i < n; ++i) infl.add((x[i] / xbar - 1.0) / (a * N) - (d[i] - dbar) / N);
  return {gap, infl.stderr_of_mean(), n, "mc"};
}

EstimateWithError dfm_gap(const ModelSpec& model, double beta, double a, std::size_t n_disorder, Rng& rng,
                          int workers) {
  if (!(a < 0)) throw std::invalid_argument("dfm_gap: a must be negative");
  if (n_disorder < 1) throw std::invalid_argument("dfm_gap: n_disorder must be >= 1");
  model.validate();
  const std::uint64_t base = rng();
  std::vector<double> logz(n_disorder);
  parallel_for(n_disorder, workers, [&](std::size_t i) {
    Rng r = make_stream(base, i);
    logz[i] = log_partition(sample_disorder(model, r), beta);
  });
  return dfm_gap_from_logz(logz, a, model.N);
}

ModelSpec model_from_json(const Json& j) {
  ModelSpec m;
  if (!j.is_object()) throw std::invalid_argument("model: expected an object");
  std::string v = j.value("variant", std::string("rem"));
  if (v == "rem")
    m.variant = Variant::rem;
  else if (v == "grem")
    m.variant = Variant::grem;
  else if (v == "pspin")
    m.variant = Variant::pspin;
  else
    throw std::invalid_argument("variant: unknown value '" + v + "'");
  try {
    m.N = j.at("N").get<int>();
    m.beta = j.value("beta", 1.0);
    if (m.variant == Variant::pspin) {
      for (auto& [k, val] : j.at("betas").items()) m.betas[std::stoi(k)] = val.get<double>();
    }
    if (m.variant == Variant::grem) {
      m.zeta = j.at("zeta").get<std::vector<double>>();
      if (j.contains("blocks")) {
        m.blocks = j.at("blocks").get<std::vector<int>>();
      } else {
        // round q increments to whole spins
        auto q = j.at("q").get<std::vector<double>>();
        if (q.empty() || q.back() != 1.0) throw std::invalid_argument("q: last level must be 1");
        int prev = 0;
        std::ostringstream note;
        note << "blocks rounded from q:";
        for (double qk : q) {
          int cut = static_cast<int>(std::lround(qk * m.N));
          if (cut <= prev) throw std::invalid_argument("q: increments below 1/N after rounding");
          m.blocks.push_back(cut - prev);
          note << ' ' << qk << "->" << static_cast<double>(cut) / m.N;
          prev = cut;
        }
        m.rounding_note = note.str();
      }
    }
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("model: ") + e.what());
  }
  m.validate();
  return m;
}

Json model_to_json(const ModelSpec& m) {
  Json j;
  j["variant"] = m.variant == Variant::rem ? "rem" : m.variant == Variant::grem ? "grem" : "pspin";
  j["N"] = m.N;
  j["beta"] = m.beta;
  if (m.variant == Variant::pspin) {
    Json b = Json::object();
    for (auto [p, bp] : m.betas) b[std::to_string(p)] = bp;
    j["betas"] = b;
  }
  if (m.variant == Variant::grem) {
    j["blocks"] = m.blocks;
    j["zeta"] = m.zeta;
    if (!m.rounding_note.empty()) j["rounding"] = m.rounding_note;
  }
  return j;
}

}  // namespace ultra
