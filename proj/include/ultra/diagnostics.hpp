#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "ultra/cascades.hpp"
#include "ultra/clustering.hpp"
#include "ultra/jsonio.hpp"
#include "ultra/measure.hpp"
#include "ultra/spinglass.hpp"
#include "ultra/stats.hpp"

namespace ultra {

// Produces one random measure per disorder realization.
class ReplicaSource {
 public:
  virtual ~ReplicaSource() = default;
  virtual std::shared_ptr<const AtomicMeasure> realize(Rng& rng) const = 0;
  virtual Json describe() const = 0;
};

// The same measure every time (no disorder average).
class FixedSource : public ReplicaSource {
 public:
  explicit FixedSource(std::shared_ptr<const AtomicMeasure> mu) : mu_(std::move(mu)) {}
  std::shared_ptr<const AtomicMeasure> realize(Rng&) const override { return mu_; }
  Json describe() const override { return Json{{"source", "fixed"}, {"atoms", mu_->size()}}; }

 private:
  std::shared_ptr<const AtomicMeasure> mu_;
};

class GibbsSource : public ReplicaSource {
 public:
  GibbsSource(ModelSpec model, double beta) : model_(std::move(model)), beta_(beta) { model_.validate(); }
  std::shared_ptr<const AtomicMeasure> realize(Rng& rng) const override;
  Json describe() const override;

 private:
  ModelSpec model_;
  double beta_;
};

class RPCSource : public ReplicaSource {
 public:
  RPCSource(RPCParams params, std::vector<int> m) : params_(std::move(params)), m_(std::move(m)) { params_.validate(); }
  std::shared_ptr<const AtomicMeasure> realize(Rng& rng) const override;
  Json describe() const override;

 private:
  RPCParams params_;
  std::vector<int> m_;
};

// Factor of a test function on R^n: a threshold indicator or a power of one entry.
struct OverlapFactor {
  enum class Kind { ge, lt, power };
  int i = 1, j = 2;  // 1-based replica indices
  Kind kind = Kind::ge;
  double threshold = 0;
  int p = 1;

  double eval(double R) const;
};

// Product of factors; the empty product is the constant 1.
struct ReplicaFunction {
  std::vector<OverlapFactor> factors;

  int arity() const;
  bool constant() const { return factors.empty(); }
  bool only_r12() const;
  double eval(const OverlapMatrix& M) const;  // M indices are 0-based
  double eval_r12(double R) const;

  static ReplicaFunction indicator_ge(double q, int i = 1, int j = 2);
};

// ψ(x) = x^p
struct Monomial {
  int p = 1;
  double eval(double x) const;
};

ReplicaFunction replica_function_from_json(const Json& j);

// |n E⟨fψ(R_{1,n+1})⟩ - E⟨f⟩E⟨ψ(R_12)⟩ - Σ_{k=2}^n E⟨fψ(R_{1k})⟩|, all terms from
// shared replica draws. Exact mode needs a Gibbs source, n = 2 and f depending on R_12 only.
EstimateWithError gg_residual(const ReplicaSource& src, const ReplicaFunction& f, const Monomial& psi, int n,
                              std::size_t n_disorder, std::size_t samples, Rng& rng,
                              EstimatorMode mode = EstimatorMode::mc, int workers = 1);

// E μ⊗3(R_12 < min(R_13, R_23) - ε)
EstimateWithError ultrametric_violation(const ReplicaSource& src, double eps, std::size_t n_disorder,
                                        std::size_t samples, Rng& rng, EstimatorMode mode = EstimatorMode::mc,
                                        int workers = 1);

// E μ⊗2(R_12 < -ε)
EstimateWithError positivity_defect(const ReplicaSource& src, double eps, std::size_t n_disorder,
                                    std::size_t samples, Rng& rng, EstimatorMode mode = EstimatorMode::mc,
                                    int workers = 1);

// Disorder-averaged law of R_12 on fixed bins. Exact mode: spectral sum for
// Gibbs measures, full pair sum for other measures up to 4096 atoms.
Histogram overlap_histogram(const ReplicaSource& src, const std::vector<double>& edges, std::size_t n_disorder,
                            std::size_t pairs, Rng& rng, EstimatorMode mode = EstimatorMode::exact, int workers = 1);

using Partition = std::vector<double>;

EstimateWithError pd_moment(const std::vector<Partition>& samples, int k);
// S(n_1..n_s) = E Π_k Σ_n v_n^{n_k} for PD(θ), from the recursion itself.
double pd_talagrand_S(double theta, std::vector<int> composition);
EstimateWithError talagrand_residual(const std::vector<Partition>& samples, const std::vector<int>& composition);

// 0 below q_r - κ, 1 from q_r on, linear in between.
double phi_kappa(double x, double q_r, double kappa);
// 0 below q_* - κ, 1 from q_* - λ on; needs κ > λ > 0.
double phi_kappa_lambda(double x, double q_star, double kappa, double lambda);

// E⟨|U_12 - φ_κ(R_12)|⟩ with U_12 = 1{same leaf cluster}
EstimateWithError indicator_approx_gap(const AtomicMeasure& mu, const ClusterDecomposition& dec, double kappa,
                                       Rng* rng = nullptr, std::size_t mc_pairs = 1000000,
                                       std::size_t exact_limit = 4096);

// Joint moment Π_k Y_{v_k}^{p_k}
struct MassMoment {
  std::vector<std::pair<Vertex, int>> factors;
  double eval(const WeightedTree& y) const;  // vertices outside the tree count as 0
  std::string describe() const;
};

struct MomentGap {
  MassMoment moment;
  double empirical = 0, rpc = 0;
  double gap = 0, se = 0;
  std::size_t n_empirical = 0, n_rpc = 0;
};

std::vector<MomentGap> compare_to_rpc(const std::vector<WeightedTree>& Y, const RPCParams& params,
                                      const std::vector<MassMoment>& moments, const std::vector<int>& m,
                                      std::size_t rpc_samples, Rng& rng);

// {"test":..,"model":..,"estimate":..,"stderr":..,"samples":..,"seed":..}
Json diagnostic_record(const std::string& test, const Json& model, const EstimateWithError& e, std::uint64_t seed);

}  // namespace ultra
