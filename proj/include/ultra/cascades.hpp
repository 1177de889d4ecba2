#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "ultra/jsonio.hpp"
#include "ultra/measure.hpp"
#include "ultra/rng.hpp"
#include "ultra/trees.hpp"

namespace ultra {

struct PDSample {
  std::vector<double> atoms;     // decreasing, sum to 1
  std::vector<double> arrivals;  // Γ_1 < Γ_2 < ...
  double theta = 0.5;
  double S = 1;  // Σ u_k over the retained atoms
  double L = 1;  // S^{-θ}
  bool tail_flagged = false;  // Φ(K; θ) above the caller tolerance
};

struct RPCParams {
  std::vector<double> zeta;  // ζ_0 < ... < ζ_{r-1} in (0,1)
  std::vector<double> q;     // 0 < q_1 < ... < q_r <= 1

  int r() const { return static_cast<int>(q.size()); }
  void validate() const;
};

struct CascadeWeights {
  WeightedTree tree;  // standard order
  double dust = 0;

  const TreeShape& shape() const { return tree.shape; }
};

struct CascadeReport {
  bool standard_order = true;
  bool level_sums = true;
  bool parent_dominates = true;
  bool proper = true;
  std::vector<std::string> violations;

  bool valid() const { return standard_order && level_sums && parent_dominates; }
};

// Ranked atoms of PPP(μ_θ): u_k = Γ_k^{-1/θ}.
std::vector<double> unit_arrivals(std::size_t K, Rng& rng);
std::vector<double> ppp_from_arrivals(double theta, const std::vector<double>& arrivals);
std::vector<double> sample_ppp_ranked(double theta, std::size_t K, Rng& rng);

// phi_tol: flag the sample when Φ(K; θ) exceeds it (K >= 2).
PDSample pd_from_arrivals(double theta, std::vector<double> arrivals, double phi_tol = 1.0);
PDSample sample_pd(double theta, std::size_t K, Rng& rng, double phi_tol = 1.0);

// Truncated cascade with m[k] children per depth-k vertex. Weights are
// subtree sums normalized by an estimate of the untruncated total, so the
// retained leaves miss exactly the dust.
CascadeWeights sample_rpc(const RPCParams& params, const std::vector<int>& m, Rng& rng);
CascadeWeights sample_rpc(const RPCParams& params, int m, Rng& rng);

CascadeReport validate_cascade(const CascadeWeights& c, double tol = 1e-12);

// h_α = Σ_{β≼α} sqrt(q_|β| - q_|β|-1) e_β, dust at sqrt(q_r) e_∂.
struct RostEmbedding {
  TreeShape shape;
  std::vector<double> q;

  // sparse coordinates (basis index, coefficient); basis indices follow
  // enumerate(shape), the dust direction is shape.size()
  std::vector<std::pair<std::size_t, double>> leaf_vector(const Vertex& leaf) const;
  std::vector<std::pair<std::size_t, double>> dust_vector() const;
  static double inner(const std::vector<std::pair<std::size_t, double>>& a,
                      const std::vector<std::pair<std::size_t, double>>& b);
};

// Atoms: leaves in enumerate order, then the dust atom (last).
class RostMeasure : public AtomicMeasure {
 public:
  RostMeasure(const CascadeWeights& c, std::vector<double> q);

  double overlap(std::size_t i, std::size_t j) const override;
  std::string label(std::size_t i) const override;

  const RostEmbedding& embedding() const { return emb_; }
  std::size_t leaf_count() const { return leaf_count_; }
  std::size_t dust_atom() const { return leaf_count_; }
  bool is_dust(std::size_t i) const { return i == leaf_count_; }
  Vertex leaf(std::size_t i) const;
  // depth-k ancestor index (lexicographic within depth k) of leaf i
  std::size_t ancestor(std::size_t i, int k) const;

 private:
  RostEmbedding emb_;
  std::size_t leaf_count_ = 0;
  std::vector<std::size_t> divisor_;  // Π_{j>k} m_j for k = 0..r
};

RostMeasure embed_rost(const CascadeWeights& c, const std::vector<double>& q);

DiscreteLaw rpc_overlap_law(const RPCParams& params);

struct OverlapMatrix {
  std::size_t n = 0;
  std::vector<double> data;  // row-major
  std::vector<std::size_t> atoms;

  double at(std::size_t i, std::size_t j) const { return data[i * n + j]; }
  bool symmetric() const;
  double min_eigenvalue() const;
  bool is_psd(double tol = 1e-9) const { return min_eigenvalue() >= -tol; }
};

OverlapMatrix sample_overlap_matrix(const AtomicMeasure& mu, std::size_t n, Rng& rng);

// Quantizer onto the q levels; below q_1 (including negatives) maps to 0.
double gamma_map(double x, const std::vector<double>& q);

struct OverlapTree {
  int depth = 0;                 // r + 1
  std::vector<Vertex> paths;     // one root-to-leaf path per replica
  std::vector<double> levels;    // q_0 = 0, q_1, ..., q_r
  double self_overlap = 0;
};

struct NonUltrametricError : std::runtime_error {
  std::size_t i, j, k;
  NonUltrametricError(std::size_t i_, std::size_t j_, std::size_t k_);
};

OverlapTree encode_overlap_tree(const OverlapMatrix& M, const std::vector<double>& q, double tol = 1e-12);
OverlapMatrix decode_overlap_tree(const OverlapTree& t);

Json cascade_to_json(const CascadeWeights& c);
CascadeWeights cascade_from_json(const Json& j);
std::string overlap_matrix_csv(const OverlapMatrix& M);

}  // namespace ultra
