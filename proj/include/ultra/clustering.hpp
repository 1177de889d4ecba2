#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "ultra/jsonio.hpp"
#include "ultra/measure.hpp"
#include "ultra/rng.hpp"
#include "ultra/stats.hpp"
#include "ultra/trees.hpp"

namespace ultra {

inline constexpr std::size_t kNoCluster = std::numeric_limits<std::size_t>::max();

// Finite-sample admissibility: "continuity point" becomes a window-mass cap.
struct AdmissibleTolerances {
  double window = 0.02;     // w
  double atom_cap = 0.05;   // t_a
  double gap_mass = 0.01;   // t_m
  double edge_mass = 0.01;  // t_e
};

struct AdmissibleReport {
  std::vector<double> q;
  std::vector<double> window_mass;  // ζ̂((q_k - w, q_k + w))
  std::vector<double> gap_mass;     // ζ̂([q_k, q_{k+1}]), k < r
  double lower_edge = 0;            // ζ̂([0, q_1])
  double upper_edge = 0;            // ζ̂([q_r, 1])
  AdmissibleTolerances tol;

  bool window_ok() const;
  bool gap_ok() const;
  bool edges_ok() const;
  bool ok() const { return window_ok() && gap_ok() && edges_ok(); }
  Json to_json() const;
};

// Throws std::invalid_argument unless q is strictly increasing in (0,1].
AdmissibleReport validate_admissible(const DiscreteLaw& law, const std::vector<double>& q,
                                     const AdmissibleTolerances& tol = {});

// Midpoints of consecutive levels 0 < q_1 < ... < q_r: one admissible
// radius strictly inside each gap of an RPC overlap law.
std::vector<double> interlacing_levels(const std::vector<double>& q);

struct BallFamily {
  TreeShape shape;
  std::vector<double> q;                       // radius per depth, q[k-1] for depth k
  std::vector<std::size_t> centers;            // atom per vertex, enumerate order
  std::vector<std::vector<std::size_t>> sets;  // atom ids per vertex, increasing

  const std::vector<std::size_t>& set(const Vertex& v) const { return sets[vertex_index(v, shape)]; }
};

BallFamily build_balls(const AtomicMeasure& mu, const TreeShape& shape, std::vector<std::size_t> centers,
                       const std::vector<double>& q);
BallFamily build_balls_from_map(const AtomicMeasure& mu, const TreeShape& shape,
                                const std::map<Vertex, std::size_t>& centers, const std::vector<double>& q);

// W_E for all singletons and pairs of vertices.
struct BallWeights {
  TreeShape shape;
  std::vector<double> single;  // enumerate order
  std::vector<double> pair;    // V x V, symmetric, diagonal = single

  double at(const Vertex& v) const { return single[vertex_index(v, shape)]; }
  double at(const Vertex& v, const Vertex& w) const {
    return pair[vertex_index(v, shape) * single.size() + vertex_index(w, shape)];
  }
};

BallWeights ball_weights(const AtomicMeasure& mu, const BallFamily& family);

struct ExhaustionCheck {
  std::vector<double> depth_sums;
  std::vector<double> slacks;  // internal non-root vertices, enumerate order
  double min_slack = 0, max_slack = 0;
  double cousin_total = 0;
  double cousin_limit = 0;  // δ / |τ|²
  bool depth_ok = false, slack_ok = false, cousin_ok = false;
  bool boundary = false;  // some slack sits exactly at 0 or ε

  bool ok() const { return depth_ok && slack_ok && cousin_ok; }
  Json to_json() const;
};

ExhaustionCheck check_exhaustion_event(const BallWeights& W, double eps, double delta);

// Shape chosen greedily from standard-ordered nested masses. Throws
// std::domain_error when the masses cannot reach 1 - ε at some depth.
TreeShape greedy_tree_shape(const WeightedTree& masses, double eps);

struct SearchResult {
  BallFamily family;
  BallWeights weights;
  ExhaustionCheck check;
  std::size_t block = 0;  // 1-based index of the first passing block
};

// Scans up to M blocks of i.i.d. centers; `tried` receives the number of blocks drawn.
std::optional<SearchResult> search_exhaustion(const AtomicMeasure& mu, const std::vector<double>& q, double eps,
                                              double delta, const TreeShape& shape, std::size_t M, Rng& rng,
                                              std::size_t* tried = nullptr);

struct ClusterDecomposition {
  TreeShape shape;
  std::vector<double> q;
  std::vector<std::vector<std::size_t>> sets;  // C_α, enumerate order
  std::vector<double> masses;
  // membership[k-1][x]: flat index of the depth-k cluster holding atom x, or kNoCluster
  std::vector<std::vector<std::size_t>> membership;
  std::vector<double> depth_sums;
  double min_slack = 0, max_slack = 0;
  double eps_achieved = 0;  // max(1 - min depth sum, max slack)

  std::size_t leaf_offset() const { return shape.level_offset(shape.depth()); }
};

ClusterDecomposition clean_clusters(const BallFamily& family, const AtomicMeasure& mu);

struct SiblingPairStat {
  Vertex a, b;
  double g = 0;
};

struct ClusterStats {
  double a = 0;               // ε used as the clustering slack
  std::vector<double> f;      // per vertex
  std::vector<SiblingPairStat> g;
  double f_total = 0, g_total = 0;
  double b = 0;               // largest single f or g value
  std::string mode = "exact";
  std::size_t samples = 0;    // pair draws in mc mode

  Json to_json() const;
};

// Exact double sums when the atom count is at most exact_limit, Monte Carlo otherwise.
ClusterStats clustering_stats(const AtomicMeasure& mu, const ClusterDecomposition& dec, double eps,
                              Rng* rng = nullptr, std::size_t mc_pairs = 1000000, std::size_t exact_limit = 4096);

// Y_α in standard order, optionally zero-padded onto a larger shape.
StandardOrdered cluster_masses(const ClusterDecomposition& dec, const std::optional<TreeShape>& pad = std::nullopt);
WeightedTree pad_tree(const WeightedTree& w, const TreeShape& target);

struct OrthogonalReport {
  std::size_t k0 = 0;
  std::vector<double> values;  // k0 x k0, ⟨|R12| 1{σ1∈A_k, σ2∈A_l}⟩, diagonal 0
  std::vector<double> masses;
  double eps = 0;
  bool pairs_ok = false;
  bool floors_ok = true;

  bool pass() const { return pairs_ok && floors_ok; }
  Json to_json() const;
};

OrthogonalReport orthogonal_structure_check(const AtomicMeasure& mu, const std::vector<std::vector<std::size_t>>& clusters,
                                            double eps, std::size_t k0, const std::vector<double>& floors = {});

struct PureStateResult {
  bool found = false;
  std::size_t block = 0;
  std::vector<std::vector<std::size_t>> leaf_sets;  // decreasing mass
  std::vector<double> masses;
  std::vector<double> deviation;  // ∫_{A_k²} |R12 - q_*| dμ⊗2
  std::vector<double> h;          // per leaf center
  double h_total = 0;

  Json to_json() const;
};

PureStateResult pure_state_variant(const AtomicMeasure& mu, const std::vector<double>& q_lower, double q_star,
                                   double Delta, double eps, double delta, const TreeShape& shape, std::size_t M,
                                   Rng& rng);

// One factor W_E^n of a joint ball-weight moment.
struct MomentTerm {
  std::vector<Vertex> E;  // one or two vertices
  int power = 1;
};

// Ê Π W_{E_k}^{n_k} over fresh center draws.
EstimateWithError ball_moment(const AtomicMeasure& mu, const std::vector<double>& q,
                              const std::vector<MomentTerm>& terms, std::size_t samples, Rng& rng);
// Direct estimate of the replica event: centers and Σ n_k replicas drawn together.
EstimateWithError replica_event_probability(const AtomicMeasure& mu, const std::vector<double>& q,
                                            const std::vector<MomentTerm>& terms, std::size_t samples, Rng& rng);

// atom_lists = false stores only counts and masses.
Json decomposition_to_json(const ClusterDecomposition& dec, const AtomicMeasure& mu, bool atom_lists = true);

}  // namespace ultra
