#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ultra/cascades.hpp"
#include "ultra/diagnostics.hpp"
#include "ultra/jsonio.hpp"
#include "ultra/spinglass.hpp"

namespace ultra {

inline constexpr const char* kVersion = "0.1.0";
// Output directory used when --out is absent.
inline constexpr const char* kOutDirEnv = "ULTRA_OUT_DIR";

// Invalid configuration; `field` names the offending entry.
struct ConfigError : std::invalid_argument {
  std::string field;
  ConfigError(std::string f, const std::string& msg) : std::invalid_argument(f + ": " + msg), field(std::move(f)) {}
};

struct ExperimentConfig {
  enum class SourceKind { rpc, model };
  SourceKind kind = SourceKind::rpc;
  RPCParams rpc;
  std::vector<int> rpc_m;  // truncation per depth
  ModelSpec model;         // model.beta is the inverse temperature

  std::vector<double> q;  // ball radii; interlaced from the RPC levels when auto_q
  bool auto_q = false;
  std::vector<int> shape;  // search shape; greedy per realization when auto_shape
  bool auto_shape = false;

  double eps = 0.1, delta = 0.1, kappa = 0.05, Delta = 0.1;
  bool auto_eps = false;  // ε = 2 x dust of each realization, rpc only
  double violation_eps = 0.1;
  std::size_t disorders = 1;
  std::size_t replicas = 10000;  // MC draws per disorder for the diagnostics
  std::size_t centers = 50;      // M, center blocks per search
  std::size_t pairs = 1000000;   // MC pairs for statistics beyond the exact limit
  std::size_t rpc_samples = 2000;
  std::size_t k0 = 0;  // orthogonal-structure check when positive

  int gg_n = 2;
  Monomial gg_psi{1};
  std::optional<ReplicaFunction> gg_f;  // default 1{R_12 >= q_1}

  std::optional<double> dfm_a;  // DFM gap exponent, model sources only
  struct TalagrandSpec {
    double theta = 0.5;
    std::size_t K = 2000, samples = 10000;
    std::vector<std::vector<int>> compositions{{2}, {2, 2}};
  };
  std::optional<TalagrandSpec> talagrand;  // PD(θ) recursion check, independent of the source

  std::uint64_t seed = 0;
  std::string out_dir;
  EstimatorMode mode = EstimatorMode::exact;  // preferred; per-number modes are reported
  int workers = 1;

  std::size_t atoms_per_disorder() const;  // 0 when unknown in advance
};

// Throws ConfigError. A seed is required.
ExperimentConfig config_from_json(const Json& j);
Json config_to_json(const ExperimentConfig& c);

struct RunReport {
  Json report;
  Histogram histogram;
};

// sample -> search -> clean -> stats -> masses -> diagnostics; clustering = false
// keeps only the diagnostics.
RunReport run(const ExperimentConfig& c, bool clustering = true);

// Drops "timing" members recursively, leaving the part covered by determinism.
Json strip_timing(Json j);

}  // namespace ultra
