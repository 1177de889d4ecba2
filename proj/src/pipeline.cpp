#include "ultra/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>

#include "ultra/clustering.hpp"
#include "ultra/parallel.hpp"
#include "ultra/rates.hpp"

namespace ultra {

namespace {

constexpr std::size_t kExactPairAtoms = 4096;
constexpr std::size_t kExactTripleAtoms = 256;
constexpr double kMaxCenters = 1e6;

template <class T>
T field(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(key, e.what());
  }
}

std::size_t count_field(const Json& j, const char* key, std::size_t fallback) {
  if (!j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 1) throw ConfigError(key, "must be an integer >= 1");
  return v.get<std::size_t>();
}

double positive_field(const Json& j, const char* key, double fallback) {
  double v = field<double>(j, key, fallback);
  if (!(v > 0)) throw ConfigError(key, "must be positive");
  return v;
}

std::vector<double> linspace_edges(double lo, double hi, int bins) {
  std::vector<double> e(bins + 1);
  for (int k = 0; k <= bins; ++k) e[k] = lo + (hi - lo) * k / bins;
  return e;
}

const char* mode_name(EstimatorMode m) { return m == EstimatorMode::exact ? "exact" : "mc"; }

Json estimate_json(const EstimateWithError& e) { return to_json(e); }

struct DisorderOutcome {
  Json record;
  bool found = false;
  ClusterStats stats;
  WeightedTree Y;
  double mass_error = 0;
  bool has_gap = false;
  EstimateWithError gap;
  int orthogonal = -1;  // -1 not run, 0 fail, 1 pass
};

}  // namespace

std::size_t ExperimentConfig::atoms_per_disorder() const {
  if (kind == SourceKind::model) return std::size_t{1} << model.N;
  std::size_t n = 1;
  for (int mk : rpc_m) n *= static_cast<std::size_t>(mk);
  return n + 1;
}

ExperimentConfig config_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("config", "expected a JSON object");
  ExperimentConfig c;
  if (!j.contains("seed")) throw ConfigError("seed", "required");
  if (!j.at("seed").is_number_integer() || j.at("seed").get<long long>() < 0)
    throw ConfigError("seed", "must be a non-negative integer");
  c.seed = j.at("seed").get<std::uint64_t>();

  if (!j.contains("source")) throw ConfigError("source", "required");
  const Json& s = j.at("source");
  std::string type = field<std::string>(s, "type", "");
  if (type == "rpc") {
    c.kind = ExperimentConfig::SourceKind::rpc;
    c.rpc.zeta = field<std::vector<double>>(s, "zeta", {});
    c.rpc.q = field<std::vector<double>>(s, "q", {});
    try {
      c.rpc.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError("source.zeta/q", e.what());
    }
    c.rpc_m = field<std::vector<int>>(s, "m", {});
    if (c.rpc_m.size() != c.rpc.q.size()) throw ConfigError("source.m", "needs one truncation per level");
    for (int mk : c.rpc_m)
      if (mk < 1) throw ConfigError("source.m", "entries must be >= 1");
  } else if (type == "model") {
    c.kind = ExperimentConfig::SourceKind::model;
    if (!s.contains("model")) throw ConfigError("source.model", "required");
    try {
      c.model = model_from_json(s.at("model"));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw ConfigError("source.model", e.what());
    }
  } else {
    throw ConfigError("source.type", "must be \"rpc\" or \"model\"");
  }

  if (j.contains("q") && j.at("q").is_string()) {
    if (j.at("q").get<std::string>() != "auto") throw ConfigError("q", "must be a list or \"auto\"");
    if (c.kind != ExperimentConfig::SourceKind::rpc) throw ConfigError("q", "\"auto\" needs an rpc source");
    c.auto_q = true;
    c.q = interlacing_levels(c.rpc.q);
  } else {
    c.q = field<std::vector<double>>(j, "q", {});
    if (c.q.empty()) throw ConfigError("q", "required");
    for (std::size_t k = 0; k < c.q.size(); ++k)
      if (!(c.q[k] > 0 && c.q[k] <= 1) || (k && !(c.q[k] > c.q[k - 1])))
        throw ConfigError("q", "must be strictly increasing in (0,1]");
  }

  if (j.contains("shape") && j.at("shape").is_string()) {
    if (j.at("shape").get<std::string>() != "auto") throw ConfigError("shape", "must be a list or \"auto\"");
    if (c.kind != ExperimentConfig::SourceKind::rpc) throw ConfigError("shape", "\"auto\" needs an rpc source");
    c.auto_shape = true;
  } else {
    c.shape = field<std::vector<int>>(j, "shape", {});
    if (c.shape.size() != c.q.size()) throw ConfigError("shape", "needs one child count per level of q");
    for (int mk : c.shape)
      if (mk < 1) throw ConfigError("shape", "entries must be >= 1");
  }

  if (j.contains("eps") && j.at("eps").is_string()) {
    if (j.at("eps").get<std::string>() != "auto") throw ConfigError("eps", "must be a number or \"auto\"");
    if (c.kind != ExperimentConfig::SourceKind::rpc) throw ConfigError("eps", "\"auto\" needs an rpc source");
    c.auto_eps = true;
  } else {
    c.eps = positive_field(j, "eps", c.eps);
  }
  c.delta = positive_field(j, "delta", c.delta);
  c.kappa = positive_field(j, "kappa", c.kappa);
  c.Delta = positive_field(j, "Delta", c.Delta);
  c.violation_eps = field<double>(j, "violation_eps", c.violation_eps);
  if (c.violation_eps < 0) throw ConfigError("violation_eps", "must be non-negative");
  c.disorders = count_field(j, "disorders", c.disorders);
  c.replicas = count_field(j, "replicas", c.replicas);
  c.pairs = count_field(j, "pairs", c.pairs);
  c.rpc_samples = count_field(j, "rpc_samples", c.rpc_samples);
  c.k0 = j.contains("k0") ? count_field(j, "k0", 1) : 0;

  if (j.contains("centers") && j.at("centers").is_string()) {
    // M from the rates module: smallest block count for success probability 1 - η
    if (j.at("centers").get<std::string>() != "rates") throw ConfigError("centers", "must be a count or \"rates\"");
    if (c.kind != ExperimentConfig::SourceKind::rpc) throw ConfigError("centers", "\"rates\" needs an rpc source");
    if (c.auto_eps) throw ConfigError("centers", "\"rates\" needs a numeric eps");
    double eta = field<double>(j, "eta", 0.1);
    if (!(eta > 0 && eta < 1)) throw ConfigError("eta", "must lie in (0,1)");
    auto ps = rates::p_star(c.eps, eta, c.rpc.r(), c.rpc.zeta);
    double logM = rates::log_M_star(eta, ps.log_p_star);
    c.centers = static_cast<std::size_t>(std::min(std::ceil(std::exp(logM)), kMaxCenters));
  } else {
    c.centers = count_field(j, "centers", c.centers);
  }

  if (j.contains("gg")) {
    const Json& g = j.at("gg");
    c.gg_n = field<int>(g, "n", 2);
    if (c.gg_n < 1) throw ConfigError("gg.n", "must be >= 1");
    c.gg_psi.p = field<int>(g, "psi_power", 1);
    if (c.gg_psi.p < 0) throw ConfigError("gg.psi_power", "must be >= 0");
    if (g.contains("f")) {
      try {
        c.gg_f = replica_function_from_json(g.at("f"));
      } catch (const std::invalid_argument& e) {
        throw ConfigError("gg.f", e.what());
      }
      if (c.gg_f->arity() > c.gg_n) throw ConfigError("gg.f", "uses more replicas than gg.n");
    }
  }

  if (j.contains("dfm_a")) {
    if (c.kind != ExperimentConfig::SourceKind::model) throw ConfigError("dfm_a", "needs a model source");
    c.dfm_a = field<double>(j, "dfm_a", -1.0);
    if (*c.dfm_a == 0) throw ConfigError("dfm_a", "must be nonzero");
  }
  if (j.contains("talagrand")) {
    const Json& t = j.at("talagrand");
    ExperimentConfig::TalagrandSpec ts;
    ts.theta = field<double>(t, "theta", ts.theta);
    if (!(ts.theta > 0 && ts.theta < 1)) throw ConfigError("talagrand.theta", "must lie in (0,1)");
    ts.K = count_field(t, "K", ts.K);
    ts.samples = count_field(t, "samples", ts.samples);
    ts.compositions = field<std::vector<std::vector<int>>>(t, "compositions", ts.compositions);
    for (const auto& comp : ts.compositions)
      if (comp.empty() || comp[0] < 1 || std::any_of(comp.begin(), comp.end(), [](int x) { return x < 0; }))
        throw ConfigError("talagrand.compositions", "need n_1 >= 1 and non-negative parts");
    c.talagrand = ts;
  }

  std::string mode = field<std::string>(j, "mode", "exact");
  if (mode == "exact")
    c.mode = EstimatorMode::exact;
  else if (mode == "mc")
    c.mode = EstimatorMode::mc;
  else
    throw ConfigError("mode", "must be \"exact\" or \"mc\"");
  c.workers = field<int>(j, "workers", 1);
  if (c.workers < 1) throw ConfigError("workers", "must be >= 1");
  c.out_dir = field<std::string>(j, "out", "");
  return c;
}

Json config_to_json(const ExperimentConfig& c) {
  Json j;
  if (c.kind == ExperimentConfig::SourceKind::rpc)
    j["source"] = Json{{"type", "rpc"}, {"zeta", c.rpc.zeta}, {"q", c.rpc.q}, {"m", c.rpc_m}};
  else
    j["source"] = Json{{"type", "model"}, {"model", model_to_json(c.model)}};
  j["q"] = c.q;
  j["auto_q"] = c.auto_q;
  if (c.auto_shape)
    j["shape"] = "auto";
  else
    j["shape"] = c.shape;
  if (c.auto_eps)
    j["eps"] = "auto";
  else
    j["eps"] = c.eps;
  j["delta"] = c.delta;
  j["kappa"] = c.kappa;
  j["Delta"] = c.Delta;
  j["violation_eps"] = c.violation_eps;
  j["disorders"] = c.disorders;
  j["replicas"] = c.replicas;
  j["centers"] = c.centers;
  j["pairs"] = c.pairs;
  j["rpc_samples"] = c.rpc_samples;
  if (c.k0) j["k0"] = c.k0;
  j["gg"] = Json{{"n", c.gg_n}, {"psi_power", c.gg_psi.p}};
  if (c.dfm_a) j["dfm_a"] = *c.dfm_a;
  if (c.talagrand)
    j["talagrand"] = Json{{"theta", c.talagrand->theta},
                          {"K", c.talagrand->K},
                          {"samples", c.talagrand->samples},
                          {"compositions", c.talagrand->compositions}};
  j["seed"] = c.seed;
  j["mode"] = mode_name(c.mode);
  // workers is deliberately absent: results do not depend on it
  return j;
}

RunReport run(const ExperimentConfig& c, bool clustering) {
  auto t0 = std::chrono::steady_clock::now();
  const bool is_rpc = c.kind == ExperimentConfig::SourceKind::rpc;
  std::unique_ptr<ReplicaSource> src;
  if (is_rpc)
    src = std::make_unique<RPCSource>(c.rpc, c.rpc_m);
  else
    src = std::make_unique<GibbsSource>(c.model, c.model.beta);

  const std::size_t atoms = c.atoms_per_disorder();
  const bool exact_pairs = c.mode == EstimatorMode::exact && (!is_rpc || atoms <= kExactPairAtoms);
  const bool exact_triples = c.mode == EstimatorMode::exact && atoms <= kExactTripleAtoms;

  // Every stage starts from the same base, so stage d sees disorder d.
  auto root = [&] { return make_stream(c.seed); };

  Rng r0 = root();
  std::uint64_t base = r0();
  std::vector<DisorderOutcome> out(clustering ? c.disorders : 0);
  parallel_for(out.size(), c.workers, [&](std::size_t d) {
    Rng r = make_stream(base, d);
    DisorderOutcome& o = out[d];
    std::shared_ptr<const AtomicMeasure> mu;
    std::optional<CascadeWeights> cw;
    if (is_rpc) {
      cw = sample_rpc(c.rpc, c.rpc_m, r);
      mu = std::make_shared<RostMeasure>(*cw, c.rpc.q);
    } else {
      mu = std::make_shared<GibbsMeasure>(sample_disorder(c.model, r), c.model.beta);
    }
    o.record["index"] = d;
    const double eps = c.auto_eps ? 2 * cw->dust : c.eps;
    if (c.auto_eps) o.record["eps"] = eps;
    TreeShape shape;
    if (c.auto_shape) {
      try {
        shape = greedy_tree_shape(cw->tree, eps);
      } catch (const std::domain_error& e) {
        o.record["found"] = false;
        o.record["note"] = e.what();
        return;
      }
    } else {
      shape = TreeShape(c.shape);
    }
    o.record["shape"] = shape.m;
    std::size_t tried = 0;
    auto res = search_exhaustion(*mu, c.q, eps, c.delta, shape, c.centers, r, &tried);
    o.found = res.has_value();
    o.record["found"] = o.found;
    o.record["blocks_tried"] = tried;
    if (!res) return;
    o.record["block"] = res->block;
    ClusterDecomposition dec = clean_clusters(res->family, *mu);
    o.stats = clustering_stats(*mu, dec, eps, &r, c.pairs);
    o.Y = cluster_masses(dec).tree;
    o.record["decomposition"] = decomposition_to_json(dec, *mu, false);
    o.record["stats"] = o.stats.to_json();
    o.record["masses"] = o.Y.weights;
    if (cw) {
      double err = 0;
      for (const auto& v : enumerate(o.Y.shape)) {
        double truth = cw->shape().contains(v) ? cw->tree.at(v) : 0.0;
        err = std::max(err, std::abs(o.Y.at(v) - truth));
      }
      o.mass_error = err;
      o.record["mass_error"] = Json{{"estimate", err}, {"dust", cw->dust}, {"mode", "exact"}, {"samples", 1}};
    }
    o.gap = indicator_approx_gap(*mu, dec, c.kappa, &r, c.pairs);
    o.has_gap = true;
    o.record["indicator_gap"] = estimate_json(o.gap);
    if (c.k0) {
      std::vector<std::pair<double, std::vector<std::size_t>>> leaves;
      for (std::size_t j = 0; j < dec.shape.level_size(dec.shape.depth()); ++j) {
        std::size_t v = dec.leaf_offset() + j;
        leaves.emplace_back(dec.masses[v], dec.sets[v]);
      }
      std::stable_sort(leaves.begin(), leaves.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
      if (leaves.size() < c.k0) {
        o.orthogonal = 0;
        o.record["orthogonal"] = Json{{"pass", false}, {"note", "fewer leaf clusters than k0"}};
      } else {
        std::vector<std::vector<std::size_t>> sets;
        for (auto& l : leaves) sets.push_back(std::move(l.second));
        auto orth = orthogonal_structure_check(*mu, sets, eps, c.k0);
        o.orthogonal = orth.pass() ? 1 : 0;
        o.record["orthogonal"] = orth.to_json();
      }
    }
  });

  Json report;
  report["config"] = config_to_json(c);
  report["versions"] = Json{{"ultra", kVersion},
                            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
  Json disorders = Json::array();
  Accumulator success, f_acc, g_acc, gap_acc, orth_acc;
  bool stats_exact = true, gap_exact = true;
  double mass_err = 0;
  std::vector<WeightedTree> Y;
  for (auto& o : out) {
    disorders.push_back(std::move(o.record));
    success.add(o.found ? 1.0 : 0.0);
    if (!o.found) continue;
    f_acc.add(o.stats.f_total);
    g_acc.add(o.stats.g_total);
    stats_exact = stats_exact && o.stats.mode == "exact";
    mass_err = std::max(mass_err, o.mass_error);
    Y.push_back(o.Y);
    if (o.has_gap) {
      gap_acc.add(o.gap.value);
      gap_exact = gap_exact && o.gap.mode == "exact";
    }
    if (o.orthogonal >= 0) orth_acc.add(o.orthogonal);
  }

  Json agg;
  if (clustering) agg["search_success"] = estimate_json(success.estimate("mc"));
  if (f_acc.count) {
    agg["f_total"] = estimate_json(f_acc.estimate(stats_exact ? "exact" : "mc"));
    agg["g_total"] = estimate_json(g_acc.estimate(stats_exact ? "exact" : "mc"));
    agg["indicator_gap"] = estimate_json(gap_acc.estimate(gap_exact ? "exact" : "mc"));
    if (is_rpc) agg["mass_error_max"] = Json{{"estimate", mass_err}, {"samples", f_acc.count}, {"mode", "exact"}};
  }
  if (clustering && c.k0) agg["orthogonal_pass_rate"] = estimate_json(orth_acc.estimate("mc"));

  // overlap law and admissibility
  std::vector<double> edges = is_rpc ? linspace_edges(-1, 1, 40) : overlap_bins(c.model.N);
  Rng rh = root();
  Histogram hist = overlap_histogram(*src, edges, c.disorders, c.replicas, rh,
                                     exact_pairs ? EstimatorMode::exact : EstimatorMode::mc, c.workers);
  agg["overlap_histogram"] = hist.to_json();
  DiscreteLaw law;
  if (is_rpc) {
    law = rpc_overlap_law(c.rpc);
  } else {
    for (std::size_t b = 0; b < hist.mass.size(); ++b) {
      law.atoms.push_back(0.5 * (edges[b] + edges[b + 1]));
      law.masses.push_back(hist.mass[b]);
    }
  }
  Json adm = validate_admissible(law, c.q).to_json();
  adm["law"] = is_rpc ? "exact" : hist.mode;
  agg["admissibility"] = adm;

  ReplicaFunction f = c.gg_f ? *c.gg_f : ReplicaFunction::indicator_ge(c.q.front());
  bool gg_exact = exact_pairs && c.gg_n == 2 && f.only_r12();
  Rng rg = root();
  auto gg = gg_residual(*src, f, c.gg_psi, c.gg_n, c.disorders, c.replicas, rg,
                        gg_exact ? EstimatorMode::exact : EstimatorMode::mc, c.workers);
  Rng ru = root();
  auto viol = ultrametric_violation(*src, c.violation_eps, c.disorders, c.replicas, ru,
                                    exact_triples ? EstimatorMode::exact : EstimatorMode::mc, c.workers);
  Rng rp = root();
  auto pos = positivity_defect(*src, c.violation_eps, c.disorders, c.replicas, rp,
                               exact_pairs ? EstimatorMode::exact : EstimatorMode::mc, c.workers);
  Json model = src->describe();
  agg["gg_residual"] = diagnostic_record("gg_residual", model, gg, c.seed);
  agg["ultrametric_violation"] = diagnostic_record("ultrametric_violation", model, viol, c.seed);
  agg["positivity_defect"] = diagnostic_record("positivity_defect", model, pos, c.seed);

  // cluster masses against RPC moments
  std::optional<RPCParams> ref;
  std::vector<int> ref_m;
  std::string ref_note;
  if (is_rpc) {
    ref = c.rpc;
    ref_m = c.rpc_m;
  } else {
    RPCParams p;
    p.q = c.q;
    for (double qk : c.q) p.zeta.push_back(1.0 - hist.mass_above(qk));
    try {
      p.validate();
      ref = p;
      ref_m.assign(c.q.size(), c.q.size() == 1 ? 200 : 30);
    } catch (const std::invalid_argument& e) {
      ref_note = std::string("no RPC reference: ") + e.what();
    }
  }
  if (!clustering) {
    // diagnostics only
  } else if (ref && !Y.empty()) {
    std::vector<MassMoment> moments{{{{Vertex{1}, 1}}}, {{{Vertex{1}, 2}}}, {{{Vertex{1}, 3}}}};
    if (c.q.size() >= 2) moments.push_back({{{Vertex{1, 1}, 1}}});
    Rng rm = make_stream(c.seed, 1);
    auto gaps = compare_to_rpc(Y, *ref, moments, ref_m, c.rpc_samples, rm);
    Json arr = Json::array();
    for (const auto& g : gaps)
      arr.push_back(Json{{"moment", g.moment.describe()},
                         {"empirical", g.empirical},
                         {"rpc", g.rpc},
                         {"gap", g.gap},
                         {"stderr", g.se},
                         {"n_empirical", g.n_empirical},
                         {"n_rpc", g.n_rpc},
                         {"mode", "mc"}});
    agg["mass_law"] = Json{{"zeta", ref->zeta}, {"gaps", arr}};
  } else {
    agg["mass_law"] = Json{{"note", ref_note.empty() ? "no recovered clusters" : ref_note}};
  }

  if (c.dfm_a) {
    Rng rd = root();
    auto e = dfm_gap(c.model, c.model.beta, *c.dfm_a, c.disorders, rd, c.workers);
    Json rec = diagnostic_record("dfm_gap", model, e, c.seed);
    rec["a"] = *c.dfm_a;
    agg["dfm_gap"] = rec;
  }
  if (c.talagrand) {
    const auto& ts = *c.talagrand;
    Rng rt = make_stream(c.seed, 2);
    std::uint64_t tb = rt();
    std::vector<Partition> parts(ts.samples);
    parallel_for(ts.samples, c.workers, [&](std::size_t i) {
      Rng r = make_stream(tb, i);
      parts[i] = sample_pd(ts.theta, ts.K, r).atoms;
    });
    Json arr = Json::array();
    Json pd = Json{{"source", "pd"}, {"theta", ts.theta}, {"K", ts.K}};
    for (const auto& comp : ts.compositions) {
      Json rec = diagnostic_record("talagrand_residual", pd, talagrand_residual(parts, comp), c.seed);
      rec["composition"] = comp;
      arr.push_back(rec);
    }
    agg["talagrand"] = arr;
  }

  if (clustering) report["disorders"] = std::move(disorders);
  report["aggregate"] = std::move(agg);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report["timing"] = Json{{"seconds", secs}};
  return {std::move(report), std::move(hist)};
}

Json strip_timing(Json j) {
  if (j.is_object()) {
    j.erase("timing");
    for (auto& [k, v] : j.items()) v = strip_timing(v);
  } else if (j.is_array()) {
    for (auto& v : j) v = strip_timing(v);
  }
  return j;
}

}  // namespace ultra
