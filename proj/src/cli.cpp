#include "ultra/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "ultra/parallel.hpp"
#include "ultra/pipeline.hpp"
#include "ultra/rates.hpp"

namespace ultra {

namespace {

struct Common {
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "json";
  std::string config;
  std::optional<int> workers;
};

void add_common(CLI::App* sub, Common& c, bool config_required) {
  sub->add_option("--seed", c.seed, "random seed");
  sub->add_option("--out", c.out, "output directory (default: $" + std::string(kOutDirEnv) + " or stdout)");
  sub->add_option("--format", c.format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}))
      ->multi_option_policy(CLI::MultiOptionPolicy::Throw);
  auto* cfg = sub->add_option("--config", c.config, "JSON config file");
  if (config_required) cfg->required();
  sub->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
}

Json load_config(const std::string& path) {
  if (path.empty()) return Json::object();
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("--config", e.what());
  }
}

std::uint64_t require_seed(const Common& c, const Json& cfg) {
  if (c.seed) return *c.seed;
  if (cfg.contains("seed") && cfg["seed"].is_number_unsigned()) return cfg["seed"].get<std::uint64_t>();
  throw ConfigError("seed", "required (--seed or config)");
}

// Files go to --out, else the environment default, else stdout.
struct Sink {
  std::string dir;
  std::ostream& out;

  void emit(const std::string& name, const std::string& body) const {
    if (dir.empty()) {
      out << body;
      if (!body.empty() && body.back() != '\n') out << '\n';
      return;
    }
    std::filesystem::create_directories(dir);
    std::ofstream f(std::filesystem::path(dir) / name);
    if (!f) throw std::runtime_error("cannot write " + name + " in " + dir);
    f << body;
    if (!body.empty() && body.back() != '\n') f << '\n';
  }
};

Sink make_sink(const Common& c, const Json& cfg, std::ostream& out) {
  std::string dir = c.out;
  if (dir.empty() && cfg.contains("out") && cfg["out"].is_string()) dir = cfg["out"].get<std::string>();
  if (dir.empty())
    if (const char* env = std::getenv(kOutDirEnv)) dir = env;
  return {dir, out};
}

std::string dump(const Json& j) { return j.dump(2); }

template <class T>
T get_or(const Json& cfg, const char* key, T fallback) {
  if (!cfg.contains(key)) return fallback;
  try {
    return cfg.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(key, e.what());
  }
}

int cmd_sample_pd(const Common& c, double theta, std::size_t K, std::size_t n, std::size_t top, std::ostream& out) {
  Json cfg = load_config(c.config);
  theta = get_or(cfg, "theta", theta);
  K = get_or(cfg, "K", K);
  n = get_or(cfg, "samples", n);
  top = get_or(cfg, "top", top);
  if (!(theta > 0 && theta < 1)) throw ConfigError("theta", "must lie in (0,1)");
  if (K < 1 || n < 1) throw ConfigError("K/samples", "must be >= 1");
  std::uint64_t seed = require_seed(c, cfg);
  Rng rng = make_stream(seed);
  Accumulator v2;
  std::ostringstream csv;
  csv.precision(17);
  csv << "sample,rank,atom\n";
  Json samples = Json::array();
  std::size_t flagged = 0;
  for (std::size_t s = 0; s < n; ++s) {
    PDSample p = sample_pd(theta, K, rng, 1e-2);
    double sum2 = 0;
    for (double a : p.atoms) sum2 += a * a;
    v2.add(sum2);
    flagged += p.tail_flagged ? 1 : 0;
    std::size_t k = std::min(top, p.atoms.size());
    std::vector<double> head(p.atoms.begin(), p.atoms.begin() + static_cast<long>(k));
    for (std::size_t r = 0; r < k; ++r) csv << s << ',' << r + 1 << ',' << head[r] << '\n';
    samples.push_back(Json{{"top", head}, {"sum_v2", sum2}, {"tail_flagged", p.tail_flagged}});
  }
  Sink sink = make_sink(c, cfg, out);
  if (c.format == "csv") {
    sink.emit("sample_pd.csv", csv.str());
  } else {
    Json j{{"theta", theta}, {"K", K}, {"seed", seed}, {"sum_v2", to_json(v2.estimate())},
           {"tail_flagged", flagged}, {"samples", samples}};
    sink.emit("sample_pd.json", dump(j));
  }
  return 0;
}

int cmd_sample_rpc(const Common& c, std::vector<double> zeta, std::vector<double> q, std::vector<int> m,
                   std::size_t n, std::ostream& out) {
  Json cfg = load_config(c.config);
  zeta = get_or(cfg, "zeta", zeta);
  q = get_or(cfg, "q", q);
  m = get_or(cfg, "m", m);
  n = get_or(cfg, "samples", n);
  RPCParams p{zeta, q};
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("zeta/q", e.what());
  }
  if (m.size() != q.size()) throw ConfigError("m", "needs one truncation per level");
  for (int mk : m)
    if (mk < 1) throw ConfigError("m", "entries must be >= 1");
  std::uint64_t seed = require_seed(c, cfg);
  Rng rng = make_stream(seed);
  std::ostringstream csv;
  csv.precision(17);
  csv << "sample,vertex,weight\n";
  Json arr = Json::array();
  for (std::size_t s = 0; s < n; ++s) {
    auto cw = sample_rpc(p, m, rng);
    auto verts = enumerate(cw.shape());
    for (std::size_t i = 0; i < verts.size(); ++i) csv << s << ",\"" << to_string(verts[i]) << "\"," << cw.tree.weights[i] << '\n';
    csv << s << ",dust," << cw.dust << '\n';
    arr.push_back(cascade_to_json(cw));
  }
  Sink sink = make_sink(c, cfg, out);
  if (c.format == "csv")
    sink.emit("sample_rpc.csv", csv.str());
  else
    sink.emit("sample_rpc.json", dump(Json{{"zeta", zeta}, {"q", q}, {"m", m}, {"seed", seed}, {"samples", arr}}));
  return 0;
}

int cmd_simulate(const Common& c, std::ostream& out) {
  Json cfg = load_config(c.config);
  if (!cfg.contains("model")) throw ConfigError("model", "required");
  ModelSpec model;
  try {
    model = model_from_json(cfg["model"]);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("model", e.what());
  }
  std::size_t n_dis = get_or<std::size_t>(cfg, "disorders", 100);
  std::size_t pairs = get_or<std::size_t>(cfg, "pairs", 10000);
  std::string mode = get_or<std::string>(cfg, "mode", "exact");
  if (mode != "exact" && mode != "mc") throw ConfigError("mode", "must be \"exact\" or \"mc\"");
  if (n_dis < 1 || pairs < 1) throw ConfigError("disorders/pairs", "must be >= 1");
  int workers = c.workers.value_or(get_or(cfg, "workers", 1));
  std::uint64_t seed = require_seed(c, cfg);
  EstimatorMode em = mode == "exact" ? EstimatorMode::exact : EstimatorMode::mc;

  Rng rng = make_stream(seed);
  Histogram h = empirical_overlap_law(model, model.beta, n_dis, pairs, overlap_bins(model.N), rng, em, workers);
  Rng rz = make_stream(seed);
  std::uint64_t base = rz();
  std::vector<double> logz(n_dis);
  parallel_for(n_dis, workers, [&](std::size_t d) {
    Rng r = make_stream(base, d);
    logz[d] = log_partition(sample_disorder(model, r), model.beta);
  });
  Accumulator fe;
  for (double lz : logz) fe.add(-lz / (model.beta * model.N));
  Sink sink = make_sink(c, cfg, out);
  if (c.format == "csv") {
    sink.emit("overlap_histogram.csv", h.csv());
  } else {
    Json j{{"model", model_to_json(model)},
           {"seed", seed},
           {"overlap_histogram", h.to_json()},
           {"free_energy", to_json(fe.estimate("mc"))}};
    if (!model.rounding_note.empty()) j["rounding_note"] = model.rounding_note;
    sink.emit("simulate.json", dump(j));
  }
  return 0;
}

int cmd_run(const Common& c, bool clustering, std::ostream& out) {
  Json cfg = load_config(c.config);
  if (c.seed) cfg["seed"] = *c.seed;
  if (c.workers) cfg["workers"] = *c.workers;
  ExperimentConfig ec = config_from_json(cfg);
  RunReport rep = run(ec, clustering);
  Sink sink = make_sink(c, cfg, out);
  const char* name = clustering ? "report.json" : "diagnostics.json";
  if (sink.dir.empty()) {
    sink.emit(name, c.format == "csv" ? rep.histogram.csv() : dump(rep.report));
  } else {
    sink.emit(name, dump(rep.report));
    sink.emit("overlap_histogram.csv", rep.histogram.csv());
  }
  return 0;
}

std::string fmt_num(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

int cmd_rates(const Common& c, std::vector<double> eps, std::vector<double> eta, std::vector<double> zeta,
              double delta, int nu_max, std::optional<double> gamma, double cD, std::ostream& out) {
  Json cfg = load_config(c.config);
  eps = get_or(cfg, "eps", eps);
  eta = get_or(cfg, "eta", eta);
  zeta = get_or(cfg, "zeta", zeta);
  delta = get_or(cfg, "delta", delta);
  nu_max = get_or(cfg, "nu_max", nu_max);
  if (cfg.contains("gamma")) gamma = get_or(cfg, "gamma", 1.0);
  cD = get_or(cfg, "c", cD);
  if (zeta.empty()) throw ConfigError("zeta", "required");
  if (nu_max < 1) throw ConfigError("nu_max", "must be >= 1");

  Json rows = Json::array();
  std::ostringstream csv;
  csv << "eps,eta,nu,m_star,log_p_star,log_M_star,K,alpha,log_m_double_star,log_b_double_bar,"
         "log_neg_log_p,log_log_M,log_log_I,log_n0,log_log_N0,log_log_log_N0,zeta_note\n";
  for (double e : eps)
    for (double h : eta) {
      rates::RateInputs in;
      in.r = static_cast<int>(zeta.size());
      in.zeta = zeta;
      in.eps = e;
      in.delta = delta;
      in.eta = h;
      if (gamma) in.D = rates::DecayModel{rates::DecayModel::Kind::power_law, cD, *gamma, {}};
      try {
        in.validate();
      } catch (const std::invalid_argument& ex) {
        throw ConfigError("rates", ex.what());
      }
      auto ps = rates::p_star(e, h, in.r, zeta);
      double logM = rates::log_M_star(h, ps.log_p_star);
      for (int nu = 1; nu <= nu_max; ++nu) {
        auto o = rates::quant_rates(in, nu);
        auto opt = [](const std::optional<double>& v) { return v ? fmt_num(*v) : std::string(); };
        csv << fmt_num(e) << ',' << fmt_num(h) << ',' << nu << ',' << ps.m_star << ',' << fmt_num(ps.log_p_star) << ','
            << fmt_num(logM) << ',' << o.K << ',' << fmt_num(o.alpha) << ',' << fmt_num(o.log_m_double_star) << ','
            << fmt_num(o.log_b_double_bar) << ',' << fmt_num(o.log_neg_log_p) << ',' << fmt_num(o.log_log_M) << ','
            << fmt_num(o.log_log_I) << ',' << fmt_num(o.log_n0) << ',' << opt(o.log_log_N0) << ','
            << opt(o.log_log_log_N0) << ",\"" << o.zeta_note << "\"\n";
        Json row{{"eps", e},
                 {"eta", h},
                 {"nu", nu},
                 {"m_star", ps.m_star},
                 {"log_p_star", ps.log_p_star},
                 {"log_M_star", logM},
                 {"K", o.K},
                 {"alpha", o.alpha},
                 {"log_m_double_star", o.log_m_double_star},
                 {"log_b_double_bar", o.log_b_double_bar},
                 {"log_neg_log_p", o.log_neg_log_p},
                 {"log_log_M", o.log_log_M},
                 {"log_log_I", o.log_log_I},
                 {"log_n0", o.log_n0},
                 {"zeta_note", o.zeta_note},
                 {"mode", "exact"}};
        if (o.log_log_N0) row["log_log_N0"] = *o.log_log_N0;
        if (o.log_log_log_N0) row["log_log_log_N0"] = *o.log_log_log_N0;
        rows.push_back(row);
      }
    }
  Sink sink = make_sink(c, cfg, out);
  if (c.format == "csv")
    sink.emit("rates.csv", csv.str());
  else
    sink.emit("rates.json", dump(rows));
  return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hierarchical clustering of random measures: samplers, cluster search and diagnostics"};
  app.require_subcommand(1);

  Common pd_c, rpc_c, sim_c, clu_c, dia_c, rat_c;
  double theta = 0.5;
  std::size_t K = 2000, pd_n = 1, top = 10;
  auto* pd = app.add_subcommand("sample-pd", "ranked PD(theta) samples");
  add_common(pd, pd_c, false);
  pd->add_option("--theta", theta, "PD parameter in (0,1)");
  pd->add_option("--K", K, "retained atoms");
  pd->add_option("--samples", pd_n, "number of samples");
  pd->add_option("--top", top, "atoms reported per sample");

  std::vector<double> zeta, q;
  std::vector<int> m;
  std::size_t rpc_n = 1;
  auto* rpc = app.add_subcommand("sample-rpc", "truncated RPC cascades");
  add_common(rpc, rpc_c, false);
  rpc->add_option("--zeta", zeta, "levels zeta_0 < ... < zeta_{r-1}")->delimiter(',');
  rpc->add_option("--q", q, "overlap levels q_1 < ... < q_r")->delimiter(',');
  rpc->add_option("--m", m, "children per depth")->delimiter(',');
  rpc->add_option("--samples", rpc_n, "number of cascades");

  auto* sim = app.add_subcommand("simulate", "overlap law and free energy of a spin-glass model");
  add_common(sim, sim_c, true);
  auto* clu = app.add_subcommand("cluster", "full clustering pipeline with diagnostics");
  add_common(clu, clu_c, true);
  auto* dia = app.add_subcommand("diagnose", "diagnostics only");
  add_common(dia, dia_c, true);

  std::vector<double> r_eps{0.1}, r_eta{0.1}, r_zeta;
  double r_delta = 0.1, r_c = 1.0;
  int nu_max = 4;
  std::optional<double> r_gamma;
  auto* rat = app.add_subcommand("rates", "quantitative rate table over a parameter grid");
  add_common(rat, rat_c, false);
  rat->add_option("--eps", r_eps, "eps values")->delimiter(',');
  rat->add_option("--eta", r_eta, "eta values")->delimiter(',');
  rat->add_option("--zeta", r_zeta, "zeta levels")->delimiter(',');
  rat->add_option("--delta", r_delta, "delta");
  rat->add_option("--nu-max", nu_max, "largest nu");
  rat->add_option("--gamma", r_gamma, "power-law decay exponent of D(N)");
  rat->add_option("--c", r_c, "power-law decay prefactor of D(N)");

  std::vector<std::string> rest(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::CallForHelp&) {
    CLI::App* target = &app;
    for (auto* sc : app.get_subcommands()) target = sc;
    out << target->help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    CLI::App* failing = &app;
    for (auto* s : app.get_subcommands()) failing = s;
    err << failing->help();
    return 2;
  }

  try {
    if (pd->parsed()) return cmd_sample_pd(pd_c, theta, K, pd_n, top, out);
    if (rpc->parsed()) return cmd_sample_rpc(rpc_c, zeta, q, m, rpc_n, out);
    if (sim->parsed()) return cmd_simulate(sim_c, out);
    if (clu->parsed()) return cmd_run(clu_c, true, out);
    if (dia->parsed()) return cmd_run(dia_c, false, out);
    if (rat->parsed()) return cmd_rates(rat_c, r_eps, r_eta, r_zeta, r_delta, nu_max, r_gamma, r_c, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace ultra
