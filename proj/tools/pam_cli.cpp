// Command-line runner: subcommand dispatch, config handling, seed
// management, CSV/report persistence. Exit codes: 0 success, 1 assertion
// failure, 2 usage/config error.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "pam/bridge.hpp"
#include "pam/chaos.hpp"
#include "pam/config.hpp"
#include "pam/experiments.hpp"
#include "pam/manifest.hpp"
#include "pam/moments.hpp"
#include "pam/special.hpp"
#include "pam/spde.hpp"
#include "pam/stats.hpp"
#include "pam/version.hpp"

namespace fs = std::filesystem;
using namespace pam;

namespace {

struct GlobalOpts {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  bool seed_set = false;
  int workers = 1;
};

Eigen::VectorXd parse_point(const std::string& csv) {
  std::vector<double> xs;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) xs.push_back(std::stod(tok));
  Eigen::VectorXd p(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) p[i] = xs[i];
  return p;
}

std::vector<Eigen::VectorXd> parse_points(const std::string& spec) {
  std::vector<Eigen::VectorXd> out;
  std::stringstream ss(spec);
  std::string group;
  while (std::getline(ss, group, ';'))
    if (!group.empty()) out.push_back(parse_point(group));
  return out;
}

// "gauss:cx,...,amp,width" or "ball:cx,...,radius,edge"
TestFunction parse_test_function(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos)
    throw std::invalid_argument("test function: expected kind:numbers, got " +
                                spec);
  const std::string kind = spec.substr(0, colon);
  const Eigen::VectorXd all = parse_point(spec.substr(colon + 1));
  if (all.size() < 3)
    throw std::invalid_argument("test function: too few numbers");
  const Eigen::VectorXd center = all.head(all.size() - 2);
  if (kind == "gauss")
    return TestFunction::gaussian(center, all[all.size() - 2],
                                  all[all.size() - 1]);
  if (kind == "ball")
    return TestFunction::smooth_ball(center, all[all.size() - 2],
                                     all[all.size() - 1]);
  throw std::invalid_argument("test function: unknown kind " + kind);
}

struct OutputContext {
  fs::path dir;
  RunManifest manifest;

  explicit OutputContext(const GlobalOpts& g, std::uint64_t config_hash) {
    dir = g.out_dir;
    fs::create_directories(dir);
    manifest.config_hash = config_hash;
    manifest.master_seed = g.seed;
    manifest.started = timestamp_utc();
  }
  std::string path(const std::string& name) const {
    return (dir / name).string();
  }
  void finish() {
    manifest.finished = timestamp_utc();
    manifest.write(path("run_manifest.json"));
  }
};

MeasureSpec measure_from_config(KeyValueConfig& cfg, int d,
                                double delta_default) {
  const std::string kind = cfg.get_string("init.kind", "lebesgue");
  if (kind == "lebesgue")
    return MeasureSpec::lebesgue(cfg.get_double("init.intensity", 1.0));
  if (kind == "uniform_ball")
    return MeasureSpec::uniform_ball(
        parse_point(cfg.get_string("init.center", "0,0,0")),
        cfg.get_double("init.radius", 1.0), cfg.get_double("init.mass", 1.0),
        cfg.get_double("init.delta", 0.0));
  if (kind == "atoms") {
    std::vector<std::pair<Eigen::VectorXd, double>> atoms;
    for (const auto& p : parse_points(cfg.get_string("init.atoms"))) {
      if (p.size() != d + 1)
        throw std::invalid_argument("init.atoms: need d coords + weight");
      atoms.emplace_back(p.head(d), p[d]);
    }
    return MeasureSpec::atom_cloud(std::move(atoms),
                                   cfg.get_double("init.delta", delta_default));
  }
  if (kind == "density")
    return MeasureSpec::smooth_density(
        parse_test_function(cfg.get_string("init.density")));
  throw std::invalid_argument("config: unknown init.kind '" + kind + "'");
}

int run_exact(const GlobalOpts& g, const std::string& fn, KeyValueConfig& cfg) {
  double value = 0.0;
  if (fn == "alpha") {
    value = alpha_of_eta(static_cast<int>(cfg.get_int("d", 3)),
                         cfg.get_double("eta"));
  } else if (fn == "heat-kernel") {
    const Eigen::VectorXd x = parse_point(cfg.get_string("x", "0,0,0"));
    value = heat_kernel(static_cast<int>(cfg.get_int("d", 3)),
                        cfg.get_double("t", 1.0), x.squaredNorm());
  } else if (fn == "bessel-i") {
    value = bessel_i(cfg.get_double("nu"), cfg.get_double("z"));
  } else if (fn == "bessel-density") {
    value = bessel_transition_density(
        cfg.get_double("d", 3), cfg.get_double("t", 1.0),
        cfg.get_double("a", 1.0), cfg.get_double("b", 1.0));
  } else if (fn == "bridge-moment") {
    value = bridge_exp_moment_exact(
        static_cast<int>(cfg.get_int("d", 3)), cfg.get_double("eta"),
        cfg.get_double("a", 1.0), cfg.get_double("b", 1.0),
        cfg.get_double("t", 1.0));
  } else if (fn == "bridge-bound") {
    value = bridge_exp_moment_bound(
        static_cast<int>(cfg.get_int("d", 3)), cfg.get_double("eta"),
        cfg.get_double("a", 1.0), cfg.get_double("b", 1.0),
        cfg.get_double("t", 1.0), cfg.get_double("c_eta", 1.0));
  } else if (fn == "riesz") {
    value = riesz_constant(static_cast<int>(cfg.get_int("d", 3)));
  } else if (fn == "h-eps") {
    value = h_eps_free(static_cast<int>(cfg.get_int("d", 3)),
                       cfg.get_double("epsilon"), cfg.get_double("r"));
  } else {
    std::cerr << "unknown exact function '" << fn << "'\n";
    return 2;
  }
  cfg.ensure_all_consumed();
  std::cout << format_full(value) << "\n";
  return 0;
}

int run_bridge_moment(const GlobalOpts& g, KeyValueConfig& cfg) {
  const int d = static_cast<int>(cfg.get_int("d", 3));
  const double eta = cfg.get_double("eta");
  const double t = cfg.get_double("t", 1.0);
  const int m = static_cast<int>(cfg.get_int("m", 2048));
  const std::size_t n_paths =
      static_cast<std::size_t>(cfg.get_int("n_paths", 100000));
  const bool binned = cfg.get_bool("binned", false);

  OutputContext out(g, fnv1a_hash(cfg.render()));
  CsvWriter csv(out.path("bridge_moment.csv"),
                {"mode", "d", "eta", "t", "m", "n_paths", "mean", "std_error",
                 "n_samples", "clip_fraction"});

  if (binned) {
    const double a = cfg.get_double("a", 1.0);
    const double b = cfg.get_double("b", 1.0);
    const double delta = cfg.get_double("delta", 0.05);
    cfg.ensure_all_consumed();
    const auto est = bessel_binned_exp_moment(
        d, eta, a, b, delta, t, m, n_paths, {g.seed, stream::kBessel},
        g.workers);
    csv.row({"binned", std::to_string(d), format_full(eta), format_full(t),
             std::to_string(m), std::to_string(n_paths),
             format_full(est.estimate.mean), format_full(est.estimate.std_error),
             std::to_string(est.estimate.n_samples), "0"});
    std::cout << "binned estimate " << format_full(est.estimate.mean) << " +- "
              << format_full(est.estimate.std_error) << "  (hit fraction "
              << format_full(est.bin_probability) << ")\n";
  } else {
    const Eigen::VectorXd start = parse_point(cfg.get_string("start"));
    const Eigen::VectorXd end = parse_point(cfg.get_string("end"));
    const double clip = cfg.get_double("clip", 1e4);
    cfg.ensure_all_consumed();
    const auto est =
        exp_functional_mc(d, eta, start, end, t, m, n_paths, clip,
                          {g.seed, stream::kBridge}, g.workers);
    csv.row({"bridge", std::to_string(d), format_full(eta), format_full(t),
             std::to_string(m), std::to_string(n_paths),
             format_full(est.mean), format_full(est.std_error),
             std::to_string(est.n_samples), format_full(est.clip_fraction)});
    std::cout << "bridge estimate " << format_full(est.mean) << " +- "
              << format_full(est.std_error) << "  (clip fraction "
              << format_full(est.clip_fraction) << ")\n";
  }
  out.manifest.add_output(out.path("bridge_moment.csv"));
  out.finish();
  return 0;
}

int run_pair_moment(const GlobalOpts& g, KeyValueConfig& cfg) {
  const int d = static_cast<int>(cfg.get_int("d", 3));
  const double kappa = cfg.get_double("kappa");
  const ModelParams params(d, kappa);
  const double t = cfg.get_double("t", 1.0);
  const int m = static_cast<int>(cfg.get_int("m", 2048));
  const std::size_t n_paths =
      static_cast<std::size_t>(cfg.get_int("n_paths", 50000));
  const double clip = cfg.get_double("clip", 1e4);
  auto starts = parse_points(cfg.get_string("starts"));
  auto ends = parse_points(cfg.get_string("ends"));
  cfg.ensure_all_consumed();

  OutputContext out(g, fnv1a_hash(cfg.render()));
  const auto est = pair_interaction_mc(params, starts, ends, t, m, n_paths,
                                       clip, {g.seed, stream::kPair},
                                       g.workers);
  CsvWriter csv(out.path("pair_moment.csv"),
                {"n_bridges", "d", "kappa", "t", "m", "n_paths", "mean",
                 "std_error", "n_samples", "clip_fraction"});
  csv.row({std::to_string(starts.size()), std::to_string(d),
           format_full(kappa), format_full(t), std::to_string(m),
           std::to_string(n_paths), format_full(est.mean),
           format_full(est.std_error), std::to_string(est.n_samples),
           format_full(est.clip_fraction)});
  std::cout << "pair estimate " << format_full(est.mean) << " +- "
            << format_full(est.std_error) << "\n";
  out.manifest.add_output(out.path("pair_moment.csv"));
  out.finish();
  return 0;
}

int run_noise_check(const GlobalOpts& g, KeyValueConfig& cfg) {
  const int d = static_cast<int>(cfg.get_int("d", 3));
  const ModelParams params(d, cfg.get_double("kappa", 0.0));
  LatticeSpec lattice;
  lattice.d = d;
  lattice.n = static_cast<int>(cfg.get_int("lattice.n", 32));
  lattice.box_length = cfg.get_double("lattice.L", 4.0);
  const double epsilon = cfg.get_double("epsilon");
  const double dt = cfg.get_double("dt", 0.01);
  const std::size_t n_inc =
      static_cast<std::size_t>(cfg.get_int("n_increments", 200));
  std::vector<std::vector<int>> lags;
  {
    std::stringstream ss(cfg.get_string("lags", "0,0,0;1,0,0;2,0,0;4,0,0"));
    std::string group;
    while (std::getline(ss, group, ';')) {
      std::vector<int> lag;
      std::stringstream gs(group);
      std::string tok;
      while (std::getline(gs, tok, ',')) lag.push_back(std::stoi(tok));
      lags.push_back(lag);
    }
  }
  const bool snapshot = cfg.get_bool("snapshot", false);
  cfg.ensure_all_consumed();

  OutputContext out(g, fnv1a_hash(cfg.render()));
  const auto kernels = build_kernels(params, epsilon, lattice);
  const auto rows = empirical_covariance_stream(kernels, dt, n_inc, lags,
                                                {g.seed, stream::kNoise});

  CsvWriter csv(out.path("noise_covariance.csv"),
                {"lag_cells", "expected", "estimate", "std_error"});
  bool all_ok = true;
  for (const auto& row : rows) {
    std::string lag;
    for (std::size_t i = 0; i < row.lag.size(); ++i)
      lag += (i ? "|" : "") + std::to_string(row.lag[i]);
    csv.row({lag, format_full(row.expected), format_full(row.estimate),
             format_full(row.std_error)});
    if (std::abs(row.estimate - row.expected) > 4.0 * row.std_error)
      all_ok = false;
  }
  out.manifest.add_output(out.path("noise_covariance.csv"));

  if (snapshot) {
    Philox rng(g.seed, stream::kNoise, 1u << 20);
    const auto inc = sample_noise_increment(kernels, dt, rng);
    write_field_snapshot(out.path("noise_field.bin"), lattice, inc.field, dt,
                         epsilon);
    out.manifest.add_output(out.path("noise_field.bin"));
  }
  out.finish();
  std::cout << (all_ok ? "covariance OK" : "covariance DEVIATES") << "\n";
  return all_ok ? 0 : 1;
}

ObservablesConfig observables_from_config(KeyValueConfig& cfg, int d,
                                          double t_end) {
  ObservablesConfig obs;
  obs.times = cfg.get_doubles("observables.times",
                              {0.0, 0.5 * t_end, t_end});
  if (cfg.has("observables.balls")) {
    for (const auto& p :
         parse_points(cfg.get_string("observables.balls"))) {
      if (p.size() != d + 1)
        throw std::invalid_argument("observables.balls: d coords + radius");
      obs.balls.emplace_back(p.head(d), p[d]);
    }
  }
  if (cfg.has("observables.functions")) {
    std::stringstream ss(cfg.get_string("observables.functions"));
    std::string spec;
    while (std::getline(ss, spec, ';'))
      if (!spec.empty()) obs.test_functions.push_back(parse_test_function(spec));
  }
  obs.track_quadratic_variation = cfg.get_bool("observables.track_qv", false);
  if (cfg.has("observables.pair_rhos")) {
    obs.pair_rhos = cfg.get_doubles("observables.pair_rhos");
    obs.pair_tilt_a = cfg.get_double("observables.pair_tilt_a", 1.0);
  }
  return obs;
}

int run_simulate(const GlobalOpts& g, KeyValueConfig& cfg) {
  RunConfig rc = RunConfig::from_config(cfg);
  if (g.seed_set) rc.seed = g.seed;
  ObservablesConfig obs = observables_from_config(cfg, rc.model.d, rc.t_end);
  const bool save_final = cfg.get_bool("save_final_field", false);
  cfg.ensure_all_consumed();
  rc.echo_into(cfg);
  std::cout << "resolved config:\n" << cfg.render();

  OutputContext out(g, fnv1a_hash(cfg.render()));
  const auto kernels = build_kernels(rc.model, rc.epsilon, rc.lattice, false);

  std::vector<Observables> ens = run_spde_ensemble(
      rc.model, rc.init, kernels, rc.t_end, rc.dt, obs,
      {rc.seed, stream::kSpde}, rc.n_ensemble, g.workers);

  {
    CsvWriter csv(out.path("total_mass.csv"), {"run", "time", "total_mass"});
    for (std::size_t r = 0; r < ens.size(); ++r)
      for (std::size_t ti = 0; ti < ens[r].times.size(); ++ti)
        csv.row({std::to_string(r), format_full(ens[r].times[ti]),
                 format_full(ens[r].total_mass[ti])});
    out.manifest.add_output(out.path("total_mass.csv"));
  }
  if (!obs.balls.empty()) {
    CsvWriter csv(out.path("ball_masses.csv"),
                  {"run", "time", "ball", "mass"});
    for (std::size_t r = 0; r < ens.size(); ++r)
      for (std::size_t ti = 0; ti < ens[r].times.size(); ++ti)
        for (Eigen::Index b = 0; b < ens[r].ball_masses.cols(); ++b)
          csv.row({std::to_string(r), format_full(ens[r].times[ti]),
                   std::to_string(b),
                   format_full(ens[r].ball_masses(ti, b))});
    out.manifest.add_output(out.path("ball_masses.csv"));
  }
  if (!obs.test_functions.empty()) {
    CsvWriter csv(out.path("test_integrals.csv"),
                  {"run", "time", "function", "integral"});
    for (std::size_t r = 0; r < ens.size(); ++r)
      for (std::size_t ti = 0; ti < ens[r].times.size(); ++ti)
        for (Eigen::Index f = 0; f < ens[r].test_integrals.cols(); ++f)
          csv.row({std::to_string(r), format_full(ens[r].times[ti]),
                   std::to_string(f),
                   format_full(ens[r].test_integrals(ti, f))});
    out.manifest.add_output(out.path("test_integrals.csv"));
  }
  if (obs.track_quadratic_variation) {
    CsvWriter csv(out.path("quadratic_variation.csv"),
                  {"run", "time", "realized_qv", "bracket"});
    for (std::size_t r = 0; r < ens.size(); ++r)
      for (std::size_t ti = 0; ti < ens[r].times.size(); ++ti)
        csv.row({std::to_string(r), format_full(ens[r].times[ti]),
                 format_full(ens[r].realized_qv[ti]),
                 format_full(ens[r].bracket[ti])});
    out.manifest.add_output(out.path("quadratic_variation.csv"));
  }
  if (save_final) {
    // rerun run 0 keeping the field (ensemble path skips storage)
    Spectral ws(kernels.lattice);
    const auto o = simulate(rc.model, rc.init, kernels, rc.t_end, rc.dt, obs,
                            {rc.seed, stream::kSpde}, 0, &ws, true);
    write_field_snapshot(out.path("final_field.bin"), rc.lattice,
                         *o.final_field, rc.dt, rc.epsilon);
    out.manifest.add_output(out.path("final_field.bin"));
  }
  out.finish();
  return 0;
}

int run_chaos_verify(const GlobalOpts& g, KeyValueConfig& cfg) {
  RunConfig rc = RunConfig::from_config(cfg);
  if (g.seed_set) rc.seed = g.seed;
  ChaosRunConfig ccfg;
  ccfg.max_order = static_cast<int>(cfg.get_int("chaos.order", 4));
  ccfg.paired_spde = cfg.get_bool("chaos.paired", true);
  ccfg.times = cfg.get_doubles("observables.times", {rc.t_end});
  {
    std::stringstream ss(cfg.get_string(
        "observables.functions", "gauss:0,0,0,1,0.3"));
    std::string spec;
    while (std::getline(ss, spec, ';'))
      if (!spec.empty())
        ccfg.test_functions.push_back(parse_test_function(spec));
  }
  cfg.ensure_all_consumed();
  rc.echo_into(cfg);
  std::cout << "resolved config:\n" << cfg.render();

  OutputContext out(g, fnv1a_hash(cfg.render()));
  const auto kernels = build_kernels(rc.model, rc.epsilon, rc.lattice, false);

  // ensemble of chaos runs, collecting per-order integrals at t_end
  const std::size_t nf = ccfg.test_functions.size();
  std::vector<ChaosRunResult> results(rc.n_ensemble);
  {
    Spectral ws(kernels.lattice);
    for (std::size_t i = 0; i < rc.n_ensemble; ++i)
      results[i] = chaos_terms(rc.model, rc.init, kernels, rc.t_end, rc.dt,
                               ccfg, {rc.seed, stream::kChaos}, i, &ws);
  }

  CsvWriter csv(out.path("chaos_orders.csv"),
                {"order", "function", "mean", "variance", "var_std_error"});
  const std::size_t last = results.front().times.size() - 1;
  for (int n = 0; n <= ccfg.max_order; ++n)
    for (std::size_t f = 0; f < nf; ++f) {
      std::vector<double> vals;
      for (const auto& r : results) vals.push_back(r.order_integrals[n](last, f));
      const auto est = reduce_samples(vals);
      std::vector<double> sq;
      for (double v : vals) sq.push_back((v - est.mean) * (v - est.mean));
      const auto vest = reduce_samples(sq);
      csv.row({std::to_string(n), std::to_string(f), format_full(est.mean),
               format_full(vest.mean), format_full(vest.std_error)});
    }
  out.manifest.add_output(out.path("chaos_orders.csv"));

  if (ccfg.paired_spde) {
    CsvWriter res(out.path("chaos_residuals.csv"),
                  {"N", "function", "mean_sq_residual", "std_error"});
    for (int N = 0; N <= ccfg.max_order; ++N)
      for (std::size_t f = 0; f < nf; ++f) {
        std::vector<double> r2;
        for (const auto& r : results) {
          double partial = 0.0;
          for (int n = 0; n <= N; ++n) partial += r.order_integrals[n](last, f);
          const double diff = r.spde_integrals(last, f) - partial;
          r2.push_back(diff * diff);
        }
        const auto est = reduce_samples(r2);
        res.row({std::to_string(N), std::to_string(f), format_full(est.mean),
                 format_full(est.std_error)});
      }
    out.manifest.add_output(out.path("chaos_residuals.csv"));
  }
  out.finish();
  return 0;
}

int run_moments(const GlobalOpts& g, const std::string& action,
                KeyValueConfig& cfg) {
  const int d = static_cast<int>(cfg.get_int("d", 3));
  const ModelParams params(d, cfg.get_double("kappa", 0.0));

  DiscreteMeasure mu = [&] {
    const std::string kind = cfg.get_string("mu.kind", "atoms");
    if (kind == "atoms") {
      std::vector<std::pair<Eigen::VectorXd, double>> atoms;
      for (const auto& p : parse_points(cfg.get_string("mu.atoms"))) {
        if (p.size() != d + 1)
          throw std::invalid_argument("mu.atoms: d coords + weight");
        atoms.emplace_back(p.head(d), p[d]);
      }
      return DiscreteMeasure::atom_cloud(std::move(atoms));
    }
    if (kind == "lebesgue_box")
      return DiscreteMeasure::lebesgue_box(
          cfg.get_double("mu.intensity", 1.0),
          parse_point(cfg.get_string("mu.box_lo")),
          parse_point(cfg.get_string("mu.box_hi")));
    if (kind == "lebesgue")
      return DiscreteMeasure::lebesgue_whole(
          cfg.get_double("mu.intensity", 1.0));
    throw std::invalid_argument("mu.kind must be atoms|lebesgue_box|lebesgue");
  }();

  OutputContext out(g, fnv1a_hash(cfg.render() + action));
  CsvWriter csv(out.path("moments.csv"),
                {"formula", "parameters", "value", "error"});
  int rcode = 0;

  if (action == "norm") {
    const double alpha = cfg.get_double("alpha", params.alpha);
    const double a = cfg.get_double("a", 0.0);
    cfg.ensure_all_consumed();
    const auto r = h_alpha_norm(mu, alpha, a);
    csv.row({"h_alpha_norm", "alpha=" + format_full(alpha) +
                                  " a=" + format_full(a),
             r.finite ? format_full(r.value) : "inf", "0"});
    std::cout << (r.finite ? format_full(r.value) : "inf") << "\n";
  } else if (action == "first") {
    const TestFunction f = parse_test_function(cfg.get_string("f"));
    const double t = cfg.get_double("t", 1.0);
    cfg.ensure_all_consumed();
    const double v = first_moment_exact(mu, f, t);
    csv.row({"first_moment", "t=" + format_full(t), format_full(v), "0"});
    std::cout << format_full(v) << "\n";
  } else if (action == "second") {
    const TestFunction f = parse_test_function(cfg.get_string("f"));
    const double t = cfg.get_double("t", 1.0);
    const int m = static_cast<int>(cfg.get_int("m", 1024));
    const std::size_t n_paths =
        static_cast<std::size_t>(cfg.get_int("n_paths", 100000));
    const double clip = cfg.get_double("clip", 1e4);
    cfg.ensure_all_consumed();
    const auto est =
        second_moment_bridge_rhs(params, mu, f, t, n_paths, m, clip,
                                 {g.seed, stream::kMoments}, g.workers);
    csv.row({"second_moment_bridge", "t=" + format_full(t),
             format_full(est.mean), format_full(est.std_error)});
    std::cout << format_full(est.mean) << " +- " << format_full(est.std_error)
              << "\n";
  } else if (action == "bound") {
    const TestFunction f = parse_test_function(cfg.get_string("f"));
    const double t = cfg.get_double("t", 1.0);
    const double C = cfg.get_double("C", 1.0);
    cfg.ensure_all_consumed();
    const auto r = second_moment_bound_rhs(params, mu, f, t, C);
    csv.row({"second_moment_bound", "t=" + format_full(t) + " C=" +
                                        format_full(C),
             r.finite ? format_full(r.value) : "inf", "0"});
    std::cout << (r.finite ? format_full(r.value) : "inf") << "\n";
  } else if (action == "gaussian-bound") {
    const double r = cfg.get_double("r");
    const double t = cfg.get_double("t", 1.0);
    const double dist = cfg.get_double("dist", 1.0);
    cfg.ensure_all_consumed();
    const auto v = gaussian_convolution_bound_check(d, r, t, dist);
    csv.row({"gaussian_bound", "r=" + format_full(r), format_full(v.lhs),
             format_full(v.rhs_envelope)});
    std::cout << format_full(v.lhs) << " envelope "
              << format_full(v.rhs_envelope) << "\n";
  } else {
    std::cerr << "unknown moments action '" << action << "'\n";
    return 2;
  }
  out.manifest.add_output(out.path("moments.csv"));
  out.finish();
  return rcode;
}

int run_experiment(const GlobalOpts& g, const std::string& name,
                   KeyValueConfig& cfg) {
  RunConfig rc = RunConfig::from_config(cfg);
  if (g.seed_set) rc.seed = g.seed;

  OutputContext out(g, fnv1a_hash(cfg.render() + name));
  ExperimentReport rep;

  const SeedStream seed{rc.seed, stream::kExperimentBase};

  if (name == "duality") {
    DualityConfig dc;
    dc.f_init = parse_test_function(
        cfg.get_string("experiment.f", "gauss:0,0,0,1,0.4"));
    dc.g_test = parse_test_function(
        cfg.get_string("experiment.g", "ball:0,0,0,0.6,0.05"));
    dc.t = rc.t_end;
    dc.dt = rc.dt;
    dc.n_ensemble = rc.n_ensemble;
    dc.bias_budget = cfg.get_double("experiment.bias_budget", 0.02);
    dc.workers = g.workers;
    cfg.ensure_all_consumed();
    const auto kernels = build_kernels(rc.model, rc.epsilon, rc.lattice, false);
    rep = duality_experiment(rc.model, kernels, dc, seed);
  } else if (name == "scaling") {
    ScalingConfig sc;
    sc.c = cfg.get_double("experiment.c", 0.5);
    sc.t = rc.t_end;
    sc.dt_ref = rc.dt;
    sc.n_ensemble = rc.n_ensemble;
    sc.n_per_side = rc.lattice.n;
    sc.box_length_ref = rc.lattice.box_length;
    sc.epsilon_ref = rc.epsilon;
    sc.bias_budget = cfg.get_double("experiment.bias_budget", 0.03);
    sc.workers = g.workers;
    cfg.ensure_all_consumed();
    rep = scaling_experiment(rc.model, sc, seed);
  } else if (name == "total-mass") {
    TotalMassConfig tc;
    tc.t_end = rc.t_end;
    tc.dt = rc.dt;
    tc.n_ensemble = rc.n_ensemble;
    tc.workers = g.workers;
    cfg.ensure_all_consumed();
    const auto kernels = build_kernels(rc.model, rc.epsilon, rc.lattice, false);
    rep = total_mass_martingale_check(rc.model, rc.init, kernels, tc, seed);
  } else if (name == "death") {
    DeathConfig dc;
    dc.t_grid = cfg.get_doubles("experiment.t_grid", {1, 2, 4, 8, 16, 32});
    dc.dt = rc.dt;
    dc.n_ensemble = rc.n_ensemble;
    dc.workers = g.workers;
    cfg.ensure_all_consumed();
    const auto kernels = build_kernels(rc.model, rc.epsilon, rc.lattice, false);
    rep = death_diagnostic(rc.model, rc.init, kernels, dc, seed);
  } else if (name == "singularity") {
    SingularityConfig sc;
    sc.radii = cfg.get_doubles("experiment.radii", {0.5, 0.25, 0.125});
    sc.t = rc.t_end;
    sc.dt = rc.dt;
    sc.n_ensemble = rc.n_ensemble;
    sc.workers = g.workers;
    cfg.ensure_all_consumed();
    const auto kernels = build_kernels(rc.model, rc.epsilon, rc.lattice, false);
    rep = singularity_diagnostic(rc.model, kernels, sc, seed);
  } else if (name == "rho-supermartingale") {
    RhoSupermartingaleConfig sc;
    sc.rho = cfg.get_double("experiment.rho");
    sc.tilt_a = cfg.get_double("experiment.tilt_a", 1.0);
    sc.t_end = rc.t_end;
    sc.dt = rc.dt;
    sc.n_ensemble = rc.n_ensemble;
    sc.workers = g.workers;
    cfg.ensure_all_consumed();
    const auto kernels = build_kernels(rc.model, rc.epsilon, rc.lattice, false);
    rep = supermartingale_rho_check(rc.model, rc.init, kernels, sc, seed);
  } else if (name == "local-extinction") {
    LocalExtinctionConfig lc;
    lc.t_grid = cfg.get_doubles("experiment.t_grid", {1, 4, 16});
    lc.dt = rc.dt;
    lc.ball_radius = cfg.get_double("experiment.ball_radius", 1.0);
    lc.threshold = cfg.get_double("experiment.threshold", 0.0);
    lc.n_ensemble = rc.n_ensemble;
    lc.workers = g.workers;
    cfg.ensure_all_consumed();
    const auto kernels = build_kernels(rc.model, rc.epsilon, rc.lattice, false);
    rep = local_extinction_check(rc.model, kernels, lc, seed);
  } else if (name == "ks-null") {
    const int reps = static_cast<int>(cfg.get_int("experiment.repetitions", 20));
    const double level = cfg.get_double("experiment.level", 0.01);
    cfg.ensure_all_consumed();
    const auto kernels = build_kernels(rc.model, rc.epsilon, rc.lattice, false);
    rep = ks_null_calibration(rc.model, kernels, rc.t_end, rc.dt,
                              rc.n_ensemble, reps, level, seed, g.workers);
  } else {
    std::cerr << "unknown experiment '" << name << "'\n";
    return 2;
  }

  const std::string text = rep.render();
  std::cout << text;
  {
    std::ofstream f(out.path("report.txt"));
    f << text;
  }
  out.manifest.add_output(out.path("report.txt"));
  CsvWriter csv(out.path("assertions.csv"),
                {"assertion", "statistic", "threshold", "pass"});
  for (const auto& a : rep.assertions)
    csv.row({a.id, format_full(a.statistic), format_full(a.threshold),
             a.pass ? "1" : "0"});
  out.manifest.add_output(out.path("assertions.csv"));
  out.finish();
  return rep.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for a measure-valued stochastic heat "
               "equation with scale-invariant correlated noise"};
  app.set_version_flag("--version", std::string(kVersion) + " (" + kBuildId +
                                        ")");
  GlobalOpts g;
  app.add_option("--config", g.config_path, "key = value config file");
  auto* seed_opt = app.add_option("--seed", g.seed, "master seed (64-bit)");
  app.add_option("--workers", g.workers, "worker thread count");
  app.add_option("--out", g.out_dir, "output directory");
  app.require_subcommand(1);

  std::string exact_fn, moments_action, experiment_name;
  std::vector<std::string> overrides;

  auto* sc_exact = app.add_subcommand("exact", "closed-form evaluations");
  sc_exact->add_option("function", exact_fn,
                       "alpha|heat-kernel|bessel-i|bessel-density|"
                       "bridge-moment|bridge-bound|riesz|h-eps")
      ->required();
  sc_exact->add_option("--set", overrides, "key=value arguments");

  auto* sc_bridge = app.add_subcommand("bridge-moment",
                                       "bridge exponential functionals");
  sc_bridge->add_option("--set", overrides, "key=value arguments");
  auto* sc_pair = app.add_subcommand("pair-moment",
                                     "n-bridge pair interaction moment");
  sc_pair->add_option("--set", overrides, "key=value arguments");
  auto* sc_noise = app.add_subcommand("noise-check",
                                      "noise covariance verification");
  sc_noise->add_option("--set", overrides, "key=value arguments");
  auto* sc_sim = app.add_subcommand("simulate", "lattice dynamics ensemble");
  sc_sim->add_option("--set", overrides, "key=value arguments");
  auto* sc_chaos = app.add_subcommand("chaos-verify",
                                      "iterated-integral expansion checks");
  sc_chaos->add_option("--set", overrides, "key=value arguments");
  auto* sc_mom = app.add_subcommand("moments", "moment oracles");
  sc_mom->add_option("action", moments_action,
                     "first|second|bound|norm|gaussian-bound")
      ->required();
  sc_mom->add_option("--set", overrides, "key=value arguments");
  auto* sc_exp = app.add_subcommand("experiment", "statistical experiments");
  sc_exp->add_option("name", experiment_name,
                     "duality|scaling|total-mass|death|singularity|"
                     "rho-supermartingale|local-extinction|ks-null")
      ->required();
  sc_exp->add_option("--set", overrides, "key=value arguments");

  CLI11_PARSE(app, argc, argv);
  g.seed_set = seed_opt->count() > 0;

  try {
    KeyValueConfig cfg = g.config_path.empty()
                             ? KeyValueConfig::parse("")
                             : KeyValueConfig::parse_file(g.config_path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("--set expects key=value, got " + kv);
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }

    if (sc_exact->parsed()) return run_exact(g, exact_fn, cfg);
    if (sc_bridge->parsed()) return run_bridge_moment(g, cfg);
    if (sc_pair->parsed()) return run_pair_moment(g, cfg);
    if (sc_noise->parsed()) return run_noise_check(g, cfg);
    if (sc_sim->parsed()) return run_simulate(g, cfg);
    if (sc_chaos->parsed()) return run_chaos_verify(g, cfg);
    if (sc_mom->parsed()) return run_moments(g, moments_action, cfg);
    if (sc_exp->parsed()) return run_experiment(g, experiment_name, cfg);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
