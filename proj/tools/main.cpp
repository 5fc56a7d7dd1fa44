// Command-line front end: simulate / fit / bench / recover / paths.
// Every run is a pure function of its flags; errors leave as JSON on stderr
// with exit code 2.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hubnet/harness.hpp"
#include "hubnet/io.hpp"
#include "hubnet/parallel.hpp"

namespace {

using hubnet::Index;
using hubnet::Matrix;
using hubnet::Seed;
using hubnet::Vector;
namespace edgeout = hubnet::edgeout;
namespace harness = hubnet::harness;
namespace penreg = hubnet::penreg;
namespace simgen = hubnet::simgen;

// Table cells use a short fixed format; data matrices keep full precision.
std::string cell(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// JSON config support: --config FILE supplies defaults for any long flag of
// the chosen subcommand, keyed without the leading dashes. Values given on
// the command line win.
nlohmann::json load_config(std::vector<std::string>& args) {
  nlohmann::json config = nlohmann::json::object();
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] != "--config") continue;
    if (i + 1 >= args.size()) {
      hubnet::raise(hubnet::ErrorKind::InvalidParameter,
                    "--config needs a file path");
    }
    std::ifstream in(args[i + 1]);
    if (!in) {
      hubnet::raise(hubnet::ErrorKind::Io,
                    args[i + 1] + ": cannot open config");
    }
    try {
      in >> config;
    } catch (const nlohmann::json::exception& e) {
      hubnet::raise(hubnet::ErrorKind::Io,
                    args[i + 1] + ": bad JSON (" + e.what() + ")");
    }
    if (!config.is_object()) {
      hubnet::raise(hubnet::ErrorKind::Io,
                    args[i + 1] + ": config must be a JSON object");
    }
    args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
               args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
    break;
  }
  return config;
}

class Overlay {
 public:
  explicit Overlay(nlohmann::json config) : config_(std::move(config)) {}

  // Fills `target` from the config when the flag was absent on the command
  // line; remembers the option so unknown config keys can be rejected.
  template <typename T>
  void fill(CLI::Option* opt, const std::string& key, T& target) {
    known_.push_back(key);
    if (opt->count() > 0 || !config_.contains(key)) return;
    try {
      target = config_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      hubnet::raise(hubnet::ErrorKind::InvalidParameter,
                    "config key '" + key + "' has the wrong type");
    }
    filled_.push_back(key);
  }

  void reject_unknown() const {
    for (const auto& [key, value] : config_.items()) {
      if (std::find(known_.begin(), known_.end(), key) == known_.end()) {
        hubnet::raise(hubnet::ErrorKind::InvalidParameter,
                      "config key '" + key + "' matches no flag");
      }
    }
  }

  bool was_filled(const std::string& key) const {
    return std::find(filled_.begin(), filled_.end(), key) != filled_.end();
  }

 private:
  nlohmann::json config_;
  std::vector<std::string> known_;
  std::vector<std::string> filled_;
};

struct ScenarioFlags {
  std::string scenario;
  Index n = 100;
  Index p = 500;
  Index s = 10;
  double t_frac = 0.2;
  Index n_test = 0;
  CLI::Option* n_opt = nullptr;
  CLI::Option* p_opt = nullptr;
  CLI::Option* s_opt = nullptr;
  CLI::Option* t_opt = nullptr;

  void add(CLI::App* cmd) {
    // Required flags are validated after config overlay, not by the parser,
    // so a config file can supply them.
    cmd->add_option("--scenario", scenario,
                    "generating model: a, b, c, d, fig1, fig2");
    n_opt = cmd->add_option("--n", n, "training rows");
    p_opt = cmd->add_option("--p", p, "features");
    s_opt = cmd->add_option("--s", s, "core (hub) size");
    t_opt = cmd->add_option("--t-frac", t_frac,
                            "fraction of non-core features driven by the core");
    cmd->add_option("--n-test", n_test, "test rows (0 = same as --n)");
  }

  simgen::ScenarioSpec build(Seed seed, const Overlay& overlay) const {
    simgen::ScenarioSpec spec;
    spec.kind = simgen::parse_scenario(scenario);
    const bool fig = spec.kind == simgen::ScenarioKind::Fig1 ||
                     spec.kind == simgen::ScenarioKind::Fig2;
    if (fig) spec = simgen::figure_spec(spec.kind, seed);
    auto given = [&](CLI::Option* opt, const char* key) {
      return opt->count() > 0 || overlay.was_filled(key);
    };
    if (!fig || given(n_opt, "n")) spec.n = n;
    if (!fig || given(p_opt, "p")) spec.p = p;
    if (!fig || given(s_opt, "s")) spec.s = s;
    if (!fig || given(t_opt, "t-frac")) spec.t_frac = t_frac;
    spec.n_test = n_test;
    spec.seed = seed;
    return spec;
  }
};

nlohmann::json cv_json(const penreg::CvReport& cv) {
  return nlohmann::json{
      {"lambdas", cv.lambdas},
      {"cvm", cv.cvm},
      {"cvsd", cv.cvsd},
      {"lambda_min", cv.lambda_min},
  };
}

void require_flag(const std::string& value, const char* flag) {
  if (value.empty()) {
    hubnet::raise(hubnet::ErrorKind::InvalidParameter,
                  std::string(flag) + " is required (flag or config key)");
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) hubnet::raise(hubnet::ErrorKind::Io, path + ": cannot write");
  out << text;
  if (!out) hubnet::raise(hubnet::ErrorKind::Io, path + ": write failed");
}

int run(std::vector<std::string> args) {
  const nlohmann::json config = load_config(args);

  CLI::App app{"hub-weighted sparse regression toolkit"};
  app.require_subcommand(1);
  Overlay overlay(config);

  // simulate ---------------------------------------------------------------
  auto* sim = app.add_subcommand("simulate", "generate a synthetic data set");
  ScenarioFlags sim_flags;
  sim_flags.add(sim);
  std::uint64_t sim_seed = 1;
  std::string sim_out;
  sim->add_option("--seed", sim_seed, "random seed");
  sim->add_option("--out", sim_out, "output directory");

  // fit --------------------------------------------------------------------
  auto* fit = app.add_subcommand("fit", "fit one method to X/y files");
  std::string fit_x;
  std::string fit_y;
  std::string fit_method = "hubnet";
  std::string fit_family = "gaussian";
  std::string fit_out;
  int fit_cv_k = 10;
  std::uint64_t fit_cv_seed = 0;
  fit->add_option("--x", fit_x, "design matrix (.csv or .hnm1)");
  fit->add_option("--y", fit_y, "response column CSV");
  fit->add_option("--method", fit_method,
                  "lasso | elasticnet | adaptive_lasso | hubnet");
  fit->add_option("--family", fit_family, "gaussian | binomial");
  fit->add_option("--cv-k", fit_cv_k, "cross-validation folds");
  fit->add_option("--cv-seed", fit_cv_seed, "fold assignment seed");
  fit->add_option("--out", fit_out, "output JSON path");

  // bench ------------------------------------------------------------------
  auto* bench = app.add_subcommand(
      "bench", "replicate a scenario and tabulate method metrics");
  ScenarioFlags bench_flags;
  bench_flags.add(bench);
  int bench_reps = 20;
  std::string bench_methods = "lasso,elasticnet,adaptive_lasso,hubnet";
  std::uint64_t bench_seed = 7;
  int bench_cv_k = 10;
  std::string bench_out;
  bench->add_option("--reps", bench_reps, "replicates");
  bench->add_option("--methods", bench_methods, "comma-separated method list");
  bench->add_option("--seed", bench_seed, "master seed");
  bench->add_option("--cv-k", bench_cv_k, "cross-validation folds");
  bench->add_option("--out", bench_out, "output CSV path");

  // recover ----------------------------------------------------------------
  auto* recover = app.add_subcommand(
      "recover", "hub recovery curves on response-free hub graphs");
  std::string rec_setting;
  Index rec_n = 100;
  Index rec_p = 200;
  Index rec_s = 4;
  double rec_gamma = 0.5;
  int rec_reps = 50;
  std::uint64_t rec_seed = 1;
  std::string rec_out;
  recover->add_option("--setting", rec_setting, "graph model: s1, s2, s3");
  recover->add_option("--n", rec_n, "rows");
  recover->add_option("--p", rec_p, "features");
  recover->add_option("--s", rec_s, "hub count");
  recover->add_option("--gamma", rec_gamma, "edge-out mixing parameter");
  recover->add_option("--reps", rec_reps, "seeds to run");
  recover->add_option("--seed", rec_seed, "master seed");
  recover->add_option("--out", rec_out, "output CSV path");

  // paths ------------------------------------------------------------------
  auto* paths = app.add_subcommand(
      "paths", "selection error along one method's lambda path");
  ScenarioFlags paths_flags;
  paths_flags.add(paths);
  std::string paths_method = "hubnet";
  std::uint64_t paths_seed = 3;
  std::string paths_out;
  paths->add_option("--method", paths_method,
                    "lasso | elasticnet | adaptive_lasso | hubnet");
  paths->add_option("--seed", paths_seed, "random seed");
  paths->add_option("--out", paths_out, "output CSV path");

  try {
    // CLI11's vector overload consumes arguments from the back.
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  }

  // Apply config defaults to whichever subcommand ran.
  if (sim->parsed()) {
    overlay.fill(sim->get_option("--scenario"), "scenario",
                 sim_flags.scenario);
    overlay.fill(sim_flags.n_opt, "n", sim_flags.n);
    overlay.fill(sim_flags.p_opt, "p", sim_flags.p);
    overlay.fill(sim_flags.s_opt, "s", sim_flags.s);
    overlay.fill(sim_flags.t_opt, "t-frac", sim_flags.t_frac);
    overlay.fill(sim->get_option("--n-test"), "n-test", sim_flags.n_test);
    overlay.fill(sim->get_option("--seed"), "seed", sim_seed);
    overlay.fill(sim->get_option("--out"), "out", sim_out);
    overlay.reject_unknown();
    require_flag(sim_flags.scenario, "--scenario");
    require_flag(sim_out, "--out");

    const auto spec = sim_flags.build(Seed{sim_seed}, overlay);
    simgen::save_simdata(simgen::gen_scenario(spec), sim_out);
    return 0;
  }

  if (fit->parsed()) {
    overlay.fill(fit->get_option("--x"), "x", fit_x);
    overlay.fill(fit->get_option("--y"), "y", fit_y);
    overlay.fill(fit->get_option("--method"), "method", fit_method);
    overlay.fill(fit->get_option("--family"), "family", fit_family);
    overlay.fill(fit->get_option("--cv-k"), "cv-k", fit_cv_k);
    overlay.fill(fit->get_option("--cv-seed"), "cv-seed", fit_cv_seed);
    overlay.fill(fit->get_option("--out"), "out", fit_out);
    overlay.reject_unknown();
    require_flag(fit_x, "--x");
    require_flag(fit_y, "--y");
    require_flag(fit_out, "--out");

    const Matrix x = hubnet::read_matrix_auto(fit_x);
    const Vector y = hubnet::read_vector_csv(fit_y);
    penreg::Family family;
    if (fit_family == "gaussian") {
      family = penreg::Family::gaussian;
    } else if (fit_family == "binomial") {
      family = penreg::Family::binomial;
    } else {
      hubnet::raise(hubnet::ErrorKind::InvalidSpec,
                    "unknown family '" + fit_family + "'");
    }
    const harness::MethodRun run = harness::run_method(
        harness::parse_method(fit_method), x, y, family, fit_cv_k,
        Seed{fit_cv_seed});

    nlohmann::json artifact{
        {"method", fit_method},
        {"family", fit_family},
        {"cv", cv_json(run.cv)},
        {"fit", penreg::to_json(run.fit)},
    };
    if (run.hub) {
      const auto& hub = *run.hub;
      std::vector<double> weights(hub.weights.w.data(),
                                  hub.weights.w.data() + hub.weights.w.size());
      for (double& w : weights) {
        // JSON has no infinity literal; excluded features serialize as -1.
        if (std::isinf(w)) w = -1.0;
      }
      auto scores = hub.theta_selection.scores;
      for (double& v : scores) {
        if (std::isinf(v)) v = -1.0;  // skipped grid points
      }
      artifact["hub"] = nlohmann::json{
          {"theta", hub.theta_selection.chosen_theta},
          {"theta_grid", hub.theta_selection.grid},
          {"theta_scores", scores},
          {"weights", weights},
          {"edgeout", edgeout::to_json(hub.edge_fit)},
      };
    }
    write_text(fit_out, artifact.dump(2) + "\n");
    return 0;
  }

  if (bench->parsed()) {
    overlay.fill(bench->get_option("--scenario"), "scenario",
                 bench_flags.scenario);
    overlay.fill(bench_flags.n_opt, "n", bench_flags.n);
    overlay.fill(bench_flags.p_opt, "p", bench_flags.p);
    overlay.fill(bench_flags.s_opt, "s", bench_flags.s);
    overlay.fill(bench_flags.t_opt, "t-frac", bench_flags.t_frac);
    overlay.fill(bench->get_option("--n-test"), "n-test", bench_flags.n_test);
    overlay.fill(bench->get_option("--reps"), "reps", bench_reps);
    overlay.fill(bench->get_option("--methods"), "methods", bench_methods);
    overlay.fill(bench->get_option("--seed"), "seed", bench_seed);
    overlay.fill(bench->get_option("--cv-k"), "cv-k", bench_cv_k);
    overlay.fill(bench->get_option("--out"), "out", bench_out);
    overlay.reject_unknown();
    require_flag(bench_flags.scenario, "--scenario");
    require_flag(bench_out, "--out");

    const auto spec = bench_flags.build(Seed{bench_seed}, overlay);
    const auto rows =
        harness::compare(spec, harness::parse_methods(bench_methods),
                         bench_reps, Seed{bench_seed}, bench_cv_k);
    std::string csv =
        "method,cvm,cvm_se,fn,fp,features,test_error,test_error_se\n";
    for (const auto& row : rows) {
      csv += row.method + ',' + cell(row.cvm) + ',' + cell(row.cvm_se) + ',' +
             cell(row.fn) + ',' + cell(row.fp) + ',' + cell(row.n_features) +
             ',' + cell(row.test_error) + ',' + cell(row.test_error_se) +
             '\n';
    }
    write_text(bench_out, csv);
    return 0;
  }

  if (recover->parsed()) {
    overlay.fill(recover->get_option("--setting"), "setting", rec_setting);
    overlay.fill(recover->get_option("--n"), "n", rec_n);
    overlay.fill(recover->get_option("--p"), "p", rec_p);
    overlay.fill(recover->get_option("--s"), "s", rec_s);
    overlay.fill(recover->get_option("--gamma"), "gamma", rec_gamma);
    overlay.fill(recover->get_option("--reps"), "reps", rec_reps);
    overlay.fill(recover->get_option("--seed"), "seed", rec_seed);
    overlay.fill(recover->get_option("--out"), "out", rec_out);
    overlay.reject_unknown();
    require_flag(rec_setting, "--setting");
    require_flag(rec_out, "--out");
    if (rec_reps < 1) {
      hubnet::raise(hubnet::ErrorKind::InvalidParameter, "need --reps >= 1");
    }

    simgen::HubGraphSpec spec;
    spec.setting = simgen::parse_setting(rec_setting);
    spec.n = rec_n;
    spec.p = rec_p;
    spec.s = rec_s;
    std::vector<harness::RecoveryCurve> curves(
        static_cast<std::size_t>(rec_reps));
    hubnet::parallel_for(rec_reps, [&](Index r) {
      simgen::HubGraphSpec rep_spec = spec;
      rep_spec.seed = Seed{rec_seed}.child(static_cast<std::uint64_t>(r));
      const simgen::SimData data = simgen::gen_hub_graph(rep_spec);
      curves[static_cast<std::size_t>(r)] =
          harness::hub_recovery(data, rec_gamma);
    });

    std::string csv = "rep,theta,correct_hubs,max_hub_rank,active_rows\n";
    for (int r = 0; r < rec_reps; ++r) {
      const auto& curve = curves[static_cast<std::size_t>(r)];
      for (std::size_t t = 0; t < curve.grid.size(); ++t) {
        csv += std::to_string(r) + ',' + cell(curve.grid[t]) + ',' +
               std::to_string(curve.correct_hubs[t]) + ',' +
               std::to_string(curve.max_hub_rank[t]) + ',' +
               std::to_string(curve.active_rows[t]) + '\n';
      }
    }
    write_text(rec_out, csv);
    return 0;
  }

  // paths
  overlay.fill(paths->get_option("--scenario"), "scenario",
               paths_flags.scenario);
  overlay.fill(paths_flags.n_opt, "n", paths_flags.n);
  overlay.fill(paths_flags.p_opt, "p", paths_flags.p);
  overlay.fill(paths_flags.s_opt, "s", paths_flags.s);
  overlay.fill(paths_flags.t_opt, "t-frac", paths_flags.t_frac);
  overlay.fill(paths->get_option("--n-test"), "n-test", paths_flags.n_test);
  overlay.fill(paths->get_option("--method"), "method", paths_method);
  overlay.fill(paths->get_option("--seed"), "seed", paths_seed);
  overlay.fill(paths->get_option("--out"), "out", paths_out);
  overlay.reject_unknown();
  require_flag(paths_flags.scenario, "--scenario");
  require_flag(paths_out, "--out");

  const auto spec = paths_flags.build(Seed{paths_seed}, overlay);
  const simgen::SimData data = simgen::gen_scenario(spec);
  const auto method = harness::parse_method(paths_method);

  double alpha = 1.0;
  Vector weights;
  const auto [xs, scaling] = hubnet::standardize(data.x_train);
  if (method == harness::MethodId::elasticnet) {
    alpha = 0.5;
  } else if (method == harness::MethodId::adaptive_lasso) {
    weights = penreg::univariate_weights(xs, data.y_train);
  } else if (method == harness::MethodId::hubnet) {
    const auto sel = edgeout::select_theta_gcv(xs, 0.5);
    edgeout::Config cfg;
    cfg.theta = sel.chosen_theta;
    cfg.gamma = 0.5;
    weights = edgeout::hub_weights(edgeout::fit(xs, cfg), scaling.sds).w;
  }
  const penreg::Path path = penreg::lambda_path(
      xs, data.y_train, alpha, weights, penreg::Family::gaussian);
  const harness::PathCurve curve = harness::fp_fn_path(path, data);

  std::string csv = "lambda,nonzero,fp,fn\n";
  for (std::size_t t = 0; t < curve.lambdas.size(); ++t) {
    csv += cell(curve.lambdas[t]) + ',' + std::to_string(curve.nonzero[t]) +
           ',' + cell(curve.fp[t]) + ',' + cell(curve.fn[t]) + '\n';
  }
  write_text(paths_out, csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    try {
      return run(std::move(args));
    } catch (const CLI::ParseError& e) {
      hubnet::raise(hubnet::ErrorKind::InvalidParameter, e.what());
    }
  } catch (const hubnet::Error& e) {
    nlohmann::json err{
        {"error",
         {{"kind", std::string(e.kind_name())}, {"message", e.what()}}}};
    std::cerr << err.dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    nlohmann::json err{
        {"error", {{"kind", "Internal"}, {"message", e.what()}}}};
    std::cerr << err.dump() << "\n";
    return 2;
  }
}
