#include "hubnet/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "hubnet/parallel.hpp"

namespace hubnet {
namespace harness {

namespace {

constexpr double kHubnetGamma = 0.5;
constexpr double kElasticNetAlpha = 0.5;

std::vector<Index> active_set(const Vector& beta) {
  std::vector<Index> out;
  for (Index j = 0; j < beta.size(); ++j) {
    if (beta[j] != 0.0) out.push_back(j);
  }
  return out;
}

double sd_or_zero(const std::vector<double>& values, double mean) {
  if (values.size() < 2) return 0.0;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  return std::sqrt(var / static_cast<double>(values.size() - 1));
}

}  // namespace

std::string to_string(MethodId method) {
  switch (method) {
    case MethodId::lasso: return "lasso";
    case MethodId::elasticnet: return "elasticnet";
    case MethodId::adaptive_lasso: return "adaptive_lasso";
    case MethodId::hubnet: return "hubnet";
  }
  return "?";
}

MethodId parse_method(const std::string& name) {
  if (name == "lasso") return MethodId::lasso;
  if (name == "elasticnet") return MethodId::elasticnet;
  if (name == "adaptive_lasso") return MethodId::adaptive_lasso;
  if (name == "hubnet") return MethodId::hubnet;
  raise(ErrorKind::InvalidSpec, "unknown method '" + name + "'");
}

std::vector<MethodId> parse_methods(const std::string& comma_separated) {
  std::vector<MethodId> out;
  std::size_t begin = 0;
  while (begin <= comma_separated.size()) {
    const std::size_t comma = comma_separated.find(',', begin);
    const std::string token = comma_separated.substr(
        begin, comma == std::string::npos ? std::string::npos : comma - begin);
    out.push_back(parse_method(token));  // empty tokens fail the name lookup
    if (comma == std::string::npos) break;
    begin = comma + 1;
  }
  return out;
}

HubnetRun run_hubnet(const Matrix& x, const Vector& y, penreg::Family family,
                     int cv_k, Seed cv_seed) {
  HubnetRun run;
  auto [xs, scaling] = standardize(x);
  run.scaling = std::move(scaling);

  run.theta_selection = edgeout::select_theta_gcv(xs, kHubnetGamma);
  edgeout::Config cfg;
  cfg.theta = run.theta_selection.chosen_theta;
  cfg.gamma = kHubnetGamma;
  run.edge_fit = edgeout::fit(xs, cfg);
  // Row sums on the input scale: a hub with a small own scale that drives
  // large-scale features carries most of the reconstruction, which the
  // standardized B understates.
  run.weights = edgeout::hub_weights(run.edge_fit, run.scaling.sds);

  if (!(run.weights.w.array() < std::numeric_limits<double>::infinity())
           .any()) {
    raise(ErrorKind::AllWeightsInfinite,
          "edge-out selected no features (B is identically zero); the hub "
          "weights exclude everything");
  }

  run.cv_report =
      penreg::cv(xs, y, /*alpha=*/1.0, run.weights.w, family, cv_k, cv_seed);
  run.fit = penreg::to_input_scale(run.cv_report.chosen, run.scaling);
  return run;
}

MethodRun run_method(MethodId method, const Matrix& x, const Vector& y,
                     penreg::Family family, int cv_k, Seed cv_seed) {
  MethodRun out;
  out.method = method;
  if (method == MethodId::hubnet) {
    out.hub = run_hubnet(x, y, family, cv_k, cv_seed);
    out.fit = out.hub->fit;
    out.cv = out.hub->cv_report;
    out.scaling = out.hub->scaling;
    return out;
  }
  auto [xs, scaling] = standardize(x);
  out.scaling = std::move(scaling);
  double alpha = 1.0;
  Vector weights;
  if (method == MethodId::elasticnet) {
    alpha = kElasticNetAlpha;
  } else if (method == MethodId::adaptive_lasso) {
    weights = penreg::univariate_weights(xs, y);
  }
  out.cv = penreg::cv(xs, y, alpha, weights, family, cv_k, cv_seed);
  out.fit = penreg::to_input_scale(out.cv.chosen, out.scaling);
  return out;
}

MetricsRow evaluate(const penreg::Fit& fit, const simgen::SimData& data) {
  if (data.true_support.empty()) {
    raise(ErrorKind::MissingGroundTruth, "data carries no true support");
  }
  if (data.x_test.size() == 0 || data.y_test.size() == 0) {
    raise(ErrorKind::MissingGroundTruth, "data carries no test set");
  }

  const std::vector<Index> selected = active_set(fit.beta);
  const std::set<Index> truth(data.true_support.begin(),
                              data.true_support.end());
  Index false_pos = 0;
  for (Index j : selected) false_pos += truth.count(j) ? 0 : 1;
  const std::set<Index> chosen(selected.begin(), selected.end());
  Index false_neg = 0;
  for (Index j : truth) false_neg += chosen.count(j) ? 0 : 1;

  MetricsRow row;
  row.fp = static_cast<double>(false_pos) /
           std::max<double>(1.0, static_cast<double>(selected.size()));
  row.fn = static_cast<double>(false_neg) /
           static_cast<double>(truth.size());
  row.n_features = static_cast<double>(selected.size());

  if (fit.family == penreg::Family::gaussian) {
    const Vector pred = penreg::predict_linear(fit, data.x_test);
    row.test_error =
        (data.y_test - pred).squaredNorm() /
        static_cast<double>(data.y_test.size());
  } else {
    const Vector prob = penreg::predict_response(fit, data.x_test);
    Index wrong = 0;
    for (Index i = 0; i < prob.size(); ++i) {
      const double label = prob[i] > 0.5 ? 1.0 : 0.0;
      if (label != data.y_test[i]) ++wrong;
    }
    row.test_error =
        static_cast<double>(wrong) / static_cast<double>(prob.size());
  }
  return row;
}

std::vector<MetricsRow> compare(const simgen::ScenarioSpec& spec,
                                const std::vector<MethodId>& methods,
                                int reps, Seed seed, int cv_k) {
  if (reps < 1) raise(ErrorKind::InvalidParameter, "need reps >= 1");
  const std::size_t m = methods.size();

  // per_rep[r][method index]; indexed writes keep parallel runs
  // deterministic regardless of scheduling.
  std::vector<std::vector<MetricsRow>> per_rep(
      static_cast<std::size_t>(reps), std::vector<MetricsRow>(m));
  parallel_for(reps, [&](Index r) {
    const Seed rep_seed = seed.child(static_cast<std::uint64_t>(r));
    simgen::ScenarioSpec rep_spec = spec;
    rep_spec.seed = rep_seed.child(0);
    const Seed fold_seed = rep_seed.child(1);
    const simgen::SimData data = simgen::gen_scenario(rep_spec);
    for (std::size_t k = 0; k < m; ++k) {
      const MethodRun run =
          run_method(methods[k], data.x_train, data.y_train,
                     penreg::Family::gaussian, cv_k, fold_seed);
      MetricsRow row = evaluate(run.fit, data);
      row.method = to_string(methods[k]);
      // cvm at the chosen lambda; its se column aggregates across reps.
      const auto it = std::find(run.cv.lambdas.begin(), run.cv.lambdas.end(),
                                run.cv.lambda_min);
      row.cvm = run.cv.cvm[static_cast<std::size_t>(
          it - run.cv.lambdas.begin())];
      per_rep[static_cast<std::size_t>(r)][k] = std::move(row);
    }
  });

  std::vector<MetricsRow> out(m);
  for (std::size_t k = 0; k < m; ++k) {
    std::vector<double> cvms;
    std::vector<double> test_errors;
    MetricsRow agg;
    agg.method = to_string(methods[k]);
    for (int r = 0; r < reps; ++r) {
      const MetricsRow& row = per_rep[static_cast<std::size_t>(r)][k];
      agg.fn += row.fn;
      agg.fp += row.fp;
      agg.n_features += row.n_features;
      cvms.push_back(row.cvm);
      test_errors.push_back(row.test_error);
    }
    const double rr = static_cast<double>(reps);
    agg.fn /= rr;
    agg.fp /= rr;
    agg.n_features /= rr;
    for (double v : cvms) agg.cvm += v;
    agg.cvm /= rr;
    for (double v : test_errors) agg.test_error += v;
    agg.test_error /= rr;
    agg.cvm_se = sd_or_zero(cvms, agg.cvm);
    agg.test_error_se = sd_or_zero(test_errors, agg.test_error);
    out[k] = std::move(agg);
  }
  std::sort(out.begin(), out.end(),
            [](const MetricsRow& a, const MetricsRow& b) {
              return a.method < b.method;
            });
  return out;
}

PathCurve fp_fn_path(const penreg::Path& path, const simgen::SimData& data) {
  if (data.true_support.empty()) {
    raise(ErrorKind::MissingGroundTruth, "data carries no true support");
  }
  const std::set<Index> truth(data.true_support.begin(),
                              data.true_support.end());
  PathCurve curve;
  curve.lambdas = path.lambdas;
  for (const penreg::Fit& fit : path.fits) {
    const std::vector<Index> selected = active_set(fit.beta);
    Index false_pos = 0;
    Index hits = 0;
    for (Index j : selected) {
      if (truth.count(j)) {
        ++hits;
      } else {
        ++false_pos;
      }
    }
    curve.fp.push_back(static_cast<double>(false_pos) /
                       std::max<double>(1.0,
                                        static_cast<double>(selected.size())));
    curve.fn.push_back(
        static_cast<double>(static_cast<Index>(truth.size()) - hits) /
        static_cast<double>(truth.size()));
    curve.nonzero.push_back(static_cast<Index>(selected.size()));
  }
  return curve;
}

std::optional<Index> screening_fp(const penreg::Path& path,
                                  const simgen::SimData& data) {
  if (data.true_support.empty()) {
    raise(ErrorKind::MissingGroundTruth, "data carries no true support");
  }
  const std::set<Index> truth(data.true_support.begin(),
                              data.true_support.end());
  // Fits are ordered by descending lambda, sparsest first.
  for (const penreg::Fit& fit : path.fits) {
    const std::vector<Index> selected = active_set(fit.beta);
    const std::set<Index> chosen(selected.begin(), selected.end());
    bool covers = true;
    for (Index j : truth) {
      if (!chosen.count(j)) {
        covers = false;
        break;
      }
    }
    if (covers) {
      return static_cast<Index>(selected.size()) -
             static_cast<Index>(truth.size());
    }
  }
  return std::nullopt;
}

RecoveryCurve hub_recovery(const simgen::SimData& data, double gamma,
                           const std::vector<double>& theta_grid,
                           const edgeout::Config& base) {
  if (data.hub_set.empty()) {
    raise(ErrorKind::MissingGroundTruth, "data carries no hub set");
  }
  const Matrix& x = data.x_train;
  const std::vector<double> grid =
      theta_grid.empty() ? edgeout::default_theta_grid(x, gamma) : theta_grid;

  RecoveryCurve curve;
  curve.grid = grid;
  curve.correct_hubs.resize(grid.size());
  curve.max_hub_rank.resize(grid.size());
  curve.active_rows.resize(grid.size());

  edgeout::for_each_theta(
      x, gamma, grid, base, [&](Index t, const edgeout::Fit& fit) {
        Index correct = 0;
        Index active = 0;
        for (Index i = 0; i < fit.row_l2.size(); ++i) {
          if (fit.row_l2[i] > 0.0) ++active;
        }
        Index worst_rank = 0;
        for (Index hub : data.hub_set) {
          if (fit.row_l2[hub] > 0.0) ++correct;
          // Pessimistic rank: every row sum >= the hub's counts, ties too.
          const double s_hub = fit.row_abs_sums[hub];
          Index rank = 0;
          for (Index j = 0; j < fit.row_abs_sums.size(); ++j) {
            if (fit.row_abs_sums[j] >= s_hub) ++rank;
          }
          worst_rank = std::max(worst_rank, rank);
        }
        curve.correct_hubs[static_cast<std::size_t>(t)] = correct;
        curve.max_hub_rank[static_cast<std::size_t>(t)] = worst_rank;
        curve.active_rows[static_cast<std::size_t>(t)] = active;
      });
  return curve;
}

}  // namespace harness
}  // namespace hubnet
