#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hubnet/edgeout.hpp"
#include "hubnet/matrix.hpp"
#include "hubnet/penreg.hpp"
#include "hubnet/simgen.hpp"
#include "hubnet/types.hpp"

namespace hubnet {
namespace harness {

enum class MethodId { lasso, elasticnet, adaptive_lasso, hubnet };

std::string to_string(MethodId method);
// Raises InvalidSpec on unknown names.
MethodId parse_method(const std::string& name);
std::vector<MethodId> parse_methods(const std::string& comma_separated);

struct MetricsRow {
  std::string method;
  double cvm = 0.0;
  double cvm_se = 0.0;
  double fn = 0.0;
  double fp = 0.0;
  double n_features = 0.0;  // fractional when averaged across replicates
  double test_error = 0.0;
  double test_error_se = 0.0;
};

struct HubnetRun {
  penreg::Fit fit;                         // chosen fit, input coordinates
  edgeout::HubWeights weights;
  edgeout::Fit edge_fit;                   // edge-out fit at the chosen theta
  edgeout::ThetaSelection theta_selection;
  penreg::CvReport cv_report;              // standardized-design artifacts
  StandardizeReport scaling;               // applied to X before both stages
};

// The full two-stage pipeline: standardize X, pick theta by GCV for the
// edge-out fit (gamma = 0.5), turn the absolute row sums of B expressed in
// input coordinates into penalty weights, then cross-validate a weighted
// lasso (alpha = 1) with those weights. The returned fit predicts on the
// input scale; pass pre-standardized data to make the scale step a no-op.
// Raises AllWeightsInfinite when the edge-out stage selects nothing.
HubnetRun run_hubnet(const Matrix& x, const Vector& y, penreg::Family family,
                     int cv_k = 10, Seed cv_seed = {});

struct MethodRun {
  MethodId method = MethodId::lasso;
  penreg::Fit fit;               // chosen fit, input coordinates
  penreg::CvReport cv;           // standardized-design artifacts
  StandardizeReport scaling;
  std::optional<HubnetRun> hub;  // populated by the hubnet method
};

// Baselines: lasso (alpha 1), elastic net (alpha 0.5), adaptive lasso
// (alpha 1, univariate weights). All standardize X internally, cross-validate
// on the same seeded folds so methods within a replicate are comparable, and
// return the chosen fit in the coordinates of the x they were handed.
MethodRun run_method(MethodId method, const Matrix& x, const Vector& y,
                     penreg::Family family, int cv_k, Seed cv_seed);

// Selection and prediction metrics against ground truth; the cvm columns
// are left for the caller, which holds the CV report.
// fp = |S_hat \ S| / max(|S_hat|, 1), fn = |S \ S_hat| / |S|.
// Raises MissingGroundTruth when data lacks a true support or a test set.
MetricsRow evaluate(const penreg::Fit& fit, const simgen::SimData& data);

// Fresh data per replicate; every listed method sees the same data and the
// same CV folds. Returns one aggregated row per method (mean over reps, se
// columns are across-replicate standard deviations; zero when reps == 1),
// sorted by method name.
std::vector<MetricsRow> compare(const simgen::ScenarioSpec& spec,
                                const std::vector<MethodId>& methods,
                                int reps, Seed seed, int cv_k = 10);

struct PathCurve {
  std::vector<double> lambdas;
  std::vector<double> fp;
  std::vector<double> fn;
  std::vector<Index> nonzero;
};

// fp/fn at every lambda of a fitted path.
PathCurve fp_fn_path(const penreg::Path& path, const simgen::SimData& data);

// Scanning from sparsest to densest, the false-positive count of the first
// model whose active set covers the true support; nullopt when no model on
// the path screens.
std::optional<Index> screening_fp(const penreg::Path& path,
                                  const simgen::SimData& data);

struct RecoveryCurve {
  std::vector<double> grid;          // descending theta values
  std::vector<Index> correct_hubs;   // hubs with a nonzero row at each theta
  std::vector<Index> max_hub_rank;   // worst hub rank by absolute row sum
  std::vector<Index> active_rows;    // total nonzero rows (hub or not)
};

// Edge-out fits along a theta grid (default grid when empty) on hub-graph
// data. Ranks are pessimistic: rank_i = #{j : s_j >= s_i}, so ties count
// against the hub.
RecoveryCurve hub_recovery(const simgen::SimData& data, double gamma,
                           const std::vector<double>& theta_grid = {},
                           const edgeout::Config& base = {});

}  // namespace harness
}  // namespace hubnet
