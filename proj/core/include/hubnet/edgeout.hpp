#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hubnet/types.hpp"

namespace hubnet {
namespace edgeout {

// Self-regression hub estimator. Minimizes, over square B with zero
// diagonal,
//
//   1/2 ||X - X B||_F^2
//     + theta * sum_i [ gamma ||B_i.||_1 + (1-gamma) sqrt(p-1) ||B_i.||_2 ]
//
// by cyclic blockwise coordinate descent over rows of B. Rows with large
// absolute sums mark features that help reconstruct many others (hubs).

struct Config {
  double theta = 0.0;
  double gamma = 0.5;  // 1 = pure lasso rows, 0 = pure group (row) penalty
  int max_sweeps = 500;
  double tol = 1e-3;  // largest absolute coefficient move allowed in the
                      // final sweep; coefficients are order one on the
                      // standardized designs fed in upstream, so the default
                      // is pipeline-grade, not certification-grade
};

struct Fit {
  Matrix b;
  Vector row_abs_sums;  // s_i = sum_j |B_ij|
  Vector row_l2;        // ||B_i.||_2
  Vector col_sq;        // ||X_.i||^2 of the training design, per column
  double objective = 0.0;
  std::vector<double> objective_trace;  // value after each sweep
  int sweeps_used = 0;
  bool converged = false;
  double theta = 0.0;
  double gamma = 0.0;
};

double soft_threshold(double x, double t);

// Penalized objective at B. Raises DimensionMismatch if shapes disagree and
// NonzeroDiagonal if any B_ii != 0.
double objective(const Matrix& x, const Matrix& b, double theta, double gamma);

// Exact minimizer of the objective over row i of B with all other rows
// fixed: soft-threshold the residual correlations at theta*gamma, then apply
// the group shrink, then divide by ||X_.i||^2. Returns the p-1 off-diagonal
// entries in column order. Raises ZeroColumn(i) if column i of X is zero.
Vector row_minimize(const Matrix& x, const Matrix& b, Index i, double theta,
                    double gamma);

// Full solve from B = 0. Stops once a whole sweep moves no coefficient by
// more than cfg.tol, or after cfg.max_sweeps.
Fit fit(const Matrix& x, const Config& cfg);

// Smallest theta at which the all-zero B is optimal (closed form).
double theta_max(const Matrix& x, double gamma);

// count log-spaced values from theta_max(x, gamma) down to theta_max*ratio.
std::vector<double> default_theta_grid(const Matrix& x, double gamma,
                                       int count = 50, double ratio = 1e-3);

// Effective degrees of freedom of a fit. With gamma == 1 this is exactly the
// nonzero count of B; otherwise each nonzero row contributes its support
// size scaled by the group shrink factor ||B_i.|| / (||B_i.|| + c_i), where
// c_i = theta*(1-gamma)*sqrt(p-1) / ||X_.i||^2 is the group threshold
// expressed on the scale of the row coefficients (the row update divides by
// ||X_.i||^2, so the comparison must too). Fits lacking col_sq use c_i with
// unit column norm.
double gcv_df(const Fit& fit, Index p);

// Generalized cross-validation score ||X - X B||_F^2 / (n*p - df).
// Raises DegenerateDf if df >= n*p.
double gcv_score(const Matrix& x, const Fit& fit);

// Evaluates fits along a descending theta grid, warm starting each from the
// previous solution, and hands every fit to `visit` in grid order.
void for_each_theta(const Matrix& x, double gamma,
                    const std::vector<double>& grid, const Config& base,
                    const std::function<void(Index, const Fit&)>& visit);

enum class ThetaMethod { gcv, kfold };

struct ThetaSelection {
  std::vector<double> grid;
  std::vector<double> scores;  // +inf marks grid points skipped as degenerate
  double chosen_theta = 0.0;
  ThetaMethod method = ThetaMethod::gcv;
};

// Minimum-score theta over the grid (default grid when none is given), ties
// broken toward the larger theta.
ThetaSelection select_theta_gcv(const Matrix& x, double gamma,
                                const std::vector<double>& grid = {},
                                const Config& base = {});

// K-fold row-holdout selection: score is the summed 1/2 ||X_val - X_val B||_F^2
// over validation folds. Folds are a seeded round-robin deal.
ThetaSelection select_theta_kfold(const Matrix& x, double gamma, int k,
                                  Seed fold_seed,
                                  const std::vector<double>& grid = {},
                                  const Config& base = {});

struct HubWeights {
  Vector w;  // penalty factor per feature; +inf excludes the feature
  Vector s;  // absolute row sums the weights came from
};

// w_j = 1 / s_j, with w_j = +inf where s_j == 0.
HubWeights hub_weights(const Fit& fit);

// Same weights, but with B first re-expressed in the coordinates of the
// design the caller standardized away: fitting on X*diag(1/sd) and mapping
// predictions back multiplies B_ij by sd_j/sd_i, so
//   s_i = sum_j |B_ij| * sd_j / sd_i.
// Columns with sd == 0 keep factor 1 (a constant column has no edges after
// centering anyway). With unit sds this reduces to the overload above.
HubWeights hub_weights(const Fit& fit, const Vector& column_sds);

nlohmann::json to_json(const Fit& fit, bool include_b = false);

}  // namespace edgeout
}  // namespace hubnet
