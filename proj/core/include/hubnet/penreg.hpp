#pragma once

#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hubnet/matrix.hpp"
#include "hubnet/types.hpp"

namespace hubnet {
namespace penreg {

// Weighted elastic net:
//
//   1/(2n) ||y - beta0 - X beta||^2
//     + lambda * sum_j w_j (alpha |beta_j| + (1-alpha) beta_j^2)
//
// for the Gaussian family, and the same penalty on the mean binomial
// deviance for logistic fits. Per-feature weights w_j >= 0 rescale the
// penalty; w_j = +inf excludes feature j (its coefficient is exactly zero).

enum class Family { gaussian, binomial };

struct PenaltySpec {
  double lambda = 0.0;
  double alpha = 1.0;  // 1 = lasso, 0 = ridge
  Vector weights;      // empty means all ones
};

struct Control {
  int max_sweeps = 100000;    // coordinate descent cap (Gaussian / inner)
  int irls_max = 25;          // outer iterations for binomial
  double irls_tol = 1e-8;     // relative deviance change to stop IRLS
};

struct Fit {
  double beta0 = 0.0;
  Vector beta;
  Family family = Family::gaussian;
  double lambda = 0.0;
  double alpha = 1.0;
  Index nonzero_count = 0;
};

// Solves one (lambda, alpha, w) problem by cyclic coordinate descent with
// active-set sweeps; the result is certified against the subgradient
// conditions before returning. Binomial fits run IRLS with the working
// probabilities clamped to [1e-5, 1-1e-5]; the response must be exactly
// 0/1 (NonBinaryResponse otherwise).
Fit wfit(const Matrix& x, const Vector& y, const PenaltySpec& spec,
         Family family, const Control& ctrl = {});

// Largest KKT violation of `fit` under the stated objective. Zero for an
// exact solution; used by tests and by wfit's own certification.
double kkt_residual(const Matrix& x, const Vector& y, const PenaltySpec& spec,
                    Family family, const Fit& fit);

// Smallest lambda at which the all-zero coefficient vector is optimal,
// max_j |x_j^T (y - ybar) / n| / (alpha_eff * w_j) over finitely weighted
// features. alpha below 1e-3 is floored to keep the grid finite.
double lambda_max(const Matrix& x, const Vector& y, double alpha,
                  const Vector& weights, Family family);

struct Path {
  std::vector<double> lambdas;  // descending
  std::vector<Fit> fits;
};

// n_lambda log-spaced values from just above lambda_max down to
// lambda_max*min_ratio, warm starting each fit from the previous one. The
// first fit always has nonzero_count == 0. Raises AllWeightsInfinite if no
// feature has a finite weight, and InvalidParameter on zero weights (a zero
// weight makes an empty top of path impossible).
Path lambda_path(const Matrix& x, const Vector& y, double alpha,
                 const Vector& weights, Family family, int n_lambda = 100,
                 double min_ratio = 0.01, const Control& ctrl = {});

struct CvReport {
  std::vector<double> lambdas;
  std::vector<double> cvm;   // mean validation loss per lambda
  std::vector<double> cvsd;  // standard error of the fold means
  double lambda_min = 0.0;
  Fit chosen;                // full-data fit at lambda_min
};

// K-fold cross validation on a shared full-data lambda grid. Folds are a
// seeded shuffle dealt round-robin, so a seed pins them exactly. Loss is
// mean squared error (Gaussian) or mean deviance (binomial). Ties in cvm
// resolve toward the larger lambda.
CvReport cv(const Matrix& x, const Vector& y, double alpha,
            const Vector& weights, Family family, int k, Seed fold_seed,
            int n_lambda = 100, double min_ratio = 0.01,
            const Control& ctrl = {});

// Adaptive-lasso weights from univariate regression: w_j = 1/|x_j^T y / n|,
// +inf where the inner product is exactly zero.
Vector univariate_weights(const Matrix& x, const Vector& y);

Vector predict_linear(const Fit& fit, const Matrix& x);
// Gaussian: the linear predictor. Binomial: probabilities.
Vector predict_response(const Fit& fit, const Matrix& x);

// Re-express a fit computed on standardize(x).first in the coordinates of x
// itself: beta_j /= sd_j and the means fold into the intercept, so predicting
// with the result on raw x matches predicting with the input fit on the
// standardized copy. The nonzero pattern is unchanged (sds are positive).
Fit to_input_scale(Fit fit, const StandardizeReport& scaling);

// -2/n sum_i [y log p + (1-y) log(1-p)], probabilities clamped for the log.
double mean_deviance(const Vector& y, const Vector& prob);

nlohmann::json to_json(const Fit& fit);

}  // namespace penreg
}  // namespace hubnet
