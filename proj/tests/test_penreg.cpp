#include "hubnet/penreg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "hubnet/matrix.hpp"
#include "hubnet/rng.hpp"
#include "hubnet/types.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace hubnet;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// y = x * beta_true + noise for a quick supervised problem.
Vector make_response(const Matrix& x, const Vector& beta_true,
                     std::uint64_t seed, double noise_sd = 0.5) {
  Rng rng(Seed{seed});
  Vector y = x * beta_true;
  for (Index i = 0; i < y.size(); ++i) y[i] += rng.normal(0.0, noise_sd);
  return y;
}
}  // namespace

TEST_CASE("the null model is optimal at and above lambda_max") {
  const Matrix x = standardize(testutil::random_matrix(40, 6, 31)).first;
  Vector beta_true = Vector::Zero(6);
  beta_true[0] = 2.0;
  const Vector y = make_response(x, beta_true, 32);

  const Vector w = Vector::Ones(6);
  const double lmax = penreg::lambda_max(x, y, 1.0, w, penreg::Family::gaussian);
  for (double lambda : {lmax, 2.0 * lmax}) {
    penreg::PenaltySpec spec;
    spec.lambda = lambda;
    spec.alpha = 1.0;
    spec.weights = w;
    const auto fit = penreg::wfit(x, y, spec, penreg::Family::gaussian);
    CHECK(fit.nonzero_count == 0);
    CHECK(fit.beta.cwiseAbs().maxCoeff() == 0.0);
    CHECK(fit.beta0 == doctest::Approx(y.mean()).epsilon(1e-12));
  }

  penreg::PenaltySpec below;
  below.lambda = 0.95 * lmax;
  below.alpha = 1.0;
  below.weights = w;
  CHECK(penreg::wfit(x, y, below, penreg::Family::gaussian).nonzero_count > 0);
}

TEST_CASE("single-feature fits match the closed form") {
  Rng rng(Seed{33});
  Matrix x(50, 1);
  for (Index i = 0; i < 50; ++i) x(i, 0) = rng.normal(1.0, 2.0);
  Vector y(50);
  for (Index i = 0; i < 50; ++i) y[i] = 0.8 * x(i, 0) + rng.normal(0.0, 0.3);

  const double n = 50.0;
  const double xbar = x.col(0).mean();
  const double ybar = y.mean();
  const Vector xc = x.col(0).array() - xbar;
  const Vector yc = y.array() - ybar;
  const double sxx = xc.squaredNorm() / n;
  const double sxy = xc.dot(yc) / n;

  for (double alpha : {1.0, 0.5}) {
    for (double wj : {1.0, 2.0}) {
      penreg::PenaltySpec spec;
      spec.lambda = 0.1;
      spec.alpha = alpha;
      spec.weights = Vector::Constant(1, wj);
      const auto fit = penreg::wfit(x, y, spec, penreg::Family::gaussian);

      const double thr = spec.lambda * alpha * wj;
      const double soft = std::max(std::abs(sxy) - thr, 0.0) *
                          (sxy >= 0.0 ? 1.0 : -1.0);
      const double denom = sxx + 2.0 * spec.lambda * (1.0 - alpha) * wj;
      const double beta_expect = soft / denom;
      CHECK(fit.beta[0] == doctest::Approx(beta_expect).epsilon(1e-10));
      CHECK(fit.beta0 ==
            doctest::Approx(ybar - beta_expect * xbar).epsilon(1e-10));
    }
  }
}

TEST_CASE("infinite weights exclude features exactly") {
  const Matrix x = standardize(testutil::random_matrix(30, 5, 34)).first;
  Vector beta_true(5);
  beta_true << 1.5, -1.0, 0.8, 0.0, 0.0;
  const Vector y = make_response(x, beta_true, 35);

  Vector w = Vector::Ones(5);
  w[1] = kInf;
  w[4] = kInf;
  const auto path =
      penreg::lambda_path(x, y, 1.0, w, penreg::Family::gaussian, 30, 0.01);
  for (const auto& fit : path.fits) {
    CHECK(fit.beta[1] == 0.0);
    CHECK(fit.beta[4] == 0.0);
  }
  // The strong features still enter.
  CHECK(path.fits.back().beta[0] != 0.0);
  CHECK(path.fits.back().beta[2] != 0.0);
}

TEST_CASE("fits satisfy the stationarity conditions") {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const Matrix x =
        standardize(testutil::random_matrix(25, 8, 4000 + seed)).first;
    Vector beta_true = Vector::Zero(8);
    beta_true[0] = 1.0;
    beta_true[3] = -2.0;
    const Vector y = make_response(x, beta_true, 5000 + seed);

    Vector w = Vector::Ones(8);
    if (seed % 3 == 0) {
      Rng rng(Seed{6000 + seed});
      for (Index j = 0; j < 8; ++j) w[j] = 0.25 + rng.uniform() * 2.0;
      w[7] = kInf;
    }
    const double alpha = (seed % 2 == 0) ? 1.0 : 0.5;
    const double lmax =
        penreg::lambda_max(x, y, alpha, w, penreg::Family::gaussian);

    penreg::PenaltySpec spec;
    spec.alpha = alpha;
    spec.weights = w;
    for (double frac : {0.5, 0.1, 0.01}) {
      spec.lambda = frac * lmax;
      const auto fit = penreg::wfit(x, y, spec, penreg::Family::gaussian);
      penreg::Fit probe = fit;
      CHECK(oracle::wlasso_stationarity(x, y, spec.lambda, alpha, w, probe) <
            1e-6);
      CHECK(penreg::kkt_residual(x, y, spec, penreg::Family::gaussian, fit) <
            1e-6);
      CHECK(fit.nonzero_count == (fit.beta.array() != 0.0).count());
    }
  }
}

TEST_CASE("three-feature fits match exhaustive enumeration") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Matrix x =
        standardize(testutil::random_matrix(20, 3, 7000 + seed)).first;
    Vector beta_true(3);
    beta_true << 1.2, 0.0, -0.7;
    const Vector y = make_response(x, beta_true, 8000 + seed);

    Vector w = Vector::Ones(3);
    if (seed % 2 == 0) w << 0.5, 2.0, 1.0;
    const double lmax =
        penreg::lambda_max(x, y, 1.0, w, penreg::Family::gaussian);
    const double lambda = 0.2 * lmax;

    const auto ref = oracle::brute_force_wlasso(x, y, lambda, w);
    REQUIRE(ref.found);

    penreg::PenaltySpec spec;
    spec.lambda = lambda;
    spec.alpha = 1.0;
    spec.weights = w;
    const auto fit = penreg::wfit(x, y, spec, penreg::Family::gaussian);
    CHECK(std::abs(fit.beta0 - ref.beta0) < 1e-4);
    for (Index j = 0; j < 3; ++j) {
      CHECK(std::abs(fit.beta[j] - ref.beta[j]) < 1e-4);
    }
  }
}

TEST_CASE("penalty weight scaling folds into lambda") {
  const Matrix x = standardize(testutil::random_matrix(30, 5, 36)).first;
  Vector beta_true(5);
  beta_true << 1.0, -0.5, 0.0, 0.3, 0.0;
  const Vector y = make_response(x, beta_true, 37);
  Vector w(5);
  w << 0.5, 1.0, 2.0, 1.5, 0.7;

  const double c = 4.0;
  penreg::PenaltySpec a;
  a.lambda = 0.08;
  a.alpha = 1.0;
  a.weights = w;
  penreg::PenaltySpec b;
  b.lambda = 0.08 / c;
  b.alpha = 1.0;
  b.weights = w * c;
  const auto fa = penreg::wfit(x, y, a, penreg::Family::gaussian);
  const auto fb = penreg::wfit(x, y, b, penreg::Family::gaussian);
  CHECK((fa.beta - fb.beta).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(std::abs(fa.beta0 - fb.beta0) < 1e-8);

  // Doubling every weight halves the entry point of the path.
  const double l1 = penreg::lambda_max(x, y, 1.0, w, penreg::Family::gaussian);
  const double l2 =
      penreg::lambda_max(x, y, 1.0, (w * 2.0).eval(), penreg::Family::gaussian);
  CHECK(l2 == doctest::Approx(0.5 * l1).epsilon(1e-12));
}

TEST_CASE("lambda paths start empty and grow mostly monotonically") {
  int monotone_steps = 0;
  int total_steps = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Matrix x =
        standardize(testutil::random_matrix(40, 10, 9000 + seed)).first;
    Vector beta_true = Vector::Zero(10);
    beta_true.head(3) << 2.0, -1.5, 1.0;
    const Vector y = make_response(x, beta_true, 10000 + seed);

    const auto path = penreg::lambda_path(x, y, 1.0, Vector::Ones(10),
                                          penreg::Family::gaussian, 40, 0.01);
    REQUIRE(path.lambdas.size() == 40);
    REQUIRE(path.fits.size() == 40);
    CHECK(path.fits.front().nonzero_count == 0);
    CHECK(std::is_sorted(path.lambdas.rbegin(), path.lambdas.rend()));
    for (std::size_t k = 1; k < path.lambdas.size(); ++k) {
      CHECK(path.lambdas[k] < path.lambdas[k - 1]);
      if (path.fits[k].nonzero_count >= path.fits[k - 1].nonzero_count) {
        ++monotone_steps;
      }
      ++total_steps;
    }
  }
  CHECK(monotone_steps >= (total_steps * 9) / 10);
}

TEST_CASE("degenerate weight vectors are rejected") {
  const Matrix x = standardize(testutil::random_matrix(20, 4, 38)).first;
  const Vector y = make_response(x, Vector::Zero(4), 39);

  const Vector all_inf = Vector::Constant(4, kInf);
  CHECK_THROWS_AS(
      penreg::lambda_path(x, y, 1.0, all_inf, penreg::Family::gaussian),
      Error);

  Vector with_zero = Vector::Ones(4);
  with_zero[2] = 0.0;
  CHECK_THROWS_AS(
      penreg::lambda_path(x, y, 1.0, with_zero, penreg::Family::gaussian),
      Error);
}

TEST_CASE("cross validation is reproducible and reports its minimum") {
  const Matrix x = standardize(testutil::random_matrix(50, 8, 40)).first;
  Vector beta_true = Vector::Zero(8);
  beta_true.head(2) << 1.5, -1.0;
  const Vector y = make_response(x, beta_true, 41);

  const auto a = penreg::cv(x, y, 1.0, Vector::Ones(8),
                            penreg::Family::gaussian, 5, Seed{7}, 40);
  const auto b = penreg::cv(x, y, 1.0, Vector::Ones(8),
                            penreg::Family::gaussian, 5, Seed{7}, 40);
  CHECK(a.cvm == b.cvm);
  CHECK(a.lambda_min == b.lambda_min);
  CHECK(a.chosen.beta == b.chosen.beta);

  const double min_cvm = *std::min_element(a.cvm.begin(), a.cvm.end());
  const auto it = std::find(a.lambdas.begin(), a.lambdas.end(), a.lambda_min);
  REQUIRE(it != a.lambdas.end());
  const auto idx = static_cast<std::size_t>(it - a.lambdas.begin());
  CHECK(a.cvm[idx] == min_cvm);
  CHECK(a.chosen.lambda == a.lambda_min);
  for (double sd : a.cvsd) CHECK(std::isfinite(sd));

  // Ties resolve toward the larger lambda: no earlier grid point may tie.
  for (std::size_t k = 0; k < idx; ++k) CHECK(a.cvm[k] > min_cvm);
}

TEST_CASE("cross validation stays sparse on pure noise") {
  int sparse = 0;
  const int seeds = 20;
  for (std::uint64_t s = 1; s <= seeds; ++s) {
    const Matrix x =
        standardize(testutil::random_matrix(50, 30, 11000 + s)).first;
    const Vector y = testutil::random_vector(50, 12000 + s);
    const auto report = penreg::cv(x, y, 1.0, Vector::Ones(30),
                                   penreg::Family::gaussian, 5, Seed{s}, 50);
    if (report.chosen.nonzero_count <= 5) ++sparse;
  }
  CHECK(sparse >= 16);
}

TEST_CASE("leave-one-out folds stay finite") {
  const Matrix x = standardize(testutil::random_matrix(20, 3, 42)).first;
  Vector beta_true(3);
  beta_true << 1.0, 0.0, -0.5;
  const Vector y = make_response(x, beta_true, 43);
  const auto report = penreg::cv(x, y, 1.0, Vector::Ones(3),
                                 penreg::Family::gaussian, 20, Seed{1}, 30);
  for (double m : report.cvm) CHECK(std::isfinite(m));
  CHECK(report.chosen.beta.size() == 3);
}

TEST_CASE("univariate weights invert marginal associations") {
  // Orthogonal design scaled so x_j^T x_j = n: the marginal inner product
  // x_j^T y / n is the least squares coefficient.
  const Matrix raw = testutil::random_matrix(30, 4, 44);
  const Matrix q = Eigen::HouseholderQR<Matrix>(raw)
                       .householderQ() *
                   Matrix::Identity(30, 4);
  const Matrix x = q * std::sqrt(30.0);
  const Vector y = testutil::random_vector(30, 45);

  const Vector w = penreg::univariate_weights(x, y);
  for (Index j = 0; j < 4; ++j) {
    const double ols = x.col(j).dot(y) / 30.0;
    CHECK(w[j] == doctest::Approx(1.0 / std::abs(ols)).epsilon(1e-12));
  }

  const Vector w2 = penreg::univariate_weights(x, (2.0 * y).eval());
  for (Index j = 0; j < 4; ++j) {
    CHECK(w2[j] == doctest::Approx(0.5 * w[j]).epsilon(1e-12));
  }

  Matrix with_zero = x;
  with_zero.col(2).setZero();
  const Vector wz = penreg::univariate_weights(with_zero, y);
  CHECK(std::isinf(wz[2]));
}

TEST_CASE("binomial fits beat the null model on separable-ish data") {
  Rng rng(Seed{46});
  const Index n = 120, p = 4;
  Matrix x(n, p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) x(i, j) = rng.normal();
  }
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    const double eta = 1.5 * x(i, 0) - 1.0 * x(i, 1);
    const double prob = 1.0 / (1.0 + std::exp(-eta));
    y[i] = rng.uniform() < prob ? 1.0 : 0.0;
  }

  penreg::PenaltySpec spec;
  spec.lambda = 0.02;
  spec.alpha = 1.0;
  spec.weights = Vector::Ones(p);
  const auto fit = penreg::wfit(x, y, spec, penreg::Family::binomial);
  CHECK(fit.family == penreg::Family::binomial);

  const Vector prob = penreg::predict_response(fit, x);
  for (Index i = 0; i < n; ++i) {
    CHECK(prob[i] > 0.0);
    CHECK(prob[i] < 1.0);
  }
  const Vector null_prob = Vector::Constant(n, y.mean());
  CHECK(penreg::mean_deviance(y, prob) <
        penreg::mean_deviance(y, null_prob));
  CHECK(fit.beta[0] > 0.0);
  CHECK(fit.beta[1] < 0.0);

  Vector bad = y;
  bad[3] = 0.5;
  CHECK_THROWS_AS(penreg::wfit(x, bad, spec, penreg::Family::binomial), Error);
}

TEST_CASE("mean deviance matches the hand formula") {
  Vector y(2), prob(2);
  y << 1.0, 0.0;
  prob << 0.8, 0.3;
  const double expect = -(std::log(0.8) + std::log(0.7));
  CHECK(penreg::mean_deviance(y, prob) ==
        doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("predictions apply the intercept and the link") {
  penreg::Fit fit;
  fit.beta0 = 1.0;
  fit.beta = Vector(2);
  fit.beta << 2.0, -1.0;
  Matrix x(1, 2);
  x << 1.0, 1.0;

  CHECK(penreg::predict_linear(fit, x)[0] == doctest::Approx(2.0));
  CHECK(penreg::predict_response(fit, x)[0] == doctest::Approx(2.0));
  fit.family = penreg::Family::binomial;
  CHECK(penreg::predict_response(fit, x)[0] ==
        doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-12));
}

TEST_CASE("input-scale fits predict identically to standardized fits") {
  Rng rng(Seed{47});
  const Index n = 40, p = 5;
  Matrix x(n, p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) {
      x(i, j) = rng.normal(static_cast<double>(j), 1.0 + 2.0 * j);
    }
  }
  Vector beta_true = Vector::Zero(p);
  beta_true[0] = 1.0;
  beta_true[2] = -0.4;
  Vector y = x * beta_true;
  for (Index i = 0; i < n; ++i) y[i] += rng.normal(0.0, 0.5);

  const auto [xs, scaling] = standardize(x);
  penreg::PenaltySpec spec;
  spec.lambda = 0.05;
  spec.alpha = 1.0;
  spec.weights = Vector::Ones(p);
  const auto std_fit = penreg::wfit(xs, y, spec, penreg::Family::gaussian);
  const auto raw_fit = penreg::to_input_scale(std_fit, scaling);

  const Vector from_std = penreg::predict_linear(std_fit, xs);
  const Vector from_raw = penreg::predict_linear(raw_fit, x);
  CHECK((from_std - from_raw).cwiseAbs().maxCoeff() < 1e-10);
  for (Index j = 0; j < p; ++j) {
    CHECK((std_fit.beta[j] == 0.0) == (raw_fit.beta[j] == 0.0));
  }
  CHECK(raw_fit.nonzero_count == std_fit.nonzero_count);

  StandardizeReport wrong;
  wrong.means = Vector::Zero(p + 1);
  wrong.sds = Vector::Ones(p + 1);
  CHECK_THROWS_AS(penreg::to_input_scale(std_fit, wrong), Error);
}
