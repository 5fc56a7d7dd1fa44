#include "hubnet/matrix.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "hubnet/rng.hpp"

namespace hubnet {

std::pair<Matrix, StandardizeReport> standardize(const Matrix& x) {
  const Index n = x.rows();
  const Index p = x.cols();
  if (n < 2) {
    raise(ErrorKind::InvalidParameter, "standardize requires at least 2 rows");
  }
  check_finite(x, "standardize input");

  StandardizeReport report;
  report.means = x.colwise().mean();
  Matrix out = x.rowwise() - report.means.transpose();
  report.sds = (out.colwise().squaredNorm() / static_cast<double>(n - 1))
                   .cwiseSqrt()
                   .transpose();
  for (Index j = 0; j < p; ++j) {
    if (report.sds[j] == 0.0) {
      raise(ErrorKind::ZeroVarianceColumn,
            "column " + std::to_string(j) + " has zero variance", j);
    }
  }
  out.array().rowwise() /= report.sds.transpose().array();
  return {std::move(out), std::move(report)};
}

Matrix sample_gaussian(Index n, const Matrix& sigma, Seed seed) {
  const Index p = sigma.rows();
  if (sigma.cols() != p) {
    raise(ErrorKind::DimensionMismatch, "covariance must be square");
  }
  if (n < 1) raise(ErrorKind::InvalidParameter, "need n >= 1 draws");
  check_finite(sigma, "covariance");

  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) {
    raise(ErrorKind::NotPositiveDefinite,
          "covariance is not positive definite");
  }

  Rng rng(seed);
  Matrix z(n, p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) z(i, j) = rng.normal();
  }
  Matrix out(n, p);
  out.noalias() = z * llt.matrixL().transpose();
  return out;
}

Matrix gen_positive_def(Index p, double cond_ratio, Seed seed) {
  if (p < 2) raise(ErrorKind::InvalidParameter, "gen_positive_def needs p >= 2");
  if (!(cond_ratio >= 1.0)) {
    raise(ErrorKind::InvalidParameter, "eigenvalue ratio must be >= 1");
  }

  Rng rng(seed);
  Matrix m(p, p);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < p; ++j) m(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Matrix> qr(m);
  Matrix q = qr.householderQ();
  // Fix the sign ambiguity of QR so the basis is a pure function of the seed.
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < p; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }

  std::vector<double> evals(static_cast<std::size_t>(p));
  for (auto& e : evals) e = rng.uniform(1.0, cond_ratio);
  // Pin the extremes so the ratio is exact, not merely approached.
  std::sort(evals.begin(), evals.end());
  evals.front() = 1.0;
  evals.back() = cond_ratio;

  Matrix scaled = q;
  for (Index j = 0; j < p; ++j) {
    scaled.col(j) *= evals[static_cast<std::size_t>(j)];
  }
  Matrix out(p, p);
  out.noalias() = scaled * q.transpose();
  out = ((out + out.transpose()) * 0.5).eval();
  return out;
}

void check_finite(const Matrix& x, const char* what) {
  if (!x.allFinite()) {
    raise(ErrorKind::InvalidParameter,
          std::string(what) + " contains NaN or infinite entries");
  }
}

void check_finite(const Vector& x, const char* what) {
  if (!x.allFinite()) {
    raise(ErrorKind::InvalidParameter,
          std::string(what) + " contains NaN or infinite entries");
  }
}

}  // namespace hubnet
