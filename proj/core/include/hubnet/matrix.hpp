#pragma once

#include "hubnet/types.hpp"

namespace hubnet {

struct StandardizeReport {
  Vector means;
  Vector sds;  // sample standard deviations (n-1 denominator)
};

// Column-wise center and scale to unit sample variance. Raises
// ZeroVarianceColumn (with the column index) if any column is constant.
// Requires n >= 2.
std::pair<Matrix, StandardizeReport> standardize(const Matrix& x);

// n draws from N(0, sigma), one per row, computed as Z * L^T with
// sigma = L L^T (lower Cholesky) and Z filled row-major from the stream.
// Raises NotPositiveDefinite if the factorization fails.
Matrix sample_gaussian(Index n, const Matrix& sigma, Seed seed);

// Random symmetric positive definite matrix with eigenvalue ratio
// lambda_max/lambda_min == cond_ratio: eigenvalues uniform on [1, cond_ratio]
// with the extremes pinned, eigenvectors from the Q of a Gaussian matrix.
Matrix gen_positive_def(Index p, double cond_ratio, Seed seed);

// Raises InvalidParameter naming `what` if any entry is NaN or infinite.
void check_finite(const Matrix& x, const char* what);
void check_finite(const Vector& x, const char* what);

}  // namespace hubnet
