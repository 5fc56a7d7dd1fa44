#include "hubnet/edgeout.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hubnet/matrix.hpp"
#include "hubnet/rng.hpp"

namespace hubnet {
namespace edgeout {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_penalty_params(double theta, double gamma) {
  if (!(theta >= 0.0)) {
    raise(ErrorKind::InvalidParameter, "theta must be >= 0");
  }
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    raise(ErrorKind::InvalidParameter, "gamma must lie in [0,1]");
  }
}

void check_b_shape(const Matrix& x, const Matrix& b) {
  const Index p = x.cols();
  if (b.rows() != p || b.cols() != p) {
    raise(ErrorKind::DimensionMismatch, "B must be p x p with p = cols(X)");
  }
  for (Index i = 0; i < p; ++i) {
    if (b(i, i) != 0.0) {
      raise(ErrorKind::NonzeroDiagonal,
            "B has nonzero diagonal entry at " + std::to_string(i), i);
    }
  }
}

double row_penalty(const Eigen::Ref<const Eigen::RowVectorXd>& row,
                   double theta, double gamma, double sqrt_pm1) {
  return theta * (gamma * row.cwiseAbs().sum() +
                  (1.0 - gamma) * sqrt_pm1 * row.norm());
}

double penalty(const Matrix& b, double theta, double gamma, double sqrt_pm1) {
  double total = 0.0;
  for (Index i = 0; i < b.rows(); ++i) {
    total += row_penalty(b.row(i), theta, gamma, sqrt_pm1);
  }
  return total;
}

// Exact minimizer over row i given the correlations r = X_.i^T (X - X B'),
// where B' is B with row i zeroed. Writes into `row` (length p, entry i
// forced to 0) and returns true if the row is nonzero.
bool row_update(const Vector& r, Index i, double col_sq, double theta,
                double gamma, double sqrt_pm1, Eigen::RowVectorXd& row) {
  const Index p = r.size();
  const double lasso_cut = theta * gamma;
  const double group_cut = theta * (1.0 - gamma) * sqrt_pm1;

  double norm_sq = 0.0;
  for (Index j = 0; j < p; ++j) {
    const double v = (j == i) ? 0.0 : soft_threshold(r[j], lasso_cut);
    row[j] = v;
    norm_sq += v * v;
  }
  const double norm = std::sqrt(norm_sq);
  if (norm <= group_cut) {
    row.setZero();
    return false;
  }
  row *= (1.0 - group_cut / norm) / col_sq;
  return true;
}

struct Workspace {
  Vector col_sq;      // ||X_.j||^2
  double sqrt_pm1;    // sqrt(p-1)
};

Workspace make_workspace(const Matrix& x) {
  const Index p = x.cols();
  if (p < 2) {
    raise(ErrorKind::InvalidParameter, "edge-out needs at least 2 features");
  }
  check_finite(x, "edge-out input");
  Workspace ws;
  ws.col_sq = x.colwise().squaredNorm();
  for (Index j = 0; j < p; ++j) {
    if (ws.col_sq[j] == 0.0) {
      raise(ErrorKind::ZeroColumn,
            "column " + std::to_string(j) + " of X is identically zero", j);
    }
  }
  ws.sqrt_pm1 = std::sqrt(static_cast<double>(p - 1));
  return ws;
}

// Rank-1 residual update touching only the nonzero entries of the row.
void apply_rank1(Matrix& resid, const Matrix& x, Index i,
                 const Eigen::RowVectorXd& row, double sign) {
  for (Index j = 0; j < row.size(); ++j) {
    if (row[j] != 0.0) resid.col(j) += (sign * row[j]) * x.col(i);
  }
}

// Cyclic blockwise descent continuing from b (modified in place). The
// residual X - X B is maintained incrementally; the returned objective and
// row norms are recomputed from scratch at the end.
Fit fit_continue(const Matrix& x, Matrix& b, const Config& cfg,
                 const Workspace& ws) {
  check_penalty_params(cfg.theta, cfg.gamma);
  if (cfg.max_sweeps < 1) {
    raise(ErrorKind::InvalidParameter, "max_sweeps must be >= 1");
  }
  if (!(cfg.tol >= 0.0)) {
    raise(ErrorKind::InvalidParameter, "tol must be >= 0");
  }

  const Index p = x.cols();
  Matrix resid = x;
  if (!b.isZero(0.0)) resid.noalias() -= x * b;

  Fit out;
  out.theta = cfg.theta;
  out.gamma = cfg.gamma;
  out.objective_trace.reserve(static_cast<std::size_t>(cfg.max_sweeps));

  Vector r(p);
  Eigen::RowVectorXd new_row(p);
  for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
    // Convergence is judged in coefficient space: near the optimum the
    // objective decrease drowns in rounding long before the iterate stops
    // moving, so an objective-based rule cannot certify row stationarity.
    double max_change = 0.0;
    for (Index i = 0; i < p; ++i) {
      const bool had_row = !b.row(i).isZero(0.0);
      if (had_row) apply_rank1(resid, x, i, b.row(i), +1.0);
      r.noalias() = resid.transpose() * x.col(i);
      const bool has_row = row_update(r, i, ws.col_sq[i], cfg.theta,
                                      cfg.gamma, ws.sqrt_pm1, new_row);
      max_change =
          std::max(max_change, (new_row - b.row(i)).cwiseAbs().maxCoeff());
      b.row(i) = new_row;
      if (has_row) apply_rank1(resid, x, i, new_row, -1.0);
    }
    out.objective_trace.push_back(0.5 * resid.squaredNorm() +
                                  penalty(b, cfg.theta, cfg.gamma,
                                          ws.sqrt_pm1));
    ++out.sweeps_used;
    if (max_change <= cfg.tol) {
      out.converged = true;
      break;
    }
  }

  // Fresh recompute; the incrementally tracked residual drifts by rounding.
  resid = x;
  resid.noalias() -= x * b;
  out.objective = 0.5 * resid.squaredNorm() +
                  penalty(b, cfg.theta, cfg.gamma, ws.sqrt_pm1);
  out.row_abs_sums = b.cwiseAbs().rowwise().sum();
  out.row_l2 = b.rowwise().norm();
  out.col_sq = ws.col_sq;
  out.b = b;
  return out;
}

// Largest penalty at which row i stays zero, for gamma in (0,1): the root of
// h(t) = ||S(r, t*gamma)||^2 - t^2 (1-gamma)^2 (p-1), which is strictly
// decreasing where positive. Piecewise quadratic in t between the
// breakpoints |r_j|/gamma.
double row_theta_max_mixed(Vector abs_r, double gamma, double pm1) {
  std::sort(abs_r.data(), abs_r.data() + abs_r.size(),
            std::greater<double>());
  const Index m = abs_r.size();
  if (m == 0 || abs_r[0] == 0.0) return 0.0;
  const double c2 = (1.0 - gamma) * (1.0 - gamma) * pm1;

  double s_k = 0.0;  // sum of the k largest |r_j|
  double q_k = 0.0;  // sum of their squares
  std::vector<double> s_pref(static_cast<std::size_t>(m) + 1, 0.0);
  std::vector<double> q_pref(static_cast<std::size_t>(m) + 1, 0.0);
  for (Index k = 1; k <= m; ++k) {
    s_k += abs_r[k - 1];
    q_k += abs_r[k - 1] * abs_r[k - 1];
    s_pref[static_cast<std::size_t>(k)] = s_k;
    q_pref[static_cast<std::size_t>(k)] = q_k;
  }

  // On [|r_(k+1)|/gamma, |r_(k)|/gamma) exactly the k largest survive the
  // soft threshold and h(t) = Q_k - 2 gamma S_k t + (k gamma^2 - c2) t^2.
  for (Index k = m; k >= 1; --k) {
    const double lo = (k == m) ? 0.0 : abs_r[k] / gamma;
    const double hi = abs_r[k - 1] / gamma;
    if (!(lo < hi)) continue;  // tied breakpoints give empty intervals
    const double qa = static_cast<double>(k) * gamma * gamma - c2;
    const double qb = -2.0 * gamma * s_pref[static_cast<std::size_t>(k)];
    const double qc = q_pref[static_cast<std::size_t>(k)];
    auto h = [&](double t) { return qc + t * (qb + t * qa); };
    if (h(lo) < 0.0) return lo;  // crossed at the breakpoint itself
    if (h(hi) > 0.0) continue;   // still positive, move to the next interval
    if (qa == 0.0) return std::clamp(-qc / qb, lo, hi);
    const double disc = std::max(0.0, qb * qb - 4.0 * qa * qc);
    const double sq = std::sqrt(disc);
    // Both quadratic roots, one via the citardauq form for stability; take
    // whichever lands in the bracket, or bisect if rounding pushed both out.
    const double r1 = (-qb + sq) / (2.0 * qa);
    const double r2 = (2.0 * qc) / (-qb + sq);
    for (double root : {r1, r2}) {
      if (root >= lo && root <= hi) return root;
    }
    double a = lo;
    double c = hi;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (a + c);
      (h(mid) > 0.0 ? a : c) = mid;
    }
    return 0.5 * (a + c);
  }
  // h stayed positive through every interval; above the last breakpoint the
  // threshold kills every coordinate, so the boundary is the answer.
  return abs_r[0] / gamma;
}

}  // namespace

double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

double objective(const Matrix& x, const Matrix& b, double theta,
                 double gamma) {
  check_penalty_params(theta, gamma);
  check_finite(x, "objective X");
  check_finite(b, "objective B");
  check_b_shape(x, b);
  const double sqrt_pm1 = std::sqrt(static_cast<double>(x.cols() - 1));
  Matrix resid = x;
  resid.noalias() -= x * b;
  return 0.5 * resid.squaredNorm() + penalty(b, theta, gamma, sqrt_pm1);
}

Vector row_minimize(const Matrix& x, const Matrix& b, Index i, double theta,
                    double gamma) {
  check_penalty_params(theta, gamma);
  check_finite(x, "row_minimize X");
  check_finite(b, "row_minimize B");
  check_b_shape(x, b);
  const Index p = x.cols();
  if (i < 0 || i >= p) {
    raise(ErrorKind::InvalidParameter, "row index out of range", i);
  }
  const double col_sq = x.col(i).squaredNorm();
  if (col_sq == 0.0) {
    raise(ErrorKind::ZeroColumn,
          "column " + std::to_string(i) + " of X is identically zero", i);
  }

  // Residual with row i's contribution removed.
  Matrix resid = x;
  resid.noalias() -= x * b;
  if (!b.row(i).isZero(0.0)) {
    resid.noalias() += x.col(i) * b.row(i);
  }
  Vector r = resid.transpose() * x.col(i);

  const double sqrt_pm1 = std::sqrt(static_cast<double>(p - 1));
  Eigen::RowVectorXd row(p);
  row_update(r, i, col_sq, theta, gamma, sqrt_pm1, row);

  Vector out(p - 1);
  Index k = 0;
  for (Index j = 0; j < p; ++j) {
    if (j != i) out[k++] = row[j];
  }
  return out;
}

Fit fit(const Matrix& x, const Config& cfg) {
  const Workspace ws = make_workspace(x);
  Matrix b = Matrix::Zero(x.cols(), x.cols());
  return fit_continue(x, b, cfg, ws);
}

double theta_max(const Matrix& x, double gamma) {
  check_penalty_params(1.0, gamma);
  const Workspace ws = make_workspace(x);
  const Index p = x.cols();
  const double pm1 = static_cast<double>(p - 1);

  // At B = 0 the correlations are r0_i = X_.i^T X_.j over j != i.
  Matrix gram = x.transpose() * x;
  double best = 0.0;
  for (Index i = 0; i < p; ++i) {
    Vector abs_r(p - 1);
    Index k = 0;
    for (Index j = 0; j < p; ++j) {
      if (j != i) abs_r[k++] = std::abs(gram(i, j));
    }
    double ti;
    if (gamma == 1.0) {
      ti = abs_r.maxCoeff();
    } else if (gamma == 0.0) {
      ti = abs_r.norm() / ws.sqrt_pm1;
    } else {
      ti = row_theta_max_mixed(abs_r, gamma, pm1);
    }
    best = std::max(best, ti);
  }
  return best;
}

std::vector<double> default_theta_grid(const Matrix& x, double gamma,
                                       int count, double ratio) {
  if (count < 2) raise(ErrorKind::InvalidParameter, "grid needs >= 2 points");
  if (!(ratio > 0.0 && ratio < 1.0)) {
    raise(ErrorKind::InvalidParameter, "grid ratio must lie in (0,1)");
  }
  const double top = theta_max(x, gamma);
  if (top <= 0.0) {
    raise(ErrorKind::InvalidParameter,
          "theta_max is zero, the penalty has no effect at any level");
  }
  std::vector<double> grid(static_cast<std::size_t>(count));
  const double step = std::log(ratio) / static_cast<double>(count - 1);
  for (int t = 0; t < count; ++t) {
    grid[static_cast<std::size_t>(t)] = top * std::exp(step * t);
  }
  return grid;
}

double gcv_df(const Fit& fit, Index p) {
  if (fit.b.rows() != p || fit.b.cols() != p) {
    raise(ErrorKind::DimensionMismatch, "fit dimension disagrees with p");
  }
  if (fit.gamma == 1.0) {
    return static_cast<double>((fit.b.array() != 0.0).count());
  }
  const double group_cut =
      fit.theta * (1.0 - fit.gamma) * std::sqrt(static_cast<double>(p - 1));
  const bool scaled = fit.col_sq.size() == p;
  double df = 0.0;
  for (Index i = 0; i < p; ++i) {
    const double l2 = fit.row_l2[i];
    if (l2 == 0.0) continue;
    // Threshold on the coefficient scale of row i; the row minimizer divides
    // by ||X_.i||^2, so the shrink ratio has to compare like with like.
    const double cut = scaled ? group_cut / fit.col_sq[i] : group_cut;
    const auto nnz =
        static_cast<double>((fit.b.row(i).array() != 0.0).count());
    df += l2 / (l2 + cut) * nnz;
  }
  return df;
}

double gcv_score(const Matrix& x, const Fit& fit) {
  const Index n = x.rows();
  const Index p = x.cols();
  const double df = gcv_df(fit, p);
  const double np = static_cast<double>(n) * static_cast<double>(p);
  if (df >= np) {
    raise(ErrorKind::DegenerateDf,
          "effective df " + std::to_string(df) + " >= n*p");
  }
  Matrix resid = x;
  resid.noalias() -= x * fit.b;
  return resid.squaredNorm() / (np - df);
}

void for_each_theta(const Matrix& x, double gamma,
                    const std::vector<double>& grid, const Config& base,
                    const std::function<void(Index, const Fit&)>& visit) {
  if (grid.empty()) raise(ErrorKind::InvalidParameter, "empty theta grid");
  for (std::size_t t = 1; t < grid.size(); ++t) {
    if (!(grid[t] <= grid[t - 1])) {
      raise(ErrorKind::InvalidParameter, "theta grid must be non-increasing");
    }
  }
  const Workspace ws = make_workspace(x);
  Matrix b = Matrix::Zero(x.cols(), x.cols());
  Config cfg = base;
  for (std::size_t t = 0; t < grid.size(); ++t) {
    cfg.theta = grid[t];
    cfg.gamma = gamma;
    // Warm start: b carries the previous grid point's solution.
    const Fit f = fit_continue(x, b, cfg, ws);
    visit(static_cast<Index>(t), f);
  }
}

namespace {

ThetaSelection pick_best(std::vector<double> grid, std::vector<double> scores,
                         ThetaMethod method) {
  Index best = -1;
  for (std::size_t t = 0; t < scores.size(); ++t) {
    // Strict < on a descending grid breaks ties toward the larger theta.
    if (std::isfinite(scores[t]) &&
        (best < 0 || scores[t] < scores[static_cast<std::size_t>(best)])) {
      best = static_cast<Index>(t);
    }
  }
  if (best < 0) {
    raise(ErrorKind::DegenerateDf,
          "every theta on the grid had degenerate degrees of freedom");
  }
  ThetaSelection sel;
  sel.chosen_theta = grid[static_cast<std::size_t>(best)];
  sel.grid = std::move(grid);
  sel.scores = std::move(scores);
  sel.method = method;
  return sel;
}

}  // namespace

ThetaSelection select_theta_gcv(const Matrix& x, double gamma,
                                const std::vector<double>& grid,
                                const Config& base) {
  std::vector<double> g =
      grid.empty() ? default_theta_grid(x, gamma) : grid;
  std::vector<double> scores(g.size(), kInf);
  for_each_theta(x, gamma, g, base, [&](Index t, const Fit& f) {
    try {
      scores[static_cast<std::size_t>(t)] = gcv_score(x, f);
    } catch (const Error& e) {
      // Small-theta fits on wide data routinely blow past np degrees of
      // freedom; those grid points are uninformative, not fatal.
      if (e.kind() != ErrorKind::DegenerateDf) throw;
    }
  });
  return pick_best(std::move(g), std::move(scores), ThetaMethod::gcv);
}

ThetaSelection select_theta_kfold(const Matrix& x, double gamma, int k,
                                  Seed fold_seed,
                                  const std::vector<double>& grid,
                                  const Config& base) {
  const Index n = x.rows();
  if (k < 2 || k > n) {
    raise(ErrorKind::InvalidParameter, "k must lie in [2, n]");
  }
  std::vector<double> g =
      grid.empty() ? default_theta_grid(x, gamma) : grid;

  // Seeded shuffle then round-robin: fold sizes differ by at most one.
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(fold_seed);
  rng.shuffle(order);

  std::vector<double> scores(g.size(), 0.0);
  for (int fold = 0; fold < k; ++fold) {
    std::vector<Index> train_rows;
    std::vector<Index> val_rows;
    for (std::size_t t = 0; t < order.size(); ++t) {
      (static_cast<int>(t % static_cast<std::size_t>(k)) == fold ? val_rows
                                                                 : train_rows)
          .push_back(order[t]);
    }
    Matrix x_train(static_cast<Index>(train_rows.size()), x.cols());
    for (std::size_t r = 0; r < train_rows.size(); ++r) {
      x_train.row(static_cast<Index>(r)) = x.row(train_rows[r]);
    }
    Matrix x_val(static_cast<Index>(val_rows.size()), x.cols());
    for (std::size_t r = 0; r < val_rows.size(); ++r) {
      x_val.row(static_cast<Index>(r)) = x.row(val_rows[r]);
    }
    for_each_theta(x_train, gamma, g, base, [&](Index t, const Fit& f) {
      Matrix resid = x_val;
      resid.noalias() -= x_val * f.b;
      scores[static_cast<std::size_t>(t)] += 0.5 * resid.squaredNorm();
    });
  }
  return pick_best(std::move(g), std::move(scores), ThetaMethod::kfold);
}

namespace {

HubWeights weights_from_sums(Vector s) {
  HubWeights hw;
  hw.s = std::move(s);
  hw.w = Vector(hw.s.size());
  for (Index j = 0; j < hw.s.size(); ++j) {
    hw.w[j] = hw.s[j] == 0.0 ? kInf : 1.0 / hw.s[j];
  }
  return hw;
}

}  // namespace

HubWeights hub_weights(const Fit& fit) {
  return weights_from_sums(fit.row_abs_sums);
}

HubWeights hub_weights(const Fit& fit, const Vector& column_sds) {
  const Index p = fit.b.rows();
  if (column_sds.size() != p) {
    raise(ErrorKind::DimensionMismatch,
          "column_sds must have one entry per feature");
  }
  Vector s = Vector::Zero(p);
  for (Index i = 0; i < p; ++i) {
    double sum = 0.0;
    for (Index j = 0; j < p; ++j) {
      const double sd = column_sds[j];
      sum += std::abs(fit.b(i, j)) * (sd == 0.0 ? 1.0 : sd);
    }
    const double own = column_sds[i];
    s[i] = own == 0.0 ? sum : sum / own;
  }
  return weights_from_sums(std::move(s));
}

nlohmann::json to_json(const Fit& fit, bool include_b) {
  nlohmann::json j{
      {"theta", fit.theta},
      {"gamma", fit.gamma},
      {"objective", fit.objective},
      {"sweeps_used", fit.sweeps_used},
      {"converged", fit.converged},
      {"row_abs_sums", std::vector<double>(
                           fit.row_abs_sums.data(),
                           fit.row_abs_sums.data() + fit.row_abs_sums.size())},
      {"row_l2", std::vector<double>(fit.row_l2.data(),
                                     fit.row_l2.data() + fit.row_l2.size())},
  };
  if (include_b) {
    auto rows = nlohmann::json::array();
    for (Index i = 0; i < fit.b.rows(); ++i) {
      rows.push_back(std::vector<double>(
          fit.b.row(i).begin(), fit.b.row(i).end()));
    }
    j["b"] = std::move(rows);
  }
  return j;
}

}  // namespace edgeout
}  // namespace hubnet
