#include "core/lasso.hpp"

#include <cmath>
#include <limits>

#include "core/common.hpp"
#include "core/rng.hpp"

namespace amf::lasso {

namespace {

struct Standardized {
  Eigen::MatrixXd x;        // centered, unit (1/n) variance columns
  Eigen::VectorXd y;        // centered
  Eigen::VectorXd x_mean;
  Eigen::VectorXd x_scale;  // sd with 1/n denominator
  double y_mean = 0.0;
};

Standardized standardize(const Eigen::VectorXd& y, const Eigen::MatrixXd& x) {
  const Eigen::Index n = x.rows();
  if (y.size() != n) raise(ErrorKind::InvalidArgument, "lasso: X rows must match y length");
  if (x.cols() < 1) raise(ErrorKind::InvalidArgument, "lasso: X needs at least one column");
  if (n < 2) raise(ErrorKind::InvalidArgument, "lasso: need at least 2 observations");

  Standardized s;
  s.y_mean = y.mean();
  s.y = y.array() - s.y_mean;
  s.x_mean = x.colwise().mean();
  s.x = x.rowwise() - s.x_mean.transpose();
  s.x_scale.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    double var = s.x.col(j).squaredNorm() / static_cast<double>(n);
    double scale = std::sqrt(var);
    if (!(scale > 1e-13 * (1.0 + std::abs(s.x_mean(j))))) {
      raise(ErrorKind::Numeric,
            "lasso: column " + std::to_string(j) + " has zero variance; cannot standardize");
    }
    s.x_scale(j) = scale;
    s.x.col(j) /= scale;
  }
  return s;
}

double soft_threshold(double z, double threshold) {
  if (z > threshold) return z - threshold;
  if (z < -threshold) return z + threshold;
  return 0.0;
}

std::vector<double> resolve_weights(const std::vector<double>& weights, Eigen::Index p) {
  if (weights.empty()) return std::vector<double>(static_cast<size_t>(p), 1.0);
  if (static_cast<Eigen::Index>(weights.size()) != p) {
    raise(ErrorKind::InvalidArgument, "lasso: penalty weight count must match columns");
  }
  for (double w : weights) {
    if (w < 0.0) raise(ErrorKind::InvalidArgument, "lasso: penalty weights must be >= 0");
  }
  return weights;
}

// Cyclic coordinate descent on standardized data; b is updated in place and
// the residual r = y~ - X~ b is maintained across sweeps.
int descend(const Standardized& s, double lambda, const std::vector<double>& w,
            const SolverOptions& options, Eigen::VectorXd& b, Eigen::VectorXd& r,
            int lambda_index) {
  const double n = static_cast<double>(s.x.rows());
  for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
    double max_delta = 0.0;
    for (Eigen::Index j = 0; j < s.x.cols(); ++j) {
      double old = b(j);
      double z = s.x.col(j).dot(r) / n + old;  // ||x~_j||^2/n == 1
      double updated = soft_threshold(z, lambda * w[static_cast<size_t>(j)]);
      if (updated != old) {
        r += s.x.col(j) * (old - updated);
        b(j) = updated;
        max_delta = std::max(max_delta, std::abs(updated - old));
      }
    }
    if (max_delta < options.tol) return sweep;
  }
  raise(ErrorKind::Numeric, "lasso: coordinate descent did not converge at lambda index " +
                                std::to_string(lambda_index));
}

void kkt_certify_standardized(const Standardized& s, double lambda,
                              const Eigen::VectorXd& b, const std::vector<double>& w) {
  const double n = static_cast<double>(s.x.rows());
  Eigen::VectorXd r = s.y - s.x * b;
  for (Eigen::Index j = 0; j < s.x.cols(); ++j) {
    double g = s.x.col(j).dot(r) / n;
    double wl = lambda * w[static_cast<size_t>(j)];
    bool active = std::abs(b(j)) > kSupportEps;
    bool ok;
    if (w[static_cast<size_t>(j)] == 0.0) {
      ok = std::abs(g) <= 1e-6;
    } else if (active) {
      // Sign consistency is meaningless once lambda is below numerical dust.
      ok = std::abs(std::abs(g) - wl) <= 1e-4 && (wl <= 1e-6 || g * b(j) > 0.0);
    } else {
      ok = std::abs(g) <= wl + 1e-6;
    }
    if (!ok) {
      raise(ErrorKind::Numeric, "lasso: KKT violation at column " + std::to_string(j) +
                                    " (|gradient| = " + std::to_string(std::abs(g)) +
                                    ", lambda = " + std::to_string(wl) + ")");
    }
  }
}

FitResult package(const Standardized& s, const Eigen::VectorXd& b, int sweeps) {
  FitResult out;
  out.beta_std = b;
  out.beta = b.array() / s.x_scale.array();
  out.intercept = s.y_mean - out.beta.dot(s.x_mean);
  out.sweeps = sweeps;
  return out;
}

// Largest penalty that keeps every penalized coefficient at zero: fit the
// unpenalized columns alone, then take the max absolute gradient.
double lambda_max_for(const Standardized& s, const std::vector<double>& w,
                      const SolverOptions& options) {
  const double n = static_cast<double>(s.x.rows());
  Eigen::VectorXd b = Eigen::VectorXd::Zero(s.x.cols());
  Eigen::VectorXd r = s.y;
  bool any_free = false;
  for (double wj : w) any_free = any_free || wj == 0.0;
  if (any_free) {
    // Penalized coordinates have infinite penalty here: run descent with
    // only the free columns allowed to move.
    std::vector<double> frozen = w;
    for (double& wj : frozen) {
      if (wj > 0.0) wj = std::numeric_limits<double>::infinity();
    }
    descend(s, 1.0, frozen, options, b, r, -1);
  }
  double lam = 0.0;
  for (Eigen::Index j = 0; j < s.x.cols(); ++j) {
    if (w[static_cast<size_t>(j)] == 0.0) continue;
    lam = std::max(lam, std::abs(s.x.col(j).dot(r) / n) / w[static_cast<size_t>(j)]);
  }
  return std::max(lam, 1e-12);
}

}  // namespace

FitResult lasso_fit(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, double lambda,
                    const std::vector<double>& penalty_weights,
                    const SolverOptions& options) {
  if (lambda < 0.0) raise(ErrorKind::InvalidArgument, "lasso: lambda must be >= 0");
  Standardized s = standardize(y, x);
  std::vector<double> w = resolve_weights(penalty_weights, x.cols());
  Eigen::VectorXd b = Eigen::VectorXd::Zero(x.cols());
  Eigen::VectorXd r = s.y;
  int sweeps = descend(s, lambda, w, options, b, r, 0);
  kkt_certify_standardized(s, lambda, b, w);
  return package(s, b, sweeps);
}

LassoPath lasso_path(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                     const GridSpec& grid, const std::vector<double>& penalty_weights,
                     const SolverOptions& options) {
  if (grid.length < 1) raise(ErrorKind::InvalidArgument, "lasso: grid length must be >= 1");
  if (!(grid.min_ratio > 0.0) || grid.min_ratio > 1.0) {
    raise(ErrorKind::InvalidArgument, "lasso: grid min_ratio must be in (0, 1]");
  }
  Standardized s = standardize(y, x);
  std::vector<double> w = resolve_weights(penalty_weights, x.cols());
  double lam_max = lambda_max_for(s, w, options);

  LassoPath path;
  path.lambdas.resize(grid.length);
  for (int l = 0; l < grid.length; ++l) {
    double frac = grid.length == 1 ? 0.0 : static_cast<double>(l) / (grid.length - 1);
    path.lambdas(l) = lam_max * std::pow(grid.min_ratio, frac);
  }
  path.coefs.resize(x.cols(), grid.length);
  path.coefs_std.resize(x.cols(), grid.length);
  path.intercepts.resize(grid.length);
  path.support_sizes.resize(static_cast<size_t>(grid.length));

  Eigen::VectorXd b = Eigen::VectorXd::Zero(x.cols());
  Eigen::VectorXd r = s.y;
  for (int l = 0; l < grid.length; ++l) {
    descend(s, path.lambdas(l), w, options, b, r, l);
    kkt_certify_standardized(s, path.lambdas(l), b, w);
    FitResult fit = package(s, b, 0);
    path.coefs.col(l) = fit.beta;
    path.coefs_std.col(l) = b;
    path.intercepts(l) = fit.intercept;
    path.support_sizes[static_cast<size_t>(l)] = penalized_support_size(b, w);
    if (l > 0 && path.support_sizes[static_cast<size_t>(l)] <
                     path.support_sizes[static_cast<size_t>(l - 1)]) {
      path.monotonicity_violations.push_back(l);
    }
  }
  return path;
}

CvCurve cross_validate(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                       const LassoPath& path, int folds, uint64_t seed,
                       const std::vector<double>& penalty_weights,
                       const SolverOptions& options) {
  const int n = static_cast<int>(y.size());
  const int len = static_cast<int>(path.lambdas.size());
  if (folds < 2) raise(ErrorKind::InvalidArgument, "cross_validate: need >= 2 folds");
  if (n < 2 * folds) {
    raise(ErrorKind::InvalidArgument, "cross_validate: need n >= 2 * folds, got n = " +
                                          std::to_string(n));
  }
  std::vector<double> w = resolve_weights(penalty_weights, x.cols());

  std::vector<int> assignment(static_cast<size_t>(n));
  {
    std::vector<int> order(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
    Rng rng(seed);
    rng.shuffle(order);
    for (int i = 0; i < n; ++i) assignment[static_cast<size_t>(order[static_cast<size_t>(i)])] = i % folds;
  }

  Eigen::MatrixXd fold_mse = Eigen::MatrixXd::Zero(folds, len);
  for (int f = 0; f < folds; ++f) {
    std::vector<int> train, test;
    for (int i = 0; i < n; ++i) {
      (assignment[static_cast<size_t>(i)] == f ? test : train).push_back(i);
    }
    if (test.size() < 2) {
      raise(ErrorKind::InvalidArgument, "cross_validate: fold " + std::to_string(f) +
                                            " has fewer than 2 observations");
    }
    Eigen::VectorXd y_tr(train.size());
    Eigen::MatrixXd x_tr(train.size(), x.cols());
    for (size_t i = 0; i < train.size(); ++i) {
      y_tr(static_cast<Eigen::Index>(i)) = y(train[i]);
      x_tr.row(static_cast<Eigen::Index>(i)) = x.row(train[i]);
    }
    Standardized s = standardize(y_tr, x_tr);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(x.cols());
    Eigen::VectorXd r = s.y;
    for (int l = 0; l < len; ++l) {
      descend(s, path.lambdas(l), w, options, b, r, l);
      FitResult fit = package(s, b, 0);
      double sse = 0.0;
      for (int i : test) {
        double pred = fit.intercept + x.row(i).dot(fit.beta);
        double err = y(i) - pred;
        sse += err * err;
      }
      fold_mse(f, l) = sse / static_cast<double>(test.size());
    }
  }

  CvCurve cv;
  cv.lambdas = path.lambdas;
  cv.mean_cv_error = fold_mse.colwise().mean().transpose();
  cv.se_cv_error.resize(len);
  for (int l = 0; l < len; ++l) {
    double mean = cv.mean_cv_error(l);
    double ss = (fold_mse.col(l).array() - mean).square().sum();
    double sd = folds > 1 ? std::sqrt(ss / (folds - 1)) : 0.0;
    cv.se_cv_error(l) = sd / std::sqrt(static_cast<double>(folds));
  }
  cv.index_min = 0;
  for (int l = 1; l < len; ++l) {
    if (cv.mean_cv_error(l) < cv.mean_cv_error(cv.index_min)) cv.index_min = l;
  }
  cv.lambda_min = cv.lambdas(cv.index_min);
  double bound = cv.mean_cv_error(cv.index_min) + cv.se_cv_error(cv.index_min);
  cv.index_1se = cv.index_min;
  for (int l = 0; l <= cv.index_min; ++l) {  // grid is descending
    if (cv.mean_cv_error(l) <= bound) {
      cv.index_1se = l;
      break;
    }
  }
  cv.lambda_1se = cv.lambdas(cv.index_1se);
  return cv;
}

LambdaChoice gibs_lambda(const LassoPath& path, const CvCurve& cv, int cap) {
  const int len = static_cast<int>(path.lambdas.size());
  if (cv.lambdas.size() != len || !path.lambdas.isApprox(cv.lambdas)) {
    raise(ErrorKind::InvalidArgument, "gibs_lambda: path and CV grids differ");
  }
  if (cap < 0) raise(ErrorKind::InvalidArgument, "gibs_lambda: cap must be >= 0");

  // Smallest grid lambda whose support fits the cap. Support is zero at
  // lambda_max, so a candidate always exists.
  int idx_cap = -1;
  for (int l = len - 1; l >= 0; --l) {
    if (path.support_sizes[static_cast<size_t>(l)] <= cap) {
      idx_cap = l;
      break;
    }
  }
  if (idx_cap < 0) {
    raise(ErrorKind::Numeric, "gibs_lambda: no grid point satisfies the support cap");
  }

  // max(lambda_1se, lambda_cap) on a descending grid = the smaller index.
  int idx = std::min(cv.index_1se, idx_cap);
  // Discrete-grid support wiggles can leave the max above the cap; walk
  // toward lambda_max until it fits.
  while (idx > 0 && path.support_sizes[static_cast<size_t>(idx)] > cap) --idx;
  if (path.support_sizes[static_cast<size_t>(idx)] > cap) {
    raise(ErrorKind::Numeric, "gibs_lambda: support exceeds cap at lambda_max");
  }
  return LambdaChoice{path.lambdas(idx), idx};
}

void kkt_certify(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, double lambda,
                 const Eigen::VectorXd& beta_std,
                 const std::vector<double>& penalty_weights) {
  Standardized s = standardize(y, x);
  std::vector<double> w = resolve_weights(penalty_weights, x.cols());
  kkt_certify_standardized(s, lambda, beta_std, w);
}

int penalized_support_size(const Eigen::VectorXd& beta_std,
                           const std::vector<double>& penalty_weights) {
  int count = 0;
  for (Eigen::Index j = 0; j < beta_std.size(); ++j) {
    bool penalized = penalty_weights.empty() || penalty_weights[static_cast<size_t>(j)] > 0.0;
    if (penalized && std::abs(beta_std(j)) > kSupportEps) ++count;
  }
  return count;
}

}  // namespace amf::lasso
