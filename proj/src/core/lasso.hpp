#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace amf::lasso {

// Minimizes (1/2n)||y - a*1 - X b||^2 + lambda * sum_j w_j |b_j| with an
// unpenalized intercept. Predictors are standardized to unit (1/n) variance
// internally; coefficients are reported on the original scale. A penalty
// weight of 0 exempts a column (used to force the market factor in).

struct SolverOptions {
  double tol = 1e-7;       // max |coefficient change| per sweep, standardized
  int max_sweeps = 100000;
};

struct FitResult {
  Eigen::VectorXd beta;      // original scale
  double intercept = 0.0;
  Eigen::VectorXd beta_std;  // standardized scale (support/KKT live here)
  int sweeps = 0;
};

FitResult lasso_fit(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, double lambda,
                    const std::vector<double>& penalty_weights = {},
                    const SolverOptions& options = {});

struct GridSpec {
  int length = 100;
  double min_ratio = 1e-3;  // lambda_min / lambda_max
};

struct LassoPath {
  Eigen::VectorXd lambdas;     // descending
  Eigen::MatrixXd coefs;       // p x L, original scale
  Eigen::MatrixXd coefs_std;   // p x L, standardized scale
  Eigen::VectorXd intercepts;  // length L
  std::vector<int> support_sizes;          // penalized nonzeros per lambda
  std::vector<int> monotonicity_violations;  // grid indices where support shrank
};

// Warm-started descent from lambda_max down; every solution KKT-certified.
LassoPath lasso_path(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                     const GridSpec& grid = {},
                     const std::vector<double>& penalty_weights = {},
                     const SolverOptions& options = {});

struct CvCurve {
  Eigen::VectorXd lambdas;
  Eigen::VectorXd mean_cv_error;  // mean over folds of per-fold MSE
  Eigen::VectorXd se_cv_error;    // sd over folds / sqrt(folds)
  double lambda_min = 0.0;
  double lambda_1se = 0.0;
  int index_min = 0;
  int index_1se = 0;
};

// Seeded random fold assignment; per-fold refits reuse the path's grid.
CvCurve cross_validate(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                       const LassoPath& path, int folds, uint64_t seed,
                       const std::vector<double>& penalty_weights = {},
                       const SolverOptions& options = {});

struct LambdaChoice {
  double lambda = 0.0;
  int index = 0;  // grid index
};

// lambda* = max{ lambda_1se, min{ lambda on grid : #supp <= cap } }, nudged
// up the grid if discrete-grid support wiggles put it above the cap.
LambdaChoice gibs_lambda(const LassoPath& path, const CvCurve& cv, int cap = 20);

// KKT certificate on the standardized scale (inactive |g| <= lambda + 1e-6;
// active g = lambda * sign(b) within 1e-4). Numeric error when violated.
void kkt_certify(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, double lambda,
                 const Eigen::VectorXd& beta_std,
                 const std::vector<double>& penalty_weights = {});

// Nonzeros (|b| > 1e-9 on the standardized scale) among penalized columns.
int penalized_support_size(const Eigen::VectorXd& beta_std,
                           const std::vector<double>& penalty_weights);

constexpr double kSupportEps = 1e-9;

}  // namespace amf::lasso
