#pragma once

#include <Eigen/Dense>
#include <vector>

namespace amf::linreg {

struct OlsFit {
  bool with_intercept = true;
  double alpha = 0.0;  // 0 when fit without intercept
  double alpha_se = 0.0;
  double alpha_t = 0.0;
  double alpha_p = 1.0;
  Eigen::VectorXd betas;
  Eigen::VectorXd std_errs;
  Eigen::VectorXd t_stats;
  Eigen::VectorXd p_values;  // two-sided
  Eigen::VectorXd residuals;
  Eigen::VectorXd fitted;
  double sigma2 = 0.0;  // RSS / df
  double rss = 0.0;
  double r2 = 0.0;
  double adj_r2 = 0.0;
  int n = 0;
  int k = 0;  // regressors excluding the intercept
  int df = 0; // residual degrees of freedom
};

// Least squares via column-pivoted QR; pivots below 1e-10 x the largest are
// treated as zero and rank deficiency is an error naming the dependent
// column. Requires n > k (+1 with intercept).
OlsFit ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, bool with_intercept = true);

// { j : p_value(beta_j) < level }, ascending.
std::vector<int> significant_set(const OlsFit& fit, double level = 0.05);

// Removes each non-market column's component along the market column:
// x~_i = (I - P_market) x_i; the market column itself is kept unchanged.
Eigen::MatrixXd project_out_market(const Eigen::MatrixXd& x, int market_col);

struct AnovaResult {
  int res_df_1 = 0;
  int res_df_2 = 0;
  double rss_1 = 0.0;
  double rss_2 = 0.0;
  int df_diff = 0;
  double sum_sq_diff = 0.0;
  double f_stat = 0.0;
  double p_value = 1.0;
};

// F test of nested least-squares models fit exactly on the designs given
// (callers add an intercept column if they want one). Every column of the
// restricted design must appear in the full design.
AnovaResult anova_nested(const Eigen::VectorXd& y, const Eigen::MatrixXd& x_restricted,
                         const Eigen::MatrixXd& x_full);

}  // namespace amf::linreg
