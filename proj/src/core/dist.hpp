#pragma once

namespace amf::dist {

// Regularized incomplete beta function I_x(a, b).
double ibeta(double a, double b, double x);

// Student-t survival function P(T > t) with df degrees of freedom.
double student_t_sf(double t, double df);
inline double student_t_cdf(double t, double df) { return 1.0 - student_t_sf(t, df); }

// Two-sided p-value for a t statistic.
double student_t_two_sided_p(double t, double df);

// F distribution survival function P(F > f) with (df1, df2).
double f_sf(double f, double df1, double df2);

double normal_cdf(double z);

}  // namespace amf::dist
