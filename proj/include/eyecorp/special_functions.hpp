#pragma once

namespace eyecorp {

/// I_x(a, b), the regularized incomplete beta function, by continued
/// fraction (modified Lentz). Relative accuracy ~1e-14 away from
/// underflow.
double incomplete_beta(double a, double b, double x);

/// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
double student_t_two_sided_p(double t, double df);

/// P(T <= t) for Student's t.
double student_t_cdf(double t, double df);

/// t such that P(T <= t) = prob, by bisection on the cdf.
double student_t_quantile(double prob, double df);

/// P(F >= f) for the F distribution with (d1, d2) degrees of freedom.
double f_upper_tail(double f, double d1, double d2);

}  // namespace eyecorp
