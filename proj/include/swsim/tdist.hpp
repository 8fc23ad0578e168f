#pragma once

namespace swsim {

/// log B(a, b), accurate when one argument is large and the other small.
double log_beta(double a, double b);

/// I_x(a, b) via its continued fraction, relative accuracy ~1e-13.
double regularized_incomplete_beta(double a, double b, double x);

/// P(T <= t) for Student's t with `df` degrees of freedom (df may be +inf).
double student_t_cdf(double t, double df);

/// P(|T| >= |t|).
double student_t_two_sided_p(double t, double df);

}  // namespace swsim
