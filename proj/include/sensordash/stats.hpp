#pragma once

#include <span>
#include <stdexcept>

namespace sensordash::stats {

class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// I_x(a, b), evaluated with the Lentz continued fraction. a, b > 0, x in [0, 1].
[[nodiscard]] double regularized_incomplete_beta(double a, double b, double x);

/// P(F > f) for an F(d1, d2) variate.
[[nodiscard]] double f_survival(double f, double d1, double d2);

/// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
[[nodiscard]] double t_two_tailed_p(double t, double df);

[[nodiscard]] double mean(std::span<const double> xs);
/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
[[nodiscard]] double sample_sd(std::span<const double> xs);
[[nodiscard]] double sample_variance(std::span<const double> xs);

}  // namespace sensordash::stats
