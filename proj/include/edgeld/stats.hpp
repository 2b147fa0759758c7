#pragma once

#include <cstddef>
#include <span>

namespace edgeld {

struct Interval
{
    double lo;
    double hi;
};

// Two-sided standard normal quantile for a confidence level in (0,1), e.g. 0.99 -> 2.5758.
double normal_quantile_two_sided(double confidence);

// Wilson score interval for `successes` out of `trials`.
Interval wilson_interval(std::size_t successes, std::size_t trials, double confidence = 0.99);

// Asymptotic p-value of the one-sample Kolmogorov-Smirnov statistic, with the
// Stephens (1970) small-sample correction.
double kolmogorov_pvalue(double d_statistic, std::size_t samples);

// Upper tail of the chi-square distribution.
double chi_square_sf(double statistic, double dof);

struct LinearFit
{
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    std::size_t points = 0;
};

// Weighted least squares y ~ intercept + slope * x. Empty weights mean unit weights,
// in which case the slope error comes from the residual variance; otherwise weights
// are inverse variances and the error is the model-based one.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y, std::span<const double> weights = {});

} // namespace edgeld
