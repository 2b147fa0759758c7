#include "edgeld/stats.hpp"

#include "edgeld/error.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>

namespace edgeld {

double normal_quantile_two_sided(double confidence)
{
    if (!(confidence > 0.0 && confidence < 1.0))
        throw PreconditionError("confidence level must lie in (0,1)");
    const boost::math::normal_distribution<double> standard;
    return boost::math::quantile(boost::math::complement(standard, 0.5 * (1.0 - confidence)));
}

Interval wilson_interval(std::size_t successes, std::size_t trials, double confidence)
{
    if (trials == 0)
        throw PreconditionError("wilson_interval: no trials");
    if (successes > trials)
        throw PreconditionError("wilson_interval: more successes than trials");
    const double z = normal_quantile_two_sided(confidence);
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
    Interval iv{std::max(0.0, centre - half), std::min(1.0, centre + half)};
    // Guard against rounding pushing the point estimate outside.
    iv.lo = std::min(iv.lo, p);
    iv.hi = std::max(iv.hi, p);
    return iv;
}

double kolmogorov_pvalue(double d, std::size_t samples)
{
    if (samples == 0)
        throw PreconditionError("kolmogorov_pvalue: no samples");
    const double sn = std::sqrt(static_cast<double>(samples));
    const double lambda = (sn + 0.12 + 0.11 / sn) * d;
    if (lambda < 1e-3)
        return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 200; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-300)
            break;
    }
    return std::clamp(sum, 0.0, 1.0);
}

double chi_square_sf(double statistic, double dof)
{
    if (!(dof > 0.0))
        throw PreconditionError("chi_square_sf: dof must be positive");
    if (statistic <= 0.0)
        return 1.0;
    const boost::math::chi_squared_distribution<double> dist(dof);
    return boost::math::cdf(boost::math::complement(dist, statistic));
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y, std::span<const double> weights)
{
    if (x.size() != y.size() || (!weights.empty() && weights.size() != x.size()))
        throw PreconditionError("linear_fit: mismatched input lengths");
    if (x.size() < 2)
        throw PreconditionError("linear_fit: need at least two points");
    const bool weighted = !weights.empty();
    double sw = 0, sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double w = weighted ? weights[i] : 1.0;
        sw += w;
        sx += w * x[i];
        sy += w * y[i];
    }
    const double mx = sx / sw, my = sy / sw;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double w = weighted ? weights[i] : 1.0;
        sxx += w * (x[i] - mx) * (x[i] - mx);
        sxy += w * (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0))
        throw PreconditionError("linear_fit: abscissae are all equal");
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.points = x.size();
    if (weighted) {
        fit.slope_stderr = std::sqrt(1.0 / sxx);
    } else if (x.size() > 2) {
        double rss = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - fit.intercept - fit.slope * x[i];
            rss += r * r;
        }
        fit.slope_stderr = std::sqrt(rss / static_cast<double>(x.size() - 2) / sxx);
    }
    return fit;
}

} // namespace edgeld
