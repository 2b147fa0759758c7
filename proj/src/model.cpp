#include "edgeld/model.hpp"

#include "edgeld/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace edgeld {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

PotentialSpec::PotentialSpec(double kappa, double alpha, Function perturbation,
                             Function perturbation_derivative)
  : kappa_(kappa), alpha_(alpha), perturbation_(std::move(perturbation)),
    perturbation_derivative_(std::move(perturbation_derivative))
{
    if (!(kappa > 0.0) || !std::isfinite(kappa))
        throw PreconditionError("potential: kappa must be a finite positive number");
    if (!(alpha >= 1.0) || !std::isfinite(alpha))
        throw PreconditionError("potential: alpha must be >= 1");
}

double PotentialSpec::value(double x) const
{
    double v = kappa_ * std::pow(std::abs(x), alpha_);
    if (perturbation_)
        v += perturbation_(x);
    return v;
}

double PotentialSpec::gradient(double x) const
{
    double g = 0.0;
    if (x != 0.0)
        g = kappa_ * alpha_ * std::copysign(std::pow(std::abs(x), alpha_ - 1.0), x);
    if (perturbation_derivative_)
        g += perturbation_derivative_(x);
    return g;
}

double PotentialSpec::typical_max(double n) const
{
    if (!(n > 1.0))
        throw PreconditionError("typical_max: n must exceed 1");
    return std::pow(std::log(n) / kappa_, 1.0 / alpha_);
}

double potential_eval(const PotentialSpec& spec, double x) { return spec.value(x); }
double potential_grad(const PotentialSpec& spec, double x) { return spec.gradient(x); }

InteractionKind InteractionKind::riesz(double s)
{
    if (!(s > 0.0 && s < 1.0))
        throw PreconditionError("interaction: Riesz exponent s must lie in (0,1)");
    return InteractionKind(Type::Riesz, s);
}

std::string InteractionKind::name() const { return is_log() ? "log" : "riesz"; }

double interaction_eval(const InteractionKind& kind, double r)
{
    const double a = std::abs(r);
    if (a == 0.0)
        return kInf;
    return kind.is_log() ? -std::log(a) : std::pow(a, -kind.s());
}

GasParameters GasParameters::high_temperature(std::size_t n, double pressure, InteractionKind interaction,
                                              PotentialSpec potential)
{
    if (n == 0)
        throw PreconditionError("gas parameters: n must be positive");
    GasParameters p{n, pressure, 2.0 * pressure / static_cast<double>(n), interaction, std::move(potential)};
    p.validate();
    return p;
}

void GasParameters::validate() const
{
    if (n == 0)
        throw PreconditionError("gas parameters: n must be positive");
    if (!(pressure >= 0.0) || !std::isfinite(pressure))
        throw PreconditionError("gas parameters: pressure must be finite and >= 0");
    if (!(beta >= 0.0) || !std::isfinite(beta))
        throw PreconditionError("gas parameters: beta must be finite and >= 0");
}

ParticleConfiguration::ParticleConfiguration(std::vector<double> positions) : positions_(std::move(positions))
{
    std::sort(positions_.begin(), positions_.end());
}

double ParticleConfiguration::x_max() const
{
    if (positions_.empty())
        throw PreconditionError("x_max of an empty configuration");
    return positions_.back();
}

double configuration_energy(const GasParameters& params, std::span<const double> x)
{
    if (x.size() != params.n)
        throw PreconditionError("configuration_energy: configuration has " + std::to_string(x.size()) +
                                " particles, parameters expect " + std::to_string(params.n));
    double confinement = 0.0;
    for (double xi : x)
        confinement += params.potential.value(xi);

    double pair = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            if (x[i] == x[j])
                return kInf;
            pair += interaction_eval(params.interaction, x[i] - x[j]);
        }
    if (params.beta == 0.0)
        return confinement;
    return params.beta * pair + confinement;
}

double configuration_energy(const GasParameters& params, const ParticleConfiguration& config)
{
    return configuration_energy(params, config.positions());
}

double rate_function(double alpha, double x)
{
    if (x < 1.0)
        return kInf;
    return std::pow(x, alpha) - 1.0;
}

} // namespace edgeld
