#include "edgeld/sampling.hpp"

#include "edgeld/error.hpp"
#include "edgeld/io.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

namespace edgeld {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double sample_chi(double theta, RngStream& rng)
{
    if (!(theta > 0.0) || !std::isfinite(theta))
        throw PreconditionError("sample_chi: theta must be a finite positive number");
    // Working with log G keeps tiny shapes from underflowing to an exact zero.
    return std::exp(0.5 * (std::log(2.0) + rng.log_gamma_variate(0.5 * theta)));
}

double chi_density(double theta, double x)
{
    if (!(theta > 0.0))
        throw PreconditionError("chi_density: theta must be positive");
    if (!(x > 0.0))
        return 0.0;
    return std::exp((1.0 - 0.5 * theta) * std::log(2.0) - std::lgamma(0.5 * theta) + (theta - 1.0) * std::log(x) -
                    0.5 * x * x);
}

TridiagonalMatrix build_dumitriu_edelman(std::size_t n, double beta, RngStream& rng, OffdiagConvention convention)
{
    if (n == 0)
        throw PreconditionError("build_dumitriu_edelman: n must be at least 1");
    if (!(beta >= 0.0) || !std::isfinite(beta))
        throw PreconditionError("build_dumitriu_edelman: beta must be finite and nonnegative");
    const double scale = convention == OffdiagConvention::Scaled ? 1.0 / std::sqrt(2.0) : 1.0;
    std::vector<double> a(n), b(n - 1);
    for (auto& x : a)
        x = rng.normal();
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double theta = beta * static_cast<double>(n - i - 1);
        b[i] = theta > 0.0 ? scale * sample_chi(theta, rng) : 0.0;
    }
    return TridiagonalMatrix(std::move(a), std::move(b), false);
}

TridiagonalMatrix build_toda_lax(std::size_t n, double pressure, RngStream& rng)
{
    if (n < 2)
        throw PreconditionError("build_toda_lax: n must be at least 2");
    if (!(pressure > 0.0) || !std::isfinite(pressure))
        throw PreconditionError("build_toda_lax: pressure must be finite and positive");
    const double scale = 1.0 / std::sqrt(2.0);
    std::vector<double> a(n), b(n);
    for (auto& x : a)
        x = rng.normal();
    for (auto& x : b)
        x = scale * sample_chi(2.0 * pressure, rng);
    return TridiagonalMatrix(std::move(a), std::move(b), true);
}

EntryDistribution::EntryDistribution(std::string name, Sampler sampler, double tail_constant)
  : name_(std::move(name)), sampler_(std::move(sampler)), tail_constant_(tail_constant)
{
    if (!sampler_)
        throw PreconditionError("EntryDistribution: empty sampler");
    if (!(tail_constant > 0.0))
        throw PreconditionError("EntryDistribution: tail constant must be positive");
}

EntryDistribution EntryDistribution::standard_gaussian()
{
    return EntryDistribution("standard_gaussian", [](RngStream& rng) { return rng.normal(); }, 0.5);
}

EntryDistribution EntryDistribution::chi_scaled(double theta, double scale)
{
    if (!(theta > 0.0) || !(scale > 0.0))
        throw PreconditionError("chi_scaled: theta and scale must be positive");
    return EntryDistribution(
        "chi_scaled", [theta, scale](RngStream& rng) { return scale * sample_chi(theta, rng); },
        1.0 / (2.0 * scale * scale));
}

EntryDistribution EntryDistribution::custom(std::string name, Sampler sampler, double tail_constant)
{
    return EntryDistribution(std::move(name), std::move(sampler), tail_constant);
}

namespace {

void require_tail_constant(const EntryDistribution& dist, double expected, const char* role)
{
    if (std::abs(dist.tail_constant() - expected) > 1e-12 * expected)
        throw ConfigError(std::string(role) + " distribution '" + dist.name() + "' has tail constant " +
                          format_double(dist.tail_constant()) + ", the Gaussian-tail model requires " +
                          format_double(expected));
}

} // namespace

TridiagonalMatrix build_generic(std::size_t n, const EntryDistribution& diag_dist,
                                const EntryDistribution& offdiag_dist, bool periodic, RngStream& rng)
{
    if (n == 0 || (periodic && n < 2))
        throw PreconditionError("build_generic: matrix too small");
    require_tail_constant(diag_dist, 0.5, "diagonal");
    require_tail_constant(offdiag_dist, 1.0, "off-diagonal");
    std::vector<double> a(n), b(periodic ? n : n - 1);
    for (auto& x : a)
        x = diag_dist.sample(rng);
    for (auto& x : b)
        x = offdiag_dist.sample(rng);
    return TridiagonalMatrix(std::move(a), std::move(b), periodic);
}

double sample_iid_particle(const PotentialSpec& potential, RngStream& rng)
{
    if (potential.has_perturbation())
        throw PreconditionError("sample_iid_particle: perturbed potentials have no direct sampler");
    if (potential.alpha() == 2.0)
        return rng.normal() / std::sqrt(2.0 * potential.kappa());
    const double magnitude =
        std::exp((rng.log_gamma_variate(1.0 / potential.alpha()) - std::log(potential.kappa())) / potential.alpha());
    return rng.uniform() < 0.5 ? -magnitude : magnitude;
}

double metropolis_acceptance(double delta_energy)
{
    if (std::isnan(delta_energy) || delta_energy == kInf)
        return 0.0;
    if (delta_energy <= 0.0)
        return 1.0;
    return std::exp(-delta_energy);
}

namespace {

// Energy change when particle i moves from x[i] to y.
double single_site_delta(const GasParameters& params, const std::vector<double>& x, std::size_t i, double y)
{
    double delta = params.potential.value(y) - params.potential.value(x[i]);
    if (params.beta == 0.0)
        return delta;
    double pair = 0.0;
    if (params.interaction.is_log()) {
        for (std::size_t j = 0; j < x.size(); ++j) {
            if (j == i)
                continue;
            const double r_new = std::abs(y - x[j]);
            if (r_new == 0.0)
                return kInf;
            pair -= std::log(r_new / std::abs(x[i] - x[j]));
        }
    } else {
        const double s = params.interaction.s();
        for (std::size_t j = 0; j < x.size(); ++j) {
            if (j == i)
                continue;
            const double r_new = std::abs(y - x[j]);
            if (r_new == 0.0)
                return kInf;
            pair += std::pow(r_new, -s) - std::pow(std::abs(x[i] - x[j]), -s);
        }
    }
    return delta + params.beta * pair;
}

} // namespace

McmcResult mcmc_gas(const GasParameters& params, const ParticleConfiguration& init, RngStream& rng,
                    const McmcOptions& options)
{
    params.validate();
    if (init.size() != params.n)
        throw PreconditionError("mcmc_gas: initial configuration has " + std::to_string(init.size()) +
                                " particles, expected " + std::to_string(params.n));
    if (!std::isfinite(configuration_energy(params, init)))
        throw PreconditionError("mcmc_gas: initial configuration has infinite energy");
    if (!(options.step_size > 0.0))
        throw PreconditionError("mcmc_gas: step size must be positive");

    std::vector<double> x(init.positions().begin(), init.positions().end());
    const std::size_t n = x.size();
    double step = options.step_size;

    auto sweep = [&]() {
        std::size_t accepted = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double y = x[i] + step * rng.normal();
            const double delta = single_site_delta(params, x, i, y);
            const double p = metropolis_acceptance(delta);
            if (p >= 1.0 || rng.uniform() < p) {
                x[i] = y;
                ++accepted;
            }
        }
        return accepted;
    };

    const std::size_t burn_in =
        options.burn_in_sweeps < 0 ? 10 * n : static_cast<std::size_t>(options.burn_in_sweeps);
    constexpr std::size_t tune_window = 50;
    std::size_t window_accepted = 0, window_sweeps = 0;
    for (std::size_t s = 0; s < burn_in; ++s) {
        window_accepted += sweep();
        if (++window_sweeps == tune_window) {
            const double rate = static_cast<double>(window_accepted) / static_cast<double>(tune_window * n);
            step *= std::clamp(rate / options.target_acceptance, 0.5, 2.0);
            window_accepted = window_sweeps = 0;
        }
    }

    McmcResult result;
    std::size_t accepted = 0;
    for (std::size_t s = 0; s < options.sweeps; ++s) {
        accepted += sweep();
        if (options.observer)
            options.observer(s, x);
    }
    result.proposals = options.sweeps * n;
    result.acceptance_rate =
        result.proposals > 0 ? static_cast<double>(accepted) / static_cast<double>(result.proposals) : 0.0;
    result.step_size = step;
    if (result.proposals > 0 && (result.acceptance_rate <= 0.05 || result.acceptance_rate >= 0.95))
        result.warnings.push_back("acceptance rate " + format_double(result.acceptance_rate) +
                                  " outside (0.05, 0.95); step size needs tuning");
    result.final_configuration = ParticleConfiguration(std::move(x));
    return result;
}

IidTail::IidTail(PotentialSpec potential) : potential_(std::move(potential))
{
    const double right = log_tail_integral(0.0, 1.0);
    const double left = log_tail_integral(0.0, -1.0);
    const double hi = std::max(right, left);
    log_z_ = hi + std::log(std::exp(right - hi) + std::exp(left - hi));
}

double IidTail::log_tail_integral(double t, double sign) const
{
    thread_local boost::math::quadrature::exp_sinh<double> integrator;
    const double v0 = potential_.value(sign * t);
    auto f = [&](double w) { return std::exp(-(potential_.value(sign * (t + w)) - v0)); };
    double error = 0.0, l1 = 0.0;
    const double j = integrator.integrate(f, 0.0, kInf, 1e-14, &error, &l1);
    if (!(j > 0.0) || !std::isfinite(j) || error > 1e-10 * l1)
        throw ConvergenceError("tail quadrature failed at t = " + format_double(t), error);
    return -v0 + std::log(j);
}

double IidTail::density(double x) const { return std::exp(-potential_.value(x) - log_z_); }

double IidTail::log_survival(double t) const
{
    if (t == kInf)
        return -kInf;
    if (t == -kInf)
        return 0.0;
    if (t >= 0.0)
        return log_tail_integral(t, 1.0) - log_z_;
    return std::log1p(-std::exp(log_tail_integral(-t, -1.0) - log_z_));
}

double IidTail::log_cdf(double t) const
{
    if (t == kInf)
        return 0.0;
    if (t == -kInf)
        return -kInf;
    if (t <= 0.0)
        return log_tail_integral(-t, -1.0) - log_z_;
    return std::log1p(-std::exp(log_tail_integral(t, 1.0) - log_z_));
}

double iid_tail_exact(const IidTail& tail, std::size_t n, double t)
{
    return std::exp(static_cast<double>(n) * tail.log_cdf(t));
}

double iid_tail_exact(const PotentialSpec& potential, std::size_t n, double t)
{
    return iid_tail_exact(IidTail(potential), n, t);
}

double iid_exceedance_exact(const IidTail& tail, std::size_t n, double t)
{
    return -std::expm1(static_cast<double>(n) * tail.log_cdf(t));
}

std::string configuration_csv_text(const ParticleConfiguration& config)
{
    CsvWriter csv({"i", "x"});
    const auto x = config.positions();
    for (std::size_t i = 0; i < x.size(); ++i) {
        csv.cell(i + 1).cell(x[i]);
        csv.end_row();
    }
    return csv.text();
}

void write_configuration_csv(const ParticleConfiguration& config, const std::filesystem::path& path)
{
    write_file_atomic(path, configuration_csv_text(config));
}

ParticleConfiguration read_configuration_csv(const std::filesystem::path& path)
{
    const auto rows = parse_csv(read_text_file(path));
    if (rows.empty() || rows[0] != std::vector<std::string>{"i", "x"})
        throw IoError("configuration CSV: missing or unexpected header in " + path.string());
    std::vector<double> x;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != 2)
            throw IoError("configuration CSV: row " + std::to_string(r) + " is malformed");
        double v = 0;
        const auto& cell = rows[r][1];
        auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc{} || ptr != cell.data() + cell.size())
            throw IoError("configuration CSV: bad value '" + cell + "'");
        x.push_back(v);
    }
    return ParticleConfiguration(std::move(x));
}

} // namespace edgeld
