#pragma once

#include "edgeld/model.hpp"
#include "edgeld/rng.hpp"
#include "edgeld/tridiagonal.hpp"

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace edgeld {

// chi_theta variate, sqrt(2 G) with G ~ Gamma(theta / 2, 1).
double sample_chi(double theta, RngStream& rng);

// f_theta(x) = 2^(1 - theta/2) / Gamma(theta/2) x^(theta - 1) exp(-x^2/2) on x > 0.
double chi_density(double theta, double x);

// Off-diagonal law of the tridiagonal beta-ensemble model. With Scaled, sqrt(2) b_i is
// chi distributed, which together with standard Gaussian a_i gives eigenvalue density
// proportional to exp(-sum x^2/2) |Vandermonde|^beta. Unscaled draws b_i itself from
// chi and is kept for comparison.
enum class OffdiagConvention { Scaled, Unscaled };

// a_i ~ N(0,1), b_i ~ chi_{beta (N - i)} (scaled per `convention`), i = 1..N-1.
TridiagonalMatrix build_dumitriu_edelman(std::size_t n, double beta, RngStream& rng,
                                         OffdiagConvention convention = OffdiagConvention::Scaled);

// Periodic Lax matrix: a_i ~ N(0,1), sqrt(2) b_i ~ chi_{2P}, i = 1..N.
TridiagonalMatrix build_toda_lax(std::size_t n, double pressure, RngStream& rng);

// Law of one matrix entry together with its declared Gaussian tail constant c,
// -log P(|X| > x) = c x^2 + o(x^2).
class EntryDistribution
{
  public:
    using Sampler = std::function<double(RngStream&)>;

    static EntryDistribution standard_gaussian();
    // scale * chi_theta; tail constant 1 / (2 scale^2).
    static EntryDistribution chi_scaled(double theta, double scale);
    static EntryDistribution custom(std::string name, Sampler sampler, double tail_constant);

    double sample(RngStream& rng) const { return sampler_(rng); }
    double tail_constant() const noexcept { return tail_constant_; }
    const std::string& name() const noexcept { return name_; }

  private:
    EntryDistribution(std::string name, Sampler sampler, double tail_constant);
    std::string name_;
    Sampler sampler_;
    double tail_constant_;
};

// Independent entries. The diagonal law must have tail constant 1/2 and the
// off-diagonal law tail constant 1 (so sqrt(2) b has constant 1/2); anything else is
// a ConfigError. All diagonal entries are drawn before the off-diagonal ones.
TridiagonalMatrix build_generic(std::size_t n, const EntryDistribution& diag_dist,
                                const EntryDistribution& offdiag_dist, bool periodic, RngStream& rng);

// One draw from the normalised density exp(-V)/Z for an unperturbed potential, via
// kappa |X|^alpha ~ Gamma(1/alpha, 1).
double sample_iid_particle(const PotentialSpec& potential, RngStream& rng);

// min(1, exp(-delta_energy)); NaN and +inf energy changes are rejected.
double metropolis_acceptance(double delta_energy);

struct McmcOptions
{
    std::size_t sweeps = 1000;
    double step_size = 0.5;
    // Sweeps spent tuning the step size before sampling; defaults to 10 N when negative.
    long burn_in_sweeps = -1;
    double target_acceptance = 0.4;
    // Called after every post-burn-in sweep with the (unsorted) positions.
    std::function<void(std::size_t sweep, const std::vector<double>& positions)> observer;
};

struct McmcResult
{
    ParticleConfiguration final_configuration;
    double acceptance_rate = 0.0;
    double step_size = 0.0;
    std::size_t proposals = 0;
    std::vector<std::string> warnings;
};

// Single-site random-walk Metropolis chain targeting exp(-configuration_energy).
// Each sweep proposes one Gaussian move per particle in index order. During burn-in
// the step size is rescaled every 50 sweeps towards the target acceptance; it is held
// fixed afterwards so the sampling phase is an exact Metropolis chain.
McmcResult mcmc_gas(const GasParameters& params, const ParticleConfiguration& init, RngStream& rng,
                    const McmcOptions& options = {});

// Distribution of one particle with density exp(-V)/Z, with tails computed to
// relative accuracy near 1e-12 by double-exponential quadrature.
class IidTail
{
  public:
    explicit IidTail(PotentialSpec potential);

    const PotentialSpec& potential() const noexcept { return potential_; }
    double log_normalizer() const noexcept { return log_z_; }
    double density(double x) const;
    // log P(X > t)
    double log_survival(double t) const;
    // log P(X < t)
    double log_cdf(double t) const;

  private:
    // log of int_t^inf exp(-V(sign * u)) du for t >= 0.
    double log_tail_integral(double t, double sign) const;
    PotentialSpec potential_;
    double log_z_;
};

// P(max of n iid particles < t) = F(t)^n.
double iid_tail_exact(const PotentialSpec& potential, std::size_t n, double t);
double iid_tail_exact(const IidTail& tail, std::size_t n, double t);
// P(max of n iid particles >= t) without cancellation.
double iid_exceedance_exact(const IidTail& tail, std::size_t n, double t);

// CSV with header `i,x`.
std::string configuration_csv_text(const ParticleConfiguration& config);
void write_configuration_csv(const ParticleConfiguration& config, const std::filesystem::path& path);
ParticleConfiguration read_configuration_csv(const std::filesystem::path& path);

} // namespace edgeld
