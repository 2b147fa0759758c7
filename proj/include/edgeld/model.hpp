#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace edgeld {

// Confining potential V(x) = kappa |x|^alpha + phi(x).
//
// The perturbation phi and its derivative are caller-supplied callables; an empty
// callable means zero. Nothing checks that the supplied derivative matches phi.
class PotentialSpec
{
  public:
    using Function = std::function<double(double)>;

    PotentialSpec(double kappa, double alpha, Function perturbation = {},
                  Function perturbation_derivative = {});

    // V(x) = x^2 / 2, the potential of the Gaussian beta-ensemble.
    static PotentialSpec gaussian() { return PotentialSpec(0.5, 2.0); }

    double kappa() const noexcept { return kappa_; }
    double alpha() const noexcept { return alpha_; }
    bool has_perturbation() const noexcept { return static_cast<bool>(perturbation_); }

    double value(double x) const;
    double gradient(double x) const;

    // Typical location of the largest of N particles, (log N / kappa)^(1/alpha).
    double typical_max(double n) const;

  private:
    double kappa_;
    double alpha_;
    Function perturbation_;
    Function perturbation_derivative_;
};

double potential_eval(const PotentialSpec& spec, double x);
double potential_grad(const PotentialSpec& spec, double x);

// Pair interaction g: either -log|r| or the Riesz kernel |r|^-s, 0 < s < 1.
class InteractionKind
{
  public:
    enum class Type { Log, Riesz };

    static InteractionKind log() { return InteractionKind(Type::Log, 0.0); }
    static InteractionKind riesz(double s);

    Type type() const noexcept { return type_; }
    bool is_log() const noexcept { return type_ == Type::Log; }
    // Riesz exponent; 0 for the log kernel.
    double s() const noexcept { return s_; }
    std::string name() const;

    bool operator==(const InteractionKind&) const = default;

  private:
    InteractionKind(Type type, double s) : type_(type), s_(s) {}
    Type type_;
    double s_;
};

// g(r); +infinity at r = 0 for both kernels.
double interaction_eval(const InteractionKind& kind, double r);

struct GasParameters
{
    std::size_t n = 0;
    double pressure = 0.0;
    double beta = 0.0;
    InteractionKind interaction = InteractionKind::log();
    PotentialSpec potential = PotentialSpec::gaussian();

    // beta = 2 P / N.
    static GasParameters high_temperature(std::size_t n, double pressure, InteractionKind interaction,
                                          PotentialSpec potential);

    // Throws PreconditionError when n == 0, pressure < 0 or beta < 0.
    void validate() const;
};

// Particle positions kept sorted ascending.
class ParticleConfiguration
{
  public:
    ParticleConfiguration() = default;
    explicit ParticleConfiguration(std::vector<double> positions);

    std::span<const double> positions() const noexcept { return positions_; }
    std::size_t size() const noexcept { return positions_.size(); }
    // Largest particle. Precondition: non-empty.
    double x_max() const;

  private:
    std::vector<double> positions_;
};

// beta * sum_{i<j} g(x_i - x_j) + sum_i V(x_i). Coinciding particles give +infinity.
double configuration_energy(const GasParameters& params, const ParticleConfiguration& config);

// Same sum over an unsorted position list.
double configuration_energy(const GasParameters& params, std::span<const double> positions);

// I_alpha(x) = x^alpha - 1 for x >= 1, +infinity below 1.
double rate_function(double alpha, double x);

} // namespace edgeld
