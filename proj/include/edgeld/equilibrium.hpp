#pragma once

#include "edgeld/model.hpp"

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace edgeld {

// Density sampled on the uniform grid -L = x_0 < ... < x_M = L. Between grid points
// the density is taken to be the linear interpolant; trapezoid sums are then exact
// integrals of that interpolant.
struct DensityGrid
{
    std::vector<double> points;
    std::vector<double> values;
    double spacing = 0.0;

    static DensityGrid uniform(double half_width, std::size_t cells);

    std::size_t size() const noexcept { return points.size(); }
    double half_width() const noexcept { return points.empty() ? 0.0 : points.back(); }
    double mass() const;
    // Trapezoid integral of f(x_i) * values_i.
    double integrate(const std::function<double(double)>& f) const;
};

// Integral of g(d - y) against the unit hat function supported on [-h, h].
// Computed from closed-form antiderivatives in extended precision, so the
// singularity at y = d needs no special treatment.
double hat_kernel_weight(const InteractionKind& kind, double d, double h);

// U(x) = int g(x - y) rho(y) dy for the piecewise-linear density; x may lie anywhere.
double interaction_potential(const DensityGrid& density, const InteractionKind& kind, double x);

// U evaluated at every grid point (Toeplitz product, O(M^2)).
std::vector<double> interaction_potential_on_grid(const DensityGrid& density, const InteractionKind& kind);

struct GridConfig
{
    // L; zero selects default_half_width.
    double half_width = 0.0;
    std::size_t cells = 4096;
    double damping = 0.5;
    double tol = 1e-9;
    std::size_t max_iter = 10000;
};

// Smallest L (to 0.01) with kappa L^alpha - alpha log L - 2P log(1 + L) > 40, the last
// term only for the log kernel where the density tail is heavier by (1 + |x|)^(2P).
double default_half_width(const PotentialSpec& potential, const InteractionKind& kind, double pressure);

struct EquilibriumMeasure
{
    DensityGrid density;
    double lambda_eq = 0.0;
    std::vector<double> u_potential;
    double pressure = 0.0;
    InteractionKind interaction = InteractionKind::log();
    double kappa = 0.5;
    double alpha = 2.0;
    // max |V + 2P U + log rho - lambda_eq| over points with rho > 1e-12.
    double residual = 0.0;
    std::size_t iterations = 0;

    // Density at x by linear interpolation, zero outside the grid.
    double density_at(double x) const;
};

// Observer of the damped iteration: iteration index and current iterate.
using EquilibriumObserver = std::function<void(std::size_t iteration, const DensityGrid& iterate)>;

// Damped fixed point rho <- (1 - theta) rho + theta exp(-V - 2P U^rho + lambda), with
// lambda normalising each image and theta halved whenever the sup-norm update grows.
// Stops when both the update and the log residual fall below tol.
EquilibriumMeasure solve_equilibrium(const PotentialSpec& potential, const InteractionKind& kind, double pressure,
                                     const GridConfig& config = {},
                                     std::optional<std::vector<double>> initial_values = std::nullopt,
                                     const EquilibriumObserver& observer = {});

// Closed-form equilibrium density for V = x^2/2 and the log kernel,
// exp(-x^2/2)/sqrt(2 pi) / |f(x)|^2 with f(x) = sqrt(P/Gamma(P)) int_0^inf t^(P-1) exp(-t^2/2 + ixt) dt.
double askey_wimp_kerov_density(double pressure, double x);

// How the normalising constant enters the edge equation.
enum class EdgeConvention
{
    // N exp(-V(E) + beta N log E + lambda_eq) / V'(E) = 1 (log term for the log kernel
    // only). This matches N rho_eq(E) / V'(E) = 1 for the equilibrium density above.
    MultiplyByConstant,
    // N exp(-V(E) + beta N log E) / (exp(lambda_eq) V'(E)) = 1.
    DivideByConstant,
};

// log of the left-hand side of the edge equation at E.
double edge_log_residual(const GasParameters& params, const EquilibriumMeasure& eq, double e,
                         EdgeConvention convention = EdgeConvention::MultiplyByConstant);

// Root of edge_log_residual by bisection, initial bracket [1, 4 (log N / kappa)^(1/alpha) + 4]
// widened if needed. The returned root has |log LHS| <= 1e-10.
double solve_edge(const GasParameters& params, const EquilibriumMeasure& eq,
                  EdgeConvention convention = EdgeConvention::MultiplyByConstant);

// int V rho + P int int g rho rho + int rho log rho, by trapezoid sums on the grid.
double free_energy(const DensityGrid& density, const PotentialSpec& potential, const InteractionKind& kind,
                   double pressure);
double free_energy(const DensityGrid& density, const std::function<double(double)>& potential,
                   const InteractionKind& kind, double pressure);

// Writes `<base>.csv` (x, rho, u_potential) and `<base>.json` (lambda_eq, P, interaction,
// potential_params, residual) together.
void save_equilibrium(const EquilibriumMeasure& eq, const std::filesystem::path& base);
// Contents of the two files written by save_equilibrium (CSV, JSON).
std::pair<std::string, std::string> equilibrium_file_texts(const EquilibriumMeasure& eq);
EquilibriumMeasure load_equilibrium(const std::filesystem::path& base);

} // namespace edgeld
