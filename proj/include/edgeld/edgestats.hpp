#pragma once

#include "edgeld/equilibrium.hpp"
#include "edgeld/experiments.hpp"
#include "edgeld/model.hpp"
#include "edgeld/stats.hpp"
#include "edgeld/tridiagonal.hpp"

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace edgeld {

// Atoms V'(E_N)(x_j - E_N) of all particles.
struct EdgePointProcess
{
    std::vector<double> atoms;
    double e_n = 0.0;
    double scale = 0.0;

    // Number of atoms in [lo, hi).
    std::size_t count(double lo, double hi) const;
};

// Rescales a configuration around the edge obtained from solve_edge.
EdgePointProcess edge_process(const ParticleConfiguration& config, const GasParameters& params,
                              const EquilibriumMeasure& eq, EdgeConvention convention = EdgeConvention::MultiplyByConstant);

// Rescales around a precomputed edge e_n with scale V'(e_n).
EdgePointProcess edge_process(std::span<const double> positions, const PotentialSpec& potential, double e_n);

// Half-open window [lo, hi) for the rescaled atoms; hi may be +infinity.
struct CountWindow
{
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();

    // int_lo^hi e^-x dx
    double mass() const;
    std::string label() const;
};

std::vector<CountWindow> default_count_windows();

// Eigenvalues of t in the rescaled window, from two Sturm counts.
std::size_t matrix_window_count(const TridiagonalMatrix& t, double e_n, double scale, const CountWindow& window);

struct PoissonTestReport
{
    std::size_t replicas = 0;
    double set_mass = 0.0;
    double mean = 0.0;
    double variance = 0.0;
    double statistic = 0.0;
    double dof = 0.0;
    double p_value = 1.0;
    // Cells after merging so that each expected count is at least 5; the last cell
    // collects all larger counts.
    std::vector<std::size_t> cell_start;
    std::vector<std::size_t> observed;
    std::vector<double> expected;
    bool degenerate = false;
};

// Chi-square goodness of fit of the count distribution to Poisson(set_mass).
// Refuses fewer than 200 replicas. set_mass = 0 with all counts zero is a
// degenerate pass.
PoissonTestReport poisson_count_test(std::span<const std::size_t> counts, double set_mass);

// Edge location for a model at size n, with the equilibrium measure it came from.
struct EdgeSetup
{
    std::size_t n = 0;
    double e_n = 0.0;
    double scale = 0.0;
    // (log N / kappa)^(1/alpha), reported for comparison only.
    double asymptotic = 0.0;
    double lambda_eq = 0.0;
    EdgeConvention convention = EdgeConvention::MultiplyByConstant;
};

EdgeSetup edge_setup(const ModelSpec& model, std::size_t n, const EquilibriumMeasure& eq,
                     EdgeConvention convention = EdgeConvention::MultiplyByConstant);

struct NoExceedance
{
    std::size_t successes = 0;
    std::size_t replicas = 0;
    double probability = 0.0;
    Interval ci{0.0, 0.0};
    double target = 0.0;
    // F(E_N)^N for the independent model, NaN otherwise.
    double exact = std::numeric_limits<double>::quiet_NaN();
};

struct WindowCounts
{
    CountWindow window;
    std::vector<std::size_t> counts;
    double mean = 0.0;
    double mean_stderr = 0.0;
    PoissonTestReport test;
};

struct EdgeStudy
{
    EdgeSetup setup;
    NoExceedance no_exceedance;
    // Per replica: 1 when every particle lies below E_N.
    std::vector<std::uint8_t> below;
    std::vector<WindowCounts> windows;
};

// Fraction of replicas with every particle below E_N, compared with e^-1.
NoExceedance no_exceedance_probability(const ModelSpec& model, const EdgeSetup& setup, std::size_t replicas,
                                       const RunContext& ctx, double confidence = 0.99);

// No-exceedance fraction and window counts from the same replicas. The Poisson test
// is run when there are at least 200 replicas.
EdgeStudy edge_count_study(const ModelSpec& model, const EdgeSetup& setup, std::size_t replicas,
                           const RunContext& ctx, const std::vector<CountWindow>& windows = default_count_windows(),
                           double confidence = 0.99);

} // namespace edgeld
