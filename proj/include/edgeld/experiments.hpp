#pragma once

#include "edgeld/model.hpp"
#include "edgeld/rng.hpp"
#include "edgeld/sampling.hpp"
#include "edgeld/stats.hpp"
#include "edgeld/tridiagonal.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace edgeld {

// Where the largest particle (or top eigenvalue) comes from.
enum class ModelKind
{
    // Independent particles with density exp(-V)/Z; probabilities come from the exact
    // quadrature oracle rather than from sampling.
    GasIid,
    // Log gas with V = x^2/2 realised as eigenvalues of a tridiagonal beta-ensemble
    // matrix with beta = 2P/N (periodic selects the Toda-Lax matrix instead).
    GasMatrix,
    // Gibbs measure sampled by single-site Metropolis; any kernel and potential.
    GasMcmc,
    // Tridiagonal matrix with independent Gaussian-tail entries.
    MatrixGeneric,
};

std::string model_kind_name(ModelKind kind);

struct ModelSpec
{
    ModelKind kind = ModelKind::GasMatrix;
    PotentialSpec potential = PotentialSpec::gaussian();
    InteractionKind interaction = InteractionKind::log();
    double pressure = 0.5;
    bool periodic = false;
    OffdiagConvention convention = OffdiagConvention::Scaled;
    // For MatrixGeneric; default to N(0,1) diagonal and chi_{2P}/sqrt(2) off-diagonal.
    std::optional<EntryDistribution> diag_dist;
    std::optional<EntryDistribution> offdiag_dist;
    McmcOptions mcmc;

    bool is_matrix() const noexcept { return kind == ModelKind::GasMatrix || kind == ModelKind::MatrixGeneric; }
    // Throws PreconditionError when the combination is not realisable, e.g. a matrix
    // model with a non-Gaussian potential.
    void validate() const;
    GasParameters gas_parameters(std::size_t n) const;
};

// Normalisation of the largest particle: (log N / kappa)^(1/alpha); sqrt(2 log N) for
// matrices.
double location_scale(const ModelSpec& model, std::size_t n);

// One random matrix of a matrix model.
TridiagonalMatrix sample_matrix(const ModelSpec& model, std::size_t n, RngStream& rng);

// All N particles (eigenvalues for matrix models; dense solve only up to 2000).
std::vector<double> sample_particles(const ModelSpec& model, std::size_t n, RngStream& rng);

// Largest particle of one replica.
double sample_max(const ModelSpec& model, std::size_t n, RngStream& rng);

// max >= threshold for one replica; for matrices uses the Sturm count shortcut.
bool sample_exceeds(const ModelSpec& model, std::size_t n, double threshold, RngStream& rng);

// Runs body(i) for i in [0, count) on `workers` threads (1 means inline). Each index is
// processed exactly once; results must be written to per-index slots so the outcome
// does not depend on scheduling.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& body);

// Worker count from EDGELD_WORKERS, defaulting to 1.
std::size_t workers_from_environment();

struct RunContext
{
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    // High byte of every stream id, distinct per experiment.
    std::uint64_t tag = 0;
};

struct TailPoint
{
    std::size_t n = 0;
    double threshold = 0.0;
    std::size_t successes = 0;
    std::size_t trials = 0;
    double probability = 0.0;
    Interval ci{0.0, 0.0};
    bool exact = false;
    // Zero successes (or all successes for lower tails): only a bound is available.
    bool censored = false;
    // The normalised quantity compared to the target, e.g. -log p / log N.
    double statistic = 0.0;
    // Bounds on the statistic implied by ci.
    Interval statistic_ci{0.0, 0.0};
};

struct LDEstimate
{
    std::string estimator;
    double x = 0.0;
    std::vector<std::size_t> n_values;
    std::vector<TailPoint> points;
    double slope = 0.0;
    double slope_stderr = 0.0;
    double intercept = 0.0;
    std::size_t fitted_points = 0;
    double target = 0.0;
    std::vector<std::string> warnings;
};

struct TailOptions
{
    double confidence = 0.99;
    // Matrix models with a standard Gaussian diagonal: split on max a_i >= t, whose
    // probability is known exactly, and sample only the complement. Enabled
    // automatically for x >= 1.5 when `stratify` is unset.
    std::optional<bool> stratify;
};

// P(max / location_scale >= x) for every N and the weighted least-squares slope of
// -log p against log N, compared against rate_function(alpha, x).
LDEstimate estimate_right_tail(const ModelSpec& model, double x, const std::vector<std::size_t>& n_values,
                               std::size_t replicas, const RunContext& ctx, const TailOptions& options = {});

// P(max / location_scale < 1 - x) with statistic log log(1/p) / log N and target
// 1 - (1 - x)^alpha. The GasIid model is evaluated exactly; otherwise zero counts are
// reported censored, with the statistic interval giving a lower bound.
LDEstimate estimate_left_tail(const ModelSpec& model, double x, const std::vector<std::size_t>& n_values,
                              std::size_t replicas, const RunContext& ctx, const TailOptions& options = {});

struct ModerateEstimate
{
    double gamma = 0.0;
    double x = 0.0;
    double speed_exponent = 0.0;
    // -log P(max >= loc + x (log N)^-gamma) / (log N)^(1 - gamma - 1/alpha)
    LDEstimate right;
    // log log 1/P(max <= loc - x (log N)^-gamma) / (log N)^(1 - gamma - 1/alpha)
    LDEstimate left;
    double target = 0.0;
};

// Requires -1/alpha < gamma < 1 - 1/alpha.
ModerateEstimate estimate_moderate(const ModelSpec& model, double gamma, double x,
                                   const std::vector<std::size_t>& n_values, std::size_t replicas,
                                   const RunContext& ctx, const TailOptions& options = {});

// A scalar random variable whose upper tail is examined.
struct TailStatistic
{
    std::string name;
    std::function<double(RngStream&)> sample;
};

TailStatistic gaussian_norm_statistic(std::size_t dimension);
TailStatistic gaussian_l1_statistic(std::size_t dimension);
TailStatistic chi_statistic(double theta);
TailStatistic entry_statistic(const EntryDistribution& dist);

struct TailExponentEstimate
{
    std::string statistic;
    std::vector<double> levels;
    std::vector<std::size_t> counts;
    std::vector<double> log_survival;
    // Fitted coefficient of x^2 in -log P(X > x) ~ c x^2 + b log x + a.
    double c_hat = 0.0;
    double c_stderr = 0.0;
    double log_coefficient = 0.0;
    std::size_t replicas = 0;
    std::vector<double> dropped_levels;
    // Resolvable levels left out of the fit because they sit in the bulk.
    std::vector<double> bulk_levels;
};

// Counts exceedances of each level and fits the quadratic tail constant. Levels with
// fewer than 10 exceedances are dropped, as are levels with empirical survival above
// tail_fraction, where the tail form does not hold yet; at least three must remain.
TailExponentEstimate tail_exponent(const TailStatistic& statistic, const std::vector<double>& levels,
                                   std::size_t replicas, const RunContext& ctx, double tail_fraction = 0.1);

struct TruncationRow
{
    double epsilon = 0.0;
    double threshold = 0.0;
    // max over replicas of |mu_N - mu_N^eps| on the normalised scale.
    double max_discrepancy = 0.0;
    double mean_discrepancy = 0.0;
    double bound = 0.0;
    std::size_t violations = 0;
};

// mu_N = lambda_max / sqrt(2 log N) before and after truncation at each epsilon.
std::vector<TruncationRow> exp_equivalence_scan(const ModelSpec& model, const std::vector<double>& epsilons,
                                                std::size_t n, std::size_t replicas, const RunContext& ctx);

struct DmaxRow
{
    std::size_t d = 0;
    std::size_t count = 0;
    std::size_t trials = 0;
    double probability = 0.0;
    Interval ci{0.0, 0.0};
    // log P(d_max >= d) / log N; for zero counts the value at the upper CI, flagged.
    double log_ratio = 0.0;
    bool censored = false;
};

struct DmaxScan
{
    double epsilon = 0.0;
    std::size_t n = 0;
    std::vector<DmaxRow> rows;
    // Least-squares slope of log_ratio against d over uncensored rows with d >= 2.
    double slope = 0.0;
    std::size_t fitted_points = 0;
};

// Distribution of the largest block of truncate(T, epsilon).
DmaxScan dmax_tail_scan(const ModelSpec& model, double epsilon, const std::vector<std::size_t>& d_values,
                        std::size_t n, std::size_t replicas, const RunContext& ctx);

// Exact P(d_max >= d) when coupling i survives truncation independently with
// probability keep_probabilities[i] (N - 1 entries): a block of size d needs d - 1
// consecutive survivors, so the complement is a run-length recursion.
double dmax_exceedance_exact(std::span<const double> keep_probabilities, std::size_t d);

// P(|b_i| >= truncation_threshold(n, epsilon)) for the N - 1 couplings of a
// non-periodic chi off-diagonal model; empty when the coupling law has no closed form.
std::vector<double> coupling_keep_probabilities(const ModelSpec& model, std::size_t n, double epsilon);

struct MarginalBoundReport
{
    std::vector<double> bin_centres;
    std::vector<double> histogram;
    std::vector<double> envelope;
    // Smallest C with histogram <= C * envelope on every populated bin.
    double fitted_c = 0.0;
    std::size_t samples = 0;
    bool finite = false;
};

// exp(-V(u) + 2P log(1 + |u|)) for the log kernel, exp(-V(u)) otherwise.
double marginal_envelope(const ModelSpec& model, double u);

// Histogram of single-particle positions at size n over `replicas` independent
// configurations, compared with marginal_envelope.
MarginalBoundReport marginal_bound_check(const ModelSpec& model, std::size_t n, std::size_t replicas,
                                         const RunContext& ctx, std::size_t bins = 60);

} // namespace edgeld
