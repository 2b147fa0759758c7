#include "edgeld/experiments.hpp"

#include "edgeld/error.hpp"
#include "edgeld/io.hpp"
#include "edgeld/spectral.hpp"

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

namespace edgeld {

std::string model_kind_name(ModelKind kind)
{
    switch (kind) {
    case ModelKind::GasIid:
        return "gas-iid";
    case ModelKind::GasMatrix:
        return "gas-matrix";
    case ModelKind::GasMcmc:
        return "gas-mcmc";
    case ModelKind::MatrixGeneric:
        return "matrix-generic";
    }
    return "unknown";
}

void ModelSpec::validate() const
{
    if (!(pressure >= 0.0) || !std::isfinite(pressure))
        throw PreconditionError("model: pressure must be finite and nonnegative");
    switch (kind) {
    case ModelKind::GasIid:
        if (pressure != 0.0)
            throw PreconditionError("model gas-iid describes independent particles and needs P = 0");
        break;
    case ModelKind::GasMatrix:
        if (!interaction.is_log() || potential.has_perturbation() || potential.kappa() != 0.5 ||
            potential.alpha() != 2.0)
            throw PreconditionError("model gas-matrix realises only the log gas with V = x^2/2");
        if (periodic && !(pressure > 0.0))
            throw PreconditionError("model gas-matrix with the periodic Lax matrix needs P > 0");
        break;
    case ModelKind::GasMcmc:
        break;
    case ModelKind::MatrixGeneric:
        if (!offdiag_dist && !(pressure > 0.0))
            throw PreconditionError("model matrix-generic with the default chi off-diagonal needs P > 0");
        break;
    }
}

GasParameters ModelSpec::gas_parameters(std::size_t n) const
{
    return GasParameters::high_temperature(n, kind == ModelKind::GasIid ? 0.0 : pressure, interaction, potential);
}

double location_scale(const ModelSpec& model, std::size_t n)
{
    if (n < 2)
        throw PreconditionError("location scale needs N >= 2");
    if (model.is_matrix())
        return std::sqrt(2.0 * std::log(static_cast<double>(n)));
    return model.potential.typical_max(static_cast<double>(n));
}

TridiagonalMatrix sample_matrix(const ModelSpec& model, std::size_t n, RngStream& rng)
{
    switch (model.kind) {
    case ModelKind::GasMatrix:
        if (model.periodic)
            return build_toda_lax(n, model.pressure, rng);
        return build_dumitriu_edelman(n, 2.0 * model.pressure / static_cast<double>(n), rng, model.convention);
    case ModelKind::MatrixGeneric: {
        const auto diag = model.diag_dist.value_or(EntryDistribution::standard_gaussian());
        const auto off = model.offdiag_dist ? *model.offdiag_dist
                                            : EntryDistribution::chi_scaled(2.0 * model.pressure, 1.0 / std::sqrt(2.0));
        return build_generic(n, diag, off, model.periodic, rng);
    }
    default:
        throw PreconditionError("sample_matrix: model " + model_kind_name(model.kind) + " has no matrix");
    }
}

namespace {

std::vector<double> mcmc_sample(const ModelSpec& model, std::size_t n, RngStream& rng)
{
    std::vector<double> init(n);
    if (!model.potential.has_perturbation()) {
        for (auto& x : init)
            x = sample_iid_particle(model.potential, rng);
    } else {
        for (std::size_t i = 0; i < n; ++i)
            init[i] = -1.0 + 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    }
    McmcOptions options = model.mcmc;
    options.observer = nullptr;
    auto result = mcmc_gas(model.gas_parameters(n), ParticleConfiguration(std::move(init)), rng, options);
    const auto p = result.final_configuration.positions();
    return {p.begin(), p.end()};
}

bool standard_gaussian_diagonal(const ModelSpec& model)
{
    if (model.kind == ModelKind::GasMatrix)
        return true;
    return model.kind == ModelKind::MatrixGeneric &&
           (!model.diag_dist || model.diag_dist->name() == "standard_gaussian");
}

// A matrix conditioned on every diagonal entry lying below t: offending entries are
// redrawn from N(0, 1) until they fall below, which samples the truncated normal.
TridiagonalMatrix sample_matrix_below(const ModelSpec& model, std::size_t n, double t, RngStream& rng)
{
    TridiagonalMatrix m = sample_matrix(model, n, rng);
    const auto a = m.diag();
    if (std::all_of(a.begin(), a.end(), [t](double v) { return v < t; }))
        return m;
    std::vector<double> diag(a.begin(), a.end());
    for (auto& v : diag)
        while (!(v < t))
            v = rng.normal();
    return TridiagonalMatrix(std::move(diag), std::vector<double>(m.offdiag().begin(), m.offdiag().end()),
                             m.periodic());
}

} // namespace

std::vector<double> sample_particles(const ModelSpec& model, std::size_t n, RngStream& rng)
{
    switch (model.kind) {
    case ModelKind::GasIid: {
        std::vector<double> x(n);
        for (auto& v : x)
            v = sample_iid_particle(model.potential, rng);
        return x;
    }
    case ModelKind::GasMcmc:
        return mcmc_sample(model, n, rng);
    default:
        return dense_spectrum_oracle(sample_matrix(model, n, rng));
    }
}

double sample_max(const ModelSpec& model, std::size_t n, RngStream& rng)
{
    if (model.is_matrix())
        return lambda_max(sample_matrix(model, n, rng));
    const auto x = sample_particles(model, n, rng);
    return *std::max_element(x.begin(), x.end());
}

bool sample_exceeds(const ModelSpec& model, std::size_t n, double threshold, RngStream& rng)
{
    if (model.is_matrix())
        return exceeds(sample_matrix(model, n, rng), threshold);
    return sample_max(model, n, rng) >= threshold;
}

void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& body)
{
    workers = std::max<std::size_t>(1, std::min(workers, count));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i)
            body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count)
                    return;
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure)
                        failure = std::current_exception();
                    next.store(count);
                }
            }
        });
    }
    for (auto& t : pool)
        t.join();
    if (failure)
        std::rethrow_exception(failure);
}

std::size_t workers_from_environment()
{
    const char* env = std::getenv("EDGELD_WORKERS");
    if (!env || !*env)
        return 1;
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1)
        throw ConfigError(std::string("EDGELD_WORKERS must be a positive integer, got '") + env + "'");
    return static_cast<std::size_t>(v);
}

namespace {

constexpr std::size_t replica_chunk = 4096;

// Counts replicas for which `hit` holds, in chunks of consecutive replicas. Replica r
// always draws from stream (tag, point, r), so the total is independent of workers.
std::size_t count_hits(std::size_t replicas, std::uint64_t point, const RunContext& ctx,
                       const std::function<bool(RngStream&)>& hit)
{
    const std::size_t chunks = (replicas + replica_chunk - 1) / replica_chunk;
    std::vector<std::size_t> per_chunk(chunks, 0);
    parallel_for(chunks, ctx.workers, [&](std::size_t c) {
        const std::size_t begin = c * replica_chunk;
        const std::size_t end = std::min(replicas, begin + replica_chunk);
        std::size_t hits = 0;
        for (std::size_t r = begin; r < end; ++r) {
            RngStream rng(ctx.seed, replica_stream(ctx.tag, point, r));
            if (hit(rng))
                ++hits;
        }
        per_chunk[c] = hits;
    });
    std::size_t total = 0;
    for (auto h : per_chunk)
        total += h;
    return total;
}

struct Probability
{
    double p = 0.0;
    Interval ci{0.0, 0.0};
    std::size_t successes = 0;
    std::size_t trials = 0;
    bool exact = false;
    // Variance of log p for regression weights; zero for exact values.
    double log_variance = 0.0;
};

// P(max >= t) (upper = true) or P(max < t) for one N.
Probability tail_probability(const ModelSpec& model, std::size_t n, double t, bool upper, std::size_t replicas,
                             std::uint64_t point, const RunContext& ctx, double confidence, bool stratify)
{
    Probability out;
    if (model.kind == ModelKind::GasIid) {
        const IidTail tail(model.potential);
        out.p = upper ? iid_exceedance_exact(tail, n, t) : iid_tail_exact(tail, n, t);
        out.ci = {out.p, out.p};
        out.exact = true;
        return out;
    }
    if (replicas == 0)
        throw PreconditionError("tail estimate needs at least one replica");
    out.trials = replicas;
    if (stratify) {
        // max a_i >= t forces lambda_max >= t, and its probability is exact.
        const IidTail gaussian(PotentialSpec::gaussian());
        const double p_diag = iid_exceedance_exact(gaussian, n, t);
        const std::size_t hits = count_hits(replicas, point, ctx, [&](RngStream& rng) {
            return exceeds(sample_matrix_below(model, n, t, rng), t);
        });
        const Interval q_ci = wilson_interval(hits, replicas, confidence);
        const double q = static_cast<double>(hits) / static_cast<double>(replicas);
        out.successes = upper ? hits : replicas - hits;
        if (upper) {
            out.p = p_diag + (1.0 - p_diag) * q;
            out.ci = {p_diag + (1.0 - p_diag) * q_ci.lo, p_diag + (1.0 - p_diag) * q_ci.hi};
        } else {
            out.p = (1.0 - p_diag) * (1.0 - q);
            out.ci = {(1.0 - p_diag) * (1.0 - q_ci.hi), (1.0 - p_diag) * (1.0 - q_ci.lo)};
        }
        const double q_eff = std::clamp(upper ? q : 1.0 - q, 0.5 / static_cast<double>(replicas), 1.0);
        const double var_p = (1.0 - p_diag) * (1.0 - p_diag) * q_eff * (1.0 - q_eff + 0.5 / replicas) / replicas;
        out.log_variance = out.p > 0.0 ? var_p / (out.p * out.p) : INFINITY;
        return out;
    }
    std::size_t hits = 0;
    if (model.is_matrix()) {
        hits = count_hits(replicas, point, ctx, [&](RngStream& rng) {
            const bool above = exceeds(sample_matrix(model, n, rng), t);
            return upper ? above : !above;
        });
    } else {
        hits = count_hits(replicas, point, ctx, [&](RngStream& rng) {
            const bool above = sample_max(model, n, rng) >= t;
            return upper ? above : !above;
        });
    }
    out.successes = hits;
    out.p = static_cast<double>(hits) / static_cast<double>(replicas);
    out.ci = wilson_interval(hits, replicas, confidence);
    const double p_eff = std::max(out.p, 0.5 / static_cast<double>(replicas));
    out.log_variance = (1.0 - out.p + 0.5 / static_cast<double>(replicas)) / (static_cast<double>(replicas) * p_eff);
    return out;
}

TailPoint make_point(std::size_t n, double t, const Probability& pr)
{
    TailPoint pt;
    pt.n = n;
    pt.threshold = t;
    pt.successes = pr.successes;
    pt.trials = pr.trials;
    pt.probability = pr.p;
    pt.ci = pr.ci;
    pt.exact = pr.exact;
    pt.censored = !pr.exact && pr.p == 0.0;
    return pt;
}

void fit_slope(LDEstimate& est, const std::vector<double>& x, const std::vector<double>& y,
               const std::vector<double>& weights)
{
    if (x.size() < 2) {
        est.warnings.push_back("fewer than two usable N values; no slope fitted");
        return;
    }
    const auto fit = linear_fit(x, y, weights);
    est.slope = fit.slope;
    est.slope_stderr = fit.slope_stderr;
    est.intercept = fit.intercept;
    est.fitted_points = fit.points;
}

std::uint64_t point_id(std::size_t k, std::uint64_t offset) { return static_cast<std::uint64_t>(k) + offset; }

bool choose_stratify(const ModelSpec& model, double x, const TailOptions& options)
{
    if (!model.is_matrix() || !standard_gaussian_diagonal(model))
        return false;
    return options.stratify.value_or(x >= 1.5);
}

double model_alpha(const ModelSpec& model) { return model.is_matrix() ? 2.0 : model.potential.alpha(); }

} // namespace

LDEstimate estimate_right_tail(const ModelSpec& model, double x, const std::vector<std::size_t>& n_values,
                               std::size_t replicas, const RunContext& ctx, const TailOptions& options)
{
    model.validate();
    if (options.stratify.value_or(false) && !(model.is_matrix() && standard_gaussian_diagonal(model)))
        throw PreconditionError("stratified tail estimate needs a matrix model with a standard Gaussian diagonal");
    const bool stratify = choose_stratify(model, x, options);
    LDEstimate est;
    est.estimator = model.kind == ModelKind::GasIid ? "exact" : (stratify ? "stratified" : "naive");
    est.x = x;
    est.n_values = n_values;
    est.target = rate_function(model_alpha(model), x);
    std::vector<double> lx, ly, w;
    bool any_mc = false;
    for (std::size_t k = 0; k < n_values.size(); ++k) {
        const std::size_t n = n_values[k];
        const double log_n = std::log(static_cast<double>(n));
        const double t = x * location_scale(model, n);
        const auto pr = tail_probability(model, n, t, true, replicas, point_id(k, 0), ctx, options.confidence, stratify);
        TailPoint pt = make_point(n, t, pr);
        pt.statistic = pr.p > 0.0 ? -std::log(pr.p) / log_n : INFINITY;
        pt.statistic_ci = {-std::log(pr.ci.hi) / log_n, pr.ci.lo > 0.0 ? -std::log(pr.ci.lo) / log_n : INFINITY};
        if (pr.p > 0.0) {
            lx.push_back(log_n);
            ly.push_back(-std::log(pr.p));
            w.push_back(pr.exact ? 1.0 : 1.0 / pr.log_variance);
            any_mc = any_mc || !pr.exact;
        } else {
            est.warnings.push_back("no exceedances at N = " + std::to_string(n) + "; dropped from the fit");
        }
        est.points.push_back(pt);
    }
    fit_slope(est, lx, ly, any_mc ? w : std::vector<double>{});
    return est;
}

LDEstimate estimate_left_tail(const ModelSpec& model, double x, const std::vector<std::size_t>& n_values,
                              std::size_t replicas, const RunContext& ctx, const TailOptions& options)
{
    model.validate();
    if (!(x > 0.0 && x < 1.0))
        throw PreconditionError("left tail level x must lie in (0, 1)");
    const bool stratify = model.is_matrix() && standard_gaussian_diagonal(model) && options.stratify.value_or(false);
    LDEstimate est;
    est.estimator = model.kind == ModelKind::GasIid ? "exact" : (stratify ? "stratified" : "naive");
    est.x = x;
    est.n_values = n_values;
    const double alpha = model_alpha(model);
    est.target = 1.0 - std::pow(1.0 - x, alpha);
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < n_values.size(); ++k) {
        const std::size_t n = n_values[k];
        const double log_n = std::log(static_cast<double>(n));
        const double t = (1.0 - x) * location_scale(model, n);
        TailPoint pt;
        if (model.kind == ModelKind::GasIid) {
            // Work with log P = N log F(t) directly; P itself underflows quickly.
            const IidTail tail(model.potential);
            const double neg_log_p = -static_cast<double>(n) * tail.log_cdf(t);
            pt.n = n;
            pt.threshold = t;
            pt.exact = true;
            pt.probability = std::exp(-neg_log_p);
            pt.ci = {pt.probability, pt.probability};
            pt.statistic = std::log(neg_log_p) / log_n;
            pt.statistic_ci = {pt.statistic, pt.statistic};
        } else {
            const auto pr =
                tail_probability(model, n, t, false, replicas, point_id(k, 1u << 10), ctx, options.confidence, stratify);
            pt = make_point(n, t, pr);
            auto stat = [log_n](double p) -> double {
                if (p <= 0.0)
                    return INFINITY;
                if (p >= 1.0)
                    return -INFINITY;
                return std::log(-std::log(p)) / log_n;
            };
            pt.statistic = stat(pr.p);
            pt.statistic_ci = {stat(pr.ci.hi), stat(pr.ci.lo)};
            if (pt.censored)
                est.warnings.push_back("no replica below the level at N = " + std::to_string(n) +
                                       "; only the lower bound " + format_double(pt.statistic_ci.lo) +
                                       " is reported");
        }
        if (std::isfinite(pt.statistic) && !pt.censored) {
            lx.push_back(log_n);
            ly.push_back(pt.statistic * log_n);
        }
        est.points.push_back(pt);
    }
    // Slope of log log(1/p) against log N, the exponent of the stretched exponential.
    fit_slope(est, lx, ly, {});
    return est;
}

ModerateEstimate estimate_moderate(const ModelSpec& model, double gamma, double x,
                                   const std::vector<std::size_t>& n_values, std::size_t replicas,
                                   const RunContext& ctx, const TailOptions& options)
{
    model.validate();
    const double alpha = model_alpha(model);
    if (!(gamma > -1.0 / alpha && gamma < 1.0 - 1.0 / alpha))
        throw PreconditionError("moderate deviations need -1/alpha < gamma < 1 - 1/alpha, here (" +
                                format_double(-1.0 / alpha) + ", " + format_double(1.0 - 1.0 / alpha) + ")");
    if (!(x > 0.0))
        throw PreconditionError("moderate deviation size x must be positive");
    ModerateEstimate out;
    out.gamma = gamma;
    out.x = x;
    out.speed_exponent = 1.0 - gamma - 1.0 / alpha;
    out.target = x / alpha;
    for (LDEstimate* side : {&out.right, &out.left}) {
        side->estimator = model.kind == ModelKind::GasIid ? "exact" : "naive";
        side->x = x;
        side->n_values = n_values;
        side->target = out.target;
    }
    const IidTail* exact_tail = nullptr;
    std::optional<IidTail> tail_storage;
    if (model.kind == ModelKind::GasIid) {
        tail_storage.emplace(model.potential);
        exact_tail = &*tail_storage;
    }
    for (std::size_t k = 0; k < n_values.size(); ++k) {
        const std::size_t n = n_values[k];
        const double log_n = std::log(static_cast<double>(n));
        const double speed = std::pow(log_n, out.speed_exponent);
        const double shift = x * std::pow(log_n, -gamma);
        const double loc = location_scale(model, n);

        TailPoint right, left;
        if (exact_tail) {
            const double log_cdf_hi = exact_tail->log_cdf(loc + shift);
            // log P(max >= t) = log(1 - F^N) = log(-expm1(N log F)).
            const double log_p_right = std::log(-std::expm1(static_cast<double>(n) * log_cdf_hi));
            right.n = n;
            right.threshold = loc + shift;
            right.exact = true;
            right.probability = std::exp(log_p_right);
            right.ci = {right.probability, right.probability};
            right.statistic = -log_p_right / speed;
            right.statistic_ci = {right.statistic, right.statistic};

            const double neg_log_p_left = -static_cast<double>(n) * exact_tail->log_cdf(loc - shift);
            left.n = n;
            left.threshold = loc - shift;
            left.exact = true;
            left.probability = std::exp(-neg_log_p_left);
            left.ci = {left.probability, left.probability};
            left.statistic = std::log(neg_log_p_left) / speed;
            left.statistic_ci = {left.statistic, left.statistic};
        } else {
            const bool stratify = choose_stratify(model, 0.0, options);
            const auto pr = tail_probability(model, n, loc + shift, true, replicas, point_id(k, 2u << 10), ctx,
                                             options.confidence, stratify);
            right = make_point(n, loc + shift, pr);
            right.statistic = pr.p > 0.0 ? -std::log(pr.p) / speed : INFINITY;
            right.statistic_ci = {-std::log(pr.ci.hi) / speed, pr.ci.lo > 0.0 ? -std::log(pr.ci.lo) / speed : INFINITY};
            const auto pl = tail_probability(model, n, loc - shift, false, replicas, point_id(k, 3u << 10), ctx,
                                             options.confidence, stratify);
            left = make_point(n, loc - shift, pl);
            auto stat = [speed](double p) -> double {
                if (p <= 0.0)
                    return INFINITY;
                if (p >= 1.0)
                    return -INFINITY;
                return std::log(-std::log(p)) / speed;
            };
            left.statistic = stat(pl.p);
            left.statistic_ci = {stat(pl.ci.hi), stat(pl.ci.lo)};
            if (right.censored)
                out.right.warnings.push_back("no exceedances at N = " + std::to_string(n));
            if (left.censored)
                out.left.warnings.push_back("no replica below the level at N = " + std::to_string(n));
        }
        out.right.points.push_back(right);
        out.left.points.push_back(left);
    }
    return out;
}

TailStatistic gaussian_norm_statistic(std::size_t dimension)
{
    if (dimension == 0)
        throw PreconditionError("Euclidean norm statistic needs dimension >= 1");
    return {"l2_norm_d" + std::to_string(dimension), [dimension](RngStream& rng) {
                double s = 0.0;
                for (std::size_t i = 0; i < dimension; ++i) {
                    const double g = rng.normal();
                    s += g * g;
                }
                return std::sqrt(s);
            }};
}

TailStatistic gaussian_l1_statistic(std::size_t dimension)
{
    if (dimension == 0)
        throw PreconditionError("L1 statistic needs dimension >= 1");
    return {"l1_sum_d" + std::to_string(dimension), [dimension](RngStream& rng) {
                double s = 0.0;
                for (std::size_t i = 0; i < dimension; ++i)
                    s += std::abs(rng.normal());
                return s;
            }};
}

TailStatistic chi_statistic(double theta)
{
    if (!(theta > 0.0))
        throw PreconditionError("chi statistic needs theta > 0");
    return {"chi_" + format_double(theta), [theta](RngStream& rng) { return sample_chi(theta, rng); }};
}

TailStatistic entry_statistic(const EntryDistribution& dist)
{
    return {dist.name(), [dist](RngStream& rng) { return dist.sample(rng); }};
}

TailExponentEstimate tail_exponent(const TailStatistic& statistic, const std::vector<double>& levels,
                                   std::size_t replicas, const RunContext& ctx, double tail_fraction)
{
    if (!(tail_fraction > 0.0 && tail_fraction <= 1.0))
        throw PreconditionError("tail_exponent: tail_fraction must lie in (0, 1]");
    if (levels.empty() || !std::is_sorted(levels.begin(), levels.end()))
        throw PreconditionError("tail_exponent: levels must be non-empty and increasing");
    if (replicas == 0)
        throw PreconditionError("tail_exponent: replicas must be positive");
    const std::size_t m = levels.size();
    const std::size_t chunks = (replicas + replica_chunk * 16 - 1) / (replica_chunk * 16);
    std::vector<std::vector<std::size_t>> per_chunk(chunks, std::vector<std::size_t>(m, 0));
    parallel_for(chunks, ctx.workers, [&](std::size_t c) {
        const std::size_t begin = c * replica_chunk * 16;
        const std::size_t end = std::min(replicas, begin + replica_chunk * 16);
        // One stream per chunk: the statistic is cheap, so per-replica seeding would dominate.
        RngStream rng(ctx.seed, replica_stream(ctx.tag, 0, c));
        auto& counts = per_chunk[c];
        for (std::size_t r = begin; r < end; ++r) {
            const double v = statistic.sample(rng);
            const auto above = static_cast<std::size_t>(std::upper_bound(levels.begin(), levels.end(), v) -
                                                        levels.begin());
            // v exceeds levels[0..above) when levels[j] < v.
            for (std::size_t j = 0; j < above; ++j)
                if (levels[j] < v)
                    ++counts[j];
        }
    });
    TailExponentEstimate est;
    est.statistic = statistic.name;
    est.replicas = replicas;
    std::vector<double> weights;
    for (std::size_t j = 0; j < m; ++j) {
        std::size_t total = 0;
        for (const auto& c : per_chunk)
            total += c[j];
        if (total < 10 || total == replicas) {
            est.dropped_levels.push_back(levels[j]);
            continue;
        }
        const double p = static_cast<double>(total) / static_cast<double>(replicas);
        if (p > tail_fraction) {
            est.bulk_levels.push_back(levels[j]);
            continue;
        }
        est.levels.push_back(levels[j]);
        est.counts.push_back(total);
        est.log_survival.push_back(-std::log(p));
        weights.push_back(static_cast<double>(replicas) * p / (1.0 - p));
    }
    if (est.levels.size() < 3)
        throw PreconditionError("tail_exponent: fewer than three resolvable tail levels (need >= 10 exceedances and survival <= tail_fraction)");
    // Weighted least squares for -log p = c x^2 + b log x + a.
    const auto k = static_cast<Eigen::Index>(est.levels.size());
    Eigen::MatrixXd design(k, 3);
    Eigen::VectorXd y(k), w(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        const double x = est.levels[static_cast<std::size_t>(i)];
        if (!(x > 0.0))
            throw PreconditionError("tail_exponent: levels must be positive");
        design(i, 0) = x * x;
        design(i, 1) = std::log(x);
        design(i, 2) = 1.0;
        y[i] = est.log_survival[static_cast<std::size_t>(i)];
        w[i] = weights[static_cast<std::size_t>(i)];
    }
    const Eigen::MatrixXd normal = design.transpose() * w.asDiagonal() * design;
    const Eigen::VectorXd rhs = design.transpose() * w.asDiagonal() * y;
    const Eigen::LDLT<Eigen::MatrixXd> solver(normal);
    const Eigen::VectorXd coef = solver.solve(rhs);
    const Eigen::MatrixXd cov = solver.solve(Eigen::MatrixXd::Identity(3, 3));
    est.c_hat = coef[0];
    est.log_coefficient = coef[1];
    est.c_stderr = std::sqrt(std::max(cov(0, 0), 0.0));
    return est;
}

std::vector<TruncationRow> exp_equivalence_scan(const ModelSpec& model, const std::vector<double>& epsilons,
                                                std::size_t n, std::size_t replicas, const RunContext& ctx)
{
    model.validate();
    if (!model.is_matrix())
        throw PreconditionError("exp_equivalence_scan needs a matrix model");
    if (n < 2 || replicas == 0)
        throw PreconditionError("exp_equivalence_scan needs N >= 2 and replicas > 0");
    const double scale = std::sqrt(2.0 * std::log(static_cast<double>(n)));
    const std::size_t m = epsilons.size();
    std::vector<std::vector<double>> disc(replicas, std::vector<double>(m));
    parallel_for(replicas, ctx.workers, [&](std::size_t r) {
        RngStream rng(ctx.seed, replica_stream(ctx.tag, 0, r));
        const auto t = sample_matrix(model, n, rng);
        const double mu = lambda_max(t) / scale;
        for (std::size_t e = 0; e < m; ++e)
            disc[r][e] = std::abs(mu - lambda_max(truncate(t, epsilons[e])) / scale);
    });
    std::vector<TruncationRow> rows;
    for (std::size_t e = 0; e < m; ++e) {
        TruncationRow row;
        row.epsilon = epsilons[e];
        row.threshold = truncation_threshold(n, epsilons[e]);
        row.bound = 3.0 * epsilons[e];
        double sum = 0.0;
        for (std::size_t r = 0; r < replicas; ++r) {
            row.max_discrepancy = std::max(row.max_discrepancy, disc[r][e]);
            sum += disc[r][e];
            if (disc[r][e] > row.bound)
                ++row.violations;
        }
        row.mean_discrepancy = sum / static_cast<double>(replicas);
        rows.push_back(row);
    }
    return rows;
}

DmaxScan dmax_tail_scan(const ModelSpec& model, double epsilon, const std::vector<std::size_t>& d_values,
                        std::size_t n, std::size_t replicas, const RunContext& ctx)
{
    model.validate();
    if (!model.is_matrix())
        throw PreconditionError("dmax_tail_scan needs a matrix model");
    if (n < 2 || replicas == 0)
        throw PreconditionError("dmax_tail_scan needs N >= 2 and replicas > 0");
    std::vector<std::size_t> dmax(replicas);
    parallel_for(replicas, ctx.workers, [&](std::size_t r) {
        RngStream rng(ctx.seed, replica_stream(ctx.tag, 0, r));
        auto t = truncate(sample_matrix(model, n, rng), epsilon);
        if (t.periodic()) {
            auto reduced = periodic_shift_reduce(t);
            if (!reduced) {
                dmax[r] = n;
                return;
            }
            t = std::move(*reduced);
        }
        dmax[r] = block_decompose(t).d_max;
    });
    DmaxScan scan;
    scan.epsilon = epsilon;
    scan.n = n;
    const double log_n = std::log(static_cast<double>(n));
    std::vector<double> xs, ys;
    for (std::size_t d : d_values) {
        DmaxRow row;
        row.d = d;
        row.trials = replicas;
        row.count = static_cast<std::size_t>(std::count_if(dmax.begin(), dmax.end(), [d](std::size_t v) { return v >= d; }));
        row.probability = static_cast<double>(row.count) / static_cast<double>(replicas);
        row.ci = wilson_interval(row.count, replicas);
        row.censored = row.count == 0;
        row.log_ratio = std::log(row.censored ? row.ci.hi : row.probability) / log_n;
        if (!row.censored && d >= 2) {
            xs.push_back(static_cast<double>(d));
            ys.push_back(row.log_ratio);
        }
        scan.rows.push_back(row);
    }
    if (xs.size() >= 2) {
        const auto fit = linear_fit(xs, ys);
        scan.slope = fit.slope;
        scan.fitted_points = fit.points;
    }
    return scan;
}

double dmax_exceedance_exact(std::span<const double> keep_probabilities, std::size_t d)
{
    if (d <= 1)
        return 1.0;
    const std::size_t run = d - 1; // consecutive surviving couplings needed
    if (run > keep_probabilities.size())
        return 0.0;
    // state[k] = P(no run of length `run` so far and the current run has length k)
    std::vector<double> state(run, 0.0), next(run);
    state[0] = 1.0;
    for (double q : keep_probabilities) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t k = 0; k < run; ++k) {
            next[0] += state[k] * (1.0 - q);
            if (k + 1 < run)
                next[k + 1] += state[k] * q;
        }
        state.swap(next);
    }
    double none = 0.0;
    for (double s : state)
        none += s;
    return std::clamp(1.0 - none, 0.0, 1.0);
}

std::vector<double> coupling_keep_probabilities(const ModelSpec& model, std::size_t n, double epsilon)
{
    if (model.periodic || n < 2)
        return {};
    const double tau = truncation_threshold(n, epsilon);
    // chi_theta^2 / 2 ~ Gamma(theta / 2), so P(c chi_theta >= tau) = Q(theta / 2, tau^2 / (2 c^2)).
    auto keep = [tau](double theta, double c) {
        if (theta <= 0.0)
            return tau <= 0.0 ? 1.0 : 0.0;
        return boost::math::gamma_q(0.5 * theta, tau * tau / (2.0 * c * c));
    };
    std::vector<double> q(n - 1);
    if (model.kind == ModelKind::GasMatrix) {
        const double beta = 2.0 * model.pressure / static_cast<double>(n);
        const double c = model.convention == OffdiagConvention::Scaled ? 1.0 / std::sqrt(2.0) : 1.0;
        for (std::size_t i = 0; i + 1 < n; ++i)
            q[i] = keep(beta * static_cast<double>(n - 1 - i), c);
        return q;
    }
    if (model.kind == ModelKind::MatrixGeneric && !model.offdiag_dist) {
        for (auto& v : q)
            v = keep(2.0 * model.pressure, 1.0 / std::sqrt(2.0));
        return q;
    }
    return {};
}

double marginal_envelope(const ModelSpec& model, double u)
{
    double e = -model.potential.value(u);
    if (model.interaction.is_log() && model.kind != ModelKind::GasIid)
        e += 2.0 * model.pressure * std::log1p(std::abs(u));
    return std::exp(e);
}

MarginalBoundReport marginal_bound_check(const ModelSpec& model, std::size_t n, std::size_t replicas,
                                         const RunContext& ctx, std::size_t bins)
{
    model.validate();
    if (replicas == 0 || n == 0 || bins < 2)
        throw PreconditionError("marginal_bound_check needs replicas, n and bins to be positive");
    std::vector<std::vector<double>> samples(replicas);
    parallel_for(replicas, ctx.workers, [&](std::size_t r) {
        RngStream rng(ctx.seed, replica_stream(ctx.tag, 0, r));
        samples[r] = sample_particles(model, n, rng);
    });
    double extent = 0.0;
    for (const auto& s : samples)
        for (double v : s)
            extent = std::max(extent, std::abs(v));
    extent = std::max(extent, 1e-6) * (1.0 + 1e-9);
    const double width = 2.0 * extent / static_cast<double>(bins);
    std::vector<std::size_t> counts(bins, 0);
    std::size_t total = 0;
    for (const auto& s : samples)
        for (double v : s) {
            auto b = static_cast<std::size_t>((v + extent) / width);
            ++counts[std::min(b, bins - 1)];
            ++total;
        }
    MarginalBoundReport rep;
    rep.samples = total;
    // Bins with fewer than 20 samples are too noisy to constrain C.
    constexpr std::size_t min_count = 20;
    for (std::size_t b = 0; b < bins; ++b) {
        const double centre = -extent + (static_cast<double>(b) + 0.5) * width;
        const double hist = static_cast<double>(counts[b]) / (static_cast<double>(total) * width);
        const double env = marginal_envelope(model, centre);
        rep.bin_centres.push_back(centre);
        rep.histogram.push_back(hist);
        rep.envelope.push_back(env);
        if (counts[b] >= min_count)
            rep.fitted_c = std::max(rep.fitted_c, hist / env);
    }
    rep.finite = std::isfinite(rep.fitted_c) && rep.fitted_c > 0.0;
    return rep;
}

} // namespace edgeld
