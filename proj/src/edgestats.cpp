#include "edgeld/edgestats.hpp"

#include "edgeld/error.hpp"
#include "edgeld/io.hpp"
#include "edgeld/sampling.hpp"
#include "edgeld/spectral.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>

namespace edgeld {

std::size_t EdgePointProcess::count(double lo, double hi) const
{
    return static_cast<std::size_t>(
        std::count_if(atoms.begin(), atoms.end(), [lo, hi](double a) { return a >= lo && a < hi; }));
}

EdgePointProcess edge_process(std::span<const double> positions, const PotentialSpec& potential, double e_n)
{
    const double scale = potential.gradient(e_n);
    if (!(scale > 0.0))
        throw PreconditionError("edge_process: V'(E_N) must be positive, got " + format_double(scale));
    EdgePointProcess p;
    p.e_n = e_n;
    p.scale = scale;
    p.atoms.reserve(positions.size());
    for (double x : positions)
        p.atoms.push_back(scale * (x - e_n));
    return p;
}

EdgePointProcess edge_process(const ParticleConfiguration& config, const GasParameters& params,
                              const EquilibriumMeasure& eq, EdgeConvention convention)
{
    if (config.size() != params.n)
        throw PreconditionError("edge_process: configuration has " + std::to_string(config.size()) +
                                " particles, parameters say " + std::to_string(params.n));
    // solve_edge needs N >= 2; a single particle is centred on itself.
    const double e_n = params.n < 2 ? config.x_max() : solve_edge(params, eq, convention);
    return edge_process(config.positions(), params.potential, e_n);
}

double CountWindow::mass() const
{
    if (!(lo < hi))
        return 0.0;
    return std::exp(-lo) - (std::isinf(hi) ? 0.0 : std::exp(-hi));
}

std::string CountWindow::label() const
{
    return "[" + format_double(lo) + "," + format_double(hi) + ")";
}

std::vector<CountWindow> default_count_windows()
{
    return {{0.0, INFINITY}, {0.5, INFINITY}, {-0.5, 0.5}};
}

std::size_t matrix_window_count(const TridiagonalMatrix& t, double e_n, double scale, const CountWindow& window)
{
    const std::size_t below_lo = sturm_count(t, e_n + window.lo / scale);
    const std::size_t below_hi = std::isinf(window.hi) ? t.size() : sturm_count(t, e_n + window.hi / scale);
    return below_hi >= below_lo ? below_hi - below_lo : 0;
}

PoissonTestReport poisson_count_test(std::span<const std::size_t> counts, double set_mass)
{
    if (counts.size() < 200)
        throw PreconditionError("poisson_count_test needs at least 200 replicas, got " + std::to_string(counts.size()));
    if (!(set_mass >= 0.0) || !std::isfinite(set_mass))
        throw PreconditionError("poisson_count_test: set mass must be finite and nonnegative");
    PoissonTestReport rep;
    rep.replicas = counts.size();
    rep.set_mass = set_mass;
    const double n = static_cast<double>(counts.size());
    double sum = 0.0, sum2 = 0.0;
    std::size_t max_count = 0;
    for (auto c : counts) {
        sum += static_cast<double>(c);
        sum2 += static_cast<double>(c) * static_cast<double>(c);
        max_count = std::max(max_count, c);
    }
    rep.mean = sum / n;
    rep.variance = (sum2 - n * rep.mean * rep.mean) / (n - 1.0);

    if (set_mass == 0.0) {
        rep.degenerate = true;
        rep.p_value = max_count == 0 ? 1.0 : 0.0;
        return rep;
    }
    std::vector<std::size_t> histogram(max_count + 1, 0);
    for (auto c : counts)
        ++histogram[c];
    auto observed_at = [&](std::size_t k) { return k < histogram.size() ? histogram[k] : 0; };
    auto observed_above = [&](std::size_t k) {
        std::size_t s = 0;
        for (std::size_t j = k + 1; j < histogram.size(); ++j)
            s += histogram[j];
        return s;
    };
    constexpr double min_expected = 5.0;
    std::size_t start = 0;
    double acc_expected = 0.0;
    std::size_t acc_observed = 0;
    for (std::size_t k = 0;; ++k) {
        const double log_pk = -set_mass + static_cast<double>(k) * std::log(set_mass) - std::lgamma(k + 1.0);
        acc_expected += n * std::exp(log_pk);
        acc_observed += observed_at(k);
        // P(X > k) = P(k + 1, mu), the regularised lower incomplete gamma function.
        const double tail = n * boost::math::gamma_p(static_cast<double>(k + 1), set_mass);
        if (tail < min_expected) {
            rep.cell_start.push_back(start);
            rep.expected.push_back(acc_expected + tail);
            rep.observed.push_back(acc_observed + observed_above(k));
            break;
        }
        if (acc_expected >= min_expected) {
            rep.cell_start.push_back(start);
            rep.expected.push_back(acc_expected);
            rep.observed.push_back(acc_observed);
            start = k + 1;
            acc_expected = 0.0;
            acc_observed = 0;
        }
    }
    // A short final cell is folded into its predecessor.
    if (rep.expected.size() >= 2 && rep.expected.back() < min_expected) {
        rep.expected[rep.expected.size() - 2] += rep.expected.back();
        rep.observed[rep.observed.size() - 2] += rep.observed.back();
        rep.expected.pop_back();
        rep.observed.pop_back();
        rep.cell_start.pop_back();
    }
    for (std::size_t i = 0; i < rep.expected.size(); ++i) {
        const double d = static_cast<double>(rep.observed[i]) - rep.expected[i];
        rep.statistic += d * d / rep.expected[i];
    }
    rep.dof = static_cast<double>(rep.expected.size()) - 1.0;
    if (rep.dof < 1.0) {
        rep.degenerate = true;
        rep.p_value = 1.0;
    } else {
        rep.p_value = chi_square_sf(rep.statistic, rep.dof);
    }
    return rep;
}

EdgeSetup edge_setup(const ModelSpec& model, std::size_t n, const EquilibriumMeasure& eq, EdgeConvention convention)
{
    model.validate();
    if (model.kind == ModelKind::MatrixGeneric)
        throw PreconditionError("edge statistics need a gas model; matrix-generic has no equilibrium measure");
    const GasParameters params = model.gas_parameters(n);
    if (std::abs(eq.pressure - params.pressure) > 1e-12 || !(eq.interaction == params.interaction) ||
        eq.kappa != params.potential.kappa() || eq.alpha != params.potential.alpha())
        throw PreconditionError("edge_setup: equilibrium measure was computed for different model parameters");
    EdgeSetup s;
    s.n = n;
    s.convention = convention;
    s.e_n = solve_edge(params, eq, convention);
    s.scale = params.potential.gradient(s.e_n);
    s.asymptotic = params.potential.typical_max(static_cast<double>(n));
    s.lambda_eq = eq.lambda_eq;
    return s;
}

namespace {

struct ReplicaOutcome
{
    bool below = false;
    std::vector<std::size_t> counts;
};

ReplicaOutcome run_replica(const ModelSpec& model, const EdgeSetup& setup, const std::vector<CountWindow>& windows,
                           RngStream& rng)
{
    ReplicaOutcome out;
    out.counts.resize(windows.size());
    if (model.is_matrix()) {
        const auto t = sample_matrix(model, setup.n, rng);
        out.below = !exceeds(t, setup.e_n);
        for (std::size_t w = 0; w < windows.size(); ++w)
            out.counts[w] = matrix_window_count(t, setup.e_n, setup.scale, windows[w]);
        return out;
    }
    const auto x = sample_particles(model, setup.n, rng);
    out.below = std::all_of(x.begin(), x.end(), [&](double v) { return v < setup.e_n; });
    const auto process = edge_process(x, model.potential, setup.e_n);
    for (std::size_t w = 0; w < windows.size(); ++w)
        out.counts[w] = process.count(windows[w].lo, windows[w].hi);
    return out;
}

NoExceedance summarise_no_exceedance(const ModelSpec& model, const EdgeSetup& setup,
                                     const std::vector<ReplicaOutcome>& outcomes, double confidence)
{
    NoExceedance ne;
    ne.replicas = outcomes.size();
    ne.successes = static_cast<std::size_t>(
        std::count_if(outcomes.begin(), outcomes.end(), [](const ReplicaOutcome& o) { return o.below; }));
    ne.probability = static_cast<double>(ne.successes) / static_cast<double>(ne.replicas);
    ne.ci = wilson_interval(ne.successes, ne.replicas, confidence);
    ne.target = std::exp(-1.0);
    if (model.kind == ModelKind::GasIid)
        ne.exact = iid_tail_exact(model.potential, setup.n, setup.e_n);
    return ne;
}

std::vector<ReplicaOutcome> run_replicas(const ModelSpec& model, const EdgeSetup& setup, std::size_t replicas,
                                         const RunContext& ctx, const std::vector<CountWindow>& windows)
{
    model.validate();
    if (replicas == 0)
        throw PreconditionError("edge statistics need at least one replica");
    std::vector<ReplicaOutcome> outcomes(replicas);
    parallel_for(replicas, ctx.workers, [&](std::size_t r) {
        RngStream rng(ctx.seed, replica_stream(ctx.tag, 0, r));
        outcomes[r] = run_replica(model, setup, windows, rng);
    });
    return outcomes;
}

} // namespace

NoExceedance no_exceedance_probability(const ModelSpec& model, const EdgeSetup& setup, std::size_t replicas,
                                       const RunContext& ctx, double confidence)
{
    const auto outcomes = run_replicas(model, setup, replicas, ctx, {});
    return summarise_no_exceedance(model, setup, outcomes, confidence);
}

EdgeStudy edge_count_study(const ModelSpec& model, const EdgeSetup& setup, std::size_t replicas,
                           const RunContext& ctx, const std::vector<CountWindow>& windows, double confidence)
{
    const auto outcomes = run_replicas(model, setup, replicas, ctx, windows);
    EdgeStudy study;
    study.setup = setup;
    study.no_exceedance = summarise_no_exceedance(model, setup, outcomes, confidence);
    for (const auto& o : outcomes)
        study.below.push_back(o.below ? 1 : 0);
    for (std::size_t w = 0; w < windows.size(); ++w) {
        WindowCounts wc;
        wc.window = windows[w];
        wc.counts.reserve(replicas);
        double sum = 0.0, sum2 = 0.0;
        for (const auto& o : outcomes) {
            wc.counts.push_back(o.counts[w]);
            sum += static_cast<double>(o.counts[w]);
            sum2 += static_cast<double>(o.counts[w]) * static_cast<double>(o.counts[w]);
        }
        const double n = static_cast<double>(replicas);
        wc.mean = sum / n;
        const double var = replicas > 1 ? (sum2 - n * wc.mean * wc.mean) / (n - 1.0) : 0.0;
        wc.mean_stderr = std::sqrt(std::max(var, 0.0) / n);
        if (replicas >= 200)
            wc.test = poisson_count_test(wc.counts, wc.window.mass());
        study.windows.push_back(std::move(wc));
    }
    return study;
}

} // namespace edgeld
