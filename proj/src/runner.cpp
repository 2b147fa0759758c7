#include "edgeld/runner.hpp"

#include "edgeld/edgestats.hpp"
#include "edgeld/equilibrium.hpp"
#include "edgeld/error.hpp"
#include "edgeld/experiments.hpp"
#include "edgeld/io.hpp"
#include "edgeld/sampling.hpp"
#include "edgeld/spectral.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <optional>

namespace edgeld {

using nlohmann::json;

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double two_sided_z(double confidence) { return normal_quantile_two_sided(confidence); }

class Report
{
  public:
    explicit Report(std::string experiment)
        : experiment_(std::move(experiment)), csv_({"experiment", "quantity", "N", "x", "estimate", "ci_lo", "ci_hi"})
    {
    }

    void row(const std::string& quantity, std::optional<std::size_t> n, std::optional<double> x, double estimate,
             std::optional<Interval> ci = std::nullopt)
    {
        csv_.cell(experiment_).cell(quantity);
        if (n)
            csv_.cell(*n);
        else
            csv_.empty();
        if (x)
            csv_.cell(*x);
        else
            csv_.empty();
        csv_.cell(estimate);
        if (ci)
            csv_.cell(ci->lo).cell(ci->hi);
        else
            csv_.empty().empty();
        csv_.end_row();
    }

    void check(std::string name, double target, double estimate, double tolerance, bool pass)
    {
        checks.push_back({std::move(name), target, estimate, tolerance, pass});
    }

    void check_within(std::string name, double target, double estimate, double tolerance)
    {
        check(std::move(name), target, estimate, tolerance, std::abs(estimate - target) <= tolerance);
    }

    void warn(const std::vector<std::string>& w) { warnings.insert(warnings.end(), w.begin(), w.end()); }
    void warn(std::string w) { warnings.push_back(std::move(w)); }

    const std::string& csv_text() const { return csv_.text(); }

    json results = json::object();
    std::vector<Check> checks;
    std::vector<std::string> warnings;
    std::map<std::string, std::string> extra_files;

  private:
    std::string experiment_;
    CsvWriter csv_;
};

json interval_json(const Interval& ci) { return json::array({number_or_null(ci.lo), number_or_null(ci.hi)}); }

json tail_points_json(const std::vector<TailPoint>& points)
{
    json arr = json::array();
    for (const auto& p : points)
        arr.push_back({{"N", p.n},
                       {"threshold", p.threshold},
                       {"successes", p.successes},
                       {"trials", p.trials},
                       {"probability", number_or_null(p.probability)},
                       {"ci", interval_json(p.ci)},
                       {"exact", p.exact},
                       {"censored", p.censored},
                       {"statistic", number_or_null(p.statistic)},
                       {"statistic_ci", interval_json(p.statistic_ci)}});
    return arr;
}

json ld_json(const LDEstimate& e)
{
    return {{"estimator", e.estimator},
            {"x", e.x},
            {"points", tail_points_json(e.points)},
            {"slope", e.slope},
            {"slope_stderr", e.slope_stderr},
            {"intercept", e.intercept},
            {"fitted_points", e.fitted_points},
            {"target", number_or_null(e.target)}};
}

void tail_rows(Report& r, const LDEstimate& e, const std::string& prefix)
{
    for (const auto& p : e.points) {
        r.row(prefix + "probability", p.n, e.x, p.probability, p.ci);
        r.row(prefix + "statistic", p.n, e.x, p.statistic, p.statistic_ci);
    }
}

EquilibriumMeasure equilibrium_for(const ExperimentConfig& cfg, double pressure)
{
    return solve_equilibrium(cfg.model.potential, cfg.model.interaction, pressure, cfg.grid);
}

double model_pressure(const ModelSpec& model) { return model.kind == ModelKind::GasIid ? 0.0 : model.pressure; }

// N int_E^inf rho_eq for the piecewise-linear density.
double tail_mass(const EquilibriumMeasure& eq, double e)
{
    const auto& g = eq.density;
    double mass = 0.0;
    for (std::size_t i = 0; i + 1 < g.size(); ++i) {
        const double a = std::max(g.points[i], e), b = g.points[i + 1];
        if (b <= a)
            continue;
        mass += 0.5 * (eq.density_at(a) + eq.density_at(b)) * (b - a);
    }
    return mass;
}

void run_eq_solve(const ExperimentConfig& cfg, Report& r)
{
    const auto& m = cfg.model;
    const double pressure = model_pressure(m);
    const auto eq = equilibrium_for(cfg, pressure);
    const double mass = eq.density.mass();
    for (std::size_t i = 0; i < eq.density.size(); ++i)
        r.row("rho", std::nullopt, eq.density.points[i], eq.density.values[i]);
    r.row("lambda_eq", std::nullopt, std::nullopt, eq.lambda_eq);
    r.row("residual", std::nullopt, std::nullopt, eq.residual);
    const auto files = equilibrium_file_texts(eq);
    r.extra_files["equilibrium.csv"] = files.first;
    r.extra_files["equilibrium.json"] = files.second;

    json res = {{"lambda_eq", eq.lambda_eq},
                {"residual", eq.residual},
                {"iterations", eq.iterations},
                {"half_width", eq.density.half_width()},
                {"cells", eq.density.size() - 1},
                {"mass", mass},
                {"free_energy", free_energy(eq.density, m.potential, m.interaction, pressure)}};
    r.check("fixed_point_residual", 0.0, eq.residual, cfg.grid.tol, eq.residual <= cfg.grid.tol);
    r.check_within("normalisation", 1.0, mass, 1e-8);
    if (pressure == 0.0 && !m.potential.has_perturbation()) {
        const double a = m.potential.alpha();
        const double log_z = std::log(2.0) + std::lgamma(1.0 + 1.0 / a) - std::log(m.potential.kappa()) / a;
        double sup = 0.0;
        for (std::size_t i = 0; i < eq.density.size(); ++i)
            sup = std::max(sup, std::abs(eq.density.values[i] -
                                         std::exp(-m.potential.value(eq.density.points[i]) - log_z)));
        res["sup_error_vs_exp_minus_v"] = sup;
        r.check("iid_density_sup_error", 0.0, sup, 1e-6, sup <= 1e-6);
    }
    if (pressure > 0.0 && m.interaction.is_log() && m.potential.kappa() == 0.5 && m.potential.alpha() == 2.0 &&
        !m.potential.has_perturbation()) {
        double sup = 0.0;
        for (std::size_t i = 0; i < eq.density.size(); ++i) {
            const double x = eq.density.points[i];
            if (std::abs(x) <= 3.0)
                sup = std::max(sup, std::abs(eq.density.values[i] - askey_wimp_kerov_density(pressure, x)));
        }
        res["sup_error_vs_closed_form"] = sup;
        r.check("closed_form_sup_error_on_[-3,3]", 0.0, sup, 1e-4, sup <= 1e-4);
    }
    r.results = res;
}

void run_edge(const ExperimentConfig& cfg, Report& r)
{
    const double pressure = model_pressure(cfg.model);
    const auto eq = equilibrium_for(cfg, pressure);
    json points = json::array();
    double previous = -INFINITY, worst_residual = 0.0;
    bool monotone = true;
    for (auto n : cfg.n_values) {
        const auto params = cfg.model.gas_parameters(n);
        const double e = solve_edge(params, eq, cfg.edge_convention);
        const double residual = edge_log_residual(params, eq, e, cfg.edge_convention);
        const double asym = params.potential.typical_max(static_cast<double>(n));
        const double mass = static_cast<double>(n) * tail_mass(eq, e);
        r.row("E_N", n, std::nullopt, e);
        r.row("E_N_asymptotic", n, std::nullopt, asym);
        r.row("N_tail_mass", n, std::nullopt, mass);
        points.push_back({{"N", n},
                          {"E_N", e},
                          {"log_residual", residual},
                          {"asymptotic", asym},
                          {"ratio_to_asymptotic", e / asym},
                          {"scale", params.potential.gradient(e)},
                          {"N_tail_mass", mass}});
        worst_residual = std::max(worst_residual, std::abs(residual));
        monotone = monotone && e > previous;
        previous = e;
    }
    r.results = {{"lambda_eq", eq.lambda_eq}, {"points", points}};
    r.check("edge_equation_residual", 0.0, worst_residual, 1e-10, worst_residual <= 1e-10);
    r.check("edge_increasing_in_N", 1.0, monotone ? 1.0 : 0.0, 0.0, monotone);
}

void run_sample_matrix(const ExperimentConfig& cfg, const RunContext& ctx, Report& r)
{
    if (!cfg.model.is_matrix())
        throw PreconditionError("sample-matrix needs a matrix model (gas-matrix or matrix-generic)");
    std::vector<double> lmax(cfg.replicas), lower(cfg.replicas), upper(cfg.replicas), dense_gap(cfg.replicas, 0.0);
    const bool dense = cfg.n <= dense_oracle_max_size;
    std::string first;
    parallel_for(cfg.replicas, ctx.workers, [&](std::size_t k) {
        RngStream rng(ctx.seed, replica_stream(ctx.tag, 0, k));
        const auto t = sample_matrix(cfg.model, cfg.n, rng);
        lmax[k] = lambda_max(t);
        const auto b = spectral_bounds(t);
        lower[k] = b.lower;
        upper[k] = b.upper;
        if (dense)
            dense_gap[k] = std::abs(lmax[k] - dense_spectrum_oracle(t).back());
        if (k == 0)
            first = matrix_csv_text(t);
    });
    r.extra_files["matrix_0.csv"] = first;
    std::size_t violations = 0;
    double worst_gap = 0.0;
    const double scale = std::sqrt(2.0 * std::log(static_cast<double>(cfg.n)));
    json rows = json::array();
    for (std::size_t k = 0; k < cfg.replicas; ++k) {
        if (!(lower[k] <= lmax[k] && lmax[k] <= upper[k]))
            ++violations;
        worst_gap = std::max(worst_gap, dense_gap[k]);
        r.row("lambda_max", cfg.n, std::nullopt, lmax[k], Interval{lower[k], upper[k]});
        rows.push_back({{"replica", k}, {"lambda_max", lmax[k]}, {"normalised", lmax[k] / scale},
                        {"lower", lower[k]}, {"upper", upper[k]}});
    }
    r.results = {{"N", cfg.n}, {"replicas", rows}};
    r.check("gerschgorin_sandwich_violations", 0.0, static_cast<double>(violations), 0.0, violations == 0);
    if (dense) {
        r.results["max_dense_gap"] = worst_gap;
        r.check("lambda_max_vs_dense", 0.0, worst_gap, 1e-9, worst_gap <= 1e-9);
    }
}

void run_sample_gas(const ExperimentConfig& cfg, const RunContext& ctx, Report& r)
{
    std::vector<double> xmax(cfg.replicas);
    std::string first;
    parallel_for(cfg.replicas, ctx.workers, [&](std::size_t k) {
        RngStream rng(ctx.seed, replica_stream(ctx.tag, 0, k));
        auto x = sample_particles(cfg.model, cfg.n, rng);
        const ParticleConfiguration config(std::move(x));
        xmax[k] = config.x_max();
        if (k == 0)
            first = configuration_csv_text(config);
    });
    r.extra_files["configuration_0.csv"] = first;
    const double loc = location_scale(cfg.model, cfg.n);
    for (std::size_t k = 0; k < cfg.replicas; ++k)
        r.row("x_max", cfg.n, std::nullopt, xmax[k]);
    const auto marginal = marginal_bound_check(cfg.model, cfg.n, cfg.replicas, ctx);
    json bins = json::array();
    for (std::size_t b = 0; b < marginal.bin_centres.size(); ++b) {
        r.row("marginal_density", cfg.n, marginal.bin_centres[b], marginal.histogram[b]);
        bins.push_back({marginal.bin_centres[b], marginal.histogram[b], marginal.envelope[b]});
    }
    r.row("marginal_constant", cfg.n, std::nullopt, marginal.fitted_c);
    r.results = {{"N", cfg.n},
                 {"location_scale", loc},
                 {"x_max", xmax},
                 {"marginal", {{"fitted_c", marginal.fitted_c}, {"samples", marginal.samples}, {"bins", bins}}}};
    r.check("marginal_constant_finite", 1.0, marginal.fitted_c, 0.0, marginal.finite);
}

TailOptions tail_options(const ExperimentConfig& cfg) { return {cfg.confidence, cfg.stratify}; }

// Riesz interactions come with two competing thresholds x0 in the literature; both
// are reported and neither is enforced.
void report_riesz_thresholds(const ExperimentConfig& cfg, Report& r)
{
    if (cfg.model.interaction.is_log())
        return;
    const double s = cfg.model.interaction.s();
    r.row("riesz_x0_s_over_1ps", std::nullopt, std::nullopt, s / (1.0 + s));
    r.row("riesz_x0_2s_over_1ps", std::nullopt, std::nullopt, 2.0 * s / (1.0 + s));
    r.results["riesz_x0"] = json::object({{"s_over_1ps", s / (1.0 + s)}, {"2s_over_1ps", 2.0 * s / (1.0 + s)}});
}

void run_ld_right(const ExperimentConfig& cfg, const RunContext& ctx, Report& r)
{
    const auto est = estimate_right_tail(cfg.model, cfg.x, cfg.n_values, cfg.replicas, ctx, tail_options(cfg));
    tail_rows(r, est, "");
    const double z = two_sided_z(cfg.confidence);
    r.row("slope", std::nullopt, cfg.x, est.slope,
          Interval{est.slope - z * est.slope_stderr, est.slope + z * est.slope_stderr});
    r.row("target", std::nullopt, cfg.x, est.target);
    r.results = ld_json(est);
    r.warn(est.warnings);
    report_riesz_thresholds(cfg, r);
    if (std::isfinite(est.target) && est.fitted_points >= 2)
        r.check_within("ld_right_slope", est.target, est.slope, 0.10);
}

void run_ld_left(const ExperimentConfig& cfg, const RunContext& ctx, Report& r)
{
    const auto est = estimate_left_tail(cfg.model, cfg.x, cfg.n_values, cfg.replicas, ctx, tail_options(cfg));
    tail_rows(r, est, "");
    r.row("target", std::nullopt, cfg.x, est.target);
    r.results = ld_json(est);
    r.warn(est.warnings);
    if (!est.points.empty() && est.points.back().exact) {
        bool increasing = true;
        for (std::size_t k = 1; k < est.points.size(); ++k)
            increasing = increasing && est.points[k].statistic > est.points[k - 1].statistic;
        r.check("ld_left_increasing", 1.0, increasing ? 1.0 : 0.0, 0.0, increasing);
        r.check_within("ld_left_largest_N", est.target, est.points.back().statistic, 0.05);
        if (!cfg.model.interaction.is_log()) {
            // For Riesz the left log-probability only has to outgrow log N: -log p / log N
            // = N^stat / log N must increase.
            bool faster = true;
            double prev = 0.0;
            for (const auto& pt : est.points) {
                const double log_n = std::log(static_cast<double>(pt.n));
                const double ratio = std::pow(static_cast<double>(pt.n), pt.statistic) / log_n;
                faster = faster && ratio > prev;
                prev = ratio;
            }
            r.check("ld_left_riesz_beyond_log_n", 1.0, faster ? 1.0 : 0.0, 0.0, faster);
        }
    }
    report_riesz_thresholds(cfg, r);
}

void run_moderate(const ExperimentConfig& cfg, const RunContext& ctx, Report& r)
{
    const auto est = estimate_moderate(cfg.model, cfg.gamma, cfg.x, cfg.n_values, cfg.replicas, ctx, tail_options(cfg));
    tail_rows(r, est.right, "right_");
    tail_rows(r, est.left, "left_");
    r.row("target", std::nullopt, cfg.x, est.target);
    r.results = {{"gamma", est.gamma},
                 {"x", est.x},
                 {"speed_exponent", est.speed_exponent},
                 {"target", est.target},
                 {"right", ld_json(est.right)},
                 {"left", ld_json(est.left)}};
    r.warn(est.right.warnings);
    r.warn(est.left.warnings);
    report_riesz_thresholds(cfg, r);
    if (!est.right.points.empty() && !est.right.points.back().censored)
        r.check_within("moderate_right_largest_N", est.target, est.right.points.back().statistic, 0.10);
}

void run_truncation(const ExperimentConfig& cfg, const RunContext& ctx, Report& r)
{
    const auto rows = exp_equivalence_scan(cfg.model, cfg.epsilons, cfg.n, cfg.replicas, ctx);
    json arr = json::array();
    std::size_t violations = 0;
    for (const auto& row : rows) {
        r.row("max_discrepancy", cfg.n, row.epsilon, row.max_discrepancy);
        r.row("mean_discrepancy", cfg.n, row.epsilon, row.mean_discrepancy);
        r.row("bound", cfg.n, row.epsilon, row.bound);
        arr.push_back({{"epsilon", row.epsilon},
                       {"threshold", row.threshold},
                       {"max_discrepancy", row.max_discrepancy},
                       {"mean_discrepancy", row.mean_discrepancy},
                       {"bound", row.bound},
                       {"violations", row.violations}});
        violations += row.violations;
    }
    r.results = {{"N", cfg.n}, {"rows", arr}};
    r.check("truncation_bound_violations", 0.0, static_cast<double>(violations), 0.0, violations == 0);
}

void run_blocks(const ExperimentConfig& cfg, const RunContext& ctx, Report& r)
{
    const auto scan = dmax_tail_scan(cfg.model, cfg.epsilon, cfg.d_values, cfg.n, cfg.replicas, ctx);
    const auto keep = coupling_keep_probabilities(cfg.model, cfg.n, cfg.epsilon);
    json arr = json::array();
    std::size_t outside = 0;
    double p_one = NAN;
    // Every d is compared with its exact value, so the interval is Bonferroni-widened.
    const double joint = 1.0 - (1.0 - cfg.confidence) / static_cast<double>(std::max<std::size_t>(1, scan.rows.size()));
    for (const auto& row : scan.rows) {
        r.row("P_dmax_ge_d", cfg.n, static_cast<double>(row.d), row.probability, row.ci);
        r.row("log_ratio", cfg.n, static_cast<double>(row.d), row.log_ratio);
        json item = {{"d", row.d},
                     {"count", row.count},
                     {"probability", row.probability},
                     {"ci", interval_json(row.ci)},
                     {"log_ratio", row.log_ratio},
                     {"censored", row.censored}};
        if (!keep.empty()) {
            const double exact = dmax_exceedance_exact(keep, row.d);
            const auto ci = wilson_interval(row.count, row.trials, joint);
            r.row("P_dmax_ge_d_exact", cfg.n, static_cast<double>(row.d), exact);
            item["exact"] = exact;
            if (exact < ci.lo || exact > ci.hi)
                ++outside;
        }
        if (row.d == 1)
            p_one = row.probability;
        arr.push_back(item);
    }
    r.row("slope", cfg.n, std::nullopt, scan.slope);
    r.results = {{"N", cfg.n}, {"epsilon", cfg.epsilon}, {"rows", arr}, {"slope", scan.slope},
                 {"fitted_points", scan.fitted_points}, {"proof_exponent_slope", -cfg.epsilon * cfg.epsilon}};
    if (std::isfinite(p_one))
        r.check_within("P_dmax_ge_1", 1.0, p_one, 0.0);
    if (!keep.empty())
        r.check("dmax_matches_exact_run_length_law", 0.0, static_cast<double>(outside), 0.0, outside == 0);
}

void run_edge_poisson(const ExperimentConfig& cfg, const RunContext& ctx, Report& r)
{
    const auto eq = equilibrium_for(cfg, model_pressure(cfg.model));
    const auto setup = edge_setup(cfg.model, cfg.n, eq, cfg.edge_convention);
    const auto study = edge_count_study(cfg.model, setup, cfg.replicas, ctx, cfg.windows, cfg.confidence);
    const auto& ne = study.no_exceedance;
    r.row("no_exceedance", cfg.n, std::nullopt, ne.probability, ne.ci);
    if (std::isfinite(ne.exact))
        r.row("no_exceedance_exact", cfg.n, std::nullopt, ne.exact);
    const double z = two_sided_z(cfg.confidence);
    json windows = json::array();
    std::vector<std::string> header = {"replica", "no_exceedance"};
    for (const auto& w : study.windows) {
        const auto label = w.window.label();
        header.push_back("count" + label);
        r.row("mean_count" + label, cfg.n, w.window.lo, w.mean,
              Interval{w.mean - z * w.mean_stderr, w.mean + z * w.mean_stderr});
        r.row("set_mass" + label, cfg.n, w.window.lo, w.window.mass());
        r.row("poisson_p_value" + label, cfg.n, w.window.lo, w.test.p_value);
        windows.push_back({{"window", json::array({w.window.lo, number_or_null(w.window.hi)})},
                           {"set_mass", w.window.mass()},
                           {"mean", w.mean},
                           {"mean_stderr", w.mean_stderr},
                           {"variance", w.test.variance},
                           {"chi_square", w.test.statistic},
                           {"dof", w.test.dof},
                           {"p_value", w.test.p_value},
                           {"observed", w.test.observed},
                           {"expected", w.test.expected},
                           {"degenerate", w.test.degenerate}});
        // Windows reaching below the edge converge slowly in N (the density there decays
        // at rate V'(E) - 2P/E rather than V'(E)), so only upper windows carry checks.
        if (std::isinf(w.window.hi) && w.window.lo >= 0.0) {
            const bool main_window = w.window.lo == 0.0;
            const double tol =
                main_window ? 0.07 : 3.0 * std::sqrt(w.window.mass() / static_cast<double>(cfg.replicas));
            r.check_within("mean_count" + label, w.window.mass(), w.mean, tol);
            if (cfg.replicas >= 200)
                r.check("poisson_p_value" + label, 0.001, w.test.p_value, 0.0, w.test.p_value > 0.001);
        }
    }
    CsvWriter counts(header);
    // Per-replica counts; the windows share the replicas of the no-exceedance estimate.
    for (std::size_t k = 0; k < cfg.replicas; ++k) {
        counts.cell(k).cell(study.below[k] ? 1 : 0);
        for (const auto& w : study.windows)
            counts.cell(w.counts[k]);
        counts.end_row();
    }
    r.extra_files["counts.csv"] = counts.text();
    r.results = {{"N", cfg.n},
                 {"E_N", setup.e_n},
                 {"scale", setup.scale},
                 {"asymptotic", setup.asymptotic},
                 {"lambda_eq", setup.lambda_eq},
                 {"no_exceedance",
                  {{"successes", ne.successes},
                   {"replicas", ne.replicas},
                   {"probability", ne.probability},
                   {"ci", interval_json(ne.ci)},
                   {"target", ne.target},
                   {"exact", number_or_null(ne.exact)}}},
                 {"windows", windows}};
    r.check_within("no_exceedance_vs_inverse_e", ne.target, ne.probability, 0.03);
}

void run_tail_exponent(const ExperimentConfig& cfg, const RunContext& ctx, Report& r)
{
    const auto statistic = make_statistic(cfg.statistic);
    const auto est = tail_exponent(statistic, cfg.levels, cfg.replicas, ctx);
    for (std::size_t j = 0; j < est.levels.size(); ++j)
        r.row("log_survival", std::nullopt, est.levels[j], est.log_survival[j]);
    const double z = two_sided_z(cfg.confidence);
    r.row("c_hat", std::nullopt, std::nullopt, est.c_hat,
          Interval{est.c_hat - z * est.c_stderr, est.c_hat + z * est.c_stderr});
    r.results = {{"statistic", est.statistic},
                 {"levels", est.levels},
                 {"counts", est.counts},
                 {"log_survival", est.log_survival},
                 {"c_hat", est.c_hat},
                 {"c_stderr", est.c_stderr},
                 {"log_coefficient", est.log_coefficient},
                 {"dropped_levels", est.dropped_levels},
                 {"bulk_levels", est.bulk_levels}};
    if (cfg.statistic.kind == "gaussian_l1")
        r.check("l1_tail_constant_below_gaussian", 0.25, est.c_hat, 0.05, est.c_hat <= 0.3);
    else
        r.check_within("gaussian_tail_constant", 0.5, est.c_hat, 0.05);
}

std::string sha1_hex(std::string_view text)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    EVP_MD_CTX* md = EVP_MD_CTX_new();
    if (!md || EVP_DigestInit_ex(md, EVP_sha1(), nullptr) != 1 ||
        EVP_DigestUpdate(md, text.data(), text.size()) != 1 || EVP_DigestFinal_ex(md, digest, &length) != 1) {
        EVP_MD_CTX_free(md);
        throw Error("SHA-1 digest failed");
    }
    EVP_MD_CTX_free(md);
    std::string hex;
    char buf[3];
    for (unsigned int i = 0; i < length; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", digest[i]);
        hex += buf;
    }
    return hex;
}

} // namespace

std::uint64_t stream_tag(Experiment experiment) { return static_cast<std::uint64_t>(experiment) + 1; }

std::string config_hash(const ExperimentConfig& config)
{
    const auto text = config.echo_json();
    std::string blob = "blob " + std::to_string(text.size());
    blob.push_back('\0');
    blob += text;
    return sha1_hex(blob);
}

RunArtifacts run_experiment(const ExperimentConfig& config, std::size_t workers)
{
    const auto start = std::chrono::steady_clock::now();
    const RunContext ctx{config.seed, std::max<std::size_t>(1, workers), stream_tag(config.experiment)};
    Report r(experiment_name(config.experiment));
    switch (config.experiment) {
    case Experiment::EqSolve:
        run_eq_solve(config, r);
        break;
    case Experiment::Edge:
        run_edge(config, r);
        break;
    case Experiment::SampleMatrix:
        run_sample_matrix(config, ctx, r);
        break;
    case Experiment::SampleGas:
        run_sample_gas(config, ctx, r);
        break;
    case Experiment::LdRight:
        run_ld_right(config, ctx, r);
        break;
    case Experiment::LdLeft:
        run_ld_left(config, ctx, r);
        break;
    case Experiment::Moderate:
        run_moderate(config, ctx, r);
        break;
    case Experiment::Truncation:
        run_truncation(config, ctx, r);
        break;
    case Experiment::Blocks:
        run_blocks(config, ctx, r);
        break;
    case Experiment::EdgePoisson:
        run_edge_poisson(config, ctx, r);
        break;
    case Experiment::TailExponent:
        run_tail_exponent(config, ctx, r);
        break;
    }
    RunArtifacts out;
    out.results_csv = r.csv_text();
    out.checks = r.checks;
    out.warnings = r.warnings;
    out.extra_files = r.extra_files;
    out.config_hash = config_hash(config);
    out.workers = ctx.workers;

    json checks = json::array();
    for (const auto& c : out.checks)
        checks.push_back({{"name", c.name},
                          {"target", number_or_null(c.target)},
                          {"estimate", number_or_null(c.estimate)},
                          {"tolerance", number_or_null(c.tolerance)},
                          {"pass", c.pass}});
    json summary = {
        {"config_echo", json::parse(config.echo_json())},
        {"provenance",
         {{"seed", config.seed},
          {"config_hash", out.config_hash},
          {"stream_tag", ctx.tag},
          {"stream_id_layout", "(tag << 56) ^ (point << 36) ^ replica"}}},
        {"results", r.results},
        {"checks", checks},
        {"warnings", out.warnings},
    };
    out.summary_json = summary.dump(2);
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

void write_artifacts(const RunArtifacts& artifacts, const std::filesystem::path& dir)
{
    json summary = json::parse(artifacts.summary_json);
    summary["timing"] = {{"seconds", artifacts.seconds}, {"workers", artifacts.workers}};
    AtomicFileSet files;
    files.stage(dir / "results.csv", artifacts.results_csv);
    for (const auto& [name, text] : artifacts.extra_files)
        files.stage(dir / name, text);
    files.stage(dir / "summary.json", summary.dump(2) + "\n");
    files.commit();
}

int exit_code_for(const std::exception_ptr& error)
{
    try {
        std::rethrow_exception(error);
    } catch (const ConfigError&) {
        return ExitConfig;
    } catch (const PreconditionError&) {
        return ExitPrecondition;
    } catch (const ConvergenceError&) {
        return ExitConvergence;
    } catch (const IoError&) {
        return ExitIo;
    } catch (const std::filesystem::filesystem_error&) {
        return ExitIo;
    } catch (...) {
        return ExitOther;
    }
}

std::string exit_code_help()
{
    return "Exit codes:\n"
           "  0  success (checks may still fail; see summary.json)\n"
           "  1  unexpected error\n"
           "  2  configuration error (syntax, unknown key, out-of-range value)\n"
           "  3  precondition violated (e.g. an unsupported model combination)\n"
           "  4  numerical routine did not converge\n"
           "  5  input/output error\n";
}

} // namespace edgeld
