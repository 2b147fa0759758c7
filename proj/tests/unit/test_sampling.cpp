#include "edgeld/error.hpp"
#include "edgeld/sampling.hpp"
#include "edgeld/stats.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <vector>

using namespace edgeld;

namespace {

double ks_distance(std::vector<double> x, const std::function<double(double)>& cdf)
{
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = cdf(x[i]);
        d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(f - static_cast<double>(i + 1) / n)});
    }
    return d;
}

// Density of the larger eigenvalue of a 2x2 matrix whose eigenvalues have joint law
// proportional to exp(-(x^2 + y^2)/2) |x - y|^beta, by direct 2D quadrature.
std::vector<double> top_eigenvalue_bin_probabilities(double beta, const std::vector<double>& edges)
{
    auto joint = [beta](long double x, long double y) {
        return std::exp(-(x * x + y * y) / 2.0L) * std::pow(std::fabs(x - y), static_cast<long double>(beta));
    };
    auto marginal = [&](long double m) {
        return oracle::simpson([&](long double y) { return joint(m, y); }, m - 12.0L, m, 400);
    };
    std::vector<double> probs;
    long double total = oracle::simpson(marginal, -10.0L, 10.0L, 2000);
    for (std::size_t b = 0; b + 1 < edges.size(); ++b)
        probs.push_back(static_cast<double>(oracle::simpson(marginal, edges[b], edges[b + 1], 200) / total));
    return probs;
}

double top_eigenvalue_tv(OffdiagConvention convention)
{
    const double beta = 2.0;
    std::vector<double> edges;
    for (double e = -4.0; e <= 6.0 + 1e-12; e += 0.25)
        edges.push_back(e);
    const auto probs = top_eigenvalue_bin_probabilities(beta, edges);
    std::vector<double> hist(probs.size(), 0.0);
    RngStream rng(5);
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
        const auto t = build_dumitriu_edelman(2, beta, rng, convention);
        const double a = t.diag()[0], c = t.diag()[1], b = t.offdiag()[0];
        const double top = 0.5 * (a + c) + std::sqrt(0.25 * (a - c) * (a - c) + b * b);
        const auto it = std::upper_bound(edges.begin(), edges.end(), top);
        if (it != edges.begin() && it != edges.end())
            hist[static_cast<std::size_t>(it - edges.begin()) - 1] += 1.0 / draws;
    }
    double tv = 0.0;
    for (std::size_t b = 0; b < probs.size(); ++b)
        tv += std::abs(probs[b] - hist[b]);
    return 0.5 * tv;
}

} // namespace

TEST_SUITE("sampling")
{
    TEST_CASE("chi density")
    {
        CHECK(chi_density(2.0, 1.0) == doctest::Approx(0.60653065971263342).epsilon(1e-14));
        CHECK(chi_density(3.0, -1.0) == 0.0);
        for (double theta : {0.7, 1.0, 2.0, 5.5}) {
            auto f = [theta](long double x) { return static_cast<long double>(chi_density(theta, static_cast<double>(x))); };
            // Substituting x = u^2 keeps the integrand bounded for theta < 1.
            auto g = [&](long double u) { return f(u * u) * 2.0L * u; };
            CHECK(static_cast<double>(oracle::simpson(g, 0.0L, 4.0L, 20000)) == doctest::Approx(1.0).epsilon(1e-6));
        }
        CHECK_THROWS_AS(chi_density(0.0, 1.0), PreconditionError);
    }

    TEST_CASE("chi variates are positive with second moment theta")
    {
        RngStream rng(9);
        const int n = 1000000;
        double sum2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double x = sample_chi(3.0, rng);
            REQUIRE(x > 0.0);
            sum2 += x * x;
        }
        CHECK(std::abs(sum2 / n - 3.0) <= 0.01);
        CHECK_THROWS_AS(sample_chi(-1.0, rng), PreconditionError);
    }

    TEST_CASE("chi variates for tiny theta stay nonnegative")
    {
        RngStream rng(10);
        for (int i = 0; i < 10000; ++i)
            CHECK(sample_chi(0.01, rng) >= 0.0);
    }

    TEST_CASE("Dumitriu-Edelman shape and degrees of freedom")
    {
        RngStream rng(1);
        const auto one = build_dumitriu_edelman(1, 1.0, rng);
        CHECK(one.size() == 1);
        CHECK(one.offdiag().empty());

        const auto diag_only = build_dumitriu_edelman(6, 0.0, rng);
        for (double b : diag_only.offdiag())
            CHECK(b == 0.0);

        // n = 5, beta = 0.4: theta_i = 1.6, 1.2, 0.8, 0.4, so E[2 b_i^2] = theta_i.
        const std::vector<double> theta{1.6, 1.2, 0.8, 0.4};
        std::vector<double> scaled(4, 0.0), unscaled(4, 0.0);
        const int reps = 200000;
        for (int r = 0; r < reps; ++r) {
            const auto s = build_dumitriu_edelman(5, 0.4, rng, OffdiagConvention::Scaled);
            const auto u = build_dumitriu_edelman(5, 0.4, rng, OffdiagConvention::Unscaled);
            REQUIRE(s.offdiag().size() == 4);
            REQUIRE_FALSE(s.periodic());
            for (int i = 0; i < 4; ++i) {
                scaled[i] += 2.0 * s.offdiag()[i] * s.offdiag()[i] / reps;
                unscaled[i] += u.offdiag()[i] * u.offdiag()[i] / reps;
            }
        }
        for (int i = 0; i < 4; ++i) {
            const double se = std::sqrt(2.0 * theta[i] / reps);
            CHECK(std::abs(scaled[i] - theta[i]) < 5.0 * se);
            CHECK(std::abs(unscaled[i] - theta[i]) < 5.0 * se);
        }
    }

    TEST_CASE("scaled convention reproduces the two-eigenvalue law")
    {
        CHECK(top_eigenvalue_tv(OffdiagConvention::Scaled) <= 0.02);
        CHECK(top_eigenvalue_tv(OffdiagConvention::Unscaled) > 0.05);
    }

    TEST_CASE("Toda-Lax matrix")
    {
        RngStream rng(2);
        const double p = 0.75;
        double sum = 0.0, sum_sq = 0.0;
        std::size_t count = 0;
        for (int r = 0; r < 1000; ++r) {
            const auto t = build_toda_lax(1000, p, rng);
            REQUIRE(t.periodic());
            REQUIRE(t.offdiag().size() == 1000);
            for (double b : t.offdiag()) {
                const double v = 2.0 * b * b;
                sum += v;
                sum_sq += v * v;
                ++count;
            }
        }
        const double mean = sum / static_cast<double>(count);
        const double sd = std::sqrt(sum_sq / static_cast<double>(count) - mean * mean);
        CHECK(std::abs(mean - 2.0 * p) <= 3.0 * sd / std::sqrt(static_cast<double>(count)));
        CHECK_THROWS_AS(build_toda_lax(10, 0.0, rng), PreconditionError);
        CHECK_THROWS_AS(build_toda_lax(10, INFINITY, rng), PreconditionError);
    }

    TEST_CASE("generic model with chi couplings matches Toda-Lax moments and is seeded")
    {
        const double p = 1.0;
        const auto diag = EntryDistribution::standard_gaussian();
        const auto off = EntryDistribution::chi_scaled(2.0 * p, 1.0 / std::sqrt(2.0));
        CHECK(diag.tail_constant() == doctest::Approx(0.5));
        CHECK(off.tail_constant() == doctest::Approx(1.0));
        RngStream a(3), b(3);
        const auto m1 = build_generic(50, diag, off, true, a);
        const auto m2 = build_generic(50, diag, off, true, b);
        CHECK(m1 == m2);
        CHECK(m1.offdiag().size() == 50);
        CHECK(build_generic(50, diag, off, false, a).offdiag().size() == 49);

        RngStream g(4), t(5);
        double generic_sum = 0.0, toda_sum = 0.0, generic_diag = 0.0, toda_diag = 0.0;
        const int reps = 2000;
        for (int r = 0; r < reps; ++r) {
            const auto x = build_generic(100, diag, off, true, g);
            const auto y = build_toda_lax(100, p, t);
            for (std::size_t i = 0; i < 100; ++i) {
                generic_sum += x.offdiag()[i] * x.offdiag()[i];
                toda_sum += y.offdiag()[i] * y.offdiag()[i];
                generic_diag += x.diag()[i] * x.diag()[i];
                toda_diag += y.diag()[i] * y.diag()[i];
            }
        }
        const double m = reps * 100.0;
        CHECK(generic_sum / m == doctest::Approx(toda_sum / m).epsilon(0.01));
        CHECK(generic_diag / m == doctest::Approx(toda_diag / m).epsilon(0.01));

        RngStream r(6);
        CHECK_THROWS_AS(build_generic(5, off, off, false, r), ConfigError);
        CHECK_THROWS_AS(build_generic(5, diag, diag, false, r), ConfigError);
    }

    TEST_CASE("iid particle sampler")
    {
        RngStream rng(7);
        std::vector<double> g(100000), l(100000);
        for (auto& v : g)
            v = sample_iid_particle(PotentialSpec::gaussian(), rng);
        for (auto& v : l)
            v = sample_iid_particle(PotentialSpec(1.0, 1.0), rng);
        CHECK(kolmogorov_pvalue(ks_distance(g, oracle::normal_cdf), g.size()) > 1e-3);
        auto laplace = [](double x) { return x < 0 ? 0.5 * std::exp(x) : 1.0 - 0.5 * std::exp(-x); };
        CHECK(kolmogorov_pvalue(ks_distance(l, laplace), l.size()) > 1e-3);
    }

    TEST_CASE("Metropolis acceptance and detailed balance")
    {
        CHECK(metropolis_acceptance(-1.0) == 1.0);
        CHECK(metropolis_acceptance(0.0) == 1.0);
        CHECK(metropolis_acceptance(1.0) == doctest::Approx(std::exp(-1.0)));
        CHECK(metropolis_acceptance(INFINITY) == 0.0);
        CHECK(metropolis_acceptance(NAN) == 0.0);

        // Three states with energies E, uniform proposals among the other two.
        const std::vector<double> energy{0.3, 1.7, -0.4};
        std::vector<double> pi(3);
        double z = 0.0;
        for (int i = 0; i < 3; ++i)
            z += pi[i] = std::exp(-energy[i]);
        for (auto& v : pi)
            v /= z;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                if (i == j)
                    continue;
                const double pij = 0.5 * metropolis_acceptance(energy[j] - energy[i]);
                const double pji = 0.5 * metropolis_acceptance(energy[i] - energy[j]);
                CHECK(pi[i] * pij == doctest::Approx(pi[j] * pji).epsilon(1e-15));
            }
    }

    TEST_CASE("MCMC at zero pressure samples the product measure")
    {
        const std::size_t n = 5;
        const auto params = GasParameters::high_temperature(n, 0.0, InteractionKind::log(), PotentialSpec::gaussian());
        RngStream rng(8);
        std::vector<double> samples;
        std::vector<std::vector<double>> by_particle(n);
        bool finite = true;
        std::size_t sweep_count = 0;
        McmcOptions opt;
        opt.sweeps = 100000;
        opt.observer = [&](std::size_t, const std::vector<double>& x) {
            if (++sweep_count % 5)
                return;
            finite &= std::isfinite(configuration_energy(params, x));
            for (std::size_t i = 0; i < n; ++i) {
                samples.push_back(x[i]);
                by_particle[i].push_back(x[i]);
            }
        };
        const auto res = mcmc_gas(params, ParticleConfiguration({-1, -0.5, 0, 0.5, 1}), rng, opt);
        CHECK(finite);
        CHECK(res.acceptance_rate > 0.05);
        CHECK(res.acceptance_rate < 0.95);
        CHECK(ks_distance(samples, oracle::normal_cdf) < 0.01);
        const std::size_t m = by_particle[0].size();
        auto mean = [&](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / m; };
        const double m0 = mean(by_particle[0]), m1 = mean(by_particle[1]);
        double c = 0.0, v0 = 0.0, v1 = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            c += (by_particle[0][k] - m0) * (by_particle[1][k] - m1);
            v0 += (by_particle[0][k] - m0) * (by_particle[0][k] - m0);
            v1 += (by_particle[1][k] - m1) * (by_particle[1][k] - m1);
        }
        CHECK(std::abs(c / std::sqrt(v0 * v1)) < 0.02);
    }

    TEST_CASE("MCMC keeps energies finite with repulsion and rejects bad input")
    {
        const auto params = GasParameters::high_temperature(8, 1.0, InteractionKind::riesz(0.5), PotentialSpec::gaussian());
        RngStream rng(9);
        bool finite = true;
        McmcOptions opt;
        opt.sweeps = 500;
        opt.observer = [&](std::size_t, const std::vector<double>& x) {
            finite &= std::isfinite(configuration_energy(params, x));
        };
        const auto res = mcmc_gas(params, ParticleConfiguration({-3, -2, -1, 0, 1, 2, 3, 4}), rng, opt);
        CHECK(finite);
        CHECK(res.final_configuration.size() == 8);
        CHECK_THROWS_AS(mcmc_gas(params, ParticleConfiguration({0, 0, 1, 2, 3, 4, 5, 6}), rng, opt), PreconditionError);
        CHECK_THROWS_AS(mcmc_gas(params, ParticleConfiguration({0, 1}), rng, opt), PreconditionError);
    }

    TEST_CASE("exact iid tail")
    {
        const auto v = PotentialSpec::gaussian();
        const IidTail tail(v);
        CHECK(tail.log_normalizer() == doctest::Approx(0.5 * std::log(2.0 * M_PI)).epsilon(1e-13));
        CHECK(IidTail(PotentialSpec(1.0, 3.0)).log_normalizer() ==
              doctest::Approx(std::log(2.0 * std::tgamma(4.0 / 3.0))).epsilon(1e-12));
        for (double t : {-2.0, -0.3, 0.0, 0.8, 3.0, 7.0})
            CHECK(iid_tail_exact(v, 1, t) == doctest::Approx(oracle::normal_cdf(t)).epsilon(1e-12));
        CHECK(iid_tail_exact(v, 1000, 40.0) == 1.0);
        CHECK(std::exp(tail.log_survival(10.0)) == doctest::Approx(0.5 * std::erfc(10.0 / std::sqrt(2.0))).epsilon(1e-10));

        for (std::size_t n : {2u, 17u, 1000u, 100000u})
            for (double t : {0.5, 2.0, 3.5})
                CHECK(iid_tail_exact(v, n, t) ==
                      doctest::Approx(std::pow(iid_tail_exact(v, 1, t), static_cast<double>(n))).epsilon(1e-12));

        CHECK(iid_tail_exact(v, 1000, std::sqrt(2.0 * std::log(1000.0))) ==
              doctest::Approx(0.90408007563400377).epsilon(1e-11));
        CHECK(iid_tail_exact(v, 10000, std::sqrt(2.0 * std::log(10000.0))) ==
              doctest::Approx(0.91524547615980437).epsilon(1e-11));

        // Deep exceedances are computed without cancellation.
        const double t = 12.0;
        const double direct = 1e6 * 0.5 * std::erfc(t / std::sqrt(2.0));
        CHECK(iid_exceedance_exact(tail, 1000000, t) == doctest::Approx(direct).epsilon(1e-8));
    }

    TEST_CASE("configuration CSV round trip")
    {
        const auto path = std::filesystem::temp_directory_path() / "edgeld_unit_config.csv";
        ParticleConfiguration c({0.25, -1.0 / 3.0, 1e-300, 7.5});
        write_configuration_csv(c, path);
        const auto back = read_configuration_csv(path);
        REQUIRE(back.size() == c.size());
        for (std::size_t i = 0; i < c.size(); ++i)
            CHECK(back.positions()[i] == c.positions()[i]);
        CHECK(configuration_csv_text(c).rfind("i,x\r\n", 0) == 0);
        std::filesystem::remove(path);
    }
}
