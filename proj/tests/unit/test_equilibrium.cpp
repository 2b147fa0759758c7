#include "edgeld/equilibrium.hpp"
#include "edgeld/error.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <vector>

using namespace edgeld;

namespace {

DensityGrid uniform_on_unit_interval()
{
    auto g = DensityGrid::uniform(1.0, 64);
    for (auto& v : g.values)
        v = 0.5;
    return g;
}

double gaussian(double x) { return std::exp(-x * x / 2.0) / std::sqrt(2.0 * M_PI); }

// Piecewise-linear interpolant of the grid values.
long double interpolate(const DensityGrid& g, long double y)
{
    if (y <= g.points.front() || y >= g.points.back())
        return 0.0L;
    const long double pos = (y - g.points.front()) / g.spacing;
    const auto k = static_cast<std::size_t>(pos);
    const long double w = pos - static_cast<long double>(k);
    return (1.0L - w) * g.values[k] + w * g.values[std::min(k + 1, g.size() - 1)];
}

// int g(x - y) rho(y) dy with y = x -+ u^2 on either side of the singularity.
double brute_force_potential(const DensityGrid& g, const InteractionKind& kind, double x)
{
    // The integrand has a finite limit at u = 0 (nonzero when s = 1/2), so evaluate
    // just off the origin there.
    auto at = [](long double u) { return u == 0 ? 1e-30L : u; };
    auto kernel = [&](long double r) {
        return kind.is_log() ? -std::log(r) : std::pow(r, -static_cast<long double>(kind.s()));
    };
    const long double lo = g.points.front(), hi = g.points.back();
    long double total = 0.0L;
    if (x > lo) {
        const long double umax = std::sqrt(static_cast<long double>(x) - lo);
        total += oracle::simpson([&](long double u) { u = at(u); return kernel(u * u) * interpolate(g, x - u * u) * 2 * u; },
                                 0.0L, umax, 400000);
    }
    if (x < hi) {
        const long double umax = std::sqrt(hi - static_cast<long double>(x));
        total += oracle::simpson([&](long double u) { u = at(u); return kernel(u * u) * interpolate(g, x + u * u) * 2 * u; },
                                 0.0L, umax, 400000);
    }
    return static_cast<double>(total);
}

} // namespace

TEST_SUITE("equilibrium")
{
    TEST_CASE("grid basics")
    {
        const auto g = uniform_on_unit_interval();
        CHECK(g.size() == 65);
        CHECK(g.half_width() == 1.0);
        CHECK(g.mass() == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(g.integrate([](double x) { return x * x; }) == doctest::Approx(1.0 / 3.0).epsilon(1e-3));
        CHECK_THROWS_AS(DensityGrid::uniform(0.0, 10), PreconditionError);
    }

    TEST_CASE("interaction potential of the uniform density")
    {
        const auto g = uniform_on_unit_interval();
        CHECK(interaction_potential(g, InteractionKind::log(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(interaction_potential(g, InteractionKind::riesz(0.5), 0.0) == doctest::Approx(2.0).epsilon(1e-12));
        // Outside the support: int_{-1}^{1} -log(3 - y) dy / 2.
        const double expected = 0.5 * ((4.0 * std::log(4.0) - 4.0) - (2.0 * std::log(2.0) - 2.0)) * -1.0;
        CHECK(interaction_potential(g, InteractionKind::log(), 3.0) == doctest::Approx(expected).epsilon(1e-12));
    }

    TEST_CASE("narrow bump acts like a point mass far away")
    {
        auto g = DensityGrid::uniform(0.01, 2);
        g.values = {0.0, 100.0, 0.0};
        CHECK(g.mass() == doctest::Approx(1.0));
        CHECK(interaction_potential(g, InteractionKind::log(), 10.0) == doctest::Approx(-std::log(10.0)).epsilon(1e-6));
    }

    TEST_CASE("interaction potential matches brute-force quadrature")
    {
        std::mt19937_64 gen(31);
        std::uniform_real_distribution<double> shift(-1.0, 1.0), xs(-4.0, 4.0);
        for (int rep = 0; rep < 20; ++rep) {
            auto g = DensityGrid::uniform(4.0, 64);
            const double c = shift(gen);
            for (std::size_t i = 0; i < g.size(); ++i)
                g.values[i] = std::exp(-(g.points[i] - c) * (g.points[i] - c));
            const auto kind = rep % 3 == 0 ? InteractionKind::log() : InteractionKind::riesz(rep % 3 == 1 ? 0.3 : 0.5);
            const double x = xs(gen);
            CHECK(std::abs(interaction_potential(g, kind, x) - brute_force_potential(g, kind, x)) <= 1e-6);
        }
    }

    TEST_CASE("on-grid potential matches pointwise evaluation")
    {
        auto g = DensityGrid::uniform(3.0, 40);
        for (std::size_t i = 0; i < g.size(); ++i)
            g.values[i] = gaussian(g.points[i]);
        for (const auto& kind : {InteractionKind::log(), InteractionKind::riesz(0.4)}) {
            const auto u = interaction_potential_on_grid(g, kind);
            for (std::size_t i = 0; i < g.size(); i += 7)
                CHECK(u[i] == doctest::Approx(interaction_potential(g, kind, g.points[i])).epsilon(1e-12));
        }
    }

    TEST_CASE("zero pressure gives the normalised Boltzmann factor")
    {
        const auto eq = solve_equilibrium(PotentialSpec::gaussian(), InteractionKind::log(), 0.0);
        double err = 0.0;
        for (std::size_t i = 0; i < eq.density.size(); ++i)
            err = std::max(err, std::abs(eq.density.values[i] - gaussian(eq.density.points[i])));
        CHECK(err <= 1e-6);
        CHECK(eq.density_at(0.0) == doctest::Approx(0.3989422804014327).epsilon(1e-6));

        const auto lap = solve_equilibrium(PotentialSpec(1.0, 1.0), InteractionKind::riesz(0.5), 0.0);
        // The kink at 0 limits the trapezoid mass to O(h^2), so compare against the
        // grid-normalised Boltzmann factor and loosely against 1/2.
        double lap_mass = 0.0;
        for (std::size_t i = 0; i < lap.density.size(); ++i)
            lap_mass += (i == 0 || i + 1 == lap.density.size() ? 0.5 : 1.0) * std::exp(-std::abs(lap.density.points[i]));
        lap_mass *= lap.density.spacing;
        for (std::size_t i = 0; i < lap.density.size(); i += 97)
            CHECK(lap.density.values[i] ==
                  doctest::Approx(std::exp(-std::abs(lap.density.points[i])) / lap_mass).epsilon(1e-9));
        CHECK(lap.density_at(0.0) == doctest::Approx(0.5).epsilon(1e-4));
        const auto cubic = solve_equilibrium(PotentialSpec(1.0, 3.0), InteractionKind::log(), 0.0);
        const double z = 2.0 * std::tgamma(4.0 / 3.0);
        double cerr = 0.0;
        for (std::size_t i = 0; i < cubic.density.size(); ++i) {
            const double x = cubic.density.points[i];
            cerr = std::max(cerr, std::abs(cubic.density.values[i] - std::exp(-std::abs(x * x * x)) / z));
        }
        CHECK(cerr <= 1e-6);
    }

    TEST_CASE("Askey-Wimp-Kerov density values")
    {
        CHECK(askey_wimp_kerov_density(1.0, 0.0) == doctest::Approx(0.25397454373696388).epsilon(1e-9));
        CHECK(askey_wimp_kerov_density(0.5, 0.0) == doctest::Approx(0.30429711944987083).epsilon(1e-9));
        CHECK(askey_wimp_kerov_density(2.0, 0.0) == doctest::Approx(0.19947114020071634).epsilon(1e-9));
        CHECK(askey_wimp_kerov_density(1.0, 1.5) == doctest::Approx(0.17711333394432405).epsilon(1e-9));
        CHECK(askey_wimp_kerov_density(0.5, -2.0) == doctest::Approx(0.09554195099266722).epsilon(1e-9));
        CHECK(askey_wimp_kerov_density(3.0, 1.0) == doctest::Approx(0.16131381634609557).epsilon(1e-9));
        CHECK(askey_wimp_kerov_density(1.0, 0.7) == doctest::Approx(askey_wimp_kerov_density(1.0, -0.7)).epsilon(1e-12));
        CHECK_THROWS_AS(askey_wimp_kerov_density(0.0, 0.0), PreconditionError);
        for (double p : {0.5, 1.0, 2.0}) {
            const auto mass = oracle::simpson(
                [p](long double x) { return static_cast<long double>(askey_wimp_kerov_density(p, static_cast<double>(x))); },
                -14.0L, 14.0L, 2800);
            CHECK(static_cast<double>(mass) == doctest::Approx(1.0).epsilon(1e-6));
        }
    }

    TEST_CASE("small pressure approaches the Gaussian")
    {
        const auto eq = solve_equilibrium(PotentialSpec::gaussian(), InteractionKind::log(), 1e-3);
        CHECK(std::abs(eq.density_at(0.0) - 1.0 / std::sqrt(2.0 * M_PI)) < 2e-3);
    }

    TEST_CASE("solver contract at positive pressure")
    {
        for (double p : {0.5, 1.0, 2.0}) {
            const auto eq = solve_equilibrium(PotentialSpec::gaussian(), InteractionKind::log(), p);
            CHECK(eq.residual <= 1e-9);
            CHECK(std::abs(eq.density.mass() - 1.0) <= 1e-8);
            double worst = 0.0;
            for (std::size_t i = 0; i < eq.density.size(); ++i) {
                const double rho = eq.density.values[i];
                CHECK(rho >= 0.0);
                if (rho > 1e-12) {
                    const double x = eq.density.points[i];
                    worst = std::max(worst, std::abs(0.5 * x * x + 2.0 * p * eq.u_potential[i] + std::log(rho) - eq.lambda_eq));
                }
            }
            CHECK(worst <= 1e-9);
            double sup = 0.0;
            for (double x = -3.0; x <= 3.0; x += 0.05)
                sup = std::max(sup, std::abs(eq.density_at(x) - askey_wimp_kerov_density(p, x)));
            CHECK(sup <= 1e-4);
        }
        const auto riesz = solve_equilibrium(PotentialSpec(1.0, 1.0), InteractionKind::riesz(0.5), 1.0);
        CHECK(riesz.residual <= 1e-9);
        CHECK(std::abs(riesz.density.mass() - 1.0) <= 1e-8);
    }

    TEST_CASE("free energy values")
    {
        const auto g = uniform_on_unit_interval();
        CHECK(free_energy(g, [](double) { return 0.0; }, InteractionKind::log(), 0.0) ==
              doctest::Approx(-std::log(2.0)).epsilon(1e-14));
        const auto eq = solve_equilibrium(PotentialSpec::gaussian(), InteractionKind::log(), 0.0);
        // 1/2 - log(2 pi e)/2 = -log(2 pi)/2.
        CHECK(free_energy(eq.density, PotentialSpec::gaussian(), InteractionKind::log(), 0.0) ==
              doctest::Approx(-0.91893853320467274).epsilon(1e-8));
    }

    TEST_CASE("free energy decreases along the iteration and is minimal at the solution")
    {
        for (double p : {0.0, 0.5}) {
            std::vector<double> energies;
            GridConfig cfg;
            cfg.cells = 1024;
            const auto v = PotentialSpec::gaussian();
            const auto kind = InteractionKind::log();
            auto observer = [&](std::size_t, const DensityGrid& d) { energies.push_back(free_energy(d, v, kind, p)); };
            const auto grid = DensityGrid::uniform(default_half_width(v, kind, p), cfg.cells);
            std::vector<double> start(grid.size());
            for (std::size_t i = 0; i < grid.size(); ++i)
                start[i] = std::abs(grid.points[i]) < 2.0 ? 0.25 : 0.0;
            const auto eq = solve_equilibrium(v, kind, p, cfg, start, observer);
            REQUIRE(energies.size() >= 2);
            for (std::size_t k = 1; k < energies.size(); ++k)
                CHECK(energies[k] <= energies[k - 1] + 1e-9);
            const double f_star = free_energy(eq.density, v, kind, p);

            auto trial = grid;
            for (std::size_t i = 0; i < grid.size(); ++i)
                trial.values[i] = 0.5 * std::exp(-std::abs(grid.points[i]));
            trial.values.front() = trial.values.back() = 0.0;
            const double m = trial.mass();
            for (auto& val : trial.values)
                val /= m;
            CHECK(f_star <= free_energy(trial, v, kind, p) + 1e-9);
            trial.values = start;
            const double ms = trial.mass();
            for (auto& val : trial.values)
                val /= ms;
            CHECK(f_star <= free_energy(trial, v, kind, p) + 1e-9);
        }
    }

    TEST_CASE("derivative of the interaction potential is bounded under refinement")
    {
        auto max_slope = [](std::size_t cells) {
            GridConfig cfg;
            cfg.cells = cells;
            const auto eq = solve_equilibrium(PotentialSpec::gaussian(), InteractionKind::log(), 1.0, cfg);
            double m = 0.0;
            for (std::size_t i = 1; i + 1 < eq.u_potential.size(); ++i)
                m = std::max(m, std::abs(eq.u_potential[i + 1] - eq.u_potential[i - 1]) / (2.0 * eq.density.spacing));
            return m;
        };
        const double coarse = max_slope(2048), fine = max_slope(4096);
        CHECK(std::isfinite(fine));
        CHECK(fine / coarse == doctest::Approx(1.0).epsilon(0.05));
    }

    TEST_CASE("edge location")
    {
        const auto eq = solve_equilibrium(PotentialSpec::gaussian(), InteractionKind::log(), 1.0);
        double prev = 0.0;
        for (std::size_t n : {100u, 200u, 1000u, 2000u, 10000u, 20000u, 100000u}) {
            const auto params = GasParameters::high_temperature(n, 1.0, InteractionKind::log(), PotentialSpec::gaussian());
            const double e = solve_edge(params, eq);
            CHECK(std::abs(edge_log_residual(params, eq, e)) <= 1e-10);
            CHECK(e > prev);
            prev = e;
            const double e_div = solve_edge(params, eq, EdgeConvention::DivideByConstant);
            CHECK(std::abs(edge_log_residual(params, eq, e_div, EdgeConvention::DivideByConstant)) <= 1e-10);
        }
        const auto iid = solve_equilibrium(PotentialSpec::gaussian(), InteractionKind::log(), 0.0);
        double last_gap = INFINITY;
        for (double n : {1e3, 1e6, 1e9, 1e12}) {
            const auto params = GasParameters::high_temperature(static_cast<std::size_t>(n), 0.0, InteractionKind::log(),
                                                                PotentialSpec::gaussian());
            const double gap = std::abs(solve_edge(params, iid) / std::sqrt(2.0 * std::log(n)) - 1.0);
            CHECK(gap < last_gap);
            last_gap = gap;
        }
        CHECK(last_gap < 0.06);
        // Independent fixed point of E^2 = 2 log N - 2 log E - log(2 pi).
        for (double n : {1e3, 1e6, 1e12}) {
            const auto params = GasParameters::high_temperature(static_cast<std::size_t>(n), 0.0, InteractionKind::log(),
                                                                PotentialSpec::gaussian());
            double e = std::sqrt(2.0 * std::log(n));
            for (int it = 0; it < 200; ++it)
                e = std::sqrt(2.0 * std::log(n) - 2.0 * std::log(e) - std::log(2.0 * M_PI));
            CHECK(solve_edge(params, iid) == doctest::Approx(e).epsilon(1e-9));
        }
        const auto one = GasParameters::high_temperature(1, 1.0, InteractionKind::log(), PotentialSpec::gaussian());
        CHECK_THROWS_AS(solve_edge(one, eq), PreconditionError);
    }

    TEST_CASE("save and load round trip")
    {
        GridConfig cfg;
        cfg.cells = 256;
        const auto eq = solve_equilibrium(PotentialSpec::gaussian(), InteractionKind::riesz(0.5), 0.5, cfg);
        const auto base = std::filesystem::temp_directory_path() / "edgeld_unit_eq";
        save_equilibrium(eq, base);
        const auto back = load_equilibrium(base);
        CHECK(back.density.values == eq.density.values);
        CHECK(back.u_potential == eq.u_potential);
        CHECK(back.lambda_eq == eq.lambda_eq);
        CHECK(back.interaction == eq.interaction);
        CHECK(back.pressure == eq.pressure);
        std::filesystem::remove(base.string() + ".csv");
        std::filesystem::remove(base.string() + ".json");
    }
}
