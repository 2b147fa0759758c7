#include "edgeld/error.hpp"
#include "edgeld/model.hpp"
#include "edgeld/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

using namespace edgeld;

TEST_SUITE("model")
{
    TEST_CASE("potential values and derivative")
    {
        CHECK(PotentialSpec(0.5, 2.0).value(2.0) == 2.0);
        CHECK(PotentialSpec(1.0, 2.0).value(0.0) == 0.0);
        CHECK(PotentialSpec(1.0, 3.0).value(-2.0) == doctest::Approx(8.0).epsilon(1e-15));
        CHECK(potential_eval(PotentialSpec::gaussian(), 3.0) == 4.5);
        CHECK(PotentialSpec(1.0, 3.0).gradient(-2.0) == doctest::Approx(-12.0).epsilon(1e-15));
        CHECK(PotentialSpec(2.0, 1.0).gradient(0.0) == 0.0);
        CHECK(PotentialSpec(0.5, 2.0).typical_max(std::exp(8.0)) == doctest::Approx(4.0).epsilon(1e-14));
    }

    TEST_CASE("potential perturbation is added to both evaluators")
    {
        PotentialSpec v(0.5, 2.0, [](double x) { return std::sin(x); }, [](double x) { return std::cos(x); });
        CHECK(v.value(1.0) == doctest::Approx(0.5 + std::sin(1.0)));
        CHECK(v.gradient(1.0) == doctest::Approx(1.0 + std::cos(1.0)));
    }

    TEST_CASE("potential rejects invalid parameters")
    {
        CHECK_THROWS_AS(PotentialSpec(0.0, 2.0), PreconditionError);
        CHECK_THROWS_AS(PotentialSpec(1.0, 0.5), PreconditionError);
        CHECK_THROWS_AS(PotentialSpec(-1.0, 2.0), PreconditionError);
    }

    TEST_CASE("gradient matches a central difference")
    {
        std::mt19937_64 gen(7);
        std::uniform_real_distribution<double> xs(-5.0, 5.0), kappas(0.1, 3.0), alphas(1.0, 4.0);
        for (int i = 0; i < 100; ++i) {
            PotentialSpec v(kappas(gen), alphas(gen));
            double x = xs(gen);
            if (std::abs(x) < 1e-3)
                x = 0.5;
            const double h = 1e-5 * std::max(1.0, std::abs(x));
            const double fd = (v.value(x + h) - v.value(x - h)) / (2.0 * h);
            CHECK(std::abs(v.gradient(x) - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
        }
    }

    TEST_CASE("interaction kernels")
    {
        CHECK(interaction_eval(InteractionKind::log(), 1.0) == 0.0);
        CHECK(interaction_eval(InteractionKind::riesz(0.5), 4.0) == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(std::isinf(interaction_eval(InteractionKind::log(), 0.0)));
        CHECK(std::isinf(interaction_eval(InteractionKind::riesz(0.3), 0.0)));
        CHECK(interaction_eval(InteractionKind::log(), -std::exp(2.0)) == doctest::Approx(-2.0));
        CHECK_THROWS_AS(InteractionKind::riesz(1.5), PreconditionError);
        CHECK_THROWS_AS(InteractionKind::riesz(0.0), PreconditionError);
        CHECK_THROWS_AS(InteractionKind::riesz(1.0), PreconditionError);
    }

    TEST_CASE("high temperature coupling")
    {
        const auto p = GasParameters::high_temperature(100, 1.5, InteractionKind::log(), PotentialSpec::gaussian());
        CHECK(p.beta == doctest::Approx(0.03).epsilon(1e-15));
        CHECK_NOTHROW(p.validate());
        CHECK_THROWS_AS(GasParameters::high_temperature(0, 1.0, InteractionKind::log(), PotentialSpec::gaussian()),
                        PreconditionError);
        CHECK_THROWS_AS(GasParameters::high_temperature(10, -1.0, InteractionKind::log(), PotentialSpec::gaussian()),
                        PreconditionError);
        const auto iid = GasParameters::high_temperature(10, 0.0, InteractionKind::log(), PotentialSpec::gaussian());
        CHECK(iid.beta == 0.0);
    }

    TEST_CASE("configurations are sorted")
    {
        ParticleConfiguration c({3.0, -1.0, 2.0});
        CHECK(std::is_sorted(c.positions().begin(), c.positions().end()));
        CHECK(c.x_max() == 3.0);
        CHECK_THROWS_AS(ParticleConfiguration().x_max(), PreconditionError);
    }

    TEST_CASE("configuration energy examples")
    {
        GasParameters p;
        p.n = 2;
        p.beta = 1.0;
        std::vector<double> x{0.0, 1.0};
        CHECK(configuration_energy(p, x) == doctest::Approx(0.5).epsilon(1e-15));
        std::vector<double> same{0.7, 0.7};
        CHECK(std::isinf(configuration_energy(p, same)));

        GasParameters r;
        r.n = 3;
        r.beta = 0.2;
        r.interaction = InteractionKind::riesz(0.5);
        r.potential = PotentialSpec(1.0, 1.0);
        std::vector<double> y{0.0, 1.0, 4.0};
        const double expected = 5.0 + 0.2 * (1.0 + 0.5 + 1.0 / std::sqrt(3.0));
        CHECK(configuration_energy(r, y) == doctest::Approx(expected).epsilon(1e-14));
        CHECK(configuration_energy(r, y) == doctest::Approx(5.4154700538379252).epsilon(1e-14));
        CHECK(configuration_energy(r, ParticleConfiguration(y)) == configuration_energy(r, y));
    }

    TEST_CASE("configuration energy is permutation invariant")
    {
        std::mt19937_64 gen(11);
        std::normal_distribution<double> nd;
        GasParameters p = GasParameters::high_temperature(12, 1.0, InteractionKind::riesz(0.4), PotentialSpec(0.7, 1.5));
        for (int t = 0; t < 20; ++t) {
            std::vector<double> x(12);
            for (auto& v : x)
                v = nd(gen);
            const double e = configuration_energy(p, x);
            std::shuffle(x.begin(), x.end(), gen);
            CHECK(configuration_energy(p, x) == doctest::Approx(e).epsilon(1e-12));
        }
    }

    TEST_CASE("log energy scaling identity")
    {
        std::mt19937_64 gen(13);
        std::normal_distribution<double> nd;
        std::uniform_real_distribution<double> cs(0.2, 5.0);
        const auto v = PotentialSpec::gaussian();
        for (int t = 0; t < 50; ++t) {
            const std::size_t n = 2 + t % 9;
            const auto p = GasParameters::high_temperature(n, 1.3, InteractionKind::log(), v);
            std::vector<double> x(n), y(n);
            for (auto& e : x)
                e = nd(gen);
            const double c = cs(gen);
            double dv = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                y[i] = c * x[i];
                dv += v.value(y[i]) - v.value(x[i]);
            }
            const double pairs = static_cast<double>(n * (n - 1) / 2);
            const double predicted = configuration_energy(p, x) - p.beta * pairs * std::log(c) + dv;
            CHECK(configuration_energy(p, y) == doctest::Approx(predicted).epsilon(1e-12));
        }
    }

    TEST_CASE("rate function")
    {
        CHECK(rate_function(2.0, 1.0) == 0.0);
        CHECK(rate_function(2.0, 2.0) == 3.0);
        CHECK(rate_function(2.0, 1.2) == doctest::Approx(0.44));
        CHECK(std::isinf(rate_function(2.0, 0.5)));
        CHECK(std::isinf(rate_function(2.0, -3.0)));
        double prev = 0.0;
        for (double x = 1.0; x < 4.0; x += 0.01) {
            const double r = rate_function(1.7, x);
            CHECK(r >= prev);
            prev = r;
        }
    }
}
