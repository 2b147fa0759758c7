#include "edgeld/error.hpp"
#include "edgeld/sampling.hpp"
#include "edgeld/spectral.hpp"
#include "edgeld/tridiagonal.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <vector>

using namespace edgeld;

namespace {

TridiagonalMatrix random_matrix(std::mt19937_64& gen, std::size_t n, bool periodic, double zero_fraction = 0.0)
{
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> u;
    std::vector<double> a(n), b(periodic ? n : n - 1);
    for (auto& v : a)
        v = nd(gen);
    for (auto& v : b)
        v = u(gen) < zero_fraction ? 0.0 : nd(gen);
    return TridiagonalMatrix(a, b, periodic);
}

std::vector<double> jacobi(const TridiagonalMatrix& t)
{
    return oracle::jacobi_eigenvalues(oracle::dense({t.diag().begin(), t.diag().end()},
                                                    {t.offdiag().begin(), t.offdiag().end()}, t.periodic()));
}

} // namespace

TEST_SUITE("spectral")
{
    TEST_CASE("matrix shape contract")
    {
        CHECK_THROWS_AS(TridiagonalMatrix({1, 2, 3}, {1, 2, 3}, false), PreconditionError);
        CHECK_THROWS_AS(TridiagonalMatrix({1, 2, 3}, {1, 2}, true), PreconditionError);
        CHECK_THROWS_AS(TridiagonalMatrix({}, {}, false), PreconditionError);
        CHECK_THROWS_AS(TridiagonalMatrix({1}, {1}, true), PreconditionError);
        const TridiagonalMatrix p({1, 2, 3}, {4, 5, 6}, true);
        CHECK(p.coupling(2) == 6.0);
        CHECK(TridiagonalMatrix({1, 2, 3}, {4, 5}).coupling(2) == 0.0);
        const auto d = p.dense();
        CHECK(d[0 * 3 + 2] == 6.0);
        CHECK(d[2 * 3 + 0] == 6.0);
        CHECK(d[0 * 3 + 1] == 4.0);
        // Two periodic rows: both couplings join the same pair.
        const TridiagonalMatrix two({0, 0}, {1, 2}, true);
        CHECK(two.dense()[1] == 3.0);
    }

    TEST_CASE("Gerschgorin bounds examples")
    {
        const auto b1 = spectral_bounds(TridiagonalMatrix({3, -1, 2}, {0, 0}));
        CHECK(b1.lower == 3.0);
        CHECK(b1.upper == 3.0);
        const TridiagonalMatrix two({0, 0}, {1});
        CHECK(spectral_bounds(two).lower == 0.0);
        CHECK(spectral_bounds(two).upper == 1.0);
        CHECK(lambda_max(two) == doctest::Approx(1.0).epsilon(1e-12));
        const TridiagonalMatrix circ({0, 0, 0}, {1, 1, 1}, true);
        CHECK(spectral_bounds(circ).upper == 2.0);
        CHECK(lambda_max(circ) == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(lambda_max(TridiagonalMatrix({0, 0}, {1, 2}, true)) == doctest::Approx(3.0).epsilon(1e-12));
    }

    TEST_CASE("Sturm count examples and oracle agreement")
    {
        const auto d = TridiagonalMatrix::diagonal({1, 2, 3});
        CHECK(sturm_count(d, 2.5) == 2);
        CHECK(sturm_count(d, 0.5) == 0);
        CHECK(sturm_count(d, 3.5) == 3);

        std::mt19937_64 gen(21);
        std::uniform_real_distribution<double> lam(-4.0, 4.0);
        for (bool periodic : {false, true}) {
            const auto t = random_matrix(gen, 50, periodic);
            const auto ev = jacobi(t);
            const auto bounds = spectral_bounds(t);
            CHECK(sturm_count(t, -t.row_sum_bound() - 1.0) == 0);
            for (int k = 0; k < 20; ++k) {
                const double l = lam(gen);
                const auto expected = static_cast<std::size_t>(std::lower_bound(ev.begin(), ev.end(), l) - ev.begin());
                CHECK(sturm_count(t, l) == expected);
            }
        }
    }

    TEST_CASE("Sturm count is monotone and reaches N above the upper bound")
    {
        std::mt19937_64 gen(22);
        for (int rep = 0; rep < 50; ++rep) {
            const auto t = random_matrix(gen, 2 + rep, rep % 2 == 1, 0.2);
            const auto b = spectral_bounds(t);
            std::size_t prev = 0;
            for (double l = -b.upper - 1.0; l <= b.upper + 1.0; l += 0.05) {
                const auto c = sturm_count(t, l);
                CHECK(c >= prev);
                prev = c;
            }
            CHECK(sturm_count(t, b.upper + 1e-9) == t.size());
        }
    }

    TEST_CASE("lambda_max agrees with an independent eigensolver")
    {
        std::mt19937_64 gen(23);
        for (int rep = 0; rep < 300; ++rep) {
            const std::size_t n = 1 + rep % 30;
            const bool periodic = n >= 2 && rep % 3 == 0;
            const auto t = random_matrix(gen, n, periodic, rep % 4 == 0 ? 0.4 : 0.0);
            const auto ev = jacobi(t);
            CHECK(std::abs(lambda_max(t) - ev.back()) <= 1e-10);
            const auto dense = dense_spectrum_oracle(t);
            REQUIRE(dense.size() == n);
            for (std::size_t i = 0; i < n; ++i)
                CHECK(std::abs(dense[i] - ev[i]) <= 1e-10);
            const double trace = std::accumulate(t.diag().begin(), t.diag().end(), 0.0);
            CHECK(std::abs(std::accumulate(dense.begin(), dense.end(), 0.0) - trace) <= 1e-10);
        }
        CHECK(lambda_max(TridiagonalMatrix::diagonal({-5, 4, 1})) == doctest::Approx(4.0).epsilon(1e-12));
    }

    TEST_CASE("dense oracle examples and size guard")
    {
        const auto ev = dense_spectrum_oracle(TridiagonalMatrix({0, 0}, {1}));
        CHECK(ev[0] == doctest::Approx(-1.0));
        CHECK(ev[1] == doctest::Approx(1.0));
        const auto d = dense_spectrum_oracle(TridiagonalMatrix::diagonal({3, 1, 2}));
        CHECK(d == std::vector<double>{1, 2, 3});
        CHECK_THROWS_AS(dense_spectrum_oracle(TridiagonalMatrix::diagonal(std::vector<double>(2001, 0.0))),
                        PreconditionError);
    }

    TEST_CASE("exceeds agrees with lambda_max")
    {
        std::mt19937_64 gen(24);
        std::normal_distribution<double> nd;
        for (int rep = 0; rep < 200; ++rep) {
            const auto t = random_matrix(gen, 2 + rep % 40, rep % 2 == 0);
            const double l = lambda_max(t);
            const double thr = l + 0.3 * nd(gen);
            CHECK(exceeds(t, thr) == (l >= thr));
        }
    }

    TEST_CASE("truncation rule")
    {
        CHECK(truncation_threshold(1, 0.5) == 0.0);
        CHECK(truncation_threshold(100, 0.5) == doctest::Approx(0.5 * std::sqrt(2.0 * std::log(100.0))));
        const double eps = 1.0 / std::sqrt(2.0 * std::log(4.0));
        const TridiagonalMatrix t({0.5, -2.0, 2.0, -0.5}, {-0.5, 2.0, 0.5});
        const auto cut = truncate(t, eps);
        CHECK(cut == TridiagonalMatrix({0.0, -2.0, 2.0, 0.0}, {0.0, 2.0, 0.0}));
        CHECK(truncate(t, 100.0) == TridiagonalMatrix({0, 0, 0, 0}, {0, 0, 0}));
        CHECK(lambda_max(truncate(t, 100.0)) == 0.0);
        CHECK(truncate(t, 1e-6) == t);
        CHECK_THROWS_AS(truncate(t, 0.0), PreconditionError);
    }

    TEST_CASE("block decomposition examples")
    {
        std::vector<double> a(10, 1.0);
        std::vector<double> b{1, 0, 0, 1, 1, 0, 1, 1, 1};
        const auto blocks = block_decompose(TridiagonalMatrix(a, b));
        CHECK(blocks.block_sizes == std::vector<std::size_t>{2, 1, 3, 4});
        CHECK(blocks.boundaries == std::vector<std::size_t>{0, 2, 3, 6, 10});
        CHECK(blocks.d_max == 4);

        const auto whole = block_decompose(TridiagonalMatrix(a, std::vector<double>(9, 0.3)));
        CHECK(whole.block_sizes == std::vector<std::size_t>{10});
        CHECK(whole.d_max == 10);
        const auto singles = block_decompose(TridiagonalMatrix(a, std::vector<double>(9, 0.0)));
        CHECK(singles.block_sizes == std::vector<std::size_t>(10, 1));
        CHECK(singles.d_max == 1);

        const auto tol = block_decompose(TridiagonalMatrix(a, {1, 1e-17, 1, 1, 1, 1, 1, 1, 1}), 1e-12);
        CHECK(tol.block_sizes == std::vector<std::size_t>{2, 8});
        CHECK_THROWS_AS(block_decompose(TridiagonalMatrix({1, 2, 3}, {1, 0, 1}, true)), PreconditionError);
    }

    TEST_CASE("block decomposition invariants and exact reconstruction")
    {
        std::mt19937_64 gen(25);
        std::uniform_real_distribution<double> eps(0.1, 1.2);
        for (int rep = 0; rep < 200; ++rep) {
            const std::size_t n = 2 + rep % 60;
            const auto t = truncate(random_matrix(gen, n, false), eps(gen));
            const auto d = block_decompose(t);
            CHECK(std::accumulate(d.block_sizes.begin(), d.block_sizes.end(), std::size_t{0}) == n);
            CHECK(d.d_max == *std::max_element(d.block_sizes.begin(), d.block_sizes.end()));
            for (std::size_t k = 1; k + 1 < d.boundaries.size(); ++k)
                CHECK(t.offdiag()[d.boundaries[k] - 1] == 0.0);
            for (std::size_t k = 0; k + 1 < d.boundaries.size(); ++k)
                for (std::size_t i = d.boundaries[k]; i + 1 < d.boundaries[k + 1]; ++i)
                    CHECK(t.offdiag()[i] != 0.0);
            const auto parts = extract_blocks(t, d);
            CHECK(assemble_blocks(parts) == t);
            double best = -INFINITY;
            for (const auto& p : parts)
                best = std::max(best, lambda_max(p));
            CHECK(std::abs(best - lambda_max(t)) <= 1e-10);
        }
    }

    TEST_CASE("Frobenius bound on blocks")
    {
        std::mt19937_64 gen(26);
        for (int rep = 0; rep < 200; ++rep) {
            const auto t = random_matrix(gen, 1 + rep % 12, false);
            double fro = 0.0;
            for (double v : t.diag())
                fro += v * v;
            for (double v : t.offdiag())
                fro += 2.0 * v * v;
            for (double ev : jacobi(t))
                CHECK(std::abs(ev) <= std::sqrt(fro) + 1e-12);
        }
    }

    TEST_CASE("periodic shift reduction")
    {
        const TridiagonalMatrix last({1, 2, 3, 4}, {0.5, 0.6, 0.7, 0.0}, true);
        const auto r = periodic_shift_reduce(last);
        REQUIRE(r.has_value());
        CHECK(*r == TridiagonalMatrix({1, 2, 3, 4}, {0.5, 0.6, 0.7}));
        CHECK_FALSE(periodic_shift_reduce(TridiagonalMatrix({1, 2, 3}, {1, 1, 1}, true)).has_value());

        std::mt19937_64 gen(27);
        for (int rep = 0; rep < 50; ++rep) {
            auto t = random_matrix(gen, 8, true);
            std::vector<double> b(t.offdiag().begin(), t.offdiag().end());
            b[static_cast<std::size_t>(rep % 8)] = 0.0;
            t = TridiagonalMatrix({t.diag().begin(), t.diag().end()}, b, true);
            const auto red = periodic_shift_reduce(t);
            REQUIRE(red.has_value());
            CHECK_FALSE(red->periodic());
            const auto e1 = dense_spectrum_oracle(t), e2 = dense_spectrum_oracle(*red);
            for (std::size_t i = 0; i < 8; ++i)
                CHECK(std::abs(e1[i] - e2[i]) <= 1e-12);
        }
    }

    TEST_CASE("matrix files round trip")
    {
        const auto dir = std::filesystem::temp_directory_path();
        RngStream rng(11);
        for (bool periodic : {false, true}) {
            const auto t = periodic ? build_toda_lax(7, 0.5, rng) : build_dumitriu_edelman(7, 0.3, rng);
            write_matrix_csv(t, dir / "edgeld_unit_m.csv");
            write_matrix_binary(t, dir / "edgeld_unit_m.bin");
            CHECK(read_matrix_csv(dir / "edgeld_unit_m.csv") == t);
            CHECK(read_matrix_binary(dir / "edgeld_unit_m.bin") == t);
        }
        CHECK(matrix_csv_text(TridiagonalMatrix({1, 2}, {3})) ==
              "n,periodic,i,diag,offdiag\r\n2,0,1,1,3\r\n2,0,2,2,\r\n");
        std::filesystem::remove(dir / "edgeld_unit_m.csv");
        std::filesystem::remove(dir / "edgeld_unit_m.bin");
    }
}
