#pragma once

#include "edgeld/tridiagonal.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace edgeld {

// Gerschgorin sandwich: lower = max a_i <= lambda_max <= upper = max row sum.
struct SpectralBounds
{
    double lower;
    double upper;
};

SpectralBounds spectral_bounds(const TridiagonalMatrix& t);

// Number of eigenvalues strictly below `lambda`, from the signs of the pivots of the
// LDL^T factorisation of T - lambda I. Periodic matrices are factorised with the
// extra fill in the last column, which keeps the count O(N).
std::size_t sturm_count(const TridiagonalMatrix& t, double lambda);

// 1e-12 * (1 + ||T||_inf).
double default_eigen_tolerance(const TridiagonalMatrix& t);

// Largest eigenvalue by bisection on sturm_count inside the Gerschgorin bracket.
// `tol <= 0` selects default_eigen_tolerance. The result always lies inside the
// bracket returned by spectral_bounds.
double lambda_max(const TridiagonalMatrix& t, double tol = 0.0);

// lambda_max(T) >= threshold, decided with at most one Sturm count.
bool exceeds(const TridiagonalMatrix& t, double threshold);

// epsilon * sqrt(2 log N); zero for N < 2, so nothing is cut.
double truncation_threshold(std::size_t n, double epsilon);

// Keeps entries with |entry| >= truncation_threshold(N, epsilon) and zeroes the rest.
TridiagonalMatrix truncate(const TridiagonalMatrix& t, double epsilon);

// Blocks between vanishing off-diagonals. boundaries = (0, i_1, ..., N) in 1-based
// off-diagonal indices, so block l covers rows boundaries[l]+1 .. boundaries[l+1].
struct BlockDecomposition
{
    std::vector<std::size_t> boundaries;
    std::vector<std::size_t> block_sizes;
    std::size_t d_max = 0;
};

// Splits a non-periodic matrix at off-diagonals that are exactly zero.
BlockDecomposition block_decompose(const TridiagonalMatrix& t);

// Splits where |b_i| < tol, for matrices whose zeros come from floating point.
BlockDecomposition block_decompose(const TridiagonalMatrix& t, double tol);

std::vector<TridiagonalMatrix> extract_blocks(const TridiagonalMatrix& t, const BlockDecomposition& blocks);

// Block-diagonal matrix with zero couplings between consecutive blocks.
TridiagonalMatrix assemble_blocks(std::span<const TridiagonalMatrix> blocks);

// If a coupling of a periodic matrix vanishes, relabels indices cyclically so that
// the vanishing coupling becomes the dropped corner. b_N is preferred, otherwise the
// first zero b_i. Returns nullopt when no coupling is zero.
std::optional<TridiagonalMatrix> periodic_shift_reduce(const TridiagonalMatrix& t);

// Complete sorted spectrum from a dense symmetric eigensolver. Refuses N > 2000.
std::vector<double> dense_spectrum_oracle(const TridiagonalMatrix& t);

inline constexpr std::size_t dense_oracle_max_size = 2000;

} // namespace edgeld
