#include "edgeld/spectral.hpp"

#include "edgeld/error.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace edgeld {

SpectralBounds spectral_bounds(const TridiagonalMatrix& t)
{
    const auto a = t.diag();
    return {*std::max_element(a.begin(), a.end()), t.row_sum_bound()};
}

namespace {

constexpr double unit_roundoff = 0x1p-52;

// Pivots this small are pushed away from zero. An exact zero becomes +eta: the
// leading block then has lambda as an eigenvalue, which must not be counted as
// strictly below lambda.
inline double safeguard(double d, double eta)
{
    if (std::abs(d) >= eta)
        return d;
    return d < 0.0 ? -eta : eta;
}

std::size_t count_open(std::span<const double> a, std::span<const double> b, double lambda, double eta)
{
    std::size_t negatives = 0;
    double d = safeguard(a[0] - lambda, eta);
    if (d < 0.0)
        ++negatives;
    for (std::size_t i = 1; i < a.size(); ++i) {
        d = safeguard(a[i] - lambda - b[i - 1] * b[i - 1] / d, eta);
        if (d < 0.0)
            ++negatives;
    }
    return negatives;
}

// Symmetric Gaussian elimination of the cyclic matrix T - lambda I in natural order.
// After eliminating rows 1..k-1 the only fill is in the last column, f_k = entry (k, N),
// and the last diagonal entry s collects -f_k^2 / d_k. By Sylvester's law of inertia
// the number of negative pivots is the number of eigenvalues below lambda.
std::size_t count_periodic(std::span<const double> a, std::span<const double> b, double lambda, double eta)
{
    const std::size_t n = a.size();
    std::size_t negatives = 0;
    double d = safeguard(a[0] - lambda, eta);
    double f = b[n - 1];
    double s = a[n - 1] - lambda;
    for (std::size_t k = 0; k + 2 < n; ++k) {
        if (d < 0.0)
            ++negatives;
        s -= f * f / d;
        const double next_original = (k + 2 == n - 1) ? b[n - 2] : 0.0;
        const double f_next = next_original - b[k] * f / d;
        d = safeguard(a[k + 1] - lambda - b[k] * b[k] / d, eta);
        f = f_next;
    }
    // Row N-1 couples to row N only through f.
    if (d < 0.0)
        ++negatives;
    s = safeguard(s - f * f / d, eta);
    if (s < 0.0)
        ++negatives;
    return negatives;
}

} // namespace

std::size_t sturm_count(const TridiagonalMatrix& t, double lambda)
{
    const std::size_t n = t.size();
    const double eta = unit_roundoff * std::max(1.0, t.row_sum_bound() + std::abs(lambda));
    const auto a = t.diag();
    const auto b = t.offdiag();
    if (!t.periodic())
        return count_open(a, b, lambda, eta);
    if (n == 2) {
        const double c = b[0] + b[1];
        return count_open(a, std::span<const double>(&c, 1), lambda, eta);
    }
    return count_periodic(a, b, lambda, eta);
}

double default_eigen_tolerance(const TridiagonalMatrix& t)
{
    return 1e-12 * (1.0 + t.row_sum_bound());
}

double lambda_max(const TridiagonalMatrix& t, double tol)
{
    if (t.periodic()) {
        if (auto reduced = periodic_shift_reduce(t))
            return lambda_max(*reduced, tol);
    }
    if (tol <= 0.0)
        tol = default_eigen_tolerance(t);
    const auto bounds = spectral_bounds(t);
    const std::size_t n = t.size();
    double lo = bounds.lower;
    double hi = bounds.upper;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi)
            break;
        if (sturm_count(t, mid) < n)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

bool exceeds(const TridiagonalMatrix& t, double threshold)
{
    const auto bounds = spectral_bounds(t);
    if (bounds.lower >= threshold)
        return true;
    if (bounds.upper < threshold)
        return false;
    return sturm_count(t, threshold) < t.size();
}

double truncation_threshold(std::size_t n, double epsilon)
{
    if (!(epsilon > 0.0))
        throw PreconditionError("truncation epsilon must be positive");
    if (n < 2)
        return 0.0;
    return epsilon * std::sqrt(2.0 * std::log(static_cast<double>(n)));
}

TridiagonalMatrix truncate(const TridiagonalMatrix& t, double epsilon)
{
    const double tau = truncation_threshold(t.size(), epsilon);
    auto cut = [tau](std::span<const double> v) {
        std::vector<double> out(v.begin(), v.end());
        for (auto& x : out)
            if (!(std::abs(x) >= tau))
                x = 0.0;
        return out;
    };
    return TridiagonalMatrix(cut(t.diag()), cut(t.offdiag()), t.periodic());
}

namespace {

template <typename IsZero>
BlockDecomposition decompose(const TridiagonalMatrix& t, IsZero is_zero)
{
    if (t.periodic())
        throw PreconditionError("block decomposition needs a non-periodic matrix; reduce it first");
    BlockDecomposition out;
    out.boundaries.push_back(0);
    const auto b = t.offdiag();
    for (std::size_t i = 0; i < b.size(); ++i)
        if (is_zero(b[i]))
            out.boundaries.push_back(i + 1);
    out.boundaries.push_back(t.size());
    for (std::size_t l = 1; l < out.boundaries.size(); ++l) {
        out.block_sizes.push_back(out.boundaries[l] - out.boundaries[l - 1]);
        out.d_max = std::max(out.d_max, out.block_sizes.back());
    }
    return out;
}

} // namespace

BlockDecomposition block_decompose(const TridiagonalMatrix& t)
{
    return decompose(t, [](double b) { return b == 0.0; });
}

BlockDecomposition block_decompose(const TridiagonalMatrix& t, double tol)
{
    return decompose(t, [tol](double b) { return std::abs(b) < tol; });
}

std::vector<TridiagonalMatrix> extract_blocks(const TridiagonalMatrix& t, const BlockDecomposition& blocks)
{
    std::vector<TridiagonalMatrix> out;
    const auto a = t.diag();
    const auto b = t.offdiag();
    for (std::size_t l = 0; l + 1 < blocks.boundaries.size(); ++l) {
        const std::size_t begin = blocks.boundaries[l];
        const std::size_t end = blocks.boundaries[l + 1];
        if (end <= begin || end > t.size())
            throw PreconditionError("block boundaries are not increasing within the matrix");
        out.emplace_back(std::vector<double>(a.begin() + begin, a.begin() + end),
                         std::vector<double>(b.begin() + begin, b.begin() + end - 1), false);
    }
    return out;
}

TridiagonalMatrix assemble_blocks(std::span<const TridiagonalMatrix> blocks)
{
    std::vector<double> a, b;
    for (const auto& block : blocks) {
        if (block.periodic())
            throw PreconditionError("assemble_blocks: blocks must be non-periodic");
        if (!a.empty())
            b.push_back(0.0);
        a.insert(a.end(), block.diag().begin(), block.diag().end());
        b.insert(b.end(), block.offdiag().begin(), block.offdiag().end());
    }
    if (a.empty())
        throw PreconditionError("assemble_blocks: no blocks");
    return TridiagonalMatrix(std::move(a), std::move(b), false);
}

std::optional<TridiagonalMatrix> periodic_shift_reduce(const TridiagonalMatrix& t)
{
    if (!t.periodic())
        throw PreconditionError("periodic_shift_reduce needs a periodic matrix");
    const std::size_t n = t.size();
    const auto a = t.diag();
    const auto b = t.offdiag();
    std::size_t zero = n; // 1-based index of the vanishing coupling
    if (b[n - 1] == 0.0) {
        zero = n;
    } else {
        auto it = std::find(b.begin(), b.end(), 0.0);
        if (it == b.end())
            return std::nullopt;
        zero = static_cast<std::size_t>(it - b.begin()) + 1;
    }
    std::vector<double> a2(n), b2(n - 1);
    for (std::size_t k = 0; k < n; ++k)
        a2[k] = a[(zero + k) % n];
    for (std::size_t k = 0; k + 1 < n; ++k)
        b2[k] = b[(zero + k) % n];
    return TridiagonalMatrix(std::move(a2), std::move(b2), false);
}

std::vector<double> dense_spectrum_oracle(const TridiagonalMatrix& t)
{
    const std::size_t n = t.size();
    if (n > dense_oracle_max_size)
        throw PreconditionError("dense_spectrum_oracle refuses N = " + std::to_string(n) + " > " +
                                std::to_string(dense_oracle_max_size));
    const auto idx = static_cast<Eigen::Index>(n);
    Eigen::VectorXd values;
    if (!t.periodic()) {
        Eigen::VectorXd diag = Eigen::Map<const Eigen::VectorXd>(t.diag().data(), idx);
        Eigen::VectorXd sub(std::max<Eigen::Index>(idx - 1, 0));
        for (Eigen::Index i = 0; i + 1 < idx; ++i)
            sub[i] = t.offdiag()[static_cast<std::size_t>(i)];
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
        solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
        if (solver.info() != Eigen::Success)
            throw ConvergenceError("tridiagonal QL iteration did not converge", NAN);
        values = solver.eigenvalues();
    } else {
        const auto dense = t.dense();
        Eigen::MatrixXd m = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            dense.data(), idx, idx);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
        if (solver.info() != Eigen::Success)
            throw ConvergenceError("dense symmetric eigensolver did not converge", NAN);
        values = solver.eigenvalues();
    }
    std::vector<double> out(values.data(), values.data() + values.size());
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace edgeld
