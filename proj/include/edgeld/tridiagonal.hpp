#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace edgeld {

// Symmetric tridiagonal matrix with diagonal a_1..a_N and off-diagonal b_1..b_{N-1};
// a periodic matrix also carries the corner entry b_N coupling rows 1 and N.
//
// For periodic N = 2 the two couplings act on the same pair of rows, so the dense
// form has b_1 + b_2 off the diagonal.
class TridiagonalMatrix
{
  public:
    TridiagonalMatrix() = default;
    TridiagonalMatrix(std::vector<double> diag, std::vector<double> offdiag, bool periodic = false);

    static TridiagonalMatrix diagonal(std::vector<double> diag);

    std::size_t size() const noexcept { return diag_.size(); }
    bool periodic() const noexcept { return periodic_; }
    std::span<const double> diag() const noexcept { return diag_; }
    std::span<const double> offdiag() const noexcept { return offdiag_; }

    // b_{i+1} in zero-based terms: coupling between rows i and (i+1) mod N.
    // Zero for i = N-1 when the matrix is not periodic.
    double coupling(std::size_t i) const noexcept
    {
        return i < offdiag_.size() ? offdiag_[i] : 0.0;
    }

    // max_i |a_i| + |b_{i-1}| + |b_i| with indices mod N, i.e. the infinity norm bound.
    double row_sum_bound() const noexcept;

    // Row-major dense copy.
    std::vector<double> dense() const;

    bool operator==(const TridiagonalMatrix&) const = default;

  private:
    std::vector<double> diag_;
    std::vector<double> offdiag_;
    bool periodic_ = false;
};

// CSV with header `n,periodic,i,diag,offdiag`; one row per index, empty offdiag cell
// for the last row of a non-periodic matrix.
std::string matrix_csv_text(const TridiagonalMatrix& m);
void write_matrix_csv(const TridiagonalMatrix& m, const std::filesystem::path& path);
TridiagonalMatrix read_matrix_csv(const std::filesystem::path& path);

// Little-endian binary: magic "EDTM", u64 n, u8 periodic, n diagonal doubles,
// then N-1 (or N) off-diagonal doubles.
void write_matrix_binary(const TridiagonalMatrix& m, const std::filesystem::path& path);
TridiagonalMatrix read_matrix_binary(const std::filesystem::path& path);

} // namespace edgeld
