#include "edgeld/tridiagonal.hpp"

#include "edgeld/error.hpp"
#include "edgeld/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

namespace edgeld {

TridiagonalMatrix::TridiagonalMatrix(std::vector<double> diag, std::vector<double> offdiag, bool periodic)
  : diag_(std::move(diag)), offdiag_(std::move(offdiag)), periodic_(periodic)
{
    const std::size_t n = diag_.size();
    if (n == 0)
        throw PreconditionError("tridiagonal matrix must have at least one row");
    if (periodic_ && n < 2)
        throw PreconditionError("periodic tridiagonal matrix needs n >= 2");
    const std::size_t expected = periodic_ ? n : n - 1;
    if (offdiag_.size() != expected)
        throw PreconditionError("off-diagonal has length " + std::to_string(offdiag_.size()) + ", expected " +
                                std::to_string(expected));
}

TridiagonalMatrix TridiagonalMatrix::diagonal(std::vector<double> diag)
{
    const std::size_t n = diag.size();
    return TridiagonalMatrix(std::move(diag), std::vector<double>(n == 0 ? 0 : n - 1, 0.0), false);
}

double TridiagonalMatrix::row_sum_bound() const noexcept
{
    const std::size_t n = size();
    double bound = -INFINITY;
    for (std::size_t i = 0; i < n; ++i) {
        const double left = i > 0 ? std::abs(coupling(i - 1)) : std::abs(periodic_ ? coupling(n - 1) : 0.0);
        const double right = std::abs(coupling(i));
        bound = std::max(bound, std::abs(diag_[i]) + left + right);
    }
    return bound;
}

std::vector<double> TridiagonalMatrix::dense() const
{
    const std::size_t n = size();
    std::vector<double> m(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        m[i * n + i] = diag_[i];
    for (std::size_t i = 0; i < offdiag_.size(); ++i) {
        const std::size_t j = (i + 1) % n;
        m[i * n + j] += offdiag_[i];
        m[j * n + i] += offdiag_[i];
    }
    return m;
}

std::string matrix_csv_text(const TridiagonalMatrix& m)
{
    CsvWriter csv({"n", "periodic", "i", "diag", "offdiag"});
    const auto d = m.diag();
    const auto b = m.offdiag();
    for (std::size_t i = 0; i < m.size(); ++i) {
        csv.cell(m.size()).cell(m.periodic() ? 1 : 0).cell(i + 1).cell(d[i]);
        if (i < b.size())
            csv.cell(b[i]);
        else
            csv.empty();
        csv.end_row();
    }
    return csv.text();
}

void write_matrix_csv(const TridiagonalMatrix& m, const std::filesystem::path& path)
{
    write_file_atomic(path, matrix_csv_text(m));
}

namespace {

double parse_number(const std::string& s, const char* what)
{
    if (s == "nan")
        return NAN;
    if (s == "inf")
        return INFINITY;
    if (s == "-inf")
        return -INFINITY;
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw IoError(std::string("matrix CSV: bad ") + what + " value '" + s + "'");
    return v;
}

} // namespace

TridiagonalMatrix read_matrix_csv(const std::filesystem::path& path)
{
    const auto rows = parse_csv(read_text_file(path));
    if (rows.empty() || rows[0] != std::vector<std::string>{"n", "periodic", "i", "diag", "offdiag"})
        throw IoError("matrix CSV: missing or unexpected header in " + path.string());
    const std::size_t n = rows.size() - 1;
    if (n == 0)
        throw IoError("matrix CSV: no rows in " + path.string());
    const bool periodic = rows[1].size() > 1 && rows[1][1] == "1";
    std::vector<double> diag(n), off;
    for (std::size_t r = 1; r <= n; ++r) {
        const auto& row = rows[r];
        if (row.size() != 5)
            throw IoError("matrix CSV: row " + std::to_string(r) + " has " + std::to_string(row.size()) + " cells");
        if (static_cast<std::size_t>(parse_number(row[0], "n")) != n ||
            static_cast<std::size_t>(parse_number(row[2], "i")) != r)
            throw IoError("matrix CSV: inconsistent n or index at row " + std::to_string(r));
        diag[r - 1] = parse_number(row[3], "diag");
        if (!row[4].empty())
            off.push_back(parse_number(row[4], "offdiag"));
    }
    return TridiagonalMatrix(std::move(diag), std::move(off), periodic);
}

namespace {

static_assert(std::endian::native == std::endian::little, "binary matrix format assumes little-endian host");

template <typename T>
void put(std::string& out, T value)
{
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

template <typename T>
T take(const std::string& in, std::size_t& pos)
{
    if (pos + sizeof(T) > in.size())
        throw IoError("binary matrix: truncated file");
    T value;
    std::memcpy(&value, in.data() + pos, sizeof(T));
    pos += sizeof(T);
    return value;
}

} // namespace

void write_matrix_binary(const TridiagonalMatrix& m, const std::filesystem::path& path)
{
    std::string out = "EDTM";
    put<std::uint64_t>(out, m.size());
    put<std::uint8_t>(out, m.periodic() ? 1 : 0);
    for (double v : m.diag())
        put(out, v);
    for (double v : m.offdiag())
        put(out, v);
    write_file_atomic(path, out);
}

TridiagonalMatrix read_matrix_binary(const std::filesystem::path& path)
{
    const std::string in = read_text_file(path);
    if (in.size() < 4 || in.compare(0, 4, "EDTM") != 0)
        throw IoError("binary matrix: bad magic in " + path.string());
    std::size_t pos = 4;
    const auto n = take<std::uint64_t>(in, pos);
    const bool periodic = take<std::uint8_t>(in, pos) != 0;
    if (n == 0 || n > (in.size() / sizeof(double)))
        throw IoError("binary matrix: implausible size");
    std::vector<double> diag(n), off(periodic ? n : n - 1);
    for (auto& v : diag)
        v = take<double>(in, pos);
    for (auto& v : off)
        v = take<double>(in, pos);
    if (pos != in.size())
        throw IoError("binary matrix: trailing bytes");
    return TridiagonalMatrix(std::move(diag), std::move(off), periodic);
}

} // namespace edgeld
