#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace edgeld {

// Shortest decimal form that round-trips, always with '.' as separator.
std::string format_double(double value);

// Accumulates RFC-4180 CSV text (CRLF line endings, quoting only where needed).
class CsvWriter
{
  public:
    explicit CsvWriter(std::vector<std::string> header);

    CsvWriter& cell(std::string_view text);
    CsvWriter& cell(double value);
    CsvWriter& cell(long long value);
    CsvWriter& cell(unsigned long long value);
    CsvWriter& cell(std::size_t value) { return cell(static_cast<unsigned long long>(value)); }
    CsvWriter& cell(int value) { return cell(static_cast<long long>(value)); }
    CsvWriter& empty();
    // Ends the current row; throws if the row width differs from the header.
    void end_row();

    const std::string& text() const noexcept { return text_; }

  private:
    void separator();
    std::size_t columns_;
    std::size_t in_row_ = 0;
    std::string text_;
};

// Parses RFC-4180 text into rows of cells; the header row is included.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);

// Stages several files and makes them visible together: each is written to a
// temporary sibling and renamed into place by commit(). Files staged but never
// committed are removed by the destructor.
class AtomicFileSet
{
  public:
    AtomicFileSet() = default;
    AtomicFileSet(const AtomicFileSet&) = delete;
    AtomicFileSet& operator=(const AtomicFileSet&) = delete;
    ~AtomicFileSet();

    void stage(const std::filesystem::path& path, std::string_view contents);
    void commit();

  private:
    std::vector<std::pair<std::filesystem::path, std::filesystem::path>> staged_;
};

// Single-file convenience wrapper over AtomicFileSet.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

} // namespace edgeld
