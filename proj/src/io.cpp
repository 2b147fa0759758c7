#include "edgeld/io.hpp"

#include "edgeld/error.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace edgeld {

std::string format_double(double value)
{
    if (std::isnan(value))
        return "nan";
    if (std::isinf(value))
        return value > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc{})
        throw IoError("format_double: conversion failed");
    return std::string(buf.data(), end);
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size())
{
    if (header.empty())
        throw PreconditionError("CsvWriter: header must not be empty");
    for (const auto& h : header)
        cell(h);
    end_row();
}

void CsvWriter::separator()
{
    if (in_row_ > 0)
        text_ += ',';
    ++in_row_;
}

CsvWriter& CsvWriter::cell(std::string_view text)
{
    separator();
    const bool quote = text.find_first_of(",\"\r\n") != std::string_view::npos;
    if (!quote) {
        text_ += text;
        return *this;
    }
    text_ += '"';
    for (char c : text) {
        if (c == '"')
            text_ += '"';
        text_ += c;
    }
    text_ += '"';
    return *this;
}

CsvWriter& CsvWriter::cell(double value) { return cell(std::string_view(format_double(value))); }
CsvWriter& CsvWriter::cell(long long value) { return cell(std::string_view(std::to_string(value))); }
CsvWriter& CsvWriter::cell(unsigned long long value) { return cell(std::string_view(std::to_string(value))); }

CsvWriter& CsvWriter::empty()
{
    separator();
    return *this;
}

void CsvWriter::end_row()
{
    if (in_row_ != columns_)
        throw PreconditionError("CsvWriter: row has " + std::to_string(in_row_) + " cells, header has " +
                                std::to_string(columns_));
    text_ += "\r\n";
    in_row_ = 0;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text)
{
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"' && field.empty()) {
            quoted = true;
            field_started = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
            field_started = true;
        } else if (c == '\r' || c == '\n') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n')
                ++i;
            row.push_back(std::move(field));
            field.clear();
            rows.push_back(std::move(row));
            row.clear();
            field_started = false;
        } else {
            field += c;
            field_started = true;
        }
    }
    if (quoted)
        throw IoError("parse_csv: unterminated quoted field");
    if (field_started || !field.empty() || !row.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

AtomicFileSet::~AtomicFileSet()
{
    std::error_code ec;
    for (const auto& [tmp, final_path] : staged_)
        std::filesystem::remove(tmp, ec);
}

void AtomicFileSet::stage(const std::filesystem::path& path, std::string_view contents)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot write " + tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out)
            throw IoError("short write to " + tmp.string());
    }
    staged_.emplace_back(std::move(tmp), path);
}

void AtomicFileSet::commit()
{
    for (const auto& [tmp, final_path] : staged_) {
        std::error_code ec;
        std::filesystem::rename(tmp, final_path, ec);
        if (ec)
            throw IoError("cannot rename " + tmp.string() + " to " + final_path.string() + ": " + ec.message());
    }
    staged_.clear();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents)
{
    AtomicFileSet files;
    files.stage(path, contents);
    files.commit();
}

} // namespace edgeld
