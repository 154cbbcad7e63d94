#include "iresnet/csv.hpp"

#include <cinttypes>
#include <cstdio>
#include <sstream>

#include "iresnet/errors.hpp"

namespace iresnet {

CsvWriter::CsvWriter(const std::string& path) : os_(path) {
    if (!os_) throw Error("cannot open csv for writing: " + path);
}

void CsvWriter::header(const std::vector<std::string>& columns) {
    row_begin();
    for (const auto& c : columns) field(c);
    row_end();
}

void CsvWriter::row_begin() { first_in_row_ = true; }

void CsvWriter::field(const std::string& s) {
    if (!first_in_row_) os_ << ',';
    os_ << s;
    first_in_row_ = false;
}

void CsvWriter::field(double v) { field(format_double(v)); }

void CsvWriter::field(long long v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%lld", v);
    field(std::string(buf));
}

void CsvWriter::row_end() { os_ << '\n'; }

std::string CsvWriter::format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<Vector> read_csv_rows(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open csv: " + path);
    std::vector<Vector> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        Vector row;
        std::stringstream ss(line);
        std::string cell;
        bool numeric = true;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t pos = 0;
                const double v = std::stod(cell, &pos);
                row.push_back(v);
            } catch (...) {
                numeric = false;
                break;
            }
        }
        if (!numeric) continue;  // header line
        if (!row.empty()) rows.push_back(std::move(row));
    }
    return rows;
}

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open file for hashing: " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (is.read(buf, sizeof buf) || is.gcount() > 0) {
        h = fnv1a(buf, static_cast<std::size_t>(is.gcount()), h);
        if (!is) break;
    }
    return h;
}

}  // namespace iresnet
