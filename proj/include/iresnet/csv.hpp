#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "iresnet/linalg.hpp"

namespace iresnet {

/// CSV writer with deterministic full-precision number formatting so that
/// identical runs produce byte-identical files.
class CsvWriter {
public:
    explicit CsvWriter(const std::string& path);

    void header(const std::vector<std::string>& columns);
    void row_begin();
    void field(const std::string& s);
    void field(double v);
    void field(long long v);
    void row_end();

    static std::string format_double(double v);

private:
    std::ofstream os_;
    bool first_in_row_ = true;
};

/// Rows of doubles; used by the reconstruct command for inputs.
std::vector<Vector> read_csv_rows(const std::string& path);

/// FNV-1a over bytes; manifest hashing.
std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a_file(const std::string& path);

}  // namespace iresnet
