#pragma once

#include <filesystem>
#include <string>

#include "mfp/data/series.hpp"

namespace mfp::data {

/// Exact header of merchant series files.
inline constexpr const char* kSeriesCsvHeader =
    "timestamp,approved_count,unique_cards,amount_sum,approval_rate";

/// Parses a merchant series. The merchant id is the file stem.
/// Throws DataError naming the offending row (1-based, header is row 1).
MultivariateSeries load_csv(const std::filesystem::path& path);
MultivariateSeries parse_csv(const std::string& text, std::string merchant_id);

/// Writes values with 17 significant digits; atomic (temp file + rename).
void save_csv(const MultivariateSeries& series, const std::filesystem::path& path);
std::string format_csv(const MultivariateSeries& series);

/// Writes `content` to `path` through a sibling temp file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

} // namespace mfp::data
