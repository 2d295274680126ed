#pragma once

// Headerless numeric CSV reading and writing.

#include "cdexggm/model.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cdexggm {

/// Parses comma-separated numbers. Blank lines and lines starting with '#'
/// are skipped. Throws ParseError (with the 1-based line number) for ragged
/// rows or non-numeric cells, IoError if the file cannot be opened.
Matrix read_csv(const std::filesystem::path& path);
Matrix parse_csv(const std::string& text);

/// 17 significant digits, enough to round-trip any double.
std::string format_number(double value);

/// Writes `header` lines (each prefixed with "# ") followed by the rows of `m`.
void write_csv(const std::filesystem::path& path, const Matrix& m, const std::vector<std::string>& header);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Reads Y and (optionally) X. Y is column-centered when `center` is true; X
/// goes through min_max_scale with the given bounds. Row-count mismatches
/// throw ParseError naming both counts.
Dataset read_dataset(const std::filesystem::path& y_path, const std::optional<std::filesystem::path>& x_path,
                     bool center = true,
                     const std::optional<std::vector<std::pair<double, double>>>& scale_bounds = std::nullopt);

/// First 16 hex digits of the SHA-256 of `text`.
std::string config_digest(const std::string& text);

}  // namespace cdexggm
