#pragma once

#include "isa/core_types.hpp"

#include <filesystem>
#include <string>

namespace isa::io {

/// Reads a headerless CSV of decimal literals into a dense matrix. All rows
/// must have the same number of fields.
MatrixXd read_matrix_csv(const std::filesystem::path& path);
MatrixXd parse_matrix_csv(const std::string& text);

/// Writes one row per line with 17 significant digits, LF line endings.
void write_matrix_csv(const std::filesystem::path& path, const MatrixXd& m);
std::string format_matrix_csv(const MatrixXd& m);

/// Partition JSON: {"groups": [[1,2,...],[...]]} with 1-based indices.
GroupPartition read_partition_json(const std::filesystem::path& path);
GroupPartition parse_partition_json(const std::string& text);
void write_partition_json(const std::filesystem::path& path, const GroupPartition& p);
std::string format_partition_json(const GroupPartition& p);

/// Shortest-roundtrip-safe decimal with 17 significant digits.
std::string format_double(double v, int significant_digits = 17);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace isa::io
