#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "sptcov/model.hpp"

namespace sptcov {

// Stack file: "SPTC1", u16 version, u32 n, u32 k1, u32 k2, u32 flags, then
// n*k1*k2 little-endian doubles (sample-major, row-major inside a sample).
inline constexpr std::string_view kStackMagic = "SPTC1";
inline constexpr std::uint16_t kStackVersion = 1;
inline constexpr std::uint32_t kStackCentered = 1u;
inline constexpr std::size_t kStackHeaderBytes = 5 + 2 + 4 * 4;

std::string encode_stack(const SampleStack& s);
SampleStack decode_stack(std::string_view bytes);
void write_stack(const std::filesystem::path& path, const SampleStack& s);
SampleStack read_stack(const std::filesystem::path& path);

/// Lossless text for a double (hexadecimal float) and its inverse.
std::string hexfloat(double v);
double parse_hexfloat(std::string_view s);

inline constexpr int kModelVersion = 1;

nlohmann::json model_to_json(const SepPlusBandedCov& c, const nlohmann::json& provenance = nlohmann::json::object());
SepPlusBandedCov model_from_json(const nlohmann::json& j);
void write_model(const std::filesystem::path& path, const SepPlusBandedCov& c,
                 const nlohmann::json& provenance = nlohmann::json::object());
SepPlusBandedCov read_model(const std::filesystem::path& path);

/// Comma separated, no header, shortest round-trip decimal text.
std::string format_csv(const Matrix& m);
Matrix parse_csv(std::string_view text);
void write_csv(const std::filesystem::path& path, const Matrix& m);
Matrix read_csv(const std::filesystem::path& path);

/// Every *.csv in `dir` (lexicographic order) as one sample.
SampleStack import_csv_dir(const std::filesystem::path& dir);
/// Writes sample_000000.csv, sample_000001.csv, ...
void export_csv_dir(const SampleStack& s, const std::filesystem::path& dir);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

/// FNV-1a, as 16 hex digits.
std::string content_hash(std::string_view text);

}  // namespace sptcov
