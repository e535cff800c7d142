#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ecokit::io {

// Formats a double with enough digits to round-trip exactly; every persisted
// float goes through this so reruns are byte-identical.
[[nodiscard]] std::string fmt_g17(double v);

// 64-bit FNV-1a content hashes, used for pipeline cache fingerprints.
[[nodiscard]] std::uint64_t fnv1a(std::string_view bytes);
[[nodiscard]] std::uint64_t fnv1a_file(const std::string& path);
[[nodiscard]] std::string hash_hex(std::uint64_t h);

[[nodiscard]] std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

// Splits on an unquoted separator; fields in our formats never embed
// separators (ingest rejects ids containing them).
[[nodiscard]] std::vector<std::string> split(std::string_view line, char sep);

[[nodiscard]] bool parse_double(std::string_view text, double& out);
[[nodiscard]] bool parse_i64(std::string_view text, std::int64_t& out);
[[nodiscard]] bool parse_u64(std::string_view text, std::uint64_t& out);

}  // namespace ecokit::io
