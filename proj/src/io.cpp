#include "ecokit/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "ecokit/error.hpp"

namespace ecokit::io {

std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t fnv1a_file(const std::string& path) {
    return fnv1a(read_file(path));
}

std::string hash_hex(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file for reading: " + path);
    std::ostringstream out;
    out << in.rdbuf();
    if (in.bad()) throw Error("read failed: " + path);
    return std::move(out).str();
}

void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open file for writing: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("write failed: " + path);
}

std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            fields.emplace_back(line.substr(start));
            return fields;
        }
        fields.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

bool parse_double(std::string_view text, double& out) {
    if (text.empty()) return false;
    const std::string owned(text);
    char* end = nullptr;
    out = std::strtod(owned.c_str(), &end);
    return end == owned.c_str() + owned.size();
}

bool parse_i64(std::string_view text, std::int64_t& out) {
    if (text.empty()) return false;
    const std::string owned(text);
    char* end = nullptr;
    out = std::strtoll(owned.c_str(), &end, 10);
    return end == owned.c_str() + owned.size();
}

bool parse_u64(std::string_view text, std::uint64_t& out) {
    if (text.empty() || text.front() == '-') return false;
    const std::string owned(text);
    char* end = nullptr;
    out = std::strtoull(owned.c_str(), &end, 10);
    return end == owned.c_str() + owned.size();
}

}  // namespace ecokit::io
