#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gumdrop {

// Error taxonomy. The CLI maps these onto its stable exit codes.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct AlignmentError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ModelIoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct TrainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct FlatInputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// FNV-1a, 64 bit. Stable across platforms and runs, unlike std::hash.
uint64_t fnv1a64(std::string_view data, uint64_t state = 14695981039346656037ull);

std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::string strip(std::string_view s);

std::string read_file(const std::string& path);  // throws ParseError if unreadable
void write_file(const std::string& path, std::string_view content);
bool file_exists(const std::string& path);

// Minimal UTF-8 decoding; malformed bytes decode as single-byte codepoints.
std::vector<uint32_t> utf8_codepoints(std::string_view s);
std::string utf8_encode(uint32_t cp);

// Shortest exact decimal form; parsing it back yields the same double.
std::string format_double(double v);

}  // namespace gumdrop
