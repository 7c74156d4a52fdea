#pragma once

// Small text helpers shared by the loaders and writers.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace xrec::text {

std::string_view trim(std::string_view s);

/// Splits on runs of spaces and tabs.
std::vector<std::string_view> split_ws(std::string_view s);

std::vector<std::string_view> split(std::string_view s, char sep);

bool is_blank_or_comment(std::string_view line);

double parse_double(std::string_view field, const std::string& source, std::size_t line);
std::int64_t parse_int(std::string_view field, const std::string& source, std::size_t line);

/// Formats with printf-style "%.{digits}g".
std::string format_g(double v, int digits);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

/// splitmix64 finalizer; used to derive independent sub-seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

}  // namespace xrec::text
