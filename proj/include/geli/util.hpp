#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace geli {

// 64-bit FNV-1a over bytes, folded into `seed` so distinct consumers can
// derive independent hash families from one base seed.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0);

// SplitMix64 finalizer; used to decorrelate bucket index and sign bits
// derived from a single hash, and to derive per-entity RNG seeds.
std::uint64_t splitmix64(std::uint64_t x);

// Shortest decimal representation that round-trips the double; integral
// values print without a decimal point ("75", not "75.0").
std::string format_score(double value);

// Type R-7 quantile (linear interpolation) of a non-empty sorted sample.
double quantile_sorted(const std::vector<double>& sorted, double p);

// Reads a whole file; throws Error{IoError} if it cannot be opened.
std::string read_file(const std::string& path);

// Writes via a temporary file in the same directory followed by an
// atomic rename, creating parent directories as needed.
void atomic_write_file(const std::string& path, std::string_view content);

// Lowercases ASCII and strips leading/trailing punctuation per token;
// splits on whitespace; drops tokens that end up empty.
std::vector<std::string> tokenize(std::string_view text);

}  // namespace geli
