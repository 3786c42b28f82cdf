#include "geli/util.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "geli/error.hpp"

namespace geli {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError: return "PARSE_ERROR";
    case ErrorCode::ValidationError: return "VALIDATION_ERROR";
    case ErrorCode::IoError: return "IO_ERROR";
    case ErrorCode::ConfigError: return "CONFIG_ERROR";
    case ErrorCode::UnknownTrajectory: return "UNKNOWN_TRAJECTORY";
    case ErrorCode::UnknownChannel: return "UNKNOWN_CHANNEL";
    case ErrorCode::NotAgentTurn: return "NOT_AGENT_TURN";
    case ErrorCode::NoAgentTurns: return "NO_AGENT_TURNS";
    case ErrorCode::TooLong: return "TOO_LONG";
    case ErrorCode::Unparseable: return "UNPARSEABLE";
    case ErrorCode::BadKey: return "BAD_KEY";
    case ErrorCode::BadValue: return "BAD_VALUE";
    case ErrorCode::EmptyAssignment: return "EMPTY_ASSIGNMENT";
    case ErrorCode::TrajectoryMismatch: return "TRAJECTORY_MISMATCH";
    case ErrorCode::OracleUnavailable: return "ORACLE_UNAVAILABLE";
    case ErrorCode::DegenerateCorpus: return "DEGENERATE_CORPUS";
    case ErrorCode::EmptySplit: return "EMPTY_SPLIT";
    case ErrorCode::EmptyCorpus: return "EMPTY_CORPUS";
    case ErrorCode::EmptyTrainingSet: return "EMPTY_TRAINING_SET";
    case ErrorCode::BadK: return "BAD_K";
    case ErrorCode::InsufficientSupport: return "INSUFFICIENT_SUPPORT";
    case ErrorCode::NonFiniteReward: return "NON_FINITE_REWARD";
    case ErrorCode::BadSpec: return "BAD_SPEC";
  }
  return "UNKNOWN";
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = 14695981039346656037ull ^ seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::string format_score(double value) {
  if (std::isfinite(value) && value == std::floor(value) &&
      std::abs(value) < 1e15) {
    return std::to_string(static_cast<long long>(value));
  }
  return nlohmann::json(value).dump();
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) {
    throw Error(ErrorCode::BadValue, "quantile of empty sample");
  }
  if (sorted.size() == 1) return sorted.front();
  double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  auto lo = static_cast<std::size_t>(std::floor(h));
  auto hi = std::min(lo + 1, sorted.size() - 1);
  double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoError, "cannot open " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void atomic_write_file(const std::string& path, std::string_view content) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
      throw Error(ErrorCode::IoError, "short write to " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    throw Error(ErrorCode::IoError,
                "rename " + tmp.string() + " -> " + path + ": " + ec.message());
  }
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) {
      std::size_t a = i, b = j;
      while (a < b && std::ispunct(static_cast<unsigned char>(text[a]))) ++a;
      while (b > a && std::ispunct(static_cast<unsigned char>(text[b - 1]))) --b;
      if (b > a) {
        std::string tok;
        tok.reserve(b - a);
        for (std::size_t k = a; k < b; ++k) {
          tok.push_back(static_cast<char>(
              std::tolower(static_cast<unsigned char>(text[k]))));
        }
        out.push_back(std::move(tok));
      }
    }
    i = j;
  }
  return out;
}

}  // namespace geli
