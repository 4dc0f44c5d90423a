#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tickerwatch {

// Exit-code classes used by the CLI.
enum class ExitCode : int {
  ok = 0,
  failure = 1,
  input = 2,
  config = 3,
  infeasible = 4,
};

/// Bad or inconsistent input data (files, rows, series).
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bad configuration (missing keys, unparsable values, unknown options).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Structurally valid inputs on which the requested analysis cannot run.
struct AnalysisError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Deterministic, locale-independent float formatting for all emitted files.
std::string fmt_double(double v, int significant_digits = 12);

std::vector<std::string> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);
std::string join(const std::vector<std::string>& parts, const std::string& sep);
std::string lower(std::string_view s);
bool starts_with(std::string_view s, std::string_view prefix);

/// Authors whose identity is unavailable; they count toward activity but
/// never enter user graphs or influencer sets.
bool is_sentinel_author(std::string_view author);

/// FNV-1a; used for deterministic run stamps.
std::uint64_t fnv1a64(std::string_view s);

/// Locale-independent numeric parsing.
bool try_parse_long(std::string_view s, long& out);
bool try_parse_double(std::string_view s, double& out);
long parse_long(std::string_view s, const std::string& what);
double parse_double(std::string_view s, const std::string& what);

}  // namespace tickerwatch
