#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "fracshe/params.hpp"

namespace fracshe {

inline constexpr int kJsonSchemaVersion = 1;

/// Exit codes of dispatch().
inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitRuntime = 2;
inline constexpr int kExitUsage = 64;

struct RunManifest {
  ModelParams params;
  std::string subcommand;
  std::uint64_t seed = 0;
  std::string version;
  /// UTC, ISO 8601. Taken from SOURCE_DATE_EPOCH when set.
  std::string timestamp;
  std::vector<std::string> outputs;

  nlohmann::json to_json() const;
  /// FNV-1a of the manifest JSON without the timestamp, as 16 hex digits.
  std::string hash() const;
};

std::string current_timestamp();

/// A numeric table; the comment becomes a leading '#' line.
struct CsvTable {
  std::string comment;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

/// Values use 17 significant digits. IO failures throw Error naming the path.
void write_csv(const std::filesystem::path& path, const CsvTable& table);
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

/// Runs one subcommand. `args` excludes the program name.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string usage();

}  // namespace fracshe
