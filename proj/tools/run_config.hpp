#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gdfm::cli {

/// Resolved settings of one run as ordered key/value strings. Values come
/// from command defaults, then a flat config file, then flags.
struct RunConfig {
  std::string command;
  std::map<std::string, std::string> values;
  std::filesystem::path out;

  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;
  std::optional<std::string> find(const std::string& key) const;
  long get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<long> get_int_list(const std::string& key) const;
  std::vector<std::string> get_list(const std::string& key) const;
};

struct KeySpec {
  std::string key;
  std::string help;
  std::vector<std::string> commands;  // empty = every command
};

const std::vector<KeySpec>& key_specs();
const std::vector<std::string>& command_names();

/// Defaults for a command; keys without a default are absent.
std::map<std::string, std::string> command_defaults(const std::string& command);

/// Reads `key = value` lines. Blank lines, `#` comments and `[section]`
/// headers are skipped; values may be double-quoted.
std::map<std::string, std::string> read_flat_config(const std::filesystem::path& path);

/// Keys written to a manifest that are not run settings.
bool is_manifest_only_key(const std::string& key);

/// Hex SHA-256 of a file's bytes.
std::string file_sha256(const std::filesystem::path& path);

/// Writes manifest.toml: command, version, input checksums, then settings.
void write_manifest(const RunConfig& config, const std::map<std::string, std::string>& checksums);

}  // namespace gdfm::cli
