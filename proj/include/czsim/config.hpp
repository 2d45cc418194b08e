#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "czsim/device.hpp"

namespace czsim {

/// INI-style key/value document. Keys are addressed as "section.key";
/// lookups of missing keys throw ConfigError naming the key.
class ConfigDocument {
 public:
  ConfigDocument() = default;

  /// Throws ConfigError("config_unreadable") naming the path.
  static ConfigDocument load(const std::filesystem::path& path);
  static ConfigDocument parse(std::string_view text, std::filesystem::path base_dir = {});

  const std::filesystem::path& base_dir() const { return base_dir_; }
  const std::map<std::string, std::string>& entries() const { return entries_; }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  bool has_section(std::string_view section) const;
  void set(const std::string& key, std::string value) { entries_[key] = std::move(value); }

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<std::string> get_strings(const std::string& key) const;
  /// "lo:hi:count" (inclusive linspace) or a comma-separated list.
  std::vector<double> get_grid(const std::string& key) const;

  /// Path value resolved against the document's directory.
  std::filesystem::path get_path(const std::string& key) const;

  std::vector<std::string> keys_in(std::string_view section) const;
  /// Throws ConfigError for keys in `section` not matched by `allowed`
  /// (entries ending in '*' match by prefix).
  void require_known(std::string_view section, const std::set<std::string>& allowed) const;

 private:
  std::map<std::string, std::string> entries_;
  std::filesystem::path base_dir_;
};

std::vector<double> parse_grid(std::string_view text);
std::vector<std::string> split_list(std::string_view text);

/// Chain parameters from a [device] block (GHz units). Keys: qubit_freqs,
/// qubit_anharm, coupler_freqs, coupler_anharm, r_nn, r_nnn, levels,
/// active_qubit, and coupling.<i>-<j> ratio overrides by mode index.
ChainParameters chain_from_config(const ConfigDocument& doc, const std::string& section = "device");
Device device_from_config(const ConfigDocument& doc, const std::string& section = "device");

}  // namespace czsim
