#include "czsim/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "czsim/error.hpp"

namespace czsim {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& key, std::string_view text) {
  const std::string t = trim(text);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    if (t == "inf" || t == "infinity") return std::numeric_limits<double>::infinity();
    throw ConfigError("key '" + key + "': expected a number, got '" + t + "'");
  }
  return v;
}

}  // namespace

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto piece = trim(text.substr(start, comma == std::string_view::npos ? text.npos : comma - start));
    if (!piece.empty()) out.push_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<double> parse_grid(std::string_view text) {
  const std::string t = trim(text);
  if (t.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(t);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) throw ConfigError("grid '" + t + "': expected lo:hi:count");
    const double lo = to_double("grid", parts[0]);
    const double hi = to_double("grid", parts[1]);
    const double n = to_double("grid", parts[2]);
    if (n < 1 || n != std::floor(n)) throw ConfigError("grid '" + t + "': count must be a positive integer");
    const int count = static_cast<int>(n);
    if (count == 1) {
      if (lo != hi) throw ConfigError("grid '" + t + "': a single point needs lo == hi");
      return {lo};
    }
    std::vector<double> out(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (count - 1);
    out.back() = hi;
    return out;
  }
  std::vector<double> out;
  for (const auto& p : split_list(t)) out.push_back(to_double("grid", p));
  if (out.empty()) throw ConfigError("grid is empty");
  return out;
}

ConfigDocument ConfigDocument::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("config_unreadable", "cannot read config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.parent_path());
}

ConfigDocument ConfigDocument::parse(std::string_view text, std::filesystem::path base_dir) {
  boost::property_tree::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  ConfigDocument doc;
  doc.base_dir_ = std::move(base_dir);
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("key '" + section + "' is outside any section");
    for (const auto& [key, value] : body) doc.entries_[section + "." + key] = trim(value.data());
  }
  return doc;
}

bool ConfigDocument::has_section(std::string_view section) const {
  const std::string prefix = std::string(section) + ".";
  auto it = entries_.lower_bound(prefix);
  return it != entries_.end() && it->first.compare(0, prefix.size(), prefix) == 0;
}

std::string ConfigDocument::get_string(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("missing required key '" + key + "'");
  return it->second;
}

std::string ConfigDocument::get_string(const std::string& key, const std::string& fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

double ConfigDocument::get_double(const std::string& key) const { return to_double(key, get_string(key)); }

double ConfigDocument::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

long long ConfigDocument::get_int(const std::string& key) const {
  const std::string t = get_string(key);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size())
    throw ConfigError("key '" + key + "': expected an integer, got '" + t + "'");
  return v;
}

long long ConfigDocument::get_int(const std::string& key, long long fallback) const {
  return has(key) ? get_int(key) : fallback;
}

bool ConfigDocument::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  std::string t = get_string(key);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "true" || t == "yes" || t == "on" || t == "1") return true;
  if (t == "false" || t == "no" || t == "off" || t == "0") return false;
  throw ConfigError("key '" + key + "': expected a boolean, got '" + t + "'");
}

std::vector<double> ConfigDocument::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const auto& p : split_list(get_string(key))) out.push_back(to_double(key, p));
  return out;
}

std::vector<std::string> ConfigDocument::get_strings(const std::string& key) const {
  return split_list(get_string(key));
}

std::vector<double> ConfigDocument::get_grid(const std::string& key) const {
  try {
    return parse_grid(get_string(key));
  } catch (const ConfigError& e) {
    throw ConfigError("key '" + key + "': " + e.what());
  }
}

std::filesystem::path ConfigDocument::get_path(const std::string& key) const {
  std::filesystem::path p = get_string(key);
  if (p.is_relative() && !base_dir_.empty()) p = base_dir_ / p;
  return p;
}

std::vector<std::string> ConfigDocument::keys_in(std::string_view section) const {
  const std::string prefix = std::string(section) + ".";
  std::vector<std::string> out;
  for (auto it = entries_.lower_bound(prefix); it != entries_.end(); ++it) {
    if (it->first.compare(0, prefix.size(), prefix) != 0) break;
    out.push_back(it->first.substr(prefix.size()));
  }
  return out;
}

void ConfigDocument::require_known(std::string_view section, const std::set<std::string>& allowed) const {
  for (const auto& key : keys_in(section)) {
    bool ok = allowed.count(key) != 0;
    for (const auto& a : allowed)
      if (!ok && !a.empty() && a.back() == '*' && key.compare(0, a.size() - 1, a, 0, a.size() - 1) == 0) ok = true;
    if (!ok) throw ConfigError("unknown key '" + std::string(section) + "." + key + "'");
  }
}

ChainParameters chain_from_config(const ConfigDocument& doc, const std::string& section) {
  doc.require_known(section, {"qubit_freqs", "qubit_anharm", "coupler_freqs", "coupler_anharm", "r_nn", "r_nnn",
                              "levels", "active_qubit", "coupling.*"});
  const std::string s = section + ".";
  ChainParameters p;
  p.qubit_freq_ghz = doc.get_doubles(s + "qubit_freqs");
  p.coupler_freq_ghz = doc.get_doubles(s + "coupler_freqs");
  p.qubit_anharm_ghz = doc.get_doubles(s + "qubit_anharm");
  p.coupler_anharm_ghz = doc.get_doubles(s + "coupler_anharm");
  // a single anharmonicity applies to every element of that kind
  if (p.qubit_anharm_ghz.size() == 1) p.qubit_anharm_ghz.resize(p.qubit_freq_ghz.size(), p.qubit_anharm_ghz[0]);
  if (p.coupler_anharm_ghz.size() == 1)
    p.coupler_anharm_ghz.resize(p.coupler_freq_ghz.size(), p.coupler_anharm_ghz[0]);
  p.r_nn = doc.get_double(s + "r_nn", p.r_nn);
  p.r_nnn = doc.get_double(s + "r_nnn", p.r_nnn);
  p.levels = static_cast<int>(doc.get_int(s + "levels", p.levels));
  p.active_qubit = static_cast<int>(doc.get_int(s + "active_qubit", p.active_qubit));
  for (const auto& key : doc.keys_in(section)) {
    if (key.rfind("coupling.", 0) != 0) continue;
    const std::string pair = key.substr(9);
    const auto dash = pair.find('-');
    int i = 0, j = 0;
    if (dash == std::string::npos ||
        std::from_chars(pair.data(), pair.data() + dash, i).ec != std::errc() ||
        std::from_chars(pair.data() + dash + 1, pair.data() + pair.size(), j).ec != std::errc())
      throw ConfigError("key '" + s + key + "': expected coupling.<i>-<j>");
    p.ratio_overrides[{std::min(i, j), std::max(i, j)}] = doc.get_double(s + key);
  }
  return p;
}

Device device_from_config(const ConfigDocument& doc, const std::string& section) {
  try {
    return Device::chain(chain_from_config(doc, section));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("invalid device: " + std::string(e.what()));
  }
}

}  // namespace czsim
