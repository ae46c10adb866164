#include "flatconfig.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace matrixrl {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

FlatConfig FlatConfig::parse(const std::string& text) {
  FlatConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    cfg.values_[key] = value;
    cfg.entries_.emplace_back(key, value);
  }
  return cfg;
}

FlatConfig FlatConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

bool FlatConfig::has(const std::string& key) const { return values_.count(key) > 0; }

std::string FlatConfig::get_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing config key: " + key);
  return it->second;
}

std::string FlatConfig::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}

std::int64_t FlatConfig::get_int(const std::string& key) const {
  const std::string v = get_string(key);
  std::int64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw ConfigError("config key " + key + ": expected integer, got '" + v + "'");
  return out;
}

std::int64_t FlatConfig::get_int(const std::string& key, std::int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}

std::uint64_t FlatConfig::get_u64(const std::string& key) const {
  const std::string v = get_string(key);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw ConfigError("config key " + key + ": expected unsigned integer, got '" + v + "'");
  return out;
}

std::uint64_t FlatConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  return has(key) ? get_u64(key) : fallback;
}

double FlatConfig::get_double(const std::string& key) const {
  const std::string v = get_string(key);
  try {
    std::size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": expected number, got '" + v + "'");
  }
}

double FlatConfig::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

bool FlatConfig::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get_string(key);
  if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
  if (v == "off" || v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key " + key + ": expected on/off, got '" + v + "'");
}

std::vector<std::string> FlatConfig::get_list(const std::string& key) const {
  const std::string v = get_string(key);
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  if (out.empty()) throw ConfigError("config key " + key + ": empty list");
  return out;
}

std::vector<std::uint64_t> FlatConfig::get_u64_list(const std::string& key) const {
  std::vector<std::uint64_t> out;
  for (const auto& item : get_list(key)) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc{} || ptr != item.data() + item.size())
      throw ConfigError("config key " + key + ": expected integer list entry, got '" + item + "'");
    out.push_back(v);
  }
  return out;
}

InstanceConfig instance_config_from(const FlatConfig& cfg) {
  InstanceConfig ic;
  ic.n_states = static_cast<int>(cfg.get_int("n_states"));
  ic.n_actions = static_cast<int>(cfg.get_int("n_actions"));
  ic.d = static_cast<int>(cfg.get_int("d"));
  ic.d_prime = static_cast<int>(cfg.get_int("d_prime"));
  ic.r = static_cast<int>(cfg.get_int("r"));
  ic.P = static_cast<int>(cfg.get_int("P"));
  ic.seed = cfg.get_u64("seed");
  ic.phi_alpha = cfg.get_double("phi_alpha", ic.phi_alpha);
  ic.mix_alpha = cfg.get_double("mix_alpha", ic.mix_alpha);
  ic.anchor_alpha = cfg.get_double("anchor_alpha", ic.anchor_alpha);
  ic.reward_density = cfg.get_double("reward_density", ic.reward_density);
  ic.start_mode = cfg.get_string("start_mode", ic.start_mode);
  return ic;
}

RunConfig run_config_from(const FlatConfig& cfg) {
  RunConfig rc;
  rc.instance = instance_config_from(cfg);
  rc.N = static_cast<int>(cfg.get_int("N"));
  rc.H = static_cast<int>(cfg.get_int("H"));
  rc.delta = cfg.get_double("delta", rc.delta);
  rc.lambda = cfg.get_double("lambda", rc.lambda);
  rc.bonus_scale = cfg.get_double("bonus_scale", rc.bonus_scale);
  rc.bonus_mode = bonus_mode_from_string(cfg.get_string("bonus_mode", "assumption3"));
  rc.allocation = allocation_from_string(cfg.get_string("allocation", "equal"));
  if (cfg.has("algorithms")) rc.algorithms = cfg.get_list("algorithms");
  rc.seeds = cfg.has("seeds") ? cfg.get_u64_list("seeds")
                              : std::vector<std::uint64_t>{rc.instance.seed};
  rc.audits = cfg.get_bool("audits", rc.audits);
  rc.audit_runs = static_cast<int>(cfg.get_int("audit_runs", rc.audit_runs));
  rc.audit_episodes = static_cast<int>(cfg.get_int("audit_episodes", rc.audit_episodes));
  rc.lemma_trials = static_cast<int>(cfg.get_int("lemma_trials", rc.lemma_trials));
  rc.audit_radius_scale = cfg.get_double("audit_radius_scale", rc.audit_radius_scale);
  rc.threads = static_cast<int>(cfg.get_int("threads", rc.threads));
  try {
    rc.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return rc;
}

}  // namespace matrixrl
