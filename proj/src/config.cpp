#include "dfpsim/config.hpp"

#include <charconv>
#include <set>
#include <fstream>
#include <sstream>

#include "dfpsim/topology.hpp"

namespace dfp {

const char* to_string(Vl vl) { return vl == Vl::vl0 ? "VL0" : "VL1"; }

const char* to_string(PathClass pc) {
  switch (pc) {
    case PathClass::minimal: return "minimal";
    case PathClass::intermediate_spine: return "intermediate-spine";
    case PathClass::intermediate_leaf: return "intermediate-leaf";
  }
  return "?";
}

namespace {

std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

KeyValueFile KeyValueFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str(), path);
}

KeyValueFile KeyValueFile::parse_text(const std::string& text,
                                      const std::string& origin) {
  KeyValueFile kv;
  kv.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = strip(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": expected `key = value`, got `" + line + "`");
    }
    std::string key = strip(line.substr(0, eq));
    std::string value = strip(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    }
    if (kv.index_.count(key)) {
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": duplicate key `" + key + "`");
    }
    kv.entries_.emplace_back(key, value);
    kv.index_[key] = value;
  }
  return kv;
}

bool KeyValueFile::has(const std::string& key) const {
  return index_.count(key) != 0;
}

const std::string& KeyValueFile::get(const std::string& key) const {
  auto it = index_.find(key);
  if (it == index_.end()) {
    throw ConfigError(origin_ + ": missing key `" + key + "`");
  }
  return it->second;
}

std::string KeyValueFile::get_or(const std::string& key,
                                 const std::string& fallback) const {
  auto it = index_.find(key);
  return it == index_.end() ? fallback : it->second;
}

std::int64_t KeyValueFile::get_int(const std::string& key) const {
  const std::string& v = get(key);
  std::int64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(origin_ + ": key `" + key + "`: not an integer: `" + v +
                      "`");
  }
  return out;
}

std::int64_t KeyValueFile::get_int_or(const std::string& key,
                                      std::int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}

double KeyValueFile::get_double(const std::string& key) const {
  const std::string& v = get(key);
  try {
    std::size_t pos = 0;
    double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError(origin_ + ": key `" + key + "`: not a number: `" + v +
                      "`");
  }
}

double KeyValueFile::get_double_or(const std::string& key,
                                   double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

void RoutingConfig::check() const {
  if (mode == RoutingMode::fpar &&
      !(threshold_t > 0.0 && threshold_t < 1.0)) {
    throw ConfigError("threshold_T must be in (0,1) for fpar mode, got " +
                      std::to_string(threshold_t));
  }
}

void EngineConfig::check() const {
  if (chunk_bytes < 1) throw ConfigError("chunk_bytes must be >= 1");
  if (buffer_bytes < chunk_bytes) {
    throw ConfigError("buffer_bytes must hold at least one chunk");
  }
  if (router_delay_ns < 0) throw ConfigError("router_delay_ns must be >= 0");
  if (sample_interval_ns < 1) {
    throw ConfigError("sample_interval_ns must be >= 1");
  }
}

RoutingMode parse_routing_mode(const std::string& s) {
  if (s == "fpar") return RoutingMode::fpar;
  if (s == "minimal") return RoutingMode::minimal_only;
  throw ConfigError("routing_mode must be `fpar` or `minimal`, got `" + s +
                    "`");
}

const char* to_string(RoutingMode m) {
  return m == RoutingMode::fpar ? "fpar" : "minimal";
}

SimConfig SimConfig::from_file(const std::string& path) {
  return from_kv(KeyValueFile::parse_file(path));
}

SimConfig SimConfig::from_kv(const KeyValueFile& kv) {
  static const std::set<std::string> known = {
      "num_groups",         "spines_per_group",   "leaves_per_group",
      "terminals_per_leaf", "global_links_per_spine",
      "bw_global_GiBps",    "bw_local_GiBps",     "bw_terminal_GiBps",
      "chunk_bytes",        "buffer_bytes",       "router_delay_ns",
      "sample_interval_ns", "routing_mode",       "threshold_T",
      "allow_spine_divert"};
  for (const auto& [key, value] : kv.entries()) {
    if (!known.count(key)) {
      throw ConfigError(kv.origin() + ": unknown key `" + key + "`");
    }
  }
  SimConfig c;
  c.num_groups = static_cast<int>(kv.get_int("num_groups"));
  c.spines_per_group = static_cast<int>(kv.get_int("spines_per_group"));
  c.leaves_per_group = static_cast<int>(kv.get_int("leaves_per_group"));
  c.terminals_per_leaf = static_cast<int>(kv.get_int("terminals_per_leaf"));
  c.global_links_per_spine =
      static_cast<int>(kv.get_int("global_links_per_spine"));
  c.bw_global = kv.get_double("bw_global_GiBps") * kGiB;
  c.bw_local = kv.get_double("bw_local_GiBps") * kGiB;
  c.bw_terminal = kv.get_double("bw_terminal_GiBps") * kGiB;

  c.engine.chunk_bytes = kv.get_int_or("chunk_bytes", c.engine.chunk_bytes);
  c.engine.buffer_bytes = kv.get_int_or("buffer_bytes", c.engine.buffer_bytes);
  c.engine.router_delay_ns =
      kv.get_int_or("router_delay_ns", c.engine.router_delay_ns);
  c.engine.sample_interval_ns =
      kv.get_int_or("sample_interval_ns", c.engine.sample_interval_ns);

  c.routing.mode = parse_routing_mode(kv.get_or("routing_mode", "fpar"));
  c.routing.threshold_t = kv.get_double_or("threshold_T", 0.5);
  c.routing.allow_spine_divert = kv.get_int_or("allow_spine_divert", 1) != 0;

  c.topology_params().check();
  c.engine.check();
  c.routing.check();
  return c;
}

TopologyParams SimConfig::topology_params() const {
  TopologyParams p;
  p.num_groups = num_groups;
  p.spines_per_group = spines_per_group;
  p.leaves_per_group = leaves_per_group;
  p.terminals_per_leaf = terminals_per_leaf;
  p.global_links_per_spine = global_links_per_spine;
  p.bw_global = bw_global;
  p.bw_local = bw_local;
  p.bw_terminal = bw_terminal;
  return p;
}

std::string SimConfig::render() const {
  std::ostringstream out;
  out << "num_groups = " << num_groups << "\n"
      << "spines_per_group = " << spines_per_group << "\n"
      << "leaves_per_group = " << leaves_per_group << "\n"
      << "terminals_per_leaf = " << terminals_per_leaf << "\n"
      << "global_links_per_spine = " << global_links_per_spine << "\n";
  out.precision(17);
  out << "bw_global_GiBps = " << bw_global / kGiB << "\n"
      << "bw_local_GiBps = " << bw_local / kGiB << "\n"
      << "bw_terminal_GiBps = " << bw_terminal / kGiB << "\n"
      << "chunk_bytes = " << engine.chunk_bytes << "\n"
      << "buffer_bytes = " << engine.buffer_bytes << "\n"
      << "router_delay_ns = " << engine.router_delay_ns << "\n"
      << "sample_interval_ns = " << engine.sample_interval_ns << "\n"
      << "routing_mode = " << to_string(routing.mode) << "\n"
      << "threshold_T = " << routing.threshold_t << "\n"
      << "allow_spine_divert = " << (routing.allow_spine_divert ? 1 : 0)
      << "\n";
  return out.str();
}

}  // namespace dfp
