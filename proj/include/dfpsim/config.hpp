#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dfpsim/types.hpp"

namespace dfp {

// Flat `key = value` file with `#` comments. Unknown keys are kept so callers
// can reject or ignore them explicitly.
class KeyValueFile {
 public:
  static KeyValueFile parse_file(const std::string& path);
  static KeyValueFile parse_text(const std::string& text,
                                 const std::string& origin = "<string>");

  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;  // throws ConfigError
  std::string get_or(const std::string& key, const std::string& fallback) const;
  std::int64_t get_int(const std::string& key) const;
  std::int64_t get_int_or(const std::string& key, std::int64_t fallback) const;
  double get_double(const std::string& key) const;
  double get_double_or(const std::string& key, double fallback) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const {
    return entries_;
  }
  const std::string& origin() const { return origin_; }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;  // file order
  std::map<std::string, std::string> index_;
  std::string origin_;
};

constexpr double kGiB = 1073741824.0;  // 2^30 bytes

enum class RoutingMode { fpar, minimal_only };

struct RoutingConfig {
  RoutingMode mode = RoutingMode::fpar;
  double threshold_t = 0.5;
  bool allow_spine_divert = true;

  void check() const;  // threshold in (0,1) for fpar
};

struct EngineConfig {
  std::int64_t chunk_bytes = 4096;
  std::int64_t buffer_bytes = 32768;  // per (port, VL) queue
  Ns router_delay_ns = 100;
  Ns sample_interval_ns = 10000;

  void check() const;
};

struct TopologyParams;  // topology.hpp

// All knobs a single simulation needs, parsed from one network config file.
struct SimConfig {
  // topology
  int num_groups = 0;
  int spines_per_group = 0;
  int leaves_per_group = 0;
  int terminals_per_leaf = 0;
  int global_links_per_spine = 0;
  double bw_global = 0;    // bytes/sec
  double bw_local = 0;     // bytes/sec
  double bw_terminal = 0;  // bytes/sec

  EngineConfig engine;
  RoutingConfig routing;

  static SimConfig from_file(const std::string& path);
  static SimConfig from_kv(const KeyValueFile& kv);
  TopologyParams topology_params() const;

  // Canonical `key = value` rendering, one knob per line (manifest section).
  std::string render() const;
};

RoutingMode parse_routing_mode(const std::string& s);
const char* to_string(RoutingMode m);

}  // namespace dfp
