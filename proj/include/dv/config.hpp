#ifndef DV_CONFIG_HPP_
#define DV_CONFIG_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dv/common.hpp"

namespace dv {

struct KeySpec {
  const char* name;
  const char* def;  // default value, as written in a config file
  const char* help;
};

// One flat schema shared by every subcommand; unknown keys are rejected.
const std::vector<KeySpec>& config_schema();

// Resolved key-value settings. Precedence: built-in defaults < config file
// < command-line overrides.
class RunConfig {
 public:
  RunConfig();  // all defaults

  void load_file(const std::string& path);          // applies config-file layer
  void set(const std::string& key, const std::string& value);  // override layer
  bool has(const std::string& key) const;

  const std::string& get(const std::string& key) const;
  long long get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::uint64_t get_seed(const std::string& key) const;
  std::vector<double> get_double_list(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key) const;

  // canonical "key = value" snapshot, sorted by key
  std::string snapshot() const;
  std::string hash() const;  // hex of fnv1a64 over the snapshot

  // sidecar "<artifact>.meta": hash line plus the full snapshot
  void write_sidecar(const std::string& artifact_path) const;

  // warns (returns a message) when an artifact's recorded hash differs from
  // the current resolved config; empty string when consistent or absent
  std::string check_sidecar(const std::string& artifact_path) const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace dv

#endif  // DV_CONFIG_HPP_
