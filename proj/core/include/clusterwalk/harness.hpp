#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "clusterwalk/clusters.hpp"
#include "clusterwalk/environment.hpp"
#include "clusterwalk/walk.hpp"

namespace clusterwalk {

// Flat parameter record shared by the command-line tool and the run
// manifests it writes.  Keys in the text form match the long option names,
// so a config file line and a flag spell a parameter the same way.
struct RunConfig {
  std::string command;
  double p = 0.3;
  int d = 2;
  std::int32_t n = 16;
  double beta = 0.5;
  std::int64_t t_max = 100000;
  int replicas = 100;
  std::int64_t samples = 100000;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  Restriction restriction = Restriction::selfloop;
  ClusterScope scope = ClusterScope::margin;
  std::int32_t margin = -1;  // -1 selects the default margin for n
  int threads = 1;
  bool deterministic = false;
  double delta = 0.5;
  double theta = 0.25;
  double epsilon = -1.0;       // -1 selects the command's derived default
  std::string mode = "cluster";
  std::vector<double> betas;
  bool continuize = false;

  std::map<std::string, std::string> to_map() const;
  static RunConfig from_map(const std::map<std::string, std::string>& kv);
};

// Applies one key=value pair; unknown keys throw ParameterError.
void apply_config_key(RunConfig& cfg, const std::string& key, const std::string& value);

// `key = value` lines; '#' starts a comment, blank lines are skipped.
std::map<std::string, std::string> parse_key_values(const std::string& text);
std::string serialize_key_values(const std::map<std::string, std::string>& kv);

// Range checks shared by every command.  Commands that grow clusters on the
// unbounded lattice must additionally pass ensure_subcritical.
void validate_config(const RunConfig& cfg);
void ensure_subcritical(double p, int d);

struct ManifestEntry {
  std::string name;
  std::uint64_t checksum = 0;
  std::int64_t bytes = 0;
};

struct RunManifest {
  std::string tool_version;
  RunConfig config;
  std::vector<ManifestEntry> outputs;
  std::string timestamp;  // empty when the run asked for deterministic output
};

std::string manifest_json(const RunManifest& m);
std::string utc_timestamp();

// ---------------------------------------------------------------------------
// Environment snapshots: a plain-text grid dump that round-trips exactly.

struct EnvSnapshot {
  Environment env;        // grid-backed over the full sampled region
  BoxSpec core;           // box the sample was requested for
  std::int32_t margin = 0;
  std::uint64_t seed = 0;
  int escalations = 0;
};

std::string environment_text(const Environment& env);
std::string environment_text(const EnvSnapshot& snap);  // exact re-serialization
EnvSnapshot environment_from_text(const std::string& text);

}
