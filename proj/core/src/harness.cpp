#include "clusterwalk/harness.hpp"

#include <cctype>
#include <cstdio>
#include <ctime>
#include <sstream>

#include <nlohmann/json.hpp>

#include "clusterwalk/report.hpp"
#include "clusterwalk/version.hpp"

namespace clusterwalk {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ParameterError("config key '" + key + "' needs a number, got '" + v + "'");
  }
}

std::int64_t parse_i64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const std::int64_t x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ParameterError("config key '" + key + "' needs an integer, got '" + v + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    // stoull would happily wrap "-4" around; treat any sign as malformed
    if (v.find('-') != std::string::npos) throw std::invalid_argument(v);
    std::size_t pos = 0;
    const std::uint64_t x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ParameterError("config key '" + key + "' needs an unsigned integer, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ParameterError("config key '" + key + "' needs true/false, got '" + v + "'");
}

std::vector<double> parse_double_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::string item;
  std::istringstream ss(v);
  while (std::getline(ss, item, ',')) {
    const std::string t = trim(item);
    if (!t.empty()) out.push_back(parse_double(key, t));
  }
  return out;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double(v[i]);
  }
  return out;
}

}  // namespace

std::map<std::string, std::string> RunConfig::to_map() const {
  std::map<std::string, std::string> kv;
  kv["command"] = command;
  kv["p"] = format_double(p);
  kv["d"] = std::to_string(d);
  kv["n"] = std::to_string(n);
  kv["beta"] = format_double(beta);
  kv["t-max"] = std::to_string(t_max);
  kv["replicas"] = std::to_string(replicas);
  kv["samples"] = std::to_string(samples);
  kv["seed"] = std::to_string(seed);
  kv["out"] = out_dir;
  kv["restriction"] = restriction_name(restriction);
  kv["cluster-scope"] = cluster_scope_name(scope);
  kv["margin"] = std::to_string(margin);
  kv["threads"] = std::to_string(threads);
  kv["deterministic"] = deterministic ? "true" : "false";
  kv["delta"] = format_double(delta);
  kv["theta"] = format_double(theta);
  kv["epsilon"] = format_double(epsilon);
  kv["mode"] = mode;
  kv["betas"] = join_doubles(betas);
  kv["continuize"] = continuize ? "true" : "false";
  return kv;
}

void apply_config_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "command") cfg.command = value;
  else if (key == "p") cfg.p = parse_double(key, value);
  else if (key == "d") cfg.d = static_cast<int>(parse_i64(key, value));
  else if (key == "n") cfg.n = static_cast<std::int32_t>(parse_i64(key, value));
  else if (key == "beta") cfg.beta = parse_double(key, value);
  else if (key == "t-max") cfg.t_max = parse_i64(key, value);
  else if (key == "replicas") cfg.replicas = static_cast<int>(parse_i64(key, value));
  else if (key == "samples") cfg.samples = parse_i64(key, value);
  else if (key == "seed") cfg.seed = parse_u64(key, value);
  else if (key == "out") cfg.out_dir = value;
  else if (key == "restriction") cfg.restriction = restriction_from_name(value);
  else if (key == "cluster-scope") cfg.scope = cluster_scope_from_name(value);
  else if (key == "margin") cfg.margin = static_cast<std::int32_t>(parse_i64(key, value));
  else if (key == "threads") cfg.threads = static_cast<int>(parse_i64(key, value));
  else if (key == "deterministic") cfg.deterministic = parse_bool(key, value);
  else if (key == "delta") cfg.delta = parse_double(key, value);
  else if (key == "theta") cfg.theta = parse_double(key, value);
  else if (key == "epsilon") cfg.epsilon = parse_double(key, value);
  else if (key == "mode") cfg.mode = value;
  else if (key == "betas") cfg.betas = parse_double_list(key, value);
  else if (key == "continuize") cfg.continuize = parse_bool(key, value);
  else throw ParameterError("unknown config key '" + key + "'");
}

RunConfig RunConfig::from_map(const std::map<std::string, std::string>& kv) {
  RunConfig cfg;
  for (const auto& [k, v] : kv) apply_config_key(cfg, k, v);
  return cfg;
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ParameterError("config line " + std::to_string(lineno) + " is not key = value: '" + t + "'");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw ParameterError("config line " + std::to_string(lineno) + " has an empty key");
    kv[key] = value;
  }
  return kv;
}

std::string serialize_key_values(const std::map<std::string, std::string>& kv) {
  std::string out;
  for (const auto& [k, v] : kv) {
    out += k;
    out += " = ";
    out += v;
    out += '\n';
  }
  return out;
}

void validate_config(const RunConfig& cfg) {
  if (!(cfg.p > 0.0 && cfg.p < 1.0))
    throw ParameterError("p must lie strictly between 0 and 1");
  if (cfg.d < 1 || cfg.d > 3) throw ParameterError("d must be 1, 2, or 3");
  if (cfg.n < 1) throw ParameterError("n must be >= 1");
  if (cfg.beta < 0.0) throw ParameterError("beta must be >= 0");
  if (cfg.t_max < 1) throw ParameterError("t-max must be >= 1");
  if (cfg.replicas < 1) throw ParameterError("replicas must be >= 1");
  if (cfg.samples < 1) throw ParameterError("samples must be >= 1");
  if (cfg.margin < -1) throw ParameterError("margin must be >= 0 (or -1 for the default)");
  if (cfg.threads < 0) throw ParameterError("threads must be >= 0 (0 = all cores)");
  if (cfg.delta <= 0.0) throw ParameterError("delta must be positive");
  if (!(cfg.theta > 0.0 && cfg.theta < 1.0))
    throw ParameterError("theta must lie strictly between 0 and 1");
  if (cfg.mode != "cluster" && cfg.mode != "displacement")
    throw ParameterError("mode must be cluster or displacement");
  for (double b : cfg.betas)
    if (b < 0.0) throw ParameterError("betas must all be >= 0");
}

void ensure_subcritical(double p, int d) {
  const double guard = subcritical_guard(d);
  if (p >= guard) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "p = %g is at or above the subcritical guard %g for d = %d; "
                  "cluster growth on the full lattice is not safe there",
                  p, guard, d);
    throw ParameterError(buf);
  }
}

std::string manifest_json(const RunManifest& m) {
  nlohmann::json j;
  j["tool"] = m.tool_version;
  j["command"] = m.config.command;
  j["config"] = m.config.to_map();
  nlohmann::json outs = nlohmann::json::array();
  for (const ManifestEntry& e : m.outputs) {
    char sum[24];
    std::snprintf(sum, sizeof(sum), "%016llx", static_cast<unsigned long long>(e.checksum));
    outs.push_back({{"file", e.name}, {"fnv1a64", sum}, {"bytes", e.bytes}});
  }
  j["outputs"] = outs;
  if (!m.timestamp.empty()) j["timestamp"] = m.timestamp;
  return j.dump(2) + "\n";
}

std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------
// Snapshots

namespace {

std::string snapshot_text(const Environment& env, std::int32_t core_n,
                          std::int32_t margin, std::uint64_t seed,
                          int escalations) {
  if (!env.grid_backed())
    throw ParameterError("only grid-backed environments can be written as snapshots");
  const BoxSpec& region = env.region();
  const std::vector<std::uint8_t>& grid = env.grid();
  std::string out;
  out += "clusterwalk-env 1\n";
  out += "d " + std::to_string(env.dim()) + "\n";
  out += "core " + std::to_string(core_n) + "\n";
  out += "margin " + std::to_string(margin) + "\n";
  out += "p " + format_double(env.p()) + "\n";
  out += "seed " + std::to_string(seed) + "\n";
  out += "escalations " + std::to_string(escalations) + "\n";
  out += "grid " + std::to_string(region.n) + "\n";
  const std::int64_t row_len = region.n;
  out.reserve(out.size() + grid.size() + grid.size() / static_cast<std::size_t>(row_len) + 16);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out += grid[i] ? '1' : '0';
    if ((static_cast<std::int64_t>(i) + 1) % row_len == 0) out += '\n';
  }
  return out;
}

}  // namespace

std::string environment_text(const Environment& env) {
  return snapshot_text(env, env.box() != nullptr ? env.box()->n : 0, env.margin(),
                       env.seed(), env.escalations());
}

std::string environment_text(const EnvSnapshot& snap) {
  return snapshot_text(snap.env, snap.core.n, snap.margin, snap.seed, snap.escalations);
}

EnvSnapshot environment_from_text(const std::string& text) {
  std::istringstream ss(text);
  std::string magic;
  int fmt = 0;
  if (!(ss >> magic >> fmt) || magic != "clusterwalk-env" || fmt != 1)
    throw ParameterError("not a recognizable environment snapshot");
  std::map<std::string, std::string> head;
  for (const char* want : {"d", "core", "margin", "p", "seed", "escalations", "grid"}) {
    std::string key, value;
    if (!(ss >> key >> value) || key != want)
      throw ParameterError("snapshot header is missing the '" + std::string(want) + "' line");
    head[key] = value;
  }
  const int d = static_cast<int>(parse_i64("d", head["d"]));
  const std::int32_t core_n = static_cast<std::int32_t>(parse_i64("core", head["core"]));
  const std::int32_t grid_n = static_cast<std::int32_t>(parse_i64("grid", head["grid"]));
  const BoxSpec region(grid_n, d);

  std::vector<std::uint8_t> statuses;
  statuses.reserve(static_cast<std::size_t>(region.volume()));
  std::string row;
  while (std::getline(ss, row)) {
    for (char c : row) {
      if (c == '0' || c == '1') statuses.push_back(c == '1' ? 1 : 0);
      else if (!std::isspace(static_cast<unsigned char>(c)))
        throw ParameterError("snapshot grid contains a character other than 0/1");
    }
  }
  if (static_cast<std::int64_t>(statuses.size()) != region.volume())
    throw ParameterError("snapshot grid has " + std::to_string(statuses.size()) +
                         " sites, expected " + std::to_string(region.volume()));

  EnvSnapshot snap{Environment::from_grid(region, std::move(statuses), parse_double("p", head["p"])),
                   BoxSpec(core_n > 0 ? core_n : grid_n, d),
                   static_cast<std::int32_t>(parse_i64("margin", head["margin"])),
                   parse_u64("seed", head["seed"]),
                   static_cast<int>(parse_i64("escalations", head["escalations"]))};
  return snap;
}

}
