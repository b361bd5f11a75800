#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "clusterwalk/clusters.hpp"
#include "clusterwalk/environment.hpp"
#include "clusterwalk/errors.hpp"
#include "clusterwalk/experiments.hpp"
#include "clusterwalk/harness.hpp"
#include "clusterwalk/report.hpp"
#include "clusterwalk/spectral.hpp"
#include "clusterwalk/version.hpp"
#include "clusterwalk/walk.hpp"

using json = nlohmann::json;
using namespace clusterwalk;

namespace {

struct OutputCollector {
  std::string dir;
  std::vector<ManifestEntry> entries;

  void emit(const std::string& name, const std::string& content) {
    const std::uint64_t sum = write_output(dir, name, content);
    entries.push_back({name, sum, static_cast<std::int64_t>(content.size())});
    std::cerr << "[clusterwalk] wrote " << dir << "/" << name << " (" << content.size()
              << " bytes)\n";
  }
};

Environment sampled_env(const RunConfig& cfg) {
  EnvOptions eo;
  eo.margin = cfg.margin;
  return Environment::sample(cfg.p, BoxSpec(cfg.n, cfg.d), cfg.seed, eo);
}

std::string site_text(const LatticePoint& x) { return x.to_string(); }

json base_json(const RunConfig& cfg) {
  json j;
  j["p"] = cfg.p;
  j["d"] = cfg.d;
  j["seed"] = cfg.seed;
  return j;
}

// ---------------------------------------------------------------------------

std::string run_sample_env(const RunConfig& cfg, OutputCollector& out) {
  const Environment env = sampled_env(cfg);
  out.emit("environment.txt", environment_text(env));

  const ClusterMap cmap = label_clusters(env, cfg.scope);
  std::map<std::int64_t, std::int64_t> hist;
  for (std::int64_t s : cmap.sizes) ++hist[s];
  CsvTable table({"size", "clusters"});
  for (const auto& [size, count] : hist) table.begin_row().cell(size).cell(count);
  out.emit("clusters.csv", table.render());

  std::int64_t largest = 0;
  for (std::int64_t s : cmap.sizes) largest = std::max(largest, s);
  json j = base_json(cfg);
  j["n"] = cfg.n;
  j["margin"] = env.margin();
  j["escalations"] = env.escalations();
  j["region_side"] = env.region().n;
  j["cluster_scope"] = cluster_scope_name(cfg.scope);
  j["open_sites"] = cmap.open_count();
  j["clusters"] = cmap.cluster_count();
  j["largest_cluster"] = largest;
  j["open_fraction"] =
      static_cast<double>(cmap.open_count()) / static_cast<double>(cmap.region.volume());
  out.emit("summary.json", j.dump(2) + "\n");

  char line[160];
  std::snprintf(line, sizeof(line), "sampled %dx d=%d region, %lld clusters, largest %lld",
                env.region().n, cfg.d, static_cast<long long>(cmap.cluster_count()),
                static_cast<long long>(largest));
  return line;
}

std::string run_simulate(const RunConfig& cfg, OutputCollector& out, bool boxed) {
  const KernelParams kp{cfg.beta, cfg.d};
  SimulateOptions so;
  so.record_cluster_sizes = true;
  so.restriction = cfg.restriction;

  WalkTrajectory traj;
  if (boxed) {
    const Environment env = sampled_env(cfg);
    so.restrict_box = env.box();
    traj = simulate_discrete(env, kp, cfg.t_max, cfg.seed, so);
  } else {
    ensure_subcritical(cfg.p, cfg.d);
    const Environment env = Environment::lazy(cfg.p, cfg.d, cfg.seed);
    traj = simulate_discrete(env, kp, cfg.t_max, cfg.seed, so);
  }
  if (cfg.continuize) traj = continuize(traj, cfg.seed);

  std::vector<std::string> header{"t"};
  for (int a = 0; a < cfg.d; ++a) header.push_back("x" + std::to_string(a));
  header.push_back("max_disp");
  header.push_back("cluster_size");
  if (cfg.continuize) header.push_back("jump_time");
  CsvTable table(header);
  for (std::size_t t = 0; t < traj.positions.size(); ++t) {
    table.begin_row().cell(static_cast<std::int64_t>(t));
    for (int a = 0; a < cfg.d; ++a)
      table.cell(static_cast<std::int64_t>(traj.positions[t][a]));
    table.cell(traj.max_displacement[t]);
    table.cell(traj.cluster_sizes[t]);
    if (cfg.continuize) table.cell(traj.jump_times[t]);
  }
  out.emit("trajectory.csv", table.render());

  json j = base_json(cfg);
  j["beta"] = cfg.beta;
  j["t_max"] = cfg.t_max;
  j["boxed"] = boxed;
  j["restriction"] = restriction_name(cfg.restriction);
  j["continuized"] = cfg.continuize;
  j["steps"] = traj.steps();
  j["final_site"] = site_text(traj.positions.back());
  j["final_norm"] = traj.positions.back().linf_norm();
  j["max_displacement"] = traj.max_displacement.back();
  out.emit("summary.json", j.dump(2) + "\n");

  char line[160];
  std::snprintf(line, sizeof(line), "walked %lld steps, max displacement %lld, final %s",
                static_cast<long long>(traj.steps()),
                static_cast<long long>(traj.max_displacement.back()),
                site_text(traj.positions.back()).c_str());
  return line;
}

std::string run_gap(const RunConfig& cfg, OutputCollector& out) {
  const Environment env = sampled_env(cfg);
  const BoxSpec box(cfg.n, cfg.d);
  const KernelParams kp{cfg.beta, cfg.d};
  const ChainMatrix chain = build_chain(env, box, kp, cfg.restriction, cfg.scope);
  const bool keep_edges = chain.states() <= 1024;
  const SpectralReport rep = edge_load_bound(chain, keep_edges);

  json j = base_json(cfg);
  j["n"] = cfg.n;
  j["beta"] = cfg.beta;
  j["restriction"] = restriction_name(cfg.restriction);
  j["states"] = chain.states();
  j["gap"] = rep.gap;
  j["gap_times_n2"] = rep.gap_times_n2;
  j["path_constant"] = rep.a_constant;
  j["path_bound"] = rep.bound_one_over_a;
  j["bound_margin"] = rep.margin;
  j["worst_edge_from"] = site_text(rep.worst_edge_from);
  j["worst_edge_to"] = site_text(rep.worst_edge_to);
  j["pairs_streamed"] = rep.pairs_streamed;
  out.emit("gap.json", j.dump(2) + "\n");

  if (keep_edges) {
    CsvTable edges({"from_state", "to_state", "from_site", "to_site", "load_term"});
    for (const auto& [edge, load] : rep.edge_loads) {
      edges.begin_row()
          .cell(edge.a)
          .cell(edge.b)
          .cell(site_text(box.site_at(edge.a)))
          .cell(site_text(box.site_at(edge.b)))
          .cell(load);
    }
    out.emit("edge_loads.csv", edges.render());
  }

  CsvTable cols({"axis", "line_base", "mass"});
  for (const auto& [line, mass] : column_mass_diagnostic(chain))
    cols.begin_row().cell(static_cast<std::int64_t>(line.axis)).cell(site_text(line.base)).cell(mass);
  out.emit("column_mass.csv", cols.render());

  char line[200];
  std::snprintf(line, sizeof(line),
                "gap %.6g, path bound %.6g (margin %.3g), gap*n^2 = %.4g", rep.gap,
                rep.bound_one_over_a, rep.margin, rep.gap_times_n2);
  return line;
}

void emit_exponent_files(const ExponentEstimate& est, const std::string& stem,
                         OutputCollector& out) {
  CsvTable table({"t", "mean_log_max_disp"});
  for (std::size_t i = 0; i < est.time_grid.size(); ++i)
    table.begin_row().cell(est.time_grid[i]).cell(est.mean_log_disp[i]);
  out.emit(stem + ".csv", table.render());

  LinePlot plot;
  plot.title = "max displacement growth (beta = " + format_double(est.beta) + ")";
  plot.x_label = "t";
  plot.y_label = "mean log max displacement";
  plot.log_x = true;
  PlotSeries measured{"measured", {}, {}};
  PlotSeries fitted{"fit slope " + format_double(est.slope), {}, {}};
  for (std::size_t i = 0; i < est.time_grid.size(); ++i) {
    const double t = static_cast<double>(est.time_grid[i]);
    measured.xs.push_back(t);
    measured.ys.push_back(est.mean_log_disp[i]);
    if (static_cast<int>(i) >= est.fit_from) {
      fitted.xs.push_back(t);
      fitted.ys.push_back(est.intercept + est.slope * std::log(t));
    }
  }
  plot.series = {measured, fitted};
  out.emit(stem + ".svg", render_svg(plot));
}

json exponent_json(const ExponentEstimate& est) {
  json j;
  j["p"] = est.p;
  j["d"] = est.d;
  j["beta"] = est.beta;
  j["t_max"] = est.t_max;
  j["replicas"] = est.replicas;
  j["seed"] = est.seed;
  j["slope"] = est.slope;
  j["stderr_slope"] = est.stderr_slope;
  j["intercept"] = est.intercept;
  j["fit_from_t"] = est.time_grid[static_cast<std::size_t>(est.fit_from)];
  j["grid_points"] = est.time_grid.size();
  return j;
}

std::string run_exponent(const RunConfig& cfg, OutputCollector& out) {
  ensure_subcritical(cfg.p, cfg.d);
  ExponentOptions eo;
  eo.threads = cfg.threads;
  const ExponentEstimate est =
      estimate_exponent(cfg.p, cfg.d, cfg.beta, cfg.t_max, cfg.replicas, cfg.seed, eo);
  emit_exponent_files(est, "exponent", out);
  out.emit("exponent.json", exponent_json(est).dump(2) + "\n");

  char line[160];
  std::snprintf(line, sizeof(line), "slope %.4f +- %.4f over %d replicas (t up to %lld)",
                est.slope, est.stderr_slope, est.replicas,
                static_cast<long long>(est.time_grid.back()));
  return line;
}

std::string run_sweep(const RunConfig& cfg, OutputCollector& out) {
  ensure_subcritical(cfg.p, cfg.d);
  std::vector<double> betas = cfg.betas;
  if (betas.empty()) betas = {0.0, 0.1, 0.5, 1.0, 2.0};
  ExponentOptions eo;
  eo.threads = cfg.threads;
  const std::vector<ExponentEstimate> ests =
      beta_sweep(cfg.p, cfg.d, betas, cfg.t_max, cfg.replicas, cfg.seed, eo);

  CsvTable table({"beta", "slope", "stderr_slope", "intercept"});
  LinePlot plot;
  plot.title = "displacement exponent vs beta";
  plot.x_label = "beta";
  plot.y_label = "fitted slope";
  PlotSeries series{"slope", {}, {}};
  json arr = json::array();
  for (const ExponentEstimate& est : ests) {
    table.begin_row().cell(est.beta).cell(est.slope).cell(est.stderr_slope).cell(est.intercept);
    series.xs.push_back(est.beta);
    series.ys.push_back(est.slope);
    arr.push_back(exponent_json(est));
  }
  plot.series = {series};
  out.emit("sweep.csv", table.render());
  out.emit("sweep.svg", render_svg(plot));
  json j = base_json(cfg);
  j["t_max"] = cfg.t_max;
  j["replicas"] = cfg.replicas;
  j["estimates"] = arr;
  out.emit("sweep.json", j.dump(2) + "\n");

  std::string line = "slopes:";
  for (const ExponentEstimate& est : ests) {
    char part[64];
    std::snprintf(part, sizeof(part), " beta %g -> %.4f", est.beta, est.slope);
    line += part;
  }
  return line;
}

std::string run_escape(const RunConfig& cfg, OutputCollector& out) {
  const Environment env = sampled_env(cfg);
  const KernelParams kp{cfg.beta, cfg.d};
  EscapeOptions eo;
  eo.restriction = cfg.restriction;
  eo.scope = cfg.scope;
  eo.threads = cfg.threads;
  const EscapeSummary sum = escape_time(env, *env.box(), kp, cfg.replicas, cfg.seed, eo);

  CsvTable table({"steps"});
  for (std::int64_t s : sum.steps) table.begin_row().cell(s);
  out.emit("escape_steps.csv", table.render());

  json j = base_json(cfg);
  j["n"] = cfg.n;
  j["beta"] = cfg.beta;
  j["replicas"] = cfg.replicas;
  j["restriction"] = restriction_name(cfg.restriction);
  j["censor_limit"] = sum.censor_limit;
  j["censored"] = sum.censored;
  j["median_steps"] = sum.median_steps;
  j["q1_steps"] = sum.q1_steps;
  j["q3_steps"] = sum.q3_steps;
  j["median_over_n2"] = sum.median_over_n2;
  j["far_mass"] = sum.far_mass;
  j["far_sites"] = sum.far_site_count;
  out.emit("escape.json", j.dump(2) + "\n");

  char line[160];
  std::snprintf(line, sizeof(line), "median escape %g steps (%g * n^2), %d/%d censored",
                sum.median_steps, sum.median_over_n2, sum.censored, cfg.replicas);
  return line;
}

std::string run_sojourn(const RunConfig& cfg, OutputCollector& out) {
  ensure_subcritical(cfg.p, cfg.d);
  const Environment env = Environment::lazy(cfg.p, cfg.d, cfg.seed);
  const KernelParams kp{cfg.beta, cfg.d};
  SimulateOptions so;
  const WalkTrajectory traj = simulate_discrete(env, kp, cfg.t_max, cfg.seed, so);
  LazyClusterCache cache(env);
  const SojournStats stats = sojourn_statistics(traj, cache);

  CsvTable table({"entry_time", "length", "label", "cluster_size", "visit_index"});
  for (const SojournRecord& rec : stats.records)
    table.begin_row()
        .cell(rec.entry_time)
        .cell(rec.length)
        .cell(static_cast<std::int64_t>(rec.label))
        .cell(rec.cluster_size)
        .cell(rec.visit_index);
  out.emit("sojourns.csv", table.render());

  json by_size = json::array();
  for (const auto& [size, mean_len] : stats.mean_length_by_size) {
    json r;
    r["cluster_size"] = size;
    r["visits"] = stats.visits_by_size.at(size);
    r["mean_length"] = mean_len;
    r["floor"] = size >= 2 ? sojourn_floor(cfg.d, cfg.beta, size) : 1.0;
    by_size.push_back(r);
  }
  json j = base_json(cfg);
  j["beta"] = cfg.beta;
  j["t_max"] = cfg.t_max;
  j["open_indices"] = stats.open_indices;
  j["closed_indices"] = stats.closed_indices;
  j["total_indices"] = stats.total_indices;
  j["runs"] = stats.records.size();
  j["by_size"] = by_size;
  out.emit("sojourn.json", j.dump(2) + "\n");

  char line[160];
  std::snprintf(line, sizeof(line), "%zu runs over %lld time indices (%lld on open sites)",
                stats.records.size(), static_cast<long long>(stats.total_indices),
                static_cast<long long>(stats.open_indices));
  return line;
}

std::string run_entry_probe(const RunConfig& cfg, OutputCollector& out) {
  ensure_subcritical(cfg.p, cfg.d);
  EntryProbeOptions eo;
  eo.theta = cfg.theta;
  eo.epsilon = cfg.epsilon;
  const EntryProbeResult res =
      entry_probe(cfg.p, cfg.d, cfg.n, cfg.delta, cfg.beta, cfg.seed, eo);

  CsvTable table({"probe", "exit_time", "exit_site", "cluster_size", "found_big"});
  for (const EntryProbeRecord& rec : res.records)
    table.begin_row()
        .cell(rec.probe_index)
        .cell(rec.exit_time)
        .cell(site_text(rec.exit_site))
        .cell(rec.cluster_size)
        .cell(static_cast<std::int64_t>(rec.found_big ? 1 : 0));
  out.emit("probes.csv", table.render());

  json j = base_json(cfg);
  j["n"] = cfg.n;
  j["beta"] = cfg.beta;
  j["delta"] = res.delta;
  j["theta"] = res.theta;
  j["epsilon"] = res.epsilon;
  j["probe_budget"] = res.probe_budget;
  j["probes"] = res.records.size();
  j["total_walk_steps"] = res.total_walk_steps;
  j["size_threshold"] = res.size_threshold;
  j["big_count"] = res.big_count;
  j["frequency"] = res.frequency;
  j["floor_exact"] = res.floor_exact;
  j["floor_power"] = res.floor_power;
  j["left_box"] = res.left_box;
  j["censored"] = res.censored;
  out.emit("entry_probe.json", j.dump(2) + "\n");

  char line[200];
  std::snprintf(line, sizeof(line),
                "%lld/%zu probes found clusters >= %.3g sites (freq %.4g, floor %.4g)",
                static_cast<long long>(res.big_count), res.records.size(), res.size_threshold,
                res.frequency, res.floor_exact);
  return line;
}

std::string run_tail(const RunConfig& cfg, OutputCollector& out) {
  if (cfg.mode == "displacement") {
    ensure_subcritical(cfg.p, cfg.d);
    const double eps = cfg.epsilon < 0.0 ? 0.1 : cfg.epsilon;
    ExponentOptions eo;
    eo.threads = cfg.threads;
    const DisplacementTailResult res =
        displacement_tail(cfg.p, cfg.d, cfg.beta, cfg.t_max, cfg.replicas, eps, cfg.seed, eo);
    json j = base_json(cfg);
    j["beta"] = cfg.beta;
    j["t"] = res.t;
    j["replicas"] = res.replicas;
    j["epsilon"] = res.epsilon;
    j["threshold"] = res.threshold;
    j["exceed_count"] = res.exceed_count;
    j["frequency"] = res.frequency;
    out.emit("displacement_tail.json", j.dump(2) + "\n");

    char line[160];
    std::snprintf(line, sizeof(line),
                  "%lld/%d replicas beyond t^(1/2+%g) = %.4g (freq %.4g)",
                  static_cast<long long>(res.exceed_count), res.replicas, res.epsilon,
                  res.threshold, res.frequency);
    return line;
  }

  // cluster-size tail at the origin
  const TailStats stats = cluster_tail(cfg.p, cfg.d, cfg.samples, cfg.seed);
  CsvTable table({"threshold", "count", "frequency"});
  for (std::size_t i = 0; i < stats.thresholds.size(); ++i)
    table.begin_row().cell(stats.thresholds[i]).cell(stats.counts[i]).cell(stats.frequencies[i]);
  out.emit("tail.csv", table.render());

  LinePlot plot;
  plot.title = "cluster size tail at the origin";
  plot.x_label = "N";
  plot.y_label = "P[|C| > N]";
  plot.log_y = true;
  PlotSeries series{"frequency", {}, {}};
  for (std::size_t i = 0; i < stats.thresholds.size(); ++i) {
    if (stats.frequencies[i] <= 0.0) continue;
    series.xs.push_back(static_cast<double>(stats.thresholds[i]));
    series.ys.push_back(stats.frequencies[i]);
  }
  plot.series = {series};
  out.emit("tail.svg", render_svg(plot));

  json j = base_json(cfg);
  j["samples"] = stats.sample_count;
  j["cap_hits"] = stats.cap_hits;
  j["log_frequency_slope"] = stats.fitted_slope;
  j["r_squared"] = stats.r_squared;
  out.emit("tail.json", j.dump(2) + "\n");

  char line[160];
  std::snprintf(line, sizeof(line), "tail slope %.4f (r^2 %.4f) from %lld samples",
                stats.fitted_slope, stats.r_squared,
                static_cast<long long>(stats.sample_count));
  return line;
}

// ---------------------------------------------------------------------------

std::string find_config_path(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return argv[i + 1];
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return "";
}

void load_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParameterError("cannot read config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  for (const auto& [k, v] : parse_key_values(buf.str())) {
    if (k == "command") continue;  // the subcommand on the command line decides
    apply_config_key(cfg, k, v);
  }
}

void add_common(CLI::App* sub, RunConfig& cfg, std::string& config_path) {
  sub->add_option("--seed", cfg.seed, "random seed");
  sub->add_option("--out", cfg.out_dir, "output directory");
  sub->add_option("--threads", cfg.threads, "worker threads, 0 = all cores");
  sub->add_flag("--deterministic", cfg.deterministic,
                "byte-stable outputs: no timestamps in the manifest");
  sub->add_option("--config", config_path, "key = value file; explicit flags win");
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  std::string config_path = find_config_path(argc, argv);
  try {
    if (!config_path.empty()) load_config_file(cfg, config_path);
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  CLI::App app{"random walks attracted by percolation clusters"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  bool boxed = false;

  CLI::App* sample = app.add_subcommand("sample-env", "sample an environment and label its clusters");
  sample->add_option("--p", cfg.p, "site density");
  sample->add_option("--d", cfg.d, "dimension (1-3)");
  sample->add_option("--n", cfg.n, "box side");
  sample->add_option("--margin", cfg.margin, "margin ring width, -1 = default");
  sample->add_option("--cluster-scope", [&cfg](const std::vector<std::string>& v) {
    cfg.scope = cluster_scope_from_name(v.back());
    return true;
  }, "margin or truncated");

  CLI::App* simulate = app.add_subcommand("simulate", "run one walk and dump the trajectory");
  simulate->add_option("--p", cfg.p, "site density");
  simulate->add_option("--d", cfg.d, "dimension (1-3)");
  simulate->add_option("--beta", cfg.beta, "attraction strength");
  simulate->add_option("--t-max", cfg.t_max, "number of steps");
  simulate->add_flag("--boxed", boxed, "restrict the walk to the n-box");
  simulate->add_option("--n", cfg.n, "box side (with --boxed)");
  simulate->add_option("--margin", cfg.margin, "margin ring width, -1 = default");
  simulate->add_option("--restriction", [&cfg](const std::vector<std::string>& v) {
    cfg.restriction = restriction_from_name(v.back());
    return true;
  }, "selfloop or renormalize");
  simulate->add_flag("--continuize", cfg.continuize, "attach exponential holding times");

  CLI::App* gap = app.add_subcommand("gap", "exact spectral gap and the canonical-path bound");
  gap->add_option("--p", cfg.p, "site density");
  gap->add_option("--d", cfg.d, "dimension (1-3)");
  gap->add_option("--n", cfg.n, "box side");
  gap->add_option("--beta", cfg.beta, "attraction strength");
  gap->add_option("--margin", cfg.margin, "margin ring width, -1 = default");
  gap->add_option("--restriction", [&cfg](const std::vector<std::string>& v) {
    cfg.restriction = restriction_from_name(v.back());
    return true;
  }, "selfloop or renormalize");
  gap->add_option("--cluster-scope", [&cfg](const std::vector<std::string>& v) {
    cfg.scope = cluster_scope_from_name(v.back());
    return true;
  }, "margin or truncated");

  CLI::App* exponent = app.add_subcommand("exponent", "displacement exponent from replica walks");
  exponent->add_option("--p", cfg.p, "site density");
  exponent->add_option("--d", cfg.d, "dimension (1-3)");
  exponent->add_option("--beta", cfg.beta, "attraction strength");
  exponent->add_option("--t-max", cfg.t_max, "largest time on the dyadic grid");
  exponent->add_option("--replicas", cfg.replicas, "independent walks (>= 30)");

  CLI::App* sweep = app.add_subcommand("sweep", "exponent estimates across betas");
  sweep->add_option("--p", cfg.p, "site density");
  sweep->add_option("--d", cfg.d, "dimension (1-3)");
  sweep->add_option("--betas", cfg.betas, "comma-separated beta list")->delimiter(',');
  sweep->add_option("--t-max", cfg.t_max, "largest time on the dyadic grid");
  sweep->add_option("--replicas", cfg.replicas, "independent walks per beta (>= 30)");

  CLI::App* escape = app.add_subcommand("escape", "steps to reach distance n/4 in the n-box");
  escape->add_option("--p", cfg.p, "site density");
  escape->add_option("--d", cfg.d, "dimension (1-3)");
  escape->add_option("--n", cfg.n, "box side");
  escape->add_option("--beta", cfg.beta, "attraction strength");
  escape->add_option("--replicas", cfg.replicas, "independent walks");
  escape->add_option("--margin", cfg.margin, "margin ring width, -1 = default");
  escape->add_option("--restriction", [&cfg](const std::vector<std::string>& v) {
    cfg.restriction = restriction_from_name(v.back());
    return true;
  }, "selfloop or renormalize");
  escape->add_option("--cluster-scope", [&cfg](const std::vector<std::string>& v) {
    cfg.scope = cluster_scope_from_name(v.back());
    return true;
  }, "margin or truncated");

  CLI::App* sojourn = app.add_subcommand("sojourn", "cluster sojourn lengths along one walk");
  sojourn->add_option("--p", cfg.p, "site density");
  sojourn->add_option("--d", cfg.d, "dimension (1-3)");
  sojourn->add_option("--beta", cfg.beta, "attraction strength");
  sojourn->add_option("--t-max", cfg.t_max, "number of steps");

  CLI::App* probe = app.add_subcommand("entry-probe",
                                       "explored-region growth and big-cluster discovery");
  probe->add_option("--p", cfg.p, "site density");
  probe->add_option("--d", cfg.d, "dimension (1-3)");
  probe->add_option("--n", cfg.n, "box side");
  probe->add_option("--beta", cfg.beta, "attraction strength");
  probe->add_option("--delta", cfg.delta, "big-cluster threshold factor: delta * ln n");
  probe->add_option("--theta", cfg.theta, "probe budget exponent: n^(1-theta) probes");
  probe->add_option("--epsilon", cfg.epsilon, "comparison exponent, -1 = derived default");

  CLI::App* tail = app.add_subcommand("tail", "cluster-size or displacement tail frequencies");
  tail->add_option("--mode", cfg.mode, "cluster or displacement");
  tail->add_option("--p", cfg.p, "site density");
  tail->add_option("--d", cfg.d, "dimension (1-3)");
  tail->add_option("--samples", cfg.samples, "cluster mode: growth samples");
  tail->add_option("--beta", cfg.beta, "displacement mode: attraction strength");
  tail->add_option("--t-max", cfg.t_max, "displacement mode: walk length");
  tail->add_option("--replicas", cfg.replicas, "displacement mode: independent walks");
  tail->add_option("--epsilon", cfg.epsilon, "displacement mode: exponent offset, -1 = 0.1");

  for (CLI::App* sub : {sample, simulate, gap, exponent, sweep, escape, sojourn, probe, tail})
    add_common(sub, cfg, config_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const auto started = std::chrono::steady_clock::now();
  try {
    CLI::App* chosen = app.get_subcommands().front();
    cfg.command = chosen->get_name();
    validate_config(cfg);

    OutputCollector out{cfg.out_dir, {}};
    std::string summary;
    if (chosen == sample) summary = run_sample_env(cfg, out);
    else if (chosen == simulate) summary = run_simulate(cfg, out, boxed);
    else if (chosen == gap) summary = run_gap(cfg, out);
    else if (chosen == exponent) summary = run_exponent(cfg, out);
    else if (chosen == sweep) summary = run_sweep(cfg, out);
    else if (chosen == escape) summary = run_escape(cfg, out);
    else if (chosen == sojourn) summary = run_sojourn(cfg, out);
    else if (chosen == probe) summary = run_entry_probe(cfg, out);
    else if (chosen == tail) summary = run_tail(cfg, out);
    else throw InternalError("unhandled subcommand");

    out.emit("config.txt", serialize_key_values(cfg.to_map()));
    RunManifest manifest{kVersion, cfg, out.entries,
                         cfg.deterministic ? std::string() : utc_timestamp()};
    write_output(cfg.out_dir, "manifest.json", manifest_json(manifest));

    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    std::cerr << "[clusterwalk] " << cfg.command << " finished in " << format_double(secs)
              << " s\n";
    std::cout << summary << "\n";
    return 0;
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const CapacityError& e) {
    std::cerr << "capacity error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 4;
  }
}
