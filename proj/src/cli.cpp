#include "moenet/cli.hpp"

#include <omp.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"

#include "moenet/config.hpp"
#include "moenet/error.hpp"
#include "moenet/report.hpp"

namespace moenet {

namespace {

namespace fs = std::filesystem;

struct Options {
  std::string config = std::string(MOENET_SOURCE_DIR) + "/configs/default.json";
  std::string out_dir;
  std::vector<std::string> scenarios;
  std::vector<std::string> topologies;
  std::vector<std::string> modes;
  std::vector<int> sizes;
  std::vector<std::string> multipliers;
  std::vector<double> tpot_ms;
  std::vector<std::int64_t> contexts;
  std::optional<double> alpha_scale;
  std::optional<double> eff_c;
  std::optional<double> eff_m;
  std::string profile;
  std::string generation = "hopper";
  bool serial = false;
  int threads = 0;

  // dump-schedule
  int ep = 0;
  int tp = 1;
  std::int64_t batch = 0;
  std::string multiplier = "1";
};

[[noreturn]] void usage(const std::string& what) { fail(Errc::Usage, what); }

double ratio_arg(const std::string& s) {
  auto r = parse_ratio(s);
  if (!r) usage("not a number or ratio: '" + s + "'");
  return *r;
}

std::string out_dir_of(const Options& o) {
  if (!o.out_dir.empty()) return o.out_dir;
  if (const char* env = std::getenv("MOENET_OUT_DIR"); env && *env) return env;
  return "out";
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) fail(Errc::InvalidArgument, "cannot write " + path.string());
}

std::string scenario_name(double tpot_ms, std::int64_t ctx) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "tpot%g-ctx%lld", tpot_ms, static_cast<long long>(ctx));
  return buf;
}

// Applies command-line overrides on top of the loaded config.
Config prepare(const Options& o) {
  Config c = load_config(o.config);

  if (!o.profile.empty()) {
    c.profile_path = o.profile;
    c.sources.push_back(o.profile);
  }
  if (o.eff_c) c.calibration.eff_c = *o.eff_c;
  if (o.eff_m) c.calibration.eff_m = *o.eff_m;
  validate(c.calibration);
  if (o.alpha_scale) c.alpha_scale = *o.alpha_scale;

  if (!o.tpot_ms.empty() || !o.contexts.empty()) {
    std::vector<double> slos = o.tpot_ms;
    std::vector<std::int64_t> ctxs = o.contexts;
    if (slos.empty())
      for (const auto& s : c.scenarios) slos.push_back(s.tpot_slo * 1e3);
    if (ctxs.empty())
      for (const auto& s : c.scenarios) ctxs.push_back(s.context_length);
    std::sort(ctxs.begin(), ctxs.end());
    ctxs.erase(std::unique(ctxs.begin(), ctxs.end()), ctxs.end());
    std::vector<double> uniq;
    for (double t : slos)
      if (std::find(uniq.begin(), uniq.end(), t) == uniq.end()) uniq.push_back(t);
    const SdParams sd = c.scenarios.empty() ? SdParams{} : c.scenarios.front().sd;
    c.scenarios.clear();
    for (double t : uniq)
      for (auto ctx : ctxs) c.scenarios.push_back({scenario_name(t, ctx), t * 1e-3, ctx, {}, sd});
  }
  if (!o.scenarios.empty()) {
    std::vector<ServingScenario> keep;
    for (const auto& name : o.scenarios) {
      auto it = std::find_if(c.scenarios.begin(), c.scenarios.end(),
                             [&](const ServingScenario& s) { return s.name == name; });
      if (it == c.scenarios.end()) usage("unknown scenario '" + name + "'");
      keep.push_back(*it);
    }
    c.scenarios = keep;
  }
  if (!o.topologies.empty()) {
    std::vector<TopologyEntry> keep;
    for (const auto& name : o.topologies) {
      auto it = std::find_if(c.topologies.begin(), c.topologies.end(),
                             [&](const TopologyEntry& t) { return t.name == name; });
      if (it == c.topologies.end()) usage("unknown topology '" + name + "'");
      keep.push_back(*it);
    }
    c.topologies = keep;
  }
  if (!o.modes.empty()) {
    c.mode_sets.clear();
    for (const auto& label : o.modes) {
      auto m = ModeSet::parse(label);
      if (!m) usage("unknown mode set '" + label + "' (noopt, dbo, sd, dbo+sd)");
      c.mode_sets.push_back(*m);
    }
  }
  if (!o.sizes.empty()) c.cluster_sizes = o.sizes;
  if (!o.multipliers.empty()) {
    c.bandwidth_multipliers.clear();
    for (const auto& m : o.multipliers) c.bandwidth_multipliers.push_back(ratio_arg(m));
  }

  auto gen = generation_by_name(o.generation);
  if (!gen) usage("unknown generation '" + o.generation + "' (hopper, blackwell, rubin)");
  c.hardware = apply_generation_scaling(c.hardware, *gen);

  validate(c);
  if (c.scenarios.empty()) usage("no scenarios selected");
  if (c.topologies.empty()) usage("no topologies selected");
  return c;
}

std::optional<ProfileTable> load_profile(const Config& c) {
  if (c.profile_path.empty()) return std::nullopt;
  return ProfileTable::load_csv(c.profile_path, HardwareSpec::h100());
}

int run_grid_command(const std::string& command, Config c, const Options& o, std::ostream& out) {
  if (o.threads > 0) omp_set_num_threads(o.threads);
  const auto profile = load_profile(c);
  const GridAxes axes = grid_axes(c);
  const GridBase base = grid_base(c, profile ? &*profile : nullptr);
  const auto rows = o.serial ? run_grid_serial(axes, base) : run_grid(axes, base);
  const auto flags = mark_rows(rows);
  const RunLabels run{o.generation, c.alpha_scale};

  const fs::path dir = out_dir_of(o);
  fs::create_directories(dir);
  const std::string csv = rows_to_csv(rows, flags, run);
  write_file(dir / (command + ".csv"), csv);
  write_file(dir / (command + ".json"), rows_to_json(rows, flags, run));

  RunManifest m;
  m.tool_version = kVersion;
  m.command = command;
  m.config_files = c.sources;
  m.output_dir = dir.string();
  m.run = run;
  m.axes = axes;
  m.artifacts = {command + ".csv", command + ".json"};
  m.csv_hash = content_hash(csv);
  write_file(dir / (command + ".manifest.json"), manifest_to_json(m));

  std::size_t feasible = 0;
  for (const auto& r : rows) feasible += r.point.feasible;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!flags[i].sweet_spot || axes.bandwidth_multipliers.size() < 2) continue;
    const auto& r = rows[i];
    char buf[256];
    std::snprintf(buf, sizeof buf, "sweet spot  %-12s N=%-4d %-14s %-7s %7.1f GB/s  %.1f tok/s per cost\n",
                  r.topology.c_str(), r.xpu_count, r.scenario.c_str(), r.modes.c_str(),
                  r.bandwidth / kGB, r.throughput_per_cost);
    out << buf;
  }
  out << rows.size() << " rows (" << feasible << " feasible) -> " << (dir / (command + ".csv")).string()
      << "\n";
  return feasible == 0 ? kExitInfeasible : kExitOk;
}

int dump_schedule(Config c, const Options& o, std::ostream& out) {
  if (o.ep < 1 || o.tp < 1 || o.batch < 2) usage("dump-schedule needs --ep, --tp and --batch >= 2");
  const auto& topo = c.topologies.front();
  const auto& scenario = c.scenarios.front();
  const int n = c.cluster_sizes.front();
  const double bw = c.hardware.per_xpu_link_bandwidth * topo.link_share * ratio_arg(o.multiplier);
  const auto net = build_cluster(cluster_for(topo, n, bw));
  const CommModel comm(net, c.intra, c.inter, c.alpha_scale);
  const auto profile = load_profile(c);
  const EvalContext ctx{&c.model, &c.hardware, c.calibration, profile ? &*profile : nullptr, &comm};
  const Parallelism p{o.ep, o.tp};

  const auto [b0, b1] = dbo_split(o.batch);
  const auto g0 = build_iteration_graph(ctx, p, b0, scenario.context_length);
  const auto g1 = build_iteration_graph(ctx, p, b1, scenario.context_length);
  // The full batch must fit as well.
  (void)build_iteration_graph(ctx, p, o.batch, scenario.context_length);
  Schedule s;
  const auto est = dbo_schedule(g0, g1, &s);

  nlohmann::ordered_json j;
  j["topology"] = topo.name;
  j["xpu_count"] = n;
  j["bandwidth_gbps"] = bw / kGB;
  j["generation"] = o.generation;
  j["alpha_scale"] = c.alpha_scale;
  j["context_length"] = scenario.context_length;
  j["ep"] = p.ep;
  j["tp"] = p.tp;
  j["batch_per_xpu"] = o.batch;
  j["microbatches"] = {b0, b1};
  j["tpot_s"] = est.tpot;
  j["exposed_comm_s"] = est.exposed_comm;
  j["compute_total_s"] = est.compute_total;
  j["comm_total_s"] = est.comm_total;
  j["schedule"] = nlohmann::ordered_json::parse(schedule_to_json(s));

  const fs::path dir = out_dir_of(o);
  fs::create_directories(dir);
  write_file(dir / "schedule.json", j.dump(2) + "\n");
  char buf[160];
  std::snprintf(buf, sizeof buf, "makespan %.3f ms, exposed comm %.3f ms, %zu ops -> %s\n",
                est.tpot * 1e3, est.exposed_comm * 1e3, s.ops.size(),
                (dir / "schedule.json").string().c_str());
  out << buf;
  return kExitOk;
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("-c,--config", o.config, "JSON config file");
  cmd->add_option("-o,--out", o.out_dir, "output directory (default $MOENET_OUT_DIR or ./out)");
  cmd->add_option("--scenario", o.scenarios, "scenario names to run (default: all)");
  cmd->add_option("--topology", o.topologies, "topology names to run (default: all)");
  cmd->add_option("--modes", o.modes, "mode sets: noopt, dbo, sd, dbo+sd");
  cmd->add_option("--sizes", o.sizes, "cluster sizes");
  cmd->add_option("--tpot-ms", o.tpot_ms, "replace the scenario TPOT SLOs");
  cmd->add_option("--context", o.contexts, "replace the scenario context lengths");
  cmd->add_option("--alpha-scale", o.alpha_scale, "scale alpha_r and alpha_d by this factor")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--eff-c", o.eff_c, "compute efficiency of the roofline");
  cmd->add_option("--eff-m", o.eff_m, "memory efficiency of the roofline");
  cmd->add_option("--profile", o.profile, "kernel profile CSV");
  cmd->add_option("--threads", o.threads, "OpenMP threads (default: runtime choice)");
  cmd->add_flag("--serial", o.serial, "evaluate cells on one thread");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Decode-serving throughput and cost across MoE cluster networks", "moenet"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Options o;

  auto* bw = app.add_subcommand("sweep-bandwidth", "throughput per cost over link bandwidth");
  add_common(bw, o);
  bw->add_option("--multipliers", o.multipliers,
                 "bandwidth multipliers of the provisioned link, e.g. 1/9 1/3 1");

  auto* cmp = app.add_subcommand("compare-topologies", "topologies at the provisioned bandwidth");
  add_common(cmp, o);

  auto* par = app.add_subcommand("pareto", "all topologies, bandwidths and sizes with the frontier");
  add_common(par, o);
  par->add_option("--multipliers", o.multipliers, "bandwidth multipliers");

  auto* prj = app.add_subcommand("project", "sweep on a scaled future XPU generation");
  add_common(prj, o);
  prj->add_option("--generation", o.generation, "hopper, blackwell or rubin");
  prj->add_option("--multipliers", o.multipliers, "bandwidth multipliers");

  auto* dump = app.add_subcommand("dump-schedule", "write the two-microbatch overlap schedule");
  add_common(dump, o);
  dump->add_option("--ep", o.ep, "expert parallelism")->required();
  dump->add_option("--tp", o.tp, "tensor parallelism");
  dump->add_option("--batch", o.batch, "requests per XPU")->required();
  dump->add_option("--multiplier", o.multiplier, "bandwidth multiplier");

  try {
    std::vector<std::string> args;
    for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (dump->parsed()) {
      Config c = prepare(o);
      return dump_schedule(std::move(c), o, out);
    }
    Config c = prepare(o);
    if (bw->parsed()) {
      if (o.topologies.empty()) {
        auto it = std::find_if(c.topologies.begin(), c.topologies.end(), [](const TopologyEntry& t) {
          return t.base.kind == TopologyKind::ScaleUp;
        });
        if (it != c.topologies.end()) c.topologies = {*it};
      }
      if (o.sizes.empty()) c.cluster_sizes = {c.cluster_sizes.front()};
      if (o.multipliers.empty())
        c.bandwidth_multipliers = {1.0 / 9, 1.0 / 3, 2.0 / 3, 1.0, 4.0 / 3, 2.0};
      return run_grid_command("sweep-bandwidth", std::move(c), o, out);
    }
    if (cmp->parsed()) {
      c.bandwidth_multipliers = {1.0};
      return run_grid_command("compare-topologies", std::move(c), o, out);
    }
    if (par->parsed()) return run_grid_command("pareto", std::move(c), o, out);
    return run_grid_command("project", std::move(c), o, out);
  } catch (const Error& e) {
    err << "moenet: " << e.what() << "\n";
    return e.code() == Errc::InfeasibleConfig ? kExitInfeasible : kExitUsage;
  } catch (const std::exception& e) {
    err << "moenet: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace moenet
