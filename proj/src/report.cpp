#include "moenet/report.hpp"

#include <cinttypes>
#include <cstdio>
#include <map>
#include <tuple>

#include "json.hpp"

namespace moenet {

namespace {

using nlohmann::ordered_json;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Column name and formatter, in output order.
struct Cell {
  std::string text;
  ordered_json value;
};

std::vector<Cell> cells_of(const GridRow& r, const RowFlags& f, const RunLabels& run) {
  const auto& p = r.point;
  const auto& t = r.tco;
  auto d = [](double v) { return Cell{num(v), v}; };
  auto i = [](std::int64_t v) { return Cell{std::to_string(v), v}; };
  auto s = [](const std::string& v) { return Cell{csv_field(v), v}; };
  auto b = [](bool v) { return Cell{v ? "1" : "0", v}; };
  return {
      s(r.topology),
      s(std::string(to_string(r.kind))),
      s(r.dims),
      i(r.xpu_count),
      d(r.bandwidth_multiplier),
      d(r.bandwidth / kGB),
      s(run.generation),
      d(run.alpha_scale),
      s(r.scenario),
      d(r.tpot_slo * 1e3),
      i(r.context_length),
      s(r.modes),
      b(p.feasible),
      i(p.ep),
      i(p.tp),
      i(p.batch_per_xpu),
      i(p.batch_total),
      s(p.feasible ? std::string(to_string(p.mode)) : ""),
      d(p.tpot * 1e3),
      d(p.throughput),
      d(r.throughput_per_xpu),
      d(p.memory_used / kGB),
      d(p.exposed_comm * 1e3),
      d(p.compute_time * 1e3),
      d(p.comm_time * 1e3),
      s(r.a2a_algorithm),
      d(t.monthly_xpu),
      d(t.monthly_xpu_energy),
      d(t.monthly_switch),
      d(t.monthly_link),
      d(t.monthly_network_energy),
      d(t.monthly_network),
      d(t.monthly_total),
      d(r.cost_per_xpu),
      d(r.throughput_per_cost),
      b(f.provisioned),
      b(f.sweet_spot),
      b(f.pareto),
      s(r.note),
  };
}

}  // namespace

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols{
      "topology",        "kind",           "dims",
      "xpu_count",       "bw_multiplier",  "bandwidth_gbps",
      "generation",      "alpha_scale",    "scenario",
      "tpot_slo_ms",     "context_length", "modes",
      "feasible",        "ep",             "tp",
      "batch_per_xpu",   "batch_total",    "mode",
      "tpot_ms",         "throughput",     "throughput_per_xpu",
      "memory_used_gb",  "exposed_comm_ms", "compute_ms",
      "comm_ms",         "a2a_algorithm",  "monthly_xpu",
      "monthly_xpu_energy", "monthly_switch", "monthly_link",
      "monthly_network_energy", "monthly_network", "monthly_total",
      "cost_per_xpu",    "throughput_per_cost", "provisioned",
      "sweet_spot",      "pareto",         "note",
  };
  return cols;
}

std::vector<RowFlags> mark_rows(const std::vector<GridRow>& rows) {
  std::vector<RowFlags> flags(rows.size());
  using GroupKey = std::tuple<std::string, int, std::string, std::string>;
  std::map<GroupKey, std::size_t> best;
  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> scen;

  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    flags[i].provisioned = r.bandwidth_multiplier == 1.0;
    if (!r.point.feasible) continue;
    scen[{r.scenario, r.modes}].push_back(i);
    const GroupKey k{r.topology, r.xpu_count, r.scenario, r.modes};
    auto it = best.find(k);
    if (it == best.end()) {
      best.emplace(k, i);
      continue;
    }
    const auto& cur = rows[it->second];
    if (r.throughput_per_cost > cur.throughput_per_cost ||
        (r.throughput_per_cost == cur.throughput_per_cost && r.bandwidth < cur.bandwidth))
      it->second = i;
  }
  for (const auto& [k, i] : best) flags[i].sweet_spot = true;

  for (const auto& [k, idx] : scen) {
    std::vector<std::pair<double, double>> pts;
    for (auto i : idx) pts.emplace_back(rows[i].cost_per_xpu, rows[i].throughput_per_xpu);
    for (auto j : pareto_frontier(pts)) flags[idx[j]].pareto = true;
  }
  return flags;
}

std::string rows_to_csv(const std::vector<GridRow>& rows, const std::vector<RowFlags>& flags,
                        const RunLabels& run) {
  std::string out;
  const auto& cols = csv_columns();
  for (std::size_t c = 0; c < cols.size(); ++c) out += (c ? "," : "") + cols[c];
  out += '\n';
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto cells = cells_of(rows[i], flags.at(i), run);
    for (std::size_t c = 0; c < cells.size(); ++c) out += (c ? "," : "") + cells[c].text;
    out += '\n';
  }
  return out;
}

std::string rows_to_json(const std::vector<GridRow>& rows, const std::vector<RowFlags>& flags,
                         const RunLabels& run) {
  ordered_json arr = ordered_json::array();
  const auto& cols = csv_columns();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto cells = cells_of(rows[i], flags.at(i), run);
    ordered_json obj;
    for (std::size_t c = 0; c < cells.size(); ++c) obj[cols[c]] = cells[c].value;
    arr.push_back(std::move(obj));
  }
  return arr.dump(1) + "\n";
}

std::string content_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

std::string manifest_to_json(const RunManifest& m) {
  ordered_json j;
  j["tool"] = "moenet";
  j["version"] = m.tool_version;
  j["command"] = m.command;
  j["deterministic"] = true;
  j["config_files"] = m.config_files;
  j["output_dir"] = m.output_dir;
  j["generation"] = m.run.generation;
  j["alpha_scale"] = m.run.alpha_scale;

  ordered_json axes;
  auto& topos = axes["topologies"] = ordered_json::array();
  for (const auto& t : m.axes.topologies)
    topos.push_back({{"name", t.name}, {"kind", to_string(t.base.kind)}, {"link_share", t.link_share}});
  axes["cluster_sizes"] = m.axes.cluster_sizes;
  axes["bandwidth_multipliers"] = m.axes.bandwidth_multipliers;
  auto& scen = axes["scenarios"] = ordered_json::array();
  for (const auto& s : m.axes.scenarios)
    scen.push_back({{"name", s.name},
                    {"tpot_slo_ms", s.tpot_slo * 1e3},
                    {"context_length", s.context_length},
                    {"spec_m", s.sd.spec_m},
                    {"spec_p", s.sd.spec_p}});
  auto& modes = axes["modes"] = ordered_json::array();
  for (const auto& ms : m.axes.mode_sets) modes.push_back(ms.label());
  j["axes"] = std::move(axes);
  j["artifacts"] = m.artifacts;
  j["csv_hash"] = m.csv_hash;
  return j.dump(2) + "\n";
}

std::string inventory_to_json(const ClusterNetwork& net) {
  ordered_json j;
  j["kind"] = to_string(net.spec.kind);
  j["xpu_count"] = net.spec.xpu_count;
  if (is_switchless(net.spec.kind)) j["dims"] = net.spec.dims.str();
  j["per_xpu_bandwidth"] = net.spec.per_xpu_bandwidth;
  j["degree"] = net.degree;
  j["per_link_bandwidth"] = net.per_link_bandwidth;
  j["port_bandwidth"] = net.port_bandwidth;
  j["switch_count"] = net.switch_count;
  j["switch_total_capacity"] = net.switch_total_capacity;
  j["fat_tree_levels"] = net.fat_tree_levels;
  j["copper_link_count"] = net.copper_link_count;
  j["aoc_link_count"] = net.aoc_link_count;
  j["copper_link_bandwidth"] = net.copper_link_bandwidth;
  j["aoc_link_bandwidth"] = net.aoc_link_bandwidth;
  j["switch_ports_total"] = net.switch_ports_total;
  j["switch_ports_used"] = net.switch_ports_used;
  return j.dump(2) + "\n";
}

}  // namespace moenet
