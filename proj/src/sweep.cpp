#include "moenet/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "moenet/error.hpp"

namespace moenet {

std::string ModeSet::label() const {
  if (dbo && sd) return "dbo+sd";
  if (dbo) return "dbo";
  if (sd) return "sd";
  return "noopt";
}

std::vector<TpotMode> ModeSet::modes() const {
  std::vector<TpotMode> out{TpotMode::NoOverlap};
  if (dbo) out.push_back(TpotMode::DBO);
  if (sd) out.push_back(TpotMode::SD);
  if (dbo && sd) out.push_back(TpotMode::DBO_SD);
  return out;
}

std::optional<ModeSet> ModeSet::parse(std::string_view label) {
  for (ModeSet m : {ModeSet{false, false}, ModeSet{true, false}, ModeSet{false, true},
                    ModeSet{true, true}})
    if (m.label() == label) return m;
  return std::nullopt;
}

void validate(const ServingScenario& s) {
  if (!(s.tpot_slo > 0)) fail(Errc::InvalidConfig, "scenario " + s.name + ": tpot_slo must be positive");
  if (s.context_length <= 0)
    fail(Errc::InvalidConfig, "scenario " + s.name + ": context_length must be positive");
  validate(s.sd);
}

std::vector<Parallelism> parallelism_domain(const ModelSpec& m, const CommModel& comm,
                                            const SweepOptions& opt) {
  const int n = comm.network().spec.xpu_count;
  std::vector<int> eps = opt.ep_candidates, tps = opt.tp_candidates;
  std::sort(eps.begin(), eps.end());
  std::sort(tps.begin(), tps.end());
  std::vector<Parallelism> out;
  for (int ep : eps) {
    if (ep < 1 || ep > n || n % ep || m.num_experts % ep || !comm.supports_group(ep)) continue;
    for (int tp : tps) {
      if (tp < 1 || tp > n || n % tp || m.num_heads % tp || !comm.supports_group(tp)) continue;
      out.push_back({ep, tp});
    }
  }
  return out;
}

namespace {

std::optional<TpotEstimate> try_estimate(const EvalContext& ctx, const Parallelism& p,
                                         std::int64_t b, const ServingScenario& s) {
  try {
    return estimate_tpot(ctx, p, b, s.context_length, s.optimizations.modes(), s.sd);
  } catch (const Error& e) {
    if (e.code() == Errc::InfeasibleConfig) return std::nullopt;
    throw;
  }
}

}  // namespace

OperatingPoint best_batch(const EvalContext& ctx, const Parallelism& p, const ServingScenario& s,
                          const SweepOptions& opt) {
  const int n = ctx.comm->network().spec.xpu_count;
  std::int64_t cap = max_batch_for_memory(*ctx.model, p, s.context_length, ctx.hw->mem_capacity);
  if (opt.max_batch_per_xpu > 0) cap = std::min(cap, opt.max_batch_per_xpu);

  OperatingPoint best;
  best.ep = p.ep;
  best.tp = p.tp;
  if (cap < 1) return best;

  auto consider = [&](std::int64_t b) {
    auto e = try_estimate(ctx, p, b, s);
    if (!e || e->tpot > s.tpot_slo) return false;
    const double thr = double(b) * n / e->tpot;
    if (!best.feasible || thr > best.throughput) {
      best.feasible = true;
      best.batch_per_xpu = b;
      best.batch_total = b * n;
      best.mode = e->mode;
      best.tpot = e->tpot;
      best.throughput = thr;
      best.memory_used = memory_footprint(*ctx.model, p, b, s.context_length);
      best.exposed_comm = e->exposed_comm;
      best.compute_time = e->compute_total;
      best.comm_time = e->comm_total;
    }
    return true;
  };

  std::vector<std::int64_t> grid;
  for (std::int64_t b = 1; b < cap; b *= 2) grid.push_back(b);
  grid.push_back(cap);

  std::int64_t lo = 0, hi = 0;
  for (auto b : grid) {
    if (consider(b)) {
      lo = b;
    } else {
      hi = b;
      break;
    }
  }
  if (lo == 0 || hi == 0) return best;
  for (int step = 0; step < opt.bisection_steps && hi - lo > 1; ++step) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (consider(mid))
      lo = mid;
    else
      hi = mid;
  }
  return best;
}

OperatingPoint max_throughput(const EvalContext& ctx, const ServingScenario& s,
                              const SweepOptions& opt) {
  validate(s);
  OperatingPoint best;
  for (const auto& p : parallelism_domain(*ctx.model, *ctx.comm, opt)) {
    auto pt = best_batch(ctx, p, s, opt);
    if (pt.feasible && (!best.feasible || pt.throughput > best.throughput)) best = pt;
  }
  return best;
}

ClusterSpec cluster_for(const TopologyEntry& t, int xpu_count, double bandwidth) {
  ClusterSpec c = t.base;
  c.xpu_count = xpu_count;
  c.per_xpu_bandwidth = bandwidth;
  if (is_switchless(c.kind)) {
    auto it = t.dims.find(xpu_count);
    c.dims = it != t.dims.end() ? it->second : balanced_dims(xpu_count);
  }
  return c;
}

std::vector<GridCell> grid_cells(const GridAxes& axes) {
  std::vector<GridCell> cells;
  for (std::size_t t = 0; t < axes.topologies.size(); ++t)
    for (std::size_t n = 0; n < axes.cluster_sizes.size(); ++n)
      for (std::size_t b = 0; b < axes.bandwidth_multipliers.size(); ++b)
        for (std::size_t s = 0; s < axes.scenarios.size(); ++s)
          for (std::size_t m = 0; m < axes.mode_sets.size(); ++m) cells.push_back({t, n, b, s, m});
  return cells;
}

GridRow evaluate_cell(const GridAxes& axes, const GridBase& base, const GridCell& cell) {
  const auto& topo = axes.topologies.at(cell.topology);
  ServingScenario scenario = axes.scenarios.at(cell.scenario);
  scenario.optimizations = axes.mode_sets.at(cell.modes);

  GridRow row;
  row.topology = topo.name;
  row.kind = topo.base.kind;
  row.xpu_count = axes.cluster_sizes.at(cell.size);
  row.bandwidth_multiplier = axes.bandwidth_multipliers.at(cell.bandwidth);
  row.bandwidth = base.hw.per_xpu_link_bandwidth * topo.link_share * row.bandwidth_multiplier;
  row.scenario = scenario.name;
  row.tpot_slo = scenario.tpot_slo;
  row.context_length = scenario.context_length;
  row.modes = scenario.optimizations.label();

  const ClusterSpec spec = cluster_for(topo, row.xpu_count, row.bandwidth);
  row.dims = is_switchless(spec.kind) ? spec.dims.str() : "-";
  ClusterNetwork net;
  try {
    net = build_cluster(spec);
  } catch (const Error& e) {
    if (e.code() != Errc::InvalidSpec) throw;
    row.note = e.what();
    return row;
  }
  const CommModel comm(net, base.intra, base.inter, base.alpha_scale);
  EvalContext ctx{&base.model, &base.hw, base.calibration, base.profile, &comm};

  row.point = max_throughput(ctx, scenario, base.sweep);
  row.tco = monthly_tco(net, base.hw, base.cost);
  row.cost_per_xpu = row.tco.monthly_total / row.xpu_count;
  if (row.point.feasible) {
    row.throughput_per_xpu = row.point.throughput / row.xpu_count;
    row.throughput_per_cost = throughput_per_cost(row.point.throughput, row.tco);
    const bool dbo = row.point.mode == TpotMode::DBO || row.point.mode == TpotMode::DBO_SD;
    const std::int64_t b = dbo ? dbo_split(row.point.batch_per_xpu).first
                               : row.point.batch_per_xpu;
    const double bytes = double(b) * base.model.top_k * base.model.hidden_dim *
                         base.model.dtype_bytes;
    row.a2a_algorithm = comm.time(CollectiveKind::AllToAll, row.point.ep, bytes).algorithm;
  } else {
    row.note = "no configuration meets the TPOT SLO within memory";
  }
  return row;
}

std::vector<GridRow> run_grid(const GridAxes& axes, const GridBase& base) {
  const auto cells = grid_cells(axes);
  std::vector<GridRow> rows(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());
  const auto count = static_cast<std::int64_t>(cells.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      rows[i] = evaluate_cell(axes, base, cells[i]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return rows;
}

std::vector<GridRow> run_grid_serial(const GridAxes& axes, const GridBase& base) {
  std::vector<GridRow> rows;
  for (const auto& cell : grid_cells(axes)) rows.push_back(evaluate_cell(axes, base, cell));
  return rows;
}

std::vector<std::size_t> pareto_frontier(const std::vector<std::pair<double, double>>& points) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto [ci, ti] = points[i];
    bool keep = true;
    for (std::size_t j = 0; j < points.size() && keep; ++j) {
      if (j == i) continue;
      const auto [cj, tj] = points[j];
      const bool dominates = cj <= ci && tj >= ti && (cj < ci || tj > ti);
      const bool earlier_duplicate = j < i && cj == ci && tj == ti;
      if (dominates || earlier_duplicate) keep = false;
    }
    if (keep) out.push_back(i);
  }
  return out;
}

}  // namespace moenet
