#include "moenet/iteration.hpp"

#include <algorithm>
#include <array>

#include "json.hpp"
#include "moenet/error.hpp"

namespace moenet {

std::string_view to_string(OpLane lane) { return lane == OpLane::Compute ? "compute" : "comm"; }

std::string IterOp::label() const {
  return (layer < 0 ? std::string("head") : "L" + std::to_string(layer)) + "." +
         std::string(name);
}

double IterationGraph::compute_total() const {
  double t = 0;
  for (const auto& op : ops)
    if (!op.is_collective()) t += op.seconds;
  return t;
}

double IterationGraph::comm_total() const {
  double t = 0;
  for (const auto& op : ops)
    if (op.is_collective()) t += op.seconds;
  return t;
}

namespace {

void check_context(const EvalContext& ctx) {
  if (!ctx.model || !ctx.hw || !ctx.comm)
    fail(Errc::InvalidArgument, "evaluation context is incomplete");
}

double sum_seconds(const std::vector<LayerOp>& ops, std::initializer_list<std::string_view> ids) {
  double t = 0;
  for (const auto& op : ops)
    for (auto id : ids)
      if (op.id == id) t += op.seconds;
  return t;
}

IterOp compute_op(int layer, std::string_view name, double seconds) {
  IterOp op;
  op.layer = layer;
  op.name = name;
  op.seconds = seconds;
  return op;
}

IterOp collective_op(const CommModel& comm, std::string_view name, CollectiveKind kind,
                     int participants, double bytes) {
  IterOp op;
  op.name = name;
  op.lane = OpLane::Comm;
  op.collective = kind;
  op.participants = participants;
  op.bytes = bytes;
  auto choice = comm.time(kind, participants, bytes);
  op.seconds = choice.seconds;
  op.algorithm = std::move(choice.algorithm);
  return op;
}

}  // namespace

IterationGraph build_iteration_graph(const EvalContext& ctx, const Parallelism& p,
                                     std::int64_t batch_per_xpu, std::int64_t context_length,
                                     std::int64_t query_length) {
  check_context(ctx);
  const ModelSpec& m = *ctx.model;
  check_parallelism(m, p);
  const auto& cluster = ctx.comm->network().spec;
  if (p.ep > cluster.xpu_count || p.tp > cluster.xpu_count)
    fail(Errc::InvalidConfig, "EP and TP must not exceed the cluster size");
  if (!ctx.comm->supports_group(p.ep) || !ctx.comm->supports_group(p.tp))
    fail(Errc::InvalidConfig, "EP=" + std::to_string(p.ep) + " TP=" + std::to_string(p.tp) +
                                  " groups cannot be placed on " + cluster.dims.str());
  const double mem = memory_footprint(m, p, batch_per_xpu, context_length);
  if (mem > ctx.hw->mem_capacity)
    fail(Errc::InfeasibleConfig, "footprint " + std::to_string(mem / 1e9) + " GB exceeds " +
                                     std::to_string(ctx.hw->mem_capacity / 1e9) + " GB");

  IterationGraph g;
  g.num_layers = m.num_layers;
  g.parallelism = p;
  g.batch_per_xpu = batch_per_xpu;
  g.context_length = context_length;
  g.query_length = query_length;
  if (batch_per_xpu == 0) return g;

  auto timed = [&](bool moe) {
    auto ops = layer_kernels(m, p, batch_per_xpu, context_length, moe, query_length);
    for (auto& op : ops) op.seconds = kernel_time(op.shape, *ctx.hw, ctx.calibration, ctx.profile);
    return ops;
  };
  const auto dense = timed(false);
  const auto moe = timed(true);

  const double tokens = double(batch_per_xpu) * query_length;
  const double attention = sum_seconds(moe, {"attn_proj", "attn_core"});
  const double dense_attention = sum_seconds(dense, {"attn_proj", "attn_core"});
  const double ffn = sum_seconds(dense, {"ffn"});
  const double router = sum_seconds(moe, {"router", "shared_expert"});
  const double experts = sum_seconds(moe, {"experts"});

  std::vector<IterOp> moe_tmpl, dense_tmpl;
  std::optional<IterOp> allreduce;
  if (p.tp > 1)
    allreduce = collective_op(*ctx.comm, "allreduce", CollectiveKind::AllReduce, p.tp,
                              p.tp * tokens * m.hidden_dim * m.activation_bytes);
  const double a2a_bytes = tokens * m.top_k * m.hidden_dim * m.dtype_bytes;

  dense_tmpl.push_back(compute_op(0, "attention", dense_attention));
  if (allreduce) dense_tmpl.push_back(*allreduce);
  dense_tmpl.push_back(compute_op(0, "ffn", ffn));
  if (allreduce) dense_tmpl.push_back(*allreduce);

  moe_tmpl.push_back(compute_op(0, "attention", attention));
  if (allreduce) moe_tmpl.push_back(*allreduce);
  moe_tmpl.push_back(compute_op(0, "router", router));
  moe_tmpl.push_back(
      collective_op(*ctx.comm, "dispatch", CollectiveKind::AllToAll, p.ep, a2a_bytes));
  moe_tmpl.push_back(compute_op(0, "experts", experts));
  auto combine = moe_tmpl[moe_tmpl.size() - 2];
  combine.name = "combine";
  moe_tmpl.push_back(combine);

  g.ops.reserve(std::size_t(m.num_layers) * moe_tmpl.size() + 1);
  for (int layer = 0; layer < m.num_layers; ++layer) {
    for (auto op : layer < m.num_dense_layers ? dense_tmpl : moe_tmpl) {
      op.layer = layer;
      g.ops.push_back(std::move(op));
    }
  }
  const auto head = head_kernels(m, p, batch_per_xpu, query_length);
  double head_time = 0;
  for (const auto& k : head) head_time += kernel_time(k.shape, *ctx.hw, ctx.calibration, ctx.profile);
  g.ops.push_back(compute_op(-1, "lm_head", head_time));
  return g;
}

std::string_view to_string(TpotMode mode) {
  switch (mode) {
    case TpotMode::NoOverlap: return "noopt";
    case TpotMode::DBO: return "dbo";
    case TpotMode::SD: return "sd";
    case TpotMode::DBO_SD: return "dbo+sd";
  }
  return "unknown";
}

std::optional<TpotMode> parse_tpot_mode(std::string_view name) {
  for (auto m : {TpotMode::NoOverlap, TpotMode::DBO, TpotMode::SD, TpotMode::DBO_SD})
    if (to_string(m) == name) return m;
  if (name == "nooverlap" || name == "baseline") return TpotMode::NoOverlap;
  if (name == "dbo_sd" || name == "dbosd") return TpotMode::DBO_SD;
  return std::nullopt;
}

TpotEstimate tpot_no_overlap(const IterationGraph& g) {
  TpotEstimate e;
  e.mode = TpotMode::NoOverlap;
  e.compute_total = g.compute_total();
  e.comm_total = g.comm_total();
  e.exposed_comm = e.comm_total;
  e.tpot = e.compute_total + e.comm_total;
  return e;
}

Schedule dbo_list_schedule(const IterationGraph& a, const IterationGraph& b) {
  const std::array<const IterationGraph*, 2> chains{&a, &b};
  std::array<std::size_t, 2> next{0, 0};
  std::array<double, 2> ready{0, 0};
  std::array<double, 2> lane_free{0, 0};
  Schedule s;
  s.ops.reserve(a.ops.size() + b.ops.size());

  for (;;) {
    int pick = -1;
    double pick_start = 0;
    for (int mb = 0; mb < 2; ++mb) {
      if (next[mb] >= chains[mb]->ops.size()) continue;
      const auto& op = chains[mb]->ops[next[mb]];
      const double start = std::max(ready[mb], lane_free[static_cast<int>(op.lane)]);
      if (pick < 0 || start < pick_start || (start == pick_start && ready[mb] > ready[pick])) {
        pick = mb;
        pick_start = start;
      }
    }
    if (pick < 0) break;
    const auto& op = chains[pick]->ops[next[pick]];
    const double end = pick_start + op.seconds;
    s.ops.push_back({pick, next[pick], op.label(), op.lane, pick_start, end});
    ready[pick] = end;
    lane_free[static_cast<int>(op.lane)] = end;
    s.makespan = std::max(s.makespan, end);
    ++next[pick];
  }
  return s;
}

TpotEstimate dbo_schedule(const IterationGraph& a, const IterationGraph& b, Schedule* out) {
  Schedule s = dbo_list_schedule(a, b);
  TpotEstimate e;
  e.mode = TpotMode::DBO;
  e.compute_total = a.compute_total() + b.compute_total();
  e.comm_total = a.comm_total() + b.comm_total();
  e.tpot = s.makespan;
  e.exposed_comm = std::clamp(s.makespan - e.compute_total, 0.0, e.comm_total);
  if (out) *out = std::move(s);
  return e;
}

std::pair<std::int64_t, std::int64_t> dbo_split(std::int64_t batch) {
  return {(batch + 1) / 2, batch / 2};
}

void validate(const SdParams& sd) {
  if (sd.spec_m < 1) fail(Errc::InvalidArgument, "spec_m must be at least 1");
  if (!(sd.spec_p > 0 && sd.spec_p <= 1)) fail(Errc::InvalidArgument, "spec_p must lie in (0, 1]");
}

TpotEstimate iteration_time(const EvalContext& ctx, const Parallelism& p,
                            std::int64_t batch_per_xpu, std::int64_t context_length, bool dbo,
                            std::int64_t query_length) {
  if (!dbo)
    return tpot_no_overlap(
        build_iteration_graph(ctx, p, batch_per_xpu, context_length, query_length));
  if (batch_per_xpu < 2) fail(Errc::InvalidArgument, "DBO needs at least two requests per XPU");
  check_context(ctx);
  const double mem = memory_footprint(*ctx.model, p, batch_per_xpu, context_length);
  if (mem > ctx.hw->mem_capacity) fail(Errc::InfeasibleConfig, "footprint exceeds memory");
  const auto [hi, lo] = dbo_split(batch_per_xpu);
  const auto ga = build_iteration_graph(ctx, p, hi, context_length, query_length);
  if (hi == lo) return dbo_schedule(ga, ga);
  return dbo_schedule(ga, build_iteration_graph(ctx, p, lo, context_length, query_length));
}

TpotEstimate tpot_sd(const EvalContext& ctx, const Parallelism& p, std::int64_t batch_per_xpu,
                     std::int64_t context_length, const SdParams& sd, bool inner_dbo) {
  validate(sd);
  const auto draft = iteration_time(ctx, p, batch_per_xpu, context_length, inner_dbo);
  const auto verify = iteration_time(ctx, p, batch_per_xpu, context_length, inner_dbo, sd.spec_m);
  const double tokens = sd.spec_m * sd.spec_p;
  TpotEstimate e;
  e.mode = inner_dbo ? TpotMode::DBO_SD : TpotMode::SD;
  e.t_draft = draft.tpot;
  e.t_verify = verify.tpot;
  e.tpot = (draft.tpot + verify.tpot) / tokens;
  e.compute_total = (draft.compute_total + verify.compute_total) / tokens;
  e.comm_total = (draft.comm_total + verify.comm_total) / tokens;
  e.exposed_comm = (draft.exposed_comm + verify.exposed_comm) / tokens;
  return e;
}

TpotEstimate estimate_tpot(const EvalContext& ctx, const Parallelism& p,
                           std::int64_t batch_per_xpu, std::int64_t context_length,
                           const std::vector<TpotMode>& modes, const SdParams& sd) {
  if (modes.empty()) fail(Errc::InvalidArgument, "no TPOT mode enabled");
  check_context(ctx);
  const double mem = memory_footprint(*ctx.model, p, batch_per_xpu, context_length);
  if (mem > ctx.hw->mem_capacity) fail(Errc::InfeasibleConfig, "footprint exceeds memory");

  auto ordered = modes;
  std::sort(ordered.begin(), ordered.end());
  ordered.erase(std::unique(ordered.begin(), ordered.end()), ordered.end());

  std::optional<TpotEstimate> best;
  for (auto mode : ordered) {
    const bool dbo = mode == TpotMode::DBO || mode == TpotMode::DBO_SD;
    if (dbo && batch_per_xpu < 2) continue;
    TpotEstimate e;
    switch (mode) {
      case TpotMode::NoOverlap:
      case TpotMode::DBO:
        e = iteration_time(ctx, p, batch_per_xpu, context_length, dbo);
        break;
      case TpotMode::SD:
      case TpotMode::DBO_SD:
        e = tpot_sd(ctx, p, batch_per_xpu, context_length, sd, dbo);
        break;
    }
    e.mode = mode;
    if (!best || e.tpot < best->tpot) best = e;
  }
  if (!best) fail(Errc::InfeasibleConfig, "no enabled mode applies at this batch size");
  return *best;
}

std::string schedule_to_json(const Schedule& s, int indent) {
  nlohmann::ordered_json j;
  j["makespan_s"] = s.makespan;
  auto& ops = j["ops"] = nlohmann::ordered_json::array();
  for (const auto& op : s.ops) {
    nlohmann::ordered_json o;
    o["microbatch"] = op.microbatch;
    o["index"] = op.index;
    o["label"] = op.label;
    o["lane"] = to_string(op.lane);
    o["start_s"] = op.start;
    o["end_s"] = op.end;
    ops.push_back(std::move(o));
  }
  return j.dump(indent);
}

}  // namespace moenet
