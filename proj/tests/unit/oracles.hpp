#pragma once

#include <algorithm>
#include <string_view>
#include <vector>

#include "moenet/iteration.hpp"
#include "moenet/sweep.hpp"

namespace oracle {

using namespace moenet;

inline IterOp op(OpLane lane, double seconds, int layer = 0, std::string_view name = "op") {
  IterOp o;
  o.lane = lane;
  o.seconds = seconds;
  o.layer = layer;
  o.name = name;
  return o;
}

struct LayerTimes {
  double attention, allreduce, router, dispatch, experts, combine, head;
};

// Synthetic graph with the decode layer structure.
inline IterationGraph graph(const LayerTimes& t, int layers, double scale = 1.0) {
  IterationGraph g;
  g.num_layers = layers;
  for (int l = 0; l < layers; ++l) {
    g.ops.push_back(op(OpLane::Compute, t.attention * scale, l, "attention"));
    if (t.allreduce > 0) g.ops.push_back(op(OpLane::Comm, t.allreduce * scale, l, "allreduce"));
    g.ops.push_back(op(OpLane::Compute, t.router * scale, l, "router"));
    g.ops.push_back(op(OpLane::Comm, t.dispatch * scale, l, "dispatch"));
    g.ops.push_back(op(OpLane::Compute, t.experts * scale, l, "experts"));
    g.ops.push_back(op(OpLane::Comm, t.combine * scale, l, "combine"));
  }
  g.ops.push_back(op(OpLane::Compute, t.head * scale, -1, "lm_head"));
  return g;
}

// Fixed per-op time table, arbitrary units.
inline const std::vector<LayerTimes> kCases{
    {100, 0, 10, 40, 80, 40, 20},   {10, 0, 5, 80, 20, 80, 5},     {50, 0, 50, 50, 50, 50, 50},
    {200, 30, 20, 60, 150, 60, 40}, {5, 5, 5, 5, 5, 5, 5},         {120, 0, 0, 120, 0, 120, 0},
    {1, 0, 1, 100, 1, 100, 1},      {300, 0, 30, 10, 300, 10, 90}, {60, 20, 10, 70, 90, 70, 15},
    {40, 0, 40, 41, 40, 39, 40},    {80, 10, 0, 90, 0, 90, 10},    {33, 0, 17, 25, 61, 25, 7},
    {70, 70, 70, 70, 70, 70, 70},   {0, 0, 0, 50, 0, 50, 0},       {90, 0, 10, 100, 10, 100, 0},
    {15, 25, 35, 45, 55, 65, 75},   {75, 65, 55, 45, 35, 25, 15},  {100, 0, 0, 0, 100, 0, 0},
    {25, 0, 25, 50, 25, 50, 25},    {200, 0, 5, 150, 60, 150, 30},
};

struct Enumeration {
  std::size_t leaves = 0;          // complete interleavings
  std::size_t greedy_leaves = 0;   // interleavings obeying the commit rule
  double greedy_makespan = -1;
  double best_makespan = 1e300;
};

// Depth-first over every interleaving of the two chains. Each prefix is
// timed as a list schedule in commit order; a complete interleaving is
// greedy when every commit had the smallest start among the two heads,
// with ties going to the head whose chain finished its previous op later
// and then to microbatch 0.
inline void enumerate(const IterationGraph& a, const IterationGraph& b, bool exhaustive,
                      Enumeration& out) {
  struct State {
    std::size_t next[2]{0, 0};
    double ready[2]{0, 0};
    double lane[2]{0, 0};
    double makespan = 0;
    bool greedy = true;
  };
  const IterationGraph* g[2]{&a, &b};
  std::vector<State> stack{State{}};
  while (!stack.empty()) {
    State s = stack.back();
    stack.pop_back();
    const bool done0 = s.next[0] == g[0]->ops.size();
    const bool done1 = s.next[1] == g[1]->ops.size();
    if (done0 && done1) {
      ++out.leaves;
      out.best_makespan = std::min(out.best_makespan, s.makespan);
      if (s.greedy) {
        ++out.greedy_leaves;
        out.greedy_makespan = s.makespan;
      }
      continue;
    }
    double start[2]{0, 0};
    for (int mb = 0; mb < 2; ++mb) {
      if (s.next[mb] == g[mb]->ops.size()) continue;
      const auto& o = g[mb]->ops[s.next[mb]];
      start[mb] = std::max(s.ready[mb], s.lane[int(o.lane)]);
    }
    for (int mb = 0; mb < 2; ++mb) {
      if (s.next[mb] == g[mb]->ops.size()) continue;
      const int other = 1 - mb;
      bool rule = true;
      if (s.next[other] != g[other]->ops.size()) {
        if (start[other] < start[mb]) rule = false;
        if (start[other] == start[mb]) {
          if (s.ready[other] > s.ready[mb]) rule = false;
          if (s.ready[other] == s.ready[mb] && other == 0) rule = false;
        }
      }
      if (!exhaustive && !(s.greedy && rule)) continue;
      State t = s;
      const auto& o = g[mb]->ops[s.next[mb]];
      const double end = start[mb] + o.seconds;
      t.ready[mb] = end;
      t.lane[int(o.lane)] = end;
      t.makespan = std::max(t.makespan, end);
      t.greedy = s.greedy && rule;
      ++t.next[mb];
      stack.push_back(t);
    }
  }
}

struct Brute {
  bool feasible = false;
  double throughput = 0;
  Parallelism p;
  std::int64_t batch = 0;
};

// Every (EP, TP, B) up to the memory cap, no search shortcuts.
inline Brute brute_force(const EvalContext& ctx, const ServingScenario& s, const SweepOptions& opt) {
  const int n = ctx.comm->network().spec.xpu_count;
  Brute best;
  for (int ep : opt.ep_candidates) {
    for (int tp : opt.tp_candidates) {
      if (n % ep || n % tp || ctx.model->num_experts % ep || ctx.model->num_heads % tp) continue;
      const Parallelism p{ep, tp};
      for (std::int64_t b = 1;; ++b) {
        if (memory_footprint(*ctx.model, p, b, s.context_length) > ctx.hw->mem_capacity) break;
        if (opt.max_batch_per_xpu > 0 && b > opt.max_batch_per_xpu) break;
        const auto e = estimate_tpot(ctx, p, b, s.context_length, s.optimizations.modes(), s.sd);
        if (e.tpot > s.tpot_slo) continue;
        const double thr = double(b) * n / e.tpot;
        if (thr > best.throughput) best = {true, thr, p, b};
      }
    }
  }
  return best;
}

}  // namespace oracle
