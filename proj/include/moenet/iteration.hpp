#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "moenet/collectives.hpp"
#include "moenet/compute.hpp"

namespace moenet {

enum class OpLane { Compute, Comm };

std::string_view to_string(OpLane lane);

struct IterOp {
  int layer = -1;  // -1 for ops after the last decoder layer
  std::string_view name;
  OpLane lane = OpLane::Compute;
  double seconds = 0;
  // Collective ops only.
  CollectiveKind collective = CollectiveKind::AllToAll;
  double bytes = 0;
  int participants = 1;
  std::string algorithm;

  [[nodiscard]] bool is_collective() const { return lane == OpLane::Comm; }
  [[nodiscard]] std::string label() const;  // "L3.dispatch", "head.lm_head"
};

struct IterationGraph {
  std::vector<IterOp> ops;
  int num_layers = 0;
  Parallelism parallelism;
  std::int64_t batch_per_xpu = 0;
  std::int64_t context_length = 0;
  std::int64_t query_length = 1;

  [[nodiscard]] double compute_total() const;
  [[nodiscard]] double comm_total() const;
};

// Everything needed to evaluate one decode iteration on one cluster.
struct EvalContext {
  const ModelSpec* model = nullptr;
  const HardwareSpec* hw = nullptr;
  ComputeCalibration calibration;
  const ProfileTable* profile = nullptr;
  const CommModel* comm = nullptr;
};

// Throws InfeasibleConfig when the footprint exceeds memory and
// InvalidConfig when the EP/TP groups cannot be placed on the cluster.
[[nodiscard]] IterationGraph build_iteration_graph(const EvalContext& ctx, const Parallelism& p,
                                                   std::int64_t batch_per_xpu,
                                                   std::int64_t context_length,
                                                   std::int64_t query_length = 1);

enum class TpotMode { NoOverlap, DBO, SD, DBO_SD };

std::string_view to_string(TpotMode mode);
std::optional<TpotMode> parse_tpot_mode(std::string_view name);

struct TpotEstimate {
  TpotMode mode = TpotMode::NoOverlap;
  double tpot = 0;
  double exposed_comm = 0;
  double compute_total = 0;
  double comm_total = 0;
  // Speculative decoding only: the two raw iteration times.
  double t_draft = 0;
  double t_verify = 0;
};

struct ScheduledOp {
  int microbatch = 0;
  std::size_t index = 0;  // position in that microbatch's graph
  std::string label;
  OpLane lane = OpLane::Compute;
  double start = 0;
  double end = 0;
};

struct Schedule {
  std::vector<ScheduledOp> ops;  // in commit order
  double makespan = 0;
};

[[nodiscard]] TpotEstimate tpot_no_overlap(const IterationGraph& g);

// Greedy two-lane list schedule of two microbatch chains. At each step the
// next op of either chain whose start max(ready, lane free) is smallest is
// committed. Ties go to the op that became ready last, so a chain keeps the
// lane it already holds; remaining ties go to microbatch 0.
[[nodiscard]] Schedule dbo_list_schedule(const IterationGraph& a, const IterationGraph& b);
[[nodiscard]] TpotEstimate dbo_schedule(const IterationGraph& a, const IterationGraph& b,
                                        Schedule* out = nullptr);

// Microbatch sizes for a DBO split: ceil(B/2), floor(B/2).
[[nodiscard]] std::pair<std::int64_t, std::int64_t> dbo_split(std::int64_t batch);

struct SdParams {
  int spec_m = 4;
  double spec_p = 0.8;
};

void validate(const SdParams& sd);

// One decode iteration at `batch_per_xpu` under NoOverlap or DBO.
[[nodiscard]] TpotEstimate iteration_time(const EvalContext& ctx, const Parallelism& p,
                                          std::int64_t batch_per_xpu, std::int64_t context_length,
                                          bool dbo, std::int64_t query_length = 1);

[[nodiscard]] TpotEstimate tpot_sd(const EvalContext& ctx, const Parallelism& p,
                                   std::int64_t batch_per_xpu, std::int64_t context_length,
                                   const SdParams& sd, bool inner_dbo);

// Minimum TPOT over the enabled modes; ties keep the earlier mode. DBO modes
// need at least two requests per XPU and are skipped below that.
[[nodiscard]] TpotEstimate estimate_tpot(const EvalContext& ctx, const Parallelism& p,
                                         std::int64_t batch_per_xpu, std::int64_t context_length,
                                         const std::vector<TpotMode>& modes,
                                         const SdParams& sd = {});

[[nodiscard]] std::string schedule_to_json(const Schedule& s, int indent = 2);

}  // namespace moenet
