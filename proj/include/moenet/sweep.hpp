#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "moenet/collectives.hpp"
#include "moenet/compute.hpp"
#include "moenet/iteration.hpp"
#include "moenet/tco.hpp"
#include "moenet/topology.hpp"

namespace moenet {

struct ModeSet {
  bool dbo = false;
  bool sd = false;

  // noopt, dbo, sd, dbo+sd
  [[nodiscard]] std::string label() const;
  // NoOverlap plus every enabled optimization and their combination.
  [[nodiscard]] std::vector<TpotMode> modes() const;

  static std::optional<ModeSet> parse(std::string_view label);
  friend bool operator==(const ModeSet&, const ModeSet&) = default;
};

struct ServingScenario {
  std::string name;
  double tpot_slo = 0.1;  // s
  std::int64_t context_length = 512;
  ModeSet optimizations;
  SdParams sd;
};

void validate(const ServingScenario& s);

struct OperatingPoint {
  bool feasible = false;
  int ep = 0;
  int tp = 0;
  std::int64_t batch_per_xpu = 0;
  std::int64_t batch_total = 0;
  TpotMode mode = TpotMode::NoOverlap;
  double tpot = 0;
  double throughput = 0;  // tokens/s for the whole cluster
  double memory_used = 0;
  double exposed_comm = 0;
  double compute_time = 0;
  double comm_time = 0;
};

struct SweepOptions {
  std::vector<int> ep_candidates{8, 16, 32, 64, 128, 256};
  std::vector<int> tp_candidates{1, 2, 4, 8};
  int bisection_steps = 8;
  std::int64_t max_batch_per_xpu = 0;  // 0: memory capacity is the only cap
};

// (EP, TP) pairs the cluster can host, in ascending (EP, TP) order.
[[nodiscard]] std::vector<Parallelism> parallelism_domain(const ModelSpec& m,
                                                          const CommModel& comm,
                                                          const SweepOptions& opt);

// Best throughput at one (EP, TP) over the batch search; infeasible when
// even one request per XPU misses the SLO or does not fit.
[[nodiscard]] OperatingPoint best_batch(const EvalContext& ctx, const Parallelism& p,
                                        const ServingScenario& s, const SweepOptions& opt);

[[nodiscard]] OperatingPoint max_throughput(const EvalContext& ctx, const ServingScenario& s,
                                            const SweepOptions& opt = {});

struct TopologyEntry {
  std::string name;
  ClusterSpec base;         // kind, radix, ports, rack size
  double link_share = 1.0;  // fraction of the XPU's link bandwidth this fabric gets
  std::map<int, Dims3> dims;  // switchless shape per cluster size; balanced_dims otherwise
};

[[nodiscard]] ClusterSpec cluster_for(const TopologyEntry& t, int xpu_count, double bandwidth);

struct GridAxes {
  std::vector<TopologyEntry> topologies;
  std::vector<double> bandwidth_multipliers{1.0};
  std::vector<int> cluster_sizes{64};
  std::vector<ServingScenario> scenarios;
  std::vector<ModeSet> mode_sets{ModeSet{true, true}};
};

struct GridBase {
  ModelSpec model;
  HardwareSpec hw;
  ComputeCalibration calibration;
  const ProfileTable* profile = nullptr;
  AlphaBetaParams intra = AlphaBetaParams::intra_node();
  AlphaBetaParams inter = AlphaBetaParams::inter_node();
  double alpha_scale = 1.0;
  CostConfig cost;
  SweepOptions sweep;
};

struct GridRow {
  std::string topology;
  TopologyKind kind = TopologyKind::ScaleUp;
  std::string dims;
  int xpu_count = 0;
  double bandwidth_multiplier = 1;
  double bandwidth = 0;  // B/s per XPU
  std::string scenario;
  double tpot_slo = 0;
  std::int64_t context_length = 0;
  std::string modes;
  OperatingPoint point;
  std::string a2a_algorithm;
  TcoBreakdown tco;
  double cost_per_xpu = 0;
  double throughput_per_xpu = 0;
  double throughput_per_cost = 0;
  std::string note;  // why a cell is infeasible
};

struct GridCell {
  std::size_t topology = 0, size = 0, bandwidth = 0, scenario = 0, modes = 0;
};

// Cells in output order: topology, cluster size, bandwidth, scenario, modes.
[[nodiscard]] std::vector<GridCell> grid_cells(const GridAxes& axes);
[[nodiscard]] GridRow evaluate_cell(const GridAxes& axes, const GridBase& base,
                                    const GridCell& cell);

// Parallel over cells; rows come back in grid_cells order.
[[nodiscard]] std::vector<GridRow> run_grid(const GridAxes& axes, const GridBase& base);
[[nodiscard]] std::vector<GridRow> run_grid_serial(const GridAxes& axes, const GridBase& base);

// Indices of the undominated (cost, throughput) points in input order.
// A duplicate of an earlier point is dropped.
[[nodiscard]] std::vector<std::size_t> pareto_frontier(
    const std::vector<std::pair<double, double>>& points);

}  // namespace moenet
