#pragma once

#include <string>
#include <vector>

#include "moenet/sweep.hpp"
#include "moenet/topology.hpp"

namespace moenet {

struct RowFlags {
  bool provisioned = false;  // bandwidth multiplier 1
  bool sweet_spot = false;   // best throughput/cost over bandwidth in its group
  bool pareto = false;       // undominated (cost/XPU, throughput/XPU) in its scenario
};

// Sweet spots are taken per (topology, size, scenario, modes) over the
// bandwidth axis, ties to the lower bandwidth. Pareto membership is taken
// per (scenario, modes) over feasible rows.
[[nodiscard]] std::vector<RowFlags> mark_rows(const std::vector<GridRow>& rows);

// Values that hold for a whole run and are repeated on every row.
struct RunLabels {
  std::string generation = "hopper";
  double alpha_scale = 1.0;
};

[[nodiscard]] const std::vector<std::string>& csv_columns();
[[nodiscard]] std::string rows_to_csv(const std::vector<GridRow>& rows,
                                      const std::vector<RowFlags>& flags, const RunLabels& run);
[[nodiscard]] std::string rows_to_json(const std::vector<GridRow>& rows,
                                       const std::vector<RowFlags>& flags, const RunLabels& run);

struct RunManifest {
  std::string tool_version;
  std::string command;
  std::vector<std::string> config_files;
  std::string output_dir;
  RunLabels run;
  GridAxes axes;
  std::vector<std::string> artifacts;
  std::string csv_hash;
};

[[nodiscard]] std::string manifest_to_json(const RunManifest& m);

// Stable 64-bit FNV-1a digest as 16 hex digits.
[[nodiscard]] std::string content_hash(const std::string& text);

[[nodiscard]] std::string inventory_to_json(const ClusterNetwork& net);

}  // namespace moenet
