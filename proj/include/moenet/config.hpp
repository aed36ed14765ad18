#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "moenet/collectives.hpp"
#include "moenet/compute.hpp"
#include "moenet/sweep.hpp"
#include "moenet/tco.hpp"

namespace moenet {

// Everything one run needs. Sections: hardware, model, topologies, costs,
// scenarios, sweep. Unknown fields anywhere are errors.
struct Config {
  HardwareSpec hardware = HardwareSpec::h100();
  ComputeCalibration calibration;
  std::string profile_path;  // empty: roofline only
  ModelSpec model;
  std::vector<TopologyEntry> topologies;
  CostConfig costs;
  std::vector<ServingScenario> scenarios;

  std::vector<int> cluster_sizes{64};
  std::vector<double> bandwidth_multipliers{1.0};
  std::vector<ModeSet> mode_sets{ModeSet{true, true}};
  SweepOptions sweep;
  AlphaBetaParams intra = AlphaBetaParams::intra_node();
  AlphaBetaParams inter = AlphaBetaParams::inter_node();
  double alpha_scale = 1.0;

  std::vector<std::string> sources;  // files read, in order
};

// `origin` names the text in diagnostics; relative paths inside resolve
// against `base_dir`.
[[nodiscard]] Config parse_config(std::string_view text, const std::string& origin,
                                  const std::string& base_dir);
[[nodiscard]] Config load_config(const std::string& path);

// "0.5" or "1/3".
[[nodiscard]] std::optional<double> parse_ratio(std::string_view text);

[[nodiscard]] ModelSpec parse_model(std::string_view text, const std::string& origin);
[[nodiscard]] ModelSpec load_model(const std::string& path);

void validate(const Config& c);

[[nodiscard]] GridAxes grid_axes(const Config& c);
[[nodiscard]] GridBase grid_base(const Config& c, const ProfileTable* profile);

}  // namespace moenet
