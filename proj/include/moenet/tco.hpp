#pragma once

#include "moenet/compute.hpp"
#include "moenet/topology.hpp"

namespace moenet {

// Rates are in arbitrary cost units. Capacities and bandwidths in B/s.
struct CostConfig {
  double xpu_capex = 30000;
  double switch_cost_per_capacity = 2.9e-8;
  double switch_cost_fixed = 0;
  double copper_cost_per_bandwidth = 2e-9;
  double aoc_multiplier = 6.7;
  int amortization_months = 36;
  double electricity_price = 0.1;  // per kWh
  double pue = 1.3;
  double hours_per_month = 730;
  double switch_tdp_per_capacity = 5.6e-11;  // W per B/s
  double link_tdp = 0.5;                     // W per active (AOC) link; copper is passive
  double adjustment_c = 1.0;
  // Report every figure as a multiple of one XPU's monthly capex + energy.
  bool normalize = true;
};

void validate(const CostConfig& c);

struct TcoBreakdown {
  double monthly_xpu = 0;             // XPU capex share
  double monthly_xpu_energy = 0;
  double monthly_switch = 0;          // switch capex share
  double monthly_link = 0;            // link capex share
  double monthly_network_energy = 0;
  double monthly_energy = 0;          // XPU + network energy
  double monthly_network = 0;         // switch + link + network energy
  double monthly_total = 0;           // XPU side + c * network
  double unit = 1;                    // raw cost units per reported unit
};

// Raw monthly cost of one XPU (capex share plus energy).
[[nodiscard]] double xpu_monthly_unit(const HardwareSpec& hw, const CostConfig& cost);

[[nodiscard]] TcoBreakdown monthly_tco(const ClusterNetwork& net, const HardwareSpec& hw,
                                       const CostConfig& cost);

[[nodiscard]] double throughput_per_cost(double throughput, const TcoBreakdown& tco);

}  // namespace moenet
