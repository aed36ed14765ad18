#include "moenet/tco.hpp"

#include "moenet/error.hpp"

namespace moenet {

void validate(const CostConfig& c) {
  if (c.xpu_capex < 0 || c.switch_cost_per_capacity < 0 || c.switch_cost_fixed < 0 ||
      c.copper_cost_per_bandwidth < 0 || c.electricity_price < 0 || c.pue < 0 ||
      c.hours_per_month < 0 || c.switch_tdp_per_capacity < 0 || c.link_tdp < 0 ||
      c.adjustment_c < 0)
    fail(Errc::InvalidConfig, "cost rates must be non-negative");
  if (c.aoc_multiplier < 1) fail(Errc::InvalidConfig, "aoc_multiplier must be at least 1");
  if (c.amortization_months <= 0) fail(Errc::InvalidConfig, "amortization_months must be positive");
}

namespace {

double energy_cost(double watts, const CostConfig& c) {
  return watts / 1000.0 * c.hours_per_month * c.electricity_price * c.pue;
}

}  // namespace

double xpu_monthly_unit(const HardwareSpec& hw, const CostConfig& cost) {
  return cost.xpu_capex / cost.amortization_months + energy_cost(hw.tdp, cost);
}

TcoBreakdown monthly_tco(const ClusterNetwork& net, const HardwareSpec& hw,
                         const CostConfig& cost) {
  validate(cost);
  const double months = cost.amortization_months;
  const double n = net.spec.xpu_count;

  TcoBreakdown t;
  t.monthly_xpu = n * cost.xpu_capex / months;
  t.monthly_xpu_energy = n * energy_cost(hw.tdp, cost);

  const double switch_capex = double(net.switch_count) * cost.switch_cost_fixed +
                              cost.switch_cost_per_capacity * net.switch_total_capacity;
  t.monthly_switch = switch_capex / months;

  const double link_capex =
      cost.copper_cost_per_bandwidth *
      (net.copper_link_bandwidth + cost.aoc_multiplier * net.aoc_link_bandwidth);
  t.monthly_link = link_capex / months;

  const double network_watts = cost.switch_tdp_per_capacity * net.switch_total_capacity +
                               cost.link_tdp * double(net.aoc_link_count);
  t.monthly_network_energy = energy_cost(network_watts, cost);

  t.monthly_energy = t.monthly_xpu_energy + t.monthly_network_energy;
  t.monthly_network = t.monthly_switch + t.monthly_link + t.monthly_network_energy;

  if (cost.normalize) {
    t.unit = xpu_monthly_unit(hw, cost);
    if (t.unit <= 0) fail(Errc::InvalidConfig, "normalization unit must be positive");
    for (double* v : {&t.monthly_xpu, &t.monthly_xpu_energy, &t.monthly_switch, &t.monthly_link,
                      &t.monthly_network_energy, &t.monthly_energy, &t.monthly_network})
      *v /= t.unit;
  }
  t.monthly_total = t.monthly_xpu + t.monthly_xpu_energy + cost.adjustment_c * t.monthly_network;
  return t;
}

double throughput_per_cost(double throughput, const TcoBreakdown& tco) {
  if (!(tco.monthly_total > 0)) fail(Errc::InvalidArgument, "monthly cost must be positive");
  return throughput / tco.monthly_total;
}

}  // namespace moenet
