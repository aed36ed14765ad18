#include "doctest.h"

#include "moenet/error.hpp"
#include "moenet/tco.hpp"
#include "support.hpp"

using namespace moenet;

namespace {

CostConfig raw() {
  CostConfig c;
  c.normalize = false;
  return c;
}

ClusterNetwork net(TopologyKind kind, int n, double bw = 450 * kGB) {
  return build_cluster(test::cluster(kind, n, bw));
}

}  // namespace

TEST_CASE("xpu amortization and energy") {
  auto hw = HardwareSpec::h100();
  auto c = raw();
  c.xpu_capex = 36000;
  c.electricity_price = 0;
  const auto t = monthly_tco(net(TopologyKind::ScaleUp, 64), hw, c);
  CHECK(t.monthly_xpu == doctest::Approx(64 * 1000.0));
  CHECK(t.monthly_xpu_energy == 0);

  c.electricity_price = 0.2;
  c.pue = 1.5;
  c.hours_per_month = 720;
  const auto e = monthly_tco(net(TopologyKind::ScaleUp, 64), hw, c);
  CHECK(e.monthly_xpu_energy == doctest::Approx(64 * 0.7 * 720 * 0.2 * 1.5));
  CHECK(xpu_monthly_unit(hw, c) == doctest::Approx(1000 + 0.7 * 720 * 0.2 * 1.5));
}

TEST_CASE("link cost charges optical links at the multiplier") {
  const auto hw = HardwareSpec::h100();
  auto c = raw();
  const auto n = net(TopologyKind::FullMesh3D, 256);
  REQUIRE(n.aoc_link_count > 0);
  REQUIRE(n.copper_link_count > 0);
  const auto base = monthly_tco(n, hw, c);
  const double copper = c.copper_cost_per_bandwidth * n.copper_link_bandwidth / c.amortization_months;
  const double aoc = c.copper_cost_per_bandwidth * n.aoc_link_bandwidth / c.amortization_months;
  CHECK(test::rel_err(base.monthly_link, copper + 6.7 * aoc) < 1e-12);

  c.aoc_multiplier = 1;
  const auto flat = monthly_tco(n, hw, c);
  CHECK(test::rel_err(flat.monthly_link, copper + aoc) < 1e-12);
  CHECK(test::rel_err(base.monthly_link - flat.monthly_link, 5.7 * aoc) < 1e-12);
}

TEST_CASE("switchless fabrics carry no switch cost") {
  const auto hw = HardwareSpec::h100();
  for (auto kind : {TopologyKind::Torus3D, TopologyKind::FullMesh3D}) {
    const auto t = monthly_tco(net(kind, 64), hw, raw());
    CHECK(t.monthly_switch == 0);
    CHECK(t.monthly_link > 0);
  }
  const auto su = monthly_tco(net(TopologyKind::ScaleUp, 64), hw, raw());
  CHECK(su.monthly_switch > 0);
}

TEST_CASE("network energy counts switches and optical links") {
  const auto hw = HardwareSpec::h100();
  auto c = raw();
  c.electricity_price = 1;
  c.pue = 1;
  c.hours_per_month = 1000;
  const auto torus = net(TopologyKind::Torus3D, 64);
  REQUIRE(torus.aoc_link_count == 0);
  CHECK(monthly_tco(torus, hw, c).monthly_network_energy == 0);

  const auto fm = net(TopologyKind::FullMesh3D, 256);
  CHECK(monthly_tco(fm, hw, c).monthly_network_energy ==
        doctest::Approx(c.link_tdp * double(fm.aoc_link_count)));

  const auto su = net(TopologyKind::ScaleUp, 64);
  CHECK(monthly_tco(su, hw, c).monthly_network_energy ==
        doctest::Approx(c.switch_tdp_per_capacity * su.switch_total_capacity));
}

TEST_CASE("switch cost is linear in capacity") {
  const auto hw = HardwareSpec::h100();
  const auto a = net(TopologyKind::ScaleUp, 64, 100 * kGB);
  const auto b = net(TopologyKind::ScaleUp, 64, 300 * kGB);
  REQUIRE(a.switch_count == b.switch_count);
  const auto ta = monthly_tco(a, hw, raw());
  const auto tb = monthly_tco(b, hw, raw());
  CHECK(test::rel_err(tb.monthly_switch, 3 * ta.monthly_switch) < 1e-12);
  CHECK(test::rel_err(tb.monthly_link, 3 * ta.monthly_link) < 1e-12);

  auto fixed = raw();
  fixed.switch_cost_per_capacity = 0;
  fixed.switch_cost_fixed = 3600;
  CHECK(monthly_tco(a, hw, fixed).monthly_switch == doctest::Approx(a.switch_count * 100.0));
}

TEST_CASE("adjustment factor scales only the network") {
  const auto hw = HardwareSpec::h100();
  const auto n = net(TopologyKind::ScaleUp, 64);
  auto c = raw();
  c.adjustment_c = 0;
  const auto zero = monthly_tco(n, hw, c);
  CHECK(zero.monthly_total == doctest::Approx(zero.monthly_xpu + zero.monthly_xpu_energy));
  double prev_total = zero.monthly_total, prev_ratio = 1e300;
  for (double adj : {0.5, 1.0, 2.0, 4.0}) {
    c.adjustment_c = adj;
    const auto t = monthly_tco(n, hw, c);
    CHECK(t.monthly_total > prev_total);
    CHECK(t.monthly_total == doctest::Approx(zero.monthly_total + adj * t.monthly_network));
    const double r = throughput_per_cost(1e6, t);
    CHECK(r < prev_ratio);
    prev_total = t.monthly_total;
    prev_ratio = r;
  }
}

TEST_CASE("normalization to one xpu-month") {
  const auto hw = HardwareSpec::h100();
  const auto n = net(TopologyKind::Torus3D, 64);
  CostConfig c;
  const auto norm = monthly_tco(n, hw, c);
  const auto plain = monthly_tco(n, hw, raw());
  CHECK(norm.unit == doctest::Approx(xpu_monthly_unit(hw, c)));
  CHECK(norm.monthly_xpu + norm.monthly_xpu_energy == doctest::Approx(64.0));
  CHECK(norm.monthly_total == doctest::Approx(plain.monthly_total / norm.unit));
  CHECK(throughput_per_cost(25600, TcoBreakdown{0, 0, 0, 0, 0, 0, 0, 64, 1}) == 400);
}

TEST_CASE("cost validation") {
  const auto hw = HardwareSpec::h100();
  const auto n = net(TopologyKind::ScaleUp, 64);
  auto c = raw();
  c.aoc_multiplier = 0.5;
  CHECK_THROWS_AS((void)monthly_tco(n, hw, c), Error);
  c = raw();
  c.amortization_months = 0;
  CHECK_THROWS_AS((void)monthly_tco(n, hw, c), Error);
  c = raw();
  c.pue = -1;
  CHECK_THROWS_AS((void)monthly_tco(n, hw, c), Error);
  CHECK_THROWS_AS((void)throughput_per_cost(1, TcoBreakdown{}), Error);
}
