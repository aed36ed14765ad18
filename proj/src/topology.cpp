#include "moenet/topology.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "moenet/error.hpp"

namespace moenet {

std::string_view to_string(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::ScaleUp: return "scaleup";
    case TopologyKind::ScaleOut: return "scaleout";
    case TopologyKind::Torus3D: return "torus3d";
    case TopologyKind::FullMesh3D: return "fullmesh3d";
  }
  return "unknown";
}

std::optional<TopologyKind> parse_topology_kind(std::string_view name) {
  if (name == "scaleup" || name == "scale-up") return TopologyKind::ScaleUp;
  if (name == "scaleout" || name == "scale-out") return TopologyKind::ScaleOut;
  if (name == "torus3d" || name == "torus") return TopologyKind::Torus3D;
  if (name == "fullmesh3d" || name == "full-mesh" || name == "fullmesh")
    return TopologyKind::FullMesh3D;
  return std::nullopt;
}

int Dims3::active_dims() const {
  return static_cast<int>(std::count_if(d.begin(), d.end(), [](int x) { return x > 1; }));
}

int Dims3::max_extent() const { return *std::max_element(d.begin(), d.end()); }

std::string Dims3::str() const {
  return std::to_string(d[0]) + "x" + std::to_string(d[1]) + "x" + std::to_string(d[2]);
}

void validate(const ClusterSpec& spec) {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) fail(Errc::InvalidSpec, msg);
  };
  require(spec.xpu_count > 0, "xpu_count must be positive");
  require(spec.per_xpu_bandwidth > 0 && std::isfinite(spec.per_xpu_bandwidth),
          "per_xpu_bandwidth must be positive");
  require(spec.switch_radix > 0, "switch_radix must be positive");
  require(spec.xpus_per_rack > 0, "xpus_per_rack must be positive");
  require(spec.scaleup_ports_per_xpu >= 0 && spec.scaleout_ports_per_xpu >= 0,
          "port counts must be non-negative");

  switch (spec.kind) {
    case TopologyKind::ScaleUp:
      require(spec.scaleup_ports_per_xpu > 0, "scale-up needs scaleup_ports_per_xpu > 0");
      break;
    case TopologyKind::ScaleOut:
      require(spec.scaleout_ports_per_xpu > 0, "scale-out needs scaleout_ports_per_xpu > 0");
      if (spec.is_hybrid()) {
        require(spec.scaleup_domain_bandwidth > 0, "scaleup_domain_bandwidth must be positive");
        require(spec.xpu_count % spec.scaleup_domain_size == 0,
                "xpu_count must be a multiple of scaleup_domain_size");
        require(spec.scaleup_domain_size <= spec.switch_radix,
                "scale-up domain must fit one switch level");
      }
      break;
    case TopologyKind::Torus3D:
    case TopologyKind::FullMesh3D:
      for (int x : spec.dims.d) require(x > 0, "topology dims must be positive");
      require(spec.dims.volume() == spec.xpu_count,
              "dims " + spec.dims.str() + " do not multiply to xpu_count " +
                  std::to_string(spec.xpu_count));
      require(spec.dims.active_dims() > 0 || spec.xpu_count == 1,
              "switchless topology needs at least one dim > 1");
      break;
  }
}

int link_degree(TopologyKind kind, const Dims3& dims) {
  switch (kind) {
    case TopologyKind::ScaleUp:
    case TopologyKind::ScaleOut:
      return 1;
    case TopologyKind::Torus3D:
      return 2 * dims.active_dims();
    case TopologyKind::FullMesh3D: {
      int deg = 0;
      for (int x : dims.d) deg += x - 1;
      return deg;
    }
  }
  return 1;
}

int link_degree(const ClusterSpec& spec) { return link_degree(spec.kind, spec.dims); }

double per_link_bandwidth(const ClusterSpec& spec) {
  validate(spec);
  const int deg = link_degree(spec);
  if (deg <= 0) fail(Errc::InvalidSpec, "topology has no links");
  return spec.per_xpu_bandwidth / deg;
}

double ring_average_hops(int extent) {
  if (extent <= 1) return 0.0;
  std::int64_t total = 0;
  for (int k = 0; k < extent; ++k) total += std::min(k, extent - k);
  return static_cast<double>(total) / extent;
}

std::optional<Dims3> embed_group(const Dims3& dims, int count) {
  if (count <= 0) return std::nullopt;
  Dims3 shape;
  int remaining = count;
  for (int i = 2; i >= 0; --i) {
    const int extent = dims.d[i];
    if (remaining % extent == 0) {
      shape.d[i] = extent;
      remaining /= extent;
    } else if (remaining < extent && extent % remaining == 0) {
      shape.d[i] = remaining;
      remaining = 1;
    } else {
      return std::nullopt;
    }
  }
  if (remaining != 1) return std::nullopt;
  return shape;
}

Dims3 balanced_dims(int n) {
  if (n <= 0) fail(Errc::InvalidSpec, "cluster size must be positive");
  Dims3 best{{n, 1, 1}};
  for (int c = 1; c * c * c <= n; ++c) {
    if (n % c) continue;
    for (int b = c; b * b <= n / c; ++b) {
      if ((n / c) % b) continue;
      const int a = n / c / b;
      if (a - c < best.d[0] - best.d[2]) best = Dims3{{a, b, c}};
    }
  }
  return best;
}

namespace {

struct FatTree {
  std::int64_t switches = 0;
  std::int64_t copper = 0;
  std::int64_t aoc = 0;
  int levels = 0;
  std::int64_t ports_used = 0;
};

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

// Non-blocking fat tree attaching `xpus` XPUs with `ports` ports each.
FatTree build_fat_tree(std::int64_t xpus, int ports, int radix) {
  FatTree t;
  if (xpus <= radix) {
    // one rail switch per XPU port
    t.levels = 1;
    t.switches = std::int64_t{ports} * ceil_div(xpus, radix);
    t.copper = xpus * ports;
    t.ports_used = xpus * ports;
    return t;
  }
  // Each rail is its own two-level tree: leaves split radix half-down,
  // half-up, and every spine reaches every leaf of its rail.
  const int half = radix / 2;
  if (radix < 2 || xpus > std::int64_t{half} * radix)
    fail(Errc::InvalidSpec, "cluster exceeds a two-level fat tree at radix " +
                                std::to_string(radix));
  const std::int64_t leaves_per_rail = ceil_div(xpus, half);
  const std::int64_t leaves = leaves_per_rail * ports;
  const std::int64_t spines = ceil_div(leaves_per_rail * half, radix) * ports;
  t.levels = 2;
  t.switches = leaves + spines;
  t.copper = xpus * ports;
  t.aoc = leaves * half;
  t.ports_used = xpus * ports + 2 * leaves * half;
  return t;
}

std::int64_t row_major_index(const Dims3& dims, std::array<int, 3> c) {
  return (std::int64_t{c[0]} * dims.d[1] + c[1]) * dims.d[2] + c[2];
}

// Visits every physical link of a switchless topology as (a, b) node indices.
void for_each_direct_link(const ClusterSpec& spec,
                          const std::function<void(std::int64_t, std::int64_t)>& visit) {
  const Dims3& dims = spec.dims;
  std::array<int, 3> c{};
  for (c[0] = 0; c[0] < dims.d[0]; ++c[0])
    for (c[1] = 0; c[1] < dims.d[1]; ++c[1])
      for (c[2] = 0; c[2] < dims.d[2]; ++c[2]) {
        const std::int64_t a = row_major_index(dims, c);
        for (int i = 0; i < 3; ++i) {
          const int extent = dims.d[i];
          if (extent <= 1) continue;
          if (spec.kind == TopologyKind::Torus3D) {
            auto n = c;
            n[i] = (c[i] + 1) % extent;
            visit(a, row_major_index(dims, n));
          } else {
            for (int k = c[i] + 1; k < extent; ++k) {
              auto n = c;
              n[i] = k;
              visit(a, row_major_index(dims, n));
            }
          }
        }
      }
}

}  // namespace

ClusterNetwork build_cluster(const ClusterSpec& spec) {
  validate(spec);
  ClusterNetwork net;
  net.spec = spec;
  net.degree = link_degree(spec);
  net.per_link_bandwidth = spec.per_xpu_bandwidth / net.degree;

  const std::int64_t n = spec.xpu_count;
  const int radix = spec.switch_radix;

  switch (spec.kind) {
    case TopologyKind::ScaleUp: {
      const int ports = spec.scaleup_ports_per_xpu;
      net.port_bandwidth = spec.per_xpu_bandwidth / ports;
      const FatTree t = build_fat_tree(n, ports, radix);
      net.switch_count = t.switches;
      net.switch_total_capacity = static_cast<double>(t.switches) * radix * net.port_bandwidth;
      net.copper_link_count = t.copper;
      net.aoc_link_count = t.aoc;
      net.copper_link_bandwidth = static_cast<double>(t.copper) * net.port_bandwidth;
      net.aoc_link_bandwidth = static_cast<double>(t.aoc) * net.port_bandwidth;
      net.fat_tree_levels = t.levels;
      net.switch_ports_total = t.switches * radix;
      net.switch_ports_used = t.ports_used;
      break;
    }
    case TopologyKind::ScaleOut: {
      const int ports = spec.scaleout_ports_per_xpu;
      net.port_bandwidth = spec.per_xpu_bandwidth / ports;
      const FatTree t = build_fat_tree(n, ports, radix);
      net.switch_count = t.switches;
      net.switch_total_capacity = static_cast<double>(t.switches) * radix * net.port_bandwidth;
      net.copper_link_count = t.copper;
      net.aoc_link_count = t.aoc;
      net.copper_link_bandwidth = static_cast<double>(t.copper) * net.port_bandwidth;
      net.aoc_link_bandwidth = static_cast<double>(t.aoc) * net.port_bandwidth;
      net.fat_tree_levels = t.levels;
      net.switch_ports_total = t.switches * radix;
      net.switch_ports_used = t.ports_used;
      if (spec.is_hybrid()) {
        const int g = spec.scaleup_domain_size;
        const int up_ports = spec.scaleup_ports_per_xpu;
        const double up_rate = spec.scaleup_domain_bandwidth / up_ports;
        const std::int64_t domains = n / g;
        const FatTree d = build_fat_tree(g, up_ports, radix);
        net.switch_count += domains * d.switches;
        net.switch_total_capacity += static_cast<double>(domains * d.switches) * radix * up_rate;
        net.copper_link_count += domains * d.copper;
        net.copper_link_bandwidth += static_cast<double>(domains * d.copper) * up_rate;
        net.switch_ports_total += domains * d.switches * radix;
        net.switch_ports_used += domains * d.ports_used;
      }
      break;
    }
    case TopologyKind::Torus3D:
    case TopologyKind::FullMesh3D: {
      const std::int64_t per_rack = spec.xpus_per_rack;
      for_each_direct_link(spec, [&](std::int64_t a, std::int64_t b) {
        if (a / per_rack == b / per_rack)
          ++net.copper_link_count;
        else
          ++net.aoc_link_count;
      });
      net.copper_link_bandwidth = static_cast<double>(net.copper_link_count) * net.per_link_bandwidth;
      net.aoc_link_bandwidth = static_cast<double>(net.aoc_link_count) * net.per_link_bandwidth;
      break;
    }
  }
  return net;
}

}  // namespace moenet
