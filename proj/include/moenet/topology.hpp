#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace moenet {

inline constexpr double kGB = 1e9;

enum class TopologyKind { ScaleUp, ScaleOut, Torus3D, FullMesh3D };

std::string_view to_string(TopologyKind kind);
std::optional<TopologyKind> parse_topology_kind(std::string_view name);

[[nodiscard]] constexpr bool is_switchless(TopologyKind k) {
  return k == TopologyKind::Torus3D || k == TopologyKind::FullMesh3D;
}

// Shape of a 3D torus / full-mesh. Only meaningful for switchless kinds.
struct Dims3 {
  std::array<int, 3> d{1, 1, 1};

  [[nodiscard]] std::int64_t volume() const {
    return std::int64_t{d[0]} * d[1] * d[2];
  }
  [[nodiscard]] int active_dims() const;  // dims with extent > 1
  [[nodiscard]] int max_extent() const;
  [[nodiscard]] std::string str() const;  // "4x4x4"

  friend bool operator==(const Dims3&, const Dims3&) = default;
};

struct ClusterSpec {
  TopologyKind kind = TopologyKind::ScaleUp;
  Dims3 dims;                      // switchless only
  int xpu_count = 64;
  double per_xpu_bandwidth = 450 * kGB;  // unidirectional aggregate, B/s
  int switch_radix = 64;
  int scaleup_ports_per_xpu = 16;
  int scaleout_ports_per_xpu = 1;
  int xpus_per_rack = 64;
  // Scale-out with both port counts nonzero: XPUs are grouped into
  // scale-up domains of this size, reached at scaleup_domain_bandwidth.
  int scaleup_domain_size = 8;
  double scaleup_domain_bandwidth = 450 * kGB;

  [[nodiscard]] bool is_hybrid() const {
    return kind == TopologyKind::ScaleOut && scaleup_ports_per_xpu > 0 &&
           scaleout_ports_per_xpu > 0 && scaleup_domain_size > 1;
  }
};

// Throws Error(InvalidSpec) on any violated invariant.
void validate(const ClusterSpec& spec);

// Links per XPU: 1 for switched fabrics (the aggregate is one logical
// link), 2 per non-trivial dim for a torus, sum(d_i - 1) for a full-mesh.
[[nodiscard]] int link_degree(TopologyKind kind, const Dims3& dims);
[[nodiscard]] int link_degree(const ClusterSpec& spec);

[[nodiscard]] double per_link_bandwidth(const ClusterSpec& spec);

// Average hop count of a bidirectional ring of `extent` nodes with
// shortest-direction routing, over all (src, dst) pairs including src == dst.
[[nodiscard]] double ring_average_hops(int extent);

// Shape a group of `count` consecutive row-major ranks occupies in `dims`
// (the last dim fills first). Empty when the group is not a sub-box.
[[nodiscard]] std::optional<Dims3> embed_group(const Dims3& dims, int count);

// Most cube-like d1 >= d2 >= d3 with d1*d2*d3 == n (64 -> 4x4x4, 256 -> 8x8x4).
[[nodiscard]] Dims3 balanced_dims(int n);

struct ClusterNetwork {
  ClusterSpec spec;
  int degree = 1;
  double per_link_bandwidth = 0;  // logical link used by the comm model
  double port_bandwidth = 0;      // physical per-port rate on switched fabrics
  std::int64_t switch_count = 0;
  double switch_total_capacity = 0;  // sum over switches of radix * port rate
  std::int64_t copper_link_count = 0;
  std::int64_t aoc_link_count = 0;
  double copper_link_bandwidth = 0;  // sum of copper link rates
  double aoc_link_bandwidth = 0;
  int fat_tree_levels = 0;
  // Totals by fabric for the non-blocking check.
  std::int64_t switch_ports_total = 0;
  std::int64_t switch_ports_used = 0;

  [[nodiscard]] std::int64_t link_count() const {
    return copper_link_count + aoc_link_count;
  }
};

[[nodiscard]] ClusterNetwork build_cluster(const ClusterSpec& spec);

}  // namespace moenet
