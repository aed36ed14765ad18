#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "moenet/collectives.hpp"
#include "moenet/compute.hpp"
#include "moenet/config.hpp"
#include "moenet/iteration.hpp"
#include "moenet/sweep.hpp"
#include "moenet/topology.hpp"

namespace test {

inline std::string source_path(const std::string& rel) {
  return std::string(MOENET_SOURCE_DIR) + "/" + rel;
}

inline moenet::ModelSpec deepseek() {
  static const moenet::ModelSpec m = moenet::load_model(source_path("data/deepseek-v3.json"));
  return m;
}

// Two-layer MoE small enough for exhaustive searches.
inline moenet::ModelSpec tiny_model() {
  moenet::ModelSpec m;
  m.name = "tiny";
  m.num_layers = 2;
  m.num_dense_layers = 0;
  m.hidden_dim = 1024;
  m.num_experts = 16;
  m.top_k = 2;
  m.expert_ffn_dim = 512;
  m.num_shared_experts = 1;
  m.num_heads = 8;
  m.q_lora_rank = 256;
  m.kv_lora_rank = 128;
  m.qk_nope_head_dim = 64;
  m.qk_rope_head_dim = 32;
  m.v_head_dim = 64;
  m.vocab_size = 8000;
  m.kv_bytes_per_token = 2 * 160 * 2;
  m.param_bytes_total = 60e6;
  return m;
}

inline moenet::HardwareSpec tiny_hw() {
  moenet::HardwareSpec hw = moenet::HardwareSpec::h100();
  hw.name = "tiny";
  hw.peak_flops = 2e12;
  hw.mem_bandwidth = 4e10;
  hw.mem_capacity = 0.15e9;
  hw.per_xpu_link_bandwidth = 50e9;
  return hw;
}

inline moenet::ClusterSpec cluster(moenet::TopologyKind kind, int n, double bandwidth,
                                   moenet::Dims3 dims = {}) {
  moenet::ClusterSpec c;
  c.kind = kind;
  c.xpu_count = n;
  c.per_xpu_bandwidth = bandwidth;
  if (moenet::is_switchless(kind)) c.dims = dims.volume() == n ? dims : moenet::balanced_dims(n);
  return c;
}

inline moenet::CommModel comm_for(const moenet::ClusterSpec& c, double alpha_scale = 1.0) {
  return moenet::CommModel(moenet::build_cluster(c), moenet::AlphaBetaParams::intra_node(),
                           moenet::AlphaBetaParams::inter_node(), alpha_scale);
}

inline moenet::TopologyEntry entry(const std::string& name, moenet::TopologyKind kind,
                                   double link_share = 1.0) {
  moenet::TopologyEntry t;
  t.name = name;
  t.base.kind = kind;
  t.link_share = link_share;
  if (kind == moenet::TopologyKind::ScaleOut) t.base.scaleup_ports_per_xpu = 0;
  return t;
}

inline double rel_err(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0 ? 0 : std::abs(a - b) / scale;
}

}  // namespace test
