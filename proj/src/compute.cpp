#include "moenet/compute.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "moenet/error.hpp"

namespace moenet {

double ModelSpec::attention_params() const {
  const double h = hidden_dim;
  const double heads = num_heads;
  const double qk = qk_nope_head_dim + qk_rope_head_dim;
  const double q_part = q_lora_rank > 0
                            ? h * q_lora_rank + double(q_lora_rank) * heads * qk
                            : h * heads * qk;
  const double kv_down = h * (kv_lora_rank + qk_rope_head_dim);
  const double kv_up = double(kv_lora_rank) * heads * (qk_nope_head_dim + v_head_dim);
  const double out = heads * v_head_dim * h;
  return q_part + kv_down + kv_up + out;
}

double ModelSpec::expert_params() const { return 3.0 * hidden_dim * expert_ffn_dim; }

double ModelSpec::dense_ffn_params() const { return 3.0 * hidden_dim * dense_ffn_dim; }

void validate(const ModelSpec& m) {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) fail(Errc::InvalidConfig, "model: " + msg);
  };
  require(m.num_layers > 0, "num_layers must be positive");
  require(m.num_dense_layers >= 0 && m.num_dense_layers <= m.num_layers,
          "num_dense_layers must lie in [0, num_layers]");
  require(m.hidden_dim > 0 && m.expert_ffn_dim > 0, "dims must be positive");
  require(m.num_experts > 0, "num_experts must be positive");
  require(m.top_k > 0 && m.top_k <= m.num_experts, "top_k must lie in [1, num_experts]");
  require(m.num_shared_experts >= 0, "num_shared_experts must be non-negative");
  require(m.num_dense_layers == 0 || m.dense_ffn_dim > 0, "dense_ffn_dim must be positive");
  require(m.num_heads > 0 && m.kv_lora_rank > 0 && m.v_head_dim > 0,
          "attention dims must be positive");
  require(m.qk_nope_head_dim >= 0 && m.qk_rope_head_dim >= 0 && m.q_lora_rank >= 0,
          "attention dims must be non-negative");
  require(m.vocab_size > 0, "vocab_size must be positive");
  require(m.attention == "mla", "only mla attention is modeled");
  require(m.kv_bytes_per_token > 0, "kv_bytes_per_token must be positive");
  require(m.param_bytes_total > 0, "param_bytes_total must be positive");
  require(m.dtype_bytes > 0 && m.activation_bytes > 0, "element sizes must be positive");
}

HardwareSpec HardwareSpec::h100() {
  return {"h100", 1.979e15, 3.35e12, 80e9, 700, 450e9};
}

void validate(const HardwareSpec& hw) {
  if (!(hw.peak_flops > 0 && hw.mem_bandwidth > 0 && hw.mem_capacity > 0 && hw.tdp > 0 &&
        hw.per_xpu_link_bandwidth > 0))
    fail(Errc::InvalidConfig, "hardware " + hw.name + ": all fields must be positive");
}

void validate(const ComputeCalibration& c) {
  if (!(c.eff_c > 0 && c.eff_c <= 1 && c.eff_m > 0 && c.eff_m <= 1))
    fail(Errc::InvalidConfig, "efficiency factors must lie in (0, 1]");
}

std::string_view to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::GEMM: return "gemm";
    case KernelKind::GroupedExpertGEMM: return "grouped_expert_gemm";
    case KernelKind::Attention: return "attention";
    case KernelKind::Router: return "router";
    case KernelKind::Misc: return "misc";
  }
  return "unknown";
}

std::optional<KernelKind> parse_kernel_kind(std::string_view name) {
  for (auto k : {KernelKind::GEMM, KernelKind::GroupedExpertGEMM, KernelKind::Attention,
                 KernelKind::Router, KernelKind::Misc})
    if (to_string(k) == name) return k;
  return std::nullopt;
}

ProfileTable::Key ProfileTable::key_of(const KernelShape& s) {
  return {s.kind, s.batch_tokens, std::llround(s.weight_bytes), s.context_length,
          s.query_length};
}

void ProfileTable::insert(const KernelShape& shape, double seconds) {
  if (!(seconds >= 0)) fail(Errc::InvalidArgument, "profile time must be non-negative");
  entries_[key_of(shape)] = seconds;
}

std::optional<double> ProfileTable::find(const KernelShape& shape) const {
  auto it = entries_.find(key_of(shape));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    cell.erase(0, cell.find_first_not_of(" \t\r"));
    cell.erase(cell.find_last_not_of(" \t\r") + 1);
    out.push_back(cell);
  }
  return out;
}

}  // namespace

ProfileTable ProfileTable::parse_csv(std::string_view text, HardwareSpec reference) {
  static const std::vector<std::string> header{"kind",           "batch_tokens", "weight_bytes",
                                               "context_length", "query_length", "seconds"};
  ProfileTable table(std::move(reference));
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    auto cells = split_csv(line);
    auto where = "profile line " + std::to_string(line_no) + ": ";
    if (!seen_header) {
      if (cells != header) fail(Errc::ParseError, where + "expected header " +
                                                     "kind,batch_tokens,weight_bytes,"
                                                     "context_length,query_length,seconds");
      seen_header = true;
      continue;
    }
    if (cells.size() != header.size())
      fail(Errc::ParseError, where + "expected 6 fields, got " + std::to_string(cells.size()));
    auto kind = parse_kernel_kind(cells[0]);
    if (!kind) fail(Errc::ParseError, where + "unknown kernel kind '" + cells[0] + "'");
    KernelShape s;
    s.kind = *kind;
    double seconds = 0;
    try {
      s.batch_tokens = std::stoll(cells[1]);
      s.weight_bytes = std::stod(cells[2]);
      s.context_length = std::stoll(cells[3]);
      s.query_length = std::stoll(cells[4]);
      seconds = std::stod(cells[5]);
    } catch (const std::exception&) {
      fail(Errc::ParseError, where + "malformed number");
    }
    table.insert(s, seconds);
  }
  if (!seen_header) fail(Errc::ParseError, "profile: missing header");
  return table;
}

ProfileTable ProfileTable::load_csv(const std::string& path, HardwareSpec reference) {
  std::ifstream f(path);
  if (!f) fail(Errc::InvalidConfig, "cannot open profile table " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_csv(buf.str(), std::move(reference));
}

namespace {

double compute_term(const KernelShape& s, const HardwareSpec& hw, const ComputeCalibration& cal) {
  if (s.flops <= 0) return 0;
  return s.flops * s.rate_divisor / (cal.eff_c * hw.peak_flops);
}

double memory_term(const KernelShape& s, const HardwareSpec& hw, const ComputeCalibration& cal) {
  const double bytes = s.weight_bytes + s.activation_bytes + s.kv_bytes;
  if (bytes <= 0) return 0;
  return bytes / (cal.eff_m * hw.mem_bandwidth);
}

}  // namespace

double roofline_time(const KernelShape& s, const HardwareSpec& hw, const ComputeCalibration& cal) {
  if (s.flops < 0 || s.weight_bytes < 0 || s.activation_bytes < 0 || s.kv_bytes < 0)
    fail(Errc::InvalidArgument, "kernel flops and bytes must be non-negative");
  return std::max(compute_term(s, hw, cal), memory_term(s, hw, cal));
}

bool is_memory_bound(const KernelShape& s, const HardwareSpec& hw, const ComputeCalibration& cal) {
  return memory_term(s, hw, cal) >= compute_term(s, hw, cal);
}

double kernel_time(const KernelShape& s, const HardwareSpec& hw, const ComputeCalibration& cal,
                   const ProfileTable* profile) {
  if (profile) {
    if (auto measured = profile->find(s)) {
      const double ref = roofline_time(s, profile->reference(), cal);
      const double now = roofline_time(s, hw, cal);
      if (ref <= 0 || now <= 0) return *measured;
      return *measured * (now / ref);
    }
    if (!cal.allow_fallback)
      fail(Errc::UnresolvedKernel, "no profile entry for " + std::string(to_string(s.kind)) +
                                       " kernel with " + std::to_string(s.batch_tokens) +
                                       " tokens");
  }
  return roofline_time(s, hw, cal);
}

void check_parallelism(const ModelSpec& m, const Parallelism& p) {
  if (p.ep < 1 || p.tp < 1) fail(Errc::InvalidConfig, "EP and TP must be positive");
  if (m.num_experts % p.ep != 0)
    fail(Errc::InvalidConfig, std::to_string(m.num_experts) + " experts do not split over EP=" +
                                  std::to_string(p.ep));
  if (m.num_heads % p.tp != 0)
    fail(Errc::InvalidConfig, std::to_string(m.num_heads) + " heads do not split over TP=" +
                                  std::to_string(p.tp));
}

namespace {

LayerOp gemm(std::string id, KernelKind kind, double tokens, double params, double flops_per_token,
             const ModelSpec& m) {
  LayerOp op;
  op.id = std::move(id);
  op.shape.kind = kind;
  op.shape.batch_tokens = static_cast<std::int64_t>(tokens);
  op.shape.weight_bytes = params * m.dtype_bytes;
  op.shape.flops = 2.0 * tokens * flops_per_token;
  op.shape.activation_bytes = 2.0 * tokens * m.hidden_dim * m.activation_bytes;
  return op;
}

}  // namespace

// A TP group of t XPUs serves t * batch_per_xpu requests, so per-XPU token
// counts equal batch_per_xpu * query_length while sharded weights shrink by t.
std::vector<LayerOp> layer_kernels(const ModelSpec& m, const Parallelism& p,
                                   std::int64_t batch_per_xpu, std::int64_t ctx, bool moe,
                                   std::int64_t query_length) {
  check_parallelism(m, p);
  if (batch_per_xpu < 0 || ctx < 0 || query_length < 1)
    fail(Errc::InvalidArgument, "batch and context must be non-negative");
  std::vector<LayerOp> ops;
  if (batch_per_xpu == 0) return ops;
  const double tokens = double(batch_per_xpu) * query_length;
  const double attn = m.attention_params();

  ops.push_back(gemm("attn_proj", KernelKind::GEMM, tokens, attn / p.tp, attn, m));

  LayerOp core;
  core.id = "attn_core";
  core.shape.kind = KernelKind::Attention;
  core.shape.batch_tokens = static_cast<std::int64_t>(tokens);
  core.shape.context_length = ctx;
  core.shape.query_length = query_length;
  core.shape.kv_bytes = double(batch_per_xpu) * ctx * m.kv_bytes_per_token / m.num_layers;
  core.shape.flops = tokens * m.num_heads * 2.0 *
                     (2.0 * m.kv_lora_rank + m.qk_rope_head_dim) * double(ctx);
  core.shape.activation_bytes = 2.0 * tokens * m.num_heads * m.v_head_dim * m.activation_bytes /
                                p.tp;
  core.shape.rate_divisor = 2;
  ops.push_back(core);

  if (moe) {
    ops.push_back(gemm("router", KernelKind::Router, tokens, m.router_params(),
                       m.router_params(), m));
    if (m.num_shared_experts > 0) {
      const double shared = m.num_shared_experts * m.expert_params();
      ops.push_back(gemm("shared_expert", KernelKind::GEMM, tokens, shared, shared, m));
    }
    const double routed = tokens * m.top_k;
    auto experts = gemm("experts", KernelKind::GroupedExpertGEMM, routed,
                        double(m.num_experts / p.ep) * m.expert_params(), m.expert_params(), m);
    ops.push_back(experts);
  } else {
    ops.push_back(gemm("ffn", KernelKind::GEMM, tokens, m.dense_ffn_params() / p.tp,
                       m.dense_ffn_params(), m));
  }
  return ops;
}

std::vector<LayerOp> head_kernels(const ModelSpec& m, const Parallelism& p,
                                  std::int64_t batch_per_xpu, std::int64_t query_length) {
  check_parallelism(m, p);
  std::vector<LayerOp> ops;
  if (batch_per_xpu <= 0) return ops;
  const double tokens = double(batch_per_xpu) * query_length;
  ops.push_back(gemm("lm_head", KernelKind::GEMM, tokens, m.vocab_params() / p.tp,
                     m.vocab_params(), m));
  return ops;
}

std::vector<LayerOp> layer_compute_times(const ModelSpec& m, const Parallelism& p,
                                         std::int64_t batch_per_xpu, std::int64_t ctx,
                                         const HardwareSpec& hw, const ComputeCalibration& cal,
                                         const ProfileTable* profile,
                                         std::int64_t query_length) {
  std::vector<LayerOp> out;
  if (batch_per_xpu == 0) {
    check_parallelism(m, p);
    return out;
  }
  auto dense = layer_kernels(m, p, batch_per_xpu, ctx, false, query_length);
  auto moe = layer_kernels(m, p, batch_per_xpu, ctx, true, query_length);
  for (auto* group : {&dense, &moe})
    for (auto& op : *group) op.seconds = kernel_time(op.shape, hw, cal, profile);
  for (int layer = 0; layer < m.num_layers; ++layer) {
    const auto& tmpl = layer < m.num_dense_layers ? dense : moe;
    for (const auto& op : tmpl) {
      LayerOp copy = op;
      copy.id = "L" + std::to_string(layer) + "." + op.id;
      out.push_back(std::move(copy));
    }
  }
  for (auto op : head_kernels(m, p, batch_per_xpu, query_length)) {
    op.seconds = kernel_time(op.shape, hw, cal, profile);
    op.id = "head." + op.id;
    out.push_back(std::move(op));
  }
  return out;
}

double shard_bytes(const ModelSpec& m, const Parallelism& p) {
  check_parallelism(m, p);
  const double moe_layers = m.num_moe_layers();
  const double routed = moe_layers * m.num_experts * m.expert_params();
  const double attention = double(m.num_layers) * m.attention_params();
  const double dense = double(m.num_dense_layers) * m.dense_ffn_params();
  const double shared = moe_layers * m.num_shared_experts * m.expert_params();
  const double router = moe_layers * m.router_params();
  const double embedding = m.vocab_params();
  const double head = m.vocab_params();
  const double modeled = routed + attention + dense + shared + router + embedding + head;
  const double rest = std::max(0.0, m.param_bytes_total / m.dtype_bytes - modeled);
  const double per_xpu = routed / p.ep + (attention + dense + head) / p.tp + shared + router +
                         embedding + rest;
  return per_xpu * m.dtype_bytes;
}

double kv_bytes(const ModelSpec& m, std::int64_t batch_per_xpu, std::int64_t ctx) {
  return double(batch_per_xpu) * double(ctx) * m.kv_bytes_per_token;
}

double memory_footprint(const ModelSpec& m, const Parallelism& p, std::int64_t batch_per_xpu,
                        std::int64_t ctx) {
  return shard_bytes(m, p) + kv_bytes(m, batch_per_xpu, ctx);
}

std::int64_t max_batch_for_memory(const ModelSpec& m, const Parallelism& p, std::int64_t ctx,
                                  double capacity) {
  const double room = capacity - shard_bytes(m, p);
  if (room < 0) return 0;
  const double per_request = double(ctx) * m.kv_bytes_per_token;
  if (per_request <= 0) fail(Errc::InvalidArgument, "context length must be positive");
  auto b = static_cast<std::int64_t>(std::floor(room / per_request));
  while (b > 0 && memory_footprint(m, p, b, ctx) > capacity) --b;
  while (memory_footprint(m, p, b + 1, ctx) <= capacity) ++b;
  return b;
}

std::optional<GenerationScaling> generation_by_name(std::string_view name) {
  if (name == "hopper" || name == "h100") return GenerationScaling::hopper();
  if (name == "blackwell" || name == "b200") return GenerationScaling::blackwell();
  if (name == "rubin") return GenerationScaling::rubin();
  return std::nullopt;
}

HardwareSpec apply_generation_scaling(const HardwareSpec& hw, const GenerationScaling& gen) {
  if (!(gen.flops > 0 && gen.capacity > 0 && gen.mem_bandwidth > 0 && gen.link_bandwidth > 0))
    fail(Errc::InvalidArgument, "generation factors must be positive");
  HardwareSpec out = hw;
  out.peak_flops *= gen.flops;
  out.mem_capacity *= gen.capacity;
  out.mem_bandwidth *= gen.mem_bandwidth;
  out.per_xpu_link_bandwidth *= gen.link_bandwidth;
  if (gen.name != "hopper" && gen.name != "custom") out.name = hw.name + "->" + gen.name;
  return out;
}

}  // namespace moenet
