#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

namespace moenet {

// MoE decoder with MLA attention. Parameter counts are in elements, sizes
// in bytes.
struct ModelSpec {
  std::string name = "model";
  int num_layers = 0;
  int num_dense_layers = 0;  // leading layers with a dense FFN instead of experts
  int hidden_dim = 0;
  int num_experts = 0;
  int top_k = 0;
  int expert_ffn_dim = 0;
  int num_shared_experts = 0;
  int dense_ffn_dim = 0;
  int num_heads = 0;
  int q_lora_rank = 0;
  int kv_lora_rank = 0;
  int qk_nope_head_dim = 0;
  int qk_rope_head_dim = 0;
  int v_head_dim = 0;
  int vocab_size = 0;
  std::string attention = "mla";
  double kv_bytes_per_token = 0;
  double param_bytes_total = 0;
  double dtype_bytes = 1;       // weights and A2A payload
  double activation_bytes = 2;  // activations and AllReduce payload

  [[nodiscard]] int num_moe_layers() const { return num_layers - num_dense_layers; }
  [[nodiscard]] double attention_params() const;  // per layer
  [[nodiscard]] double expert_params() const;     // one expert, one layer
  [[nodiscard]] double dense_ffn_params() const;  // one dense layer
  [[nodiscard]] double router_params() const { return double(hidden_dim) * num_experts; }
  [[nodiscard]] double vocab_params() const { return double(vocab_size) * hidden_dim; }
};

void validate(const ModelSpec& m);

struct HardwareSpec {
  std::string name = "xpu";
  double peak_flops = 0;    // FLOP/s at the serving dtype
  double mem_bandwidth = 0;  // B/s
  double mem_capacity = 0;   // B
  double tdp = 0;            // W
  double per_xpu_link_bandwidth = 0;  // B/s

  static HardwareSpec h100();
};

void validate(const HardwareSpec& hw);

struct ComputeCalibration {
  double eff_c = 0.5;
  double eff_m = 0.7;
  bool allow_fallback = true;
};

void validate(const ComputeCalibration& c);

enum class KernelKind { GEMM, GroupedExpertGEMM, Attention, Router, Misc };

std::string_view to_string(KernelKind kind);
std::optional<KernelKind> parse_kernel_kind(std::string_view name);

struct KernelShape {
  KernelKind kind = KernelKind::GEMM;
  std::int64_t batch_tokens = 0;
  double weight_bytes = 0;
  double flops = 0;
  double activation_bytes = 0;
  double kv_bytes = 0;          // KV cache read, attention only
  std::int64_t context_length = 0;
  std::int64_t query_length = 1;
  double rate_divisor = 1;      // runs at peak_flops / rate_divisor
};

// Measured kernel times keyed on exact shape. Times were taken on
// `reference`; lookups for other hardware are scaled by the roofline ratio.
class ProfileTable {
 public:
  using Key = std::tuple<KernelKind, std::int64_t, std::int64_t, std::int64_t, std::int64_t>;

  explicit ProfileTable(HardwareSpec reference) : reference_(std::move(reference)) {}

  // CSV columns: kind,batch_tokens,weight_bytes,context_length,query_length,seconds
  static ProfileTable load_csv(const std::string& path, HardwareSpec reference);
  static ProfileTable parse_csv(std::string_view text, HardwareSpec reference);

  static Key key_of(const KernelShape& s);

  void insert(const KernelShape& shape, double seconds);
  [[nodiscard]] std::optional<double> find(const KernelShape& shape) const;
  [[nodiscard]] const HardwareSpec& reference() const { return reference_; }
  [[nodiscard]] std::size_t size() const { return entries_.size(); }

 private:
  HardwareSpec reference_;
  std::map<Key, double> entries_;
};

[[nodiscard]] double roofline_time(const KernelShape& s, const HardwareSpec& hw,
                                   const ComputeCalibration& cal);
[[nodiscard]] bool is_memory_bound(const KernelShape& s, const HardwareSpec& hw,
                                   const ComputeCalibration& cal);

[[nodiscard]] double kernel_time(const KernelShape& s, const HardwareSpec& hw,
                                 const ComputeCalibration& cal,
                                 const ProfileTable* profile = nullptr);

struct Parallelism {
  int ep = 1;
  int tp = 1;
};

// Throws InvalidConfig unless experts split evenly over ep and heads over tp.
void check_parallelism(const ModelSpec& m, const Parallelism& p);

struct LayerOp {
  std::string id;
  KernelShape shape;
  double seconds = 0;
};

// Kernels of one decoder layer at `batch_per_xpu` requests per XPU, each
// issuing `query_length` tokens. `moe` selects the expert or dense FFN form.
[[nodiscard]] std::vector<LayerOp> layer_kernels(const ModelSpec& m, const Parallelism& p,
                                                 std::int64_t batch_per_xpu, std::int64_t ctx,
                                                 bool moe, std::int64_t query_length = 1);
[[nodiscard]] std::vector<LayerOp> head_kernels(const ModelSpec& m, const Parallelism& p,
                                                std::int64_t batch_per_xpu,
                                                std::int64_t query_length = 1);

// Timed kernels of the whole model in execution order, ids "L<i>.<op>" and
// "head.<op>". Empty when batch_per_xpu is 0.
[[nodiscard]] std::vector<LayerOp> layer_compute_times(
    const ModelSpec& m, const Parallelism& p, std::int64_t batch_per_xpu, std::int64_t ctx,
    const HardwareSpec& hw, const ComputeCalibration& cal, const ProfileTable* profile = nullptr,
    std::int64_t query_length = 1);

[[nodiscard]] double shard_bytes(const ModelSpec& m, const Parallelism& p);
[[nodiscard]] double kv_bytes(const ModelSpec& m, std::int64_t batch_per_xpu, std::int64_t ctx);
[[nodiscard]] double memory_footprint(const ModelSpec& m, const Parallelism& p,
                                      std::int64_t batch_per_xpu, std::int64_t ctx);
// Largest batch whose footprint fits `capacity`; 0 when the shard alone overflows.
[[nodiscard]] std::int64_t max_batch_for_memory(const ModelSpec& m, const Parallelism& p,
                                                std::int64_t ctx, double capacity);

struct GenerationScaling {
  std::string name = "custom";
  double flops = 1;
  double capacity = 1;
  double mem_bandwidth = 1;
  double link_bandwidth = 1;

  static GenerationScaling hopper() { return {"hopper", 1, 1, 1, 1}; }
  static GenerationScaling blackwell() { return {"blackwell", 2.56, 2.33, 2.39, 2.00}; }
  static GenerationScaling rubin() { return {"rubin", 4.49, 3.60, 6.57, 4.00}; }
};

std::optional<GenerationScaling> generation_by_name(std::string_view name);

[[nodiscard]] HardwareSpec apply_generation_scaling(const HardwareSpec& hw,
                                                    const GenerationScaling& gen);

}  // namespace moenet
