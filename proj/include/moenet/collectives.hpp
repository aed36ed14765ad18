#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "moenet/topology.hpp"

namespace moenet {

// Extended alpha-beta constants: one-time latency, per-round latency,
// per-destination serialization, and achievable fraction of link bandwidth.
struct AlphaBetaParams {
  double alpha0 = 0;            // s
  double alpha_r = 0;           // s
  double alpha_d = 0;           // s
  double link_utilization = 1;  // (0, 1]

  // NVLink-class transport (scale-up, torus, full-mesh links).
  static AlphaBetaParams intra_node();
  // NIC-class transport (scale-out).
  static AlphaBetaParams inter_node();

  // Scales alpha_r and alpha_d by `factor` in [0, 1]; alpha0 is kept.
  [[nodiscard]] AlphaBetaParams with_alpha_scale(double factor) const;
};

void validate(const AlphaBetaParams& p);

enum class CollectiveKind { AllReduce, AllToAll };

std::string_view to_string(CollectiveKind kind);

// Coefficients of alpha_r, alpha_d and m*beta for one algorithm at one size.
struct AlgorithmCost {
  std::string name;
  CollectiveKind op = CollectiveKind::AllToAll;
  TopologyKind topology = TopologyKind::ScaleUp;
  double n_rounds = 0;
  double n_destinations = 0;
  double beta_coeff = 0;
};

// The participants of one collective and where they sit.
struct CollectiveDomain {
  TopologyKind kind = TopologyKind::ScaleUp;
  int participants = 1;
  Dims3 shape;           // switchless: the group's sub-box
  std::array<bool, 3> wrap{true, true, true};  // torus: the sub-box spans the whole ring
  int full_degree = 1;   // switchless: links per XPU in the whole cluster
  int local_domain = 1;  // scale-out: XPUs sharing a scale-up domain

  // Domain spanning a whole cluster of the given kind and shape.
  static CollectiveDomain whole(TopologyKind kind, int n, const Dims3& dims);
};

// Seconds per byte at `bandwidth` B/s after the utilization discount.
[[nodiscard]] double beta_of(const AlphaBetaParams& params, double bandwidth);

[[nodiscard]] std::vector<AlgorithmCost> algorithm_catalog(const CollectiveDomain& domain,
                                                           CollectiveKind op);
[[nodiscard]] std::vector<AlgorithmCost> algorithm_catalog(TopologyKind kind, CollectiveKind op,
                                                           int n, const Dims3& dims = {});

// T = alpha0 + rounds*alpha_r + destinations*alpha_d + k_beta * m * beta.
// `m` is the per-XPU payload and `bandwidth` the per-XPU aggregate.
[[nodiscard]] double collective_time(const AlgorithmCost& alg, double m,
                                     const AlphaBetaParams& params, double bandwidth);

struct CollectiveChoice {
  std::string algorithm;
  double seconds = 0;
};

[[nodiscard]] CollectiveChoice best_collective_time(const CollectiveDomain& domain,
                                                    CollectiveKind op, double m,
                                                    const AlphaBetaParams& params,
                                                    double bandwidth);
[[nodiscard]] CollectiveChoice best_collective_time(TopologyKind kind, CollectiveKind op, int n,
                                                    const Dims3& dims, double m,
                                                    const AlphaBetaParams& params,
                                                    double bandwidth);

// Resolves collective times for groups inside one cluster: picks the
// parameter class, the group's placement and the fastest algorithm.
class CommModel {
 public:
  CommModel(ClusterNetwork net, AlphaBetaParams intra, AlphaBetaParams inter,
            double alpha_scale = 1.0);

  [[nodiscard]] bool supports_group(int participants) const;
  [[nodiscard]] CollectiveChoice time(CollectiveKind op, int participants, double bytes) const;

  [[nodiscard]] const ClusterNetwork& network() const { return net_; }
  [[nodiscard]] const AlphaBetaParams& intra() const { return intra_; }
  [[nodiscard]] const AlphaBetaParams& inter() const { return inter_; }

 private:
  ClusterNetwork net_;
  AlphaBetaParams intra_;
  AlphaBetaParams inter_;
};

}  // namespace moenet
