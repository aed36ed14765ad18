#include "moenet/collectives.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "moenet/error.hpp"

namespace moenet {

AlphaBetaParams AlphaBetaParams::intra_node() {
  return {5.874e-6, 0.809e-6, 0.323e-6, 0.717};
}

AlphaBetaParams AlphaBetaParams::inter_node() {
  return {26.508e-6, 1.358e-6, 0.340e-6, 0.843};
}

AlphaBetaParams AlphaBetaParams::with_alpha_scale(double factor) const {
  if (!(factor >= 0.0 && factor <= 1.0))
    fail(Errc::InvalidArgument, "alpha scale must lie in [0, 1]");
  AlphaBetaParams p = *this;
  p.alpha_r *= factor;
  p.alpha_d *= factor;
  return p;
}

void validate(const AlphaBetaParams& p) {
  if (p.alpha0 < 0 || p.alpha_r < 0 || p.alpha_d < 0)
    fail(Errc::InvalidArgument, "alpha terms must be non-negative");
  if (!(p.link_utilization > 0 && p.link_utilization <= 1))
    fail(Errc::InvalidArgument, "link utilization must lie in (0, 1]");
}

std::string_view to_string(CollectiveKind kind) {
  return kind == CollectiveKind::AllReduce ? "allreduce" : "alltoall";
}

CollectiveDomain CollectiveDomain::whole(TopologyKind kind, int n, const Dims3& dims) {
  CollectiveDomain d;
  d.kind = kind;
  d.participants = n;
  d.shape = dims;
  d.full_degree = link_degree(kind, dims);
  return d;
}

double beta_of(const AlphaBetaParams& params, double bandwidth) {
  if (!(bandwidth > 0)) fail(Errc::InvalidArgument, "bandwidth must be positive");
  return 1.0 / (params.link_utilization * bandwidth);
}

namespace {

double ceil_log2(int n) {
  int rounds = 0;
  for (long long span = 1; span < n; span *= 2) ++rounds;
  return rounds;
}

AlgorithmCost make(std::string name, CollectiveKind op, TopologyKind topo, double rounds,
                   double dests, double beta) {
  return {std::move(name), op, topo, rounds, dests, beta};
}

// Busiest directed link of one torus dimension under regular A2A, as a
// multiple of the per-XPU payload. A closed ring splits each node's hop
// volume over two links; an open line is worst at its middle cut.
double torus_dim_load(int s, bool wrap) {
  if (s <= 1) return 0;
  if (wrap) return ring_average_hops(s) / 2.0;
  return double(s / 2) * double(s - s / 2) / s;
}

// Bandwidth term shared by every algorithm that moves the regular A2A
// traffic matrix over a torus with shortest-direction dimension-order
// routing: dim phases run concurrently on links of bandwidth/full_degree,
// so the busiest dim sets the coefficient.
double torus_a2a_beta(const CollectiveDomain& d) {
  double worst = 0;
  for (int i = 0; i < 3; ++i) worst = std::max(worst, torus_dim_load(d.shape.d[i], d.wrap[i]));
  return worst * d.full_degree;
}

// Steps a half-ring (or line) shift needs to cover one dimension.
int torus_dim_rounds(int s, bool wrap) {
  if (s <= 1) return 0;
  return wrap ? std::max(1, s / 2) : s - 1;
}

// Full-mesh counterpart: the dim-i phase ships (s_i-1)/s_i of the payload
// over s_i-1 direct links, i.e. m/s_i per link at bandwidth/full_degree.
double fullmesh_a2a_beta(const CollectiveDomain& d) {
  double worst = 0;
  for (int s : d.shape.d)
    if (s > 1) worst = std::max(worst, static_cast<double>(d.full_degree) / s);
  return worst;
}

}  // namespace

std::vector<AlgorithmCost> algorithm_catalog(const CollectiveDomain& d, CollectiveKind op) {
  const int n = d.participants;
  if (n < 2) fail(Errc::CatalogEmpty, "collective needs at least two participants");
  if (is_switchless(d.kind) && d.shape.volume() != n)
    fail(Errc::InvalidArgument, "group shape " + d.shape.str() + " does not hold " +
                                    std::to_string(n) + " participants");

  const double nm1 = n - 1;
  const double lg = ceil_log2(n);
  const double bw_optimal = 2.0 * nm1 / n;
  std::vector<AlgorithmCost> out;
  const auto topo = d.kind;

  switch (d.kind) {
    case TopologyKind::ScaleUp:
    case TopologyKind::ScaleOut: {
      if (op == CollectiveKind::AllToAll) {
        // Traffic that stays inside a local scale-up domain rides the faster
        // fabric concurrently and is left out of the NIC-side coefficient.
        const int g = d.kind == TopologyKind::ScaleOut ? std::clamp(d.local_domain, 1, n) : 1;
        const double remote = static_cast<double>(n - g) / n;
        out.push_back(make("p2p", op, topo, 1, nm1, remote));
        out.push_back(make("bruck", op, topo, lg, lg, lg / 2.0));
        out.push_back(make("spread-out", op, topo, nm1, nm1, remote));
      } else {
        out.push_back(make("ring", op, topo, 2 * nm1, 2 * nm1, bw_optimal));
        out.push_back(make("recursive-doubling", op, topo, lg, lg, lg));
        out.push_back(make("rabenseifner", op, topo, 2 * lg, 2 * lg, bw_optimal));
        out.push_back(make("p2p", op, topo, 2, 2 * nm1, bw_optimal));
      }
      break;
    }
    case TopologyKind::Torus3D: {
      const double beta = torus_a2a_beta(d);
      if (op == CollectiveKind::AllToAll) {
        // Dim phases advance in lockstep on the longest ring; every round
        // talks to both neighbours in every active dim.
        const int dims = d.shape.active_dims();
        int longest = 1;
        for (int i = 0; i < 3; ++i)
          longest = std::max(longest, torus_dim_rounds(d.shape.d[i], d.wrap[i]));
        const double rounds = dims * longest;
        out.push_back(make("halfring", op, topo, rounds, 2.0 * dims * rounds, beta));
        out.push_back(make("p2p", op, topo, 1, nm1, beta));
      } else {
        out.push_back(make("ring", op, topo, 2 * nm1, 2 * nm1, bw_optimal));
        out.push_back(make("swing", op, topo, 2 * lg, 2 * lg, bw_optimal));
        out.push_back(make("p2p", op, topo, 2, 2 * nm1, 2 * beta));
      }
      break;
    }
    case TopologyKind::FullMesh3D: {
      const double beta = fullmesh_a2a_beta(d);
      if (op == CollectiveKind::AllToAll) {
        const int dims = d.shape.active_dims();
        double peers = 0;
        for (int s : d.shape.d) peers += s - 1;
        out.push_back(make("dor", op, topo, dims, dims * peers, beta));
        out.push_back(make("one-shot", op, topo, 1, nm1, beta));
      } else {
        out.push_back(make("ring", op, topo, 2 * nm1, 2 * nm1, bw_optimal));
        out.push_back(make("p2p", op, topo, 2, 2 * nm1, 2 * beta));
      }
      break;
    }
  }
  if (out.empty()) fail(Errc::CatalogEmpty, "no algorithm for this topology/op");
  return out;
}

std::vector<AlgorithmCost> algorithm_catalog(TopologyKind kind, CollectiveKind op, int n,
                                             const Dims3& dims) {
  return algorithm_catalog(CollectiveDomain::whole(kind, n, dims), op);
}

double collective_time(const AlgorithmCost& alg, double m, const AlphaBetaParams& params,
                       double bandwidth) {
  if (m < 0) fail(Errc::InvalidArgument, "message size must be non-negative");
  return params.alpha0 + alg.n_rounds * params.alpha_r + alg.n_destinations * params.alpha_d +
         alg.beta_coeff * m * beta_of(params, bandwidth);
}

CollectiveChoice best_collective_time(const CollectiveDomain& domain, CollectiveKind op, double m,
                                      const AlphaBetaParams& params, double bandwidth) {
  if (domain.participants <= 1) return {"none", 0.0};
  const auto catalog = algorithm_catalog(domain, op);
  const AlgorithmCost* best = nullptr;
  double best_t = 0;
  for (const auto& alg : catalog) {
    const double t = collective_time(alg, m, params, bandwidth);
    if (!best || t < best_t || (t == best_t && alg.name < best->name)) {
      best = &alg;
      best_t = t;
    }
  }
  return {best->name, best_t};
}

CollectiveChoice best_collective_time(TopologyKind kind, CollectiveKind op, int n,
                                      const Dims3& dims, double m, const AlphaBetaParams& params,
                                      double bandwidth) {
  if (n <= 1) return {"none", 0.0};
  return best_collective_time(CollectiveDomain::whole(kind, n, dims), op, m, params, bandwidth);
}

CommModel::CommModel(ClusterNetwork net, AlphaBetaParams intra, AlphaBetaParams inter,
                     double alpha_scale)
    : net_(std::move(net)),
      intra_(intra.with_alpha_scale(alpha_scale)),
      inter_(inter.with_alpha_scale(alpha_scale)) {
  validate(intra_);
  validate(inter_);
}

bool CommModel::supports_group(int participants) const {
  const auto& spec = net_.spec;
  if (participants < 1 || participants > spec.xpu_count) return false;
  if (spec.xpu_count % participants != 0) return false;
  if (is_switchless(spec.kind)) return embed_group(spec.dims, participants).has_value();
  return true;
}

CollectiveChoice CommModel::time(CollectiveKind op, int participants, double bytes) const {
  if (participants <= 1) return {"none", 0.0};
  if (!supports_group(participants))
    fail(Errc::InvalidConfig, "group of " + std::to_string(participants) +
                                  " XPUs cannot be placed on " + std::string(to_string(net_.spec.kind)));
  const auto& spec = net_.spec;
  CollectiveDomain d;
  d.kind = spec.kind;
  d.participants = participants;

  switch (spec.kind) {
    case TopologyKind::ScaleUp:
      return best_collective_time(d, op, bytes, intra_, spec.per_xpu_bandwidth);
    case TopologyKind::ScaleOut:
      if (spec.is_hybrid() && participants <= spec.scaleup_domain_size) {
        d.kind = TopologyKind::ScaleUp;
        return best_collective_time(d, op, bytes, intra_, spec.scaleup_domain_bandwidth);
      }
      d.local_domain = spec.is_hybrid() ? spec.scaleup_domain_size : 1;
      return best_collective_time(d, op, bytes, inter_, spec.per_xpu_bandwidth);
    case TopologyKind::Torus3D:
    case TopologyKind::FullMesh3D:
      d.shape = *embed_group(spec.dims, participants);
      for (int i = 0; i < 3; ++i) d.wrap[i] = d.shape.d[i] == spec.dims.d[i];
      d.full_degree = net_.degree;
      return best_collective_time(d, op, bytes, intra_, spec.per_xpu_bandwidth);
  }
  return {"none", 0.0};
}

}  // namespace moenet
