#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace otpw {

struct PlanEntry {
  std::size_t source;
  std::size_t target;
  double weight;
};

/// Primal network simplex for the balanced transportation problem
///   min sum c_ij g_ij  s.t.  sum_j g_ij = supply_i, sum_i g_ij = demand_j, g >= 0
/// on the complete bipartite graph. Artificial root arcs with a large cost
/// give the initial strongly feasible tree; pricing is block search over
/// the arc list and the leaving arc follows the strongly feasible rule,
/// which rules out cycling on degenerate pivots.
class TransportSimplex {
 public:
  TransportSimplex(std::span<const double> supply, std::span<const double> demand,
                   std::span<const double> cost);

  /// Runs to optimality. Throws Error{NoConvergence} past `max_pivots`
  /// (0 picks a cap proportional to the arc count) and Error{Infeasible}
  /// if artificial arcs still carry flow at the optimum.
  void solve(std::size_t max_pivots = 0);

  double objective() const;
  std::size_t pivots() const noexcept { return pivots_; }
  double flow(std::size_t i, std::size_t j) const { return flow_[i * m_ + j]; }

  /// Strictly positive flows on real arcs.
  std::vector<PlanEntry> nonzero_flows() const;

  /// Smallest reduced cost over real arcs; >= -tolerance at the optimum.
  double min_reduced_cost() const;

 private:
  std::size_t arc_source(std::size_t arc) const;
  std::size_t arc_target(std::size_t arc) const;
  double reduced_cost(std::size_t arc) const;
  bool find_entering(std::size_t& arc);
  void pivot(std::size_t entering);
  void rebuild_tree();

  std::size_t n_, m_, nodes_, arcs_, root_;
  std::vector<double> cost_;
  std::vector<double> flow_;
  std::vector<std::uint8_t> in_tree_;
  double epsilon_ = 0.0;

  std::vector<std::int64_t> parent_;
  std::vector<std::size_t> pred_;
  std::vector<std::uint8_t> up_;  // pred arc points from the node to its parent
  std::vector<std::size_t> depth_;
  std::vector<double> pi_;

  std::size_t block_size_ = 0;
  std::size_t next_arc_ = 0;
  std::size_t pivots_ = 0;

  // Scratch for rebuild_tree.
  std::vector<std::size_t> adj_offset_, adj_arcs_, queue_;
};

}  // namespace otpw
