#include "otpw/network_simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "otpw/error.hpp"

namespace otpw {

TransportSimplex::TransportSimplex(std::span<const double> supply, std::span<const double> demand,
                                   std::span<const double> cost)
    : n_(supply.size()), m_(demand.size()) {
  if (n_ == 0 || m_ == 0) throw Error(ErrorCode::InvalidArgument, "transport problem needs atoms on both sides");
  if (cost.size() != n_ * m_) throw Error(ErrorCode::DimensionMismatch, "cost matrix shape mismatch");
  nodes_ = n_ + m_ + 1;
  root_ = n_ + m_;
  arcs_ = n_ * m_ + n_ + m_;

  double max_cost = 0.0;
  for (double c : cost) {
    if (!std::isfinite(c) || c < 0.0) throw Error(ErrorCode::InvalidArgument, "costs must be finite and >= 0");
    max_cost = std::max(max_cost, c);
  }
  // Any artificial flow source -> root -> sink can be rerouted along the
  // direct arc, which is cheaper as soon as 2 * artificial > max_cost. A
  // small constant keeps the potentials on the scale of the real costs.
  const double artificial = max_cost + 1.0;
  cost_.assign(cost.begin(), cost.end());
  cost_.resize(arcs_, artificial);
  epsilon_ = 1e-12 * artificial;

  flow_.assign(arcs_, 0.0);
  in_tree_.assign(arcs_, 0);
  parent_.assign(nodes_, -1);
  pred_.assign(nodes_, 0);
  up_.assign(nodes_, 0);
  depth_.assign(nodes_, 0);
  pi_.assign(nodes_, 0.0);

  // Initial tree: every node hangs off the root through its artificial arc,
  // oriented along its supply so all tree flows are positive.
  for (std::size_t u = 0; u < n_ + m_; ++u) {
    const std::size_t arc = n_ * m_ + u;
    in_tree_[arc] = 1;
    parent_[u] = static_cast<std::int64_t>(root_);
    pred_[u] = arc;
    depth_[u] = 1;
    if (u < n_) {
      if (!(supply[u] >= 0.0)) throw Error(ErrorCode::InvalidArgument, "supplies must be nonnegative");
      up_[u] = 1;
      flow_[arc] = supply[u];
      pi_[u] = -artificial;
    } else {
      if (!(demand[u - n_] >= 0.0)) throw Error(ErrorCode::InvalidArgument, "demands must be nonnegative");
      up_[u] = 0;
      flow_[arc] = demand[u - n_];
      pi_[u] = artificial;
    }
  }
  block_size_ = std::max<std::size_t>(16, static_cast<std::size_t>(std::sqrt(static_cast<double>(arcs_))));
}

std::size_t TransportSimplex::arc_source(std::size_t arc) const {
  if (arc < n_ * m_) return arc / m_;
  const std::size_t u = arc - n_ * m_;
  return u < n_ ? u : root_;
}

std::size_t TransportSimplex::arc_target(std::size_t arc) const {
  if (arc < n_ * m_) return n_ + arc % m_;
  const std::size_t u = arc - n_ * m_;
  return u < n_ ? root_ : u;
}

double TransportSimplex::reduced_cost(std::size_t arc) const {
  return cost_[arc] + pi_[arc_source(arc)] - pi_[arc_target(arc)];
}

bool TransportSimplex::find_entering(std::size_t& arc) {
  double best = -epsilon_;
  std::size_t best_arc = arcs_;
  std::size_t scanned_in_block = 0;
  for (std::size_t count = 0; count < arcs_; ++count) {
    const std::size_t e = next_arc_;
    next_arc_ = next_arc_ + 1 == arcs_ ? 0 : next_arc_ + 1;
    if (!in_tree_[e]) {
      const double rc = reduced_cost(e);
      if (rc < best) {
        best = rc;
        best_arc = e;
      }
    }
    if (++scanned_in_block == block_size_) {
      if (best_arc != arcs_) break;
      scanned_in_block = 0;
    }
  }
  if (best_arc == arcs_) return false;
  arc = best_arc;
  return true;
}

void TransportSimplex::pivot(std::size_t entering) {
  const std::size_t first = arc_source(entering);
  const std::size_t second = arc_target(entering);

  // Common ancestor of the entering arc's endpoints.
  std::size_t a = first, b = second;
  while (depth_[a] > depth_[b]) a = static_cast<std::size_t>(parent_[a]);
  while (depth_[b] > depth_[a]) b = static_cast<std::size_t>(parent_[b]);
  while (a != b) {
    a = static_cast<std::size_t>(parent_[a]);
    b = static_cast<std::size_t>(parent_[b]);
  }
  const std::size_t join = a;

  // Flow circulates first -> second -> join -> first. Only arcs whose flow
  // decreases can block. Ties: strict on the first side, last-found on the
  // second side, which keeps the tree strongly feasible.
  double delta = std::numeric_limits<double>::infinity();
  std::size_t out_node = nodes_;
  for (std::size_t u = first; u != join; u = static_cast<std::size_t>(parent_[u])) {
    if (up_[u] && flow_[pred_[u]] < delta) {
      delta = flow_[pred_[u]];
      out_node = u;
    }
  }
  for (std::size_t u = second; u != join; u = static_cast<std::size_t>(parent_[u])) {
    if (!up_[u] && flow_[pred_[u]] <= delta) {
      delta = flow_[pred_[u]];
      out_node = u;
    }
  }
  if (out_node == nodes_) throw Error(ErrorCode::Infeasible, "unbounded transport cycle");
  delta = std::max(delta, 0.0);

  if (delta > 0.0) {
    flow_[entering] += delta;
    for (std::size_t u = first; u != join; u = static_cast<std::size_t>(parent_[u])) {
      double& f = flow_[pred_[u]];
      f = up_[u] ? std::max(f - delta, 0.0) : f + delta;
    }
    for (std::size_t u = second; u != join; u = static_cast<std::size_t>(parent_[u])) {
      double& f = flow_[pred_[u]];
      f = up_[u] ? f + delta : std::max(f - delta, 0.0);
    }
  }
  const std::size_t leaving = pred_[out_node];
  flow_[leaving] = 0.0;
  in_tree_[leaving] = 0;
  in_tree_[entering] = 1;
  pred_[out_node] = entering;  // placeholder so the arc set stays node-indexed
  rebuild_tree();
}

void TransportSimplex::rebuild_tree() {
  // Tree arcs are exactly pred_[u] for u != root after the swap above.
  adj_offset_.assign(nodes_ + 1, 0);
  for (std::size_t u = 0; u < nodes_; ++u) {
    if (u == root_) continue;
    const std::size_t e = pred_[u];
    ++adj_offset_[arc_source(e) + 1];
    ++adj_offset_[arc_target(e) + 1];
  }
  for (std::size_t u = 0; u < nodes_; ++u) adj_offset_[u + 1] += adj_offset_[u];
  adj_arcs_.resize(adj_offset_[nodes_]);
  std::vector<std::size_t> fill(adj_offset_.begin(), adj_offset_.end() - 1);
  for (std::size_t u = 0; u < nodes_; ++u) {
    if (u == root_) continue;
    const std::size_t e = pred_[u];
    adj_arcs_[fill[arc_source(e)]++] = e;
    adj_arcs_[fill[arc_target(e)]++] = e;
  }

  queue_.clear();
  queue_.push_back(root_);
  parent_[root_] = -1;
  depth_[root_] = 0;
  pi_[root_] = 0.0;
  std::vector<std::uint8_t> seen(nodes_, 0);
  seen[root_] = 1;
  for (std::size_t head = 0; head < queue_.size(); ++head) {
    const std::size_t u = queue_[head];
    for (std::size_t k = adj_offset_[u]; k < adj_offset_[u + 1]; ++k) {
      const std::size_t e = adj_arcs_[k];
      const std::size_t s = arc_source(e), t = arc_target(e);
      const std::size_t v = s == u ? t : s;
      if (seen[v]) continue;
      seen[v] = 1;
      parent_[v] = static_cast<std::int64_t>(u);
      pred_[v] = e;
      up_[v] = s == v ? 1 : 0;
      depth_[v] = depth_[u] + 1;
      // Tree arcs have zero reduced cost.
      pi_[v] = up_[v] ? pi_[u] - cost_[e] : pi_[u] + cost_[e];
      queue_.push_back(v);
    }
  }
  if (queue_.size() != nodes_) throw Error(ErrorCode::Infeasible, "basis lost connectivity");
}

void TransportSimplex::solve(std::size_t max_pivots) {
  if (max_pivots == 0) max_pivots = 50 * arcs_ + 10000;
  std::size_t entering = 0;
  while (find_entering(entering)) {
    if (++pivots_ > max_pivots) throw Error(ErrorCode::NoConvergence, "network simplex pivot cap reached");
    pivot(entering);
  }
  double total = 0.0, artificial = 0.0;
  for (std::size_t e = 0; e < n_ * m_; ++e) total += flow_[e];
  for (std::size_t e = n_ * m_; e < arcs_; ++e) artificial += flow_[e];
  if (artificial > 1e-10 * std::max(1.0, total)) {
    throw Error(ErrorCode::Infeasible, "supplies and demands do not balance");
  }
}

double TransportSimplex::objective() const {
  double s = 0.0;
  for (std::size_t e = 0; e < n_ * m_; ++e) s += flow_[e] * cost_[e];
  return s;
}

std::vector<PlanEntry> TransportSimplex::nonzero_flows() const {
  std::vector<PlanEntry> out;
  for (std::size_t e = 0; e < n_ * m_; ++e) {
    if (flow_[e] > 0.0) out.push_back({e / m_, e % m_, flow_[e]});
  }
  return out;
}

double TransportSimplex::min_reduced_cost() const {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t e = 0; e < n_ * m_; ++e) best = std::min(best, reduced_cost(e));
  return best;
}

}  // namespace otpw
