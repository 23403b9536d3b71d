#pragma once

#include <cstddef>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "otpw/measure.hpp"
#include "otpw/network_simplex.hpp"

namespace otpw {

enum class SolverKind { Auto, Exact, Entropic, Quantile1D };

std::string_view to_string(SolverKind kind);
/// Accepts "auto", "exact", "entropic" and "1d". Throws Error{ConfigInvalid}.
SolverKind parse_solver(std::string_view name);

/// Coupling between two discrete measures, stored as its nonzero entries.
class TransportPlan {
 public:
  TransportPlan(DiscreteMeasure source, DiscreteMeasure target, std::vector<PlanEntry> entries,
                double exponent);

  const DiscreteMeasure& source() const noexcept { return source_; }
  const DiscreteMeasure& target() const noexcept { return target_; }
  const std::vector<PlanEntry>& entries() const noexcept { return entries_; }
  double exponent() const noexcept { return exponent_; }

  /// (sum gamma_ij |x_i - y_j|^m)^{1/m}
  double distance() const;

  /// Largest deviation of a row or column sum from its marginal weight.
  double marginal_error() const;

 private:
  DiscreteMeasure source_;
  DiscreteMeasure target_;
  std::vector<PlanEntry> entries_;
  double exponent_;
};

/// sum gamma_ij |x_i - y_j|^m
double plan_cost(const TransportPlan& plan, double m);

/// Dense row-major |x_i - y_j|^m.
std::vector<double> cost_matrix(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double m);

struct TransportResult {
  double distance = 0.0;
  double cost = 0.0;        ///< cost of the returned plan
  double cost_lower = 0.0;  ///< certified lower bound on the optimal cost
  SolverKind solver = SolverKind::Exact;
  std::size_t iterations = 0;
  TransportPlan plan;

  /// distance - cost_lower^{1/m}; zero for exact solves up to roundoff.
  double distance_error() const;
};

struct EntropicOptions {
  double epsilon = 0.0;  ///< target regularization; <= 0 picks 1e-3 * median cost
  std::size_t rounds = 200000;
  std::size_t anneal_steps = 10;
  double tolerance = 1e-6;
};

struct TransportOptions {
  SolverKind solver = SolverKind::Auto;
  std::size_t pair_cap = 250000;
  EntropicOptions entropic;
};

/// Exact in 1D: sweep of the merged quantile breakpoints.
/// Throws Error{DimensionMismatch} unless both measures are 1D.
double wasserstein_1d(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double m);
TransportResult monotone_transport_1d(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double m);

/// Network simplex on the full bipartite graph. Throws Error{TooLarge} above
/// `pair_cap` atom pairs and Error{Infeasible} on a mass mismatch.
TransportResult wasserstein_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double m,
                                  std::size_t pair_cap = 250000);

/// Log-domain Sinkhorn with a geometric epsilon schedule and Newton steps on
/// the dual when scaling stalls, rounded to a plan
/// with exact marginals. The reported cost belongs to that plan, so it is an
/// upper bound; cost_lower comes from a feasible dual. Throws
/// Error{NoConvergence} if the marginal residual stays above tolerance.
TransportResult wasserstein_entropic(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double m,
                                     const EntropicOptions& options = {});

/// Auto: 1D -> quantile, pairs under cap -> exact, otherwise entropic.
TransportResult wasserstein(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double m,
                            const TransportOptions& options = {});

/// "i,j,weight" rows with a header line.
void write_plan_csv(std::ostream& out, const TransportPlan& plan);

}  // namespace otpw
