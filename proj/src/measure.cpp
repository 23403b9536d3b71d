#include "otpw/measure.hpp"

#include <cmath>
#include <ostream>

#include "otpw/error.hpp"
#include "otpw/format.hpp"

namespace otpw {

namespace {

double compensated_sum(std::span<const double> v) {
  double sum = 0.0, comp = 0.0;
  for (double x : v) {
    const double y = x - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum;
}

void validate_weights(std::span<const double> weights) {
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) {
      throw Error(ErrorCode::InvalidArgument, "measure weights must be finite and nonnegative");
    }
  }
}

}  // namespace

DiscreteMeasure::DiscreteMeasure(std::size_t dim, std::vector<double> positions, std::vector<double> weights)
    : dim_(dim), positions_(std::move(positions)), weights_(std::move(weights)) {
  if (dim_ == 0 || positions_.size() != weights_.size() * dim_) {
    throw Error(ErrorCode::InvalidArgument, "measure positions do not match weights and dimension");
  }
  if (weights_.empty()) throw Error(ErrorCode::ZeroMass, "measure has no atoms");
  for (double x : positions_) {
    if (!std::isfinite(x)) throw Error(ErrorCode::InvalidArgument, "measure atoms must be finite");
  }
  validate_weights(weights_);
  if (std::abs(compensated_sum(weights_) - 1.0) > 1e-12) {
    throw Error(ErrorCode::InvalidArgument, "measure weights must sum to 1");
  }
}

DiscreteMeasure DiscreteMeasure::normalized(std::size_t dim, std::vector<double> positions,
                                            std::vector<double> weights) {
  validate_weights(weights);
  const double total = compensated_sum(weights);
  if (!(total > 0.0)) throw Error(ErrorCode::ZeroMass, "measure has zero total mass");
  for (double& w : weights) w /= total;
  return DiscreteMeasure(dim, std::move(positions), std::move(weights));
}

DiscreteMeasure DiscreteMeasure::dirac(std::span<const double> x) {
  return DiscreteMeasure(x.size(), std::vector<double>(x.begin(), x.end()), {1.0});
}

DiscreteMeasure DiscreteMeasure::translated(std::span<const double> v) const {
  std::vector<double> pos(positions_);
  for (std::size_t i = 0; i < size(); ++i) {
    for (std::size_t k = 0; k < dim_; ++k) pos[i * dim_ + k] += v[k];
  }
  return DiscreteMeasure(dim_, std::move(pos), weights_);
}

bool DiscreteMeasure::inside(const ConvexDomain& domain, double tol) const {
  for (std::size_t i = 0; i < size(); ++i) {
    if (!domain.contains(position(i), tol)) return false;
  }
  return true;
}

DiscreteMeasure from_density(const ScalarField& f) {
  const Grid& g = f.grid();
  std::vector<double> pos, w;
  pos.reserve(f.size() * g.dim());
  w.reserve(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] < 0.0) throw Error(ErrorCode::InvalidArgument, "density must be nonnegative");
    const double mass = f[i] * g.volumes()[i];
    if (mass <= 0.0) continue;
    const auto x = g.node(i);
    pos.insert(pos.end(), x.begin(), x.end());
    w.push_back(mass);
  }
  if (w.empty()) throw Error(ErrorCode::ZeroMass, "density integrates to zero");
  return DiscreteMeasure::normalized(g.dim(), std::move(pos), std::move(w));
}

double moment(const DiscreteMeasure& mu, double m, std::span<const double> x0) {
  if (x0.size() != mu.dim()) throw Error(ErrorCode::DimensionMismatch, "moment centre dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const auto x = mu.position(i);
    double d2 = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) d2 += (x[k] - x0[k]) * (x[k] - x0[k]);
    if (d2 > 0.0) s += mu.weight(i) * std::pow(d2, 0.5 * m);
  }
  return s;
}

MeasurePair rho_pair(const ScalarField& f, double q) {
  SplitParts parts = split_parts(f, q);
  if (parts.pos.max() <= 0.0 || parts.neg.max() <= 0.0) {
    throw Error(ErrorCode::OneSigned, "field does not change sign");
  }
  return {from_density(parts.neg), from_density(parts.pos)};
}

double half_mass_check(const ScalarField& f, double q) {
  const SplitParts parts = split_parts(f, q);
  const double total = lr_norm(f, q - 1.0);
  const double plus = lr_norm(parts.pos, 1.0);
  const double minus = lr_norm(parts.neg, 1.0);
  return std::max(std::abs(total - 2.0 * plus), std::abs(total - 2.0 * minus));
}

void write_csv(std::ostream& out, const DiscreteMeasure& mu) {
  for (std::size_t k = 0; k < mu.dim(); ++k) out << 'x' << (k + 1) << ',';
  out << "weight\n";
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (double x : mu.position(i)) out << format_double(x) << ',';
    out << format_double(mu.weight(i)) << '\n';
  }
}

}  // namespace otpw
