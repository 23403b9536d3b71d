#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace otpw {

using Vec2 = std::array<double, 2>;

enum class DomainKind { Interval, Box, Polygon };

struct IntervalDescription {
  double a = 0.0;
  double b = 1.0;
};

struct BoxDescription {
  std::vector<double> lo;
  std::vector<double> hi;
};

struct PolygonDescription {
  std::vector<Vec2> vertices;
};

using DomainDescription = std::variant<IntervalDescription, BoxDescription, PolygonDescription>;

/// Bounded convex region: an interval, an axis-aligned box in R^N, or a
/// convex polygon in the plane. Immutable once built; polygon vertices are
/// stored counterclockwise.
class ConvexDomain;
ConvexDomain make_domain(const DomainDescription& description);

class ConvexDomain {
 public:
  static ConvexDomain interval(double a, double b);
  static ConvexDomain box(std::vector<double> lo, std::vector<double> hi);
  static ConvexDomain polygon(std::vector<Vec2> vertices);

  DomainKind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return lo_.size(); }

  double diameter() const noexcept { return diameter_; }
  double volume() const noexcept { return volume_; }

  /// Axis-aligned bounding box. For intervals and boxes this is the domain.
  const std::vector<double>& lower() const noexcept { return lo_; }
  const std::vector<double>& upper() const noexcept { return hi_; }

  /// Polygon vertices (counterclockwise). Empty for intervals and boxes.
  const std::vector<Vec2>& polygon_vertices() const noexcept { return polygon_; }

  /// Extreme points: interval endpoints, box corners or polygon vertices.
  std::vector<std::vector<double>> extreme_points() const;

  /// A pair of extreme points realizing the diameter.
  std::array<std::vector<double>, 2> diameter_endpoints() const;

  std::vector<double> centroid() const;

  bool contains(std::span<const double> x, double tol = 1e-12) const;

  /// Compact label without commas, safe for a CSV cell.
  std::string label() const;

  DomainDescription description() const;

 private:
  friend ConvexDomain make_domain(const DomainDescription&);
  ConvexDomain() = default;
  void finish();

  DomainKind kind_ = DomainKind::Interval;
  std::vector<double> lo_;
  std::vector<double> hi_;
  std::vector<Vec2> polygon_;
  double diameter_ = 0.0;
  double volume_ = 0.0;
};

/// Validates a description. Throws Error{NonConvex} or Error{Degenerate}.
ConvexDomain make_domain(const DomainDescription& description);

/// Cell-centered discretization of a convex domain. Intervals and boxes get a
/// uniform lattice; polygons get the lattice of their bounding box clipped to
/// the polygon, with cut-cell areas as quadrature weights and cut-cell
/// centroids as nodes.
class Grid {
 public:
  const ConvexDomain& domain() const noexcept { return domain_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return volumes_.size(); }

  /// Cells per axis of the background lattice.
  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  const std::vector<double>& spacing() const noexcept { return spacing_; }
  /// Largest lattice spacing.
  double h() const noexcept { return h_; }
  std::size_t resolution() const noexcept { return shape_.front(); }

  std::span<const double> node(std::size_t i) const {
    return {nodes_.data() + i * dim_, dim_};
  }
  std::span<const double> nodes() const noexcept { return nodes_; }
  std::span<const double> volumes() const noexcept { return volumes_; }
  double total_volume() const noexcept;

  /// True when every lattice cell is a full cell (intervals and boxes).
  bool regular() const noexcept { return regular_; }

  /// Node index of the lattice neighbour along `axis` (direction +1 or -1),
  /// or -1 if that cell is outside the domain.
  std::int64_t neighbor(std::size_t i, std::size_t axis, int direction) const;

  /// Node index of the lattice cell at offset `offset` from node i, or -1.
  std::int64_t offset_neighbor(std::size_t i, std::span<const int> offset) const;

  /// Measure of the face shared with the +axis neighbour (0 if none).
  double face_aperture(std::size_t i, std::size_t axis) const {
    return apertures_[i * dim_ + axis];
  }

  /// Multi-index of node i on the background lattice.
  std::vector<std::size_t> lattice_coordinates(std::size_t i) const;

 private:
  friend std::shared_ptr<const Grid> discretize(const ConvexDomain&, std::size_t);
  explicit Grid(ConvexDomain domain) : domain_(std::move(domain)) {}

  ConvexDomain domain_;
  std::size_t dim_ = 0;
  std::vector<std::size_t> shape_;
  std::vector<double> spacing_;
  double h_ = 0.0;
  bool regular_ = true;
  std::vector<double> nodes_;
  std::vector<double> volumes_;
  std::vector<double> apertures_;
  std::vector<std::size_t> lattice_of_node_;
  std::vector<std::int64_t> node_of_lattice_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Throws Error{ResolutionTooLow} when resolution < 2.
GridPtr discretize(const ConvexDomain& domain, std::size_t resolution);

namespace geometry {

double polygon_signed_area(std::span<const Vec2> poly);
Vec2 polygon_centroid(std::span<const Vec2> poly);

/// Sutherland-Hodgman clip of `subject` against the convex CCW polygon `clip`.
std::vector<Vec2> clip_convex(std::span<const Vec2> subject, std::span<const Vec2> clip);

/// Length of the part of segment [a,b] inside the convex CCW polygon.
double segment_length_inside(const Vec2& a, const Vec2& b, std::span<const Vec2> poly);

}  // namespace geometry

}  // namespace otpw
