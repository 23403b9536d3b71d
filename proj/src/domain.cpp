#include "otpw/domain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "otpw/error.hpp"
#include "otpw/format.hpp"

namespace otpw {

namespace geometry {

double polygon_signed_area(std::span<const Vec2> poly) {
  const std::size_t n = poly.size();
  double twice = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % n];
    twice += p[0] * q[1] - q[0] * p[1];
  }
  return 0.5 * twice;
}

Vec2 polygon_centroid(std::span<const Vec2> poly) {
  const std::size_t n = poly.size();
  double twice_area = 0.0, cx = 0.0, cy = 0.0;
  // Shift by the first vertex to limit cancellation on small cells.
  const Vec2 o = poly.front();
  for (std::size_t i = 0; i < n; ++i) {
    const double px = poly[i][0] - o[0], py = poly[i][1] - o[1];
    const double qx = poly[(i + 1) % n][0] - o[0], qy = poly[(i + 1) % n][1] - o[1];
    const double cross = px * qy - qx * py;
    twice_area += cross;
    cx += (px + qx) * cross;
    cy += (py + qy) * cross;
  }
  if (twice_area == 0.0) {
    Vec2 mean{0.0, 0.0};
    for (const auto& v : poly) {
      mean[0] += v[0] / static_cast<double>(n);
      mean[1] += v[1] / static_cast<double>(n);
    }
    return mean;
  }
  return {o[0] + cx / (3.0 * twice_area), o[1] + cy / (3.0 * twice_area)};
}

namespace {

// Signed distance-like value: > 0 when p is left of the directed edge a->b.
double side(const Vec2& a, const Vec2& b, const Vec2& p) {
  return (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
}

}  // namespace

std::vector<Vec2> clip_convex(std::span<const Vec2> subject, std::span<const Vec2> clip) {
  std::vector<Vec2> output(subject.begin(), subject.end());
  const std::size_t n = clip.size();
  for (std::size_t e = 0; e < n && !output.empty(); ++e) {
    const Vec2& a = clip[e];
    const Vec2& b = clip[(e + 1) % n];
    std::vector<Vec2> input;
    input.swap(output);
    for (std::size_t i = 0; i < input.size(); ++i) {
      const Vec2& cur = input[i];
      const Vec2& prev = input[(i + input.size() - 1) % input.size()];
      const double sc = side(a, b, cur);
      const double sp = side(a, b, prev);
      if (sc >= 0.0) {
        if (sp < 0.0) {
          const double t = sp / (sp - sc);
          output.push_back({prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])});
        }
        output.push_back(cur);
      } else if (sp >= 0.0) {
        const double t = sp / (sp - sc);
        output.push_back({prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])});
      }
    }
  }
  return output;
}

double segment_length_inside(const Vec2& a, const Vec2& b, std::span<const Vec2> poly) {
  // Cyrus-Beck against each inward half-plane.
  double t0 = 0.0, t1 = 1.0;
  const Vec2 d{b[0] - a[0], b[1] - a[1]};
  const std::size_t n = poly.size();
  for (std::size_t e = 0; e < n; ++e) {
    const Vec2& p = poly[e];
    const Vec2& q = poly[(e + 1) % n];
    const double num = side(p, q, a);
    const double den = (q[0] - p[0]) * d[1] - (q[1] - p[1]) * d[0];
    if (den == 0.0) {
      if (num < 0.0) return 0.0;
      continue;
    }
    const double t = -num / den;
    if (den > 0.0) {
      t0 = std::max(t0, t);
    } else {
      t1 = std::min(t1, t);
    }
    if (t0 >= t1) return 0.0;
  }
  return (t1 - t0) * std::hypot(d[0], d[1]);
}

}  // namespace geometry

namespace {

double distance(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
  return std::sqrt(s);
}

std::string join_numbers(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += format_double(v[i]);
  }
  return out;
}

}  // namespace

ConvexDomain ConvexDomain::interval(double a, double b) {
  return make_domain(IntervalDescription{a, b});
}

ConvexDomain ConvexDomain::box(std::vector<double> lo, std::vector<double> hi) {
  return make_domain(BoxDescription{std::move(lo), std::move(hi)});
}

ConvexDomain ConvexDomain::polygon(std::vector<Vec2> vertices) {
  return make_domain(PolygonDescription{std::move(vertices)});
}

ConvexDomain make_domain(const DomainDescription& description) {
  ConvexDomain d;
  if (const auto* iv = std::get_if<IntervalDescription>(&description)) {
    if (!std::isfinite(iv->a) || !std::isfinite(iv->b)) {
      throw Error(ErrorCode::InvalidArgument, "interval endpoints must be finite");
    }
    if (!(iv->b > iv->a)) throw Error(ErrorCode::Degenerate, "interval needs a < b");
    d.kind_ = DomainKind::Interval;
    d.lo_ = {iv->a};
    d.hi_ = {iv->b};
  } else if (const auto* bx = std::get_if<BoxDescription>(&description)) {
    if (bx->lo.empty() || bx->lo.size() != bx->hi.size()) {
      throw Error(ErrorCode::InvalidArgument, "box corners must have equal nonzero dimension");
    }
    for (std::size_t k = 0; k < bx->lo.size(); ++k) {
      if (!std::isfinite(bx->lo[k]) || !std::isfinite(bx->hi[k])) {
        throw Error(ErrorCode::InvalidArgument, "box corners must be finite");
      }
      if (!(bx->hi[k] > bx->lo[k])) throw Error(ErrorCode::Degenerate, "box side length must be positive");
    }
    d.kind_ = DomainKind::Box;
    d.lo_ = bx->lo;
    d.hi_ = bx->hi;
  } else {
    const auto& pg = std::get<PolygonDescription>(description);
    std::vector<Vec2> v = pg.vertices;
    if (v.size() < 3) throw Error(ErrorCode::Degenerate, "polygon needs at least three vertices");
    for (const auto& p : v) {
      if (!std::isfinite(p[0]) || !std::isfinite(p[1])) {
        throw Error(ErrorCode::InvalidArgument, "polygon vertices must be finite");
      }
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
      for (std::size_t j = i + 1; j < v.size(); ++j) {
        if (v[i] == v[j]) throw Error(ErrorCode::NonConvex, "polygon has repeated vertices");
      }
    }
    // Convex and simple: all turns share one sign and the turning sums to one revolution.
    const std::size_t n = v.size();
    bool has_pos = false, has_neg = false;
    double turning = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2& a = v[i];
      const Vec2& b = v[(i + 1) % n];
      const Vec2& c = v[(i + 2) % n];
      const double e1x = b[0] - a[0], e1y = b[1] - a[1];
      const double e2x = c[0] - b[0], e2y = c[1] - b[1];
      const double cross = e1x * e2y - e1y * e2x;
      const double dot = e1x * e2x + e1y * e2y;
      if (cross > 0.0) has_pos = true;
      if (cross < 0.0) has_neg = true;
      turning += std::atan2(cross, dot);
    }
    if (has_pos && has_neg) throw Error(ErrorCode::NonConvex, "polygon vertex order is not convex");
    if (std::abs(std::abs(turning) - 2.0 * std::numbers::pi) > 1e-6) {
      throw Error(ErrorCode::NonConvex, "polygon boundary winds more than once");
    }
    double area = geometry::polygon_signed_area(v);
    if (area < 0.0) {
      std::reverse(v.begin(), v.end());
      area = -area;
    }
    if (!(area > 0.0)) throw Error(ErrorCode::Degenerate, "polygon has zero area");
    d.kind_ = DomainKind::Polygon;
    d.polygon_ = std::move(v);
    d.lo_ = {d.polygon_[0][0], d.polygon_[0][1]};
    d.hi_ = d.lo_;
    for (const auto& p : d.polygon_) {
      for (std::size_t k = 0; k < 2; ++k) {
        d.lo_[k] = std::min(d.lo_[k], p[k]);
        d.hi_[k] = std::max(d.hi_[k], p[k]);
      }
    }
  }
  d.finish();
  return d;
}

void ConvexDomain::finish() {
  if (kind_ == DomainKind::Polygon) {
    volume_ = geometry::polygon_signed_area(polygon_);
  } else {
    volume_ = 1.0;
    for (std::size_t k = 0; k < lo_.size(); ++k) volume_ *= hi_[k] - lo_[k];
  }
  if (kind_ == DomainKind::Polygon) {
    double best = 0.0;
    for (std::size_t i = 0; i < polygon_.size(); ++i) {
      for (std::size_t j = i + 1; j < polygon_.size(); ++j) {
        best = std::max(best, std::hypot(polygon_[i][0] - polygon_[j][0], polygon_[i][1] - polygon_[j][1]));
      }
    }
    diameter_ = best;
  } else {
    double s = 0.0;
    for (std::size_t k = 0; k < lo_.size(); ++k) s += (hi_[k] - lo_[k]) * (hi_[k] - lo_[k]);
    diameter_ = std::sqrt(s);
  }
}

std::vector<std::vector<double>> ConvexDomain::extreme_points() const {
  std::vector<std::vector<double>> out;
  if (kind_ == DomainKind::Polygon) {
    for (const auto& p : polygon_) out.push_back({p[0], p[1]});
    return out;
  }
  const std::size_t n = dim();
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    std::vector<double> corner(n);
    for (std::size_t k = 0; k < n; ++k) corner[k] = (mask >> k) & 1U ? hi_[k] : lo_[k];
    out.push_back(std::move(corner));
  }
  return out;
}

std::array<std::vector<double>, 2> ConvexDomain::diameter_endpoints() const {
  if (kind_ != DomainKind::Polygon) return {lo_, hi_};
  const auto pts = extreme_points();
  std::array<std::vector<double>, 2> best{pts[0], pts[0]};
  double dmax = -1.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const double dij = distance(pts[i], pts[j]);
      if (dij > dmax) {
        dmax = dij;
        best = {pts[i], pts[j]};
      }
    }
  }
  return best;
}

std::vector<double> ConvexDomain::centroid() const {
  if (kind_ == DomainKind::Polygon) {
    const Vec2 c = geometry::polygon_centroid(polygon_);
    return {c[0], c[1]};
  }
  std::vector<double> c(dim());
  for (std::size_t k = 0; k < dim(); ++k) c[k] = 0.5 * (lo_[k] + hi_[k]);
  return c;
}

bool ConvexDomain::contains(std::span<const double> x, double tol) const {
  if (x.size() != dim()) return false;
  const double scale = std::max(1.0, diameter_);
  for (std::size_t k = 0; k < dim(); ++k) {
    if (x[k] < lo_[k] - tol * scale || x[k] > hi_[k] + tol * scale) return false;
  }
  if (kind_ != DomainKind::Polygon) return true;
  const std::size_t n = polygon_.size();
  for (std::size_t e = 0; e < n; ++e) {
    const Vec2& a = polygon_[e];
    const Vec2& b = polygon_[(e + 1) % n];
    const double len = std::hypot(b[0] - a[0], b[1] - a[1]);
    const double s = ((b[0] - a[0]) * (x[1] - a[1]) - (b[1] - a[1]) * (x[0] - a[0])) / len;
    if (s < -tol * scale) return false;
  }
  return true;
}

std::string ConvexDomain::label() const {
  switch (kind_) {
    case DomainKind::Interval:
      return "interval[" + format_double(lo_[0]) + ";" + format_double(hi_[0]) + "]";
    case DomainKind::Box:
      return "box[" + join_numbers(lo_) + "|" + join_numbers(hi_) + "]";
    case DomainKind::Polygon: {
      std::string out = "polygon[";
      for (std::size_t i = 0; i < polygon_.size(); ++i) {
        if (i) out += '|';
        out += format_double(polygon_[i][0]) + ";" + format_double(polygon_[i][1]);
      }
      return out + "]";
    }
  }
  return "unknown";
}

DomainDescription ConvexDomain::description() const {
  switch (kind_) {
    case DomainKind::Interval: return IntervalDescription{lo_[0], hi_[0]};
    case DomainKind::Box: return BoxDescription{lo_, hi_};
    case DomainKind::Polygon: return PolygonDescription{polygon_};
  }
  return IntervalDescription{};
}

double Grid::total_volume() const noexcept {
  // Pairwise-style accumulation keeps the 1e-12 volume invariant on big grids.
  double sum = 0.0, comp = 0.0;
  for (double v : volumes_) {
    const double y = v - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum;
}

std::int64_t Grid::neighbor(std::size_t i, std::size_t axis, int direction) const {
  std::size_t lat = lattice_of_node_[i];
  std::size_t stride = 1;
  for (std::size_t k = 0; k < axis; ++k) stride *= shape_[k];
  const std::size_t coord = (lat / stride) % shape_[axis];
  if (direction < 0) {
    if (coord == 0) return -1;
    lat -= stride;
  } else {
    if (coord + 1 >= shape_[axis]) return -1;
    lat += stride;
  }
  return node_of_lattice_[lat];
}

std::int64_t Grid::offset_neighbor(std::size_t i, std::span<const int> offset) const {
  std::size_t lat = lattice_of_node_[i];
  std::size_t stride = 1;
  std::int64_t target = 0;
  for (std::size_t k = 0; k < dim_; ++k) {
    const auto coord = static_cast<std::int64_t>((lat / stride) % shape_[k]) + offset[k];
    if (coord < 0 || coord >= static_cast<std::int64_t>(shape_[k])) return -1;
    target += coord * static_cast<std::int64_t>(stride);
    stride *= shape_[k];
  }
  return node_of_lattice_[static_cast<std::size_t>(target)];
}

std::vector<std::size_t> Grid::lattice_coordinates(std::size_t i) const {
  std::vector<std::size_t> c(dim_);
  std::size_t lat = lattice_of_node_[i];
  for (std::size_t k = 0; k < dim_; ++k) {
    c[k] = lat % shape_[k];
    lat /= shape_[k];
  }
  return c;
}

GridPtr discretize(const ConvexDomain& domain, std::size_t resolution) {
  if (resolution < 2) throw Error(ErrorCode::ResolutionTooLow, "resolution must be at least 2");
  std::shared_ptr<Grid> grid(new Grid(domain));
  Grid& g = *grid;
  g.dim_ = domain.dim();
  g.shape_.assign(g.dim_, resolution);
  g.spacing_.resize(g.dim_);
  for (std::size_t k = 0; k < g.dim_; ++k) {
    g.spacing_[k] = (domain.upper()[k] - domain.lower()[k]) / static_cast<double>(resolution);
  }
  g.h_ = *std::max_element(g.spacing_.begin(), g.spacing_.end());

  std::size_t lattice_size = 1;
  for (std::size_t k = 0; k < g.dim_; ++k) lattice_size *= resolution;
  g.node_of_lattice_.assign(lattice_size, -1);

  const auto& lo = domain.lower();
  const auto& hi = domain.upper();
  auto cell_edge = [&](std::size_t axis, std::size_t idx) {
    // Exact endpoints on the last face so boundary nodes stay inside.
    if (idx == resolution) return hi[axis];
    return lo[axis] + static_cast<double>(idx) * g.spacing_[axis];
  };

  if (domain.kind() != DomainKind::Polygon) {
    g.regular_ = true;
    double cell_volume = 1.0;
    for (double s : g.spacing_) cell_volume *= s;
    g.nodes_.resize(lattice_size * g.dim_);
    g.volumes_.assign(lattice_size, cell_volume);
    g.lattice_of_node_.resize(lattice_size);
    g.apertures_.assign(lattice_size * g.dim_, 0.0);
    for (std::size_t lat = 0; lat < lattice_size; ++lat) {
      std::size_t rem = lat;
      for (std::size_t k = 0; k < g.dim_; ++k) {
        const std::size_t c = rem % resolution;
        rem /= resolution;
        g.nodes_[lat * g.dim_ + k] = 0.5 * (cell_edge(k, c) + cell_edge(k, c + 1));
        if (c + 1 < resolution) g.apertures_[lat * g.dim_ + k] = cell_volume / g.spacing_[k];
      }
      g.lattice_of_node_[lat] = lat;
      g.node_of_lattice_[lat] = static_cast<std::int64_t>(lat);
    }
    return grid;
  }

  g.regular_ = false;
  const auto& poly = domain.polygon_vertices();
  const double full_area = g.spacing_[0] * g.spacing_[1];
  for (std::size_t j = 0; j < resolution; ++j) {
    for (std::size_t i = 0; i < resolution; ++i) {
      const double x0 = cell_edge(0, i), x1 = cell_edge(0, i + 1);
      const double y0 = cell_edge(1, j), y1 = cell_edge(1, j + 1);
      const std::array<Vec2, 4> cell{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}};
      const auto piece = geometry::clip_convex(cell, poly);
      if (piece.size() < 3) continue;
      const double area = geometry::polygon_signed_area(piece);
      if (!(area > 1e-13 * full_area)) continue;
      const Vec2 c = geometry::polygon_centroid(piece);
      const std::size_t lat = j * resolution + i;
      g.node_of_lattice_[lat] = static_cast<std::int64_t>(g.volumes_.size());
      g.lattice_of_node_.push_back(lat);
      g.volumes_.push_back(area);
      g.nodes_.push_back(c[0]);
      g.nodes_.push_back(c[1]);
    }
  }
  g.apertures_.assign(g.volumes_.size() * 2, 0.0);
  for (std::size_t n = 0; n < g.volumes_.size(); ++n) {
    const std::size_t lat = g.lattice_of_node_[n];
    const std::size_t i = lat % resolution, j = lat / resolution;
    if (i + 1 < resolution && g.node_of_lattice_[lat + 1] >= 0) {
      const double x = cell_edge(0, i + 1);
      g.apertures_[n * 2 + 0] =
          geometry::segment_length_inside({x, cell_edge(1, j)}, {x, cell_edge(1, j + 1)}, poly);
    }
    if (j + 1 < resolution && g.node_of_lattice_[lat + resolution] >= 0) {
      const double y = cell_edge(1, j + 1);
      g.apertures_[n * 2 + 1] =
          geometry::segment_length_inside({cell_edge(0, i), y}, {cell_edge(0, i + 1), y}, poly);
    }
  }
  if (g.volumes_.empty()) throw Error(ErrorCode::Degenerate, "polygon grid has no cells");
  return grid;
}

}  // namespace otpw
