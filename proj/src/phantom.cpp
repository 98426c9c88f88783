#include "asi/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <sstream>

namespace asi {

namespace {

double segment_distance(Point p, Point a, Point b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - a.x - t * dx, p.y - a.y - t * dy);
}

bool inside_disc(const DiscInclusion& d, Point p) {
  return std::hypot(p.x - d.center.x, p.y - d.center.y) < d.radius;
}

}  // namespace

PolygonInclusion wedge(Point c, double a, double amplitude, double angle) {
  // Counterclockwise, lower-right quadrant removed.
  const double local[6][2] = {{-a, -a}, {0, -a}, {0, 0}, {a, 0}, {a, a}, {-a, a}};
  const double cs = std::cos(angle), sn = std::sin(angle);
  PolygonInclusion poly;
  poly.amplitude = amplitude;
  for (const auto& q : local) poly.vertices.push_back({c.x + cs * q[0] - sn * q[1], c.y + sn * q[0] + cs * q[1]});
  return poly;
}

PolygonInclusion drop(Point c, double r, Point tip, double amplitude, int arc_points) {
  const double dx = tip.x - c.x, dy = tip.y - c.y;
  const double d = std::hypot(dx, dy);
  if (!(d > r)) throw InvalidArgument("drop: tip must lie outside the disc");
  const double axis = std::atan2(dy, dx);
  const double beta = std::acos(r / d);
  PolygonInclusion poly;
  poly.amplitude = amplitude;
  poly.vertices.push_back(tip);
  // Arc from one tangent point around the back of the disc to the other.
  for (int k = 0; k <= arc_points; ++k) {
    const double t = axis + beta + (2.0 * std::numbers::pi - 2.0 * beta) * k / arc_points;
    poly.vertices.push_back({c.x + r * std::cos(t), c.y + r * std::sin(t)});
  }
  return poly;
}

PolygonInclusion kite(Point c, double scale, double amplitude, int points) {
  PolygonInclusion poly;
  poly.amplitude = amplitude;
  for (int k = 0; k < points; ++k) {
    const double t = 2.0 * std::numbers::pi * k / points;
    const double x = std::cos(t) + 0.65 * std::cos(2.0 * t) - 0.65;
    const double y = 1.5 * std::sin(t);
    poly.vertices.push_back({c.x + scale * x, c.y + scale * y});
  }
  return poly;
}

PhantomSpec six_discs() {
  PhantomSpec s;
  s.name = "six_discs";
  s.discs = {{{0.25, 0.75}, 0.12, 1.0}, {{0.55, 0.78}, 0.08, 0.6}, {{0.80, 0.70}, 0.10, 1.2},
             {{0.22, 0.38}, 0.09, 0.8}, {{0.50, 0.40}, 0.05, 0.4}, {{0.75, 0.28}, 0.11, 0.5}};
  return s;
}

PhantomSpec three_inclusions() {
  PhantomSpec s;
  s.name = "three_inclusions";
  s.polygons.push_back(wedge({0.3, 0.7}, 0.17, 12.4, 0.35));
  s.polygons.push_back(drop({0.72, 0.68}, 0.12, {0.72, 0.92}, 3.85));
  s.polygons.push_back(kite({0.52, 0.28}, 0.12, 4.1));
  return s;
}

bool point_in_polygon(const std::vector<Point>& v, Point p) {
  bool inside = false;
  for (size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
    if ((v[i].y > p.y) != (v[j].y > p.y)) {
      const double x = v[j].x + (p.y - v[j].y) * (v[i].x - v[j].x) / (v[i].y - v[j].y);
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

double distance_to_interfaces(const PhantomSpec& spec, Point p) {
  double dist = std::numeric_limits<double>::infinity();
  for (const auto& d : spec.discs)
    dist = std::min(dist, std::abs(std::hypot(p.x - d.center.x, p.y - d.center.y) - d.radius));
  for (const auto& poly : spec.polygons) {
    const auto& v = poly.vertices;
    for (size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) dist = std::min(dist, segment_distance(p, v[j], v[i]));
  }
  return dist;
}

void validate(const PhantomSpec& spec) {
  if (spec.raster_path) return;
  for (const auto& d : spec.discs) {
    if (!(d.radius > 0.0)) throw InvalidArgument("phantom: disc radius must be positive");
    const double margin = std::min({d.center.x, d.center.y, 1.0 - d.center.x, 1.0 - d.center.y});
    if (!(margin > d.radius)) throw InvalidArgument("phantom: disc overlaps the boundary");
  }
  for (const auto& poly : spec.polygons) {
    if (poly.vertices.size() < 3) throw InvalidArgument("phantom: polygon needs at least 3 vertices");
    for (const auto& q : poly.vertices)
      if (!(q.x > 0.0 && q.x < 1.0 && q.y > 0.0 && q.y < 1.0))
        throw InvalidArgument("phantom: polygon overlaps the boundary");
  }
  // Worst case: every negative amplitude stacked.
  double low = spec.background;
  for (const auto& d : spec.discs) low += std::min(d.amplitude, 0.0);
  for (const auto& p : spec.polygons) low += std::min(p.amplitude, 0.0);
  if (!(low > kMinMedium)) throw InvalidArgument("phantom: medium may fall below the floor");
}

FeFunction phantom(const PhantomSpec& spec, MeshPtr mesh) {
  validate(spec);
  if (spec.raster_path) {
    const FeFunction raster = read_grid(*spec.raster_path);
    FeFunction out = interpolate_between_meshes(raster, mesh);
    if (out.values.minCoeff() <= 0.0) throw InvalidArgument("phantom: raster medium must be positive");
    return out;
  }
  Vector u = Vector::Constant(mesh->num_nodes(), spec.background);
  const auto& nodes = mesh->nodes();
  for (int k = 0; k < mesh->num_nodes(); ++k) {
    for (const auto& d : spec.discs)
      if (inside_disc(d, nodes[k])) u[k] += d.amplitude;
    for (const auto& p : spec.polygons)
      if (point_in_polygon(p.vertices, nodes[k])) u[k] += p.amplitude;
  }
  return FeFunction(mesh, std::move(u));
}

std::vector<bool> smooth_region_elements(const PhantomSpec& spec, const Mesh& mesh) {
  std::vector<double> dist(mesh.num_nodes());
  for (int k = 0; k < mesh.num_nodes(); ++k) dist[k] = distance_to_interfaces(spec, mesh.nodes()[k]);
  std::vector<bool> out(mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& t = mesh.elements()[e];
    out[e] = dist[t[0]] >= mesh.h() && dist[t[1]] >= mesh.h() && dist[t[2]] >= mesh.h();
  }
  return out;
}

std::vector<DiscInclusion> parse_discs(const std::string& text) {
  std::vector<DiscInclusion> out;
  std::stringstream all(text);
  std::string item;
  while (std::getline(all, item, ';')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    std::istringstream in(item);
    DiscInclusion d;
    if (!(in >> d.center.x >> d.center.y >> d.radius >> d.amplitude))
      throw InvalidArgument("phantom: cannot parse disc '" + item + "'");
    std::string rest;
    if (in >> rest) throw InvalidArgument("phantom: trailing text in disc '" + item + "'");
    out.push_back(d);
  }
  return out;
}

int count_components(const FeFunction& u, double background, double tol) {
  const int n = u.mesh->n();
  const int side = n + 1;
  std::vector<char> seen(u.values.size(), 0);
  auto active = [&](int k) { return std::abs(u.values[k] - background) > tol; };
  int count = 0;
  for (int start = 0; start < u.values.size(); ++start) {
    if (seen[start] || !active(start)) continue;
    ++count;
    std::queue<int> q;
    q.push(start);
    seen[start] = 1;
    while (!q.empty()) {
      const int k = q.front();
      q.pop();
      const int i = k % side, j = k / side;
      const int nb[4][2] = {{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
      for (const auto& c : nb) {
        if (c[0] < 0 || c[0] > n || c[1] < 0 || c[1] > n) continue;
        const int m = c[1] * side + c[0];
        if (!seen[m] && active(m)) {
          seen[m] = 1;
          q.push(m);
        }
      }
    }
  }
  return count;
}

}  // namespace asi
