#include "asi/analysis.hpp"

#include <cmath>

namespace asi {

double phantom_value(const PhantomSpec& spec, Point p) {
  double u = spec.background;
  for (const auto& d : spec.discs)
    if (std::hypot(p.x - d.center.x, p.y - d.center.y) < d.radius) u += d.amplitude;
  for (const auto& poly : spec.polygons)
    if (point_in_polygon(poly.vertices, p)) u += poly.amplitude;
  return u;
}

double exact_projection_error(const FeSpace& space, const PhantomSpec& spec, const Basis& basis, int subdivisions) {
  if (spec.raster_path) throw InvalidArgument("exact_projection_error: needs an analytic phantom");
  if (subdivisions < 1) throw InvalidArgument("exact_projection_error: subdivisions must be positive");
  const Mesh& mesh = space.mesh();
  const auto& nodes = mesh.nodes();
  const double reach = mesh.h() * std::sqrt(2.0);
  const int s = subdivisions;

  std::vector<bool> cut(mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    double d = std::numeric_limits<double>::infinity();
    for (int v : mesh.elements()[e]) d = std::min(d, distance_to_interfaces(spec, nodes[v]));
    cut[e] = d <= reach;
  }

  // Quadrature rule per element: (barycentric point, weight fraction).
  struct QPoint {
    double l0, l1, l2, w;
  };
  std::vector<QPoint> rule;
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s - i; ++j) {
      // Upward sub-triangle, then the downward one when it exists.
      rule.push_back({(i + 1.0 / 3) / s, (j + 1.0 / 3) / s, 1.0 - (i + j + 2.0 / 3) / s, 1.0 / (s * s)});
      if (i + j < s - 1) rule.push_back({(i + 2.0 / 3) / s, (j + 2.0 / 3) / s, 1.0 - (i + j + 4.0 / 3) / s, 1.0 / (s * s)});
    }

  auto integrate = [&](auto&& per_element_const, auto&& per_point) {
    for (int e = 0; e < mesh.num_elements(); ++e) {
      const auto& t = mesh.elements()[e];
      if (!cut[e]) {
        per_element_const(e, phantom_value(spec, mesh.centroid(e)) - spec.background);
        continue;
      }
      for (const auto& q : rule) {
        const Point p{q.l0 * nodes[t[0]].x + q.l1 * nodes[t[1]].x + q.l2 * nodes[t[2]].x,
                      q.l0 * nodes[t[0]].y + q.l1 * nodes[t[1]].y + q.l2 * nodes[t[2]].y};
        per_point(e, q.l0, q.l1, q.l2, q.w * mesh.element_area(), phantom_value(spec, p) - spec.background);
      }
    }
  };

  // beta_k = (u, phi_k)
  const Matrix& phi = basis.functions;
  Vector beta = Vector::Zero(phi.cols());
  const double area = mesh.element_area();
  integrate(
      [&](int e, double c) {
        const auto& t = mesh.elements()[e];
        beta += (c * area / 3.0) * (phi.row(t[0]) + phi.row(t[1]) + phi.row(t[2])).transpose();
      },
      [&](int e, double l0, double l1, double l2, double w, double u) {
        const auto& t = mesh.elements()[e];
        beta += (w * u) * (l0 * phi.row(t[0]) + l1 * phi.row(t[1]) + l2 * phi.row(t[2])).transpose();
      });
  const Vector proj = phi * beta;

  double err2 = 0.0;
  integrate(
      [&](int e, double c) {
        const auto& t = mesh.elements()[e];
        const double p0 = c - proj[t[0]], p1 = c - proj[t[1]], p2 = c - proj[t[2]];
        err2 += area * (p0 * p0 + p1 * p1 + p2 * p2 + p0 * p1 + p0 * p2 + p1 * p2) / 6.0;
      },
      [&](int e, double l0, double l1, double l2, double w, double u) {
        const auto& t = mesh.elements()[e];
        const double r = u - (l0 * proj[t[0]] + l1 * proj[t[1]] + l2 * proj[t[2]]);
        err2 += w * r * r;
      });
  return std::sqrt(err2);
}

double gradient_norm_on(const Mesh& mesh, const Vector& v, const std::vector<bool>& elements) {
  if (static_cast<int>(elements.size()) != mesh.num_elements())
    throw InvalidArgument("gradient_norm_on: element mask size mismatch");
  double sum = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    if (!elements[e]) continue;
    const auto g = mesh.gradient_of(v, e);
    sum += mesh.element_area() * (g[0] * g[0] + g[1] * g[1]);
  }
  return std::sqrt(sum);
}

}  // namespace asi
