#pragma once

#include <optional>
#include <string>
#include <vector>

#include "asi/mesh_fe.hpp"

namespace asi {

struct DiscInclusion {
  Point center;
  double radius = 0.0;
  double amplitude = 0.0;
};

/// Simple closed polygon, vertices in order (either orientation).
struct PolygonInclusion {
  std::vector<Point> vertices;
  double amplitude = 0.0;
};

/// u = background + sum_k amplitude_k * chi_{A_k}, or a raster read from a grid file.
struct PhantomSpec {
  std::string name = "empty";
  double background = 1.0;
  std::vector<DiscInclusion> discs;
  std::vector<PolygonInclusion> polygons;
  std::optional<std::string> raster_path;

  int num_inclusions() const { return static_cast<int>(discs.size() + polygons.size()); }
};

/// Six discs, radii in [0.05, 0.12] and amplitudes in [0.4, 1.2].
PhantomSpec six_discs();

/// Wedge with a 90 degree reentrant corner, a drop with a sharp tip and a kite.
PhantomSpec three_inclusions();

/// Square of side 2*half_width centered at `center` with a quarter cut out,
/// leaving one reentrant corner of 90 degrees; rotated by `angle` radians.
PolygonInclusion wedge(Point center, double half_width, double amplitude, double angle = 0.0);
/// Convex hull of a disc and a tip point outside it.
PolygonInclusion drop(Point center, double radius, Point tip, double amplitude, int arc_points = 256);
/// Classical kite curve (cos t + 0.65 cos 2t - 0.65, 1.5 sin t) scaled and shifted.
PolygonInclusion kite(Point center, double scale, double amplitude, int points = 512);

/// Throws InvalidArgument when an inclusion touches or crosses the boundary,
/// or when the medium would drop to kMinMedium or below.
void validate(const PhantomSpec& spec);
inline constexpr double kMinMedium = 1e-3;

bool point_in_polygon(const std::vector<Point>& vertices, Point p);
/// Distance from p to the union of all inclusion boundaries.
double distance_to_interfaces(const PhantomSpec& spec, Point p);

/// Nodal evaluation of the phantom on `mesh`. Raster phantoms are interpolated.
FeFunction phantom(const PhantomSpec& spec, MeshPtr mesh);

/// Elements whose three vertices lie at distance >= h from every interface.
std::vector<bool> smooth_region_elements(const PhantomSpec& spec, const Mesh& mesh);

/// Parses "x y r amplitude; x y r amplitude; ..." into discs.
std::vector<DiscInclusion> parse_discs(const std::string& text);

/// Connected components of {|u - background| > tol} on the node grid (4-neighbour flood fill).
int count_components(const FeFunction& u, double background, double tol = 1e-12);

}  // namespace asi
