#pragma once

#include <vector>

#include "asi/asdecomp.hpp"
#include "asi/phantom.hpp"

namespace asi {

/// Exact (non-interpolated) value of the phantom at p.
double phantom_value(const PhantomSpec& spec, Point p);

/// ||v - Pi_K v||_{L2} for the discontinuous deviation v = u - background
/// itself, not its interpolant. Elements that
/// may meet an interface are integrated on `subdivisions`^2 sub-triangles,
/// the others exactly.
double exact_projection_error(const FeSpace& space, const PhantomSpec& spec, const Basis& basis,
                              int subdivisions = 16);

/// ||grad v||_{L2} restricted to the flagged elements.
double gradient_norm_on(const Mesh& mesh, const Vector& v, const std::vector<bool>& elements);

}  // namespace asi
