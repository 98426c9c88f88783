#include "asi/mesh_fe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace asi {

namespace {

Mesh::Gradients triangle_gradients(const Point& a, const Point& b, const Point& c) {
  const double det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
  Mesh::Gradients g{};
  g[0] = {(b.y - c.y) / det, (c.x - b.x) / det};
  g[1] = {(c.y - a.y) / det, (a.x - c.x) / det};
  g[2] = {(a.y - b.y) / det, (b.x - a.x) / det};
  return g;
}

}  // namespace

Mesh::Mesh(int n) : n_(n), h_(1.0 / n) {
  if (n < 2) throw InvalidArgument("mesh needs at least 2 intervals per side, got " + std::to_string(n));

  const int np = n + 1;
  nodes_.reserve(static_cast<size_t>(np) * np);
  boundary_mask_.reserve(static_cast<size_t>(np) * np);
  interior_index_.assign(static_cast<size_t>(np) * np, -1);
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      // i*h_ instead of i/n keeps nodes bit-identical to the element geometry.
      nodes_.push_back({i == n ? 1.0 : i * h_, j == n ? 1.0 : j * h_});
      const bool on_boundary = i == 0 || j == 0 || i == n || j == n;
      boundary_mask_.push_back(on_boundary);
      const int idx = node_index(i, j);
      if (on_boundary) {
        boundary_nodes_.push_back(idx);
      } else {
        interior_index_[idx] = static_cast<int>(interior_nodes_.size());
        interior_nodes_.push_back(idx);
      }
    }
  }

  elements_.reserve(2 * static_cast<size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int a = node_index(i, j);
      const int b = node_index(i + 1, j);
      const int c = node_index(i + 1, j + 1);
      const int d = node_index(i, j + 1);
      elements_.push_back({a, b, c});
      elements_.push_back({a, c, d});
    }
  }

  gradients_.reserve(elements_.size());
  for (const auto& t : elements_) {
    gradients_.push_back(triangle_gradients(nodes_[t[0]], nodes_[t[1]], nodes_[t[2]]));
  }
}

Point Mesh::centroid(int element) const {
  const auto& t = elements_[element];
  return {(nodes_[t[0]].x + nodes_[t[1]].x + nodes_[t[2]].x) / 3.0,
          (nodes_[t[0]].y + nodes_[t[1]].y + nodes_[t[2]].y) / 3.0};
}

Mesh::Location Mesh::locate(Point p) const {
  const double x = std::clamp(p.x, 0.0, 1.0);
  const double y = std::clamp(p.y, 0.0, 1.0);
  const int i = std::min(static_cast<int>(std::floor(x * n_)), n_ - 1);
  const int j = std::min(static_cast<int>(std::floor(y * n_)), n_ - 1);
  const double s = x * n_ - i;  // local coordinates in [0,1]^2
  const double t = y * n_ - j;
  Location loc;
  const int cell = j * n_ + i;
  if (s >= t) {
    // lower triangle (i,j), (i+1,j), (i+1,j+1)
    loc.element = 2 * cell;
    loc.barycentric = {1.0 - s, s - t, t};
  } else {
    // upper triangle (i,j), (i+1,j+1), (i,j+1)
    loc.element = 2 * cell + 1;
    loc.barycentric = {1.0 - t, s, t - s};
  }
  return loc;
}

std::array<double, 2> Mesh::gradient_of(const Vector& values, int element) const {
  const auto& t = elements_[element];
  const auto& g = gradients_[element];
  std::array<double, 2> out{0.0, 0.0};
  for (int k = 0; k < 3; ++k) {
    out[0] += values[t[k]] * g[k][0];
    out[1] += values[t[k]] * g[k][1];
  }
  return out;
}

MeshPtr build_unit_square_mesh(int n) { return std::make_shared<const Mesh>(n); }

FeFunction::FeFunction(MeshPtr m, Vector v) : mesh(std::move(m)), values(std::move(v)) {
  if (!mesh) throw InvalidArgument("FeFunction without mesh");
  if (values.size() != mesh->num_nodes()) {
    throw InvalidArgument("FeFunction value count " + std::to_string(values.size()) +
                          " does not match mesh node count " + std::to_string(mesh->num_nodes()));
  }
  if (!values.allFinite()) throw InvalidArgument("FeFunction has non-finite entries");
}

FeFunction FeFunction::constant(MeshPtr m, double value) {
  const int count = m->num_nodes();
  return FeFunction(std::move(m), Vector::Constant(count, value));
}

SparseMatrix assemble_mass(const Mesh& mesh, bool lumped) {
  const double area = mesh.element_area();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(mesh.num_elements() * (lumped ? 3 : 9));
  for (const auto& t : mesh.elements()) {
    for (int a = 0; a < 3; ++a) {
      if (lumped) {
        triplets.emplace_back(t[a], t[a], area / 3.0);
        continue;
      }
      for (int b = 0; b < 3; ++b) {
        triplets.emplace_back(t[a], t[b], area / 12.0 * (a == b ? 2.0 : 1.0));
      }
    }
  }
  SparseMatrix m(mesh.num_nodes(), mesh.num_nodes());
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

SparseMatrix assemble_weighted_stiffness(const Mesh& mesh, std::span<const double> weights) {
  if (static_cast<int>(weights.size()) != mesh.num_elements()) {
    throw InvalidArgument("stiffness weight count does not match element count");
  }
  const double area = mesh.element_area();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(9 * weights.size());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const double w = weights[e];
    if (!(w > 0.0)) throw InvalidArgument("stiffness weights must be positive");
    const auto& t = mesh.elements()[e];
    const auto& g = mesh.gradients(e);
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        triplets.emplace_back(t[a], t[b], w * area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]));
      }
    }
  }
  SparseMatrix k(mesh.num_nodes(), mesh.num_nodes());
  k.setFromTriplets(triplets.begin(), triplets.end());
  k.makeCompressed();
  return k;
}

Vector boundary_lumped_mass(const Mesh& mesh) {
  // Each boundary node collects h/2 from both adjacent boundary segments.
  return Vector::Constant(mesh.num_boundary(), mesh.h());
}

StiffnessAssembler::StiffnessAssembler(MeshPtr mesh, bool interior_only) : mesh_(std::move(mesh)) {
  const Mesh& m = *mesh_;
  const int size = interior_only ? m.num_interior() : m.num_nodes();
  auto map = [&](int node) { return interior_only ? m.interior_index(node) : node; };

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(9 * static_cast<size_t>(m.num_elements()));
  for (const auto& t : m.elements()) {
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        const int r = map(t[a]);
        const int c = map(t[b]);
        if (r >= 0 && c >= 0) triplets.emplace_back(r, c, 1.0);
      }
    }
  }
  pattern_.resize(size, size);
  pattern_.setFromTriplets(triplets.begin(), triplets.end());
  pattern_.makeCompressed();

  auto slot = [&](int r, int c) -> int {
    const int* begin = pattern_.innerIndexPtr() + pattern_.outerIndexPtr()[r];
    const int* end = pattern_.innerIndexPtr() + pattern_.outerIndexPtr()[r + 1];
    const int* it = std::lower_bound(begin, end, c);
    return static_cast<int>(it - pattern_.innerIndexPtr());
  };

  const double area = m.element_area();
  slots_.resize(m.num_elements());
  local_.resize(m.num_elements());
  for (int e = 0; e < m.num_elements(); ++e) {
    const auto& t = m.elements()[e];
    const auto& g = m.gradients(e);
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        const int r = map(t[a]);
        const int c = map(t[b]);
        slots_[e][3 * a + b] = (r >= 0 && c >= 0) ? slot(r, c) : -1;
        local_[e][3 * a + b] = area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
      }
    }
  }
}

SparseMatrix StiffnessAssembler::assemble(std::span<const double> weights) const {
  if (static_cast<int>(weights.size()) != mesh_->num_elements()) {
    throw InvalidArgument("stiffness weight count does not match element count");
  }
  SparseMatrix k = pattern_;
  double* values = k.valuePtr();
  std::fill(values, values + k.nonZeros(), 0.0);
  for (size_t e = 0; e < weights.size(); ++e) {
    const double w = weights[e];
    if (!(w > 0.0)) throw InvalidArgument("stiffness weights must be positive");
    for (int q = 0; q < 9; ++q) {
      const int s = slots_[e][q];
      if (s >= 0) values[s] += w * local_[e][q];
    }
  }
  return k;
}

DirichletSystem apply_dirichlet(const SparseMatrix& matrix, const Vector& rhs,
                                const std::vector<bool>& boundary_mask, const Vector& boundary_values) {
  const int n = static_cast<int>(matrix.rows());
  if (matrix.cols() != n || rhs.size() != n || static_cast<int>(boundary_mask.size()) != n) {
    throw InvalidArgument("apply_dirichlet: size mismatch");
  }
  const bool has_values = boundary_values.size() > 0;
  if (has_values && boundary_values.size() != n) throw InvalidArgument("apply_dirichlet: boundary value size");

  DirichletSystem sys;
  std::vector<int> reduced_index(n, -1);
  for (int i = 0; i < n; ++i) {
    if (!boundary_mask[i]) {
      reduced_index[i] = static_cast<int>(sys.free_nodes.size());
      sys.free_nodes.push_back(i);
    }
  }
  const int m = static_cast<int>(sys.free_nodes.size());
  sys.rhs.resize(m);
  std::vector<Eigen::Triplet<double>> triplets;
  for (int r = 0; r < m; ++r) {
    const int row = sys.free_nodes[r];
    double b = rhs[row];
    for (SparseMatrix::InnerIterator it(matrix, row); it; ++it) {
      const int c = reduced_index[it.col()];
      if (c >= 0) {
        triplets.emplace_back(r, c, it.value());
      } else if (has_values) {
        b -= it.value() * boundary_values[it.col()];
      }
    }
    sys.rhs[r] = b;
  }
  sys.matrix.resize(m, m);
  sys.matrix.setFromTriplets(triplets.begin(), triplets.end());
  sys.matrix.makeCompressed();
  return sys;
}

Vector extend_from_free(const DirichletSystem& system, const Vector& reduced, int num_nodes) {
  Vector full = Vector::Zero(num_nodes);
  for (size_t k = 0; k < system.free_nodes.size(); ++k) full[system.free_nodes[k]] = reduced[k];
  return full;
}

SparseMatrix interpolation_matrix(const Mesh& source, std::span<const Point> points) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(3 * points.size());
  for (size_t r = 0; r < points.size(); ++r) {
    const auto loc = source.locate(points[r]);
    const auto& t = source.elements()[loc.element];
    for (int k = 0; k < 3; ++k) {
      if (loc.barycentric[k] != 0.0) triplets.emplace_back(static_cast<int>(r), t[k], loc.barycentric[k]);
    }
  }
  SparseMatrix p(static_cast<int>(points.size()), source.num_nodes());
  p.setFromTriplets(triplets.begin(), triplets.end());
  p.makeCompressed();
  return p;
}

FeFunction interpolate_between_meshes(const FeFunction& f, MeshPtr target) {
  if (f.mesh->n() == target->n()) return FeFunction(std::move(target), f.values);
  const SparseMatrix p = interpolation_matrix(*f.mesh, target->nodes());
  return FeFunction(std::move(target), p * f.values);
}

double l2_inner(const SparseMatrix& mass, const Vector& f, const Vector& g) {
  if (mass.rows() != f.size() || mass.cols() != g.size()) throw InvalidArgument("l2_inner: size mismatch");
  // Symmetrized per entry so that swapping f and g reproduces every rounding step.
  double total = 0.0;
  for (int r = 0; r < mass.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(mass, r); it; ++it) {
      total += 0.5 * it.value() * (f[r] * g[it.col()] + f[it.col()] * g[r]);
    }
  }
  return total;
}

void write_grid(const std::string& path, const FeFunction& f, const std::string& field_name) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "n " << f.mesh->n() << "\n";
  out << "field " << field_name << "\n";
  out << std::setprecision(17);
  for (int i = 0; i < f.values.size(); ++i) out << f.values[i] << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

FeFunction read_grid(const std::string& path, std::string* field_name) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string key;
  int n = 0;
  std::string name;
  in >> key >> n;
  if (key != "n") throw std::runtime_error(path + ": expected 'n' header");
  in >> key;
  if (key != "field") throw std::runtime_error(path + ": expected 'field' header");
  std::getline(in >> std::ws, name);
  auto mesh = build_unit_square_mesh(n);
  Vector values(mesh->num_nodes());
  for (int i = 0; i < values.size(); ++i) {
    if (!(in >> values[i])) throw std::runtime_error(path + ": truncated grid data");
  }
  if (field_name) *field_name = name;
  return FeFunction(mesh, std::move(values));
}

}  // namespace asi
