#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "asi/fe_space.hpp"
#include "asi/mesh_fe.hpp"

using namespace asi;

namespace {

Matrix dense(const SparseMatrix& a) { return Matrix(a); }

Vector sample(const Mesh& mesh, double (*f)(double, double)) {
  Vector v(mesh.num_nodes());
  for (int k = 0; k < mesh.num_nodes(); ++k) v[k] = f(mesh.nodes()[k].x, mesh.nodes()[k].y);
  return v;
}

double sinsin(double x, double y) { return std::sin(std::numbers::pi * x) * std::sin(std::numbers::pi * y); }

// Independent hand assembly: loops cells directly, no Mesh element list.
Matrix hand_assembly(int n, bool stiffness) {
  const double h = 1.0 / n;
  const int nn = (n + 1) * (n + 1);
  Matrix out = Matrix::Zero(nn, nn);
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      const int tris[2][3] = {{a, b, c}, {a, c, d}};
      for (const auto& t : tris) {
        double px[3], py[3];
        for (int k = 0; k < 3; ++k) {
          px[k] = (t[k] % (n + 1)) * h;
          py[k] = (t[k] / (n + 1)) * h;
        }
        const double det = (px[1] - px[0]) * (py[2] - py[0]) - (px[2] - px[0]) * (py[1] - py[0]);
        const double area = 0.5 * std::abs(det);
        Eigen::Matrix3d local;
        if (stiffness) {
          Eigen::Matrix3d p;
          p << 1, px[0], py[0], 1, px[1], py[1], 1, px[2], py[2];
          const Eigen::Matrix3d coef = p.inverse();  // column k: coefficients of hat k
          Eigen::Matrix<double, 2, 3> g = coef.bottomRows<2>();
          local = area * g.transpose() * g;
        } else {
          local << 2, 1, 1, 1, 2, 1, 1, 1, 2;
          local *= area / 12.0;
        }
        for (int r = 0; r < 3; ++r)
          for (int s = 0; s < 3; ++s) out(t[r], t[s]) += local(r, s);
      }
    }
  }
  return out;
}

}  // namespace

TEST(Mesh, CountsForN2) {
  const auto m = build_unit_square_mesh(2);
  EXPECT_EQ(m->num_nodes(), 9);
  EXPECT_EQ(m->num_elements(), 8);
  EXPECT_DOUBLE_EQ(m->h(), 0.5);
  EXPECT_EQ(m->num_interior(), 1);
}

TEST(Mesh, LargeNodeCount) {
  const auto m = build_unit_square_mesh(400);
  EXPECT_EQ(m->num_nodes(), 160801);
}

TEST(Mesh, BoundaryCount) {
  const auto m = build_unit_square_mesh(10);
  int count = 0;
  for (int k = 0; k < m->num_nodes(); ++k) {
    const auto p = m->nodes()[k];
    const bool on = p.x == 0.0 || p.x == 1.0 || p.y == 0.0 || p.y == 1.0;
    EXPECT_EQ(on, static_cast<bool>(m->boundary_mask()[k]));
    count += on;
  }
  EXPECT_EQ(count, 40);
  EXPECT_EQ(m->num_boundary(), 40);
}

TEST(Mesh, RejectsSmallN) {
  EXPECT_THROW(build_unit_square_mesh(1), InvalidArgument);
  EXPECT_THROW(build_unit_square_mesh(0), InvalidArgument);
}

TEST(Mesh, ElementInvariants) {
  const int n = 6;
  const auto m = build_unit_square_mesh(n);
  std::map<std::pair<int, int>, int> edges;
  for (const auto& t : m->elements()) {
    const auto& p = m->nodes();
    for (int k : t) {
      ASSERT_GE(k, 0);
      ASSERT_LT(k, m->num_nodes());
    }
    const double det = (p[t[1]].x - p[t[0]].x) * (p[t[2]].y - p[t[0]].y) -
                       (p[t[2]].x - p[t[0]].x) * (p[t[1]].y - p[t[0]].y);
    EXPECT_NEAR(0.5 * det, 1.0 / (2.0 * n * n), 1e-15);
    for (int k = 0; k < 3; ++k) {
      const int a = t[k], b = t[(k + 1) % 3];
      edges[{std::min(a, b), std::max(a, b)}]++;
    }
  }
  for (const auto& [e, c] : edges) {
    const bool bnd = m->boundary_mask()[e.first] && m->boundary_mask()[e.second] &&
                     (m->nodes()[e.first].x == m->nodes()[e.second].x ||
                      m->nodes()[e.first].y == m->nodes()[e.second].y) &&
                     ((m->nodes()[e.first].x == m->nodes()[e.second].x &&
                       (m->nodes()[e.first].x == 0.0 || m->nodes()[e.first].x == 1.0)) ||
                      (m->nodes()[e.first].y == m->nodes()[e.second].y &&
                       (m->nodes()[e.first].y == 0.0 || m->nodes()[e.first].y == 1.0)));
    EXPECT_EQ(c, bnd ? 1 : 2);
  }
}

TEST(Mass, TotalIsOne) {
  for (int n : {2, 5, 17}) {
    const auto m = build_unit_square_mesh(n);
    EXPECT_NEAR(assemble_mass(*m, false).sum(), 1.0, 1e-12);
    EXPECT_NEAR(assemble_mass(*m, true).sum(), 1.0, 1e-12);
  }
}

TEST(Mass, MatchesHandAssemblyN2) {
  const auto m = build_unit_square_mesh(2);
  EXPECT_LE((dense(assemble_mass(*m, false)) - hand_assembly(2, false)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Mass, LumpedRowSums) {
  const auto m = build_unit_square_mesh(7);
  const Matrix c = dense(assemble_mass(*m, false));
  const Matrix l = dense(assemble_mass(*m, true));
  EXPECT_LE((c.rowwise().sum() - l.rowwise().sum()).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LE((l - Matrix(l.diagonal().asDiagonal())).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Stiffness, ConstantsInNullspace) {
  const auto m = build_unit_square_mesh(9);
  std::vector<double> w(m->num_elements(), 1.0);
  const SparseMatrix a = assemble_weighted_stiffness(*m, w);
  EXPECT_LE((a * Vector::Ones(m->num_nodes())).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Stiffness, MatchesHandAssemblyN2) {
  const auto m = build_unit_square_mesh(2);
  std::vector<double> w(m->num_elements(), 1.0);
  const Matrix a = dense(assemble_weighted_stiffness(*m, w));
  EXPECT_LE((a - hand_assembly(2, true)).cwiseAbs().maxCoeff(), 1e-14);
  // Centre node couples to its 4 axis neighbours only, 5-point stencil.
  EXPECT_NEAR(a(4, 4), 4.0, 1e-14);
  EXPECT_NEAR(a(4, 1), -1.0, 1e-14);
  EXPECT_NEAR(a(4, 0), 0.0, 1e-14);
  EXPECT_NEAR(a(4, 8), 0.0, 1e-14);
}

TEST(Stiffness, LinearInWeights) {
  const auto m = build_unit_square_mesh(5);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(0.1, 2.0);
  std::vector<double> w(m->num_elements()), cw(m->num_elements());
  for (size_t k = 0; k < w.size(); ++k) {
    w[k] = d(rng);
    cw[k] = 3.5 * w[k];
  }
  const Matrix a = dense(assemble_weighted_stiffness(*m, w));
  const Matrix b = dense(assemble_weighted_stiffness(*m, cw));
  EXPECT_LE((3.5 * a - b).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_EQ((a - a.transpose()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Stiffness, RejectsNonpositiveWeight) {
  const auto m = build_unit_square_mesh(3);
  std::vector<double> w(m->num_elements(), 1.0);
  w[4] = 0.0;
  EXPECT_THROW(assemble_weighted_stiffness(*m, w), InvalidArgument);
  w[4] = -1.0;
  EXPECT_THROW(assemble_weighted_stiffness(*m, w), InvalidArgument);
}

TEST(Stiffness, AssemblerMatchesDirect) {
  const auto m = build_unit_square_mesh(6);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(0.1, 2.0);
  std::vector<double> w(m->num_elements());
  for (auto& x : w) x = d(rng);
  const SparseMatrix direct = assemble_weighted_stiffness(*m, w);
  StiffnessAssembler full(m, false), inner(m, true);
  EXPECT_LE((dense(full.assemble(w)) - dense(direct)).cwiseAbs().maxCoeff(), 1e-14);
  const auto red = apply_dirichlet(direct, Vector::Zero(m->num_nodes()), m->boundary_mask());
  EXPECT_LE((dense(inner.assemble(w)) - dense(red.matrix)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Stiffness, ReducedIsPositiveDefinite) {
  for (int n : {3, 8}) {
    const auto m = build_unit_square_mesh(n);
    std::vector<double> w(m->num_elements(), 0.7);
    const auto red = apply_dirichlet(assemble_weighted_stiffness(*m, w), Vector::Zero(m->num_nodes()),
                                     m->boundary_mask());
    Eigen::SelfAdjointEigenSolver<Matrix> es(dense(red.matrix));
    EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
  }
}

TEST(Dirichlet, N2HasOneUnknown) {
  const auto m = build_unit_square_mesh(2);
  std::vector<double> w(m->num_elements(), 1.0);
  const auto red = apply_dirichlet(assemble_weighted_stiffness(*m, w), Vector::Ones(9), m->boundary_mask());
  EXPECT_EQ(red.matrix.rows(), 1);
  EXPECT_EQ(red.free_nodes, std::vector<int>{4});
}

TEST(Dirichlet, MatchesConstrainedDenseSolve) {
  const int n = 4;
  const auto m = build_unit_square_mesh(n);
  std::vector<double> w(m->num_elements(), 1.0);
  const SparseMatrix a = assemble_weighted_stiffness(*m, w);
  const Vector f = assemble_mass(*m, false) * Vector::Constant(m->num_nodes(), 3.0);
  Vector g(m->num_nodes());
  for (int k = 0; k < m->num_nodes(); ++k) g[k] = m->nodes()[k].x + 2.0 * m->nodes()[k].y;
  Vector gb = Vector::Zero(m->num_nodes());
  for (int k : m->boundary_nodes()) gb[k] = g[k];

  const auto red = apply_dirichlet(a, f, m->boundary_mask(), gb);
  EXPECT_EQ((dense(red.matrix) - dense(red.matrix).transpose()).cwiseAbs().maxCoeff(), 0.0);
  const Vector xr = dense(red.matrix).ldlt().solve(red.rhs);
  Vector x = extend_from_free(red, xr, m->num_nodes());
  for (int k : m->boundary_nodes()) x[k] = gb[k];

  // Oracle: row replacement with unit diagonal in the full dense system.
  Matrix full = dense(a);
  Vector rhs = f;
  for (int k : m->boundary_nodes()) {
    full.row(k).setZero();
    full(k, k) = 1.0;
    rhs[k] = gb[k];
  }
  const Vector xo = full.lu().solve(rhs);
  EXPECT_LE((x - xo).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Interpolation, ReproducesLinear) {
  const auto a = build_unit_square_mesh(7);
  const auto b = build_unit_square_mesh(11);
  FeFunction f(a, sample(*a, [](double x, double) { return x; }));
  const auto g = interpolate_between_meshes(f, b);
  for (int k = 0; k < b->num_nodes(); ++k) EXPECT_NEAR(g.values[k], b->nodes()[k].x, 1e-14);
  FeFunction f2(a, sample(*a, [](double x, double y) { return 2.0 - x + 3.0 * y; }));
  const auto g2 = interpolate_between_meshes(f2, b);
  for (int k = 0; k < b->num_nodes(); ++k)
    EXPECT_NEAR(g2.values[k], 2.0 - b->nodes()[k].x + 3.0 * b->nodes()[k].y, 1e-13);
}

TEST(Interpolation, SameMeshIsIdentity) {
  const auto a = build_unit_square_mesh(9);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> d;
  Vector v(a->num_nodes());
  for (auto& x : v) x = d(rng);
  const auto g = interpolate_between_meshes(FeFunction(a, v), build_unit_square_mesh(9));
  EXPECT_LE((g.values - v).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Interpolation, SmoothFieldSecondOrder) {
  const auto a = build_unit_square_mesh(480);
  const auto b = build_unit_square_mesh(400);
  const auto g = interpolate_between_meshes(FeFunction(a, sample(*a, sinsin)), b);
  EXPECT_LE((g.values - sample(*b, sinsin)).cwiseAbs().maxCoeff(), 5e-5);
}

TEST(L2Inner, UnitArea) {
  for (int n : {2, 13}) {
    const auto m = build_unit_square_mesh(n);
    const Vector one = Vector::Ones(m->num_nodes());
    EXPECT_NEAR(l2_inner(assemble_mass(*m, false), one, one), 1.0, 1e-12);
  }
}

TEST(L2Inner, ExactlySymmetric) {
  const auto m = build_unit_square_mesh(10);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> d;
  Vector f(m->num_nodes()), g(m->num_nodes());
  for (auto& x : f) x = d(rng);
  for (auto& x : g) x = d(rng);
  const SparseMatrix mm = assemble_mass(*m, false);
  EXPECT_EQ(l2_inner(mm, f, g), l2_inner(mm, g, f));
}

TEST(L2Inner, SineNorm) {
  const auto m = build_unit_square_mesh(100);
  const Vector f = sample(*m, sinsin);
  EXPECT_NEAR(l2_inner(assemble_mass(*m, false), f, f), 0.25, 1e-3);
}

TEST(FeFunction, ValidatesValues) {
  const auto m = build_unit_square_mesh(3);
  EXPECT_THROW(FeFunction(m, Vector::Zero(5)), InvalidArgument);
  Vector v = Vector::Zero(m->num_nodes());
  v[3] = std::nan("");
  EXPECT_THROW(FeFunction(m, v), InvalidArgument);
}

TEST(GridIo, RoundTrip) {
  const auto m = build_unit_square_mesh(5);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> d;
  Vector v(m->num_nodes());
  for (auto& x : v) x = d(rng);
  const std::string path = ::testing::TempDir() + "grid_roundtrip.txt";
  write_grid(path, FeFunction(m, v), "medium");
  std::string name;
  const auto g = read_grid(path, &name);
  EXPECT_EQ(name, "medium");
  EXPECT_EQ(g.mesh->n(), 5);
  EXPECT_LE((g.values - v).cwiseAbs().maxCoeff(), 1e-15);
  std::remove(path.c_str());
}

TEST(FeSpace, RieszInvertsMass) {
  const auto s = make_space(12);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> d;
  Vector g = Vector::Zero(s->num_nodes());
  for (int k : s->mesh().interior_nodes()) g[k] = d(rng);
  const Vector functional = s->mass() * g;
  EXPECT_LE((s->riesz(functional) - g).cwiseAbs().maxCoeff(), 1e-10);
}
