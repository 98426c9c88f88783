#include "asi/data_gen.hpp"

#include <cmath>

#include "asi/rng.hpp"

namespace asi {

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 == 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * 3.14159265358979323846 * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

int data_mesh_size(int n, double factor) {
  if (!(factor >= 1.0)) throw InvalidArgument("data mesh factor must be at least 1");
  const int fine = static_cast<int>(std::lround(factor * n));
  if (factor != 1.0 && fine == n) throw InvalidArgument("data mesh coincides with the inversion mesh");
  return fine;
}

EllipticData gen_noisy_elliptic(const PhantomSpec& spec, double delta_hat, double fine_factor, std::uint64_t seed,
                                int n, double source) {
  if (!(delta_hat >= 0.0)) throw InvalidArgument("noise level must be nonnegative");
  const int n_fine = data_mesh_size(n, fine_factor);
  auto fine = make_space(n_fine);
  auto coarse = make_space(n);

  EllipticData out;
  out.n_fine = n_fine;
  out.delta_hat = delta_hat;
  out.truth = phantom(spec, coarse->mesh_ptr());
  const FeFunction u_fine = phantom(spec, fine->mesh_ptr());
  const auto problem = EllipticProblem::with_constant_source(fine, source);
  const FeFunction y_fine(fine->mesh_ptr(), solve_forward(u_fine.values, problem));
  out.clean = interpolate_between_meshes(y_fine, coarse->mesh_ptr());

  Vector noisy = out.clean.values;
  if (delta_hat > 0.0) {
    Rng rng(seed);
    // Interior nodes only: observations stay in the zero-trace space.
    Vector eta = Vector::Zero(noisy.size());
    for (int j : coarse->mesh().interior_nodes()) eta[j] = rng.normal();
    out.delta_abs = delta_hat * coarse->norm(out.clean.values);
    noisy += (out.delta_abs / coarse->norm(eta)) * eta;
  }
  out.observed = FeFunction(coarse->mesh_ptr(), std::move(noisy));
  return out;
}

TimeGrid wave_time_grid(const WaveConfig& config, int n_fine) {
  const double dt_max = config.dt > 0.0 ? config.dt : cfl_time_step(1.0 / n_fine, config.max_medium);
  return make_time_grid(config.final_time, dt_max);
}

std::vector<Vector> wave_sources(const Mesh& mesh, const WaveConfig& config) {
  std::vector<Vector> out;
  for (const Point& p : boundary_source_positions(config.num_sources, config.source_inset))
    out.push_back(gaussian_source(mesh, p, config.kappa, config.width));
  return out;
}

Traces transfer_traces(const Mesh& from, const Mesh& to, const Traces& traces) {
  if (traces.rows() != from.num_boundary()) throw InvalidArgument("transfer_traces: row count mismatch");
  std::vector<Point> points;
  for (int k : to.boundary_nodes()) points.push_back(to.nodes()[k]);
  const SparseMatrix interp = interpolation_matrix(from, points);
  std::vector<int> row_of(from.num_nodes(), -1);
  for (int b = 0; b < from.num_boundary(); ++b) row_of[from.boundary_nodes()[b]] = b;
  Matrix weights = Matrix::Zero(points.size(), from.num_boundary());
  for (int i = 0; i < interp.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(interp, i); it; ++it) {
      if (row_of[it.col()] >= 0) {
        weights(i, row_of[it.col()]) += it.value();
      } else if (std::abs(it.value()) > 1e-12) {
        throw InvalidArgument("transfer_traces: boundary point depends on an interior node");
      }
    }
  return weights * traces;
}

double trace_norm_squared(const Mesh& mesh, const TimeGrid& grid, const Traces& t) {
  return 2.0 * trace_misfit(mesh, grid, t, Traces::Zero(t.rows(), t.cols()));
}

WaveData gen_noisy_wave(const PhantomSpec& spec, double delta_hat, const WaveConfig& config, std::uint64_t seed,
                        int n, double fine_factor) {
  if (!(delta_hat >= 0.0)) throw InvalidArgument("noise level must be nonnegative");
  const int n_fine = data_mesh_size(n, fine_factor);
  auto fine = make_space(n_fine);
  auto coarse = make_space(n);

  WaveData out;
  out.n_fine = n_fine;
  out.delta_hat = delta_hat;
  out.truth = phantom(spec, coarse->mesh_ptr());
  out.grid = wave_time_grid(config, n_fine);
  const FeFunction u_fine = phantom(spec, fine->mesh_ptr());
  for (const Vector& g : wave_sources(fine->mesh(), config)) {
    const WaveSolution sol = solve_wave(*fine, u_fine.values, g, config.nu, out.grid);
    out.clean.push_back(transfer_traces(fine->mesh(), coarse->mesh(), sol.traces));
  }

  Rng rng(seed);
  double noise2 = 0.0, data2 = 0.0;
  for (const Traces& y : out.clean) {
    Traces noisy = y;
    if (delta_hat > 0.0) {
      for (Eigen::Index t = 0; t < noisy.cols(); ++t)
        for (Eigen::Index j = 0; j < noisy.rows(); ++j) noisy(j, t) *= 1.0 + delta_hat * rng.normal();
    }
    noise2 += trace_norm_squared(coarse->mesh(), out.grid, noisy - y);
    data2 += trace_norm_squared(coarse->mesh(), out.grid, y);
    out.observed.push_back(std::move(noisy));
  }
  out.delta_abs = std::sqrt(noise2);
  out.delta_rel = data2 > 0.0 ? out.delta_abs / std::sqrt(data2) : 0.0;
  return out;
}

}  // namespace asi
