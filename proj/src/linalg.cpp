#include "asi/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace asi {

CgResult cg_solve(const SparseMatrix& a, const Vector& b, const CgOptions& options) {
  if (a.rows() != a.cols() || a.rows() != b.size()) throw InvalidArgument("cg_solve: dimension mismatch");
  if (!(options.tol > 0.0 && options.tol < 1.0)) throw InvalidArgument("cg_solve: tol must lie in (0,1)");

  CgResult result;
  result.x = Vector::Zero(b.size());
  const double bnorm = b.norm();
  if (bnorm == 0.0) return result;

  Vector inv_diag = Vector::Ones(b.size());
  if (options.preconditioner == Preconditioner::kJacobi) {
    inv_diag = a.diagonal().cwiseInverse();
    if (!inv_diag.allFinite()) throw InvalidArgument("cg_solve: zero diagonal entry with Jacobi preconditioner");
  }

  Vector r = b;
  Vector z = inv_diag.cwiseProduct(r);
  Vector p = z;
  double rz = r.dot(z);
  Vector ap(b.size());
  for (int it = 1; it <= options.max_iter; ++it) {
    ap.noalias() = a * p;
    const double alpha = rz / p.dot(ap);
    result.x.noalias() += alpha * p;
    r.noalias() -= alpha * ap;
    const double rel = r.norm() / bnorm;
    if (rel <= options.tol) {
      // Recompute the true residual so the returned value honors the contract.
      const double true_rel = (b - a * result.x).norm() / bnorm;
      if (true_rel <= options.tol) {
        result.iterations = it;
        result.relative_residual = true_rel;
        return result;
      }
      r = b - a * result.x;
    }
    z = inv_diag.cwiseProduct(r);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  const double final_rel = (b - a * result.x).norm() / bnorm;
  throw NoConvergence("cg_solve: no convergence after " + std::to_string(options.max_iter) +
                          " iterations, relative residual " + std::to_string(final_rel),
                      final_rel);
}

void fix_signs(Matrix& columns) {
  for (int j = 0; j < columns.cols(); ++j) {
    Eigen::Index idx = 0;
    columns.col(j).cwiseAbs().maxCoeff(&idx);
    if (columns(idx, j) < 0.0) columns.col(j) *= -1.0;
  }
}

double gram_deviation(const Matrix& basis, const SparseMatrix& m) {
  if (basis.cols() == 0) return 0.0;
  const Matrix mb = m * basis;
  const Matrix gram = basis.transpose() * mb;
  return (gram - Matrix::Identity(basis.cols(), basis.cols())).cwiseAbs().maxCoeff();
}

Matrix mgs_extend(const Matrix& seed, const Matrix& candidates, const SparseMatrix& m, double drop_tol,
                  std::vector<int>* accepted) {
  if (!(drop_tol > 0.0 && drop_tol < 1.0)) throw InvalidArgument("mgs: drop_tol must lie in (0,1)");
  const Eigen::Index n = m.rows();
  if ((seed.cols() > 0 && seed.rows() != n) || (candidates.cols() > 0 && candidates.rows() != n)) {
    throw InvalidArgument("mgs: vector length does not match mass matrix");
  }
  Matrix q(n, seed.cols() + candidates.cols());
  Matrix mq(n, q.cols());
  Eigen::Index count = seed.cols();
  if (count > 0) {
    q.leftCols(count) = seed;
    mq.leftCols(count) = m * seed;
  }
  if (accepted) accepted->clear();

  Vector w(n);
  Vector mw(n);
  for (Eigen::Index c = 0; c < candidates.cols(); ++c) {
    w = candidates.col(c);
    mw.noalias() = m * w;
    const double norm0 = std::sqrt(std::max(w.dot(mw), 0.0));
    if (norm0 == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index j = 0; j < count; ++j) {
        const double coef = mq.col(j).dot(w);
        w.noalias() -= coef * q.col(j);
      }
    }
    mw.noalias() = m * w;
    const double norm = std::sqrt(std::max(w.dot(mw), 0.0));
    if (norm < drop_tol * norm0) continue;
    q.col(count) = w / norm;
    mq.col(count) = mw / norm;
    ++count;
    if (accepted) accepted->push_back(static_cast<int>(c));
  }
  return q.leftCols(count);
}

Matrix mgs_orthonormalize(const Matrix& vectors, const SparseMatrix& m, double drop_tol, std::vector<int>* accepted) {
  return mgs_extend(Matrix(m.rows(), 0), vectors, m, drop_tol, accepted);
}

namespace {

// Deterministic uniform draws in [-1, 1] from the top 53 bits of mt19937_64.
Matrix random_block(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& gen) {
  Matrix z(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      z(i, j) = 2.0 * static_cast<double>(gen() >> 11) * 0x1.0p-53 - 1.0;
    }
  }
  return z;
}

struct BlockOrthResult {
  Matrix columns;  // new M-orthonormal columns
  Matrix coupling;  // columns = remainder expressed as columns * coupling
};

// Orthogonalizes z against q (first `count` columns, M-orthonormal) with two
// classical passes, then orthonormalizes inside the block with MGS.
BlockOrthResult orthogonalize_block(const Matrix& q, Eigen::Index count, Matrix z, const SparseMatrix& m) {
  const Eigen::Index b = z.cols();
  Vector norms0(b);
  {
    const Matrix mz = m * z;
    for (Eigen::Index j = 0; j < b; ++j) norms0[j] = std::sqrt(std::max(z.col(j).dot(mz.col(j)), 0.0));
  }
  for (int pass = 0; pass < 2 && count > 0; ++pass) {
    const Matrix mz = m * z;
    const Matrix coef = q.leftCols(count).transpose() * mz;
    z.noalias() -= q.leftCols(count) * coef;
  }
  BlockOrthResult out;
  out.columns.resize(z.rows(), b);
  out.coupling = Matrix::Zero(b, b);
  Matrix mcols(z.rows(), b);
  Eigen::Index accepted = 0;
  for (Eigen::Index j = 0; j < b; ++j) {
    Vector w = z.col(j);
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index i = 0; i < accepted; ++i) {
        const double c = mcols.col(i).dot(w);
        w.noalias() -= c * out.columns.col(i);
        out.coupling(i, j) += c;
      }
    }
    const Vector mw = m * w;
    const double norm = std::sqrt(std::max(w.dot(mw), 0.0));
    if (norm <= 1e-12 * std::max(norms0[j], 1e-300)) continue;
    out.columns.col(accepted) = w / norm;
    mcols.col(accepted) = mw / norm;
    out.coupling(accepted, j) = norm;
    ++accepted;
  }
  out.columns.conservativeResize(Eigen::NoChange, accepted);
  out.coupling.conservativeResize(accepted, Eigen::NoChange);
  return out;
}

}  // namespace

EigPairs smallest_eigpairs(const SparseMatrix& a, const SparseMatrix& m, int k, const EigOptions& options) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || m.rows() != n || m.cols() != n) throw InvalidArgument("smallest_eigpairs: size mismatch");
  if (k < 1 || k > n) {
    throw InvalidArgument("smallest_eigpairs: requested " + std::to_string(k) + " eigenpairs of a pencil of size " +
                          std::to_string(n));
  }
  if (!(options.tol > 0.0)) throw InvalidArgument("smallest_eigpairs: tol must be positive");

  using ColMatrix = Eigen::SparseMatrix<double>;
  const ColMatrix acol = a;
  const ColMatrix mcol = m;
  Eigen::SimplicialLLT<ColMatrix> factor;
  double shift = 0.0;
  factor.compute(acol);
  if (factor.info() != Eigen::Success) {
    // Semidefinite A: move the pole slightly below zero.
    shift = -1e-6 * std::abs(a.diagonal().sum() / m.diagonal().sum());
    factor.compute(acol - shift * mcol);
    if (factor.info() != Eigen::Success) {
      throw NoConvergence("smallest_eigpairs: factorization of the shifted operator failed", 0.0);
    }
  }
  auto apply_op = [&](const Matrix& x) -> Matrix { return factor.solve(mcol * x); };

  const Eigen::Index block = std::min<Eigen::Index>(std::max(options.block_size, 1), n);
  const Eigen::Index requested = options.max_basis > 0 ? options.max_basis : std::max(6 * k + 40, 200);
  const Eigen::Index max_basis = std::min<Eigen::Index>(n, std::max<Eigen::Index>(requested, k + block));
  std::mt19937_64 gen(options.seed);

  Matrix q(n, std::min<Eigen::Index>(max_basis, 2 * k + 2 * block));
  Matrix t = Matrix::Zero(q.cols(), q.cols());
  Eigen::Index basis = 0;     // M-orthonormal columns in q
  Eigen::Index processed = 0;  // columns whose operator image entered t

  auto append = [&](const Matrix& cols) {
    const Eigen::Index add = std::min<Eigen::Index>(cols.cols(), max_basis - basis);
    if (basis + add > q.cols()) {
      const Eigen::Index cap = std::min<Eigen::Index>(max_basis, std::max(basis + add, 2 * q.cols()));
      q.conservativeResize(Eigen::NoChange, cap);
      Matrix grown = Matrix::Zero(cap, cap);
      grown.topLeftCorner(t.rows(), t.cols()) = t;
      t.swap(grown);
    }
    q.middleCols(basis, add) = cols.leftCols(add);
    basis += add;
  };

  append(orthogonalize_block(q, 0, random_block(n, block, gen), m).columns);

  Matrix last_coupling;
  Eigen::Index last_block_start = 0;
  Eigen::Index next_check = k;
  Eigen::SelfAdjointEigenSolver<Matrix> ritz;
  Eigen::Index ritz_size = -1;
  double worst = 0.0;

  while (true) {
    if (processed == basis) {
      if (basis == n) break;  // whole space spanned: Rayleigh-Ritz is exact
      auto fresh = orthogonalize_block(q, basis, random_block(n, block, gen), m);
      if (fresh.columns.cols() == 0) break;
      append(fresh.columns);
      continue;
    }
    const Eigen::Index start = processed;
    const Eigen::Index width = basis - processed;
    const Matrix images = apply_op(q.middleCols(start, width));
    const Matrix m_images = mcol * images;
    t.block(0, start, basis, width) = q.leftCols(basis).transpose() * m_images;
    t.block(start, 0, width, start) = t.block(0, start, start, width).transpose();
    const Matrix diag = t.block(start, start, width, width);
    t.block(start, start, width, width) = 0.5 * (diag + diag.transpose());
    processed = basis;

    auto next = orthogonalize_block(q, basis, images, m);
    last_coupling = next.coupling;
    last_block_start = start;
    if (basis < max_basis) append(next.columns);

    const bool exhausted = processed == n;
    const bool at_limit = processed >= max_basis;
    if (processed < k || (processed < next_check && !exhausted && !at_limit)) continue;
    next_check = processed + std::max<Eigen::Index>(block, processed / 8);

    ritz.compute(t.topLeftCorner(processed, processed));
    ritz_size = processed;
    if (ritz.info() != Eigen::Success) throw NoConvergence("smallest_eigpairs: Rayleigh-Ritz failed", 0.0);
    // Largest theta = smallest lambda; SelfAdjointEigenSolver sorts ascending.
    worst = 0.0;
    bool converged = true;
    for (int i = 0; i < k; ++i) {
      const Eigen::Index col = processed - 1 - i;
      const double theta = ritz.eigenvalues()[col];
      double estimate = 0.0;
      if (!exhausted && last_coupling.rows() > 0) {
        const Vector tail = ritz.eigenvectors().col(col).segment(last_block_start, processed - last_block_start);
        estimate = (last_coupling * tail).norm();
      }
      const double rel = theta > 0.0 ? estimate / theta : std::numeric_limits<double>::infinity();
      worst = std::max(worst, rel);
      if (rel > options.tol) converged = false;
    }
    if (converged || exhausted) break;
    if (at_limit) {
      throw NoConvergence("smallest_eigpairs: " + std::to_string(k) + " eigenpairs not converged within a basis of " +
                              std::to_string(max_basis) + " (worst relative residual " + std::to_string(worst) + ")",
                          worst);
    }
  }

  if (processed < k) throw NoConvergence("smallest_eigpairs: Krylov space smaller than requested count", 0.0);
  if (ritz_size != processed) ritz.compute(t.topLeftCorner(processed, processed));

  EigPairs out;
  out.eigenvalues.resize(k);
  Matrix coords(processed, k);
  for (int i = 0; i < k; ++i) {
    const Eigen::Index col = processed - 1 - i;
    out.eigenvalues[i] = shift + 1.0 / ritz.eigenvalues()[col];
    coords.col(i) = ritz.eigenvectors().col(col);
  }
  out.eigenvectors = q.leftCols(processed) * coords;
  // Inverse iteration on the whole block, then Rayleigh-Ritz through the
  // inverse operator. Damps the round-off that Lanczos leaves in directions
  // with very large eigenvalues.
  for (int step = 0; step < options.refine_steps; ++step) {
    const Matrix y = apply_op(out.eigenvectors);
    const Eigen::LLT<Matrix> gram(y.transpose() * (mcol * y));
    if (gram.info() != Eigen::Success) break;
    const Matrix basis_y = gram.matrixU().solve<Eigen::OnTheRight>(y);
    const Matrix small = basis_y.transpose() * (mcol * apply_op(basis_y));
    const Eigen::SelfAdjointEigenSolver<Matrix> rr(0.5 * (small + small.transpose()));
    if (rr.info() != Eigen::Success || rr.eigenvalues()[0] <= 0.0) break;
    for (int i = 0; i < k; ++i) {
      out.eigenvalues[i] = shift + 1.0 / rr.eigenvalues()[k - 1 - i];
      out.eigenvectors.col(i) = basis_y * rr.eigenvectors().col(k - 1 - i);
    }
  }
  const Matrix mx = m * out.eigenvectors;
  for (int i = 0; i < k; ++i) {
    out.eigenvectors.col(i) /= std::sqrt(out.eigenvectors.col(i).dot(mx.col(i)));
  }
  fix_signs(out.eigenvectors);
  return out;
}

}  // namespace asi
