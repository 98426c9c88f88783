#pragma once

#include <cstdint>
#include <vector>

#include "asi/common.hpp"

namespace asi {

enum class Preconditioner { kNone, kJacobi };

struct CgOptions {
  double tol = 1e-10;  // relative residual ||Ax-b|| <= tol ||b||
  int max_iter = 10000;
  Preconditioner preconditioner = Preconditioner::kJacobi;
};

struct CgResult {
  Vector x;
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Preconditioned conjugate gradients for SPD systems. Throws NoConvergence
/// (carrying the final relative residual) when max_iter is exhausted.
CgResult cg_solve(const SparseMatrix& a, const Vector& b, const CgOptions& options = {});

/// Eigenpairs of the pencil (A, M): eigenvalues ascending, eigenvectors as
/// M-orthonormal columns.
struct EigPairs {
  Vector eigenvalues;
  Matrix eigenvectors;
};

struct EigOptions {
  double tol = 1e-8;
  int block_size = 8;
  /// Upper bound on the Krylov basis size; 0 picks max(6K + 40, 200).
  int max_basis = 0;
  std::uint64_t seed = 0x5eed;
  /// Block inverse-iteration sweeps applied to the converged Ritz vectors.
  int refine_steps = 1;
};

/// K algebraically smallest eigenpairs of A x = lambda M x for symmetric A and
/// SPD M. Shift-invert (shift 0) block Lanczos with full M-reorthogonalization
/// and Rayleigh-Ritz on the accumulated Krylov basis. Each eigenvector is
/// normalized in the M-norm with its largest-magnitude entry positive.
EigPairs smallest_eigpairs(const SparseMatrix& a, const SparseMatrix& m, int k, const EigOptions& options = {});

/// Modified Gram-Schmidt (two passes) in the M-inner product over the columns
/// of `vectors`. A column is dropped when its remainder after orthogonalization
/// has M-norm below drop_tol times its original M-norm. Returns the accepted
/// columns in order of first appearance.
Matrix mgs_orthonormalize(const Matrix& vectors, const SparseMatrix& m, double drop_tol = 1e-8,
                          std::vector<int>* accepted = nullptr);

/// Same as above, but the first `seed.cols()` columns are taken as an already
/// M-orthonormal prefix (with precomputed M*seed) and are kept unchanged.
Matrix mgs_extend(const Matrix& seed, const Matrix& candidates, const SparseMatrix& m, double drop_tol,
                  std::vector<int>* accepted = nullptr);

/// Max-norm deviation of the M-Gram matrix of the columns from identity.
double gram_deviation(const Matrix& basis, const SparseMatrix& m);

/// Makes each column's largest-magnitude entry positive.
void fix_signs(Matrix& columns);

}  // namespace asi
