#pragma once

#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "asi/asdecomp.hpp"
#include "asi/forward_elliptic.hpp"
#include "asi/optimize.hpp"

namespace asi {

/// Search spaces share the Basis layout (M-orthonormal, zero on the boundary).
using SearchSpace = Basis;

struct AsiConfig {
  double eps_theta = 1e-4;
  double eps_psi0 = 0.05;
  double rho0 = 0.8;
  double rho1 = 1.2;
  double tau0 = 1.0;
  int k1 = 50;
  int m_max = 50;
  double eps = 1e-8;
  /// Step 10 on/off; off gives the ASI0 variant.
  bool enrich = true;
  /// AS basis size at iteration m is ceil(factor * K_m).
  double as_basis_size_factor = 1.0;
  double drop_tol = 1e-8;
  /// Stop on ||g|| <= this * ||g_0|| when delta = 0.
  double zero_noise_grad_tol = 1e-10;
  BfgsOptions inner{1e-6, 200, {}};
  EigOptions eig;

  void validate() const;
};

struct IterationRecord {
  int m = 0;
  int k = 0;  // dimension of the space the iterate was computed in
  double misfit = 0.0;
  double tau = 0.0;
  double grad_norm = 0.0;
  double rel_error = std::numeric_limits<double>::quiet_NaN();
  double eps_psi = 0.0;
  int n_inf = 0;
  int n_2 = 0;
  int n_theta = 0;
  int n_0 = 0;
  int k_merged = 0;
  int k_next = 0;
  int inner_iterations = 0;
  double angle_cos = std::numeric_limits<double>::quiet_NaN();
  bool monotone = true;  // relaxed misfit monotonicity against the previous record
  double wall_time = 0.0;
};

/// Fixed column order; wall_time is last.
std::string history_header();
std::string history_row(const IterationRecord& r);
void write_history(std::ostream& out, const std::vector<IterationRecord>& history);

/// Coordinates c map to u = background + sum c_k psi_k. Infeasible media
/// evaluate to +inf. The objective is the model's inner misfit for iteration m.
ObjectiveHandle reduced_objective(const MisfitModel& model, const SearchSpace& space, const Vector& background,
                                  int m = 0);

struct Sensitivity {
  int index = 0;  // column in the candidate basis
  double sigma = 0.0;
};

/// sigma_k = (grad, phi_k) sorted by |sigma| descending, ties in candidate order.
std::vector<Sensitivity> sensitivities(const FeSpace& space, const Vector& grad, const Basis& candidates);

struct NTheta {
  int n_inf = 0;
  int n_2 = 0;
  int n_theta = 0;
};

/// sigma must be sorted by magnitude, descending.
NTheta n_theta(const std::vector<double>& sigma, double grad_norm, double eps_theta);

struct AngleCheck {
  bool satisfied = false;
  double cos_theta = 0.0;
};

AngleCheck check_angle_condition(const FeSpace& space, const Vector& grad, const Vector& d, double eps_theta);

/// MGS over [current, as_functions]; current is kept verbatim.
SearchSpace merge_spaces(const FeSpace& space, const SearchSpace& current, const Basis& as_functions,
                         double drop_tol = 1e-8);

/// Coefficients of the TV-minimal indicator in the merged basis: minimizes
/// c^T S c subject to ||c - c_u|| <= r with S the mu-weighted stiffness in the
/// basis and c_u the coordinates of u_m.
Vector indicator_coefficients(const Matrix& s, const Vector& c_u, double r);

/// v in the merged space. `u_m` (the search-space component of the iterate)
/// must be representable in `merged`.
Vector compute_indicator(const FeSpace& space, const SearchSpace& merged, const Vector& u_m,
                         std::span<const double> weights, double eps_psi);

/// Smallest K >= 1 with sum_{k>K} gamma_k^2 <= eps^2 ||gamma||^2 for gamma
/// sorted by magnitude; 0 when gamma = 0.
int truncation_index(const std::vector<double>& gamma_sorted, double eps_psi);

struct GrowthDecision {
  int k = 0;
  double eps_psi = 0.0;
};

/// Rules (i)-(iii) on rho = n0 / k_m.
GrowthDecision growth_control(int n0, int k_m, double eps_psi, double rho0, double rho1);

struct Truncation {
  SearchSpace space;
  double eps_psi_next = 0.0;
  int n_0 = 0;
  double rho = 0.0;
};

Truncation truncate_space(const FeSpace& space, const SearchSpace& merged, const Vector& v, double eps_psi, int k_m,
                          double rho0, double rho1);

/// First K1 Dirichlet Laplace eigenfunctions.
SearchSpace laplace_initial_space(const FeSpace& space, int k1, const EigOptions& options = {});

enum class AsiExit { kDiscrepancy, kGradientZero, kMaxIter };
const char* to_string(AsiExit e);

struct AsiResult {
  Vector u;
  int m_star = 0;  // history index of the returned iterate
  AsiExit exit = AsiExit::kMaxIter;
  std::vector<IterationRecord> history;
  SearchSpace final_space;
};

class AsiRunError : public std::runtime_error {
 public:
  AsiRunError(const std::string& what, std::vector<IterationRecord> history)
      : std::runtime_error(what), history_(std::move(history)) {}
  const std::vector<IterationRecord>& history() const { return history_; }

 private:
  std::vector<IterationRecord> history_;
};

struct AsiInputs {
  const MisfitModel* model = nullptr;
  double delta = 0.0;
  Vector background;  // u = background + search-space component; u^(0) = background
  SearchSpace initial;
  const Vector* truth = nullptr;
  std::function<void(const IterationRecord&)> on_record;
  std::function<void(int m, const Vector& u)> on_iterate;
  /// Called before every inner objective evaluation and between the steps of an
  /// outer iteration; may throw to abort the run.
  std::function<void()> interrupt;
};

AsiResult asi_run(const AsiConfig& config, const AsiInputs& inputs);

}  // namespace asi
