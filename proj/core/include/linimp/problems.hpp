#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "linimp/problem.hpp"

namespace linimp {

/// Equispaced interior points of (x_min, x_max), homogeneous Dirichlet ends.
struct Grid1D {
  double x_min = -50.0;
  double x_max = 50.0;
  int n_interior = 1024;

  double dx() const { return (x_max - x_min) / (n_interior + 1); }
  double x(int k) const { return x_min + (k + 1) * dx(); }
  Eigen::VectorXd points() const;
};

/// Standard second difference matrix scaled by 1/dx^2.
SparseMatrix<double> second_difference(const Grid1D& grid);

/// Union of p_x by p_y square cells of side l with the top right cell
/// removed, discretised with step l/J in both directions.  Unknowns are
/// the interior nodes of the composite domain, numbered row by row from the
/// bottom left corner (y outer, x inner).
class CompositeGrid2D {
 public:
  explicit CompositeGrid2D(int J, int p_x = 2, int p_y = 3, double l = 1.0);

  int J() const { return J_; }
  int p_x() const { return p_x_; }
  int p_y() const { return p_y_; }
  double step() const { return l_ / J_; }
  /// Node (i, j) sits at (i * step, j * step).
  bool is_active(int i, int j) const;
  /// -1 for nodes that are not unknowns.
  int index(int i, int j) const;
  int unknowns() const { return static_cast<int>(nodes_.size()); }
  const std::vector<std::pair<int, int>>& nodes() const { return nodes_; }

  /// 5-point Laplacian with zero Dirichlet data on the composite boundary.
  SparseMatrix<double> laplacian() const;

  /// ((p_y - 1) J - 1)(p_x J - 1) + J ((p_x - 1) J - 1)
  static std::int64_t unknown_count_formula(int J, int p_x = 2, int p_y = 3);

  /// Grid parameters, active mask and index map as JSON.
  std::string to_json() const;

 private:
  int J_, p_x_, p_y_;
  double l_;
  std::vector<int> index_;
  std::vector<std::pair<int, int>> nodes_;
};

/// v -> (I + h/2 L)(I - h/2 L)^{-1} v, factorised once.
template <class S>
std::function<Vector<S>(const Vector<S>&)> cayley_propagator(const SparseMatrix<S>& L, double h);

extern template std::function<Vector<double>(const Vector<double>&)> cayley_propagator(
    const SparseMatrix<double>&, double);
extern template std::function<Vector<cplx>(const Vector<cplx>&)> cayley_propagator(
    const SparseMatrix<cplx>&, double);

/// u' = -u - u^2 with L = -1 and N(u) = -u.
RealProblem scalar_ode(double u0 = 1.0 / 3.0);

enum class SolitonProfile {
  continuous,  ///< sqrt(2a/q) sech(sqrt(a) x) sampled on the grid
  discrete,    ///< stationary profile of the space-discrete equation
};

/// i u_t = -u_xx - q |u|^2 u: L = iB, N(u) = iq|u|^2.  The attached exact
/// solution is the zero speed soliton with a = q^2/16.  With the discrete
/// profile the soliton is an exact solution of the semi-discrete system.
ComplexProblem nls_1d(const Grid1D& grid, double q = 4.0,
                      SolitonProfile profile = SolitonProfile::continuous);

/// Solves B phi + q phi^3 = a phi for an even profile by Newton iteration
/// started from the continuous soliton.
Eigen::VectorXd discrete_soliton_profile(const Grid1D& grid, double q);

/// i u_t = -Laplace u - q |u|^2 u on the composite domain, initial datum
/// sin(2 pi x) sin(2 pi y) exp(2 i pi x).  No closed form solution.
ComplexProblem nls_2d(int J, double q = 1.0);

/// Discrete relaxation energy
///   E(u, g) = -1/2 <u, B u> - 1/2 <g, u^2> + 1/4 <g, g>,  <v, w> = dx sum v w.
struct HeatEnergy {
  SparseMatrix<double> B;
  double dx = 1.0;

  double operator()(const Eigen::VectorXd& u, const Eigen::VectorXd& gamma) const;
  /// -1/2 <u, B u> - 1/4 <u^2, u^2>
  double plain(const Eigen::VectorXd& u) const;
  double inner(const Eigen::VectorXd& v, const Eigen::VectorXd& w) const { return dx * v.dot(w); }
};

struct EnergyIdentityCheck {
  double residual = 0.0;
  double energy_scale = 0.0;
  bool passed = false;
};

/// |(1/h)|u+ - u|^2 + 3/4 |g+ - g-|^2 + E(u+, g+) - E(u, g-)|, passing at
/// tolerance * max(1, |E|).
EnergyIdentityCheck heat_energy_identity_check(const HeatEnergy& energy, const Eigen::VectorXd& u_n,
                                               const Eigen::VectorXd& u_next,
                                               const Eigen::VectorXd& gamma_prev,
                                               const Eigen::VectorXd& gamma_next, double h,
                                               double tolerance = 1e-11);

/// u_t = u_xx + u^3 on the grid with L = B, N(u) = u^2.  Default initial datum
/// 1/2 cos(pi x / 100).  Energies: "E_rlx" (uses gamma row 0, or u^2 when no
/// gamma is given) and "E".
RealProblem heat_1d(const Grid1D& grid,
                    std::function<double(double)> u0 = {});

HeatEnergy heat_energy(const Grid1D& grid);

using AnyProblem = std::variant<RealProblem, ComplexProblem>;

struct ProblemParams {
  std::string name;  ///< ode-scalar, nls-1d, nls-2d, heat-1d
  std::optional<double> q;
  std::optional<int> J;
  std::optional<int> points;
  std::optional<double> u0;
  SolitonProfile soliton = SolitonProfile::continuous;
};

AnyProblem make_problem(const ProblemParams& params);

}  // namespace linimp
