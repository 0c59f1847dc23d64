#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace linimp {

template <class S>
using Vector = Eigen::Matrix<S, Eigen::Dynamic, 1>;

/// s x N array of lagged multipliers; row i holds gamma_{n-1+c_i}.
template <class S>
using GammaMatrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// N x s array of stage vectors; column i holds u_{n,i}.
template <class S>
using StageMatrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

template <class S>
using SparseMatrix = Eigen::SparseMatrix<S>;

using cplx = std::complex<double>;

template <class S>
inline constexpr bool is_complex_v = !std::is_same_v<S, double>;

enum class Field { real, complex };

template <class S>
struct NamedEnergy {
  std::string name;
  std::function<double(const Vector<S>& u, const GammaMatrix<S>& gamma)> eval;
};

/// Sub-flows for splitting methods.  `linear_flow(h)` returns a propagator
/// approximating v -> exp(hL) v; building it once per step size lets the
/// propagator keep its own factorisation.
template <class S>
struct SplitProblem {
  std::function<std::function<Vector<S>(const Vector<S>&)>(double h)> linear_flow;
  std::function<Vector<S>(double h, const Vector<S>&)> nonlinear_flow;
};

/// Semilinear problem du/dt = L u + N(u) u with N(u) acting diagonally.
template <class S>
struct EvolutionProblem {
  using Scalar = S;

  std::string name;
  SparseMatrix<S> L;
  /// u -> N(u), a vector of the same length acting pointwise on u.
  std::function<Vector<S>(const Vector<S>&)> multiplier;
  /// Optional pointwise derivative dN/du (real problems); enables Newton.
  std::function<Vector<S>(const Vector<S>&)> multiplier_derivative;
  /// Optional closed form solution, defined for the negative times needed by
  /// the exact gamma initialisation as well.
  std::function<Vector<S>(double)> exact_solution;
  Vector<S> initial;
  std::vector<NamedEnergy<S>> energies;
  std::optional<SplitProblem<S>> split;
  bool time_reversible = true;
  /// Cell measure in the discrete L2 norm sqrt(w * sum |v_k|^2).
  double norm_weight = 1.0;

  Eigen::Index dim() const { return L.rows(); }
  static constexpr Field field() { return is_complex_v<S> ? Field::complex : Field::real; }

  Vector<S> rhs(const Vector<S>& u) const {
    return L * u + multiplier(u).cwiseProduct(u);
  }

  double norm(const Vector<S>& v) const { return std::sqrt(norm_weight * v.squaredNorm()); }
};

using RealProblem = EvolutionProblem<double>;
using ComplexProblem = EvolutionProblem<cplx>;

}  // namespace linimp
