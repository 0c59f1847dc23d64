#pragma once

#include <memory>

#include "linimp/block_system.hpp"
#include "linimp/problem.hpp"
#include "linimp/run.hpp"

namespace linimp {

/// Stopping rule of the nonlinear iterations used by the implicit reference
/// methods.  An iteration stops once the update is below
/// tolerance * max(1, |v|_inf), or when it stagnates at round-off level.
struct NewtonConfig {
  double tolerance = 1e-14;
  int max_iterations = 50;

  void validate() const;
};

/// Solves v - tau (L v + N(v) v) = r.  Uses frozen-coefficient fixed point
/// iteration, or Newton when the problem provides dN/du and
/// tau * max|N(v) + N'(v) v| >= 1/2.
template <class S>
class ImplicitEulerSolver {
 public:
  ImplicitEulerSolver(const EvolutionProblem<S>& problem, double tau, NewtonConfig cfg = {},
                      BlockSystemOptions options = {});
  ~ImplicitEulerSolver();
  ImplicitEulerSolver(ImplicitEulerSolver&&) noexcept;
  ImplicitEulerSolver& operator=(ImplicitEulerSolver&&) noexcept;

  /// Throws NonlinearSolveFailure tagged with `step` when the iteration fails.
  Vector<S> solve(const Vector<S>& r, const Vector<S>& guess, std::int64_t step);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

template <class S>
RunResult<S> euler_explicit(const EvolutionProblem<S>& problem, const Vector<S>& u0,
                            const RunOptions& opt, const StepObserver<S>& observer = {});

template <class S>
RunResult<S> euler_implicit(const EvolutionProblem<S>& problem, const Vector<S>& u0,
                            const RunOptions& opt, NewtonConfig cfg = {},
                            const StepObserver<S>& observer = {});

/// Implicit midpoint: Y = u_n + h/2 f(Y), u_{n+1} = 2 Y - u_n.
template <class S>
RunResult<S> midpoint(const EvolutionProblem<S>& problem, const Vector<S>& u0, const RunOptions& opt,
                      NewtonConfig cfg = {}, const StepObserver<S>& observer = {});

/// Explicit two-stage method with nodes (0, 1/2) and weights (0, 1).
template <class S>
RunResult<S> rk2(const EvolutionProblem<S>& problem, const Vector<S>& u0, const RunOptions& opt,
                 const StepObserver<S>& observer = {});

/// u_{n+1} = Phi_h(exp(hL) u_n): linear substep first.
template <class S>
RunResult<S> lie_splitting(const SplitProblem<S>& split, const Vector<S>& u0, const RunOptions& opt,
                           const StepObserver<S>& observer = {});

enum class StrangForm {
  conjugated,  ///< exp(hL/2) (Phi_h exp(hL))^k exp(-hL/2)
  direct,      ///< (exp(hL/2) Phi_h exp(hL/2))^k
};

template <class S>
RunResult<S> strang_splitting(const SplitProblem<S>& split, const Vector<S>& u0,
                              const RunOptions& opt, const StepObserver<S>& observer = {},
                              StrangForm form = StrangForm::conjugated);

/// (u+ - u)/h = L (u+ + u)/2 + ((N(u+) + N(u))/2) (u+ + u)/2, solved by fixed
/// point iteration around a single factorisation of I - h/2 L.
template <class S>
RunResult<S> crank_nicolson(const EvolutionProblem<S>& problem, const Vector<S>& u0,
                            const RunOptions& opt, NewtonConfig cfg = {},
                            const StepObserver<S>& observer = {});

/// Gauss collocation with simplified Newton on the diagonalised stage matrix.
/// Each run factorises s complex shifted systems I - h mu_k L once.
template <class S>
class GaussStepper {
 public:
  GaussStepper(const EvolutionProblem<S>& problem, double h, int stages = 5, NewtonConfig cfg = {},
               BlockSystemOptions options = {});
  ~GaussStepper();
  GaussStepper(GaussStepper&&) noexcept;
  GaussStepper& operator=(GaussStepper&&) noexcept;

  void step(Vector<S>& u, std::int64_t index);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// One Gauss step of signed size h.
template <class S>
Vector<S> gauss_step(const EvolutionProblem<S>& problem, const Vector<S>& u, double h, int stages = 5,
                     NewtonConfig cfg = {});

template <class S>
RunResult<S> gauss_reference(const EvolutionProblem<S>& problem, const Vector<S>& u0,
                             const RunOptions& opt, int stages = 5, NewtonConfig cfg = {},
                             const StepObserver<S>& observer = {});

}  // namespace linimp
