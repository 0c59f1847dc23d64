#pragma once

#include <memory>
#include <string>

#include "linimp/block_system.hpp"
#include "linimp/collocation.hpp"
#include "linimp/lift.hpp"
#include "linimp/problem.hpp"
#include "linimp/run.hpp"

namespace linimp {

/// Collocation tableau plus lift operator of matching size.
struct LinearlyImplicitMethod {
  std::string name;
  CollocationTableau tableau;
  LiftOperator lift;

  int stages() const { return tableau.stages(); }
  /// Infinity norm of the stage matrix A.
  double a_norm_inf() const;

  /// Builds the tableau (exactly when the nodes are rational) and the lift.
  /// Throws NumericalBreakdown if the lift fails its consistency check.
  static LinearlyImplicitMethod build(const NodeSet& nodes, const SpectrumSpec& spectrum,
                                      std::string name = "linimp");
};

enum class Preset {
  order1,          ///< c = (1), lambda = 1/2
  order2_gauss,    ///< Gauss nodes, lambda = (1/2, -1/2)
  order2_uniform,  ///< c = (0, 1), lambda = (1/2, -1/2)
  order4,          ///< c = (0, 1/3, 2/3, 1), lambda = (0, 1/4, 1/2, 3/4)
  order6,          ///< uniform nodes, lambda_k = exp(i (k-1) pi / 3) / 2
  besse,           ///< c = (1/2), lambda = -1
  relaxation,      ///< c = (1/2), lambda = 1/2 (heat equation scheme)
};

LinearlyImplicitMethod preset(Preset p);
std::string to_string(Preset p);

/// Gamma_next = D Gamma_prev + theta N(u_n)^T.
template <class S>
GammaMatrix<S> gamma_advance(const LiftOperator& lift, const GammaMatrix<S>& Gamma_prev,
                             const Vector<S>& u_n, const EvolutionProblem<S>& problem);

/// Solves u_{n,i} = u_n + h sum_j a_ij (L + diag gamma_j) u_{n,j}.
/// Throws StageSolveFailure carrying state.step_index + 1 if singular.
template <class S>
StageMatrix<S> stage_solve(const LinearlyImplicitMethod& method, const EvolutionProblem<S>& problem,
                           const IntegratorState<S>& state, const GammaMatrix<S>& Gamma_new,
                           double h, BlockSystemOptions options = {});

/// u_{n+1} = u_n + h sum_i b_i (L + diag gamma_i) u_{n,i}.
template <class S>
Vector<S> step_finish(const LinearlyImplicitMethod& method, const EvolutionProblem<S>& problem,
                      const IntegratorState<S>& state, const GammaMatrix<S>& Gamma_new,
                      const StageMatrix<S>& stages, double h);

/// True when h |A|_inf max|gamma| >= 1.
template <class S>
bool guard_violated(const LinearlyImplicitMethod& method, const GammaMatrix<S>& Gamma, double h);

/// Reusable single-step engine.  Keeps the stage system's symbolic
/// factorisation and all work arrays between steps.
template <class S>
class LinimpStepper {
 public:
  LinimpStepper(const LinearlyImplicitMethod& method, const EvolutionProblem<S>& problem, double h,
                BlockSystemOptions options = {});
  ~LinimpStepper();
  LinimpStepper(LinimpStepper&&) noexcept;
  LinimpStepper& operator=(LinimpStepper&&) noexcept;

  /// Advances u from step `index` to `index + 1`.  Gamma holds
  /// gamma_{n-1+c_i} on entry and gamma_{n+c_i} on exit.
  void step(Vector<S>& u, GammaMatrix<S>& Gamma, std::int64_t index);

  const StageMatrix<S>& stages() const;
  bool last_guard_violated() const;
  double h() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

enum class GammaInit {
  exact,               ///< N(u((c_i - 1) h)) from the closed form solution
  frozen,              ///< N(u_0) in every row
  backward_reference,  ///< Gauss reference steps backwards from u_0
  forward_bootstrap,   ///< Gauss reference steps on [0, h]; the run starts at t = h
};

GammaInit parse_gamma_init(const std::string& name);
std::string to_string(GammaInit g);

template <class S>
struct GammaStart {
  GammaMatrix<S> gamma;
  Vector<S> u;
  double t = 0.0;
  std::int64_t first_step = 0;
};

/// Throws MissingExactSolution (exact without closed form) and
/// IrreversibleProblem (backward_reference on an irreversible problem).
template <class S>
GammaStart<S> init_gamma(GammaInit strategy, const EvolutionProblem<S>& problem,
                         const LinearlyImplicitMethod& method, const Vector<S>& u0, double h);

/// Constant step run up to opt.T.  With forward_bootstrap the first step is
/// taken by the reference method and the method itself runs steps 1..n.
template <class S>
RunResult<S> integrate(const LinearlyImplicitMethod& method, const EvolutionProblem<S>& problem,
                       const Vector<S>& u0, GammaInit gamma_init, const RunOptions& opt,
                       const StepObserver<S>& observer = {});

/// Runs `steps` steps of size h from a prepared start.
template <class S>
RunResult<S> integrate_from(const LinearlyImplicitMethod& method, const EvolutionProblem<S>& problem,
                            const GammaStart<S>& start, std::int64_t steps, double h,
                            const RunOptions& opt, const StepObserver<S>& observer = {});

}  // namespace linimp
