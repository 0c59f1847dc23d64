#pragma once

#include <optional>
#include <string>

#include "linimp/integrator.hpp"
#include "linimp/reference.hpp"
#include "linimp/run.hpp"

namespace linimp {

enum class MethodKind { euler_exp, euler_imp, midpoint, rk2, lie, strang, crank_nicolson, gauss10, linimp };

/// A method named on the command line or in a plan.  Accepted names:
/// euler-exp, euler-imp, midpoint, rk2, lie, strang, crank-nicolson, gauss10,
/// besse, relaxation, linimp:<s>[:gauss|:uniform] for s in {1, 2, 4, 6}
/// (order 2 defaults to uniform nodes), and
/// linimp:custom:<nodes>:<lambda> with comma separated lists, for example
/// "linimp:custom:0,1/2,1:1/2,-1/2,0".
struct MethodSpec {
  std::string label;
  MethodKind kind = MethodKind::linimp;
  std::optional<LinearlyImplicitMethod> linimp;

  static MethodSpec parse(const std::string& name);
  /// Convergence order expected from theory.
  int nominal_order() const;
};

struct RunRequest {
  RunOptions options;
  GammaInit gamma_init = GammaInit::exact;
  NewtonConfig newton;
};

/// Dispatches to the linearly implicit integrator or a reference method.
/// Throws InvalidArgument for splitting methods on problems without split
/// flows.
template <class S>
RunResult<S> run_method(const MethodSpec& method, const EvolutionProblem<S>& problem, const Vector<S>& u0,
                        const RunRequest& request, const StepObserver<S>& observer = {});

}  // namespace linimp
