#include "linimp/integrator.hpp"

#include <cmath>
#include <numbers>

#include "linimp/errors.hpp"
#include "linimp/reference.hpp"

namespace linimp {

double LinearlyImplicitMethod::a_norm_inf() const {
  return tableau.A.cwiseAbs().rowwise().sum().maxCoeff();
}

LinearlyImplicitMethod LinearlyImplicitMethod::build(const NodeSet& nodes, const SpectrumSpec& spectrum,
                                                     std::string name) {
  const TableauMode mode = nodes.is_exact() ? TableauMode::exact_rational : TableauMode::floating;
  LiftOperator lift;
  if (nodes.is_exact() && !spectrum.exact_charpoly.empty()) {
    if (spectrum.size() != nodes.size()) throw InvalidSpectrum("spectrum size does not match stage count");
    spectrum.validate();
    lift = solve_placement_charpoly(nodes, spectrum.exact_charpoly).to_float(spectrum);
  } else {
    lift = solve_placement(nodes, spectrum);
  }
  LinearlyImplicitMethod m{std::move(name), build_tableau(nodes, mode), std::move(lift)};
  const double samples[] = {1.0};
  const auto report = check_consistency(m.lift, nodes, samples, 1e-10);
  if (!report.passed) {
    throw NumericalBreakdown("lift fails the consistency check (residual " +
                             std::to_string(report.residual.front()) + ")");
  }
  return m;
}

std::string to_string(Preset p) {
  switch (p) {
    case Preset::order1: return "linimp:1";
    case Preset::order2_gauss: return "linimp:2:gauss";
    case Preset::order2_uniform: return "linimp:2:uniform";
    case Preset::order4: return "linimp:4";
    case Preset::order6: return "linimp:6";
    case Preset::besse: return "besse";
    case Preset::relaxation: return "relaxation";
  }
  return "?";
}

LinearlyImplicitMethod preset(Preset p) {
  auto spec = [](std::vector<Rational> l) { return SpectrumSpec::from_rationals(l); };
  const Rational half(1, 2);
  const std::string name = to_string(p);
  switch (p) {
    case Preset::order1:
      return LinearlyImplicitMethod::build(NodeSet::uniform(1), spec({half}), name);
    case Preset::order2_gauss:
      return LinearlyImplicitMethod::build(NodeSet::gauss(2), spec({half, -half}), name);
    case Preset::order2_uniform:
      return LinearlyImplicitMethod::build(NodeSet::uniform(2), spec({half, -half}), name);
    case Preset::order4:
      return LinearlyImplicitMethod::build(NodeSet::uniform(4),
                                           spec({Rational(0), Rational(1, 4), half, Rational(3, 4)}), name);
    case Preset::order6: {
      SpectrumSpec s6;
      for (int k = 0; k < 6; ++k) s6.lambda.push_back(0.5 * std::polar(1.0, k * std::numbers::pi / 3.0));
      // exact real parts keep the conjugate pairing exact
      s6.lambda[0] = 0.5;
      s6.lambda[3] = -0.5;
      s6.lambda[5] = std::conj(s6.lambda[1]);
      s6.lambda[4] = std::conj(s6.lambda[2]);
      // prod (z - lambda_k) = z^6 - 1/64
      s6.exact_charpoly.assign(7, Rational(0));
      s6.exact_charpoly[0] = Rational(-1, 64);
      s6.exact_charpoly[6] = 1;
      return LinearlyImplicitMethod::build(NodeSet::uniform(6), s6, name);
    }
    case Preset::besse:
      return LinearlyImplicitMethod::build(NodeSet::from_rationals({half}), spec({Rational(-1)}), name);
    case Preset::relaxation:
      return LinearlyImplicitMethod::build(NodeSet::from_rationals({half}), spec({half}), name);
  }
  throw InvalidArgument("unknown preset");
}

namespace {

template <class S>
Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> as_scalar(const Eigen::MatrixXd& m) {
  return m.cast<S>();
}

template <class S>
void check_gamma_shape(const GammaMatrix<S>& G, int s, Eigen::Index n) {
  if (G.rows() != s || G.cols() != n) {
    throw InvalidArgument("gamma array must be " + std::to_string(s) + " x " + std::to_string(n));
  }
}

}  // namespace

template <class S>
GammaMatrix<S> gamma_advance(const LiftOperator& lift, const GammaMatrix<S>& Gamma_prev,
                             const Vector<S>& u_n, const EvolutionProblem<S>& problem) {
  check_gamma_shape(Gamma_prev, lift.stages(), u_n.size());
  const Vector<S> m = problem.multiplier(u_n);
  GammaMatrix<S> next = as_scalar<S>(lift.D) * Gamma_prev;
  next += lift.theta.cast<S>() * m.transpose();
  return next;
}

template <class S>
StageMatrix<S> stage_solve(const LinearlyImplicitMethod& method, const EvolutionProblem<S>& problem,
                           const IntegratorState<S>& state, const GammaMatrix<S>& Gamma_new, double h,
                           BlockSystemOptions options) {
  check_gamma_shape(Gamma_new, method.stages(), problem.dim());
  ShiftedBlockSystem<S> system(as_scalar<S>(method.tableau.A), problem.L, h, options);
  if (!system.factorize(Gamma_new)) throw StageSolveFailure("singular stage system", state.step_index + 1);
  StageMatrix<S> rhs(problem.dim(), method.stages());
  rhs.colwise() = state.u;
  return system.solve(rhs);
}

template <class S>
Vector<S> step_finish(const LinearlyImplicitMethod& method, const EvolutionProblem<S>& problem,
                      const IntegratorState<S>& state, const GammaMatrix<S>& Gamma_new,
                      const StageMatrix<S>& stages, double h) {
  Vector<S> acc = Vector<S>::Zero(problem.dim());
  for (int i = 0; i < method.stages(); ++i) {
    const Vector<S> ui = stages.col(i);
    acc += method.tableau.b[i] * (problem.L * ui + Gamma_new.row(i).transpose().cwiseProduct(ui));
  }
  return state.u + S(h) * acc;
}

template <class S>
bool guard_violated(const LinearlyImplicitMethod& method, const GammaMatrix<S>& Gamma, double h) {
  if (Gamma.size() == 0) return false;
  return std::abs(h) * method.a_norm_inf() * Gamma.cwiseAbs().maxCoeff() >= 1.0;
}

template <class S>
struct LinimpStepper<S>::Impl {
  const EvolutionProblem<S>* problem;
  double h;
  double a_norm;
  Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> D;
  Vector<S> theta;
  Eigen::VectorXd b;
  ShiftedBlockSystem<S> system;
  GammaMatrix<S> gamma_next;
  StageMatrix<S> rhs;
  StageMatrix<S> stages;
  Vector<S> work;
  Vector<S> acc;
  bool guard = false;
};

template <class S>
LinimpStepper<S>::LinimpStepper(const LinearlyImplicitMethod& method, const EvolutionProblem<S>& problem,
                                double h, BlockSystemOptions options)
    : impl_(new Impl{&problem, h, method.a_norm_inf(), as_scalar<S>(method.lift.D),
                     method.lift.theta.cast<S>(), method.tableau.b,
                     ShiftedBlockSystem<S>(as_scalar<S>(method.tableau.A), problem.L, h, options),
                     GammaMatrix<S>(method.stages(), problem.dim()),
                     StageMatrix<S>(problem.dim(), method.stages()),
                     StageMatrix<S>(problem.dim(), method.stages()), Vector<S>(problem.dim()),
                     Vector<S>(problem.dim()), false}) {
  if (method.lift.stages() != method.stages()) {
    throw InvalidArgument("lift and tableau have different stage counts");
  }
}

template <class S>
LinimpStepper<S>::~LinimpStepper() = default;
template <class S>
LinimpStepper<S>::LinimpStepper(LinimpStepper&&) noexcept = default;
template <class S>
LinimpStepper<S>& LinimpStepper<S>::operator=(LinimpStepper&&) noexcept = default;

template <class S>
void LinimpStepper<S>::step(Vector<S>& u, GammaMatrix<S>& Gamma, std::int64_t index) {
  auto& im = *impl_;
  const auto s = static_cast<int>(im.b.size());
  check_gamma_shape(Gamma, s, u.size());
  const Vector<S> m = im.problem->multiplier(u);
  im.gamma_next.noalias() = im.D * Gamma;
  im.gamma_next.noalias() += im.theta * m.transpose();
  Gamma.swap(im.gamma_next);

  im.guard = im.h * im.a_norm * Gamma.cwiseAbs().maxCoeff() >= 1.0;
  if (!im.system.factorize(Gamma)) throw StageSolveFailure("singular stage system", index + 1);
  im.rhs.colwise() = u;
  im.system.solve_into(im.rhs, im.stages);

  im.acc.setZero();
  for (int i = 0; i < s; ++i) {
    im.work.noalias() = im.problem->L * im.stages.col(i);
    im.work += Gamma.row(i).transpose().cwiseProduct(im.stages.col(i));
    im.acc += im.b[i] * im.work;
  }
  u += S(im.h) * im.acc;
  check_finite(u, index + 1);
}

template <class S>
const StageMatrix<S>& LinimpStepper<S>::stages() const {
  return impl_->stages;
}

template <class S>
bool LinimpStepper<S>::last_guard_violated() const {
  return impl_->guard;
}

template <class S>
double LinimpStepper<S>::h() const {
  return impl_->h;
}

GammaInit parse_gamma_init(const std::string& name) {
  if (name == "exact") return GammaInit::exact;
  if (name == "frozen") return GammaInit::frozen;
  if (name == "backward-reference" || name == "backward") return GammaInit::backward_reference;
  if (name == "forward-bootstrap" || name == "forward") return GammaInit::forward_bootstrap;
  throw InvalidArgument("unknown gamma initialisation '" + name + "'");
}

std::string to_string(GammaInit g) {
  switch (g) {
    case GammaInit::exact: return "exact";
    case GammaInit::frozen: return "frozen";
    case GammaInit::backward_reference: return "backward-reference";
    case GammaInit::forward_bootstrap: return "forward-bootstrap";
  }
  return "?";
}

template <class S>
GammaStart<S> init_gamma(GammaInit strategy, const EvolutionProblem<S>& problem,
                         const LinearlyImplicitMethod& method, const Vector<S>& u0, double h) {
  const int s = method.stages();
  const auto& c = method.tableau.nodes;
  GammaStart<S> out;
  out.gamma.resize(s, u0.size());
  out.u = u0;
  switch (strategy) {
    case GammaInit::exact:
      if (!problem.exact_solution) throw MissingExactSolution(problem.name + " has no closed form solution");
      for (int i = 0; i < s; ++i) {
        out.gamma.row(i) = problem.multiplier(problem.exact_solution((c[i] - 1.0) * h)).transpose();
      }
      break;
    case GammaInit::frozen:
      out.gamma.rowwise() = problem.multiplier(u0).transpose();
      break;
    case GammaInit::backward_reference:
      if (!problem.time_reversible) throw IrreversibleProblem(problem.name + " cannot be run backwards");
      for (int i = 0; i < s; ++i) {
        const double dt = (c[i] - 1.0) * h;
        const Vector<S> ui = dt == 0.0 ? u0 : gauss_step(problem, u0, dt);
        out.gamma.row(i) = problem.multiplier(ui).transpose();
      }
      break;
    case GammaInit::forward_bootstrap:
      for (int i = 0; i < s; ++i) {
        const double dt = c[i] * h;
        const Vector<S> ui = dt == 0.0 ? u0 : gauss_step(problem, u0, dt);
        out.gamma.row(i) = problem.multiplier(ui).transpose();
      }
      out.u = gauss_step(problem, u0, h);
      out.t = h;
      out.first_step = 1;
      break;
  }
  return out;
}

template <class S>
RunResult<S> integrate_from(const LinearlyImplicitMethod& method, const EvolutionProblem<S>& problem,
                            const GammaStart<S>& start, std::int64_t steps, double h,
                            const RunOptions& opt, const StepObserver<S>& observer) {
  if (steps < 0) throw InvalidArgument("negative step count");
  check_gamma_shape(start.gamma, method.stages(), problem.dim());
  if (start.u.size() != problem.dim()) throw InvalidArgument("initial state has the wrong length");
  LinimpStepper<S> stepper(method, problem, h, opt.linear);
  RunResult<S> out;
  out.h = h;
  out.steps = steps;
  const std::int64_t first = start.first_step;
  const std::int64_t last = first + steps;
  SnapshotRecorder<S> rec(first, last, opt);
  Vector<S> u = start.u;
  GammaMatrix<S> G = start.gamma;
  rec.offer(first, start.t, u);
  if (observer) observer(first, start.t, u, &G);
  for (std::int64_t k = first; k < last; ++k) {
    stepper.step(u, G, k);
    if (stepper.last_guard_violated()) ++out.guard_violations;
    const double t = start.t + static_cast<double>(k + 1 - first) * h;
    rec.offer(k + 1, t, u);
    if (observer) observer(k + 1, t, u, &G);
  }
  out.trajectory = rec.take();
  out.t_final = start.t + static_cast<double>(steps) * h;
  out.final_state = IntegratorState<S>{out.t_final, u, G, last};
  out.final_u = std::move(u);
  return out;
}

template <class S>
RunResult<S> integrate(const LinearlyImplicitMethod& method, const EvolutionProblem<S>& problem,
                       const Vector<S>& u0, GammaInit gamma_init, const RunOptions& opt,
                       const StepObserver<S>& observer) {
  const StepPlan plan = plan_steps(opt);
  const GammaStart<S> start = init_gamma(gamma_init, problem, method, u0, plan.h);
  return integrate_from(method, problem, start, plan.steps - start.first_step, plan.h, opt, observer);
}

#define LINIMP_INSTANTIATE(S)                                                                      \
  template GammaMatrix<S> gamma_advance(const LiftOperator&, const GammaMatrix<S>&, const Vector<S>&, \
                                        const EvolutionProblem<S>&);                               \
  template StageMatrix<S> stage_solve(const LinearlyImplicitMethod&, const EvolutionProblem<S>&,   \
                                      const IntegratorState<S>&, const GammaMatrix<S>&, double,   \
                                      BlockSystemOptions);                                         \
  template Vector<S> step_finish(const LinearlyImplicitMethod&, const EvolutionProblem<S>&,        \
                                 const IntegratorState<S>&, const GammaMatrix<S>&,                 \
                                 const StageMatrix<S>&, double);                                   \
  template bool guard_violated(const LinearlyImplicitMethod&, const GammaMatrix<S>&, double);     \
  template class LinimpStepper<S>;                                                                 \
  template GammaStart<S> init_gamma(GammaInit, const EvolutionProblem<S>&,                         \
                                    const LinearlyImplicitMethod&, const Vector<S>&, double);      \
  template RunResult<S> integrate_from(const LinearlyImplicitMethod&, const EvolutionProblem<S>&,  \
                                       const GammaStart<S>&, std::int64_t, double,                 \
                                       const RunOptions&, const StepObserver<S>&);                 \
  template RunResult<S> integrate(const LinearlyImplicitMethod&, const EvolutionProblem<S>&,       \
                                  const Vector<S>&, GammaInit, const RunOptions&,                  \
                                  const StepObserver<S>&);

LINIMP_INSTANTIATE(double)
LINIMP_INSTANTIATE(cplx)

#undef LINIMP_INSTANTIATE

}  // namespace linimp
