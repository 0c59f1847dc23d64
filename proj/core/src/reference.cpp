#include "linimp/reference.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "linimp/collocation.hpp"
#include "linimp/errors.hpp"

namespace linimp {

void NewtonConfig::validate() const {
  if (!(tolerance > 0.0)) throw InvalidArgument("Newton tolerance must be positive");
  if (max_iterations < 1) throw InvalidArgument("Newton needs at least one iteration");
}

namespace {

template <class S>
using DenseMatrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

template <class S>
double inf_norm(const Eigen::MatrixBase<S>& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

// Besides the relative tolerance, an update that stops shrinking once it is
// down at round-off level counts as converged.
class Convergence {
 public:
  explicit Convergence(const NewtonConfig& cfg) : cfg_(cfg) {}

  bool done(double update, double scale) {
    const double ref = std::max(1.0, scale);
    const bool small = update <= cfg_.tolerance * ref;
    const bool stalled = update >= previous_ && update <= 1e-12 * ref;
    previous_ = update;
    return small || stalled;
  }

 private:
  NewtonConfig cfg_;
  double previous_ = std::numeric_limits<double>::infinity();
};

template <class S>
DenseMatrix<S> one_by_one(S value) {
  DenseMatrix<S> a(1, 1);
  a(0, 0) = value;
  return a;
}

}  // namespace

// ---------------------------------------------------------------------------
// Implicit Euler building block

template <class S>
struct ImplicitEulerSolver<S>::Impl {
  const EvolutionProblem<S>* problem;
  double tau;
  NewtonConfig cfg;
  ShiftedBlockSystem<S> system;
  GammaMatrix<S> shift;
  StageMatrix<S> rhs;
  StageMatrix<S> sol;
};

template <class S>
ImplicitEulerSolver<S>::ImplicitEulerSolver(const EvolutionProblem<S>& problem, double tau,
                                            NewtonConfig cfg, BlockSystemOptions options)
    : impl_(new Impl{&problem, tau, cfg,
                     ShiftedBlockSystem<S>(one_by_one<S>(S(1)), problem.L, tau, options),
                     GammaMatrix<S>(1, problem.dim()), StageMatrix<S>(problem.dim(), 1),
                     StageMatrix<S>(problem.dim(), 1)}) {
  cfg.validate();
}

template <class S>
ImplicitEulerSolver<S>::~ImplicitEulerSolver() = default;
template <class S>
ImplicitEulerSolver<S>::ImplicitEulerSolver(ImplicitEulerSolver&&) noexcept = default;
template <class S>
ImplicitEulerSolver<S>& ImplicitEulerSolver<S>::operator=(ImplicitEulerSolver&&) noexcept = default;

template <class S>
Vector<S> ImplicitEulerSolver<S>::solve(const Vector<S>& r, const Vector<S>& guess, std::int64_t step) {
  auto& im = *impl_;
  const auto& p = *im.problem;
  Vector<S> v = guess;
  Convergence conv(im.cfg);

  bool newton = false;
  if constexpr (!is_complex_v<S>) {
    if (p.multiplier_derivative) {
      const Vector<S> lip = p.multiplier(v) + p.multiplier_derivative(v).cwiseProduct(v);
      newton = std::abs(im.tau) * inf_norm(lip) >= 0.5;
    }
  }

  for (int it = 0; it < im.cfg.max_iterations; ++it) {
    const Vector<S> m = p.multiplier(v);
    Vector<S> next;
    if (newton) {
      im.shift.row(0) = (m + p.multiplier_derivative(v).cwiseProduct(v)).transpose();
      if (!im.system.factorize(im.shift)) throw NonlinearSolveFailure("singular Newton matrix", step);
      im.rhs.col(0) = r - (v - S(im.tau) * (p.L * v + m.cwiseProduct(v)));
      im.system.solve_into(im.rhs, im.sol);
      next = v + im.sol.col(0);
    } else {
      im.shift.row(0) = m.transpose();
      if (!im.system.factorize(im.shift)) throw NonlinearSolveFailure("singular implicit system", step);
      im.rhs.col(0) = r;
      im.system.solve_into(im.rhs, im.sol);
      next = im.sol.col(0);
    }
    const double update = inf_norm(next - v);
    v = std::move(next);
    if (!v.allFinite()) break;
    if (conv.done(update, inf_norm(v))) return v;
  }
  throw NonlinearSolveFailure("implicit solve did not converge", step);
}

// ---------------------------------------------------------------------------
// Classical schemes

template <class S>
RunResult<S> euler_explicit(const EvolutionProblem<S>& problem, const Vector<S>& u0, const RunOptions& opt,
                            const StepObserver<S>& observer) {
  const StepPlan plan = plan_steps(opt);
  return drive<S>(u0, 0.0, 0, plan, opt, observer, [&](Vector<S>& u, std::int64_t) {
    u += S(plan.h) * problem.rhs(u);
  });
}

template <class S>
RunResult<S> euler_implicit(const EvolutionProblem<S>& problem, const Vector<S>& u0, const RunOptions& opt,
                            NewtonConfig cfg, const StepObserver<S>& observer) {
  const StepPlan plan = plan_steps(opt);
  ImplicitEulerSolver<S> solver(problem, plan.h, cfg, opt.linear);
  return drive<S>(u0, 0.0, 0, plan, opt, observer, [&](Vector<S>& u, std::int64_t k) {
    u = solver.solve(u, u, k + 1);
  });
}

template <class S>
RunResult<S> midpoint(const EvolutionProblem<S>& problem, const Vector<S>& u0, const RunOptions& opt,
                      NewtonConfig cfg, const StepObserver<S>& observer) {
  const StepPlan plan = plan_steps(opt);
  ImplicitEulerSolver<S> solver(problem, 0.5 * plan.h, cfg, opt.linear);
  return drive<S>(u0, 0.0, 0, plan, opt, observer, [&](Vector<S>& u, std::int64_t k) {
    const Vector<S> y = solver.solve(u, u, k + 1);
    u = S(2) * y - u;
  });
}

template <class S>
RunResult<S> rk2(const EvolutionProblem<S>& problem, const Vector<S>& u0, const RunOptions& opt,
                 const StepObserver<S>& observer) {
  const StepPlan plan = plan_steps(opt);
  return drive<S>(u0, 0.0, 0, plan, opt, observer, [&](Vector<S>& u, std::int64_t) {
    const Vector<S> k1 = problem.rhs(u);
    const Vector<S> mid = u + S(0.5 * plan.h) * k1;
    u += S(plan.h) * problem.rhs(mid);
  });
}

// ---------------------------------------------------------------------------
// Splitting

template <class S>
RunResult<S> lie_splitting(const SplitProblem<S>& split, const Vector<S>& u0, const RunOptions& opt,
                           const StepObserver<S>& observer) {
  const StepPlan plan = plan_steps(opt);
  const auto linear = split.linear_flow(plan.h);
  return drive<S>(u0, 0.0, 0, plan, opt, observer, [&](Vector<S>& u, std::int64_t) {
    u = split.nonlinear_flow(plan.h, linear(u));
  });
}

template <class S>
RunResult<S> strang_splitting(const SplitProblem<S>& split, const Vector<S>& u0, const RunOptions& opt,
                              const StepObserver<S>& observer, StrangForm form) {
  const StepPlan plan = plan_steps(opt);
  const double h = plan.h;
  const auto half = split.linear_flow(0.5 * h);
  if (form == StrangForm::direct) {
    return drive<S>(u0, 0.0, 0, plan, opt, observer, [&](Vector<S>& u, std::int64_t) {
      u = half(split.nonlinear_flow(h, half(u)));
    });
  }

  // The inner Lie iterate v is conjugate to the Strang state u = C(h/2) v;
  // u is formed only when it is recorded or observed.
  const auto full = split.linear_flow(h);
  const auto back = split.linear_flow(-0.5 * h);
  RunResult<S> out;
  out.h = h;
  out.steps = plan.steps;
  SnapshotRecorder<S> rec(0, plan.steps, opt);
  rec.offer(0, 0.0, u0);
  if (observer) observer(0, 0.0, u0, nullptr);
  Vector<S> v = back(u0);
  Vector<S> u = u0;
  for (std::int64_t k = 0; k < plan.steps; ++k) {
    v = split.nonlinear_flow(h, full(v));
    check_finite(v, k + 1);
    const double t = static_cast<double>(k + 1) * h;
    const bool last = k + 1 == plan.steps;
    if (observer || last || rec.wants(k + 1)) {
      u = half(v);
      rec.offer(k + 1, t, u);
      if (observer) observer(k + 1, t, u, nullptr);
    }
  }
  out.trajectory = rec.take();
  out.t_final = static_cast<double>(plan.steps) * h;
  out.final_u = std::move(u);
  return out;
}

// ---------------------------------------------------------------------------
// Crank-Nicolson

template <class S>
RunResult<S> crank_nicolson(const EvolutionProblem<S>& problem, const Vector<S>& u0, const RunOptions& opt,
                            NewtonConfig cfg, const StepObserver<S>& observer) {
  cfg.validate();
  const StepPlan plan = plan_steps(opt);
  const double h = plan.h;
  ShiftedBlockSystem<S> system(one_by_one<S>(S(1)), problem.L, 0.5 * h, opt.linear);
  if (!system.factorize()) throw NonlinearSolveFailure("singular Crank-Nicolson matrix", 1);
  StageMatrix<S> rhs(problem.dim(), 1);
  StageMatrix<S> sol(problem.dim(), 1);
  return drive<S>(u0, 0.0, 0, plan, opt, observer, [&](Vector<S>& u, std::int64_t k) {
    const Vector<S> explicit_part = u + S(0.5 * h) * (problem.L * u);
    const Vector<S> m0 = problem.multiplier(u);
    Vector<S> w = u;
    Convergence conv(cfg);
    for (int it = 0; it < cfg.max_iterations; ++it) {
      const Vector<S> avg = S(0.5) * (problem.multiplier(w) + m0);
      rhs.col(0) = explicit_part + S(0.5 * h) * avg.cwiseProduct(w + u);
      system.solve_into(rhs, sol);
      const double update = inf_norm(sol.col(0) - w);
      w = sol.col(0);
      if (!w.allFinite()) break;
      if (conv.done(update, inf_norm(w))) {
        u = std::move(w);
        return;
      }
    }
    throw NonlinearSolveFailure("Crank-Nicolson iteration stalled", k + 1);
  });
}

// ---------------------------------------------------------------------------
// Gauss collocation

template <class S>
struct GaussStepper<S>::Impl {
  const EvolutionProblem<S>* problem;
  double h;
  int s;
  NewtonConfig cfg;
  Eigen::MatrixXd A;
  Eigen::VectorXd d;        // A^{-T} b
  Eigen::MatrixXcd T;       // eigenvectors of A
  Eigen::MatrixXcd Tinv_t;  // T^{-T}
  std::vector<ShiftedBlockSystem<cplx>> systems;
  StageMatrix<S> Z, F;
};

template <class S>
GaussStepper<S>::GaussStepper(const EvolutionProblem<S>& problem, double h, int stages, NewtonConfig cfg,
                              BlockSystemOptions options)
    : impl_(std::make_unique<Impl>()) {
  cfg.validate();
  if (stages < 1) throw InvalidArgument("Gauss method needs at least one stage");
  auto& im = *impl_;
  im.problem = &problem;
  im.h = h;
  im.s = stages;
  im.cfg = cfg;
  const auto tab = build_tableau(NodeSet::gauss(stages), TableauMode::floating);
  im.A = tab.A;
  im.d = tab.A.transpose().partialPivLu().solve(tab.b);
  Eigen::EigenSolver<Eigen::MatrixXd> es(tab.A);
  im.T = es.eigenvectors();
  im.Tinv_t = im.T.inverse().transpose();
  const SparseMatrix<cplx> Lc = problem.L.template cast<cplx>();
  for (int k = 0; k < stages; ++k) {
    im.systems.emplace_back(one_by_one<cplx>(es.eigenvalues()[k]), Lc, h, options);
    if (!im.systems.back().factorize()) throw NonlinearSolveFailure("singular Gauss stage matrix", 0);
  }
  im.Z.resize(problem.dim(), stages);
  im.F.resize(problem.dim(), stages);
}

template <class S>
GaussStepper<S>::~GaussStepper() = default;
template <class S>
GaussStepper<S>::GaussStepper(GaussStepper&&) noexcept = default;
template <class S>
GaussStepper<S>& GaussStepper<S>::operator=(GaussStepper&&) noexcept = default;

template <class S>
void GaussStepper<S>::step(Vector<S>& u, std::int64_t index) {
  auto& im = *impl_;
  const auto& p = *im.problem;
  const Eigen::Index n = p.dim();
  im.Z.setZero();
  Convergence conv(im.cfg);
  Eigen::MatrixXcd W(n, im.s);
  StageMatrix<cplx> col(n, 1);
  StageMatrix<cplx> sol(n, 1);
  const double scale = inf_norm(u);
  for (int it = 0; it < im.cfg.max_iterations; ++it) {
    for (int i = 0; i < im.s; ++i) {
      const Vector<S> y = u + im.Z.col(i);
      im.F.col(i) = p.rhs(y);
    }
    // Residual R = Z - h F A^T, transformed to the eigenbasis of A.
    const StageMatrix<S> R = im.Z - S(im.h) * (im.F * im.A.transpose().template cast<S>());
    const Eigen::MatrixXcd Rt = R.template cast<cplx>() * im.Tinv_t;
    for (int k = 0; k < im.s; ++k) {
      col.col(0) = -Rt.col(k);
      im.systems[static_cast<std::size_t>(k)].solve_into(col, sol);
      W.col(k) = sol.col(0);
    }
    const Eigen::MatrixXcd dZ = W * im.T.transpose();
    double update = 0.0;
    if constexpr (is_complex_v<S>) {
      im.Z += dZ;
      update = inf_norm(dZ);
    } else {
      im.Z += dZ.real();
      update = inf_norm(dZ.real());
    }
    if (!im.Z.allFinite()) break;
    if (conv.done(update, scale)) {
      u += im.Z * im.d.template cast<S>();
      return;
    }
  }
  throw NonlinearSolveFailure("Gauss stage iteration did not converge", index + 1);
}

template <class S>
Vector<S> gauss_step(const EvolutionProblem<S>& problem, const Vector<S>& u, double h, int stages,
                     NewtonConfig cfg) {
  GaussStepper<S> stepper(problem, h, stages, cfg);
  Vector<S> out = u;
  stepper.step(out, 0);
  return out;
}

template <class S>
RunResult<S> gauss_reference(const EvolutionProblem<S>& problem, const Vector<S>& u0, const RunOptions& opt,
                             int stages, NewtonConfig cfg, const StepObserver<S>& observer) {
  const StepPlan plan = plan_steps(opt);
  GaussStepper<S> stepper(problem, plan.h, stages, cfg, opt.linear);
  return drive<S>(u0, 0.0, 0, plan, opt, observer, [&](Vector<S>& u, std::int64_t k) {
    stepper.step(u, k);
  });
}

#define LINIMP_INSTANTIATE(S)                                                                        \
  template class ImplicitEulerSolver<S>;                                                             \
  template class GaussStepper<S>;                                                                    \
  template RunResult<S> euler_explicit(const EvolutionProblem<S>&, const Vector<S>&, const RunOptions&, \
                                       const StepObserver<S>&);                                      \
  template RunResult<S> euler_implicit(const EvolutionProblem<S>&, const Vector<S>&, const RunOptions&, \
                                       NewtonConfig, const StepObserver<S>&);                        \
  template RunResult<S> midpoint(const EvolutionProblem<S>&, const Vector<S>&, const RunOptions&,    \
                                 NewtonConfig, const StepObserver<S>&);                              \
  template RunResult<S> rk2(const EvolutionProblem<S>&, const Vector<S>&, const RunOptions&,         \
                            const StepObserver<S>&);                                                 \
  template RunResult<S> lie_splitting(const SplitProblem<S>&, const Vector<S>&, const RunOptions&,   \
                                      const StepObserver<S>&);                                       \
  template RunResult<S> strang_splitting(const SplitProblem<S>&, const Vector<S>&, const RunOptions&, \
                                         const StepObserver<S>&, StrangForm);                        \
  template RunResult<S> crank_nicolson(const EvolutionProblem<S>&, const Vector<S>&, const RunOptions&, \
                                       NewtonConfig, const StepObserver<S>&);                        \
  template Vector<S> gauss_step(const EvolutionProblem<S>&, const Vector<S>&, double, int, NewtonConfig); \
  template RunResult<S> gauss_reference(const EvolutionProblem<S>&, const Vector<S>&, const RunOptions&, \
                                        int, NewtonConfig, const StepObserver<S>&);

LINIMP_INSTANTIATE(double)
LINIMP_INSTANTIATE(cplx)

#undef LINIMP_INSTANTIATE

}  // namespace linimp
