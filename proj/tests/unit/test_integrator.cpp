#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "linimp/errors.hpp"
#include "linimp/integrator.hpp"
#include "linimp/problems.hpp"

using namespace linimp;

namespace {

RealProblem linear_problem(const Eigen::MatrixXd& L, const Eigen::VectorXd& u0) {
  RealProblem p;
  p.name = "linear";
  p.L = L.sparseView();
  p.multiplier = [](const Eigen::VectorXd& u) { return Eigen::VectorXd::Zero(u.size()).eval(); };
  p.initial = u0;
  return p;
}

// One step of the collocation method for u' = L u from the Kronecker form.
Eigen::VectorXd collocation_step(const CollocationTableau& tab, const Eigen::MatrixXd& L,
                                 const Eigen::VectorXd& u, double h) {
  const int s = tab.stages();
  const Eigen::Index n = L.rows();
  Eigen::MatrixXd K = Eigen::MatrixXd::Identity(s * n, s * n);
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j < s; ++j) K.block(i * n, j * n, n, n) -= h * tab.A(i, j) * L;
  }
  Eigen::VectorXd rhs(s * n);
  for (int i = 0; i < s; ++i) rhs.segment(i * n, n) = u;
  const Eigen::VectorXd U = K.partialPivLu().solve(rhs);
  Eigen::VectorXd out = u;
  for (int i = 0; i < s; ++i) out += h * tab.b[i] * (L * U.segment(i * n, n));
  return out;
}

GammaMatrix<double> frozen_gamma(const LinearlyImplicitMethod& m, const RealProblem& p) {
  GammaMatrix<double> g(m.stages(), p.dim());
  const Eigen::VectorXd n0 = p.multiplier(p.initial);
  for (int i = 0; i < m.stages(); ++i) g.row(i) = n0.transpose();
  return g;
}

}  // namespace

TEST(Integrator, OrderOneStepByHand) {
  const auto p = scalar_ode(1.0 / 3.0);
  const auto m = preset(Preset::order1);
  const double h = 0.1;
  LinimpStepper<double> stepper(m, p, h);
  Eigen::VectorXd u = p.initial;
  GammaMatrix<double> g(1, 1);
  g(0, 0) = 0.2;
  stepper.step(u, g, 0);
  // gamma_{n+1} = gamma_n / 2 + N(u_n) / 2, u_{n+1} = u_n / (1 - h (L + gamma_{n+1}))
  const double g1 = 0.5 * 0.2 + 0.5 * (-1.0 / 3.0);
  EXPECT_NEAR(g(0, 0), g1, 1e-16);
  EXPECT_NEAR(u[0], (1.0 / 3.0) / (1.0 - h * (-1.0 + g1)), 1e-15);
}

TEST(Integrator, RelaxationStepByHandOnHeat) {
  const Grid1D grid{-5.0, 5.0, 15};
  const auto p = heat_1d(grid);
  const auto m = preset(Preset::relaxation);
  const double h = 0.01;
  LinimpStepper<double> stepper(m, p, h);
  Eigen::VectorXd u = p.initial;
  GammaMatrix<double> g = frozen_gamma(m, p);
  const Eigen::VectorXd g_prev = g.row(0).transpose();
  const Eigen::VectorXd u_prev = u;
  stepper.step(u, g, 0);

  const Eigen::VectorXd g_next = 0.5 * g_prev + 0.5 * u_prev.cwiseAbs2();
  const Eigen::MatrixXd B = Eigen::MatrixXd(p.L);
  const Eigen::MatrixXd M = Eigen::MatrixXd::Identity(15, 15) - 0.5 * h * (B + Eigen::MatrixXd(g_next.asDiagonal()));
  const Eigen::VectorXd half = M.partialPivLu().solve(u_prev);
  EXPECT_LT((g.row(0).transpose() - g_next).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((u - (2.0 * half - u_prev)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Integrator, ReducesToCollocationWhenNonlinearityVanishes) {
  std::mt19937 rng(5);
  std::normal_distribution<double> G(0.0, 1.0);
  const Preset presets[] = {Preset::order1, Preset::order2_gauss, Preset::order2_uniform, Preset::order4,
                            Preset::order6};
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 1 + trial % 8;
    Eigen::MatrixXd L(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) L(i, j) = G(rng);
    }
    Eigen::VectorXd u0(n);
    for (int i = 0; i < n; ++i) u0[i] = G(rng);
    const auto p = linear_problem(L, u0);
    for (Preset pr : presets) {
      const auto m = preset(pr);
      const double h = 0.05;
      LinimpStepper<double> stepper(m, p, h);
      Eigen::VectorXd u = u0;
      Eigen::VectorXd v = u0;
      GammaMatrix<double> g = GammaMatrix<double>::Zero(m.stages(), n);
      for (int k = 0; k < 5; ++k) {
        stepper.step(u, g, k);
        v = collocation_step(m.tableau, L, v, h);
        ASSERT_LT((u - v).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, v.cwiseAbs().maxCoeff()))
            << to_string(pr) << " n=" << n << " step " << k;
      }
    }
  }
}

TEST(Integrator, GammaAdvanceIsTheLinearRecurrence) {
  const auto p = scalar_ode(0.5);
  const auto m = preset(Preset::order4);
  GammaMatrix<double> g(4, 1);
  g << 0.1, -0.2, 0.3, 0.05;
  Eigen::VectorXd u(1);
  u << 0.7;
  const auto next = gamma_advance(m.lift, g, u, p);
  const Eigen::VectorXd expect = m.lift.D * Eigen::VectorXd(g.col(0)) + m.lift.theta * (-0.7);
  EXPECT_LT((Eigen::VectorXd(next.col(0)) - expect).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Integrator, BesseConservesMassOnNls) {
  const Grid1D grid{-20.0, 20.0, 128};
  const auto p = nls_1d(grid, 2.0);
  RunOptions opt;
  opt.T = 1.0;
  opt.h = 0.01;
  const auto r = integrate(preset(Preset::besse), p, p.initial, GammaInit::frozen, opt);
  EXPECT_NEAR(p.norm(r.final_u), p.norm(p.initial), 1e-12);
}

TEST(Integrator, GammaInitStrategies) {
  const auto p = scalar_ode(0.9);
  const auto m = preset(Preset::order4);
  const double h = 0.1;
  const auto exact = init_gamma(GammaInit::exact, p, m, p.initial, h);
  for (int i = 0; i < 4; ++i) {
    const double t = (m.tableau.nodes[i] - 1.0) * h;
    EXPECT_NEAR(exact.gamma(i, 0), p.multiplier(p.exact_solution(t))[0], 1e-15);
  }
  const auto frozen = init_gamma(GammaInit::frozen, p, m, p.initial, h);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(frozen.gamma(i, 0), -0.9);

  const auto back = init_gamma(GammaInit::backward_reference, p, m, p.initial, h);
  EXPECT_LT((back.gamma - exact.gamma).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(back.first_step, 0);

  const auto fwd = init_gamma(GammaInit::forward_bootstrap, p, m, p.initial, h);
  EXPECT_EQ(fwd.first_step, 1);
  EXPECT_DOUBLE_EQ(fwd.t, h);
  EXPECT_NEAR(fwd.u[0], p.exact_solution(h)[0], 1e-12);
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(fwd.gamma(i, 0), p.multiplier(p.exact_solution(m.tableau.nodes[i] * h))[0], 1e-12);
  }

  const auto heat = heat_1d(Grid1D{-5.0, 5.0, 9});
  EXPECT_THROW(init_gamma(GammaInit::backward_reference, heat, m, heat.initial, h), IrreversibleProblem);
  EXPECT_THROW(init_gamma(GammaInit::exact, heat, m, heat.initial, h), MissingExactSolution);
}

TEST(Integrator, ForwardBootstrapEndsAtFinalTime) {
  const auto p = scalar_ode(0.9);
  RunOptions opt;
  opt.T = 1.0;
  opt.h = 0.05;
  const auto r = integrate(preset(Preset::order2_uniform), p, p.initial, GammaInit::forward_bootstrap, opt);
  EXPECT_NEAR(r.t_final, 1.0, 1e-14);
  EXPECT_NEAR(r.final_u[0], p.exact_solution(1.0)[0], 1e-4);
}

TEST(Integrator, SingularStageSystemIsReported) {
  Eigen::MatrixXd L(1, 1);
  L << 1.0;
  const auto p = linear_problem(L, Eigen::VectorXd::Ones(1));
  RunOptions opt;
  opt.T = 3.0;
  opt.h = 1.0;
  try {
    integrate(preset(Preset::order1), p, p.initial, GammaInit::frozen, opt);
    FAIL() << "expected StageSolveFailure";
  } catch (const StageSolveFailure& e) {
    EXPECT_EQ(e.step(), 1);
  }
}

TEST(Integrator, StepPlanning) {
  RunOptions opt;
  opt.T = 1.0;
  opt.h = 0.3;
  EXPECT_EQ(plan_steps(opt).steps, 3);
  opt.h = 2.0;
  EXPECT_THROW(plan_steps(opt), InvalidArgument);
}

TEST(Integrator, BuildValidatesSpectrum) {
  EXPECT_NO_THROW(LinearlyImplicitMethod::build(NodeSet::uniform(3), SpectrumSpec{{0.1, 0.2, 0.3}}));
  EXPECT_THROW(LinearlyImplicitMethod::build(NodeSet::uniform(3), SpectrumSpec{{0.1, 0.1, 0.3}}), InvalidSpectrum);
}

TEST(Integrator, ObserverSeesEveryStepAndGamma) {
  const auto p = scalar_ode(0.5);
  RunOptions opt;
  opt.T = 0.5;
  opt.h = 0.1;
  std::vector<std::int64_t> steps;
  int with_gamma = 0;
  integrate(preset(Preset::order2_gauss), p, p.initial, GammaInit::exact, opt,
            StepObserver<double>([&](std::int64_t k, double, const Eigen::VectorXd&, const GammaMatrix<double>* g) {
              steps.push_back(k);
              with_gamma += g != nullptr;
            }));
  EXPECT_EQ(steps, (std::vector<std::int64_t>{0, 1, 2, 3, 4, 5}));
  EXPECT_GE(with_gamma, 5);
}
