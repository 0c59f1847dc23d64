#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "linimp/errors.hpp"
#include "linimp/integrator.hpp"
#include "linimp/problems.hpp"

using namespace linimp;

namespace {

// Interior nodes of the 2 x 3 block domain without its top right cell.
int brute_force_count(int J) {
  int n = 0;
  for (int j = 1; j < 3 * J; ++j) {
    for (int i = 1; i < 2 * J; ++i) {
      const bool removed = i >= J && j >= 2 * J;
      if (!removed) ++n;
    }
  }
  return n;
}

}  // namespace

TEST(Problems, CompositeGridUnknownCount) {
  EXPECT_EQ(CompositeGrid2D::unknown_count_formula(50), 12251);
  EXPECT_EQ(CompositeGrid2D(50).unknowns(), 12251);
  EXPECT_EQ(CompositeGrid2D(10).unknowns(), 451);
  EXPECT_THROW(CompositeGrid2D(1), InvalidArgument);
  for (int J = 2; J <= 20; ++J) {
    EXPECT_EQ(CompositeGrid2D(J).unknowns(), brute_force_count(J)) << "J=" << J;
    EXPECT_EQ(CompositeGrid2D::unknown_count_formula(J), brute_force_count(J)) << "J=" << J;
  }
}

TEST(Problems, CompositeLaplacianStencil) {
  const CompositeGrid2D g(6);
  const Eigen::MatrixXd L(g.laplacian());
  const double w = 1.0 / (g.step() * g.step());
  EXPECT_LT((L - L.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  // apply to a smooth function and compare with the 5 point formula
  auto f = [&](int i, int j) { return g.index(i, j) < 0 ? 0.0 : std::sin(0.3 * i + 0.7 * j); };
  Eigen::VectorXd v(g.unknowns());
  for (const auto& [i, j] : g.nodes()) v[g.index(i, j)] = f(i, j);
  const Eigen::VectorXd Lv = L * v;
  for (const auto& [i, j] : g.nodes()) {
    const double expect = w * (f(i + 1, j) + f(i - 1, j) + f(i, j + 1) + f(i, j - 1) - 4.0 * f(i, j));
    EXPECT_NEAR(Lv[g.index(i, j)], expect, 1e-10);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L);
  EXPECT_LT(es.eigenvalues().maxCoeff(), 0.0);
}

TEST(Problems, CompositeGridOrderingAndMask) {
  const CompositeGrid2D g(4);
  EXPECT_EQ(g.index(1, 1), 0);
  EXPECT_EQ(g.index(2, 1), 1);
  EXPECT_EQ(g.index(1, 2), 7);
  EXPECT_EQ(g.index(5, 9), -1);
  EXPECT_EQ(g.index(0, 3), -1);
  EXPECT_TRUE(g.is_active(3, 9));
  EXPECT_FALSE(g.is_active(4, 8));
  const auto j = nlohmann::json::parse(g.to_json());
  EXPECT_EQ(j["unknowns"].get<int>(), g.unknowns());
}

TEST(Problems, SecondDifferenceSpectrum) {
  const Grid1D grid{0.0, 1.0, 15};
  const Eigen::MatrixXd B(second_difference(grid));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B);
  std::vector<double> expect;
  for (int k = 1; k <= 15; ++k) {
    const double s = std::sin(k * std::numbers::pi / 32.0);
    expect.push_back(-4.0 * s * s / (grid.dx() * grid.dx()));
  }
  std::sort(expect.begin(), expect.end());
  for (int k = 0; k < 15; ++k) EXPECT_NEAR(es.eigenvalues()[k], expect[k], 1e-9);
  EXPECT_DOUBLE_EQ(Grid1D{}.dx(), 100.0 / 1025.0);
}

TEST(Problems, ScalarOdeClosedForm) {
  const auto p = scalar_ode(0.9);
  for (double t : {-0.5, 0.0, 0.3, 1.7}) {
    const double e = 1e-5;
    const double u = p.exact_solution(t)[0];
    const double du = (p.exact_solution(t + e)[0] - p.exact_solution(t - e)[0]) / (2 * e);
    EXPECT_NEAR(du, -u - u * u, 1e-9 * std::max(1.0, u * u * u * u)) << "t=" << t;
  }
  EXPECT_DOUBLE_EQ(p.exact_solution(0.0)[0], 0.9);
  EXPECT_FALSE(scalar_ode(-0.5).exact_solution);
}

TEST(Problems, DiscreteSolitonIsStationary) {
  const Grid1D grid{-50.0, 50.0, 255};
  const double q = 4.0;
  const double a = q * q / 16.0;
  const Eigen::VectorXd phi = discrete_soliton_profile(grid, q);
  const Eigen::MatrixXd B(second_difference(grid));
  const Eigen::VectorXd res = B * phi + q * phi.cwiseAbs2().cwiseProduct(phi) - a * phi;
  EXPECT_LT(res.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((phi - phi.reverse()).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_NEAR(phi.maxCoeff(), std::sqrt(2.0 * a / q), 0.05);
}

TEST(Problems, ContinuousSolitonClosedForm) {
  const auto p = nls_1d(Grid1D{}, 4.0);
  EXPECT_LT((p.exact_solution(0.0) - p.initial).cwiseAbs().maxCoeff(), 1e-15);
  const auto u = p.exact_solution(2.0);
  EXPECT_NEAR(std::arg(u[512]), 2.0, 1e-12);
  EXPECT_NEAR(std::abs(u[512]), std::abs(p.initial[512]), 1e-15);
}

TEST(Problems, CayleyIsUnitaryForSkewGenerators) {
  const auto p = nls_1d(Grid1D{-10.0, 10.0, 64}, 1.0);
  const auto prop = cayley_propagator<cplx>(p.L, 0.1);
  Eigen::VectorXcd v = p.initial;
  for (int k = 0; k < 50; ++k) v = prop(v);
  EXPECT_NEAR(v.norm(), p.initial.norm(), 1e-12);
}

TEST(Problems, TwoDimensionalDatum) {
  const auto p = nls_2d(10);
  const CompositeGrid2D g(10);
  ASSERT_EQ(p.dim(), 451);
  for (const auto& [i, j] : g.nodes()) {
    const double x = i * 0.1;
    const double y = j * 0.1;
    const cplx expect = std::sin(2 * std::numbers::pi * x) * std::sin(2 * std::numbers::pi * y) *
                        std::polar(1.0, 2 * std::numbers::pi * x);
    EXPECT_NEAR(std::abs(p.initial[g.index(i, j)] - expect), 0.0, 1e-14);
  }
  EXPECT_FALSE(p.exact_solution);
}

TEST(Problems, HeatEnergyIdentityAlongRelaxationSteps) {
  const Grid1D grid{-50.0, 50.0, 255};
  const auto p = heat_1d(grid);
  const auto E = heat_energy(grid);
  const auto m = preset(Preset::relaxation);
  const double h = 0.05;
  LinimpStepper<double> stepper(m, p, h);
  Eigen::VectorXd u = p.initial;
  GammaMatrix<double> g(1, p.dim());
  g.row(0) = u.cwiseAbs2().transpose();
  for (int k = 0; k < 50; ++k) {
    const Eigen::VectorXd u_prev = u;
    const Eigen::VectorXd g_prev = g.row(0).transpose();
    stepper.step(u, g, k);
    const auto chk = heat_energy_identity_check(E, u_prev, u, g_prev, g.row(0).transpose(), h);
    EXPECT_TRUE(chk.passed) << "step " << k << " residual " << chk.residual;
  }
}

TEST(Problems, HeatEnergyMatchesDefinition) {
  const Grid1D grid{-5.0, 5.0, 9};
  const auto E = heat_energy(grid);
  Eigen::VectorXd u = Eigen::VectorXd::LinSpaced(9, 0.1, 0.9);
  Eigen::VectorXd g = Eigen::VectorXd::LinSpaced(9, 0.3, -0.2);
  const Eigen::MatrixXd B(second_difference(grid));
  const double dx = grid.dx();
  const double expect = -0.5 * dx * u.dot(B * u) - 0.5 * dx * g.dot(u.cwiseAbs2()) + 0.25 * dx * g.dot(g);
  EXPECT_NEAR(E(u, g), expect, 1e-13);
  EXPECT_NEAR(E.plain(u), E(u, u.cwiseAbs2()), 1e-13);
}

TEST(Problems, MakeProblem) {
  ProblemParams pp;
  pp.name = "nls-1d";
  pp.points = 128;
  EXPECT_TRUE(std::holds_alternative<ComplexProblem>(make_problem(pp)));
  pp.name = "heat-1d";
  EXPECT_TRUE(std::holds_alternative<RealProblem>(make_problem(pp)));
  pp.name = "nls-2d";
  pp.J = 4;
  EXPECT_EQ(std::get<ComplexProblem>(make_problem(pp)).dim(), CompositeGrid2D(4).unknowns());
  pp.name = "wave";
  EXPECT_THROW(make_problem(pp), InvalidArgument);
}
