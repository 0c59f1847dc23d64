#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "linimp/collocation.hpp"
#include "linimp/errors.hpp"

using namespace linimp;

namespace {

// Golub-Welsch on [0, 1]: eigenvalues of the Jacobi matrix of the Legendre
// recurrence, weights from the first eigenvector components.
std::pair<std::vector<double>, std::vector<double>> golub_welsch(int n) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double beta = k / std::sqrt(4.0 * k * k - 1.0);
    J(k, k - 1) = J(k - 1, k) = beta;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  std::vector<double> x(n), w(n);
  for (int k = 0; k < n; ++k) {
    x[k] = 0.5 * (es.eigenvalues()[k] + 1.0);
    w[k] = es.eigenvectors()(0, k) * es.eigenvectors()(0, k);
  }
  return {x, w};
}

double lagrange(const std::vector<double>& c, int j, double t) {
  double v = 1.0;
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (static_cast<int>(k) != j) v *= (t - c[k]) / (c[j] - c[k]);
  }
  return v;
}

// int_0^upper l_j by quadrature in product form.
double integrate_basis(const std::vector<double>& c, int j, double upper) {
  const auto [x, w] = golub_welsch(24);
  double acc = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) acc += w[k] * upper * lagrange(c, j, upper * x[k]);
  return acc;
}

std::vector<Rational> rat_row(std::initializer_list<std::pair<long, long>> v) {
  std::vector<Rational> out;
  for (auto [p, q] : v) out.emplace_back(p, q);
  return out;
}

}  // namespace

TEST(Collocation, MatchesQuadratureOracleOnRandomNodes) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const int s = 1 + trial % 7;
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<double> c(s);
    for (auto& v : c) v = U(rng);
    std::sort(c.begin(), c.end());
    if (std::adjacent_find(c.begin(), c.end(), [](double a, double b) { return b - a < 0.05; }) != c.end()) {
      continue;
    }
    const auto tab = build_tableau(NodeSet::from_doubles(c), TableauMode::floating);
    for (int i = 0; i < s; ++i) {
      for (int j = 0; j < s; ++j) EXPECT_NEAR(tab.A(i, j), integrate_basis(c, j, c[i]), 1e-9);
    }
    for (int j = 0; j < s; ++j) EXPECT_NEAR(tab.b[j], integrate_basis(c, j, 1.0), 1e-9);
  }
}

TEST(Collocation, SimplifyingConditionsHold) {
  for (int s = 1; s <= 8; ++s) {
    for (const auto& nodes : {NodeSet::uniform(s), NodeSet::gauss(s)}) {
      const auto tab = build_tableau(nodes, TableauMode::floating);
      const Eigen::VectorXd c = tab.c();
      for (int k = 1; k <= s; ++k) {
        const Eigen::VectorXd ck = c.array().pow(k - 1).matrix();
        const Eigen::VectorXd lhs = tab.A * ck;
        const Eigen::VectorXd rhs = c.array().pow(k) / k;
        const double scale = std::max(1.0, (tab.A.cwiseAbs() * ck).maxCoeff());
        EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12 * scale) << "s=" << s << " k=" << k;
      }
    }
  }
}

TEST(Collocation, FourStageUniformTableau) {
  const auto tab = build_tableau(NodeSet::uniform(4), TableauMode::exact_rational);
  ASSERT_TRUE(tab.exact);
  const std::vector<std::vector<Rational>> A = {
      rat_row({{0, 1}, {0, 1}, {0, 1}, {0, 1}}),
      rat_row({{1, 8}, {19, 72}, {-5, 72}, {1, 72}}),
      rat_row({{1, 9}, {4, 9}, {1, 9}, {0, 1}}),
      rat_row({{1, 8}, {3, 8}, {3, 8}, {1, 8}}),
  };
  EXPECT_EQ(tab.exact->A, A);
  EXPECT_EQ(tab.exact->b, rat_row({{1, 8}, {3, 8}, {3, 8}, {1, 8}}));
}

TEST(Collocation, SixStageUniformTableau) {
  const auto tab = build_tableau(NodeSet::uniform(6), TableauMode::exact_rational);
  ASSERT_TRUE(tab.exact);
  EXPECT_EQ(tab.exact->A[1], rat_row({{19, 288}, {1427, 7200}, {-133, 1200}, {241, 3600}, {-173, 7200}, {3, 800}}));
  EXPECT_EQ(tab.exact->A[2], rat_row({{14, 225}, {43, 150}, {7, 225}, {7, 225}, {-1, 75}, {1, 450}}));
  EXPECT_EQ(tab.exact->A[3], rat_row({{51, 800}, {219, 800}, {57, 400}, {57, 400}, {-21, 800}, {3, 800}}));
  EXPECT_EQ(tab.exact->A[4], rat_row({{14, 225}, {64, 225}, {8, 75}, {64, 225}, {14, 225}, {0, 1}}));
  EXPECT_EQ(tab.exact->b, rat_row({{19, 288}, {25, 96}, {25, 144}, {25, 144}, {25, 96}, {19, 288}}));
  EXPECT_EQ(tab.exact->A[5], tab.exact->b);
}

TEST(Collocation, GaussTwoStageTableau) {
  const auto tab = build_tableau(NodeSet::gauss(2), TableauMode::floating);
  const double r = std::sqrt(3.0) / 6.0;
  EXPECT_NEAR(tab.c()[0], 0.5 - r, 1e-15);
  EXPECT_NEAR(tab.c()[1], 0.5 + r, 1e-15);
  EXPECT_NEAR(tab.A(0, 0), 0.25, 1e-15);
  EXPECT_NEAR(tab.A(0, 1), 0.25 - r, 1e-15);
  EXPECT_NEAR(tab.A(1, 0), 0.25 + r, 1e-15);
  EXPECT_NEAR(tab.A(1, 1), 0.25, 1e-15);
  EXPECT_NEAR(tab.b[0], 0.5, 1e-15);
  EXPECT_NEAR(tab.b[1], 0.5, 1e-15);
}

TEST(Collocation, ExactModeRoundsCorrectly) {
  const auto tab = build_tableau(NodeSet::parse({"0", "1/5", "2/5", "3/5", "4/5", "1"}), TableauMode::exact_rational);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) EXPECT_EQ(tab.A(i, j), to_double(tab.exact->A[i][j]));
  }
}

TEST(Collocation, OrderConditions) {
  for (int s = 1; s <= 6; ++s) {
    EXPECT_EQ(verify_order_conditions(build_tableau(NodeSet::gauss(s), TableauMode::floating), 2 * s + 2).order,
              2 * s);
  }
  // symmetric uniform sets gain one order for odd s
  EXPECT_EQ(verify_order_conditions(build_tableau(NodeSet::uniform(2), TableauMode::floating), 6).order, 2);
  EXPECT_EQ(verify_order_conditions(build_tableau(NodeSet::uniform(3), TableauMode::floating), 6).order, 4);
  EXPECT_EQ(verify_order_conditions(build_tableau(NodeSet::uniform(4), TableauMode::floating), 6).order, 4);
  EXPECT_EQ(verify_order_conditions(build_tableau(NodeSet::uniform(1), TableauMode::floating), 4).order, 1);
}

TEST(Collocation, GaussNodesAgreeWithGolubWelsch) {
  for (int s = 1; s <= 10; ++s) {
    const auto ref = golub_welsch(s).first;
    const auto got = gauss_legendre_nodes(s);
    ASSERT_EQ(got.size(), ref.size());
    for (int k = 0; k < s; ++k) EXPECT_NEAR(got[k], ref[k], 1e-14);
  }
}

TEST(Collocation, RejectsBadNodes) {
  EXPECT_THROW(NodeSet::from_doubles({}), InvalidNodes);
  EXPECT_THROW(NodeSet::from_doubles({0.2, 1.5}), InvalidNodes);
  EXPECT_THROW(NodeSet::from_doubles({0.5, 0.2}), InvalidNodes);
  EXPECT_THROW(NodeSet::from_doubles({0.2, 0.2}), DegenerateNodes);
  EXPECT_THROW(NodeSet::from_doubles({0.1, std::nan("")}), InvalidNodes);
  EXPECT_THROW(build_tableau(NodeSet::gauss(2), TableauMode::exact_rational), ModeMismatch);
}

TEST(Collocation, ParseKeepsExactness) {
  EXPECT_TRUE(NodeSet::parse({"0", "1/3", "0.5"}).is_exact());
  EXPECT_FALSE(NodeSet::from_doubles({0.0, 0.5}).is_exact());
  EXPECT_FALSE(NodeSet::gauss(3).is_exact());
}

TEST(Collocation, FloatRowSumsAreTight) {
  for (int s = 1; s <= 8; ++s) {
    for (const auto& nodes : {NodeSet::uniform(s), NodeSet::gauss(s)}) {
      const auto tab = build_tableau(nodes, TableauMode::floating);
      for (int i = 0; i < s; ++i) EXPECT_NEAR(tab.A.row(i).sum(), nodes[i], 1e-14) << "s=" << s;
      EXPECT_NEAR(tab.b.sum(), 1.0, 1e-14) << "s=" << s;
    }
  }
}

TEST(Collocation, FloatEntriesAreCorrectlyRounded) {
  // Close random nodes give large entries; each one is still the nearest
  // double to the exact integral, so row sums sit at the summation floor.
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 80; ++trial) {
    const int s = 1 + trial % 8;
    std::vector<double> c(s);
    for (auto& v : c) v = U(rng);
    std::sort(c.begin(), c.end());
    if (std::adjacent_find(c.begin(), c.end(), [](double a, double b) { return b - a < 0.02; }) != c.end()) {
      continue;
    }
    const auto nodes = NodeSet::from_doubles(c);
    const auto tab = build_tableau(nodes, TableauMode::floating);
    std::vector<Rational> cr(c.begin(), c.end());
    const auto ex = build_tableau(NodeSet::from_rationals(cr), TableauMode::exact_rational);
    const double eps = std::numeric_limits<double>::epsilon();
    for (int i = 0; i < s; ++i) {
      for (int j = 0; j < s; ++j) EXPECT_EQ(tab.A(i, j), ex.A(i, j)) << "trial " << trial;
      const double floor = 2.0 * s * eps * tab.A.row(i).cwiseAbs().sum();
      EXPECT_LE(std::abs(tab.A.row(i).sum() - c[i]), floor) << "trial " << trial;
    }
  }
}
