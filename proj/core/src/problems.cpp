#include "linimp/problems.hpp"

#include <cmath>
#include <memory>
#include <numbers>

#include <Eigen/SparseLU>
#include <nlohmann/json.hpp>

#include "linimp/errors.hpp"

namespace linimp {

Eigen::VectorXd Grid1D::points() const {
  Eigen::VectorXd x(n_interior);
  for (int k = 0; k < n_interior; ++k) x[k] = this->x(k);
  return x;
}

SparseMatrix<double> second_difference(const Grid1D& grid) {
  if (grid.n_interior < 1 || !(grid.x_max > grid.x_min)) throw InvalidArgument("invalid 1D grid");
  const int n = grid.n_interior;
  const double w = 1.0 / (grid.dx() * grid.dx());
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(3 * n));
  for (int k = 0; k < n; ++k) {
    t.emplace_back(k, k, -2.0 * w);
    if (k > 0) t.emplace_back(k, k - 1, w);
    if (k + 1 < n) t.emplace_back(k, k + 1, w);
  }
  SparseMatrix<double> B(n, n);
  B.setFromTriplets(t.begin(), t.end());
  return B;
}

// ---------------------------------------------------------------------------

CompositeGrid2D::CompositeGrid2D(int J, int p_x, int p_y, double l)
    : J_(J), p_x_(p_x), p_y_(p_y), l_(l) {
  if (J < 2) throw InvalidArgument("J must be at least 2");
  if (p_x < 2 || p_y < 2) throw InvalidArgument("composite grid needs at least 2 x 2 cells");
  if (!(l > 0.0)) throw InvalidArgument("cell size must be positive");
  const int nx = p_x * J + 1;
  const int ny = p_y * J + 1;
  index_.assign(static_cast<std::size_t>(nx * ny), -1);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      if (!is_active(i, j)) continue;
      index_[static_cast<std::size_t>(j * nx + i)] = static_cast<int>(nodes_.size());
      nodes_.emplace_back(i, j);
    }
  }
}

bool CompositeGrid2D::is_active(int i, int j) const {
  if (i < 1 || j < 1 || i > p_x_ * J_ - 1 || j > p_y_ * J_ - 1) return false;
  // nodes in the removed cell, including its boundary, are not unknowns
  return !(i >= (p_x_ - 1) * J_ && j >= (p_y_ - 1) * J_);
}

int CompositeGrid2D::index(int i, int j) const {
  const int nx = p_x_ * J_ + 1;
  if (i < 0 || j < 0 || i >= nx || j > p_y_ * J_) return -1;
  return index_[static_cast<std::size_t>(j * nx + i)];
}

SparseMatrix<double> CompositeGrid2D::laplacian() const {
  const double w = 1.0 / (step() * step());
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(nodes_.size() * 5);
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    const auto [i, j] = nodes_[k];
    const int row = static_cast<int>(k);
    t.emplace_back(row, row, -4.0 * w);
    const int nb[4][2] = {{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
    for (const auto& p : nb) {
      const int col = index(p[0], p[1]);
      if (col >= 0) t.emplace_back(row, col, w);
    }
  }
  SparseMatrix<double> L(unknowns(), unknowns());
  L.setFromTriplets(t.begin(), t.end());
  return L;
}

std::int64_t CompositeGrid2D::unknown_count_formula(int J, int p_x, int p_y) {
  const std::int64_t j = J;
  return ((p_y - 1) * j - 1) * (p_x * j - 1) + j * ((p_x - 1) * j - 1);
}

std::string CompositeGrid2D::to_json() const {
  nlohmann::json out;
  out["J"] = J_;
  out["p_x"] = p_x_;
  out["p_y"] = p_y_;
  out["step"] = step();
  out["unknowns"] = unknowns();
  out["unknown_count_formula"] = unknown_count_formula(J_, p_x_, p_y_);
  out["ordering"] = "row-major from bottom-left, y outer, x inner";
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& [i, j] : nodes_) nodes.push_back({i, j});
  out["nodes"] = std::move(nodes);
  nlohmann::json mask = nlohmann::json::array();
  for (int j = p_y_ * J_; j >= 0; --j) {
    std::string row;
    for (int i = 0; i <= p_x_ * J_; ++i) row += is_active(i, j) ? '#' : '.';
    mask.push_back(std::move(row));
  }
  out["mask_top_down"] = std::move(mask);
  return out.dump(2);
}

// ---------------------------------------------------------------------------

template <class S>
std::function<Vector<S>(const Vector<S>&)> cayley_propagator(const SparseMatrix<S>& L, double h) {
  SparseMatrix<S> I(L.rows(), L.cols());
  I.setIdentity();
  const SparseMatrix<S> minus = I - S(0.5 * h) * L;
  auto plus = std::make_shared<const SparseMatrix<S>>(I + S(0.5 * h) * L);
  auto lu = std::make_shared<Eigen::SparseLU<SparseMatrix<S>>>();
  lu->compute(minus);
  if (lu->info() != Eigen::Success) throw NumericalBreakdown("singular Cayley factor");
  return [plus, lu](const Vector<S>& v) -> Vector<S> {
    const Vector<S> w = lu->solve(v);
    return *plus * w;
  };
}

template std::function<Vector<double>(const Vector<double>&)> cayley_propagator(const SparseMatrix<double>&,
                                                                                double);
template std::function<Vector<cplx>(const Vector<cplx>&)> cayley_propagator(const SparseMatrix<cplx>&,
                                                                            double);

// ---------------------------------------------------------------------------

RealProblem scalar_ode(double u0) {
  RealProblem p;
  p.name = "ode-scalar";
  p.L.resize(1, 1);
  p.L.insert(0, 0) = -1.0;
  p.L.makeCompressed();
  p.multiplier = [](const Eigen::VectorXd& u) -> Eigen::VectorXd { return -u; };
  p.multiplier_derivative = [](const Eigen::VectorXd& u) -> Eigen::VectorXd {
    return Eigen::VectorXd::Constant(u.size(), -1.0);
  };
  if (u0 > 0.0) {
    p.exact_solution = [u0](double t) -> Eigen::VectorXd {
      return Eigen::VectorXd::Constant(1, 1.0 / ((1.0 / u0 + 1.0) * std::exp(t) - 1.0));
    };
  }
  p.initial = Eigen::VectorXd::Constant(1, u0);
  p.split = SplitProblem<double>{
      [](double h) {
        const double f = std::exp(-h);
        return std::function<Eigen::VectorXd(const Eigen::VectorXd&)>(
            [f](const Eigen::VectorXd& v) -> Eigen::VectorXd { return f * v; });
      },
      [](double h, const Eigen::VectorXd& v) -> Eigen::VectorXd {
        return v.array() / (1.0 + h * v.array());
      }};
  p.time_reversible = true;
  return p;
}

Eigen::VectorXd discrete_soliton_profile(const Grid1D& grid, double q) {
  if (!(q > 0.0)) throw InvalidArgument("soliton needs q > 0");
  const int n = grid.n_interior;
  const double a = q * q / 16.0;
  const double amp = std::sqrt(2.0 * a / q);
  const double w = 1.0 / (grid.dx() * grid.dx());
  const double mid = 0.5 * (grid.x_min + grid.x_max);

  // Even profiles about the centre: unknowns k < m stand for k and n-1-k.
  const int m = (n + 1) / 2;
  auto reduce = [n](int k) { return std::min(k, n - 1 - k); };
  Eigen::VectorXd phi(m);
  for (int k = 0; k < m; ++k) phi[k] = amp / std::cosh(std::sqrt(a) * (grid.x(k) - mid));

  for (int it = 0; it < 60; ++it) {
    Eigen::VectorXd F(m);
    std::vector<Eigen::Triplet<double>> t;
    for (int k = 0; k < m; ++k) {
      double lap = -2.0 * phi[k];
      t.emplace_back(k, k, -2.0 * w + 3.0 * q * phi[k] * phi[k] - a);
      for (int nb : {k - 1, k + 1}) {
        if (nb < 0 || nb >= n) continue;
        lap += phi[reduce(nb)];
        t.emplace_back(k, reduce(nb), w);
      }
      F[k] = w * lap + q * phi[k] * phi[k] * phi[k] - a * phi[k];
    }
    SparseMatrix<double> Jm(m, m);
    Jm.setFromTriplets(t.begin(), t.end());
    Eigen::SparseLU<SparseMatrix<double>> lu(Jm);
    if (lu.info() != Eigen::Success) throw NumericalBreakdown("singular soliton Jacobian");
    const Eigen::VectorXd delta = lu.solve(F);
    phi -= delta;
    if (delta.cwiseAbs().maxCoeff() <= 1e-15 * amp) break;
  }

  Eigen::VectorXd full(n);
  for (int k = 0; k < n; ++k) full[k] = phi[reduce(k)];
  return full;
}

namespace {

template <class S>
SplitProblem<S> cayley_split(const SparseMatrix<S>& L, std::function<Vector<S>(double, const Vector<S>&)> nl) {
  return SplitProblem<S>{
      [L](double h) { return cayley_propagator<S>(L, h); },
      std::move(nl)};
}

ComplexProblem schrodinger(std::string name, const SparseMatrix<double>& lap, double q, double weight) {
  ComplexProblem p;
  p.name = std::move(name);
  p.L = cplx(0.0, 1.0) * lap.cast<cplx>();
  p.multiplier = [q](const Eigen::VectorXcd& u) -> Eigen::VectorXcd {
    return (cplx(0.0, q) * u.cwiseAbs2().cast<cplx>()).eval();
  };
  p.split = cayley_split<cplx>(p.L, [q](double h, const Eigen::VectorXcd& v) -> Eigen::VectorXcd {
    Eigen::VectorXcd out(v.size());
    for (Eigen::Index k = 0; k < v.size(); ++k) out[k] = std::polar(1.0, h * q * std::norm(v[k])) * v[k];
    return out;
  });
  p.energies.push_back({"mass", [weight](const Eigen::VectorXcd& u, const GammaMatrix<cplx>&) {
                          return weight * u.squaredNorm();
                        }});
  p.time_reversible = true;
  p.norm_weight = weight;
  return p;
}

}  // namespace

ComplexProblem nls_1d(const Grid1D& grid, double q, SolitonProfile profile) {
  if (q < 0.0) throw InvalidArgument("nls_1d needs q >= 0");
  ComplexProblem p = schrodinger("nls-1d", second_difference(grid), q, grid.dx());
  if (q == 0.0) {
    const Eigen::VectorXd x = grid.points();
    p.initial = (1.0 / x.array().cosh()).matrix().cast<cplx>();
    return p;
  }
  const double a = q * q / 16.0;
  Eigen::VectorXd phi;
  if (profile == SolitonProfile::discrete) {
    phi = discrete_soliton_profile(grid, q);
  } else {
    const Eigen::VectorXd x = grid.points();
    phi = std::sqrt(2.0 * a / q) * (1.0 / (std::sqrt(a) * x.array()).cosh()).matrix();
  }
  p.initial = phi.cast<cplx>();
  p.exact_solution = [phi, a](double t) -> Eigen::VectorXcd { return std::polar(1.0, a * t) * phi.cast<cplx>(); };
  return p;
}

ComplexProblem nls_2d(int J, double q) {
  const CompositeGrid2D grid(J);
  const double dx = grid.step();
  ComplexProblem p = schrodinger("nls-2d", grid.laplacian(), q, dx * dx);
  p.initial.resize(grid.unknowns());
  const double two_pi = 2.0 * std::numbers::pi;
  for (int k = 0; k < grid.unknowns(); ++k) {
    const double x = grid.nodes()[static_cast<std::size_t>(k)].first * dx;
    const double y = grid.nodes()[static_cast<std::size_t>(k)].second * dx;
    p.initial[k] = std::sin(two_pi * x) * std::sin(two_pi * y) * std::polar(1.0, two_pi * x);
  }
  return p;
}

// ---------------------------------------------------------------------------

double HeatEnergy::operator()(const Eigen::VectorXd& u, const Eigen::VectorXd& gamma) const {
  const Eigen::VectorXd u2 = u.cwiseAbs2();
  return -0.5 * inner(u, B * u) - 0.5 * inner(gamma, u2) + 0.25 * inner(gamma, gamma);
}

double HeatEnergy::plain(const Eigen::VectorXd& u) const {
  const Eigen::VectorXd u2 = u.cwiseAbs2();
  return -0.5 * inner(u, B * u) - 0.25 * inner(u2, u2);
}

HeatEnergy heat_energy(const Grid1D& grid) { return HeatEnergy{second_difference(grid), grid.dx()}; }

EnergyIdentityCheck heat_energy_identity_check(const HeatEnergy& energy, const Eigen::VectorXd& u_n,
                                               const Eigen::VectorXd& u_next,
                                               const Eigen::VectorXd& gamma_prev,
                                               const Eigen::VectorXd& gamma_next, double h,
                                               double tolerance) {
  const Eigen::VectorXd du = u_next - u_n;
  const Eigen::VectorXd dg = gamma_next - gamma_prev;
  const double e_next = energy(u_next, gamma_next);
  const double e_prev = energy(u_n, gamma_prev);
  EnergyIdentityCheck out;
  out.residual = std::abs(energy.inner(du, du) / h + 0.75 * energy.inner(dg, dg) + e_next - e_prev);
  out.energy_scale = std::max(std::abs(e_next), std::abs(e_prev));
  out.passed = out.residual <= tolerance * std::max(1.0, out.energy_scale);
  return out;
}

RealProblem heat_1d(const Grid1D& grid, std::function<double(double)> u0) {
  if (!u0) u0 = [](double x) { return 0.5 * std::cos(std::numbers::pi * x / 100.0); };
  RealProblem p;
  p.name = "heat-1d";
  p.L = second_difference(grid);
  p.multiplier = [](const Eigen::VectorXd& u) -> Eigen::VectorXd { return u.cwiseAbs2(); };
  p.multiplier_derivative = [](const Eigen::VectorXd& u) -> Eigen::VectorXd { return 2.0 * u; };
  p.initial.resize(grid.n_interior);
  for (int k = 0; k < grid.n_interior; ++k) p.initial[k] = u0(grid.x(k));
  p.split = cayley_split<double>(p.L, [](double h, const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return v.array() / (1.0 - 2.0 * h * v.array().square()).sqrt();
  });
  const HeatEnergy e = heat_energy(grid);
  p.energies.push_back({"E_rlx", [e](const Eigen::VectorXd& u, const GammaMatrix<double>& g) {
                          if (g.rows() == 0) return e(u, u.cwiseAbs2());
                          return e(u, g.row(0).transpose());
                        }});
  p.energies.push_back({"E", [e](const Eigen::VectorXd& u, const GammaMatrix<double>&) { return e.plain(u); }});
  p.time_reversible = false;
  p.norm_weight = grid.dx();
  return p;
}

AnyProblem make_problem(const ProblemParams& params) {
  const auto& n = params.name;
  if (n == "ode-scalar") return scalar_ode(params.u0.value_or(1.0 / 3.0));
  if (n == "nls-1d") {
    Grid1D g;
    g.n_interior = params.points.value_or(1024);
    return nls_1d(g, params.q.value_or(4.0), params.soliton);
  }
  if (n == "nls-2d") return nls_2d(params.J.value_or(10), params.q.value_or(1.0));
  if (n == "heat-1d") {
    Grid1D g;
    g.n_interior = params.points.value_or(1024);
    return heat_1d(g);
  }
  throw InvalidArgument("unknown problem '" + n + "'");
}

}  // namespace linimp
