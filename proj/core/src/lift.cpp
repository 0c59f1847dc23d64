#include "linimp/lift.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "linimp/errors.hpp"

namespace linimp {

namespace {

using cplx = std::complex<double>;

std::int64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::int64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// V_{c-1}^{-1} D V_{c-1} = M - y e_1^T with M the binomial matrix.  Same
// spectrum as D but free of the Vandermonde conditioning of the nodes.
Eigen::MatrixXd node_free_form(const Eigen::VectorXd& y) {
  const Eigen::Index s = y.size();
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(s, s);
  for (Eigen::Index i = 0; i < s; ++i) {
    for (Eigen::Index j = i; j < s; ++j) C(i, j) = static_cast<double>(binomial(static_cast<int>(j), static_cast<int>(i)));
  }
  C.col(0) -= y;
  return C;
}

// D V_{c-1} = V_c - Theta has the interpolation solution
// D_ik = l_k(c_i) - theta_i l_k(0), l_k the Lagrange basis on the nodes c - 1.
// Evaluated exactly on the double nodes and weights, then rounded once.
void lagrange_lift(const std::vector<double>& nodes, const std::vector<Rational>& y, LiftOperator& lift) {
  const std::size_t s = nodes.size();
  std::vector<Rational> c(nodes.begin(), nodes.end());
  std::vector<Rational> theta(s, Rational(0));
  for (std::size_t i = 0; i < s; ++i) {
    Rational p = 1;
    for (std::size_t j = 0; j < s; ++j) {
      theta[i] += y[j] * p;
      p *= c[i] - 1;
    }
  }
  lift.theta.resize(static_cast<Eigen::Index>(s));
  lift.D.resize(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s));
  for (std::size_t k = 0; k < s; ++k) {
    Rational den = 1;
    for (std::size_t m = 0; m < s; ++m) {
      if (m != k) den *= c[k] - c[m];
    }
    Rational at0 = 1;
    for (std::size_t m = 0; m < s; ++m) {
      if (m != k) at0 *= 1 - c[m];
    }
    at0 /= den;
    for (std::size_t i = 0; i < s; ++i) {
      Rational at = 1;
      for (std::size_t m = 0; m < s; ++m) {
        if (m != k) at *= c[i] - c[m] + 1;
      }
      at /= den;
      lift.D(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = to_double(at - theta[i] * at0);
    }
  }
  for (std::size_t i = 0; i < s; ++i) lift.theta[static_cast<Eigen::Index>(i)] = to_double(theta[i]);
}

double parse_real(const std::string& tok) {
  if (is_rational_literal(tok)) return to_double(parse_rational(tok));
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    throw InvalidArgument("cannot parse number '" + tok + "'");
  }
  if (used != tok.size()) throw InvalidArgument("cannot parse number '" + tok + "'");
  return v;
}

cplx parse_complex(std::string tok) {
  std::erase_if(tok, [](char ch) { return ch == ' '; });
  if (tok.empty()) throw InvalidArgument("empty spectrum entry");
  // Polar form "r@degrees".
  if (auto at = tok.find('@'); at != std::string::npos) {
    const double r = parse_real(tok.substr(0, at));
    const double deg = parse_real(tok.substr(at + 1));
    return std::polar(r, deg * std::numbers::pi / 180.0);
  }
  if (tok.back() != 'i' && tok.back() != 'j') return {parse_real(tok), 0.0};
  tok.pop_back();
  // Split at the last sign that is not a leading sign or an exponent sign.
  std::size_t split = std::string::npos;
  for (std::size_t k = tok.size(); k-- > 1;) {
    if ((tok[k] == '+' || tok[k] == '-') && tok[k - 1] != 'e' && tok[k - 1] != 'E') {
      split = k;
      break;
    }
  }
  auto imag_of = [](const std::string& s) {
    if (s.empty() || s == "+") return 1.0;
    if (s == "-") return -1.0;
    return parse_real(s);
  };
  if (split == std::string::npos) return {0.0, imag_of(tok)};
  return {parse_real(tok.substr(0, split)), imag_of(tok.substr(split))};
}

// Row-echelon solve over the rationals; throws NumericalBreakdown if singular.
std::vector<Rational> exact_solve(std::vector<std::vector<Rational>> a, std::vector<Rational> rhs) {
  const std::size_t n = rhs.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    while (piv < n && a[piv][col] == 0) ++piv;
    if (piv == n) throw NumericalBreakdown("singular exact system");
    std::swap(a[piv], a[col]);
    std::swap(rhs[piv], rhs[col]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || a[r][col] == 0) continue;
      const Rational f = a[r][col] / a[col][col];
      for (std::size_t k = col; k < n; ++k) a[r][k] -= f * a[col][k];
      rhs[r] -= f * rhs[col];
    }
  }
  for (std::size_t r = 0; r < n; ++r) rhs[r] /= a[r][r];
  return rhs;
}

// Weights y with sum_j y_j P_j(z) - 1 = -Q(z), Q(z) = prod (1 - (1 - lambda_k) z).
// Q(z) = z^s r(1/z) with r(w) = (-1)^s p(1 - w), p the monic characteristic
// polynomial in ascending order.  The system is upper triangular with
// diagonal (-1)^j j!.
template <class T>
std::vector<T> placement_weights(const std::vector<T>& charpoly) {
  const int s = static_cast<int>(charpoly.size()) - 1;
  std::vector<T> r(s + 1, T(0));
  for (int m = 0; m <= s; ++m) {
    T binom = T(1);
    for (int i = 0; i <= m; ++i) {
      const T term = charpoly[static_cast<std::size_t>(m)] * binom;
      r[static_cast<std::size_t>(i)] += (i % 2 == 0) ? term : T(-term);
      binom = binom * T(m - i) / T(i + 1);
    }
  }
  if (s % 2 == 1) {
    for (auto& v : r) v = -v;
  }
  const auto P = placement_polynomials(s);
  // row d - 1 holds the z^d coefficients; P_j has degree j + 1
  std::vector<T> y(s, T(0));
  for (int j = s - 1; j >= 0; --j) {
    T acc = -r[static_cast<std::size_t>(s - j - 1)];
    for (int k = j + 1; k < s; ++k) {
      if (static_cast<std::size_t>(j + 1) < P[k].size()) acc -= T(P[k][j + 1]) * y[k];
    }
    y[j] = acc / T(P[j][j + 1]);
  }
  return y;
}

}  // namespace

std::string to_string(Stability s) {
  switch (s) {
    case Stability::strongly_stable: return "strongly-stable";
    case Stability::stable: return "stable";
    case Stability::unstable: return "unstable";
  }
  return "unknown";
}

void SpectrumSpec::validate(double tolerance) const {
  const std::size_t s = lambda.size();
  if (s == 0) throw InvalidSpectrum("spectrum is empty");
  for (std::size_t k = 0; k < s; ++k) {
    if (!std::isfinite(lambda[k].real()) || !std::isfinite(lambda[k].imag())) {
      throw InvalidSpectrum("non-finite eigenvalue");
    }
    if (std::abs(lambda[k] - 1.0) <= tolerance) throw InvalidSpectrum("eigenvalue equal to 1");
    for (std::size_t j = 0; j < k; ++j) {
      if (std::abs(lambda[k] - lambda[j]) <= tolerance) {
        throw InvalidSpectrum("repeated eigenvalue");
      }
    }
  }
  for (std::size_t k = 0; k < s; ++k) {
    const cplx conj = std::conj(lambda[k]);
    const bool found = std::any_of(lambda.begin(), lambda.end(), [&](const cplx& l) {
      return std::abs(l - conj) <= tolerance * std::max(1.0, std::abs(conj));
    });
    if (!found) throw NonRealResult("spectrum is not closed under complex conjugation");
  }
}

SpectrumSpec SpectrumSpec::parse(const std::vector<std::string>& tokens) {
  SpectrumSpec spec;
  bool rational = true;
  for (const auto& tok : tokens) {
    spec.lambda.push_back(parse_complex(tok));
    rational = rational && is_rational_literal(tok);
  }
  if (rational) {
    std::vector<Rational> values;
    for (const auto& tok : tokens) values.push_back(parse_rational(tok));
    spec.exact_charpoly = polynomial_from_roots(values);
  }
  return spec;
}

SpectrumSpec SpectrumSpec::from_rationals(const std::vector<Rational>& values) {
  SpectrumSpec spec;
  for (const auto& v : values) spec.lambda.emplace_back(to_double(v), 0.0);
  spec.exact_charpoly = polynomial_from_roots(values);
  return spec;
}

VandermondeBundle VandermondeBundle::build(std::span<const double> c, double h) {
  const int s = static_cast<int>(c.size());
  VandermondeBundle v{Eigen::MatrixXd(s, s), Eigen::MatrixXd(s, s), Eigen::MatrixXd::Zero(s, s),
                      Eigen::MatrixXd(s, s)};
  for (int i = 0; i < s; ++i) {
    double pc = 1.0;
    double pm = 1.0;
    for (int j = 0; j < s; ++j) {
      v.V_c(i, j) = pc;
      v.V_cm1(i, j) = pm;
      pc *= c[static_cast<std::size_t>(i)] * h;
      pm *= (c[static_cast<std::size_t>(i)] - 1.0) * h;
    }
  }
  for (int i = 0; i < s; ++i) {
    for (int j = i; j < s; ++j) v.M(i, j) = static_cast<double>(binomial(j, i));
  }
  v.U = Eigen::MatrixXd::Identity(s, s) - v.M;
  return v;
}

std::vector<std::vector<std::int64_t>> placement_polynomials(int s) {
  if (s < 1) throw InvalidArgument("stage count must be positive");
  if (s > 30) throw InvalidArgument("placement polynomials overflow 64-bit integers beyond s = 30");
  // U_{ij} = -C(j, i) above the diagonal (0-based).
  std::vector<std::vector<std::int64_t>> U(s, std::vector<std::int64_t>(s, 0));
  for (int i = 0; i < s; ++i) {
    for (int j = i + 1; j < s; ++j) U[i][j] = -binomial(j, i);
  }
  std::vector<std::vector<std::int64_t>> P(s, std::vector<std::int64_t>(s + 1, 0));
  std::vector<std::int64_t> row(s, 0);  // first row of U^p
  row[0] = 1;
  for (int p = 0; p < s; ++p) {
    for (int j = 0; j < s; ++j) P[j][p + 1] += row[j];
    std::vector<std::int64_t> next(s, 0);
    for (int k = 0; k < s; ++k) {
      if (row[k] == 0) continue;
      for (int j = k + 1; j < s; ++j) next[j] += row[k] * U[k][j];
    }
    row = std::move(next);
  }
  for (int j = 0; j < s; ++j) P[j].resize(static_cast<std::size_t>(j + 2));
  return P;
}

LiftOperator solve_placement(const NodeSet& nodes, const SpectrumSpec& spec,
                             double imag_tolerance) {
  const int s = nodes.size();
  if (spec.size() != s) {
    throw InvalidSpectrum("spectrum size " + std::to_string(spec.size()) +
                          " does not match stage count " + std::to_string(s));
  }
  spec.validate();

  // characteristic polynomial from the roots; conjugation closure makes it real
  std::vector<cplx> pc{cplx(1.0)};
  for (const auto& l : spec.lambda) {
    std::vector<cplx> next(pc.size() + 1, cplx(0.0));
    for (std::size_t i = 0; i < pc.size(); ++i) {
      next[i + 1] += pc[i];
      next[i] -= l * pc[i];
    }
    pc = std::move(next);
  }
  std::vector<double> p(pc.size());
  double imag = 0.0;
  double mag = 1.0;
  for (std::size_t i = 0; i < pc.size(); ++i) {
    p[i] = pc[i].real();
    imag = std::max(imag, std::abs(pc[i].imag()));
    mag = std::max(mag, std::abs(pc[i]));
  }
  if (imag > imag_tolerance * mag) throw NumericalBreakdown("characteristic polynomial is not real");
  // The rest is exact on the double coefficients and nodes, rounded once.
  std::vector<Rational> pr(p.begin(), p.end());
  const auto y = placement_weights(pr);
  LiftOperator lift;
  lift.y.resize(s);
  for (int j = 0; j < s; ++j) lift.y[j] = to_double(y[static_cast<std::size_t>(j)]);
  if (!lift.y.allFinite()) throw NumericalBreakdown("placement weights are not finite");
  lagrange_lift(std::vector<double>(nodes.values().begin(), nodes.values().end()), y, lift);
  lift.spectrum = spec;
  const Eigen::MatrixXd C = node_free_form(lift.y);
  lift.spectral_radius = spectral_radius(C);
  lift.stability = classify_stability(C);
  return lift;
}

std::vector<Rational> polynomial_from_roots(const std::vector<Rational>& roots) {
  std::vector<Rational> p{Rational(1)};
  for (const auto& r : roots) {
    std::vector<Rational> next(p.size() + 1, Rational(0));
    for (std::size_t i = 0; i < p.size(); ++i) {
      next[i + 1] += p[i];
      next[i] -= r * p[i];
    }
    p = std::move(next);
  }
  return p;
}

ExactLift solve_placement_exact(const NodeSet& nodes, const std::vector<Rational>& lambda) {
  if (!nodes.is_exact()) throw ModeMismatch("exact lift requires rational nodes");
  if (static_cast<int>(lambda.size()) != nodes.size()) {
    throw InvalidSpectrum("spectrum size does not match stage count");
  }
  for (std::size_t k = 0; k < lambda.size(); ++k) {
    if (lambda[k] == 1) throw InvalidSpectrum("eigenvalue equal to 1");
    for (std::size_t j = 0; j < k; ++j) {
      if (lambda[k] == lambda[j]) throw InvalidSpectrum("repeated eigenvalue");
    }
  }
  return solve_placement_charpoly(nodes, polynomial_from_roots(lambda));
}

ExactLift solve_placement_charpoly(const NodeSet& nodes, const std::vector<Rational>& charpoly) {
  if (!nodes.is_exact()) throw ModeMismatch("exact lift requires rational nodes");
  const int s = nodes.size();
  if (static_cast<int>(charpoly.size()) != s + 1 || charpoly.back() != 1) {
    throw InvalidSpectrum("characteristic polynomial must be monic of degree " + std::to_string(s));
  }
  Rational at_one = 0;
  for (const auto& a : charpoly) at_one += a;
  if (at_one == 0) throw InvalidSpectrum("eigenvalue equal to 1");

  const auto& c = *nodes.exact();
  ExactLift out;
  out.y = placement_weights(charpoly);

  std::vector<std::vector<Rational>> Vc(s, std::vector<Rational>(s));
  std::vector<std::vector<Rational>> Vm(s, std::vector<Rational>(s));
  for (int i = 0; i < s; ++i) {
    Rational pc = 1;
    Rational pm = 1;
    for (int j = 0; j < s; ++j) {
      Vc[i][j] = pc;
      Vm[i][j] = pm;
      pc *= c[i];
      pm *= c[i] - 1;
    }
  }
  out.theta.assign(s, Rational(0));
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j < s; ++j) out.theta[i] += Vm[i][j] * out.y[j];
  }
  // Row i of D solves Vm^T d_i = (Vc - Theta)^T e_i.
  std::vector<std::vector<Rational>> VmT(s, std::vector<Rational>(s));
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j < s; ++j) VmT[i][j] = Vm[j][i];
  }
  out.D.resize(s);
  for (int i = 0; i < s; ++i) {
    std::vector<Rational> row(Vc[i]);
    row[0] -= out.theta[i];
    out.D[i] = exact_solve(VmT, row);
  }
  return out;
}

LiftOperator ExactLift::to_float(const SpectrumSpec& spectrum) const {
  const int s = static_cast<int>(y.size());
  LiftOperator lift;
  lift.y.resize(s);
  lift.theta.resize(s);
  lift.D.resize(s, s);
  for (int i = 0; i < s; ++i) {
    lift.y[i] = to_double(y[i]);
    lift.theta[i] = to_double(theta[i]);
    for (int j = 0; j < s; ++j) lift.D(i, j) = to_double(D[i][j]);
  }
  lift.spectrum = spectrum;
  const Eigen::MatrixXd C = node_free_form(lift.y);
  lift.spectral_radius = spectral_radius(C);
  lift.stability = classify_stability(C);
  return lift;
}

ConsistencyReport check_consistency(const LiftOperator& lift, const NodeSet& nodes,
                                    std::span<const double> h_samples, double tolerance) {
  ConsistencyReport report;
  const int s = nodes.size();
  Eigen::MatrixXd Theta = Eigen::MatrixXd::Zero(s, s);
  Theta.col(0) = lift.theta;
  for (double h : h_samples) {
    const auto v = VandermondeBundle::build(nodes.values(), h);
    const double r = (v.V_c - lift.D * v.V_cm1 - Theta).cwiseAbs().maxCoeff();
    report.h.push_back(h);
    report.residual.push_back(r);
    if (!(r <= tolerance * std::max(1.0, std::pow(h, s - 1)))) report.passed = false;
  }
  return report;
}

double spectral_radius(const Eigen::MatrixXd& D) {
  if (D.size() == 0) return 0.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(D, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Stability classify_stability(const Eigen::MatrixXd& D, double unit_tolerance,
                             double rank_tolerance) {
  const Eigen::Index s = D.rows();
  Eigen::EigenSolver<Eigen::MatrixXd> es(D, false);
  const Eigen::VectorXcd ev = es.eigenvalues();
  const double rho = ev.cwiseAbs().maxCoeff();
  if (rho < 1.0 - unit_tolerance) return Stability::strongly_stable;
  if (rho > 1.0 + unit_tolerance) return Stability::unstable;

  const Eigen::MatrixXcd Dc = D.cast<cplx>();
  for (Eigen::Index k = 0; k < s; ++k) {
    if (std::abs(std::abs(ev[k]) - 1.0) > unit_tolerance) continue;
    // Defective eigenvalues split into clusters of size ~ sqrt(eps).
    Eigen::Index algebraic = 0;
    for (Eigen::Index j = 0; j < s; ++j) {
      if (std::abs(ev[j] - ev[k]) <= 1e-6) ++algebraic;
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(Dc - ev[k] * Eigen::MatrixXcd::Identity(s, s));
    const auto& sv = svd.singularValues();
    const double threshold = rank_tolerance * std::max(1.0, sv[0]);
    Eigen::Index rank = 0;
    for (Eigen::Index j = 0; j < sv.size(); ++j) {
      if (sv[j] > threshold) ++rank;
    }
    if (s - rank < algebraic) return Stability::unstable;
  }
  return Stability::stable;
}

}  // namespace linimp
