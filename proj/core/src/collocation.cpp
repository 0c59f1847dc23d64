#include "linimp/collocation.hpp"

#include <cmath>
#include <numbers>

#include "linimp/errors.hpp"
#include "linimp/polynomial.hpp"

namespace linimp {

namespace {

void validate(const std::vector<double>& c) {
  if (c.empty()) throw InvalidNodes("node set is empty");
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!std::isfinite(c[i]) || c[i] < 0.0 || c[i] > 1.0) {
      throw InvalidNodes("node " + std::to_string(c[i]) + " lies outside [0, 1]");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (c[j] == c[i]) throw DegenerateNodes("duplicate node " + std::to_string(c[i]));
    }
    if (i > 0 && c[i] < c[i - 1]) throw InvalidNodes("nodes must be strictly increasing");
  }
}

template <class T>
std::vector<Polynomial<T>> lagrange_basis(const std::vector<T>& c) {
  const std::size_t s = c.size();
  std::vector<Polynomial<T>> basis;
  basis.reserve(s);
  for (std::size_t j = 0; j < s; ++j) {
    Polynomial<T> p = Polynomial<T>::constant(T(1));
    for (std::size_t k = 0; k < s; ++k) {
      if (k != j) p.multiply_linear(c[k], c[j] - c[k]);
    }
    basis.push_back(std::move(p));
  }
  return basis;
}

}  // namespace

NodeSet NodeSet::from_doubles(std::vector<double> c) {
  validate(c);
  NodeSet n;
  n.values_ = std::move(c);
  return n;
}

NodeSet NodeSet::from_rationals(std::vector<Rational> c) {
  std::vector<double> values;
  values.reserve(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (c[i] == c[j]) throw DegenerateNodes("duplicate node " + to_string(c[i]));
    }
    values.push_back(to_double(c[i]));
  }
  NodeSet n = from_doubles(std::move(values));
  n.exact_ = std::move(c);
  return n;
}

NodeSet NodeSet::parse(const std::vector<std::string>& tokens) {
  std::vector<Rational> exact;
  bool all_exact = true;
  std::vector<double> values;
  for (const auto& tok : tokens) {
    if (all_exact && is_rational_literal(tok)) {
      exact.push_back(parse_rational(tok));
      values.push_back(to_double(exact.back()));
    } else {
      all_exact = false;
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        throw InvalidArgument("cannot parse node '" + tok + "'");
      }
      if (used != tok.size()) throw InvalidArgument("cannot parse node '" + tok + "'");
      values.push_back(v);
    }
  }
  return all_exact ? from_rationals(std::move(exact)) : from_doubles(std::move(values));
}

NodeSet NodeSet::uniform(int s) {
  if (s < 1) throw InvalidNodes("stage count must be positive");
  if (s == 1) return from_rationals({Rational(1)});
  std::vector<Rational> c;
  for (int i = 0; i < s; ++i) c.emplace_back(i, s - 1);
  return from_rationals(std::move(c));
}

NodeSet NodeSet::gauss(int s) { return from_doubles(gauss_legendre_nodes(s)); }

Eigen::VectorXd CollocationTableau::c() const {
  Eigen::VectorXd out(stages());
  for (int i = 0; i < stages(); ++i) out[i] = nodes[i];
  return out;
}

CollocationTableau build_tableau(const NodeSet& nodes, TableauMode mode) {
  const int s = nodes.size();
  CollocationTableau t{nodes, Eigen::MatrixXd(s, s), Eigen::VectorXd(s), std::nullopt};

  if (mode == TableauMode::exact_rational) {
    if (!nodes.is_exact()) {
      throw ModeMismatch("exact tableau requested for nodes without exact rational values");
    }
    const auto& c = *nodes.exact();
    ExactTableau ex{std::vector<std::vector<Rational>>(s, std::vector<Rational>(s)),
                    std::vector<Rational>(s)};
    const auto basis = lagrange_basis(c);
    for (int j = 0; j < s; ++j) {
      const auto integral = basis[j].antiderivative();
      for (int i = 0; i < s; ++i) ex.A[i][j] = integral(c[i]);
      ex.b[j] = integral(Rational(1));
    }
    for (int i = 0; i < s; ++i) {
      for (int j = 0; j < s; ++j) t.A(i, j) = to_double(ex.A[i][j]);
      t.b[i] = to_double(ex.b[i]);
    }
    t.exact = std::move(ex);
    return t;
  }

  // The double nodes are exact binary rationals; expanding and integrating
  // them exactly and rounding once keeps every coefficient correctly rounded.
  std::vector<Rational> c;
  for (double v : nodes.values()) c.emplace_back(v);
  const auto basis = lagrange_basis(c);
  for (int j = 0; j < s; ++j) {
    const auto integral = basis[j].antiderivative();
    for (int i = 0; i < s; ++i) t.A(i, j) = to_double(integral(c[i]));
    t.b[j] = to_double(integral(Rational(1)));
  }
  return t;
}

QuadratureOrderReport verify_order_conditions(const CollocationTableau& t, int k_max,
                                              double tolerance) {
  QuadratureOrderReport report;
  const int s = t.stages();
  bool prefix_ok = true;
  for (int j = 1; j <= k_max; ++j) {
    double residual = 0.0;
    bool ok = false;
    if (t.exact) {
      Rational sum = 0;
      for (int i = 0; i < s; ++i) {
        Rational p = 1;
        for (int k = 1; k < j; ++k) p *= (*t.nodes.exact())[i];
        sum += t.exact->b[i] * p;
      }
      const Rational diff = sum - Rational(1, j);
      residual = std::fabs(to_double(diff));
      ok = diff == 0;
    } else {
      double sum = 0.0;
      for (int i = 0; i < s; ++i) sum += t.b[i] * std::pow(t.nodes[i], j - 1);
      residual = std::fabs(sum - 1.0 / j);
      ok = residual <= tolerance;
    }
    report.residuals.push_back(residual);
    if (!ok) report.violated.push_back(j);
    if (ok && prefix_ok) {
      report.order = j;
    } else {
      prefix_ok = false;
    }
  }
  return report;
}

std::vector<double> gauss_legendre_nodes(int s) {
  if (s < 1) throw InvalidNodes("stage count must be positive");
  std::vector<double> x(static_cast<std::size_t>(s));
  for (int k = 0; k < s; ++k) {
    // Chebyshev-like initial guess for the k-th root of P_s on [-1, 1].
    double r = std::cos(std::numbers::pi * (k + 0.75) / (s + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = r;
      for (int n = 2; n <= s; ++n) {
        const double p2 = ((2.0 * n - 1.0) * r * p1 - (n - 1.0) * p0) / n;
        p0 = p1;
        p1 = p2;
      }
      const double pn = s == 1 ? r : p1;
      const double pnm1 = s == 1 ? 1.0 : p0;
      const double dp = s * (r * pn - pnm1) / (r * r - 1.0);
      const double dr = pn / dp;
      r -= dr;
      if (std::fabs(dr) < 1e-17) break;
    }
    x[static_cast<std::size_t>(s - 1 - k)] = 0.5 * (1.0 + r);
  }
  return x;
}

}  // namespace linimp
