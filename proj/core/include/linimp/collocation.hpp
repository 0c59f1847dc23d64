#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "linimp/rational.hpp"

namespace linimp {

/// Strictly increasing collocation nodes 0 <= c_1 < ... < c_s <= 1.
///
/// A node set remembers exact rational values when it was built from
/// rational literals, which is what enables exact tableau and lift
/// construction.
class NodeSet {
 public:
  /// Throws InvalidNodes for empty input, non-finite values or values outside
  /// [0, 1], DegenerateNodes for repeated values, and InvalidNodes when the
  /// order is not strictly increasing.
  static NodeSet from_doubles(std::vector<double> c);
  static NodeSet from_rationals(std::vector<Rational> c);
  /// Tokens are rational literals ("1/3", "0.25") or reals.  The set is
  /// exact iff every token is a rational literal.
  static NodeSet parse(const std::vector<std::string>& tokens);

  /// Uniform subdivision of [0, 1]; s = 1 gives the single node 1.
  static NodeSet uniform(int s);
  /// Gauss-Legendre nodes mapped to [0, 1].
  static NodeSet gauss(int s);

  int size() const { return static_cast<int>(values_.size()); }
  std::span<const double> values() const { return values_; }
  double operator[](int i) const { return values_[static_cast<std::size_t>(i)]; }
  bool is_exact() const { return exact_.has_value(); }
  const std::optional<std::vector<Rational>>& exact() const { return exact_; }

 private:
  NodeSet() = default;
  std::vector<double> values_;
  std::optional<std::vector<Rational>> exact_;
};

enum class TableauMode { exact_rational, floating };

struct ExactTableau {
  std::vector<std::vector<Rational>> A;
  std::vector<Rational> b;
};

/// Collocation Runge-Kutta coefficients.  `exact` is filled in exact mode and
/// the floating point coefficients are then its correctly rounded values.
struct CollocationTableau {
  NodeSet nodes;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  std::optional<ExactTableau> exact;

  int stages() const { return nodes.size(); }
  Eigen::VectorXd c() const;
};

/// a_ij = int_0^{c_i} l_j, b_j = int_0^1 l_j with l_j the Lagrange basis on
/// the nodes, expanded into monomials and integrated term by term.
/// Throws ModeMismatch when exact mode is requested for inexact nodes.
CollocationTableau build_tableau(const NodeSet& nodes, TableauMode mode);

struct QuadratureOrderReport {
  int order = 0;                   ///< largest k with all conditions j <= k met
  std::vector<double> residuals;   ///< |sum b_i c_i^{j-1} - 1/j|, j = 1..k_max
  std::vector<int> violated;       ///< indices j that fail
};

QuadratureOrderReport verify_order_conditions(const CollocationTableau& t, int k_max,
                                              double tolerance = 1e-13);

/// Gauss-Legendre nodes on [0, 1] by Newton iteration on P_s.
std::vector<double> gauss_legendre_nodes(int s);

}  // namespace linimp
