#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "linimp/collocation.hpp"
#include "linimp/rational.hpp"

namespace linimp {

enum class Stability { strongly_stable, stable, unstable };

std::string to_string(Stability s);

/// Prescribed spectrum of the lift matrix D.
struct SpectrumSpec {
  std::vector<std::complex<double>> lambda;
  /// Ascending coefficients of the monic polynomial prod (z - lambda_k) when
  /// they are known exactly; empty otherwise.
  std::vector<Rational> exact_charpoly;

  int size() const { return static_cast<int>(lambda.size()); }

  /// InvalidSpectrum for repeated values or a value equal to one,
  /// NonRealResult when the set is not closed under conjugation.
  void validate(double tolerance = 1e-12) const;

  /// Parses entries such as "0.5", "-1", "0.25+0.433i", "1/4", "0.5*exp(i*pi/3)".
  /// Real rational entries also fill `exact_charpoly`.
  static SpectrumSpec parse(const std::vector<std::string>& tokens);
  static SpectrumSpec from_rationals(const std::vector<Rational>& values);
};

/// Ascending coefficients of prod (z - r_k).
std::vector<Rational> polynomial_from_roots(const std::vector<Rational>& roots);

/// Vandermonde matrices of the node set at scale h and the node independent
/// shift matrices M (P(X) -> P(X+1) in the monomial basis) and U = I - M.
struct VandermondeBundle {
  Eigen::MatrixXd V_c;     ///< (c_i h)^{j-1}
  Eigen::MatrixXd V_cm1;   ///< ((c_i - 1) h)^{j-1}
  Eigen::MatrixXd M;
  Eigen::MatrixXd U;

  static VandermondeBundle build(std::span<const double> c, double h = 1.0);
};

/// Integer coefficients (ascending powers) of P_1..P_s, with
/// P_j(z) = sum_{p=0}^{j-1} z^{p+1} (U^p)_{1j}.
std::vector<std::vector<std::int64_t>> placement_polynomials(int s);

/// Auxiliary-variable recurrence Gamma_{n} = D Gamma_{n-1} + theta N(u_n).
struct LiftOperator {
  Eigen::MatrixXd D;
  Eigen::VectorXd theta;
  Eigen::VectorXd y;
  SpectrumSpec spectrum;
  Stability stability = Stability::unstable;
  double spectral_radius = 0.0;

  int stages() const { return static_cast<int>(theta.size()); }
};

/// Builds (D, theta) of order s whose spectrum is the prescribed one.
/// The weights y come from the real characteristic polynomial of the
/// spectrum through a triangular system.  An imaginary residue in that
/// polynomial above `imag_tolerance` (relative) raises NumericalBreakdown.
/// Past the polynomial everything is exact on the double inputs and rounded
/// once, so for close nodes the eigenvalues of D are only as good as a
/// double matrix of that size allows; the stability class is taken from the
/// similar node-free matrix M - y e1^T.
LiftOperator solve_placement(const NodeSet& nodes, const SpectrumSpec& spec,
                             double imag_tolerance = 1e-11);

/// Exact construction for rational nodes and a spectrum with rational
/// characteristic polynomial.
struct ExactLift {
  std::vector<Rational> y;
  std::vector<Rational> theta;
  std::vector<std::vector<Rational>> D;

  LiftOperator to_float(const SpectrumSpec& spectrum) const;
};

/// Throws ModeMismatch for inexact nodes, InvalidSpectrum for repeated
/// values or a value equal to one.
ExactLift solve_placement_exact(const NodeSet& nodes, const std::vector<Rational>& lambda);

/// Same construction from the monic characteristic polynomial of D (ascending
/// coefficients).  Only p(1) != 0 is checked; distinctness of the roots is
/// the caller's business.
ExactLift solve_placement_charpoly(const NodeSet& nodes, const std::vector<Rational>& charpoly);

struct ConsistencyReport {
  std::vector<double> h;
  std::vector<double> residual;
  bool passed = true;
};

/// max-norm of V_c^h - D V_{c-1}^h - Theta for each sample h.  Passes iff every
/// residual is at most tolerance * max(1, h^{s-1}).
ConsistencyReport check_consistency(const LiftOperator& lift, const NodeSet& nodes,
                                    std::span<const double> h_samples,
                                    double tolerance = 1e-12);

/// Spectral classification of D.  Eigenvalues within `unit_tolerance` of the
/// unit circle count as modulus one; such eigenvalues must be semisimple,
/// decided by a rank test on D - lambda I at `rank_tolerance`.
Stability classify_stability(const Eigen::MatrixXd& D, double unit_tolerance = 1e-10,
                             double rank_tolerance = 1e-8);

double spectral_radius(const Eigen::MatrixXd& D);

}  // namespace linimp
