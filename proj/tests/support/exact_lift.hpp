#pragma once

#include <complex>
#include <random>
#include <set>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/eigen.hpp>
#include <Eigen/Eigenvalues>

#include "linimp/collocation.hpp"
#include "linimp/lift.hpp"
#include "linimp/rational.hpp"

namespace linimp::oracle {

/// Rational nodes and a conjugation-closed spectrum with rational real and
/// imaginary parts, so the characteristic polynomial is rational.
struct RationalInstance {
  std::vector<Rational> nodes;
  std::vector<std::pair<Rational, Rational>> lambda;  // (re, im)
  std::vector<Rational> charpoly;                     // ascending, monic
  SpectrumSpec spectrum;                              // the same values in double
};

/// Nodes on the 1/64 grid at least 3/64 apart; eigenvalues on the 1/32 grid
/// inside the disk of radius 0.95, pairwise at least 0.05 apart.
inline RationalInstance random_rational_instance(std::mt19937& rng, int s) {
  RationalInstance out;
  std::uniform_int_distribution<int> node(0, 64);
  for (;;) {
    std::set<int> picked;
    while (static_cast<int>(picked.size()) < s) picked.insert(node(rng));
    bool ok = true;
    int prev = -100;
    for (int k : picked) {
      ok = ok && k - prev >= 3;
      prev = k;
    }
    if (!ok) continue;
    for (int k : picked) out.nodes.emplace_back(k, 64);
    break;
  }

  std::uniform_int_distribution<int> grid(-30, 30);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (;;) {
    std::vector<std::pair<int, int>> lam;
    int left = s;
    while (left > 0) {
      const bool pair = left >= 2 && U(rng) < 0.5;
      const int a = grid(rng);
      const int b = pair ? 1 + std::abs(grid(rng)) % 30 : 0;
      if (a * a + b * b >= 0.9025 * 32 * 32) continue;
      lam.emplace_back(a, b);
      if (pair) lam.emplace_back(a, -b);
      left -= pair ? 2 : 1;
    }
    bool ok = true;
    for (std::size_t i = 0; i < lam.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        const double d = std::hypot(lam[i].first - lam[j].first, lam[i].second - lam[j].second) / 32.0;
        ok = ok && d >= 0.05;
      }
    }
    if (!ok) continue;
    std::vector<Rational> p{Rational(1)};
    for (std::size_t i = 0; i < lam.size(); ++i) {
      const Rational a(lam[i].first, 32);
      const Rational b(lam[i].second, 32);
      out.lambda.emplace_back(a, b);
      out.spectrum.lambda.emplace_back(to_double(a), to_double(b));
      if (lam[i].second < 0) continue;
      // (z - a)^2 + b^2 for a pair, z - a for a real eigenvalue
      const std::vector<Rational> f =
          lam[i].second == 0 ? std::vector<Rational>{-a, Rational(1)}
                             : std::vector<Rational>{a * a + b * b, Rational(-2) * a, Rational(1)};
      std::vector<Rational> next(p.size() + f.size() - 1, Rational(0));
      for (std::size_t u = 0; u < p.size(); ++u) {
        for (std::size_t v = 0; v < f.size(); ++v) next[u + v] += p[u] * f[v];
      }
      p = std::move(next);
    }
    out.charpoly = std::move(p);
    return out;
  }
}

/// Characteristic polynomial det(zI - A), ascending and monic, by the
/// Faddeev-LeVerrier recurrence in exact arithmetic.
inline std::vector<Rational> faddeev_leverrier(const std::vector<std::vector<Rational>>& A) {
  const std::size_t n = A.size();
  std::vector<Rational> c(n + 1, Rational(0));
  c[n] = 1;
  std::vector<std::vector<Rational>> Mk(n, std::vector<Rational>(n, Rational(0)));
  for (std::size_t k = 1; k <= n; ++k) {
    // M_k = A M_{k-1} + c_{n-k+1} I
    std::vector<std::vector<Rational>> next(n, std::vector<Rational>(n, Rational(0)));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t l = 0; l < n; ++l) next[i][j] += A[i][l] * Mk[l][j];
      }
      next[i][i] += c[n - k + 1];
    }
    Mk = std::move(next);
    Rational tr = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t l = 0; l < n; ++l) tr += A[i][l] * Mk[l][i];
    }
    c[n - k] = -tr / static_cast<long>(k);
  }
  return c;
}

/// Largest distance from an eigenvalue of the exact matrix, computed with 50
/// significant digits, to its nearest prescribed value.
inline double eigen_mismatch_50(const std::vector<std::vector<Rational>>& A,
                                const std::vector<std::pair<Rational, Rational>>& lambda) {
  using F = boost::multiprecision::cpp_bin_float_50;
  const Eigen::Index n = static_cast<Eigen::Index>(A.size());
  Eigen::Matrix<F, Eigen::Dynamic, Eigen::Dynamic> M(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) M(i, j) = F(A[i][j]);
  }
  Eigen::EigenSolver<decltype(M)> es(M, false);
  F worst = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    F best = 1e300;
    for (const auto& [re, im] : lambda) {
      const F dr = es.eigenvalues()[k].real() - F(re);
      const F di = es.eigenvalues()[k].imag() - F(im);
      const F d = sqrt(dr * dr + di * di);
      best = std::min(best, d);
    }
    worst = std::max(worst, best);
  }
  return static_cast<double>(worst);
}

/// Eigenvalues of a floating D, taken exactly as stored and solved with 50
/// digits, against its prescribed spectrum.
inline double spectrum_mismatch_50(const LiftOperator& lift) {
  const auto n = static_cast<std::size_t>(lift.D.rows());
  std::vector<std::vector<Rational>> A(n, std::vector<Rational>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) A[i][j] = Rational(lift.D(i, j));
  }
  std::vector<std::pair<Rational, Rational>> lambda;
  for (const auto& l : lift.spectrum.lambda) lambda.emplace_back(Rational(l.real()), Rational(l.imag()));
  return eigen_mismatch_50(A, lambda);
}

/// The exact lift for the same double nodes and the real characteristic
/// polynomial of the same double spectrum, rounded once to double.
inline LiftOperator rounded_exact_lift(const NodeSet& nodes, const SpectrumSpec& spec) {
  std::vector<Rational> c;
  for (int i = 0; i < nodes.size(); ++i) c.emplace_back(nodes[i]);
  std::vector<std::complex<double>> pc{1.0};
  for (const auto& l : spec.lambda) {
    std::vector<std::complex<double>> next(pc.size() + 1, 0.0);
    for (std::size_t i = 0; i < pc.size(); ++i) {
      next[i + 1] += pc[i];
      next[i] -= l * pc[i];
    }
    pc = std::move(next);
  }
  std::vector<Rational> p;
  for (const auto& v : pc) p.emplace_back(v.real());
  p.back() = 1;
  return solve_placement_charpoly(NodeSet::from_rationals(c), p).to_float(spec);
}

/// V_c(h) - D V_{c-1}(h) - Theta(h) is exactly zero.
inline bool exact_consistency(const ExactLift& lift, const std::vector<Rational>& c, const Rational& h) {
  const std::size_t s = c.size();
  std::vector<Rational> pc(s, Rational(1));
  std::vector<Rational> pm(s, Rational(1));
  for (std::size_t j = 0; j < s; ++j) {
    for (std::size_t i = 0; i < s; ++i) {
      Rational lhs = pc[i];
      for (std::size_t k = 0; k < s; ++k) lhs -= lift.D[i][k] * pm[k];
      if (j == 0) lhs -= lift.theta[i];
      if (lhs != 0) return false;
    }
    for (std::size_t i = 0; i < s; ++i) {
      pc[i] *= c[i] * h;
      pm[i] *= (c[i] - 1) * h;
    }
  }
  return true;
}

}  // namespace linimp::oracle
