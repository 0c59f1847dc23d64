#pragma once

#include <cstddef>
#include <vector>

namespace linimp {

/// Dense univariate polynomial with coefficients in ascending powers.
/// T only needs field arithmetic, so the same code serves doubles and exact
/// rationals.
template <class T>
class Polynomial {
 public:
  Polynomial() : coeffs_{T(0)} {}
  explicit Polynomial(std::vector<T> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) coeffs_.push_back(T(0));
  }

  static Polynomial constant(const T& value) { return Polynomial({value}); }

  std::size_t degree() const { return coeffs_.size() - 1; }
  const std::vector<T>& coefficients() const { return coeffs_; }
  const T& operator[](std::size_t k) const { return coeffs_[k]; }

  /// In-place product with (x - root) / scale.
  void multiply_linear(const T& root, const T& scale) {
    std::vector<T> next(coeffs_.size() + 1, T(0));
    for (std::size_t k = 0; k < coeffs_.size(); ++k) {
      const T c = coeffs_[k] / scale;
      next[k + 1] += c;
      next[k] -= root * c;
    }
    coeffs_ = std::move(next);
  }

  template <class X>
  X operator()(const X& x) const {
    X acc = X(coeffs_.back());
    for (std::size_t k = coeffs_.size() - 1; k-- > 0;) acc = acc * x + X(coeffs_[k]);
    return acc;
  }

  /// Antiderivative vanishing at zero.
  Polynomial antiderivative() const {
    std::vector<T> out(coeffs_.size() + 1, T(0));
    for (std::size_t k = 0; k < coeffs_.size(); ++k) {
      out[k + 1] = coeffs_[k] / T(static_cast<long>(k + 1));
    }
    return Polynomial(std::move(out));
  }

 private:
  std::vector<T> coeffs_;
};

}  // namespace linimp
