#include "linimp/block_system.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/LU>

#include "linimp/errors.hpp"

namespace linimp {

template <class S>
struct ShiftedBlockSystem<S>::Impl {
  using Dense = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

  Dense A;
  double h = 0.0;
  BlockSystemOptions options;

  Dense dense_base;
  Dense dense_work;
  Eigen::PartialPivLU<Dense> dense_lu;

  SparseMatrix<S> base;
  SparseMatrix<S> work;
  std::vector<Eigen::Index> diag_pos;  // (i * s + j) * n + k, -1 when the block is empty
  Eigen::SparseLU<SparseMatrix<S>, Eigen::COLAMDOrdering<int>> lu;
  Eigen::BiCGSTAB<SparseMatrix<S>, Eigen::IncompleteLUT<S>> iterative;
  bool analyzed = false;
};

template <class S>
ShiftedBlockSystem<S>::ShiftedBlockSystem(const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>& A,
                                          const SparseMatrix<S>& L, double h,
                                          BlockSystemOptions options)
    : impl_(std::make_unique<Impl>()), s_(A.rows()), n_(L.rows()) {
  if (A.rows() != A.cols()) throw InvalidArgument("block coefficient matrix must be square");
  if (L.rows() != L.cols()) throw InvalidArgument("linear operator must be square");
  auto& im = *impl_;
  im.A = A;
  im.h = h;
  im.options = options;
  const Eigen::Index m = s_ * n_;
  dense_ = options.backend == LinearBackend::dense ||
           (options.backend == LinearBackend::automatic && m <= options.dense_limit);

  if (dense_) {
    const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> Ld(L);
    im.dense_base = Impl::Dense::Identity(m, m);
    for (Eigen::Index i = 0; i < s_; ++i) {
      for (Eigen::Index j = 0; j < s_; ++j) {
        if (A(i, j) == S(0)) continue;
        im.dense_base.block(i * n_, j * n_, n_, n_) -= (S(h) * A(i, j)) * Ld;
      }
    }
    im.dense_work = im.dense_base;
    return;
  }

  std::vector<Eigen::Triplet<S>> triplets;
  triplets.reserve(static_cast<std::size_t>(s_ * s_ * (L.nonZeros() + n_)));
  for (Eigen::Index i = 0; i < s_; ++i) {
    for (Eigen::Index j = 0; j < s_; ++j) {
      const bool present = i == j || A(i, j) != S(0);
      if (!present) continue;
      const S scale = -S(h) * A(i, j);
      for (int outer = 0; outer < L.outerSize(); ++outer) {
        for (typename SparseMatrix<S>::InnerIterator it(L, outer); it; ++it) {
          triplets.emplace_back(i * n_ + it.row(), j * n_ + it.col(), scale * it.value());
        }
      }
      for (Eigen::Index k = 0; k < n_; ++k) {
        triplets.emplace_back(i * n_ + k, j * n_ + k, i == j ? S(1) : S(0));
      }
    }
  }
  im.base.resize(m, m);
  im.base.setFromTriplets(triplets.begin(), triplets.end());
  im.base.makeCompressed();
  im.work = im.base;
  im.diag_pos.assign(static_cast<std::size_t>(s_ * s_ * n_), -1);
  for (Eigen::Index i = 0; i < s_; ++i) {
    for (Eigen::Index j = 0; j < s_; ++j) {
      if (i != j && A(i, j) == S(0)) continue;
      for (Eigen::Index k = 0; k < n_; ++k) {
        const S* p = &im.work.coeffRef(i * n_ + k, j * n_ + k);
        im.diag_pos[static_cast<std::size_t>((i * s_ + j) * n_ + k)] = p - im.work.valuePtr();
      }
    }
  }
}

template <class S>
ShiftedBlockSystem<S>::~ShiftedBlockSystem() = default;
template <class S>
ShiftedBlockSystem<S>::ShiftedBlockSystem(ShiftedBlockSystem&&) noexcept = default;
template <class S>
ShiftedBlockSystem<S>& ShiftedBlockSystem<S>::operator=(ShiftedBlockSystem&&) noexcept = default;

template <class S>
bool ShiftedBlockSystem<S>::factorize() {
  return factorize(GammaMatrix<S>::Zero(s_, n_));
}

template <class S>
bool ShiftedBlockSystem<S>::factorize(const GammaMatrix<S>& shifts) {
  auto& im = *impl_;
  if (shifts.rows() != s_ || shifts.cols() != n_) {
    throw InvalidArgument("shift array has the wrong shape");
  }
  if (dense_) {
    im.dense_work = im.dense_base;
    for (Eigen::Index i = 0; i < s_; ++i) {
      for (Eigen::Index j = 0; j < s_; ++j) {
        const S a = S(im.h) * im.A(i, j);
        if (a == S(0)) continue;
        for (Eigen::Index k = 0; k < n_; ++k) im.dense_work(i * n_ + k, j * n_ + k) -= a * shifts(j, k);
      }
    }
    im.dense_lu.compute(im.dense_work);
    const auto diag = im.dense_lu.matrixLU().diagonal();
    for (Eigen::Index k = 0; k < diag.size(); ++k) {
      const double mag = std::abs(diag[k]);
      if (!(mag > 0.0) || !std::isfinite(mag)) return false;
    }
    return true;
  }

  std::copy(im.base.valuePtr(), im.base.valuePtr() + im.base.nonZeros(), im.work.valuePtr());
  S* values = im.work.valuePtr();
  for (Eigen::Index i = 0; i < s_; ++i) {
    for (Eigen::Index j = 0; j < s_; ++j) {
      const S a = S(im.h) * im.A(i, j);
      if (a == S(0)) continue;
      const std::size_t off = static_cast<std::size_t>((i * s_ + j) * n_);
      for (Eigen::Index k = 0; k < n_; ++k) values[im.diag_pos[off + static_cast<std::size_t>(k)]] -= a * shifts(j, k);
    }
  }
  if (im.options.backend == LinearBackend::bicgstab) {
    im.iterative.setTolerance(im.options.iterative_tolerance);
    im.iterative.compute(im.work);
    return im.iterative.info() == Eigen::Success;
  }
  if (!im.analyzed) {
    im.lu.analyzePattern(im.work);
    im.analyzed = true;
  }
  im.lu.factorize(im.work);
  return im.lu.info() == Eigen::Success;
}

template <class S>
StageMatrix<S> ShiftedBlockSystem<S>::solve(const StageMatrix<S>& rhs) const {
  StageMatrix<S> out(n_, s_);
  solve_into(rhs, out);
  return out;
}

template <class S>
void ShiftedBlockSystem<S>::solve_into(const StageMatrix<S>& rhs, StageMatrix<S>& out) const {
  const auto& im = *impl_;
  const Eigen::Index m = s_ * n_;
  if (rhs.rows() != n_ || rhs.cols() != s_) throw InvalidArgument("right-hand side has the wrong shape");
  out.resize(n_, s_);
  const Eigen::Map<const Vector<S>> b(rhs.data(), m);
  Eigen::Map<Vector<S>> x(out.data(), m);
  if (dense_) {
    x = im.dense_lu.solve(b);
  } else if (im.options.backend == LinearBackend::bicgstab) {
    x = im.iterative.solve(b);
  } else {
    x = im.lu.solve(b);
  }
}

template class ShiftedBlockSystem<double>;
template class ShiftedBlockSystem<cplx>;

}  // namespace linimp
