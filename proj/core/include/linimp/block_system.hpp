#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "linimp/problem.hpp"

namespace linimp {

enum class LinearBackend { automatic, dense, sparse_lu, bicgstab };

struct BlockSystemOptions {
  LinearBackend backend = LinearBackend::automatic;
  /// automatic picks dense LU at or below this many unknowns.
  Eigen::Index dense_limit = 64;
  double iterative_tolerance = 1e-14;
};

/// Linear system on s stacked blocks of size N:
///
///   (I - h (A kron L) - h (A kron I) diag(shift_1, ..., shift_s)) X = R
///
/// Block (i, j) is delta_ij I - h a_ij (L + diag(shift_j)).  The sparsity
/// pattern is fixed at construction, so per-step refactorisation only
/// rewrites values and reuses the symbolic analysis.
template <class S>
class ShiftedBlockSystem {
 public:
  ShiftedBlockSystem(const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>& A,
                     const SparseMatrix<S>& L, double h, BlockSystemOptions options = {});
  ~ShiftedBlockSystem();
  ShiftedBlockSystem(ShiftedBlockSystem&&) noexcept;
  ShiftedBlockSystem& operator=(ShiftedBlockSystem&&) noexcept;

  /// Factorises with the given shifts (s x N, row j shifts block column j).
  /// Returns false when the matrix is numerically singular.
  bool factorize(const GammaMatrix<S>& shifts);
  /// Factorises without shifts.
  bool factorize();

  /// Solves for an N x s right-hand side (column i is block i).
  StageMatrix<S> solve(const StageMatrix<S>& rhs) const;
  /// Same as solve() but writes into a preallocated N x s array.
  void solve_into(const StageMatrix<S>& rhs, StageMatrix<S>& out) const;

  Eigen::Index blocks() const { return s_; }
  Eigen::Index block_size() const { return n_; }
  bool uses_dense() const { return dense_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  Eigen::Index s_ = 0;
  Eigen::Index n_ = 0;
  bool dense_ = false;
};

extern template class ShiftedBlockSystem<double>;
extern template class ShiftedBlockSystem<cplx>;

}  // namespace linimp
