#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "linimp/block_system.hpp"
#include "linimp/errors.hpp"
#include "linimp/problem.hpp"

namespace linimp {

/// Constant step runs: the step is T / steps with steps = round(T / h)
/// unless given explicitly.
struct RunOptions {
  double T = 1.0;
  double h = 0.1;
  std::optional<std::int64_t> steps;
  std::int64_t max_snapshots = 1001;
  bool store_all = false;
  BlockSystemOptions linear;
};

template <class S>
struct Trajectory {
  std::vector<std::int64_t> step;
  std::vector<double> t;
  std::vector<Vector<S>> u;

  std::size_t size() const { return t.size(); }
};

/// Called once with the initial state and then after every step.  `gamma` is
/// the multiplier array that produced `u` (the initial one at step 0) and is
/// null for methods without lagged multipliers.
template <class S>
using StepObserver =
    std::function<void(std::int64_t step, double t, const Vector<S>& u, const GammaMatrix<S>* gamma)>;

/// Resolved step count and step size of a run.
struct StepPlan {
  std::int64_t steps = 0;
  double h = 0.0;
};

inline StepPlan plan_steps(const RunOptions& opt) {
  if (!(opt.T > 0.0) || !std::isfinite(opt.T)) throw InvalidArgument("final time must be positive");
  std::int64_t n = 0;
  if (opt.steps) {
    n = *opt.steps;
  } else {
    if (!(opt.h > 0.0)) throw InvalidArgument("time step must be positive");
    if (opt.h > opt.T * (1.0 + 1e-12)) throw InvalidArgument("time step exceeds final time");
    n = std::llround(opt.T / opt.h);
  }
  if (n < 1) throw InvalidArgument("a run needs at least one step");
  return {n, opt.T / static_cast<double>(n)};
}

/// Keeps at most max_snapshots states, uniformly decimated, always including
/// the first and last.
template <class S>
class SnapshotRecorder {
 public:
  SnapshotRecorder(std::int64_t first_step, std::int64_t last_step, const RunOptions& opt)
      : last_(last_step) {
    const std::int64_t span = last_step - first_step;
    if (opt.store_all || opt.max_snapshots < 2 || span < opt.max_snapshots) {
      stride_ = 1;
    } else {
      stride_ = (span + opt.max_snapshots - 2) / (opt.max_snapshots - 1);
    }
    first_ = first_step;
  }

  bool wants(std::int64_t step) const { return (step - first_) % stride_ == 0 || step == last_; }

  void offer(std::int64_t step, double t, const Vector<S>& u) {
    if (wants(step)) {
      traj_.step.push_back(step);
      traj_.t.push_back(t);
      traj_.u.push_back(u);
    }
  }

  Trajectory<S> take() { return std::move(traj_); }

 private:
  std::int64_t first_ = 0;
  std::int64_t last_ = 0;
  std::int64_t stride_ = 1;
  Trajectory<S> traj_;
};

template <class S>
struct IntegratorState {
  double t = 0.0;
  Vector<S> u;
  GammaMatrix<S> Gamma;
  std::int64_t step_index = 0;
};

template <class S>
struct RunResult {
  Trajectory<S> trajectory;
  Vector<S> final_u;
  double t_final = 0.0;
  /// Lagged multipliers at the end, for linearly implicit runs.
  std::optional<IntegratorState<S>> final_state;
  /// Steps where h |A|_inf max|gamma| >= 1.
  std::int64_t guard_violations = 0;
  double h = 0.0;
  std::int64_t steps = 0;
};

template <class S>
void check_finite(const Vector<S>& u, std::int64_t step) {
  if (!u.allFinite()) throw BlowupDetected("non-finite state", step);
}

/// Runs `advance` from (t0, u0) for `steps` constant steps, recording and
/// observing along the way.
template <class S, class Advance>
RunResult<S> drive(const Vector<S>& u0, double t0, std::int64_t first_step, StepPlan plan,
                   const RunOptions& opt, const StepObserver<S>& observer, Advance&& advance) {
  RunResult<S> out;
  out.h = plan.h;
  out.steps = plan.steps;
  const std::int64_t last = first_step + plan.steps;
  SnapshotRecorder<S> rec(first_step, last, opt);
  Vector<S> u = u0;
  rec.offer(first_step, t0, u);
  if (observer) observer(first_step, t0, u, nullptr);
  for (std::int64_t k = first_step; k < last; ++k) {
    advance(u, k);
    check_finite(u, k + 1);
    const double t = t0 + static_cast<double>(k + 1 - first_step) * plan.h;
    rec.offer(k + 1, t, u);
    if (observer) observer(k + 1, t, u, nullptr);
  }
  out.trajectory = rec.take();
  out.t_final = t0 + static_cast<double>(plan.steps) * plan.h;
  out.final_u = std::move(u);
  return out;
}

}  // namespace linimp
