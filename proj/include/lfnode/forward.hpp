#pragma once

#include "lfnode/core.hpp"
#include "lfnode/vecfield.hpp"

#include <functional>

namespace lfnode {

/// Per-layer weights theta_0..theta_{rows-1}. When sampled from a WeightPath the
/// grid holds L+1 rows (theta_L included); the discrete schemes read rows 0..L-1.
class WeightGrid {
 public:
  WeightGrid() = default;
  explicit WeightGrid(RowGrid rows) : rows_(std::move(rows)) {}

  static WeightGrid sample(const WeightPath& path, std::size_t layers);

  std::size_t rows() const { return static_cast<std::size_t>(rows_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(rows_.cols()); }
  Vec row(std::size_t l) const { return rows_.row(static_cast<Eigen::Index>(l)).transpose(); }
  const RowGrid& data() const { return rows_; }
  RowGrid& data() { return rows_; }

 private:
  RowGrid rows_;
};

/// States z_0..z_L of one forward pass.
struct Trajectory {
  RowGrid states;  // (L+1) x d
  Scheme scheme = Scheme::leapfrog;
  std::size_t layers = 0;

  double step() const { return 1.0 / static_cast<double>(layers); }
  Vec state(std::size_t l) const { return states.row(static_cast<Eigen::Index>(l)).transpose(); }
  Vec final_state() const { return state(layers); }
};

Trajectory euler_trajectory(const FieldModel& field, const Vec& x, const WeightGrid& weights,
                            std::size_t layers);

// z_1 = z_0 + h f(z_0, theta_0);  z_{l+2} = z_l + 2h f(z_{l+1}, theta_{l+1}).
Trajectory leapfrog_trajectory(const FieldModel& field, const Vec& x, const WeightGrid& weights,
                               std::size_t layers);

using WeightFn = std::function<Vec(double)>;

/// Fine-grid RK4 solution of dz/dt = f(z, theta(t)).
///
/// Integration uses 2*refine RK4 sub-steps per layer interval and keeps every
/// sub-step state, so the adjoint solver (which steps at h/refine) finds the
/// forward state at its RK4 stage times without interpolation.
struct DenseSolution {
  RowGrid states;  // (2 * refine * L + 1) x d
  std::size_t layers = 0;
  std::size_t refine = 0;

  std::size_t substeps_per_layer() const { return 2 * refine; }
  double substep() const { return 1.0 / static_cast<double>(substeps_per_layer() * layers); }
  Vec at(std::size_t fine_index) const {
    return states.row(static_cast<Eigen::Index>(fine_index)).transpose();
  }
  Trajectory coarse() const;
};

DenseSolution reference_solution(const FieldModel& field, const Vec& x, const WeightFn& theta,
                                 std::size_t layers, std::size_t refine);

Trajectory reference_trajectory(const FieldModel& field, const Vec& x, const WeightPath& path,
                                std::size_t layers, std::size_t refine = 64);

}  // namespace lfnode
