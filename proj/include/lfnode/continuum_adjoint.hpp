#pragma once

#include "lfnode/core.hpp"
#include "lfnode/discrete_adjoint.hpp"
#include "lfnode/forward.hpp"
#include "lfnode/vecfield.hpp"

namespace lfnode {

/// Continuous adjoint p(t) sampled at t_l = l/L, l = 0..L.
struct AdjointPath {
  RowGrid samples;  // (L+1) x d
  std::size_t refine = 0;

  std::size_t layers() const { return static_cast<std::size_t>(samples.rows()) - 1; }
  Vec at(std::size_t l) const { return samples.row(static_cast<Eigen::Index>(l)).transpose(); }
};

/// Rows dE~/dtheta(t_l) for l = 0..L-1.
struct FunctionalDerivative {
  RowGrid rows;  // L x n

  std::size_t layers() const { return static_cast<std::size_t>(rows.rows()); }
  Vec row(std::size_t l) const { return rows.row(static_cast<Eigen::Index>(l)).transpose(); }
};

/// Integrates -dp/dt = dz f(z(t), theta(t))^T p backward from
/// p(1) = (g(z(1)) - y) grad g(z(1)) with RK4 steps of size h/refine. Forward
/// states at stage times are read from the dense reference solution.
AdjointPath adjoint_solve(const FieldModel& field, const WeightFn& theta, const DenseSolution& ref,
                          const LossSpec& loss, std::size_t pair);

FunctionalDerivative functional_derivative(const FieldModel& field, const AdjointPath& adjoint,
                                           const Trajectory& ref, const WeightFn& theta);

/// Ensemble ground truth: mean over data pairs of the functional derivative,
/// computed from a fresh reference solve per pair.
FunctionalDerivative ground_truth(const FieldModel& field, const WeightPath& path, const LossSpec& loss,
                                  std::size_t layers, std::size_t refine, Execution exec = Execution::parallel);

/// E~ = (1/2N) sum |g(z(1; x_i)) - y_i|^2 with z from the reference solver.
double continuous_loss(const FieldModel& field, const WeightFn& theta, const LossSpec& loss,
                       std::size_t layers, std::size_t refine);

/// max_l || (L grad)_l - dE~/dtheta(t_l) ||_inf. The gradient must be in the
/// times_L convention; anything else is an ArgumentError.
double max_row_error(const GradientGrid& scaled, const FunctionalDerivative& truth);

/// Closed forms for f = theta_bar * z, g(z) = z, d = n = 1.
struct LinearModelOracle {
  double x = 1.0;
  double theta = 1.0;
  double y = 0.0;

  double z(double t) const;
  double p(double t) const;
  double derivative(double t) const { return p(t) * z(t); }
};

}  // namespace lfnode
