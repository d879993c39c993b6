#include "lfnode/continuum_adjoint.hpp"

#include "lfnode/parallel.hpp"

#include <cmath>

namespace lfnode {

AdjointPath adjoint_solve(const FieldModel& field, const WeightFn& theta, const DenseSolution& ref,
                          const LossSpec& loss, std::size_t pair) {
  require(ref.layers >= 1 && ref.refine >= 1 && ref.states.rows() > 0, "adjoint_solve: missing reference solution");
  require(static_cast<std::size_t>(ref.states.rows()) == ref.substeps_per_layer() * ref.layers + 1,
          "adjoint_solve: reference solution is not dense");
  require(static_cast<std::size_t>(ref.states.cols()) == field.state_dim(), "adjoint_solve: dimension mismatch");

  const std::size_t steps = ref.refine * ref.layers;  // adjoint steps of size h/refine
  const std::size_t fine = 2 * steps;
  const double dt = 1.0 / static_cast<double>(steps);
  const auto rhs = [&](std::size_t fine_index, const Vec& p) -> Vec {
    return jac_z(field, ref.at(fine_index), theta(grid_time(fine_index, fine))).transpose() * p;
  };

  AdjointPath out;
  out.refine = ref.refine;
  out.samples.resize(static_cast<Eigen::Index>(ref.layers + 1), static_cast<Eigen::Index>(field.state_dim()));

  const Vec z1 = ref.at(fine);
  Vec p = loss.mismatch(z1, pair) * loss.readout.gradient(z1);
  out.samples.row(static_cast<Eigen::Index>(ref.layers)) = p.transpose();
  for (std::size_t j = steps; j-- > 0;) {
    // step from t_{j+1} back to t_j; dense indices 2j+2, 2j+1, 2j
    const Vec k1 = rhs(2 * j + 2, p);
    const Vec k2 = rhs(2 * j + 1, p + 0.5 * dt * k1);
    const Vec k3 = rhs(2 * j + 1, p + 0.5 * dt * k2);
    const Vec k4 = rhs(2 * j, p + dt * k3);
    p += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (j % ref.refine == 0) out.samples.row(static_cast<Eigen::Index>(j / ref.refine)) = p.transpose();
  }
  return out;
}

FunctionalDerivative functional_derivative(const FieldModel& field, const AdjointPath& adjoint,
                                           const Trajectory& ref, const WeightFn& theta) {
  require(adjoint.layers() == ref.layers && static_cast<std::size_t>(ref.states.rows()) == ref.layers + 1,
          "functional_derivative: adjoint and reference grids differ");
  FunctionalDerivative out;
  out.rows.resize(static_cast<Eigen::Index>(ref.layers), static_cast<Eigen::Index>(field.weight_dim()));
  for (std::size_t l = 0; l < ref.layers; ++l) {
    const Vec th = theta(grid_time(l, ref.layers));
    out.rows.row(static_cast<Eigen::Index>(l)) =
        (jac_theta(field, ref.state(l), th).transpose() * adjoint.at(l)).transpose();
  }
  return out;
}

FunctionalDerivative ground_truth(const FieldModel& field, const WeightPath& path, const LossSpec& loss,
                                  std::size_t layers, std::size_t refine, Execution exec) {
  loss.validate(field.state_dim());
  require(path.dim() == field.weight_dim(), "ground_truth: weight path dimension mismatch");
  const WeightFn theta = [&path](double t) { return path(t); };
  std::vector<FunctionalDerivative> per_pair(loss.size());
  for_each_index(loss.size(), exec, [&](std::size_t i) {
    const DenseSolution dense = reference_solution(field, loss.pairs[i].x, theta, layers, refine);
    const AdjointPath adj = adjoint_solve(field, theta, dense, loss, i);
    per_pair[i] = functional_derivative(field, adj, dense.coarse(), theta);
  });
  FunctionalDerivative sum = std::move(per_pair[0]);
  for (std::size_t i = 1; i < per_pair.size(); ++i) sum.rows += per_pair[i].rows;
  sum.rows /= static_cast<double>(loss.size());
  return sum;
}

double continuous_loss(const FieldModel& field, const WeightFn& theta, const LossSpec& loss,
                       std::size_t layers, std::size_t refine) {
  loss.validate(field.state_dim());
  double sum = 0.0;
  for (std::size_t i = 0; i < loss.size(); ++i) {
    const DenseSolution dense = reference_solution(field, loss.pairs[i].x, theta, layers, refine);
    const double r = loss.mismatch(dense.at(static_cast<std::size_t>(dense.states.rows()) - 1), i);
    sum += r * r;
  }
  return sum / (2.0 * static_cast<double>(loss.size()));
}

double max_row_error(const GradientGrid& scaled, const FunctionalDerivative& truth) {
  if (scaled.scaling() != GradientScaling::times_L) {
    throw ArgumentError("comparison against the functional derivative needs L-scaled gradients");
  }
  require(scaled.layers() == truth.layers() && static_cast<Eigen::Index>(scaled.dim()) == truth.rows.cols(),
          "gradient and functional derivative grids differ");
  return (scaled.rows() - truth.rows).cwiseAbs().maxCoeff();
}

double LinearModelOracle::z(double t) const { return x * std::exp(theta * t); }

double LinearModelOracle::p(double t) const {
  return (x * std::exp(theta) - y) * std::exp(theta * (1.0 - t));
}

}  // namespace lfnode
