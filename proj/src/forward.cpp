#include "lfnode/forward.hpp"

namespace lfnode {

WeightGrid WeightGrid::sample(const WeightPath& path, std::size_t layers) {
  require(layers >= 1, "weight grid: need at least one layer");
  RowGrid rows(static_cast<Eigen::Index>(layers + 1), static_cast<Eigen::Index>(path.dim()));
  for (std::size_t l = 0; l <= layers; ++l) {
    rows.row(static_cast<Eigen::Index>(l)) = path(grid_time(l, layers)).transpose();
  }
  return WeightGrid(std::move(rows));
}

namespace {

void check_inputs(const FieldModel& field, const Vec& x, const WeightGrid& weights, std::size_t layers) {
  require(static_cast<std::size_t>(x.size()) == field.state_dim(), "input state dimension mismatch");
  require(weights.dim() == field.weight_dim(), "weight grid dimension mismatch");
  require(weights.rows() >= layers, "weight grid has fewer rows than layers");
}

Trajectory make_trajectory(const Vec& x, Scheme scheme, std::size_t layers) {
  Trajectory t;
  t.scheme = scheme;
  t.layers = layers;
  t.states.resize(static_cast<Eigen::Index>(layers + 1), x.size());
  t.states.row(0) = x.transpose();
  return t;
}

}  // namespace

Trajectory euler_trajectory(const FieldModel& field, const Vec& x, const WeightGrid& weights,
                            std::size_t layers) {
  require(layers >= 1, "euler: need at least one layer");
  check_inputs(field, x, weights, layers);
  const double h = 1.0 / static_cast<double>(layers);
  Trajectory t = make_trajectory(x, Scheme::euler, layers);
  Vec z = x;
  for (std::size_t l = 0; l < layers; ++l) {
    z += h * eval_field(field, z, weights.row(l));
    t.states.row(static_cast<Eigen::Index>(l + 1)) = z.transpose();
  }
  return t;
}

Trajectory leapfrog_trajectory(const FieldModel& field, const Vec& x, const WeightGrid& weights,
                               std::size_t layers) {
  require(layers >= 2, "leapfrog: need at least two layers");
  check_inputs(field, x, weights, layers);
  const double h = 1.0 / static_cast<double>(layers);
  Trajectory t = make_trajectory(x, Scheme::leapfrog, layers);
  Vec prev = x;
  Vec cur = x + h * eval_field(field, x, weights.row(0));
  t.states.row(1) = cur.transpose();
  for (std::size_t l = 0; l + 2 <= layers; ++l) {
    Vec next = prev + 2.0 * h * eval_field(field, cur, weights.row(l + 1));
    t.states.row(static_cast<Eigen::Index>(l + 2)) = next.transpose();
    prev = std::move(cur);
    cur = std::move(next);
  }
  return t;
}

Trajectory DenseSolution::coarse() const {
  Trajectory t;
  t.scheme = Scheme::reference;
  t.layers = layers;
  t.states.resize(static_cast<Eigen::Index>(layers + 1), states.cols());
  const std::size_t stride = substeps_per_layer();
  for (std::size_t l = 0; l <= layers; ++l) {
    t.states.row(static_cast<Eigen::Index>(l)) = states.row(static_cast<Eigen::Index>(l * stride));
  }
  return t;
}

DenseSolution reference_solution(const FieldModel& field, const Vec& x, const WeightFn& theta,
                                 std::size_t layers, std::size_t refine) {
  require(layers >= 1, "reference: need at least one layer");
  require(refine >= 1, "reference: refine must be >= 1");
  require(static_cast<std::size_t>(x.size()) == field.state_dim(), "input state dimension mismatch");

  DenseSolution sol;
  sol.layers = layers;
  sol.refine = refine;
  const std::size_t total = sol.substeps_per_layer() * layers;
  const double dt = sol.substep();
  sol.states.resize(static_cast<Eigen::Index>(total + 1), x.size());
  sol.states.row(0) = x.transpose();

  Vec z = x;
  for (std::size_t s = 0; s < total; ++s) {
    const double t0 = grid_time(s, total);
    const double tm = (static_cast<double>(s) + 0.5) / static_cast<double>(total);
    const double t1 = grid_time(s + 1, total);
    const Vec th0 = theta(t0), thm = theta(tm), th1 = theta(t1);
    const Vec k1 = eval_field(field, z, th0);
    const Vec k2 = eval_field(field, z + 0.5 * dt * k1, thm);
    const Vec k3 = eval_field(field, z + 0.5 * dt * k2, thm);
    const Vec k4 = eval_field(field, z + dt * k3, th1);
    z += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    sol.states.row(static_cast<Eigen::Index>(s + 1)) = z.transpose();
  }
  return sol;
}

Trajectory reference_trajectory(const FieldModel& field, const Vec& x, const WeightPath& path,
                                std::size_t layers, std::size_t refine) {
  require(path.dim() == field.weight_dim(), "weight path dimension mismatch");
  return reference_solution(field, x, [&path](double t) { return path(t); }, layers, refine).coarse();
}

}  // namespace lfnode
