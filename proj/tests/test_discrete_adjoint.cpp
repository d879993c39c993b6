#include "lfnode/config.hpp"
#include "lfnode/discrete_adjoint.hpp"
#include "lfnode/experiments.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace lfnode;

namespace {

Vec scalar(double x) { return Vec::Constant(1, x); }

WeightGrid constant_grid(std::size_t layers, const Vec& value) {
  RowGrid rows(static_cast<Eigen::Index>(layers + 1), value.size());
  rows.rowwise() = value.transpose();
  return WeightGrid(rows);
}

LossSpec linear_loss(double x = 1.0, double y = 0.0) {
  return LossSpec{Readout{ReadoutKind::linear, scalar(1.0)}, {DataPair{scalar(x), y}}};
}

// A tanh instance with sampled inputs and weights.
Instance tanh_instance(std::size_t d, std::uint64_t seed, std::size_t pairs = 1) {
  ExperimentConfig c;
  c.d = d;
  c.readout_c.assign(d, 0.7);
  c.path_seed = seed;
  c.seed = seed + 100;
  c.data_x.clear();
  c.data_y.clear();
  c.n_pairs = pairs;
  c.y_rule = YRule::constant;
  c.y_value = -0.2;
  return build_instance(c);
}

}  // namespace

TEST_CASE("back-propagator hand values on the linear model, L = 4") {
  const auto f = FieldModel::linear();
  const auto w = constant_grid(4, scalar(1.0));
  const auto traj = leapfrog_trajectory(f, scalar(1.0), w, 4);
  const auto p = leapfrog_backprop(f, traj, w, linear_loss(), 0);
  REQUIRE(p.layers() == 4);
  CHECK(p.scheme == Scheme::leapfrog);
  CHECK(std::abs(p.row(3)[0] - 5.3125) <= 1e-12);
  CHECK(std::abs(p.row(2)[0] - 2.65625) <= 1e-12);
  CHECK(std::abs(p.row(1)[0] - 6.640625) <= 1e-12);
  CHECK(std::abs(p.row(0)[0] - 2.98828125) <= 1e-12);

  const auto g = assemble_gradient(p, traj, w, f);
  CHECK(g.scaling() == GradientScaling::raw);
  const double expected[] = {2.98828125, 8.30078125, 4.31640625, 10.95703125};
  const auto scaled = g.as(GradientScaling::times_L);
  for (std::size_t l = 0; l < 4; ++l) CHECK(std::abs(scaled.row(l)[0] - expected[l]) <= 1e-12);
}

TEST_CASE("zero mismatch gives a zero back-propagator and gradient") {
  const auto f = FieldModel::linear();
  const auto w = constant_grid(8, scalar(1.0));
  const auto traj = leapfrog_trajectory(f, scalar(1.0), w, 8);
  const auto loss = linear_loss(1.0, traj.final_state()[0]);
  const auto p = leapfrog_backprop(f, traj, w, loss, 0);
  CHECK(p.rows.isZero(0.0));
  CHECK(assemble_gradient(p, traj, w, f).rows().isZero(0.0));
  CHECK(tape_gradient(f, w, loss, 8, Scheme::leapfrog).rows().isZero(0.0));
  CHECK(euler_backprop(f, euler_trajectory(f, scalar(1.0), w, 8), w,
                       linear_loss(1.0, euler_trajectory(f, scalar(1.0), w, 8).final_state()[0]), 0)
            .rows()
            .isZero(0.0));
}

TEST_CASE("leapfrog_backprop preconditions") {
  const auto f = FieldModel::linear();
  for (std::size_t layers : {2u, 3u}) {
    const auto w = constant_grid(layers, scalar(1.0));
    const auto traj = leapfrog_trajectory(f, scalar(1.0), w, layers);
    CHECK_THROWS_AS(leapfrog_backprop(f, traj, w, linear_loss(), 0), UnsupportedSizeError);
  }
  const auto w = constant_grid(4, scalar(1.0));
  CHECK_THROWS_AS(leapfrog_backprop(f, euler_trajectory(f, scalar(1.0), w, 4), w, linear_loss(), 0), ArgumentError);
  CHECK_THROWS_AS(euler_backprop(f, leapfrog_trajectory(f, scalar(1.0), w, 4), w, linear_loss(), 0), ArgumentError);
}

TEST_CASE("back-propagator rows are scaled state adjoints") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Instance inst = tanh_instance(3, seed);
    const std::size_t layers = 16;
    const auto w = WeightGrid::sample(inst.path, layers);
    const auto traj = leapfrog_trajectory(inst.field, inst.loss.pairs[0].x, w, layers);
    const auto p = leapfrog_backprop(inst.field, traj, w, inst.loss, 0);
    const RowGrid adj = tape_state_adjoints(inst.field, w, inst.loss, layers, Scheme::leapfrog, 0);
    RowGrid mapped(p.rows.rows(), p.rows.cols());
    mapped.row(0) = adj.row(1);
    for (Eigen::Index l = 1; l < mapped.rows(); ++l) mapped.row(l) = 2.0 * adj.row(l + 1);
    const double scale = mapped.cwiseAbs().maxCoeff();
    REQUIRE(scale > 0.0);
    CHECK((p.rows - mapped).cwiseAbs().maxCoeff() / scale <= 1e-12);
  }
}

TEST_CASE("recursion equals tape on the linear model, L = 4") {
  const auto f = FieldModel::linear();
  const auto w = constant_grid(4, scalar(1.0));
  const auto traj = leapfrog_trajectory(f, scalar(1.0), w, 4);
  const auto rec = assemble_gradient(leapfrog_backprop(f, traj, w, linear_loss(), 0), traj, w, f);
  CHECK(max_abs_error(rec, tape_gradient(f, w, linear_loss(), 4, Scheme::leapfrog)) <= 1e-14);
}

TEST_CASE("recursion matches brute-force differences of the hand loss") {
  const oracle::ScalarLinear model;
  const std::size_t layers = 4;
  const auto f = FieldModel::linear();
  const auto w = constant_grid(layers, scalar(1.0));
  const auto traj = leapfrog_trajectory(f, scalar(1.0), w, layers);
  const auto rec = assemble_gradient(leapfrog_backprop(f, traj, w, linear_loss(), 0), traj, w, f);
  const double step = 1e-5;
  for (std::size_t l = 0; l < layers; ++l) {
    std::vector<double> up(layers, 1.0), down(layers, 1.0);
    up[l] += step;
    down[l] -= step;
    const double fd = (model.leapfrog_loss(up) - model.leapfrog_loss(down)) / (2 * step);
    CHECK(std::abs(rec.row(l)[0] - fd) <= 1e-6);
  }
  CHECK(max_abs_error(rec, fd_gradient(f, w, linear_loss(), layers, Scheme::leapfrog)) <= 1e-6);
}

TEST_CASE("recursion, tape and finite differences agree on tanh instances") {
  for (std::size_t d : {1u, 2u, 4u}) {
    for (std::size_t layers : {4u, 9u, 16u}) {
      const Instance inst = tanh_instance(d, 10 * d + layers, 2);
      const auto w = WeightGrid::sample(inst.path, layers);
      const auto rec = network_gradient(inst.field, w, inst.loss, layers, Scheme::leapfrog);
      const auto tape = tape_gradient(inst.field, w, inst.loss, layers, Scheme::leapfrog);
      const auto fd = fd_gradient(inst.field, w, inst.loss, layers, Scheme::leapfrog);
      CHECK(relative_error(rec, tape) <= 1e-12);
      CHECK(relative_error(rec, fd) <= 1e-4);
    }
  }
}

TEST_CASE("euler back-propagation: hand values, tape and finite differences") {
  const auto f = FieldModel::linear();
  const auto w = constant_grid(2, scalar(1.0));
  const auto g = euler_backprop(f, euler_trajectory(f, scalar(1.0), w, 2), w, linear_loss(), 0);
  CHECK(std::abs(g.row(0)[0] - 1.6875) <= 1e-14);
  CHECK(std::abs(g.row(1)[0] - 1.6875) <= 1e-14);

  for (std::uint64_t seed : {5u, 6u}) {
    const Instance inst = tanh_instance(3, seed, 3);
    const std::size_t layers = 12;
    const auto wt = WeightGrid::sample(inst.path, layers);
    const auto rec = network_gradient(inst.field, wt, inst.loss, layers, Scheme::euler);
    CHECK(relative_error(rec, tape_gradient(inst.field, wt, inst.loss, layers, Scheme::euler)) <= 1e-12);
    CHECK(relative_error(rec, fd_gradient(inst.field, wt, inst.loss, layers, Scheme::euler)) <= 1e-4);
  }
}

TEST_CASE("ghost grid: p_L = 0 reproduces p_{L-2}") {
  const Instance inst = tanh_instance(2, 77);
  const std::size_t layers = 10;
  const double h = 1.0 / layers;
  const auto w = WeightGrid::sample(inst.path, layers);
  const auto traj = leapfrog_trajectory(inst.field, inst.loss.pairs[0].x, w, layers);
  const auto p = leapfrog_backprop(inst.field, traj, w, inst.loss, 0);
  const Vec ghost = Vec::Zero(2);
  const Vec interior_step =
      ghost + 2 * h * jac_z(inst.field, traj.state(layers - 1), w.row(layers - 1)).transpose() * p.row(layers - 1);
  CHECK((interior_step - p.row(layers - 2)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("scaling conventions cannot be mixed") {
  RowGrid r = RowGrid::Ones(4, 2);
  const GradientGrid raw(r, GradientScaling::raw);
  const GradientGrid scaled = raw.as(GradientScaling::times_L);
  CHECK(scaled.rows()(0, 0) == 4.0);
  CHECK(scaled.as(GradientScaling::raw).rows() == r);
  CHECK_THROWS_AS(relative_error(raw, scaled), ArgumentError);
  CHECK_THROWS_AS(max_abs_error(raw, scaled), ArgumentError);
  CHECK(relative_error(raw, raw) == 0.0);
}

TEST_CASE("ensemble gradient is the mean of the single-pair gradients") {
  const Instance inst = tanh_instance(2, 31, 3);
  const std::size_t layers = 8;
  const auto w = WeightGrid::sample(inst.path, layers);
  RowGrid mean = RowGrid::Zero(static_cast<Eigen::Index>(layers), static_cast<Eigen::Index>(inst.field.weight_dim()));
  for (const auto& pair : inst.loss.pairs) {
    const LossSpec single{inst.loss.readout, {pair}};
    mean += network_gradient(inst.field, w, single, layers, Scheme::leapfrog).rows();
  }
  mean /= 3.0;
  const auto all = network_gradient(inst.field, w, inst.loss, layers, Scheme::leapfrog);
  CHECK((all.rows() - mean).cwiseAbs().maxCoeff() <= 1e-14 * std::max(1.0, mean.cwiseAbs().maxCoeff()));
  CHECK(relative_error(all, tape_gradient(inst.field, w, inst.loss, layers, Scheme::leapfrog)) <= 1e-12);
}

TEST_CASE("halved interior step breaks agreement with the tape") {
  const Instance inst = tanh_instance(2, 8);
  const std::size_t layers = 16;
  const auto w = WeightGrid::sample(inst.path, layers);
  const auto traj = leapfrog_trajectory(inst.field, inst.loss.pairs[0].x, w, layers);
  const auto bad = assemble_gradient(
      leapfrog_backprop(inst.field, traj, w, inst.loss, 0, BackpropHook::halved_step), traj, w, inst.field);
  CHECK(relative_error(bad, tape_gradient(inst.field, w, inst.loss, layers, Scheme::leapfrog)) > 1e-3);
}

TEST_CASE("tape refuses oversized graphs") {
  const Instance inst = tanh_instance(4, 3);
  const auto w = WeightGrid::sample(inst.path, 64);
  TapeOptions tiny;
  tiny.max_graph_size = 100;
  CHECK_THROWS_AS(tape_gradient(inst.field, w, inst.loss, 64, Scheme::leapfrog, tiny), ResourceError);
}

TEST_CASE("middle agent approaches the back-propagator at second order") {
  ExperimentConfig c;
  c.levels = {16, 32, 64, 128};
  std::vector<std::pair<double, double>> pts;
  for (const auto& lv : run_rate_study(c)) pts.emplace_back(lv.h, lv.middle);
  const auto s = fit_rate(pts);
  REQUIRE(s);
  CHECK(*s >= 1.8);
}

TEST_CASE("finite differences at very small steps are reported, not asserted") {
  const auto f = FieldModel::linear();
  const auto w = constant_grid(4, scalar(1.0));
  const auto exact = tape_gradient(f, w, linear_loss(), 4, Scheme::leapfrog);
  const double coarse = max_abs_error(fd_gradient(f, w, linear_loss(), 4, Scheme::leapfrog, 1e-5), exact);
  const double tiny = max_abs_error(fd_gradient(f, w, linear_loss(), 4, Scheme::leapfrog, 1e-9), exact);
  MESSAGE("fd error at step 1e-5: " << coarse << ", at step 1e-9: " << tiny);
  CHECK(coarse <= 1e-6);
}
