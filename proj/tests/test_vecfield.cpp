#include "lfnode/forward.hpp"
#include "lfnode/vecfield.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace lfnode;

namespace {

Vec v(std::initializer_list<double> xs) {
  Vec out(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) out[i++] = x;
  return out;
}

Vec random_vec(Rng& rng, Eigen::Index n, double lo = -2.0, double hi = 2.0) {
  Vec out(n);
  for (auto& x : out) x = rng.uniform(lo, hi);
  return out;
}

double rel(const Mat& a, const Mat& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

}  // namespace

TEST_CASE("linear field evaluation") {
  const auto f = FieldModel::linear();
  CHECK(eval_field(f, v({1.0}), v({0.0}))[0] == 0.0);
  CHECK(eval_field(f, v({2.0}), v({3.0}))[0] == 6.0);
  CHECK(jac_z(f, v({2.0}), v({3.0}))(0, 0) == 3.0);
  CHECK(jac_theta(f, v({2.0}), v({3.0}))(0, 0) == 2.0);
}

TEST_CASE("tanh field with zero weights vanishes") {
  const auto f = FieldModel::tanh(1);
  CHECK(f.weight_dim() == 3);
  const Vec theta = v({1.0, 0.0, 0.0});  // sigma = 1, W = 0, b = 0
  for (double z : {-3.0, 0.0, 0.7, 10.0}) CHECK(eval_field(f, v({z}), theta)[0] == 0.0);
}

TEST_CASE("tanh field packs n = d^2 + 2d") {
  for (std::size_t d : {1u, 2u, 3u, 4u}) CHECK(FieldModel::tanh(d).weight_dim() == d * d + 2 * d);
}

TEST_CASE("dimension mismatch is an argument error") {
  const auto f = FieldModel::tanh(2);
  CHECK_THROWS_AS(eval_field(f, Vec::Zero(3), Vec::Zero(8)), ArgumentError);
  CHECK_THROWS_AS(jac_z(f, Vec::Zero(2), Vec::Zero(7)), ArgumentError);
  CHECK_THROWS_AS(jac_theta(FieldModel::linear(), Vec::Zero(2), Vec::Zero(1)), ArgumentError);
}

TEST_CASE("jac_z of tanh with W = 0 is the zero matrix") {
  const auto f = FieldModel::tanh(3);
  Vec theta = Vec::Zero(15);
  theta.head(3) << 1.0, -2.0, 0.5;
  theta.tail(3) << 0.3, 0.1, -0.4;
  CHECK(jac_z(f, v({0.2, -1.0, 3.0}), theta).isZero(0.0));
}

TEST_CASE("jac_theta blocks at z = 0, b = 0") {
  const auto f = FieldModel::tanh(2);
  Vec theta = Vec::Zero(8);
  theta.head(2) << 0.7, -1.3;          // sigma
  theta.segment(2, 4) << 1, 2, 3, 4;   // W
  const Mat j = jac_theta(f, Vec::Zero(2), theta);
  CHECK(j.block(0, 0, 2, 2).isZero(0.0));             // d f / d sigma = diag(tanh(0))
  CHECK(j.block(0, 2, 2, 4).isZero(0.0));             // proportional to z = 0
  CHECK(j(0, 6) == 0.7);  // d f / d b = diag(sigma)
  CHECK(j(1, 7) == -1.3);
  CHECK(j(0, 7) == 0.0);
  CHECK(j(1, 6) == 0.0);
}

TEST_CASE("analytic Jacobians match central differences on random tanh fields") {
  Rng rng(7);
  for (std::size_t d : {1u, 2u, 3u, 4u}) {
    const auto f = FieldModel::tanh(d);
    for (int s = 0; s < 10; ++s) {
      const Vec z = random_vec(rng, static_cast<Eigen::Index>(d));
      const Vec th = random_vec(rng, static_cast<Eigen::Index>(f.weight_dim()));
      const Mat num_z = oracle::fd_jacobian([&](const Vec& zz) { return eval_field(f, zz, th); }, z);
      const Mat num_t = oracle::fd_jacobian([&](const Vec& tt) { return eval_field(f, z, tt); }, th);
      CHECK(rel(jac_z(f, z, th), num_z) <= 1e-6);
      CHECK(rel(jac_theta(f, z, th), num_t) <= 1e-6);
    }
  }
}

TEST_CASE("fd_validate") {
  CHECK(fd_validate(FieldModel::linear(), 25, 1).max_rel_error() <= 1e-10);
  CHECK(fd_validate(FieldModel::linear(), 25, 99).max_rel_error() <= 1e-10);
  CHECK(fd_validate(FieldModel::tanh(2), 100, 3).max_rel_error() <= 1e-6);
  CHECK(fd_validate(FieldModel::tanh(4), 100, 4).max_rel_error() <= 1e-6);
  CHECK_THROWS_AS(fd_validate(FieldModel::tanh(2), 0, 1), ArgumentError);
}

TEST_CASE("custom field routes through its callbacks") {
  const auto f = FieldModel::custom(
      1, 1, [](const Vec& z, const Vec& t) { return Vec(z * t[0] * t[0]); },
      [](const Vec&, const Vec& t) { return Mat::Constant(1, 1, t[0] * t[0]); },
      [](const Vec& z, const Vec& t) { return Mat::Constant(1, 1, 2 * t[0] * z[0]); });
  CHECK(eval_field(f, v({2.0}), v({3.0}))[0] == 18.0);
  CHECK(fd_validate(f, 10, 5).max_rel_error() <= 1e-8);
}

TEST_CASE("tanh field satisfies the linear-growth bound on a lattice") {
  // |f| <= (|theta|^2 + 1)(|z| + 1) whenever |sigma_i| <= 1.
  const auto f = FieldModel::tanh(2);
  const double grid[] = {-4.0, -1.0, -0.25, 0.0, 0.5, 2.0, 6.0};
  Rng rng(11);
  int checked = 0;
  for (double a : grid) {
    for (double b : grid) {
      Vec th = random_vec(rng, 8, -3.0, 3.0);
      th.head(2) = random_vec(rng, 2, -1.0, 1.0);
      th[2] = a;
      th[7] = b;
      const Vec z = v({a, b});
      const double lhs = eval_field(f, z, th).norm();
      const double rhs = (th.squaredNorm() + 1.0) * (z.norm() + 1.0);
      CHECK(lhs <= rhs);
      ++checked;
    }
  }
  CHECK(checked == 49);
}

TEST_CASE("readouts and their gradients") {
  Readout lin{ReadoutKind::linear, v({1.0, 0.5})};
  CHECK(lin.value(v({2.0, -2.0})) == 1.0);
  CHECK(lin.gradient(v({2.0, -2.0})) == v({1.0, 0.5}));

  Readout th{ReadoutKind::tanh_linear, v({0.3, -0.8})};
  const Vec z = v({0.4, 1.1});
  const Mat num = oracle::fd_jacobian([&](const Vec& zz) { return Vec::Constant(1, th.value(zz)); }, z);
  CHECK((th.gradient(z).transpose() - num).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK_THROWS_AS(th.value(Vec::Zero(3)), ArgumentError);
}

TEST_CASE("weight path sampled at L and 2L agrees exactly at shared times") {
  const auto path = WeightPath::random(8, 42);
  for (std::size_t layers : {4u, 16u, 64u, 512u}) {
    const WeightGrid coarse = WeightGrid::sample(path, layers);
    const WeightGrid fine = WeightGrid::sample(path, 2 * layers);
    CHECK(coarse.rows() == layers + 1);
    for (std::size_t l = 0; l <= layers; ++l) CHECK(coarse.row(l) == fine.row(2 * l));
  }
}

TEST_CASE("weight path is deterministic and smooth") {
  const auto a = WeightPath::random(3, 5);
  const auto b = WeightPath::random(3, 5);
  const auto c = WeightPath::random(3, 6);
  CHECK(a(0.37) == b(0.37));
  CHECK(a(0.37) != c(0.37));
  // second difference quotient stays bounded (C^2 with |theta''| <= (2 pi)^2 * sum |coeff| k)
  const double eps = 1e-3;
  for (double t = 0.05; t < 1.0; t += 0.1) {
    const Vec d2 = (a(t + eps) - 2 * a(t) + a(t - eps)) / (eps * eps);
    CHECK(d2.cwiseAbs().maxCoeff() < 4 * 39.5 * 2.0);
  }
  const auto k = WeightPath::constant(v({1.5, -2.0}));
  CHECK(k(0.0) == k(0.77));
  CHECK(k(1.0)[1] == -2.0);
}
