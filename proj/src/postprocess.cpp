#include "lfnode/postprocess.hpp"

#include "lfnode/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lfnode {

BandedBlockMatrix::BandedBlockMatrix(std::size_t layers, std::size_t block_size,
                                     std::vector<std::vector<Entry>> rows)
    : layers_(layers), block_size_(block_size), rows_(std::move(rows)) {
  require(block_size_ >= 1, "banded matrix: block size must be positive");
  require(rows_.size() == layers_, "banded matrix: one entry list per block row");
  for (const auto& r : rows_) {
    for (const auto& e : r) require(e.col < layers_, "banded matrix: column out of range");
  }
}

double BandedBlockMatrix::coefficient(std::size_t i, std::size_t j) const {
  double c = 0.0;
  for (const auto& e : rows_.at(i)) {
    if (e.col == j) c += e.coeff;
  }
  return c;
}

double BandedBlockMatrix::infinity_norm() const {
  double norm = 0.0;
  for (const auto& r : rows_) {
    double s = 0.0;
    for (const auto& e : r) s += std::abs(e.coeff);
    norm = std::max(norm, s);
  }
  return norm;
}

std::vector<double> BandedBlockMatrix::row_sums() const {
  std::vector<double> sums;
  sums.reserve(rows_.size());
  for (const auto& r : rows_) {
    double s = 0.0;
    for (const auto& e : r) s += e.coeff;
    sums.push_back(s);
  }
  return sums;
}

Mat BandedBlockMatrix::dense_pattern() const {
  Mat m = Mat::Zero(static_cast<Eigen::Index>(layers_), static_cast<Eigen::Index>(layers_));
  for (std::size_t i = 0; i < layers_; ++i) {
    for (const auto& e : rows_[i]) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(e.col)) += e.coeff;
  }
  return m;
}

RowGrid BandedBlockMatrix::apply(const RowGrid& in, Execution exec) const {
  if (static_cast<std::size_t>(in.rows()) != layers_ || static_cast<std::size_t>(in.cols()) != block_size_) {
    throw ArgumentError("banded matrix: operand is " + std::to_string(in.rows()) + " x " +
                        std::to_string(in.cols()) + ", expected " + std::to_string(layers_) + " x " +
                        std::to_string(block_size_));
  }
  RowGrid out = RowGrid::Zero(in.rows(), in.cols());
  for_each_index(layers_, exec, [&](std::size_t i) {
    for (const auto& e : rows_[i]) {
      out.row(static_cast<Eigen::Index>(i)) += e.coeff * in.row(static_cast<Eigen::Index>(e.col));
    }
  });
  return out;
}

namespace {

BandedBlockMatrix leapfrog_averaging(std::size_t layers, std::size_t block) {
  if (layers < 4) {
    throw UnsupportedSizeError("modification matrix: L = " + std::to_string(layers) +
                               " is unsupported (need L >= 4)");
  }
  using E = BandedBlockMatrix::Entry;
  std::vector<std::vector<E>> rows(layers);
  rows[0] = {E{0, 1.0}, E{1, 0.75}, E{3, -0.25}};
  rows[1] = {E{0, 0.5}, E{1, 0.5}, E{2, 0.25}};
  for (std::size_t i = 2; i + 1 < layers; ++i) rows[i] = {E{i - 1, 0.25}, E{i, 0.5}, E{i + 1, 0.25}};
  rows[layers - 1] = {E{layers - 2, 0.25}, E{layers - 1, 0.5}};
  return BandedBlockMatrix(layers, block, std::move(rows));
}

}  // namespace

BandedBlockMatrix build_T(std::size_t layers, std::size_t weight_dim) {
  return leapfrog_averaging(layers, weight_dim);
}

BandedBlockMatrix build_T_tilde(std::size_t layers, std::size_t state_dim) {
  return leapfrog_averaging(layers, state_dim);
}

GradientGrid apply_modification(const BandedBlockMatrix& t, const GradientGrid& grad, Execution exec) {
  return GradientGrid(t.apply(grad.rows(), exec), grad.scaling());
}

RowGrid averaged_propagator(const BandedBlockMatrix& t_tilde, const Backpropagator& p, Execution exec) {
  return t_tilde.apply(p.rows, exec);
}

}  // namespace lfnode
