#pragma once

#include "lfnode/core.hpp"
#include "lfnode/discrete_adjoint.hpp"

#include <vector>

namespace lfnode {

/// Block-banded matrix whose nonzero blocks are all scalar multiples of the
/// m x m identity. Only the scalar coefficients are stored, row by row.
class BandedBlockMatrix {
 public:
  struct Entry {
    std::size_t col;
    double coeff;
  };

  BandedBlockMatrix(std::size_t layers, std::size_t block_size, std::vector<std::vector<Entry>> rows);

  std::size_t layers() const { return layers_; }
  std::size_t block_size() const { return block_size_; }
  const std::vector<Entry>& row(std::size_t i) const { return rows_.at(i); }

  double coefficient(std::size_t i, std::size_t j) const;
  // Max absolute row sum of the scalar pattern; equals the operator infinity
  // norm of the full block matrix because every block is c * I.
  double infinity_norm() const;
  std::vector<double> row_sums() const;
  Mat dense_pattern() const;  // L x L scalar coefficients

  // out.row(i) = sum_j c_ij * in.row(j).
  RowGrid apply(const RowGrid& in, Execution exec = Execution::parallel) const;

 private:
  std::size_t layers_;
  std::size_t block_size_;
  std::vector<std::vector<Entry>> rows_;
};

// Averaging operator for Leapfrog gradients (block size n):
//   row 0:        (1, 3/4, 0, -1/4) in columns 0..3
//   row 1:        1/2, 1/2, 1/4 in columns 0..2
//   rows 2..L-2:  1/4, 1/2, 1/4 around the diagonal
//   row L-1:      1/4, 1/2 in columns L-2, L-1
// Needs L >= 4 so that columns 0, 1 and 3 of row 0 are distinct.
BandedBlockMatrix build_T(std::size_t layers, std::size_t weight_dim);

// Same scalar pattern acting on back-propagator rows (block size d).
BandedBlockMatrix build_T_tilde(std::size_t layers, std::size_t state_dim);

/// Modified gradient T * grad; the scaling flag is carried through unchanged.
GradientGrid apply_modification(const BandedBlockMatrix& t, const GradientGrid& grad,
                                Execution exec = Execution::parallel);

/// q = T~ p.
RowGrid averaged_propagator(const BandedBlockMatrix& t_tilde, const Backpropagator& p,
                            Execution exec = Execution::parallel);

}  // namespace lfnode
