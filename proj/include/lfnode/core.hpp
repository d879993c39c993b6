#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lfnode {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
// One row per layer; rows are the per-layer vectors (states, adjoints, gradients).
using RowGrid = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Error taxonomy. Everything derives from std::runtime_error so callers that do
// not care about the category can catch one type.
struct ArgumentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnsupportedSizeError : ArgumentError {
  using ArgumentError::ArgumentError;
};

struct ResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Scheme { euler, leapfrog, reference };

// Selects between the OpenMP kernel and its serial reference loop. Both paths
// produce bit-identical results: parallel loops write into per-index slots and
// any reduction happens afterwards in index order.
enum class Execution { serial, parallel };

inline const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::euler: return "euler";
    case Scheme::leapfrog: return "leapfrog";
    case Scheme::reference: return "reference";
  }
  return "?";
}

// Grid time t_l = l / L. Computed as a quotient (not l * h) so that refining
// L -> 2L reproduces the shared times bit for bit.
inline double grid_time(std::size_t l, std::size_t layers) {
  return static_cast<double>(l) / static_cast<double>(layers);
}

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ArgumentError(what);
}

}  // namespace lfnode
