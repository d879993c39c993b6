#pragma once

#include "lfnode/core.hpp"
#include "lfnode/forward.hpp"
#include "lfnode/vecfield.hpp"

#include <vector>

namespace lfnode {

struct DataPair {
  Vec x;
  double y = 0.0;
};

/// Least-squares ensemble loss E = (1/2N) sum_i |g(z_L(x_i)) - y_i|^2.
struct LossSpec {
  Readout readout;
  std::vector<DataPair> pairs;

  std::size_t size() const { return pairs.size(); }
  void validate(std::size_t state_dim) const;
  // g(z) - y for pair i.
  double mismatch(const Vec& z_final, std::size_t pair) const;
};

/// Discrete adjoint rows p_0..p_{L-1}.
struct Backpropagator {
  RowGrid rows;  // L x d
  Scheme scheme = Scheme::leapfrog;

  std::size_t layers() const { return static_cast<std::size_t>(rows.rows()); }
  Vec row(std::size_t l) const { return rows.row(static_cast<Eigen::Index>(l)).transpose(); }
};

enum class GradientScaling { raw, times_L };

inline const char* to_string(GradientScaling s) { return s == GradientScaling::raw ? "raw" : "times_L"; }

/// Per-layer gradient rows, tagged with the scaling convention. `raw` rows are
/// dE/dtheta_l; `times_L` rows are L * dE/dtheta_l, the convention that is
/// comparable with the functional derivative sampled at t_l.
class GradientGrid {
 public:
  GradientGrid() = default;
  GradientGrid(RowGrid rows, GradientScaling scaling) : rows_(std::move(rows)), scaling_(scaling) {}

  std::size_t layers() const { return static_cast<std::size_t>(rows_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(rows_.cols()); }
  GradientScaling scaling() const { return scaling_; }
  const RowGrid& rows() const { return rows_; }
  RowGrid& rows() { return rows_; }
  Vec row(std::size_t l) const { return rows_.row(static_cast<Eigen::Index>(l)).transpose(); }

  // Returns a copy in the requested convention.
  GradientGrid as(GradientScaling target) const;

 private:
  RowGrid rows_;
  GradientScaling scaling_ = GradientScaling::raw;
};

// max |a - b| / max |b| over all entries (absolute when b == 0). Throws when the
// scaling conventions differ.
double relative_error(const GradientGrid& a, const GradientGrid& b);
double max_abs_error(const GradientGrid& a, const GradientGrid& b);

/// Test hook for negative controls: `halved_step` replaces the 2h factor of the
/// interior recursion with h, which must make every cross-check fail.
enum class BackpropHook { none, halved_step };

/// Closed-form reverse sweep of the Leapfrog network for one data pair:
///   p_{L-1} = 2 (g(z_L) - y) grad g(z_L)
///   p_{L-2} = 2h p_{L-1}^T dz f(z_{L-1}, theta_{L-1})
///   p_l     = p_{l+2} + 2h p_{l+1}^T dz f(z_{l+1}, theta_{l+1}),  l = L-3 .. 1
///   p_0     = p_2 / 2 + h p_1^T dz f(z_1, theta_1)
/// Accepts a leapfrog trajectory, or a reference trajectory to build the
/// middle agent (same recursion on exact ODE states). Requires L >= 4.
Backpropagator leapfrog_backprop(const FieldModel& field, const Trajectory& traj, const WeightGrid& weights,
                                 const LossSpec& loss, std::size_t pair,
                                 BackpropHook hook = BackpropHook::none);

/// Single-pair gradient dE/dtheta_l = h p_l^T dtheta f(z_l, theta_l).
GradientGrid assemble_gradient(const Backpropagator& p, const Trajectory& traj, const WeightGrid& weights,
                               const FieldModel& field);

/// Ensemble gradient: mean over pairs of the single-pair assemblies.
GradientGrid assemble_gradient(const std::vector<Backpropagator>& ps, const std::vector<Trajectory>& trajs,
                               const WeightGrid& weights, const FieldModel& field);

/// Euler-network adjoint: p_{L-1} = (g - y) grad g, p_l = p_{l+1}^T (I + h dz f(z_{l+1})).
Backpropagator euler_backpropagator(const FieldModel& field, const Trajectory& traj, const WeightGrid& weights,
                                    const LossSpec& loss, std::size_t pair);

GradientGrid euler_backprop(const FieldModel& field, const Trajectory& traj, const WeightGrid& weights,
                            const LossSpec& loss, std::size_t pair);

Trajectory run_scheme(const FieldModel& field, const Vec& x, const WeightGrid& weights, std::size_t layers,
                      Scheme scheme);

double discrete_loss(const FieldModel& field, const WeightGrid& weights, const LossSpec& loss,
                     std::size_t layers, Scheme scheme);

/// Back-propagated gradient of the ensemble loss for the Euler or Leapfrog
/// network. Pairs are processed concurrently under Execution::parallel.
GradientGrid network_gradient(const FieldModel& field, const WeightGrid& weights, const LossSpec& loss,
                              std::size_t layers, Scheme scheme, Execution exec = Execution::parallel);

struct TapeOptions {
  // Upper bound on L * d * n; larger problems are refused with ResourceError.
  double max_graph_size = 5.0e7;
};

/// Builds the full computation graph of the ensemble loss through the scheme and
/// sweeps it once in reverse.
GradientGrid tape_gradient(const FieldModel& field, const WeightGrid& weights, const LossSpec& loss,
                           std::size_t layers, Scheme scheme, const TapeOptions& options = {});

/// Tape adjoints dE/dz_l for one pair, l = 0..L (used to cross-check the
/// back-propagator mapping p_0 = dE/dz_1, p_l = 2 dE/dz_{l+1}).
RowGrid tape_state_adjoints(const FieldModel& field, const WeightGrid& weights, const LossSpec& loss,
                            std::size_t layers, Scheme scheme, std::size_t pair);

/// Central differences of the ensemble loss in every theta_l component.
GradientGrid fd_gradient(const FieldModel& field, const WeightGrid& weights, const LossSpec& loss,
                         std::size_t layers, Scheme scheme, double step = 1e-5,
                         Execution exec = Execution::parallel);

}  // namespace lfnode
