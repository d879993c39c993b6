#include "lfnode/discrete_adjoint.hpp"

#include "lfnode/parallel.hpp"
#include "lfnode/tape.hpp"

#include <cmath>
#include <string>

namespace lfnode {

void LossSpec::validate(std::size_t state_dim) const {
  require(!pairs.empty(), "loss: need at least one data pair");
  require(static_cast<std::size_t>(readout.coeffs.size()) == state_dim, "loss: readout dimension mismatch");
  for (const auto& p : pairs) {
    require(static_cast<std::size_t>(p.x.size()) == state_dim, "loss: data input dimension mismatch");
  }
}

double LossSpec::mismatch(const Vec& z_final, std::size_t pair) const {
  return readout.value(z_final) - pairs.at(pair).y;
}

GradientGrid GradientGrid::as(GradientScaling target) const {
  if (target == scaling_) return *this;
  const double layers_d = static_cast<double>(layers());
  const double factor = target == GradientScaling::times_L ? layers_d : 1.0 / layers_d;
  return GradientGrid(rows_ * factor, target);
}

namespace {

void check_comparable(const GradientGrid& a, const GradientGrid& b) {
  if (a.scaling() != b.scaling()) {
    throw ArgumentError(std::string("gradient scaling mismatch: ") + to_string(a.scaling()) + " vs " +
                        to_string(b.scaling()));
  }
  require(a.layers() == b.layers() && a.dim() == b.dim(), "gradient grid shape mismatch");
}

void check_run(const FieldModel& field, const Trajectory& traj, const WeightGrid& weights) {
  require(traj.layers >= 1 && static_cast<std::size_t>(traj.states.rows()) == traj.layers + 1,
          "trajectory row count does not match its layer count");
  require(static_cast<std::size_t>(traj.states.cols()) == field.state_dim(), "trajectory dimension mismatch");
  require(weights.rows() >= traj.layers && weights.dim() == field.weight_dim(), "weight grid does not fit run");
}

}  // namespace

double max_abs_error(const GradientGrid& a, const GradientGrid& b) {
  check_comparable(a, b);
  return (a.rows() - b.rows()).cwiseAbs().maxCoeff();
}

double relative_error(const GradientGrid& a, const GradientGrid& b) {
  const double diff = max_abs_error(a, b);
  const double scale = b.rows().cwiseAbs().maxCoeff();
  return scale > 0.0 ? diff / scale : diff;
}

Backpropagator leapfrog_backprop(const FieldModel& field, const Trajectory& traj, const WeightGrid& weights,
                                 const LossSpec& loss, std::size_t pair, BackpropHook hook) {
  require(traj.scheme != Scheme::euler, "leapfrog_backprop: trajectory comes from the Euler scheme");
  check_run(field, traj, weights);
  const std::size_t layers = traj.layers;
  if (layers < 4) {
    throw UnsupportedSizeError("leapfrog_backprop: L = " + std::to_string(layers) +
                               " is unsupported (need L >= 4)");
  }
  const double h = traj.step();
  const double two_h = hook == BackpropHook::halved_step ? h : 2.0 * h;
  const auto adjoint_step = [&](std::size_t l, const Vec& p) -> Vec {
    return jac_z(field, traj.state(l), weights.row(l)).transpose() * p;
  };

  Backpropagator out;
  out.scheme = Scheme::leapfrog;
  out.rows.resize(static_cast<Eigen::Index>(layers), static_cast<Eigen::Index>(field.state_dim()));
  auto row = [&out](std::size_t l) { return out.rows.row(static_cast<Eigen::Index>(l)); };

  const Vec z_final = traj.final_state();
  const Vec p_last = 2.0 * loss.mismatch(z_final, pair) * loss.readout.gradient(z_final);
  row(layers - 1) = p_last.transpose();
  row(layers - 2) = (two_h * adjoint_step(layers - 1, p_last)).transpose();
  for (std::size_t l = layers - 3; l >= 1; --l) {
    const Vec next = out.row(l + 1);
    row(l) = row(l + 2) + (two_h * adjoint_step(l + 1, next)).transpose();
  }
  row(0) = 0.5 * row(2) + (h * adjoint_step(1, out.row(1))).transpose();
  return out;
}

GradientGrid assemble_gradient(const Backpropagator& p, const Trajectory& traj, const WeightGrid& weights,
                               const FieldModel& field) {
  check_run(field, traj, weights);
  require(p.layers() == traj.layers, "assemble_gradient: backpropagator and trajectory lengths differ");
  const double h = traj.step();
  RowGrid rows(static_cast<Eigen::Index>(traj.layers), static_cast<Eigen::Index>(field.weight_dim()));
  for (std::size_t l = 0; l < traj.layers; ++l) {
    rows.row(static_cast<Eigen::Index>(l)) =
        h * (jac_theta(field, traj.state(l), weights.row(l)).transpose() * p.row(l)).transpose();
  }
  return GradientGrid(std::move(rows), GradientScaling::raw);
}

GradientGrid assemble_gradient(const std::vector<Backpropagator>& ps, const std::vector<Trajectory>& trajs,
                               const WeightGrid& weights, const FieldModel& field) {
  require(!ps.empty() && ps.size() == trajs.size(), "assemble_gradient: need one trajectory per backpropagator");
  GradientGrid sum = assemble_gradient(ps[0], trajs[0], weights, field);
  for (std::size_t i = 1; i < ps.size(); ++i) {
    sum.rows() += assemble_gradient(ps[i], trajs[i], weights, field).rows();
  }
  sum.rows() /= static_cast<double>(ps.size());
  return sum;
}

Backpropagator euler_backpropagator(const FieldModel& field, const Trajectory& traj, const WeightGrid& weights,
                                    const LossSpec& loss, std::size_t pair) {
  require(traj.scheme == Scheme::euler, "euler_backprop: trajectory does not come from the Euler scheme");
  check_run(field, traj, weights);
  const std::size_t layers = traj.layers;
  const double h = traj.step();
  Backpropagator out;
  out.scheme = Scheme::euler;
  out.rows.resize(static_cast<Eigen::Index>(layers), static_cast<Eigen::Index>(field.state_dim()));
  const Vec z_final = traj.final_state();
  Vec p = loss.mismatch(z_final, pair) * loss.readout.gradient(z_final);
  out.rows.row(static_cast<Eigen::Index>(layers - 1)) = p.transpose();
  for (std::size_t l = layers - 1; l-- > 0;) {
    p += h * (jac_z(field, traj.state(l + 1), weights.row(l + 1)).transpose() * p);
    out.rows.row(static_cast<Eigen::Index>(l)) = p.transpose();
  }
  return out;
}

GradientGrid euler_backprop(const FieldModel& field, const Trajectory& traj, const WeightGrid& weights,
                            const LossSpec& loss, std::size_t pair) {
  return assemble_gradient(euler_backpropagator(field, traj, weights, loss, pair), traj, weights, field);
}

Trajectory run_scheme(const FieldModel& field, const Vec& x, const WeightGrid& weights, std::size_t layers,
                      Scheme scheme) {
  switch (scheme) {
    case Scheme::euler: return euler_trajectory(field, x, weights, layers);
    case Scheme::leapfrog: return leapfrog_trajectory(field, x, weights, layers);
    case Scheme::reference: break;
  }
  throw ArgumentError("network schemes are euler and leapfrog");
}

double discrete_loss(const FieldModel& field, const WeightGrid& weights, const LossSpec& loss,
                     std::size_t layers, Scheme scheme) {
  loss.validate(field.state_dim());
  double sum = 0.0;
  for (std::size_t i = 0; i < loss.size(); ++i) {
    const double r = loss.mismatch(run_scheme(field, loss.pairs[i].x, weights, layers, scheme).final_state(), i);
    sum += r * r;
  }
  return sum / (2.0 * static_cast<double>(loss.size()));
}

GradientGrid network_gradient(const FieldModel& field, const WeightGrid& weights, const LossSpec& loss,
                              std::size_t layers, Scheme scheme, Execution exec) {
  loss.validate(field.state_dim());
  std::vector<GradientGrid> per_pair(loss.size());
  for_each_index(loss.size(), exec, [&](std::size_t i) {
    const Trajectory traj = run_scheme(field, loss.pairs[i].x, weights, layers, scheme);
    per_pair[i] = scheme == Scheme::euler
                      ? euler_backprop(field, traj, weights, loss, i)
                      : assemble_gradient(leapfrog_backprop(field, traj, weights, loss, i), traj, weights, field);
  });
  GradientGrid sum = std::move(per_pair[0]);
  for (std::size_t i = 1; i < per_pair.size(); ++i) sum.rows() += per_pair[i].rows();
  sum.rows() /= static_cast<double>(loss.size());
  return sum;
}

namespace {

struct RecordedRun {
  Tape tape;
  std::vector<Tape::NodeId> thetas;
  std::vector<Tape::NodeId> states;  // states of the last recorded pair
  Tape::NodeId loss = 0;
};

RecordedRun record_loss(const FieldModel& field, const WeightGrid& weights, const LossSpec& loss,
                        std::size_t layers, Scheme scheme, const TapeOptions& options) {
  require(scheme == Scheme::euler || scheme == Scheme::leapfrog, "tape: scheme must be euler or leapfrog");
  require(layers >= (scheme == Scheme::leapfrog ? 2u : 1u), "tape: too few layers for scheme");
  require(weights.rows() >= layers && weights.dim() == field.weight_dim(), "tape: weight grid does not fit run");
  loss.validate(field.state_dim());
  const double graph = static_cast<double>(layers) * static_cast<double>(field.state_dim()) *
                       static_cast<double>(field.weight_dim());
  if (graph > options.max_graph_size) {
    throw ResourceError("tape: graph size L*d*n = " + std::to_string(graph) + " exceeds the configured cap");
  }

  RecordedRun run;
  Tape& t = run.tape;
  const double h = 1.0 / static_cast<double>(layers);
  for (std::size_t l = 0; l < layers; ++l) run.thetas.push_back(t.leaf(weights.row(l)));

  const double weight = 1.0 / (2.0 * static_cast<double>(loss.size()));
  Tape::NodeId total = 0;
  for (std::size_t i = 0; i < loss.size(); ++i) {
    run.states.assign(1, t.constant(loss.pairs[i].x));
    auto& z = run.states;
    if (scheme == Scheme::euler) {
      for (std::size_t l = 0; l < layers; ++l) {
        z.push_back(t.add(z[l], t.scale(record_field(t, field, z[l], run.thetas[l]), h)));
      }
    } else {
      z.push_back(t.add(z[0], t.scale(record_field(t, field, z[0], run.thetas[0]), h)));
      for (std::size_t l = 0; l + 2 <= layers; ++l) {
        z.push_back(t.add(z[l], t.scale(record_field(t, field, z[l + 1], run.thetas[l + 1]), 2.0 * h)));
      }
    }
    auto out = record_readout(t, loss.readout, z[layers]);
    auto residual = t.add(out, t.constant(Vec::Constant(1, -loss.pairs[i].y)));
    auto term = t.scale(t.square(residual), weight);
    total = i == 0 ? term : t.add(total, term);
  }
  run.loss = total;
  return run;
}

}  // namespace

GradientGrid tape_gradient(const FieldModel& field, const WeightGrid& weights, const LossSpec& loss,
                           std::size_t layers, Scheme scheme, const TapeOptions& options) {
  const RecordedRun run = record_loss(field, weights, loss, layers, scheme, options);
  const auto adj = run.tape.backward(run.loss);
  RowGrid rows(static_cast<Eigen::Index>(layers), static_cast<Eigen::Index>(field.weight_dim()));
  for (std::size_t l = 0; l < layers; ++l) rows.row(static_cast<Eigen::Index>(l)) = adj[run.thetas[l]].transpose();
  return GradientGrid(std::move(rows), GradientScaling::raw);
}

RowGrid tape_state_adjoints(const FieldModel& field, const WeightGrid& weights, const LossSpec& loss,
                            std::size_t layers, Scheme scheme, std::size_t pair) {
  LossSpec single{loss.readout, {loss.pairs.at(pair)}};
  const RecordedRun run = record_loss(field, weights, single, layers, scheme, TapeOptions{});
  const auto adj = run.tape.backward(run.loss);
  RowGrid out(static_cast<Eigen::Index>(layers + 1), static_cast<Eigen::Index>(field.state_dim()));
  for (std::size_t l = 0; l <= layers; ++l) out.row(static_cast<Eigen::Index>(l)) = adj[run.states[l]].transpose();
  return out;
}

GradientGrid fd_gradient(const FieldModel& field, const WeightGrid& weights, const LossSpec& loss,
                         std::size_t layers, Scheme scheme, double step, Execution exec) {
  require(step > 0.0, "fd_gradient: step must be positive");
  require(weights.rows() >= layers, "fd_gradient: weight grid has fewer rows than layers");
  const auto n = static_cast<Eigen::Index>(field.weight_dim());
  RowGrid rows(static_cast<Eigen::Index>(layers), n);
  for_each_index(layers, exec, [&](std::size_t l) {
    WeightGrid local = weights;
    const auto r = static_cast<Eigen::Index>(l);
    for (Eigen::Index k = 0; k < n; ++k) {
      const double saved = local.data()(r, k);
      local.data()(r, k) = saved + step;
      const double up = discrete_loss(field, local, loss, layers, scheme);
      local.data()(r, k) = saved - step;
      const double down = discrete_loss(field, local, loss, layers, scheme);
      local.data()(r, k) = saved;
      rows(r, k) = (up - down) / (2.0 * step);
    }
  });
  return GradientGrid(std::move(rows), GradientScaling::raw);
}

}  // namespace lfnode
