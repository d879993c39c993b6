#include "lfnode/experiments.hpp"

#include "lfnode/continuum_adjoint.hpp"
#include "lfnode/forward.hpp"
#include "lfnode/parallel.hpp"
#include "lfnode/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace lfnode {

std::optional<double> fit_rate(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) return std::nullopt;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [h, err] : points) {
    if (!(h > 0.0) || !(err > 0.0) || !std::isfinite(err)) return std::nullopt;
    const double x = std::log(h), y = std::log(err);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(points.size());
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) return std::nullopt;
  return (n * sxy - sx * sy) / denom;
}

namespace {

void check_finite(double v, const std::string& what, std::size_t layers) {
  if (!std::isfinite(v)) {
    throw NumericalError(what + " is not finite at L = " + std::to_string(layers));
  }
}

}  // namespace

csv::Table ConvergenceRecord::table() const {
  csv::Table t{"converge", 1, {"L", "h", "err_vanilla", "err_modified", "err_euler"}, {}};
  for (const auto& lv : levels) {
    t.add_row({std::to_string(lv.layers), csv::format(lv.h), csv::format(lv.err_vanilla),
               csv::format(lv.err_modified), csv::format(lv.err_euler)});
  }
  return t;
}

ConvergenceRecord run_convergence(const ExperimentConfig& config, Execution exec) {
  const Instance inst = build_instance(config);
  ConvergenceRecord rec;
  rec.levels.resize(config.levels.size());
  for_each_index(config.levels.size(), exec, [&](std::size_t i) {
    const std::size_t layers = config.levels[i];
    const WeightGrid weights = WeightGrid::sample(inst.path, layers);
    const FunctionalDerivative truth =
        ground_truth(inst.field, inst.path, inst.loss, layers, config.refine, Execution::serial);
    const GradientGrid vanilla =
        network_gradient(inst.field, weights, inst.loss, layers, Scheme::leapfrog, Execution::serial)
            .as(GradientScaling::times_L);
    const GradientGrid modified =
        apply_modification(build_T(layers, inst.field.weight_dim()), vanilla, Execution::serial);
    const GradientGrid euler =
        network_gradient(inst.field, weights, inst.loss, layers, Scheme::euler, Execution::serial)
            .as(GradientScaling::times_L);

    ConvergenceLevel& lv = rec.levels[i];
    lv.layers = layers;
    lv.h = 1.0 / static_cast<double>(layers);
    lv.err_vanilla = max_row_error(vanilla, truth);
    lv.err_modified = max_row_error(modified, truth);
    lv.err_euler = max_row_error(euler, truth);
    check_finite(lv.err_vanilla, "vanilla error", layers);
    check_finite(lv.err_modified, "modified error", layers);
    check_finite(lv.err_euler, "euler error", layers);
  });

  auto collect = [&rec](double ConvergenceLevel::*member) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& lv : rec.levels) pts.emplace_back(lv.h, lv.*member);
    return fit_rate(pts);
  };
  rec.slope_vanilla = collect(&ConvergenceLevel::err_vanilla);
  rec.slope_modified = collect(&ConvergenceLevel::err_modified);
  rec.slope_euler = collect(&ConvergenceLevel::err_euler);
  return rec;
}

double alternation_fraction(const std::vector<double>& residual) {
  const std::size_t layers = residual.size();
  if (layers < 4) return 0.0;
  std::size_t pairs = 0, flips = 0;
  for (std::size_t l = 1; l + 2 < layers; ++l) {
    ++pairs;
    if (residual[l] * residual[l + 1] < 0.0) ++flips;
  }
  return static_cast<double>(flips) / static_cast<double>(pairs);
}

csv::Table OscillationRecord::table() const {
  csv::Table t{"oscillate", 1, {"l", "t", "vanilla", "modified", "truth"}, {}};
  for (const auto& r : rows) {
    t.add_row({std::to_string(r.l), csv::format(r.t), csv::format(r.vanilla), csv::format(r.modified),
               csv::format(r.truth)});
  }
  return t;
}

OscillationRecord run_oscillation(const ExperimentConfig& config, std::size_t layers) {
  require(layers >= 4, "oscillate: L must be >= 4");
  const Instance inst = build_instance(config);
  const WeightGrid weights = WeightGrid::sample(inst.path, layers);
  const FunctionalDerivative truth = ground_truth(inst.field, inst.path, inst.loss, layers, config.refine);
  const GradientGrid vanilla =
      network_gradient(inst.field, weights, inst.loss, layers, Scheme::leapfrog).as(GradientScaling::times_L);
  const GradientGrid modified = apply_modification(build_T(layers, inst.field.weight_dim()), vanilla);
  const Vec probe = probe_vector(config.probe, inst.field.weight_dim());

  OscillationRecord rec;
  rec.layers = layers;
  std::vector<double> residual;
  for (std::size_t l = 0; l < layers; ++l) {
    OscillationRow r;
    r.l = l;
    r.t = grid_time(l, layers);
    r.vanilla = probe.dot(vanilla.row(l));
    r.modified = probe.dot(modified.row(l));
    r.truth = probe.dot(truth.row(l));
    check_finite(r.vanilla, "vanilla gradient", layers);
    check_finite(r.modified, "modified gradient", layers);
    check_finite(r.truth, "functional derivative", layers);
    residual.push_back(r.vanilla - r.truth);
    rec.vanilla_amplitude = std::max(rec.vanilla_amplitude, std::abs(r.vanilla - r.truth));
    rec.modified_amplitude = std::max(rec.modified_amplitude, std::abs(r.modified - r.truth));
    rec.rows.push_back(r);
  }
  rec.alternation_fraction = alternation_fraction(residual);
  return rec;
}

namespace {

// Largest deviation with its location, as "l=<layer> k=<component>".
std::string locate(const GradientGrid& a, const GradientGrid& b) {
  Eigen::Index r = 0, c = 0;
  (a.rows() - b.rows()).cwiseAbs().maxCoeff(&r, &c);
  return "l=" + std::to_string(r) + " k=" + std::to_string(c);
}

}  // namespace

GradcheckReport run_gradcheck(const ExperimentConfig& config, std::size_t layers, BackpropHook hook,
                              const GradcheckTolerances& tol) {
  require(layers >= 4, "gradcheck: L must be >= 4");
  const Instance inst = build_instance(config);
  const WeightGrid weights = WeightGrid::sample(inst.path, layers);

  GradcheckReport rep;
  rep.layers = layers;
  bool any_mismatch = false;
  std::vector<Backpropagator> ps;
  std::vector<Trajectory> trajs;
  for (std::size_t i = 0; i < inst.loss.size(); ++i) {
    trajs.push_back(leapfrog_trajectory(inst.field, inst.loss.pairs[i].x, weights, layers));
    any_mismatch = any_mismatch || inst.loss.mismatch(trajs.back().final_state(), i) != 0.0;
    ps.push_back(leapfrog_backprop(inst.field, trajs.back(), weights, inst.loss, i, hook));
  }
  if (!any_mismatch) {
    rep.failure = "zero-mismatch instance: every gradient is identically zero, nothing to certify";
    return rep;
  }

  const GradientGrid recursion = assemble_gradient(ps, trajs, weights, inst.field);
  const GradientGrid tape = tape_gradient(inst.field, weights, inst.loss, layers, Scheme::leapfrog);
  const GradientGrid fd = fd_gradient(inst.field, weights, inst.loss, layers, Scheme::leapfrog, tol.fd_step);

  rep.rel_recursion_tape = relative_error(recursion, tape);
  rep.rel_recursion_fd = relative_error(recursion, fd);
  rep.rel_tape_fd = relative_error(tape, fd);

  std::ostringstream why;
  if (!(rep.rel_recursion_tape <= tol.recursion_vs_tape)) {
    why << "recursion vs tape " << rep.rel_recursion_tape << " at " << locate(recursion, tape) << "; ";
  }
  if (!(rep.rel_recursion_fd <= tol.tape_vs_fd)) {
    why << "recursion vs fd " << rep.rel_recursion_fd << " at " << locate(recursion, fd) << "; ";
  }
  if (!(rep.rel_tape_fd <= tol.tape_vs_fd)) {
    why << "tape vs fd " << rep.rel_tape_fd << " at " << locate(tape, fd) << "; ";
  }
  rep.failure = why.str();
  rep.passed = rep.failure.empty();
  return rep;
}

csv::Table TrainRecord::table() const {
  csv::Table t{"train", 1, {"step", "loss"}, {}};
  for (std::size_t s = 0; s < losses.size(); ++s) t.add_row({std::to_string(s), csv::format(losses[s])});
  return t;
}

TrainRecord run_train(const ExperimentConfig& config, std::size_t layers, int steps, double stepsize,
                      TrainMode mode) {
  require(steps >= 1, "train: steps must be >= 1");
  require(layers >= 4, "train: L must be >= 4");
  const Instance inst = build_instance(config);
  WeightGrid weights = WeightGrid::sample(inst.path, layers);
  const BandedBlockMatrix t = build_T(layers, inst.field.weight_dim());
  const auto trained = static_cast<Eigen::Index>(layers);

  TrainRecord rec;
  rec.losses.push_back(discrete_loss(inst.field, weights, inst.loss, layers, Scheme::leapfrog));
  for (int s = 0; s < steps; ++s) {
    GradientGrid g = network_gradient(inst.field, weights, inst.loss, layers, Scheme::leapfrog);
    if (mode == TrainMode::modified) g = apply_modification(t, g);
    weights.data().topRows(trained) -= stepsize * g.rows();
    const double loss = discrete_loss(inst.field, weights, inst.loss, layers, Scheme::leapfrog);
    rec.losses.push_back(loss);
    if (!std::isfinite(loss) || loss > 1e6) {
      rec.diverged = true;
      break;
    }
  }
  return rec;
}

std::vector<RateStudyLevel> run_rate_study(const ExperimentConfig& config, Execution exec) {
  const Instance inst = build_instance(config);
  const WeightFn theta = [&inst](double t) { return inst.path(t); };
  const DataPair& pair = inst.loss.pairs.front();
  std::vector<RateStudyLevel> out(config.levels.size());

  for_each_index(config.levels.size(), exec, [&](std::size_t i) {
    const std::size_t layers = config.levels[i];
    const WeightGrid weights = WeightGrid::sample(inst.path, layers);
    const Trajectory net = leapfrog_trajectory(inst.field, pair.x, weights, layers);
    const DenseSolution dense = reference_solution(inst.field, pair.x, theta, layers, config.refine);
    const Trajectory exact = dense.coarse();

    const Backpropagator p = leapfrog_backprop(inst.field, net, weights, inst.loss, 0);
    const Backpropagator p_hat = leapfrog_backprop(inst.field, exact, weights, inst.loss, 0);
    const AdjointPath adjoint = adjoint_solve(inst.field, theta, dense, inst.loss, 0);
    Backpropagator q_hat{averaged_propagator(build_T_tilde(layers, inst.field.state_dim()), p_hat),
                         Scheme::reference};

    RateStudyLevel& lv = out[i];
    lv.layers = layers;
    lv.h = 1.0 / static_cast<double>(layers);
    lv.state = (net.states - exact.states).cwiseAbs().maxCoeff();
    lv.middle = (p_hat.rows - p.rows).cwiseAbs().maxCoeff();
    lv.averaged = (q_hat.rows - adjoint.samples.topRows(static_cast<Eigen::Index>(layers))).cwiseAbs().maxCoeff();

    const GradientGrid grad_p = assemble_gradient(p_hat, exact, weights, inst.field).as(GradientScaling::times_L);
    const GradientGrid grad_q = assemble_gradient(q_hat, exact, weights, inst.field).as(GradientScaling::times_L);
    lv.assembly = max_abs_error(apply_modification(build_T(layers, inst.field.weight_dim()), grad_p), grad_q);
  });
  return out;
}

void emit_plot(const std::string& csv_path, PlotKind kind, const std::string& script_path) {
  const csv::Header header = csv::read_header(csv_path);
  std::vector<std::string> required;
  switch (kind) {
    case PlotKind::converge: required = {"L", "h", "err_vanilla", "err_modified", "err_euler"}; break;
    case PlotKind::oscillate: required = {"l", "t", "vanilla", "modified", "truth"}; break;
    case PlotKind::train: required = {"step", "loss"}; break;
  }
  for (const auto& col : required) {
    if (std::find(header.columns.begin(), header.columns.end(), col) == header.columns.end()) {
      throw ArgumentError("plot: " + csv_path + " is missing column '" + col + "'");
    }
  }
  auto col = [&header](const std::string& name) {
    return std::to_string(std::find(header.columns.begin(), header.columns.end(), name) - header.columns.begin() + 1);
  };

  std::ostringstream s;
  s << "# gnuplot script generated by lfnode\n"
    << "set datafile separator ','\n"
    << "set datafile commentschars '#'\n"
    << "set key autotitle columnhead\n"
    << "set grid\n"
    << "set terminal pngcairo size 900,600\n"
    << "set output '" << script_path << ".png'\n";
  const std::string data = "'" + csv_path + "'";
  switch (kind) {
    case PlotKind::converge:
      s << "set logscale xy\n"
        << "set xlabel 'h'\n"
        << "set ylabel 'max_l |(L grad)_l - dE/dtheta(t_l)|_inf'\n"
        << "plot " << data << " using " << col("h") << ":" << col("err_vanilla")
        << " with linespoints title 'vanilla', \\\n"
        << "     " << data << " using " << col("h") << ":" << col("err_modified")
        << " with linespoints title 'modified', \\\n"
        << "     " << data << " using " << col("h") << ":" << col("err_euler")
        << " with linespoints title 'euler'\n";
      break;
    case PlotKind::oscillate:
      s << "set xlabel 't'\n"
        << "set ylabel 'probe . gradient'\n"
        << "plot " << data << " using " << col("t") << ":" << col("vanilla")
        << " with linespoints title 'L grad (vanilla)', \\\n"
        << "     " << data << " using " << col("t") << ":" << col("modified")
        << " with linespoints title 'L T grad (modified)', \\\n"
        << "     " << data << " using " << col("t") << ":" << col("truth") << " with lines title 'dE/dtheta'\n";
      break;
    case PlotKind::train:
      s << "set logscale y\n"
        << "set xlabel 'step'\n"
        << "set ylabel 'loss'\n"
        << "plot " << data << " using " << col("step") << ":" << col("loss") << " with lines title 'loss'\n";
      break;
  }

  std::ofstream f(script_path, std::ios::binary);
  if (!f) throw ArgumentError("plot: cannot write " + script_path);
  f << s.str();
}

}  // namespace lfnode
