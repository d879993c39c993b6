#pragma once

#include "lfnode/config.hpp"
#include "lfnode/core.hpp"
#include "lfnode/csv.hpp"
#include "lfnode/discrete_adjoint.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace lfnode {

/// Least-squares slope of log(err) against log(h). Absent for fewer than three
/// points or any nonpositive error.
std::optional<double> fit_rate(const std::vector<std::pair<double, double>>& points);

struct ConvergenceLevel {
  std::size_t layers = 0;
  double h = 0.0;
  double err_vanilla = 0.0;
  double err_modified = 0.0;
  double err_euler = 0.0;
};

struct ConvergenceRecord {
  std::vector<ConvergenceLevel> levels;
  std::optional<double> slope_vanilla;
  std::optional<double> slope_modified;
  std::optional<double> slope_euler;

  csv::Table table() const;
};

/// For every L: L-scaled vanilla Leapfrog, modified (T applied) and Euler
/// gradients against the sampled functional derivative. Levels run
/// concurrently under Execution::parallel; each level is sequential inside.
/// Throws NumericalError when any error is not finite.
ConvergenceRecord run_convergence(const ExperimentConfig& config, Execution exec = Execution::parallel);

struct OscillationRow {
  std::size_t l = 0;
  double t = 0.0;
  double vanilla = 0.0;
  double modified = 0.0;
  double truth = 0.0;
};

struct OscillationRecord {
  std::size_t layers = 0;
  std::vector<OscillationRow> rows;
  double alternation_fraction = 0.0;  // of the vanilla residual, interior pairs
  double vanilla_amplitude = 0.0;     // max_l |vanilla - truth|
  double modified_amplitude = 0.0;

  csv::Table table() const;
};

// Fraction of adjacent pairs (l, l+1) with 1 <= l and l+1 <= L-2 whose values
// have strictly opposite signs.
double alternation_fraction(const std::vector<double>& residual);

OscillationRecord run_oscillation(const ExperimentConfig& config, std::size_t layers);

struct GradcheckTolerances {
  double recursion_vs_tape = 1e-12;
  double tape_vs_fd = 1e-4;  // also applied to recursion vs FD
  double fd_step = 1e-5;
};

struct GradcheckReport {
  std::size_t layers = 0;
  double rel_recursion_tape = 0.0;
  double rel_recursion_fd = 0.0;
  double rel_tape_fd = 0.0;
  bool passed = false;
  std::string failure;  // offending comparison with layer/component, when failed
};

GradcheckReport run_gradcheck(const ExperimentConfig& config, std::size_t layers,
                              BackpropHook hook = BackpropHook::none, const GradcheckTolerances& tol = {});

enum class TrainMode { vanilla, modified };

struct TrainRecord {
  std::vector<double> losses;  // losses[0] is the initial loss
  bool diverged = false;

  csv::Table table() const;
};

/// Plain gradient descent on the Leapfrog network weights theta_0..theta_{L-1}
/// with either the back-propagated gradient or its T-modified version. Stops
/// early (diverged = true) once the loss exceeds 1e6 or turns non-finite.
TrainRecord run_train(const ExperimentConfig& config, std::size_t layers, int steps, double stepsize,
                      TrainMode mode);

/// Per-level errors of the intermediate quantities used to explain the
/// modified-gradient convergence, for data pair 0:
///   state:     max_l |z_l - z(lh)|                 (Leapfrog vs reference)
///   middle:    max_l |p^_l - p_l|                  (recursion on exact vs network states)
///   averaged:  max_l |(T~ p^)_l - p(lh)|           (vs continuous adjoint)
///   assembly:  max_l |(L T grad^p^)_l - (L grad^q^)_l|
struct RateStudyLevel {
  std::size_t layers = 0;
  double h = 0.0;
  double state = 0.0;
  double middle = 0.0;
  double averaged = 0.0;
  double assembly = 0.0;
};

std::vector<RateStudyLevel> run_rate_study(const ExperimentConfig& config, Execution exec = Execution::parallel);

enum class PlotKind { converge, oscillate, train };

/// Writes a gnuplot script that renders the CSV at `csv_path`. Throws
/// ArgumentError naming the first missing column on a schema mismatch.
void emit_plot(const std::string& csv_path, PlotKind kind, const std::string& script_path);

}  // namespace lfnode
