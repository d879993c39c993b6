#pragma once

#include "lfnode/core.hpp"
#include "lfnode/discrete_adjoint.hpp"
#include "lfnode/vecfield.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace lfnode {

struct ConfigError : ArgumentError {
  using ArgumentError::ArgumentError;
};

enum class PathMode { random, constant };
enum class YRule { fixed, zero, constant, match };
enum class Probe { ones, e1 };

/// Everything needed to reproduce one experiment. Parsed from a flat JSON
/// object; every key is optional and falls back to the default instance below.
struct ExperimentConfig {
  FieldKind field = FieldKind::tanh;
  std::size_t d = 2;

  ReadoutKind readout = ReadoutKind::linear;
  std::vector<double> readout_c = {1.0, 0.5};

  PathMode path = PathMode::random;
  std::uint64_t path_seed = 42;
  int path_harmonics = 2;
  double path_amplitude = 0.5;
  double path_offset = 1.0;
  std::vector<double> path_constant;  // used when path == constant

  // Explicit pairs (data_x is N*d values, row-major). When empty, n_pairs inputs
  // are drawn uniformly from [-x_box, x_box]^d and y follows y_rule.
  std::vector<double> data_x = {1.0, -0.5};
  std::vector<double> data_y = {0.3};
  std::size_t n_pairs = 0;
  double x_box = 1.0;
  YRule y_rule = YRule::fixed;
  double y_value = 0.0;

  std::vector<std::size_t> levels = {16, 32, 64, 128, 256, 512};
  std::size_t refine = 64;
  std::uint64_t seed = 42;
  std::string out_dir = ".";
  Probe probe = Probe::ones;

  std::size_t weight_dim() const;
  void validate() const;
};

/// The d = n = 1 instance f = theta z, theta == 1, g(z) = z, x = 1, y = 0 whose
/// ground truth is dE~/dtheta == e^2.
ExperimentConfig linear_model_config();

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
std::string to_json(const ExperimentConfig& config);

/// Field, path and data materialized from a config.
struct Instance {
  FieldModel field;
  WeightPath path;
  LossSpec loss;
};

Instance build_instance(const ExperimentConfig& config);

Vec probe_vector(Probe probe, std::size_t weight_dim);

}  // namespace lfnode
