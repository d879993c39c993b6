#pragma once

#include "lfnode/core.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace lfnode {

enum class FieldKind { tanh, linear, custom };

/// Activation vector field f(z, theta) with analytic Jacobians.
///
/// tanh:   theta = (sigma in R^d, W in R^{d x d} row-major, b in R^d),
///         f = sigma .* tanh(W z + b), so n = d^2 + 2d.
/// linear: d = n = 1, f = theta * z.
/// custom: caller-supplied callbacks (no tape support).
class FieldModel {
 public:
  using EvalFn = std::function<Vec(const Vec&, const Vec&)>;
  using JacFn = std::function<Mat(const Vec&, const Vec&)>;

  static FieldModel tanh(std::size_t d);
  static FieldModel linear();
  static FieldModel custom(std::size_t d, std::size_t n, EvalFn eval, JacFn jac_z, JacFn jac_theta);

  FieldKind kind() const { return kind_; }
  std::size_t state_dim() const { return d_; }
  std::size_t weight_dim() const { return n_; }

  // Offsets into the packed tanh weight vector.
  std::size_t sigma_offset() const { return 0; }
  std::size_t w_offset() const { return d_; }
  std::size_t b_offset() const { return d_ + d_ * d_; }

  void check_dims(const Vec& z, const Vec& theta) const;

 private:
  FieldModel(FieldKind kind, std::size_t d, std::size_t n) : kind_(kind), d_(d), n_(n) {}

  FieldKind kind_;
  std::size_t d_;
  std::size_t n_;
  EvalFn eval_;
  JacFn jac_z_;
  JacFn jac_theta_;

  friend Vec eval_field(const FieldModel&, const Vec&, const Vec&);
  friend Mat jac_z(const FieldModel&, const Vec&, const Vec&);
  friend Mat jac_theta(const FieldModel&, const Vec&, const Vec&);
};

Vec eval_field(const FieldModel& field, const Vec& z, const Vec& theta);
Mat jac_z(const FieldModel& field, const Vec& z, const Vec& theta);
Mat jac_theta(const FieldModel& field, const Vec& z, const Vec& theta);

struct FdReport {
  double max_rel_error_z = 0.0;
  double max_rel_error_theta = 0.0;
  double max_rel_error() const { return std::max(max_rel_error_z, max_rel_error_theta); }
};

// Draws `samples` random (z, theta) pairs in [-2, 2] and compares both analytic
// Jacobians against central differences with step `step`.
FdReport fd_validate(const FieldModel& field, int samples, std::uint64_t seed, double step = 1e-5);

enum class ReadoutKind { linear, tanh_linear };

/// Scalar readout g(z): linear c.z or tanh(c.z).
struct Readout {
  ReadoutKind kind = ReadoutKind::linear;
  Vec coeffs;

  double value(const Vec& z) const;
  Vec gradient(const Vec& z) const;
};

/// One harmonic a*sin(2 pi k t) + b*cos(2 pi k t) of a single path component.
struct Harmonic {
  int k = 1;
  double sin_coeff = 0.0;
  double cos_coeff = 0.0;
};

/// Smooth weight path theta: [0,1] -> R^n built from trigonometric polynomials,
/// so it is C-infinity by construction.
class WeightPath {
 public:
  WeightPath() = default;
  WeightPath(std::vector<double> offsets, std::vector<std::vector<Harmonic>> harmonics);

  static WeightPath constant(const Vec& value);
  // Harmonics k = 1..max_harmonic with coefficients uniform in
  // [-amplitude/k, amplitude/k]; offsets uniform in [-offset_range, offset_range].
  static WeightPath random(std::size_t n, std::uint64_t seed, int max_harmonic = 2,
                           double amplitude = 0.5, double offset_range = 1.0);

  std::size_t dim() const { return offsets_.size(); }
  Vec operator()(double t) const;

  const std::vector<double>& offsets() const { return offsets_; }
  const std::vector<std::vector<Harmonic>>& harmonics() const { return harmonics_; }

 private:
  std::vector<double> offsets_;
  std::vector<std::vector<Harmonic>> harmonics_;
};

// mt19937_64 with a fixed 53-bit uniform mapping; std::uniform_real_distribution
// is implementation-defined and would break cross-platform reproducibility.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace lfnode
