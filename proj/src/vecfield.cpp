#include "lfnode/vecfield.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

namespace lfnode {

FieldModel FieldModel::tanh(std::size_t d) {
  require(d >= 1, "tanh field: state dimension must be positive");
  return FieldModel(FieldKind::tanh, d, d * d + 2 * d);
}

FieldModel FieldModel::linear() { return FieldModel(FieldKind::linear, 1, 1); }

FieldModel FieldModel::custom(std::size_t d, std::size_t n, EvalFn eval, JacFn jz, JacFn jt) {
  require(d >= 1 && n >= 1, "custom field: dimensions must be positive");
  require(eval && jz && jt, "custom field: all three callbacks are required");
  FieldModel f(FieldKind::custom, d, n);
  f.eval_ = std::move(eval);
  f.jac_z_ = std::move(jz);
  f.jac_theta_ = std::move(jt);
  return f;
}

void FieldModel::check_dims(const Vec& z, const Vec& theta) const {
  if (static_cast<std::size_t>(z.size()) != d_ || static_cast<std::size_t>(theta.size()) != n_) {
    throw ArgumentError("field dimension mismatch: expected z in R^" + std::to_string(d_) +
                        ", theta in R^" + std::to_string(n_) + ", got " + std::to_string(z.size()) +
                        " and " + std::to_string(theta.size()));
  }
}

namespace {

struct TanhParts {
  Eigen::Map<const Vec> sigma;
  Eigen::Map<const RowGrid> w;
  Eigen::Map<const Vec> b;
};

TanhParts unpack(const FieldModel& f, const Vec& theta) {
  const auto d = static_cast<Eigen::Index>(f.state_dim());
  return {Eigen::Map<const Vec>(theta.data() + f.sigma_offset(), d),
          Eigen::Map<const RowGrid>(theta.data() + f.w_offset(), d, d),
          Eigen::Map<const Vec>(theta.data() + f.b_offset(), d)};
}

}  // namespace

Vec eval_field(const FieldModel& field, const Vec& z, const Vec& theta) {
  field.check_dims(z, theta);
  switch (field.kind()) {
    case FieldKind::linear:
      return Vec::Constant(1, theta[0] * z[0]);
    case FieldKind::tanh: {
      auto p = unpack(field, theta);
      Vec a = (p.w * z + p.b).array().tanh();
      return p.sigma.cwiseProduct(a);
    }
    case FieldKind::custom:
      return field.eval_(z, theta);
  }
  return {};
}

Mat jac_z(const FieldModel& field, const Vec& z, const Vec& theta) {
  field.check_dims(z, theta);
  switch (field.kind()) {
    case FieldKind::linear:
      return Mat::Constant(1, 1, theta[0]);
    case FieldKind::tanh: {
      auto p = unpack(field, theta);
      Vec a = (p.w * z + p.b).array().tanh();
      Vec u = p.sigma.array() * (1.0 - a.array().square());
      return u.asDiagonal() * p.w;
    }
    case FieldKind::custom:
      return field.jac_z_(z, theta);
  }
  return {};
}

Mat jac_theta(const FieldModel& field, const Vec& z, const Vec& theta) {
  field.check_dims(z, theta);
  switch (field.kind()) {
    case FieldKind::linear:
      return Mat::Constant(1, 1, z[0]);
    case FieldKind::tanh: {
      const auto d = static_cast<Eigen::Index>(field.state_dim());
      auto p = unpack(field, theta);
      Vec a = (p.w * z + p.b).array().tanh();
      Vec u = p.sigma.array() * (1.0 - a.array().square());
      Mat j = Mat::Zero(d, static_cast<Eigen::Index>(field.weight_dim()));
      const auto wo = static_cast<Eigen::Index>(field.w_offset());
      const auto bo = static_cast<Eigen::Index>(field.b_offset());
      for (Eigen::Index i = 0; i < d; ++i) {
        j(i, i) = a[i];
        j.block(i, wo + i * d, 1, d) = u[i] * z.transpose();
        j(i, bo + i) = u[i];
      }
      return j;
    }
    case FieldKind::custom:
      return field.jac_theta_(z, theta);
  }
  return {};
}

namespace {

double rel_error(const Mat& analytic, const Mat& numeric) {
  const double scale = std::max(1.0, numeric.cwiseAbs().maxCoeff());
  return (analytic - numeric).cwiseAbs().maxCoeff() / scale;
}

}  // namespace

FdReport fd_validate(const FieldModel& field, int samples, std::uint64_t seed, double step) {
  require(samples >= 1, "fd_validate: samples must be >= 1");
  require(step > 0.0, "fd_validate: step must be positive");
  const auto d = static_cast<Eigen::Index>(field.state_dim());
  const auto n = static_cast<Eigen::Index>(field.weight_dim());
  Rng rng(seed);
  FdReport report;
  for (int s = 0; s < samples; ++s) {
    Vec z(d), theta(n);
    for (auto& v : z) v = rng.uniform(-2.0, 2.0);
    for (auto& v : theta) v = rng.uniform(-2.0, 2.0);

    Mat num_z(d, d), num_t(d, n);
    for (Eigen::Index k = 0; k < d; ++k) {
      Vec zp = z, zm = z;
      zp[k] += step;
      zm[k] -= step;
      num_z.col(k) = (eval_field(field, zp, theta) - eval_field(field, zm, theta)) / (2.0 * step);
    }
    for (Eigen::Index k = 0; k < n; ++k) {
      Vec tp = theta, tm = theta;
      tp[k] += step;
      tm[k] -= step;
      num_t.col(k) = (eval_field(field, z, tp) - eval_field(field, z, tm)) / (2.0 * step);
    }
    report.max_rel_error_z = std::max(report.max_rel_error_z, rel_error(jac_z(field, z, theta), num_z));
    report.max_rel_error_theta =
        std::max(report.max_rel_error_theta, rel_error(jac_theta(field, z, theta), num_t));
  }
  return report;
}

double Readout::value(const Vec& z) const {
  require(z.size() == coeffs.size(), "readout dimension mismatch");
  const double s = coeffs.dot(z);
  return kind == ReadoutKind::linear ? s : std::tanh(s);
}

Vec Readout::gradient(const Vec& z) const {
  require(z.size() == coeffs.size(), "readout dimension mismatch");
  if (kind == ReadoutKind::linear) return coeffs;
  const double a = std::tanh(coeffs.dot(z));
  return (1.0 - a * a) * coeffs;
}

WeightPath::WeightPath(std::vector<double> offsets, std::vector<std::vector<Harmonic>> harmonics)
    : offsets_(std::move(offsets)), harmonics_(std::move(harmonics)) {
  require(!offsets_.empty(), "weight path: dimension must be positive");
  require(harmonics_.size() == offsets_.size(), "weight path: one harmonic list per component");
}

WeightPath WeightPath::constant(const Vec& value) {
  return WeightPath(std::vector<double>(value.begin(), value.end()),
                    std::vector<std::vector<Harmonic>>(static_cast<std::size_t>(value.size())));
}

WeightPath WeightPath::random(std::size_t n, std::uint64_t seed, int max_harmonic, double amplitude,
                              double offset_range) {
  require(n >= 1, "weight path: dimension must be positive");
  require(max_harmonic >= 0, "weight path: max_harmonic must be nonnegative");
  Rng rng(seed);
  std::vector<double> offsets(n);
  std::vector<std::vector<Harmonic>> harmonics(n);
  for (std::size_t i = 0; i < n; ++i) {
    offsets[i] = rng.uniform(-offset_range, offset_range);
    for (int k = 1; k <= max_harmonic; ++k) {
      const double a = amplitude / k;
      Harmonic hm;
      hm.k = k;
      hm.sin_coeff = rng.uniform(-a, a);
      hm.cos_coeff = rng.uniform(-a, a);
      harmonics[i].push_back(hm);
    }
  }
  return WeightPath(std::move(offsets), std::move(harmonics));
}

Vec WeightPath::operator()(double t) const {
  Vec out(static_cast<Eigen::Index>(dim()));
  for (std::size_t i = 0; i < dim(); ++i) {
    double v = offsets_[i];
    for (const auto& hm : harmonics_[i]) {
      const double arg = 2.0 * std::numbers::pi * hm.k * t;
      v += hm.sin_coeff * std::sin(arg) + hm.cos_coeff * std::cos(arg);
    }
    out[static_cast<Eigen::Index>(i)] = v;
  }
  return out;
}

}  // namespace lfnode
