#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <string>

#include "pf/errors.hpp"

namespace pf {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

enum class Taper { Sharp, SmoothCubic, Vanishing };

std::string to_string(Taper t);
Taper taper_from_string(const std::string& s);

/// Ultraviolet cutoff profile kappa(|k|).
struct CutoffProfile {
  double lambda = 2.0;
  Taper taper = Taper::SmoothCubic;

  static CutoffProfile sharp(double lambda) { return {lambda, Taper::Sharp}; }
  static CutoffProfile smooth(double lambda) { return {lambda, Taper::SmoothCubic}; }
  static CutoffProfile vanishing(double lambda = 2.0) { return {lambda, Taper::Vanishing}; }

  bool degenerate() const { return taper == Taper::Vanishing; }
  /// Radius where kappa stops being identically one.
  double plateau_end() const { return taper == Taper::SmoothCubic ? lambda - 1.0 : lambda; }
  /// Short stable identifier used for cache keys.
  std::string hash() const;
};

/// Throws ValidationError unless lambda > 1 and finite.
void validate(const CutoffProfile& profile);

double kappa_eval(const CutoffProfile& profile, double t);

template <typename Derived>
double form_factor(const CutoffProfile& profile, const Eigen::MatrixBase<Derived>& k) {
  const double r = k.norm();
  if (!(r > 0.0)) throw SingularPointError("form_factor: |k| = 0");
  return kappa_eval(profile, r) / (2.0 * M_PI * std::sqrt(r));
}

/// Same as form_factor, from the magnitude.
double form_factor_radial(const CutoffProfile& profile, double r);

struct PolarizationPair {
  Vec3 eps1;
  Vec3 eps2;
  const Vec3& operator[](int lambda) const { return lambda == 0 ? eps1 : eps2; }
};

template <typename Derived>
PolarizationPair polarization_basis(const Eigen::MatrixBase<Derived>& k) {
  const double r = k.norm();
  if (!(r > 0.0)) throw DomainError("polarization_basis: |k| = 0");
  const double rho = std::hypot(k(0), k(1));
  if (rho == 0.0) return {Vec3(1, 0, 0), Vec3(0, 1, 0)};
  PolarizationPair p;
  p.eps1 = Vec3(k(1), -k(0), 0.0) / rho;
  p.eps2 = (k / r).cross(p.eps1);
  return p;
}

template <typename Derived>
Mat3 transverse_projector(const Eigen::MatrixBase<Derived>& k) {
  const double r2 = k.squaredNorm();
  if (!(r2 > 0.0)) throw DomainError("transverse_projector: |k| = 0");
  return Mat3::Identity() - k * k.transpose() / r2;
}

/// H_f + P_f^2 on a configuration of photon momenta.
template <typename Range>
double resolvent_weight(const Range& ks) {
  Vec3 total = Vec3::Zero();
  double hf = 0.0;
  for (const auto& k : ks) {
    hf += k.norm();
    total += k;
  }
  return hf + total.squaredNorm();
}

}  // namespace pf
