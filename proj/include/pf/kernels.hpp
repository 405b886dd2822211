#pragma once

#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pf/model.hpp"

namespace pf {

/// A photon: momentum and polarization index (0 or 1).
struct Photon {
  Vec3 k;
  int lambda = 0;
};
using PhotonConfig = std::vector<Photon>;

/// n-photon amplitude evaluator.
struct SectorKernel {
  int sector = 0;
  std::function<double(std::span<const Photon>)> evaluate;
  std::string label;
  double operator()(std::span<const Photon> c) const { return evaluate(c); }
};

/// One-photon quadrature rule (or a discrete mode set) with cached f(q)^2 and P(q).
struct PhotonRule {
  std::vector<Vec3> q;
  std::vector<double> w;
  std::vector<double> f2;
  std::vector<Mat3> P;
  std::size_t size() const { return q.size(); }
  void push(const CutoffProfile& profile, const Vec3& k, double weight);
};

/// Tensor rule on the ball |q| <= lambda: composite Gauss in the radius
/// (r = lambda u^2), Gauss in cos(theta), trapezoid in phi.
struct InnerSpec {
  int radial = 10;
  int polar = 10;
  int azimuthal = 10;
  InnerSpec scaled(double ratio) const;
};
PhotonRule ball_rule(const CutoffProfile& profile, const InnerSpec& spec);

/// D = sum |k_i| + |sum k_i|^2.
double resolvent_weight(std::span<const Vec3> ks);
inline double resolvent_weight(const Vec3& a) { return a.norm() + a.squaredNorm(); }
inline double resolvent_weight(const Vec3& a, const Vec3& b) {
  return a.norm() + b.norm() + (a + b).squaredNorm();
}

// Closed forms with coupling vectors g_i = f(k_i) eps_i given explicitly.
// `D` arguments are the precomputed resolvent weights of the full configuration.
double phi2_amplitude(const Vec3& g1, const Vec3& g2, double D);

/// Precomputed sums over subsets of up to five momenta, so sub-configuration
/// resolvent weights and total momenta are table lookups.
struct MomentumTable {
  int n = 0;
  std::array<double, 32> D{};
  std::array<Vec3, 32> K;
  explicit MomentumTable(std::span<const Vec3> ks);
};

double phi2_amplitude(const MomentumTable& t, unsigned mask, const Vec3* g);
double phi3_amplitude(const MomentumTable& t, unsigned mask, const Vec3* g);
double phi4a_amplitude(const MomentumTable& t, unsigned mask, const Vec3* g);
double phi4b_amplitude(const MomentumTable& t, unsigned mask, const Vec3* g);

SectorKernel phi2_kernel(const CutoffProfile& profile);
SectorKernel phi3_kernel(const CutoffProfile& profile);
std::pair<SectorKernel, SectorKernel> phi4_part_kernels(const CutoffProfile& profile);
SectorKernel phi4_kernel(const CutoffProfile& profile);

/// M(k) = sum_q w f(q)^2 P(q) / D(q,k).
Mat3 m_tensor(const CutoffProfile& profile, const Vec3& k, const PhotonRule& rule);
/// Phi1(k, lambda) = eps_lambda(k) . W(k) with W = 2 f(k) P(k) M(k) k / D(k).
Vec3 phi1_vector(const CutoffProfile& profile, const Vec3& k, const Mat3& M);
SectorKernel phi1_integrand(const CutoffProfile& profile, const PhotonRule& rule);

/// Sector-two states as 3x3 tensors S: amplitude(k1 l1, k2 l2) = eps_l1(k1)^T S eps_l2(k2).
struct SectorTwoTensors {
  Mat3 phi2;
  std::array<Mat3, 3> parts;  // raw parts of tilde-Phi2 before projection
  Mat3 raw() const { return parts[0] + parts[1] + parts[2]; }
  Mat3 M1, M2;
  Vec3 W1, W2;
};
SectorTwoTensors sector_two_tensors(const CutoffProfile& profile, const Vec3& k1, const Vec3& k2,
                                    const PhotonRule& rule);
/// Only the q-dependent integrand of the raw parts at a single q (weight one).
SectorTwoTensors sector_two_integrand(const CutoffProfile& profile, const Vec3& k1, const Vec3& k2,
                                      const Vec3& q);

std::array<SectorKernel, 3> phi2tilde_raw_parts(const CutoffProfile& profile, const PhotonRule& rule);

/// (A^- Phi3)^i(k1 l1, k2 l2) = eps_l1^T C[i] eps_l2.
std::array<Mat3, 3> aminus_phi3_tensors(const CutoffProfile& profile, const Vec3& k1, const Vec3& k2,
                                        const PhotonRule& rule);

/// (A^- . A^- Phi3)(k l) = eps_l . Z(k), double sum over the rule.
Vec3 aa_phi3_vector(const CutoffProfile& profile, const Vec3& k, const PhotonRule& rule);

/// Coupling vectors g = f eps for both polarizations.
struct Couplings {
  double f = 0.0;
  PolarizationPair e;
  std::array<Vec3, 2> g;
};
Couplings couplings(const CutoffProfile& profile, const Vec3& k);

}  // namespace pf
