#include "pf/kernels.hpp"

#include <bit>
#include <cmath>

#include "pf/quadrature.hpp"

namespace pf {

namespace {
const double kSqrt2 = std::sqrt(2.0);
const double kSqrt3 = std::sqrt(3.0);
}  // namespace

void PhotonRule::push(const CutoffProfile& profile, const Vec3& k, double weight) {
  const double f = form_factor(profile, k);
  q.push_back(k);
  w.push_back(weight);
  f2.push_back(f * f);
  P.push_back(transverse_projector(k));
}

InnerSpec InnerSpec::scaled(double ratio) const {
  auto s = [ratio](int n) { return std::max(2, static_cast<int>(std::lround(n * ratio))); };
  return {s(radial), s(polar), s(azimuthal)};
}

PhotonRule ball_rule(const CutoffProfile& profile, const InnerSpec& spec) {
  std::vector<double> breaks;
  if (profile.taper == Taper::SmoothCubic) breaks.push_back(std::sqrt((profile.lambda - 1.0) / profile.lambda));
  const Rule1D radial = composite_gauss(spec.radial, breaks);
  std::vector<double> cx, cw;
  gauss_legendre(spec.polar, -1.0, 1.0, cx, cw);
  PhotonRule rule;
  const double lam = profile.lambda;
  for (std::size_t i = 0; i < radial.x.size(); ++i) {
    const double s = radial.x[i];
    const double r = lam * s * s;
    const double wr = radial.w[i] * r * r * 2.0 * lam * s;
    if (kappa_eval(profile, r) == 0.0) continue;
    for (int a = 0; a < spec.polar; ++a) {
      const double sn = std::sqrt(1.0 - cx[a] * cx[a]);
      for (int b = 0; b < spec.azimuthal; ++b) {
        const double phi = 2.0 * M_PI * (b + 0.5) / spec.azimuthal;
        const Vec3 q = r * Vec3(sn * std::cos(phi), sn * std::sin(phi), cx[a]);
        rule.push(profile, q, wr * cw[a] * 2.0 * M_PI / spec.azimuthal);
      }
    }
  }
  return rule;
}

double resolvent_weight(std::span<const Vec3> ks) {
  Vec3 K = Vec3::Zero();
  double h = 0.0;
  for (const auto& k : ks) {
    K += k;
    h += k.norm();
  }
  return h + K.squaredNorm();
}

double phi2_amplitude(const Vec3& g1, const Vec3& g2, double D) { return -kSqrt2 * g1.dot(g2) / D; }

MomentumTable::MomentumTable(std::span<const Vec3> ks) : n(static_cast<int>(ks.size())) {
  std::array<double, 32> H{};
  K[0] = Vec3::Zero();
  D[0] = 0.0;
  for (unsigned m = 1; m < (1u << n); ++m) {
    const int low = std::countr_zero(m);
    const unsigned rest = m & (m - 1);
    K[m] = K[rest] + ks[low];
    H[m] = H[rest] + ks[low].norm();
    D[m] = H[m] + K[m].squaredNorm();
  }
}

double phi2_amplitude(const MomentumTable& t, unsigned mask, const Vec3* g) {
  const int a = std::countr_zero(mask);
  const int b = std::countr_zero(mask & (mask - 1));
  return -kSqrt2 * g[a].dot(g[b]) / t.D[mask];
}

double phi3_amplitude(const MomentumTable& t, unsigned mask, const Vec3* g) {
  double s = 0.0;
  for (unsigned m = mask; m; m &= m - 1) {
    const int j = std::countr_zero(m);
    s += t.K[mask].dot(g[j]) * phi2_amplitude(t, mask ^ (1u << j), g);
  }
  return -s / (kSqrt3 * t.D[mask]);
}

double phi4a_amplitude(const MomentumTable& t, unsigned mask, const Vec3* g) {
  double s = 0.0;
  for (unsigned m = mask; m; m &= m - 1) {
    const int j = std::countr_zero(m);
    s += t.K[mask].dot(g[j]) * phi3_amplitude(t, mask ^ (1u << j), g);
  }
  return -s / (2.0 * t.D[mask]);
}

double phi4b_amplitude(const MomentumTable& t, unsigned mask, const Vec3* g) {
  double s = 0.0;
  for (unsigned ma = mask; ma; ma &= ma - 1) {
    const int a = std::countr_zero(ma);
    for (unsigned mb = ma & (ma - 1); mb; mb &= mb - 1) {
      const int b = std::countr_zero(mb);
      s += g[a].dot(g[b]) * phi2_amplitude(t, mask ^ (1u << a) ^ (1u << b), g);
    }
  }
  return -s / (4.0 * kSqrt3 * t.D[mask]);
}

Couplings couplings(const CutoffProfile& profile, const Vec3& k) {
  Couplings c;
  c.f = form_factor(profile, k);
  c.e = polarization_basis(k);
  c.g = {c.f * c.e.eps1, c.f * c.e.eps2};
  return c;
}

namespace {

using TableAmplitude = double (*)(const MomentumTable&, unsigned, const Vec3*);

SectorKernel closed_kernel(const CutoffProfile& profile, int n, TableAmplitude amp, std::string label) {
  return {n,
          [profile, n, amp](std::span<const Photon> c) {
            if (static_cast<int>(c.size()) != n) throw DomainError("kernel: wrong sector size");
            Vec3 ks[5], g[5];
            for (int i = 0; i < n; ++i) {
              ks[i] = c[i].k;
              const auto cp = couplings(profile, c[i].k);
              g[i] = cp.g[c[i].lambda];
            }
            MomentumTable t(std::span<const Vec3>(ks, n));
            return amp(t, (1u << n) - 1, g);
          },
          std::move(label)};
}

double phi4_sum(const MomentumTable& t, unsigned mask, const Vec3* g) {
  return phi4a_amplitude(t, mask, g) + phi4b_amplitude(t, mask, g);
}

}  // namespace

SectorKernel phi2_kernel(const CutoffProfile& profile) {
  return closed_kernel(profile, 2, static_cast<TableAmplitude>(phi2_amplitude), "Phi2");
}
SectorKernel phi3_kernel(const CutoffProfile& profile) {
  return closed_kernel(profile, 3, phi3_amplitude, "Phi3");
}
std::pair<SectorKernel, SectorKernel> phi4_part_kernels(const CutoffProfile& profile) {
  return {closed_kernel(profile, 4, phi4a_amplitude, "Phi4_1"),
          closed_kernel(profile, 4, phi4b_amplitude, "Phi4_2")};
}
SectorKernel phi4_kernel(const CutoffProfile& profile) {
  return closed_kernel(profile, 4, phi4_sum, "Phi4");
}

Mat3 m_tensor(const CutoffProfile&, const Vec3& k, const PhotonRule& rule) {
  Mat3 M = Mat3::Zero();
  const double r = k.norm();
  for (std::size_t j = 0; j < rule.size(); ++j) {
    const Vec3& q = rule.q[j];
    const double d = q.norm() + r + (q + k).squaredNorm();
    M += (rule.w[j] * rule.f2[j] / d) * rule.P[j];
  }
  return M;
}

Vec3 phi1_vector(const CutoffProfile& profile, const Vec3& k, const Mat3& M) {
  const double f = form_factor(profile, k);
  return (2.0 * f / resolvent_weight(k)) * (transverse_projector(k) * (M * k));
}

SectorKernel phi1_integrand(const CutoffProfile& profile, const PhotonRule& rule) {
  return {1,
          [profile, &rule](std::span<const Photon> c) {
            const Vec3 W = phi1_vector(profile, c[0].k, m_tensor(profile, c[0].k, rule));
            return polarization_basis(c[0].k)[c[0].lambda].dot(W);
          },
          "Phi1"};
}

namespace {

struct PairAccumulator {
  Mat3 M1 = Mat3::Zero(), M2 = Mat3::Zero(), N1 = Mat3::Zero(), N2 = Mat3::Zero();
  double tau = 0.0;

  void add(const Vec3& k1, const Vec3& k2, double r1, double r2, const Vec3& q, double wf2, const Mat3& P) {
    const Vec3 Q = k1 + k2;
    const double qn = q.norm();
    const double d21 = qn + r1 + (q + k1).squaredNorm();
    const double d22 = qn + r2 + (q + k2).squaredNorm();
    const double d3 = qn + r1 + r2 + (q + Q).squaredNorm();
    M1 += (wf2 / d21) * P;
    M2 += (wf2 / d22) * P;
    const Vec3 K = q + Q;
    const Vec3 PQ = P * Q;
    tau += wf2 * Q.dot(PQ) / d3;
    const Mat3 KPQ = K * PQ.transpose();
    N2 += (wf2 / (d3 * d22)) * KPQ;
    N1 += (wf2 / (d3 * d21)) * KPQ;
  }
};

SectorTwoTensors finish_pair(const CutoffProfile& profile, const Vec3& k1, const Vec3& k2,
                             const PairAccumulator& a) {
  SectorTwoTensors s;
  const double f1 = form_factor(profile, k1), f2 = form_factor(profile, k2);
  const double D2 = resolvent_weight(k1, k2);
  const Vec3 Q = k1 + k2;
  s.phi2 = (-kSqrt2 * f1 * f2 / D2) * Mat3::Identity();
  s.M1 = a.M1;
  s.M2 = a.M2;
  s.W1 = phi1_vector(profile, k1, a.M1);
  s.W2 = phi1_vector(profile, k2, a.M2);
  s.parts[0] = (-1.0 / (kSqrt2 * D2)) * (f1 * Q * s.W2.transpose() + f2 * s.W1 * Q.transpose());
  s.parts[1] = (a.tau * s.phi2 - kSqrt2 * f1 * f2 * (a.N2 + a.N1.transpose())) / D2;
  s.parts[2] = (kSqrt2 / 2.0) * (f1 * f2 / D2) * (a.M1 + a.M2);
  return s;
}

}  // namespace

SectorTwoTensors sector_two_tensors(const CutoffProfile& profile, const Vec3& k1, const Vec3& k2,
                                    const PhotonRule& rule) {
  PairAccumulator acc;
  const double r1 = k1.norm(), r2 = k2.norm();
  for (std::size_t j = 0; j < rule.size(); ++j) acc.add(k1, k2, r1, r2, rule.q[j], rule.w[j] * rule.f2[j], rule.P[j]);
  return finish_pair(profile, k1, k2, acc);
}

SectorTwoTensors sector_two_integrand(const CutoffProfile& profile, const Vec3& k1, const Vec3& k2,
                                      const Vec3& q) {
  PairAccumulator acc;
  const double f = form_factor(profile, q);
  acc.add(k1, k2, k1.norm(), k2.norm(), q, f * f, transverse_projector(q));
  return finish_pair(profile, k1, k2, acc);
}

std::array<SectorKernel, 3> phi2tilde_raw_parts(const CutoffProfile& profile, const PhotonRule& rule) {
  std::array<SectorKernel, 3> out;
  for (int a = 0; a < 3; ++a) {
    out[a] = {2,
              [profile, &rule, a](std::span<const Photon> c) {
                const auto s = sector_two_tensors(profile, c[0].k, c[1].k, rule);
                return polarization_basis(c[0].k)[c[0].lambda].dot(s.parts[a] *
                                                                   polarization_basis(c[1].k)[c[1].lambda]);
              },
              "tildePhi2_part" + std::to_string(a + 1)};
  }
  return out;
}

std::array<Mat3, 3> aminus_phi3_tensors(const CutoffProfile& profile, const Vec3& k1, const Vec3& k2,
                                        const PhotonRule& rule) {
  const double r1 = k1.norm(), r2 = k2.norm();
  const Vec3 Q = k1 + k2;
  Vec3 V = Vec3::Zero();
  std::array<Mat3, 3> T1, T2;
  for (int i = 0; i < 3; ++i) T1[i].setZero(), T2[i].setZero();
  for (std::size_t j = 0; j < rule.size(); ++j) {
    const Vec3& q = rule.q[j];
    const Mat3& P = rule.P[j];
    const double wf2 = rule.w[j] * rule.f2[j];
    const double qn = q.norm();
    const double d21 = qn + r1 + (q + k1).squaredNorm();
    const double d22 = qn + r2 + (q + k2).squaredNorm();
    const double d3 = qn + r1 + r2 + (q + Q).squaredNorm();
    const Vec3 K = q + Q;
    V += (wf2 / d3) * (P * K);
    const double c1 = wf2 / (d3 * d21), c2 = wf2 / (d3 * d22);
    for (int i = 0; i < 3; ++i) {
      const Eigen::RowVector3d row = P.row(i);
      T2[i].noalias() += (c2 * K) * row;
      T1[i].noalias() += (c1 * K) * row;
    }
  }
  const double f1 = form_factor(profile, k1), f2 = form_factor(profile, k2);
  const double D2 = resolvent_weight(k1, k2);
  const Mat3 S = (-kSqrt2 * f1 * f2 / D2) * Mat3::Identity();
  std::array<Mat3, 3> C;
  for (int i = 0; i < 3; ++i)
    C[i] = -(V(i) * S - kSqrt2 * f1 * f2 * (T2[i] + T1[i].transpose()));
  return C;
}

Vec3 aa_phi3_vector(const CutoffProfile& profile, const Vec3& k, const PhotonRule& rule) {
  const double r = k.norm();
  const std::size_t n = rule.size();
  std::vector<double> d2k(n);
  for (std::size_t j = 0; j < n; ++j) d2k[j] = rule.q[j].norm() + r + (rule.q[j] + k).squaredNorm();
  Vec3 Z = Vec3::Zero();
  for (std::size_t a = 0; a < n; ++a) {
    const Vec3& q = rule.q[a];
    const double qn = q.norm();
    const double wa = rule.w[a] * rule.f2[a];
    const Mat3& Pa = rule.P[a];
    Vec3 za = Vec3::Zero();
    for (std::size_t b = 0; b < n; ++b) {
      const Vec3& qp = rule.q[b];
      const Mat3& Pb = rule.P[b];
      const Vec3 K = q + qp + k;
      const double qpn = qp.norm();
      const double d3 = qn + qpn + r + K.squaredNorm();
      const double dqq = qn + qpn + (q + qp).squaredNorm();
      const double trPP = (Pa.cwiseProduct(Pb)).sum();
      const Vec3 v = Pb * (Pa * K) / d2k[b] + Pa * (Pb * K) / d2k[a] + (trPP / dqq) * K;
      za += (rule.w[b] * rule.f2[b] / d3) * v;
    }
    Z += wa * za;
  }
  return 2.0 * form_factor(profile, k) * Z;
}

}  // namespace pf
