#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "pf/oracle.hpp"

using namespace pf;

namespace {

double max_abs_diff(const Vector& a, const Vector& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("one mode, one photon, no coupling") {
  const auto p = CutoffProfile::smooth(2.0);
  const Vec3 k(0.3, 0.2, 0.6);
  const auto m = build_model(p, {{k, 0.5}}, 1);
  CHECK(m.dimension() == 3);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.dense_hamiltonian(0.0));
  CHECK(std::abs(es.eigenvalues()(0)) < 1e-15);
  CHECK(es.eigenvalues()(1) == doctest::Approx(k.norm() + k.squaredNorm()));
  CHECK(es.eigenvalues()(2) == doctest::Approx(k.norm() + k.squaredNorm()));
}

TEST_CASE("operator structure") {
  const auto p = CutoffProfile::smooth(2.0);
  const auto m = build_model(p, mode_set(p, 1, 4), 4);
  CHECK(m.dimension() == 495);
  Vector omega = Vector::Zero(m.dimension());
  omega(0) = 1.0;
  for (int i = 0; i < 3; ++i) {
    CHECK((m.aminus(i) * omega).norm() == 0.0);
    // Linear terms change the photon number by exactly one.
    for (int r = 0; r < m.aminus(i).outerSize(); ++r)
      for (SparseMatrix::InnerIterator it(m.aminus(i), r); it; ++it)
        REQUIRE(m.photons(it.col()) == m.photons(it.row()) + 1);
  }
  // Transversality: P.A+ and A+.P agree.
  double worst = 0.0;
  for (long c = 0; c < m.dimension(); c += 7) {
    Vector e = Vector::Zero(m.dimension());
    e(c) = 1.0;
    Vector lhs = Vector::Zero(m.dimension()), rhs = lhs;
    for (int i = 0; i < 3; ++i) {
      lhs += m.pf(i).cwiseProduct(m.aplus(i) * e);
      rhs += m.aplus(i) * m.pf(i).cwiseProduct(e);
    }
    worst = std::max(worst, max_abs_diff(lhs, rhs));
  }
  CHECK(worst < 1e-15);
  const Eigen::MatrixXd H = m.dense_hamiltonian(0.01);
  CHECK((H - H.transpose()).norm() == 0.0);
  const SparseMatrix Hs = m.sparse_hamiltonian(0.01);
  CHECK((H - Eigen::MatrixXd(Hs)).cwiseAbs().maxCoeff() < 1e-14);
  for (double a : {0.0, 0.01, 0.3}) CHECK(std::abs(omega.dot(m.apply(omega, a))) < 1e-16);
}

TEST_CASE("ground state basics") {
  const auto p = CutoffProfile::smooth(2.0);
  const auto m = build_model(p, mode_set(p, 1, 4), 4);
  const auto g0 = ground_state(m, 0.0);
  CHECK(std::abs(g0.energy) < 1e-14);
  CHECK(std::abs(g0.vector(0) - 1.0) < 1e-12);

  // 2x2 block on {Omega, A+.A+ Omega} of a one-mode model bounds E from above.
  const auto one = build_model(p, {{Vec3(0.2, 0.1, 0.4), 0.7}}, 4);
  Vector omega = Vector::Zero(one.dimension());
  omega(0) = 1.0;
  Vector v = Vector::Zero(one.dimension());
  for (int i = 0; i < 3; ++i) v += one.aplus(i) * (one.aplus(i) * omega);
  v.normalize();
  for (double a : {1e-3, 1e-2, 0.1}) {
    Eigen::Matrix2d B;
    B << omega.dot(one.apply(omega, a)), omega.dot(one.apply(v, a)), v.dot(one.apply(omega, a)),
        v.dot(one.apply(v, a));
    const double e2 = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(B).eigenvalues()(0);
    const double e = ground_state(one, a).energy;
    CHECK(e2 < 0.0);
    CHECK(e <= e2 + 1e-15);
  }

  // Leading alpha^2 law.
  const double a1 = 1e-4, a2 = 1e-2;
  const double slope = std::log(ground_state(m, a2).energy / ground_state(m, a1).energy) / std::log(a2 / a1);
  CHECK(std::abs(slope - 2.0) < 0.05);
  CHECK(ground_state(m, a2).residual < 1e-12 * 10);
}

TEST_CASE("lanczos agrees with dense") {
  const auto p = CutoffProfile::smooth(2.0);
  const auto m = build_model(p, mode_set(p, 1, 6), 4);
  EigenOptions dense, iter;
  iter.dense_limit = 0;
  for (double a : {1e-3, 0.1}) {
    const auto d = ground_state(m, a, dense);
    const auto l = ground_state(m, a, iter);
    CHECK(std::abs(d.energy - l.energy) < 1e-12);
    CHECK(std::abs(std::abs(d.vector.dot(l.vector)) - 1.0) < 1e-9);
  }
}

TEST_CASE("truncation monotonicity") {
  const auto p = CutoffProfile::smooth(2.0);
  const auto modes = mode_set(p, 1, 4);
  for (double a : {0.01, 0.1}) {
    double prev = 1.0;
    for (int n = 2; n <= 4; ++n) {
      const double e = ground_state(build_model(p, modes, n), a).energy;
      CHECK(e <= prev + 1e-15);
      prev = e;
    }
  }
}

TEST_CASE("convention lock for closed-form kernels") {
  const auto p = CutoffProfile::smooth(2.0);
  for (int dirs : {4, 6}) {
    const auto m = build_model(p, mode_set(p, 1, dirs), 4);
    const auto b = discrete_basis_states(m);
    const auto [k4a, k4b] = phi4_part_kernels(p);
    CHECK(max_abs_diff(m.from_amplitude(2, phi2_kernel(p)), b.phi2) < 1e-12);
    CHECK(max_abs_diff(m.from_amplitude(3, phi3_kernel(p)), b.phi3) < 1e-12);
    CHECK(max_abs_diff(m.from_amplitude(4, k4a), b.phi4a) < 1e-12);
    CHECK(max_abs_diff(m.from_amplitude(4, k4b), b.phi4b) < 1e-12);
    const PhotonRule rule = m.rule();
    CHECK(max_abs_diff(m.from_amplitude(1, phi1_integrand(p, rule)), b.phi1) < 1e-12);
    const auto parts = phi2tilde_raw_parts(p, rule);
    for (int a = 0; a < 3; ++a) CHECK(max_abs_diff(m.from_amplitude(2, parts[a]), b.y[a]) < 1e-12);
    CHECK(std::abs(star(m, b.phi2, b.phi2t)) < 1e-12 * star(m, b.phi2, b.phi2));
  }
}

TEST_CASE("discrete phi1 is a roundoff remnant on spherical designs") {
  const auto p = CutoffProfile::smooth(2.0);
  const auto coarse = discrete_basis_states(build_model(p, mode_set(p, 1, 4), 4));
  const auto fine = discrete_basis_states(build_model(p, mode_set(p, 1, 12), 4));
  const double rc = coarse.phi1.norm() / coarse.phi2.norm();
  const double rf = fine.phi1.norm() / fine.phi2.norm();
  CHECK(rc < 1e-12);
  CHECK(rf < 1e-12);
}

TEST_CASE("richardson curve") {
  const auto p = CutoffProfile::smooth(2.0);
  CHECK_THROWS_AS(richardson_energy_curve(p, {{1, 6}, {1, 4}, {1, 8}}, {0.01}), ValidationError);
  CHECK_THROWS_AS(richardson_energy_curve(p, {{1, 4}, {1, 6}}, {0.01}), ValidationError);
  const auto c = richardson_energy_curve(p, {{1, 4}, {1, 6}, {1, 8}}, {0.0, 0.01}, 3);
  for (double e : c[0].levels) CHECK(e == 0.0);
  CHECK(c[1].extrapolated < 0.0);
  CHECK(c[1].band >= 0.0);
}
