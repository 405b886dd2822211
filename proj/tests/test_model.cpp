#include <doctest.h>

#include <random>

#include "pf/model.hpp"

using namespace pf;

namespace {
Vec3 random_direction(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Vec3 v(n(rng), n(rng), n(rng));
  return v.normalized();
}
}  // namespace

TEST_CASE("kappa values") {
  const auto smooth = CutoffProfile::smooth(2.0);
  CHECK(kappa_eval(smooth, 0.5) == 1.0);
  CHECK(kappa_eval(smooth, 3.0) == 0.0);
  CHECK(kappa_eval(CutoffProfile::sharp(2.0), 3.0) == 0.0);
  // 1 - (3 s^2 - 2 s^3) at s = 1/2
  CHECK(kappa_eval(smooth, 1.5) == doctest::Approx(1.0 - (3 * 0.25 - 2 * 0.125)).epsilon(1e-15));
  CHECK(kappa_eval(smooth, 1.5) == doctest::Approx(0.5));
  CHECK_THROWS_AS(kappa_eval(smooth, -0.1), DomainError);
}

TEST_CASE("kappa taper is monotone and C1") {
  const auto p = CutoffProfile::smooth(2.5);
  double prev = 1.0;
  for (int i = 0; i <= 1000; ++i) {
    const double t = 1.5 + i * 1e-3;
    const double v = kappa_eval(p, t);
    CHECK(v <= prev);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    prev = v;
  }
  const double h = 1e-7;
  for (double t : {1.5, 2.5}) {
    const double left = (kappa_eval(p, t) - kappa_eval(p, t - h)) / h;
    const double right = (kappa_eval(p, t + h) - kappa_eval(p, t)) / h;
    CHECK(std::abs(left) < 1e-6);
    CHECK(std::abs(right) < 1e-6);
  }
}

TEST_CASE("form factor") {
  const auto sharp = CutoffProfile::sharp(2.0);
  CHECK(form_factor(sharp, Vec3(1, 0, 0)) == doctest::Approx(1.0 / (2 * M_PI)).epsilon(1e-15));
  CHECK(form_factor(sharp, Vec3(0, 0.25, 0)) == doctest::Approx(1.0 / M_PI).epsilon(1e-15));
  CHECK(form_factor(CutoffProfile::smooth(2.0), Vec3(0, 0, 4)) == 0.0);
  CHECK_THROWS_AS(form_factor(sharp, Vec3::Zero()), SingularPointError);
}

TEST_CASE("polarization basis") {
  auto z = polarization_basis(Vec3(0, 0, 1));
  CHECK(z.eps1 == Vec3(1, 0, 0));
  CHECK(z.eps2 == Vec3(0, 1, 0));
  auto x = polarization_basis(Vec3(1, 0, 0));
  CHECK((x.eps1 - Vec3(0, -1, 0)).norm() < 1e-15);
  // khat x eps1 for khat = e1, eps1 = -e2
  CHECK((x.eps2 - Vec3(0, 0, -1)).norm() < 1e-15);
  CHECK_THROWS_AS(polarization_basis(Vec3::Zero()), DomainError);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.01, 3.0);
  for (int i = 0; i < 10000; ++i) {
    const Vec3 k = random_direction(rng) * u(rng);
    const auto p = polarization_basis(k);
    REQUIRE(std::abs(p.eps1.dot(p.eps2)) < 1e-14);
    REQUIRE(std::abs(p.eps1.norm() - 1) < 1e-14);
    REQUIRE(std::abs(p.eps2.norm() - 1) < 1e-14);
    REQUIRE(std::abs(p.eps1.dot(k)) < 1e-14 * k.norm());
    REQUIRE(std::abs(p.eps2.dot(k)) < 1e-14 * k.norm());
  }
}

TEST_CASE("transverse projector") {
  CHECK((transverse_projector(Vec3(0, 0, 1)) - Eigen::Vector3d(1, 1, 0).asDiagonal().toDenseMatrix()).norm() == 0.0);
  std::mt19937_64 rng(11);
  for (int i = 0; i < 10000; ++i) {
    const Vec3 k = random_direction(rng) * 1.7;
    const Vec3 kp = random_direction(rng) * 0.3;
    const Mat3 P = transverse_projector(k);
    const auto e = polarization_basis(k);
    const Mat3 sum = e.eps1 * e.eps1.transpose() + e.eps2 * e.eps2.transpose();
    REQUIRE((P - sum).cwiseAbs().maxCoeff() < 1e-14);
    REQUIRE((P * k).norm() < 1e-14);
    REQUIRE(std::abs(P.trace() - 2) < 1e-14);
    REQUIRE((P * P - P).cwiseAbs().maxCoeff() < 1e-14);
    const Mat3 Pp = transverse_projector(kp);
    const double c = k.normalized().dot(kp.normalized());
    REQUIRE(std::abs((P * Pp).trace() - (1 + c * c)) < 1e-13);
    const auto ep = polarization_basis(kp);
    double brute = 0;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) brute += std::pow(e[a].dot(ep[b]), 2);
    REQUIRE(std::abs(brute - (1 + c * c)) < 1e-13);
  }
}

TEST_CASE("profile validation and hash") {
  CHECK_THROWS_AS(validate(CutoffProfile::smooth(1.0)), ValidationError);
  CHECK_NOTHROW(validate(CutoffProfile::smooth(2.0)));
  CHECK(CutoffProfile::smooth(2.0).hash() == CutoffProfile::smooth(2.0).hash());
  CHECK(CutoffProfile::smooth(2.0).hash() != CutoffProfile::sharp(2.0).hash());
}
