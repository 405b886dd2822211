#include <doctest.h>

#include <cmath>

#include "pf/hydrogen.hpp"

using namespace pf;

namespace {

RadialGrid log_grid() {
  RadialGrid g;
  g.scheme = RadialScheme::Logarithmic;
  return g;
}

}  // namespace

TEST_CASE("hydrogen ground state on the radial grid") {
  for (const auto& g : {RadialGrid{}, log_grid()}) {
    const auto s = ground_u1(g);
    CHECK(std::abs(s.energy + 0.25) < 1e-8);
    CHECK(std::abs(s.rayleigh + 0.25) < 1e-8);
    double worst = 0.0;
    for (int i = 0; i < s.r.size(); ++i) worst = std::max(worst, std::abs(s.u(i) - u1_exact(s.r(i))));
    CHECK(worst < 1e-8);
    CHECK(std::abs(radial_integral(g, s.chi.cwiseAbs2()) - 1.0) < 1e-10);
  }
}

TEST_CASE("radial grid validation") {
  RadialGrid g;
  g.r_max = 30.0;
  CHECK_THROWS_AS(ground_u1(g), ValidationError);
  g = RadialGrid{};
  g.points = 500;
  CHECK_THROWS_AS(ground_u1(g), ValidationError);
  g.points = 1001;
  CHECK_THROWS_AS(ground_u1(g), ValidationError);
  g = RadialGrid{};
  g.r_max = 400.0;
  g.points = 1000;
  CHECK_THROWS_AS(ground_u1(g), ConvergenceError);
}

TEST_CASE("e1 closed forms for sharp cutoffs") {
  const auto a = e1(CutoffProfile::sharp(1.0));
  CHECK(std::abs(a.value - 2.0 / M_PI * std::log(2.0)) < 1e-10);
  CHECK(std::abs(a.value - 0.441271) < 1e-6);
  const auto b = e1(CutoffProfile::sharp(2.0));
  CHECK(std::abs(b.value - 2.0 / M_PI * std::log(3.0)) < 1e-10);
  CHECK(std::abs(b.value - 0.6993983) < 1e-6);
  CHECK(a.error < 1e-12);
  CHECK(e1(CutoffProfile::vanishing()).value == 0.0);
  double prev = 0.0;
  for (double lam : {1.0, 1.5, 2.0}) {
    const double v = e1(CutoffProfile::sharp(lam)).value;
    CHECK(v > prev);
    prev = v;
  }
  const double big = e1(CutoffProfile::sharp(300.0)).value;
  CHECK(std::abs(big - 2.0 / M_PI * std::log(301.0)) < 1e-10);
}

TEST_CASE("a0 radial reduction against the unreduced momentum integral") {
  const auto p = CutoffProfile::smooth(2.0);
  const auto a = a0(p);
  CHECK(a0(CutoffProfile::vanishing()).value == 0.0);
  CHECK(std::abs(a0(CutoffProfile::sharp(2.0)).value - 4.0 / (3.0 * M_PI) * std::log(3.0)) < 1e-12);
  const auto task = unreduced(
      1, 1,
      [&](std::span<const Vec3> ks, double* out, int) {
        const Vec3& k = ks[0];
        const double r = k.norm();
        if (r == 0.0) return;
        out[0] = (k(0) * k(0) + k(1) * k(1)) / (4.0 * M_PI * M_PI * r * r * r) * 2.0 / (r * r + r) * kappa_eval(p, r);
      },
      p);
  QuadratureOptions o;
  o.budget = 400000;
  const auto mc = integrate(task, Method::PlainMonteCarlo, o)[0];
  CHECK(std::abs(mc.value - a.value) <= mc.error + 3.0 * a.error);
  CHECK(a.error < 1e-12);
}

TEST_CASE("e3 from the p-wave form and from the commutator reduction") {
  const double exact = -1.0 / (12.0 * M_PI);
  const auto u = e3(RadialGrid{});
  CHECK(std::abs(u.value.value - exact) < 1e-6);
  CHECK(std::abs(u.value.value - (-0.02652582)) < 1e-8);
  CHECK(std::abs(u.commutator - exact) < 1e-6);
  CHECK(std::abs(u.value.value - u.commutator) < 1e-6);
  CHECK(u.inner_norm > 0.0);
  const auto l = e3(log_grid());
  CHECK(std::abs(l.value.value - u.value.value) <= 3.0 * (l.value.error + u.value.error) + 1e-12);
}

TEST_CASE("constrained resolvent form of the Laplacian source") {
  const auto u = laplacian_resolvent_form(RadialGrid{});
  const auto l = laplacian_resolvent_form(log_grid());
  CHECK(std::abs(u.value - l.value) < 1e-6 * std::abs(l.value));
  CHECK(u.value > 0.0);
  CHECK(u.residual <= 1e-10);
  // Closed form in these units.
  CHECK(std::abs(l.value - 0.25) < 1e-8);
}

TEST_CASE("e2 photon pieces match the discrete oracle") {
  const auto p = CutoffProfile::smooth(2.0);
  const auto model = build_model(p, mode_set(p, 1, 6), 4);
  const auto want = oracle_elements(model, discrete_basis_states(model));
  ElementEngine engine(p, discrete_measure(model));
  Inventory inv;
  for (const char* n : {"e2_i", "e2_ii", "e2_iii"}) inv[n] = engine.element(n);
  const auto pieces = e2(inv, p);
  CHECK(std::abs(pieces.i.value - want.at("e2_i")) < 1e-10);
  CHECK(std::abs(pieces.ii.value - want.at("e2_ii")) < 1e-10);
  CHECK(std::abs(pieces.iii.value - want.at("e2_iii")) < 1e-10);
  CHECK(pieces.iv.value >= 0.0);
}

TEST_CASE("e2 continuum pieces") {
  const auto p = CutoffProfile::smooth(2.0);
  Budget b;
  b.nodes = 20000;
  const auto pieces = e2(p, b);
  // -(2/3) sum |A- R A+ Omega|^2 reduces to -(2/9) e1^2.
  const double e = e1(p).value;
  CHECK(std::abs(pieces.iii.value + 2.0 / 9.0 * e * e) <= 3.0 * pieces.iii.error + 1e-12);
  CHECK(std::abs(pieces.iv.value - a0(p).value * a0(p).value) < 1e-8);
  CHECK(pieces.total.value == doctest::Approx(pieces.i.value + pieces.ii.value + pieces.iii.value + pieces.iv.value));
  const auto zero = e2(CutoffProfile::vanishing(), b);
  CHECK(zero.total.value == 0.0);
  CHECK(zero.iv.value == 0.0);
}

TEST_CASE("sigma assembly") {
  CoefficientSet c;
  c.d0 = {-0.08, 1e-12};
  c.d1 = {0.018, 1e-6};
  c.d2 = {-0.004, 1e-5};
  for (const char* n : {"e2_i", "e2_ii", "e2_iii"}) c.inventory[n] = {n, 0.01, 1e-8, "", 0, 0, ""};
  const auto p = CutoffProfile::smooth(2.0);
  const auto h = hydrogen_coefficients(c, p);
  CHECK(h.dt0.value == c.d0.value - 0.25);
  CHECK(h.dt1.value == c.d1.value - h.e1.value);
  CHECK(h.dt2.value == c.d2.value - h.e2.value);
  CHECK(h.dt3.value == -h.e3.value);
  CHECK(std::abs(h.dt3.value - 1.0 / (12.0 * M_PI)) < 1e-6);
  const auto curve = assemble_sigma(c, h, {0.0, 1e-3, 1e-2});
  CHECK(curve[0].sigma0.value == 0.0);
  CHECK(curve[0].binding.value == 0.0);
  CHECK(curve[0].sigma.value == 0.0);
  const double a = 1e-2;
  CHECK(curve[2].sigma.value == doctest::Approx(curve[2].sigma0.value - curve[2].binding.value));
  CHECK(curve[2].binding.value ==
        doctest::Approx(a * a / 4 + h.e1.value * a * a * a + h.e2.value * std::pow(a, 4) +
                        h.e3.value * std::pow(a, 5) * std::log(1 / a)));
  CHECK_THROWS_AS(assemble_sigma(c, h, {-1.0}), ValidationError);
}
