#include <doctest.h>

#include <cmath>

#include "pf/ritz.hpp"

using namespace pf;

namespace {

struct Discrete {
  DiscreteModel model;
  BasisMatrices m;
  DenseBlocks blocks;
};

Discrete discrete(const CutoffProfile& p, int directions) {
  auto model = build_model(p, mode_set(p, 1, directions), 4);
  ElementEngine engine(p, discrete_measure(model));
  auto m = build_matrices(engine.compute_all());
  auto blocks = oracle_blocks(model, discrete_basis_states(model));
  return {std::move(model), m, blocks};
}

BasisMatrices synthetic() {
  // Small hand-made blocks with the right sector structure.
  Inventory inv;
  const std::map<std::string, double> v = {
      {"l1", 0.0},     {"l2", 0.04},   {"l2t", 3e-5},   {"l3", 4e-4},    {"l4", 6e-5},   {"l23", -5e-4},
      {"n1s", 0.0},    {"n2s", 0.08},  {"n2ts", 3e-5},  {"n3s", 1.6e-3}, {"n4s", 2.4e-4}, {"p2t1", 0.0},
      {"p2t2", 5e-6},  {"p41", -2e-5}, {"am1", 0.0},    {"am2", 0.012},  {"am2t", 2e-6}, {"am3", 1.4e-4},
      {"am4", 3.6e-5}, {"p2t3", 2.6e-5}, {"x13", 0.0},  {"p42", 2.6e-4}, {"x2t4", 1.4e-5}};
  for (const auto& [k, x] : v) inv[k] = {k, x, 0.0, "", 0, 0, ""};
  return build_matrices(inv);
}

}  // namespace

TEST_CASE("identity-substituted blocks equal the oracle's dense matrix elements") {
  const auto p = CutoffProfile::smooth(2.0);
  for (int dirs : {4, 6}) {
    const auto d = discrete(p, dirs);
    const Matrix6* ours[4] = {&d.m.G, &d.m.H0, &d.m.H1, &d.m.H2};
    const Eigen::MatrixXd* theirs[4] = {&d.blocks.G, &d.blocks.H0, &d.blocks.H1, &d.blocks.H2};
    for (int b = 0; b < 4; ++b)
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
          INFO("block ", b, " entry ", kBasisNames[i], ",", kBasisNames[j]);
          CHECK(std::abs((*ours[b])(i, j) - (*theirs[b])(i, j)) <= 1e-10 * std::max(1.0, std::abs((*theirs[b])(i, j))));
        }
  }
}

TEST_CASE("missing element names the element") {
  Inventory inv;
  try {
    build_matrices(inv);
    FAIL("expected an error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("'l1'") != std::string::npos);
  }
}

TEST_CASE("structural zeros") {
  const auto m = synthetic();
  const int sector[6] = {0, 1, 2, 2, 3, 4};
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) {
      const int d = std::abs(sector[i] - sector[j]);
      if (d != 0) CHECK(m.G(i, j) == 0.0);
      if (d != 0) CHECK(m.H0(i, j) == 0.0);
      if (d != 1) CHECK(m.H1(i, j) == 0.0);
      if (d != 0 && d != 2) CHECK(m.H2(i, j) == 0.0);
    }
  CHECK(m.H2(0, 2) == -0.08);
}

TEST_CASE("alpha zero gives the vacuum") {
  const auto m = synthetic();
  const auto s = solve(m, 0.0);
  CHECK(std::abs(s.energy) < 1e-15);
  CHECK(s.coefficients(0) == 1.0);
  CHECK(s.coefficients.tail(5).norm() < 1e-12);
  CHECK(trial_quotient(m, 0.0) == 0.0);
  CHECK_THROWS_AS(solve(m, -1e-3), ValidationError);
}

TEST_CASE("Phi1 is reported as null and the rest is kept") {
  const auto m = synthetic();
  const auto s = solve(m, 1e-2);
  REQUIRE(s.null_directions.size() == 1);
  CHECK(s.null_directions[0] == 1);
  CHECK(s.coefficients(1) == 0.0);
}

TEST_CASE("variational chain on matched discrete models") {
  for (const auto& p : {CutoffProfile::smooth(2.0), CutoffProfile::sharp(1.5)}) {
    const auto d = discrete(p, 4);
    for (double a : alpha_grid(1e-3, 1e-1, 6)) {
      const double exact = ground_state(d.model, a).energy;
      const auto rr = solve(d.m, a);
      const double trial = trial_quotient(d.m, a);
      CHECK(exact <= rr.energy + 1e-12);
      CHECK(rr.energy <= trial + 1e-12);
      CHECK(rr.residual <= 1e-12 * std::max(1.0, d.m.at(a).norm()));
      CHECK(rr.energy < 0.0);
    }
  }
}

TEST_CASE("nested sub-bases lower the energy monotonically") {
  const auto m = synthetic();
  for (double a : {1e-3, 1e-2, 1e-1}) {
    const double e1 = solve(m, a, {0, 2}).energy;
    const double e2 = solve(m, a, {0, 2, 4}).energy;
    const double e3 = solve(m, a).energy;
    CHECK(e1 < 0.0);
    CHECK(e2 <= e1 + 1e-15);
    CHECK(e3 <= e2 + 1e-15);
  }
}

TEST_CASE("sensitivity bound covers entry perturbations") {
  auto m = synthetic();
  m.dH0.setConstant(1e-7);
  m.dH0(0, 0) = 0.0;
  m.dH2 = 1e-7 * m.H2.cwiseAbs();
  const double a = 0.05;
  const auto s = solve(m, a);
  auto up = m;
  up.H0 += m.dH0;
  up.H2 += m.dH2;
  CHECK(std::abs(solve(up, a).energy - s.energy) <= s.sensitivity);
}

TEST_CASE("trial norm grows like 1 + alpha^2 ||Phi2||^2") {
  const auto m = synthetic();
  double prev = 0.0, prev_a = 0.0;
  for (double a : {1e-3, 2e-3, 4e-3, 8e-3}) {
    const Vector6 t = trial_vector(a, m.beta());
    const double r = std::abs(t.dot(m.G * t) - 1.0 - a * a * m.G(2, 2));
    if (prev > 0.0) CHECK(std::log(r / prev) / std::log(a / prev_a) >= 2.5);
    prev = r;
    prev_a = a;
  }
}

TEST_CASE("fit recovers an exact polynomial") {
  std::vector<double> a = alpha_grid(1e-4, 1e-1, 12), e;
  for (double x : a) e.push_back(x * x * (-0.08 + 0.018 * x - 0.004 * x * x));
  const auto f = fit_expansion(a, e);
  CHECK(std::abs(f.c2.value + 0.08) < 1e-12);
  CHECK(std::abs(f.c3.value - 0.018) < 1e-12);
  CHECK(std::abs(f.c4.value + 0.004) < 1e-12);
  CHECK(f.residual < 1e-15);
}

TEST_CASE("fit rejects bad grids") {
  CHECK_THROWS_AS(fit_expansion({1e-2}, {1.0}), ValidationError);
  std::vector<double> near(6, 1e-2), e(6, -1e-5);
  for (int i = 0; i < 6; ++i) near[i] += 1e-12 * i;
  CHECK_THROWS_AS(fit_expansion(near, e), ValidationError);
  std::vector<double> big = alpha_grid(1e-3, 0.5, 6);
  CHECK_THROWS_AS(fit_expansion(big, e), ValidationError);
}
