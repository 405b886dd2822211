#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "pf/elements.hpp"

using namespace pf;

namespace {

void check_against_oracle(const CutoffProfile& p, int directions) {
  const auto model = build_model(p, mode_set(p, 1, directions), 4);
  const auto want = oracle_elements(model, discrete_basis_states(model));
  ElementEngine engine(p, discrete_measure(model));
  const auto& got = engine.compute_all();
  double scale = 0.0;
  for (const auto& [name, v] : want) scale = std::max(scale, std::abs(v));
  for (const auto& name : inventory_names()) {
    INFO(name, " directions=", directions);
    REQUIRE(want.count(name) == 1);
    const double w = want.at(name), g = got.at(name).value;
    CHECK(std::abs(g - w) <= 1e-10 * std::max(std::abs(w), 1e-3 * scale));
    CHECK(got.at(name).error <= 1e-14 * scale);
  }
}

}  // namespace

TEST_CASE("every inventory element matches the discrete oracle") {
  const auto p = CutoffProfile::smooth(2.0);
  check_against_oracle(p, 4);
  check_against_oracle(p, 6);
  check_against_oracle(CutoffProfile::sharp(1.5), 4);
}

TEST_CASE("vanishing profile gives exact zeros and refuses coefficients") {
  const CutoffProfile p{2.0, Taper::Vanishing};
  ElementEngine engine(p, Budget{});
  for (const auto& [name, e] : engine.compute_all()) {
    CHECK(e.value == 0.0);
    CHECK(e.error == 0.0);
  }
  CHECK_THROWS_AS(assemble_coefficients(p, Budget{}), DegenerateProfileError);
}

TEST_CASE("unknown element name is rejected") {
  ElementEngine engine(CutoffProfile::smooth(2.0), Budget{});
  CHECK_THROWS_AS(engine.element("n5s"), ValidationError);
}

TEST_CASE("low-dimensional continuum elements and their identities") {
  const auto p = CutoffProfile::smooth(2.0);
  Budget b;
  b.nodes = 20000;
  ElementEngine engine(p, b);
  const auto n2s = engine.element("n2s");
  CHECK(n2s.value > 0.0);
  CHECK(n2s.error < 1e-6 * n2s.value);
  CHECK(n2s.method == "TensorGauss");
  Inventory inv;
  for (const char* n : {"n1s", "n2s", "id_a", "id_b", "cstar", "id_g", "p2t1", "p2t2", "p2t3", "n2ts"})
    inv[n] = engine.element(n);
  for (const char* n : {"n3s", "id_c", "p41", "p42", "n4s", "id_d", "id_e", "id_f"}) inv[n] = {n, 0, 1, "", 0, 0, ""};
  const auto rep = verify_adjoint_identities(inv);
  for (const auto& c : rep.checks)
    if (c.name == "a" || c.name == "b" || c.name == "g" || c.name == "g_parts") {
      INFO(c.name, " lhs=", c.lhs.value, " rhs=", c.rhs.value, " tol=", c.tolerance);
      CHECK(c.passed);
    }
}

TEST_CASE("inventory cache round trip") {
  const auto p = CutoffProfile::smooth(2.0);
  Budget b;
  const auto dir = std::filesystem::temp_directory_path() / "pf_cache_test";
  std::filesystem::create_directories(dir);
  const auto path = cache_path(dir.string(), p, b);
  Inventory inv;
  for (const auto& n : inventory_names()) inv[n] = {n, 1.0 / 3.0, 1e-9, "TensorGauss", 10, 0, p.hash()};
  save_inventory(path, inv, p);
  Inventory back;
  REQUIRE(load_inventory(path, back));
  CHECK(back.at("am4").value == 1.0 / 3.0);
  b.seed = 7;
  CHECK(cache_path(dir.string(), p, b) != path);
  CHECK(cache_path(dir.string(), CutoffProfile::sharp(2.0), Budget{}) != path);
  std::filesystem::remove_all(dir);
}
