// One line per acceptance criterion; exit status is the number of failures.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "pf/cli.hpp"

using namespace pf;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* title, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("threw: ") + e.what()};
  }
  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = dt <= limit_s;
  const bool ok = o.passed && in_time;
  if (!ok) ++failures;
  std::printf("%s [%2d] %s | %s | %.2f s (limit %.0f s)%s\n", ok ? "PASS" : "FAIL", id, title, o.detail.c_str(), dt,
              limit_s, in_time ? "" : " OVER TIME");
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

int main() {
  const CutoffProfile profile = CutoffProfile::smooth(2.0);
  const Budget budget;  // 1e5 tensor nodes, 1e6 net points
  Inventory inv;
  BasisMatrices mats;
  CoefficientSet coeffs;

  criterion(1, "closed-form e1 for sharp cutoffs", 1.0, [] {
    const double a = e1(CutoffProfile::sharp(1.0)).value, b = e1(CutoffProfile::sharp(2.0)).value;
    const double da = std::abs(a - 2.0 / M_PI * std::log(2.0)), db = std::abs(b - 2.0 / M_PI * std::log(3.0));
    return Outcome{da <= 1e-8 && db <= 1e-8, fmt("|e1(1)-(2/pi)ln2| = %.1e, |e1(2)-(2/pi)ln3| = %.1e, tol 1e-8", da, db)};
  });

  criterion(2, "closed-form e3 on the radial grid", 10.0, [] {
    const auto r = e3();
    const double exact = -1.0 / (12.0 * M_PI);
    const double d = std::abs(r.value.value - exact), dc = std::abs(r.value.value - r.commutator);
    return Outcome{d <= 1e-6 && dc <= 1e-6,
                   fmt("e3 = %.10f, |e3+1/(12pi)| = %.1e, |grid-commutator| = %.1e, tol 1e-6", r.value.value, d, dc)};
  });

  criterion(3, "hydrogen ground energy", 10.0, [] {
    const auto s = ground_u1();
    const double d = std::max(std::abs(s.energy + 0.25), std::abs(s.rayleigh + 0.25));
    return Outcome{d <= 1e-8, fmt("Rayleigh quotient %.12f, max |E+1/4| = %.1e, tol 1e-8", s.rayleigh, d)};
  });

  criterion(4, "convention lock against the discrete oracle", 120.0, [] {
    double worst = 0.0;
    int count = 0;
    for (const auto& p : {CutoffProfile::smooth(2.0), CutoffProfile::sharp(1.5)})
      for (int dirs : {4, 6}) {
        const auto model = build_model(p, mode_set(p, 1, dirs), 4);
        const auto basis = discrete_basis_states(model);
        const auto want = oracle_elements(model, basis);
        ElementEngine engine(p, discrete_measure(model));
        for (const auto& [name, e] : engine.compute_all()) {
          worst = std::max(worst, std::abs(e.value - want.at(name)) / std::max(1.0, std::abs(want.at(name))));
          ++count;
        }
        const auto m = build_matrices(engine.inventory());
        const auto b = oracle_blocks(model, basis);
        worst = std::max({worst, (m.G - b.G).cwiseAbs().maxCoeff(), (m.H0 - b.H0).cwiseAbs().maxCoeff(),
                          (m.H1 - b.H1).cwiseAbs().maxCoeff(), (m.H2 - b.H2).cwiseAbs().maxCoeff()});
      }
    return Outcome{worst <= 1e-10, fmt("%g elements on 4- and 6-mode models, max deviation %.1e, tol 1e-10", count, worst)};
  });

  criterion(5, "adjoint identities and *-orthogonality at default budgets", 1800.0, [&] {
    ElementEngine engine(profile, budget);
    inv = engine.compute_all();
    coeffs = assemble_coefficients(inv);
    mats = build_matrices(inv);
    const auto rep = verify_adjoint_identities(inv);
    std::string detail;
    for (const auto& c : rep.checks) {
      const double z = std::abs(c.lhs.value - c.rhs.value) / std::max(c.tolerance / 3.0, 1e-300);
      detail += c.name + fmt(":%.2f ", z);
    }
    return Outcome{rep.passed(), "deviation/combined error " + detail + "(tol 3)"};
  });

  criterion(6, "Phi1 nullity", 1.0, [&] {
    const auto& n = inv.at("n1s");
    const auto s = solve(mats, 1e-2);
    const bool null = s.null_directions.size() == 1 && s.null_directions[0] == 1;
    return Outcome{std::abs(n.value) <= 3.0 * n.error && null,
                   fmt("||Phi1||*^2 = %.1e, error %.1e, RR null directions ", n.value, n.error) +
                       (null ? "{Phi1}" : "other")};
  });

  criterion(7, "O(alpha^5) remainder of the trial quotient", 60.0, [&] {
    const auto alphas = alpha_grid(1e-3, 1e-1, 9);
    double sx = 0, sy = 0, sxx = 0, sxy = 0, lo = 1e300, hi = 0;
    for (double a : alphas) {
      const double poly = coeffs.d0.value * a * a + coeffs.d1.value * a * a * a + coeffs.d2.value * std::pow(a, 4);
      const double r = std::abs(trial_quotient(mats, a) - poly);
      lo = std::min(lo, r / std::pow(a, 5));
      hi = std::max(hi, r / std::pow(a, 5));
      const double x = std::log(a), y = std::log(r);
      sx += x, sy += y, sxx += x * x, sxy += x * y;
    }
    const double n = alphas.size();
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return Outcome{slope >= 4.5, fmt("log-log slope %.3f (min 4.5), residual/alpha^5 in [%.3e, %.3e]", slope, lo, hi)};
  });

  criterion(8, "variational chain on matched discrete models", 300.0, [] {
    double worst = -1e300;
    int count = 0;
    EigenOptions eo;
    eo.dense_limit = 600;
    for (const auto& p : {CutoffProfile::smooth(2.0), CutoffProfile::sharp(1.5)})
      for (int dirs : {4, 6}) {
        const auto model = build_model(p, mode_set(p, 1, dirs), 4);
        ElementEngine engine(p, discrete_measure(model));
        const auto m = build_matrices(engine.compute_all());
        for (double a : alpha_grid()) {
          const double ex = ground_state(model, a, eo).energy, rr = solve(m, a).energy, tq = trial_quotient(m, a);
          worst = std::max({worst, ex - rr, rr - tq});
          ++count;
        }
      }
    return Outcome{worst <= 1e-12, fmt("%g (model, alpha) pairs, max violation %.1e, tol 1e-12", count, worst)};
  });

  criterion(9, "RR eigenvector pattern", 60.0, [&] {
    const double beta = mats.beta();
    auto rel = [&](double a) {
      const auto c = solve(mats, a).coefficients;
      return std::max({std::abs(c(2) / (a * (1 - beta * a)) - 1), std::abs(c(3) / (4 * a * a) - 1),
                       std::abs(c(5) / (4 * a * a) - 1)});
    };
    const double r2 = rel(1e-2), r3 = rel(1e-3), r4 = rel(1e-4);
    return Outcome{r2 <= 0.1 && r3 <= r2 && r4 <= r3,
                   fmt("max relative error %.2e at 1e-2, %.2e at 1e-3, %.2e at 1e-4, tol 0.1", r2, r3, r4)};
  });

  criterion(10, "expansion fit of the RR curve", 60.0, [&] {
    const auto curve = ritz_curve(mats, alpha_grid());
    std::vector<double> a, e, de;
    for (const auto& p : curve) a.push_back(p.alpha), e.push_back(p.energy), de.push_back(p.sensitivity);
    const auto f = fit_expansion(a, e, de);
    const double t2 = 3 * std::hypot(f.c2.error, coeffs.d0.error), t3 = 3 * std::hypot(f.c3.error, coeffs.d1.error);
    const double t4 = 3 * std::hypot(f.c4.error, coeffs.d2.error);
    const bool ok = std::abs(f.c2.value - coeffs.d0.value) <= t2 && std::abs(f.c3.value - coeffs.d1.value) <= t3 &&
                    f.c4.value <= coeffs.d2.value + t4;
    return Outcome{ok, fmt("|c2-d0| = %.1e (tol %.1e), |c3-d1| = %.1e (tol %.1e)", std::abs(f.c2.value - coeffs.d0.value), t2,
                           std::abs(f.c3.value - coeffs.d1.value), t3) +
                           fmt(", c4-d2 = %.1e (tol %.1e)", f.c4.value - coeffs.d2.value, t4)};
  });

  criterion(11, "byte-identical coefficient reports across worker counts", 600.0, [] {
    const fs::path dir = fs::temp_directory_path() / "pf_acceptance_determinism";
    fs::remove_all(dir);
    RunConfig c;
    for (int jobs : {1, 2}) {
      c.jobs = jobs;
      c.out = (dir / std::to_string(jobs)).string();
      cmd_coefficients(c);
    }
    bool same = true;
    for (const char* f : {"coefficients.json", "identities.json"})
      same = same && slurp(dir / "1" / f) == slurp(dir / "2" / f) && !slurp(dir / "1" / f).empty();
    fs::remove_all(dir);
    return Outcome{same, same ? "coefficients.json and identities.json identical for --jobs 1 and 2"
                              : "outputs differ between worker counts"};
  });

  std::printf("%d of 11 criteria failed\n", failures);
  return failures;
}
