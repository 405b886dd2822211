#include "pf/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <thread>

namespace pf {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json est(const Estimate& e) { return {{"error", e.error}, {"value", e.value}}; }

std::string num(double x) {
  if (x == 0.0) x = 0.0;  // no negative zero
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_file(const RunConfig& c, const std::string& name, const std::string& text) {
  fs::create_directories(c.out);
  const fs::path path = fs::path(c.out) / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
}

void write_json(const RunConfig& c, const std::string& name, json j) {
  j["config"] = json::parse(c.to_json());
  write_file(c, name, j.dump(2) + "\n");
}

/// CSV with the effective config as a leading comment line.
class Csv {
 public:
  Csv(const RunConfig& c, const std::vector<std::string>& header) {
    s_ << "# config " << c.to_json() << "\n";
    row(header);
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) s_ << (i ? "," : "") << cells[i];
    s_ << "\n";
  }
  void row(const std::vector<double>& cells) {
    std::vector<std::string> s;
    for (double x : cells) s.push_back(num(x));
    row(s);
  }
  std::string str() const { return s_.str(); }

 private:
  std::ostringstream s_;
};

Inventory inventory(const RunConfig& c) {
  const auto p = c.profile();
  const auto b = c.budget();
  std::string path;
  if (!c.cache.empty()) {
    fs::create_directories(c.cache);
    path = cache_path(c.cache, p, b);
    Inventory inv;
    if (load_inventory(path, inv)) return inv;
  }
  ElementEngine engine(p, b);
  Inventory inv = engine.compute_all();
  if (!path.empty()) save_inventory(path, inv, p);
  return inv;
}

json element_json(const MatrixElement& e) {
  return {{"error", e.error}, {"method", e.method}, {"nodes", e.nodes}, {"seed", e.seed}, {"value", e.value}};
}

double quotient_error(const BasisMatrices& m, double alpha, const Vector6& t, double value) {
  const Vector6 a = t.cwiseAbs();
  return a.dot((m.error_at(alpha) + std::abs(value) * m.dG) * a) / t.dot(m.G * t);
}

Vector6 coefficient_error(const BasisMatrices& m, double alpha, const Vector6& c) {
  Vector6 err = Vector6::Zero();
  for (double s : {-1.0, 1.0}) {
    BasisMatrices q = m;
    q.H0 += s * m.dH0;
    q.H1 += s * m.dH1;
    q.H2 += s * m.dH2;
    q.G += s * m.dG;
    q.G(0, 0) = 1.0;
    err = err.cwiseMax((solve(q, alpha).coefficients - c).cwiseAbs());
  }
  return err;
}

}  // namespace

void RunConfig::validate() const {
  const Taper t = taper_from_string(taper);
  if (t == Taper::Vanishing) throw ValidationError("config: taper 'vanishing' gives kappa = 0 identically");
  pf::validate(profile());
  if (!(alpha_min > 0.0) || !(alpha_max > alpha_min) || !(alpha_max <= 0.1))
    throw ValidationError("config: need 0 < alpha-min < alpha-max <= 0.1");
  if (alpha_points < 1) throw ValidationError("config: alpha-points must be >= 1");
  if (budget_3d < 1 || budget_6d < 1 || budget_9d < 1) throw ValidationError("config: budgets must be positive");
  if (modes_radial < 1 || nmax < 1) throw ValidationError("config: modes-radial and nmax must be >= 1");
  spherical_design(modes_angular);
  if (jobs < 0) throw ValidationError("config: jobs must be >= 0");
}

CutoffProfile RunConfig::profile() const { return {lambda, taper_from_string(taper)}; }

Budget RunConfig::budget() const {
  Budget b;
  b.nodes = budget_3d;
  b.points = budget_6d;
  b.points_high = budget_9d;
  b.seed = seed;
  b.workers = jobs > 0 ? jobs : std::max(1u, std::thread::hardware_concurrency());
  return b;
}

std::vector<double> RunConfig::alphas() const { return alpha_grid(alpha_min, alpha_max, alpha_points); }

std::string RunConfig::to_json() const {
  const json j = {{"alpha_max", alpha_max},       {"alpha_min", alpha_min}, {"alpha_points", alpha_points},
                  {"budget_3d", budget_3d},       {"budget_6d", budget_6d}, {"budget_9d", budget_9d},
                  {"lambda", lambda},             {"modes_angular", modes_angular},
                  {"modes_radial", modes_radial}, {"nmax", nmax},           {"seed", seed},
                  {"taper", to_string(taper_from_string(taper))}};
  return j.dump();
}

void cmd_coefficients(const RunConfig& c) {
  c.validate();
  const Inventory inv = inventory(c);
  const CoefficientSet cs = assemble_coefficients(inv);
  const IdentityReport rep = verify_adjoint_identities(inv);

  json elements = json::object();
  for (const auto& [name, e] : inv) elements[name] = element_json(e);
  const auto& n1 = inv.at("n1s");
  json out = {{"beta", est(cs.beta)},
              {"d0", est(cs.d0)},
              {"d1", est(cs.d1)},
              {"d2", est(cs.d2)},
              {"elements", elements},
              {"phi1_null", {{"error", n1.error}, {"passed", std::abs(n1.value) <= 3.0 * n1.error}, {"value", n1.value}}}};
  write_json(c, "coefficients.json", out);

  json checks = json::array();
  for (const auto& k : rep.checks)
    checks.push_back({{"lhs", est(k.lhs)},
                      {"name", k.name},
                      {"passed", k.passed},
                      {"rhs", est(k.rhs)},
                      {"statement", k.statement},
                      {"tolerance", k.tolerance}});
  write_json(c, "identities.json", {{"checks", checks}, {"passed", rep.passed()}});
  for (const auto& k : rep.checks)
    if (!k.passed) throw IdentityError("identity (" + k.name + ") failed: " + k.statement);
}

void cmd_curve(const RunConfig& c) {
  c.validate();
  const auto alphas = c.alphas();
  if (alphas.size() < 6) throw ValidationError("fit_expansion: needs at least 6 alpha points");
  const Inventory inv = inventory(c);
  const CoefficientSet cs = assemble_coefficients(inv);
  const BasisMatrices m = build_matrices(inv);

  std::vector<std::string> header = {"alpha", "E_RR", "E_RR_error", "E_trial", "E_trial_error"};
  for (const char* b : kBasisNames) {
    header.push_back(std::string("c_") + b);
    header.push_back(std::string("c_") + b + "_error");
  }
  Csv csv(c, header);
  std::vector<double> E, dE;
  std::vector<int> nulls;
  for (double a : alphas) {
    const RitzSolution s = solve(m, a);
    nulls = s.null_directions;
    const Vector6 t = trial_vector(a, m.beta());
    const double tq = trial_quotient(m, a);
    const Vector6 ce = coefficient_error(m, a, s.coefficients);
    std::vector<double> row = {a, s.energy, s.sensitivity, tq, quotient_error(m, a, t, tq)};
    for (int i = 0; i < 6; ++i) {
      row.push_back(s.coefficients(i));
      row.push_back(ce(i));
    }
    csv.row(row);
    E.push_back(s.energy);
    dE.push_back(s.sensitivity);
  }
  const ExpansionFit f = fit_expansion(alphas, E, dE);
  write_file(c, "rr_curve.csv", csv.str());

  auto compare = [](const Estimate& fit, const Estimate& d) {
    const double tol = 3.0 * std::hypot(fit.error, d.error);
    return json{{"difference", fit.value - d.value}, {"passed", std::abs(fit.value - d.value) <= tol}, {"tolerance", tol}};
  };
  const double tol4 = 3.0 * std::hypot(f.c4.error, cs.d2.error);
  json null_names = json::array();
  for (int i : nulls) null_names.push_back(kBasisNames[i]);
  write_json(c, "fit.json",
             {{"c2", est(f.c2)},
              {"c3", est(f.c3)},
              {"c4", est(f.c4)},
              {"checks",
               {{"c2_vs_d0", compare(f.c2, cs.d0)},
                {"c3_vs_d1", compare(f.c3, cs.d1)},
                {"c4_below_d2", {{"difference", f.c4.value - cs.d2.value}, {"passed", f.c4.value <= cs.d2.value + tol4}, {"tolerance", tol4}}}}},
              {"d0", est(cs.d0)},
              {"d1", est(cs.d1)},
              {"d2", est(cs.d2)},
              {"null_directions", null_names},
              {"residual", f.residual}});
}

void cmd_oracle(const RunConfig& c) {
  c.validate();
  const auto p = c.profile();
  const auto model = build_model(p, mode_set(p, c.modes_radial, c.modes_angular), c.nmax);
  const auto basis = discrete_basis_states(model);
  const auto want = oracle_elements(model, basis);
  ElementEngine engine(p, discrete_measure(model));
  const Inventory& got = engine.compute_all();

  json elements = json::object();
  double worst = 0.0;
  for (const auto& name : inventory_names()) {
    const double w = want.at(name), g = got.at(name).value;
    const double dev = std::abs(g - w) / std::max(1.0, std::abs(w));
    worst = std::max(worst, dev);
    elements[name] = {{"deviation", dev}, {"kernel", g}, {"oracle", w}};
  }
  const BasisMatrices m = build_matrices(got);
  const DenseBlocks blocks = oracle_blocks(model, basis);
  double block_dev = 0.0;
  const Matrix6* ours[4] = {&m.G, &m.H0, &m.H1, &m.H2};
  const Eigen::MatrixXd* theirs[4] = {&blocks.G, &blocks.H0, &blocks.H1, &blocks.H2};
  for (int b = 0; b < 4; ++b)
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j)
        block_dev = std::max(block_dev, std::abs((*ours[b])(i, j) - (*theirs[b])(i, j)) /
                                            std::max(1.0, std::abs((*theirs[b])(i, j))));

  EigenOptions eo;
  eo.dense_limit = 600;
  std::vector<double> alphas = {0.0};
  for (double a : c.alphas()) alphas.push_back(a);
  Csv spectrum(c, {"alpha", "E_exact", "E_exact_error", "E_RR", "E_RR_error", "E_trial", "E_trial_error"});
  bool chain = true;
  for (double a : alphas) {
    const auto g = ground_state(model, a, eo);
    const auto s = solve(m, a);
    const double tq = trial_quotient(m, a);
    const double scale = std::max(1.0, m.at(a).norm());
    chain = chain && g.energy <= s.energy + 1e-12 * scale && s.energy <= tq + 1e-12 * scale;
    spectrum.row(std::vector<double>{a, g.energy, g.residual, s.energy, s.sensitivity, tq,
                                     quotient_error(m, a, trial_vector(a, m.beta()), tq)});
  }
  write_file(c, "oracle_spectrum.csv", spectrum.str());

  Csv trunc(c, {"nmax", "alpha", "E_exact", "E_exact_error"});
  bool monotone = true;
  double prev = 0.0;
  for (int n = 1; n <= c.nmax; ++n) {
    const auto mn = build_model(p, mode_set(p, c.modes_radial, c.modes_angular), n);
    const auto g = ground_state(mn, c.alpha_max, eo);
    if (n > 1 && g.energy > prev + 1e-12) monotone = false;
    prev = g.energy;
    trunc.row(std::vector<double>{static_cast<double>(n), c.alpha_max, g.energy, g.residual});
  }
  write_file(c, "truncation.csv", trunc.str());

  const bool locked = worst <= 1e-10 && block_dev <= 1e-10;
  write_json(c, "convention_lock.json",
             {{"block_max_deviation", block_dev},
              {"dimension", model.dimension()},
              {"elements", elements},
              {"max_deviation", worst},
              {"modes", model.rule().size()},
              {"passed", locked},
              {"tolerance", 1e-10},
              {"truncation_monotone", monotone},
              {"variational_chain", chain}});
  if (!locked) throw IdentityError("convention lock failed: max deviation " + num(std::max(worst, block_dev)));
  if (!monotone) throw IdentityError("truncation energies are not monotone in nmax");
  if (!chain) throw IdentityError("variational chain E_exact <= E_RR <= E_trial violated");
}

void cmd_hydrogen(const RunConfig& c) {
  c.validate();
  const auto p = c.profile();
  const Inventory inv = inventory(c);
  const CoefficientSet cs = assemble_coefficients(inv);
  const RadialGrid grid;
  const HydrogenCoefficients h = hydrogen_coefficients(cs, p, grid);
  const auto ground = ground_u1(grid);
  const auto e3r = e3(grid);
  write_json(c, "hydrogen.json",
             {{"a0", est(h.a0)},
              {"d", {{"d0", est(cs.d0)}, {"d1", est(cs.d1)}, {"d2", est(cs.d2)}}},
              {"d_tilde", {{"d0", est(h.dt0)}, {"d1", est(h.dt1)}, {"d2", est(h.dt2)}, {"d3", est(h.dt3)}}},
              {"e1", est(h.e1)},
              {"e2", est(h.e2)},
              {"e2_pieces", {{"i", est(h.pieces.i)}, {"ii", est(h.pieces.ii)}, {"iii", est(h.pieces.iii)}, {"iv", est(h.pieces.iv)}}},
              {"e3", est(h.e3)},
              {"e3_commutator", est({e3r.commutator, std::abs(e3r.commutator - e3r.value.value) + e3r.value.error})},
              {"ground_energy", est({ground.energy, ground.error})}});

  std::vector<double> alphas = {0.0};
  for (double a : c.alphas()) alphas.push_back(a);
  const auto curve = assemble_sigma(cs, h, alphas);
  Csv csv(c, {"alpha", "Sigma0", "Sigma0_error", "binding", "binding_error", "Sigma", "Sigma_error", "d0_term",
              "d0_term_error", "d1_term", "d1_term_error", "d2_term", "d2_term_error", "e1_term", "e1_term_error",
              "e2_term", "e2_term_error", "e3_term", "e3_term_error"});
  for (const auto& s : curve) {
    const double a = s.alpha, l = a > 0.0 ? std::pow(a, 5) * std::log(1.0 / a) : 0.0;
    csv.row(std::vector<double>{a, s.sigma0.value, s.sigma0.error, s.binding.value, s.binding.error, s.sigma.value,
                                s.sigma.error, cs.d0.value * a * a, cs.d0.error * a * a, cs.d1.value * std::pow(a, 3),
                                cs.d1.error * std::pow(a, 3), cs.d2.value * std::pow(a, 4), cs.d2.error * std::pow(a, 4),
                                h.e1.value * std::pow(a, 3), h.e1.error * std::pow(a, 3), h.e2.value * std::pow(a, 4),
                                h.e2.error * std::pow(a, 4), h.e3.value * l, h.e3.error * l});
  }
  write_file(c, "sigma_curve.csv", csv.str());
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Ground-state energy expansion of the Pauli-Fierz fiber Hamiltonian"};
  app.name("pfqed");
  RunConfig c;
  app.set_config("--config", "", "flat key = value file; command-line flags override it");
  app.add_option("--lambda", c.lambda, "UV cutoff")->capture_default_str();
  app.add_option("--taper", c.taper, "sharp | smooth_cubic")->capture_default_str();
  app.add_option("--alpha-min", c.alpha_min, "smallest alpha of the grid")->capture_default_str();
  app.add_option("--alpha-max", c.alpha_max, "largest alpha of the grid")->capture_default_str();
  app.add_option("--alpha-points", c.alpha_points, "logarithmic grid size")->capture_default_str();
  app.add_option("--seed", c.seed, "seed of the randomized digital nets")->capture_default_str();
  app.add_option("--budget-3d", c.budget_3d, "tensor nodes for integrals up to five dimensions")->capture_default_str();
  app.add_option("--budget-6d", c.budget_6d, "net points for six to eight dimensions")->capture_default_str();
  app.add_option("--budget-9d", c.budget_9d, "net points for nine dimensions and up")->capture_default_str();
  app.add_option("--modes-radial", c.modes_radial, "oracle radial nodes")->capture_default_str();
  app.add_option("--modes-angular", c.modes_angular, "oracle directions (4, 6, 8, 12, 20, 32)")->capture_default_str();
  app.add_option("--nmax", c.nmax, "oracle photon-number truncation")->capture_default_str();
  app.add_option("--out", c.out, "output directory")->capture_default_str();
  app.add_option("--cache", c.cache, "element cache directory");
  app.add_option("--jobs", c.jobs, "worker threads (0: available parallelism)")->capture_default_str();
  app.fallthrough();
  auto* co = app.add_subcommand("coefficients", "d0, d1, d2, beta and the adjoint-identity report");
  auto* cu = app.add_subcommand("curve", "Rayleigh-Ritz curve and expansion fit");
  auto* orc = app.add_subcommand("oracle", "discrete-mode spectra and convention lock");
  auto* hy = app.add_subcommand("hydrogen", "hydrogen-side coefficients and the Sigma curve");
  app.require_subcommand(1);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int r = app.exit(e);
    return r == 0 ? kOk : kValidation;
  }
  try {
    if (co->parsed()) cmd_coefficients(c);
    if (cu->parsed()) cmd_curve(c);
    if (orc->parsed()) cmd_oracle(c);
    if (hy->parsed()) cmd_hydrogen(c);
  } catch (const IdentityError& e) {
    std::cerr << "pfqed: " << e.what() << "\n";
    return kIdentity;
  } catch (const ConvergenceError& e) {
    std::cerr << "pfqed: " << e.what() << " (residual " << e.residual << ")\n";
    return kConvergence;
  } catch (const ConditioningError& e) {
    std::cerr << "pfqed: " << e.what() << "\n";
    return kConvergence;
  } catch (const PoisonedResultError& e) {
    std::cerr << "pfqed: " << e.what() << "\n";
    return kConvergence;
  } catch (const Error& e) {
    std::cerr << "pfqed: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "pfqed: " << e.what() << "\n";
    return 1;
  }
  return kOk;
}

}  // namespace pf
