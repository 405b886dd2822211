#include "pf/hydrogen.hpp"

#include <Eigen/SparseLU>
#include <cmath>

namespace pf {

namespace {

using Vec = Eigen::VectorXd;
using Sparse = Eigen::SparseMatrix<double>;

struct Nodes {
  Vec x, r, dr, ddr;
};

Nodes nodes(const RadialGrid& g) {
  const int N = g.points;
  const double h = g.step();
  Nodes n;
  n.x.resize(N + 1);
  n.r.resize(N + 1);
  n.dr.resize(N + 1);
  n.ddr.resize(N + 1);
  for (int i = 0; i <= N; ++i) {
    n.x(i) = i * h;
    n.r(i) = g.r(n.x(i));
    n.dr(i) = g.dr(n.x(i));
    n.ddr(i) = g.ddr(n.x(i));
  }
  return n;
}

double liouville(const RadialGrid& g) { return g.scheme == RadialScheme::Logarithmic ? 0.25 : 0.0; }

/// Fourth-order first and second x-derivatives of nodal values.
Vec dx1(const Vec& f, double h) {
  const int N = static_cast<int>(f.size()) - 1;
  Vec d(N + 1);
  for (int i = 2; i <= N - 2; ++i) d(i) = (f(i - 2) - 8 * f(i - 1) + 8 * f(i + 1) - f(i + 2)) / (12 * h);
  d(0) = (-25 * f(0) + 48 * f(1) - 36 * f(2) + 16 * f(3) - 3 * f(4)) / (12 * h);
  d(1) = (-3 * f(0) - 10 * f(1) + 18 * f(2) - 6 * f(3) + f(4)) / (12 * h);
  d(N) = (25 * f(N) - 48 * f(N - 1) + 36 * f(N - 2) - 16 * f(N - 3) + 3 * f(N - 4)) / (12 * h);
  d(N - 1) = (3 * f(N) + 10 * f(N - 1) - 18 * f(N - 2) + 6 * f(N - 3) - f(N - 4)) / (12 * h);
  return d;
}

Vec dx2(const Vec& f, double h) {
  const int N = static_cast<int>(f.size()) - 1;
  const double s = 12 * h * h;
  Vec d(N + 1);
  for (int i = 2; i <= N - 2; ++i) d(i) = (-f(i - 2) + 16 * f(i - 1) - 30 * f(i) + 16 * f(i + 1) - f(i + 2)) / s;
  auto left = [&](int o, int sign) {
    auto F = [&](int k) { return f(o + sign * k); };
    return std::pair{(45 * F(0) - 154 * F(1) + 214 * F(2) - 156 * F(3) + 61 * F(4) - 10 * F(5)) / s,
                     (10 * F(0) - 15 * F(1) - 4 * F(2) + 14 * F(3) - 6 * F(4) + F(5)) / s};
  };
  const auto [a0, a1] = left(0, 1);
  d(0) = a0;
  d(1) = a1;
  const auto [b0, b1] = left(N, -1);
  d(N) = b0;
  d(N - 1) = b1;
  return d;
}

Vec d_dr(const Nodes& n, const Vec& f, double h) { return dx1(f, h).cwiseQuotient(n.dr); }

Vec d2_dr2(const Nodes& n, const Vec& f, double h) {
  const Vec fx = dx1(f, h), fxx = dx2(f, h);
  return (fxx - fx.cwiseProduct(n.ddr).cwiseQuotient(n.dr)).cwiseQuotient(n.dr.cwiseAbs2());
}

/// Numerov operator on interior nodes 1..N-1 for y'' = [r'^2 (V - E) + c] y - s
/// with V = -1/r: returns L and M with L y = E M y + B s.
struct Numerov {
  Sparse L, M, B;
  double boundary = 0.0;  // coefficient of y_1 from the r = 0 node
};

Numerov numerov(const RadialGrid& g, const Nodes& n) {
  const int N = g.points, m = N - 1;
  const double h = g.step(), c = liouville(g);
  std::vector<Eigen::Triplet<double>> tl, tm, tb;
  for (int k = 0; k < m; ++k) {
    for (int j = std::max(0, k - 1); j <= std::min(m - 1, k + 1); ++j) {
      const int i = j + 1;  // node index
      const double b = (j == k ? 10.0 : 1.0) / 12.0;
      const double a = (j == k ? 2.0 : -1.0) / (h * h);
      const double P = n.dr(i) * n.dr(i);
      tl.emplace_back(k, j, a + b * (-P / n.r(i) + c));
      tm.emplace_back(k, j, b * P);
      tb.emplace_back(k, j, b);
    }
  }
  Numerov op;
  // Node 0: r'^2 V y -> -r'(0) y'(0), with y'(0) from y_1 to second order.
  const double d0 = n.dr(0);
  op.boundary = -d0 / (h * (1.0 - 0.5 * d0 * h)) / 12.0;
  tl.emplace_back(0, 0, op.boundary);
  op.L.resize(m, m);
  op.M.resize(m, m);
  op.B.resize(m, m);
  op.L.setFromTriplets(tl.begin(), tl.end());
  op.M.setFromTriplets(tm.begin(), tm.end());
  op.B.setFromTriplets(tb.begin(), tb.end());
  return op;
}

Vec simpson_weights(const RadialGrid& g, const Nodes& n) {
  const int N = g.points;
  const double h = g.step();
  Vec w(N + 1);
  for (int i = 0; i <= N; ++i) w(i) = (i == 0 || i == N) ? 1.0 : (i % 2 ? 4.0 : 2.0);
  return (h / 3.0) * w.cwiseProduct(n.dr);
}

struct Solved {
  Nodes n;
  Vec y, chi, u, w;  // y on all nodes; w: quadrature weights for dr
  double energy = 0.0;
  double dchi0 = 0.0;
  double rayleigh = 0.0;
};

Solved solve_ground(const RadialGrid& g) {
  Solved s;
  s.n = nodes(g);
  const Nodes& n = s.n;
  const int N = g.points, m = N - 1;
  const double h = g.step();
  const Numerov op = numerov(g, n);

  Vec y = Vec::Zero(m);
  for (int k = 0; k < m; ++k) {
    const double r = n.r(k + 1);
    y(k) = r * std::exp(-0.1 * r) / std::sqrt(n.dr(k + 1));
  }
  y.normalize();
  double E = 0.0, shift = -1.0, tol = 1e-6;
  for (int phase = 0; phase < 2; ++phase) {
    Eigen::SparseLU<Sparse> lu;
    lu.compute(Sparse(op.L - shift * op.M));
    if (lu.info() != Eigen::Success) throw ConvergenceError("ground_u1: factorization failed", 0.0);
    double prev = 1e300;
    int it = 0;
    for (; it < 500; ++it) {
      const Vec z = lu.solve(op.M * y);
      E = shift + y.squaredNorm() / y.dot(z);
      y = z.normalized();
      if (std::abs(E - prev) < tol) break;
      prev = E;
    }
    if (it == 500) throw ConvergenceError("ground_u1: inverse iteration did not converge", std::abs(E - prev));
    shift = E - 1e-9;
    tol = 1e-15;
  }
  if (y.sum() < 0) y = -y;

  s.y = Vec::Zero(N + 1);
  s.y.segment(1, m) = y;
  s.w = simpson_weights(g, n);
  s.chi = s.y.cwiseProduct(n.dr.cwiseSqrt());
  const double norm = std::sqrt(s.w.dot(s.chi.cwiseAbs2()));
  s.y /= norm;
  s.chi /= norm;
  s.energy = E;
  s.dchi0 = dx1(s.y, h)(0) / std::sqrt(n.dr(0));
  s.u.resize(N + 1);
  s.u(0) = s.dchi0;
  for (int i = 1; i <= N; ++i) s.u(i) = s.chi(i) / n.r(i);
  s.u /= std::sqrt(4.0 * M_PI);

  const Vec dchi = d_dr(n, s.chi, h);
  Vec q(N + 1);
  q(0) = dchi(0) * dchi(0);
  for (int i = 1; i <= N; ++i) q(i) = dchi(i) * dchi(i) - s.chi(i) * s.chi(i) / n.r(i);
  s.rayleigh = s.w.dot(q);
  return s;
}

double plain_e3_inner(const Solved& s, const RadialGrid& g) {
  const Vec up = d_dr(s.n, s.u, g.step()), upp = d2_dr2(s.n, s.u, g.step());
  const Vec& r = s.n.r;
  Vec q(r.size());
  for (int i = 0; i < r.size(); ++i)
    q(i) = r(i) * r(i) * upp(i) * upp(i) + 2 * up(i) * up(i) + (0.25 * r(i) * r(i) - r(i)) * up(i) * up(i);
  return 4.0 * M_PI * s.w.dot(q);
}

struct FormValue {
  double value = 0.0, residual = 0.0;
};

FormValue resolvent_form(const Solved& s, const RadialGrid& g) {
  const Nodes& n = s.n;
  const int N = g.points, m = N - 1;
  const Numerov op = numerov(g, n);
  Vec nu(N + 1);
  nu(0) = -s.dchi0;
  for (int i = 1; i <= N; ++i) nu(i) = (-1.0 / n.r(i) - s.energy) * s.chi(i);
  nu -= s.w.dot(nu.cwiseProduct(s.chi)) * s.chi;
  const Vec src = nu.cwiseProduct(n.dr.cwiseSqrt().cwiseProduct(n.dr));

  // K is singular along the ground state. Solve with the shifted operator
  // K - eps M and project that direction out; the remainder contracts by
  // eps / (gap - eps) per sweep.
  const Sparse K = op.L - s.energy * op.M;
  const Vec y0 = s.y.segment(1, m);
  const Vec c = op.M * y0;
  Vec d(m);
  for (int k = 0; k < m; ++k) d(k) = s.w(k + 1) * n.dr(k + 1) * std::sqrt(n.dr(k + 1)) * s.chi(k + 1);
  Vec rhs = op.B * src.segment(1, m);
  rhs(0) += src(0) / 12.0;
  rhs(m - 1) += src(N) / 12.0;
  const double eps = 1e-3;
  Eigen::SparseLU<Sparse> lu;
  lu.compute(Sparse(K - eps * op.M));
  if (lu.info() != Eigen::Success) throw ConvergenceError("resolvent form: factorization failed", 0.0);
  auto project = [&](Vec v) { return Vec(v - (d.dot(v) / d.dot(y0)) * y0); };
  Vec sol = project(lu.solve(rhs));
  for (int it = 0; it < 50; ++it) {
    const Vec next = project(lu.solve(rhs - eps * (op.M * sol)));
    const double change = (next - sol).norm();
    sol = next;
    if (change <= 1e-15 * sol.norm()) break;
  }
  FormValue f;
  const Vec r = rhs - K * sol;
  const double lambda = c.dot(r) / c.dot(c);
  double knorm = 0.0;
  {
    Vec rows = Vec::Zero(m);
    for (int k = 0; k < K.outerSize(); ++k)
      for (Sparse::InnerIterator it(K, k); it; ++it) rows(it.row()) += std::abs(it.value());
    knorm = rows.maxCoeff();
  }
  // Normwise backward error of the bordered system.
  f.residual = (r - lambda * c).lpNorm<Eigen::Infinity>() /
               (knorm * sol.lpNorm<Eigen::Infinity>() + rhs.lpNorm<Eigen::Infinity>());
  if (!(f.residual <= 1e-10)) throw ConvergenceError("resolvent form: radial solve residual too large", f.residual);
  Vec omega = Vec::Zero(N + 1);
  omega.segment(1, m) = sol.cwiseProduct(n.dr.segment(1, m).cwiseSqrt());
  f.value = s.w.dot(nu.cwiseProduct(omega));
  return f;
}

/// Integral of w(kappa(t)) / (1 + t) over [0, lambda] on panels geometric in 1 + t.
double kappa_integral(const CutoffProfile& p, int power, int nodes) {
  std::vector<double> br = {0.0};
  const double lo = p.taper == Taper::SmoothCubic ? std::max(0.0, p.lambda - 1.0) : p.lambda;
  for (double b = 1.0; b < lo; b = 2.0 * b + 1.0) br.push_back(b);
  if (lo > br.back()) br.push_back(lo);
  if (p.lambda > br.back()) br.push_back(p.lambda);
  double sum = 0.0;
  std::vector<double> x, w;
  for (std::size_t k = 1; k < br.size(); ++k) {
    gauss_legendre(nodes, br[k - 1], br[k], x, w);
    for (int i = 0; i < nodes; ++i) sum += w[i] * std::pow(kappa_eval(p, x[i]), power) / (1.0 + x[i]);
  }
  return sum;
}

Estimate kappa_estimate(const CutoffProfile& p, int power, double factor, const char* what) {
  if (p.degenerate()) return {0.0, 0.0};
  if (!std::isfinite(p.lambda) || !(p.lambda > 0.0))
    throw ValidationError(std::string(what) + ": cutoff lambda must be a finite number > 0");
  const double a = kappa_integral(p, power, 24), b = kappa_integral(p, power, 48);
  return {factor * b, factor * (std::abs(b - a) + 4e-16 * std::abs(b))};
}

}  // namespace

void RadialGrid::validate() const {
  if (!(r_max >= 40.0) || !std::isfinite(r_max)) throw ValidationError("RadialGrid: r_max must be >= 40");
  if (points < 1000 || points % 2) throw ValidationError("RadialGrid: points must be an even number >= 1000");
  if (scheme == RadialScheme::Logarithmic && !(scale > 0.0)) throw ValidationError("RadialGrid: scale must be > 0");
}

RadialGrid RadialGrid::halved() const {
  RadialGrid g = *this;
  g.points = points / 2 + (points / 2) % 2;
  return g;
}

double RadialGrid::x_max() const {
  return scheme == RadialScheme::Uniform ? r_max : std::log1p(r_max / scale);
}
double RadialGrid::r(double x) const { return scheme == RadialScheme::Uniform ? x : scale * std::expm1(x); }
double RadialGrid::dr(double x) const { return scheme == RadialScheme::Uniform ? 1.0 : scale * std::exp(x); }
double RadialGrid::ddr(double x) const { return scheme == RadialScheme::Uniform ? 0.0 : scale * std::exp(x); }

double radial_integral(const RadialGrid& grid, const Eigen::VectorXd& g) {
  if (g.size() != grid.points + 1) throw ValidationError("radial_integral: size mismatch");
  return simpson_weights(grid, nodes(grid)).dot(g);
}

RadialState ground_u1(const RadialGrid& grid) {
  grid.validate();
  const Solved s = solve_ground(grid);
  const Solved c = solve_ground(grid.halved());
  RadialState out;
  out.grid = grid;
  out.r = s.n.r;
  out.chi = s.chi;
  out.u = s.u;
  out.energy = s.energy;
  out.rayleigh = s.rayleigh;
  out.error = std::abs(s.energy - c.energy) / 15.0 + std::abs(s.rayleigh - c.rayleigh) / 15.0;
  if (out.error > 1e-8) throw ConvergenceError("ground_u1: grid too coarse for a 1e-8 energy", out.error);
  return out;
}

Estimate e1(const CutoffProfile& profile) { return kappa_estimate(profile, 2, 2.0 / M_PI, "e1"); }

Estimate a0(const CutoffProfile& profile) { return kappa_estimate(profile, 1, 4.0 / (3.0 * M_PI), "a0"); }

E3Result e3(const RadialGrid& grid) {
  grid.validate();
  const Solved s = solve_ground(grid);
  const Solved c = solve_ground(grid.halved());
  E3Result r;
  r.inner_norm = plain_e3_inner(s, grid);
  const double coarse = plain_e3_inner(c, grid.halved());
  r.value = {-r.inner_norm / (3.0 * M_PI), std::abs(r.inner_norm - coarse) / (3.0 * M_PI)};
  r.commutator = 2.0 * M_PI * s.u(0) * s.u(0) * (-1.0 / (3.0 * M_PI));
  if (!(r.inner_norm > 0.0)) throw ConvergenceError("e3: inner norm is not positive", r.inner_norm);
  return r;
}

ResolventForm laplacian_resolvent_form(const RadialGrid& grid) {
  grid.validate();
  const auto f = resolvent_form(solve_ground(grid), grid);
  const auto fc = resolvent_form(solve_ground(grid.halved()), grid.halved());
  return {f.value, std::abs(f.value - fc.value), std::max(f.residual, fc.residual)};
}

E2Pieces e2(const Inventory& inv, const CutoffProfile& profile, const RadialGrid& grid) {
  auto get = [&](const char* name) -> Estimate {
    const auto it = inv.find(name);
    if (it == inv.end()) throw ValidationError(std::string("e2: missing matrix element '") + name + "'");
    return {it->second.value, it->second.error};
  };
  E2Pieces p;
  p.i = get("e2_i");
  p.ii = get("e2_ii");
  p.iii = get("e2_iii");
  const Estimate a = a0(profile);
  if (a.value == 0.0) {
    p.iv = {0.0, 0.0};
  } else {
    const auto f = laplacian_resolvent_form(grid);
    p.iv = {4.0 * a.value * a.value * f.value,
            4.0 * std::hypot(2.0 * a.value * a.error * f.value, a.value * a.value * f.error)};
  }
  p.total.value = p.i.value + p.ii.value + p.iii.value + p.iv.value;
  p.total.error = std::sqrt(p.i.error * p.i.error + p.ii.error * p.ii.error + p.iii.error * p.iii.error +
                            p.iv.error * p.iv.error);
  return p;
}

E2Pieces e2(const CutoffProfile& profile, const Budget& budget, const RadialGrid& grid) {
  ElementEngine engine(profile, budget);
  Inventory inv;
  for (const char* n : {"e2_i", "e2_ii", "e2_iii"}) inv[n] = engine.element(n);
  return e2(inv, profile, grid);
}

HydrogenCoefficients hydrogen_coefficients(const CoefficientSet& c, const CutoffProfile& profile,
                                           const RadialGrid& grid) {
  HydrogenCoefficients h;
  h.e1 = e1(profile);
  h.a0 = a0(profile);
  h.e3 = e3(grid).value;
  h.pieces = e2(c.inventory, profile, grid);
  h.e2 = h.pieces.total;
  h.dt0 = {c.d0.value - 0.25, c.d0.error};
  h.dt1 = {c.d1.value - h.e1.value, std::hypot(c.d1.error, h.e1.error)};
  h.dt2 = {c.d2.value - h.e2.value, std::hypot(c.d2.error, h.e2.error)};
  h.dt3 = {-h.e3.value, h.e3.error};
  return h;
}

std::vector<SigmaPoint> assemble_sigma(const CoefficientSet& c, const HydrogenCoefficients& h,
                                       const std::vector<double>& alphas) {
  std::vector<SigmaPoint> out;
  for (double a : alphas) {
    if (!(a >= 0.0)) throw ValidationError("assemble_sigma: alpha must be >= 0");
    const double a2 = a * a, a3 = a2 * a, a4 = a3 * a;
    const double a5log = a > 0.0 ? a4 * a * std::log(1.0 / a) : 0.0;
    SigmaPoint p;
    p.alpha = a;
    p.sigma0 = {c.d0.value * a2 + c.d1.value * a3 + c.d2.value * a4,
                std::sqrt(std::pow(c.d0.error * a2, 2) + std::pow(c.d1.error * a3, 2) + std::pow(c.d2.error * a4, 2))};
    p.binding = {0.25 * a2 + h.e1.value * a3 + h.e2.value * a4 + h.e3.value * a5log,
                 std::sqrt(std::pow(h.e1.error * a3, 2) + std::pow(h.e2.error * a4, 2) +
                           std::pow(h.e3.error * a5log, 2))};
    p.sigma = {p.sigma0.value - p.binding.value, std::hypot(p.sigma0.error, p.binding.error)};
    out.push_back(p);
  }
  return out;
}

}  // namespace pf
