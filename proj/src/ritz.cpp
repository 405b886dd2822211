#include "pf/ritz.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace pf {

namespace {

enum : int { kOmega = 0, kPhi1, kPhi2, kPhi2t, kPhi3, kPhi4 };

void set(Matrix6& M, Matrix6& dM, int i, int j, const MatrixElement& e, double scale) {
  M(i, j) = M(j, i) = scale * e.value;
  dM(i, j) = dM(j, i) = std::abs(scale) * e.error;
}

}  // namespace

double BasisMatrices::beta() const {
  // d1 / ||Phi2||*^2 read off the blocks.
  const double n2s = H0(kPhi2, kPhi2);
  if (!(n2s > 0.0)) throw DegenerateProfileError("beta: ||Phi2||*^2 = 0");
  return (H2(kPhi2, kPhi2) - 4.0 * H0(kPhi3, kPhi3) - 4.0 * H0(kPhi1, kPhi1)) / n2s;
}

BasisMatrices build_matrices(const Inventory& inv) {
  auto e = [&](const char* name) -> const MatrixElement& {
    const auto it = inv.find(name);
    if (it == inv.end()) throw ValidationError(std::string("build_matrices: missing matrix element '") + name + "'");
    return it->second;
  };
  BasisMatrices m;
  for (Matrix6* M : {&m.G, &m.H0, &m.H1, &m.H2, &m.dG, &m.dH0, &m.dH1, &m.dH2}) M->setZero();

  m.G(kOmega, kOmega) = 1.0;
  set(m.G, m.dG, kPhi1, kPhi1, e("l1"), 1);
  set(m.G, m.dG, kPhi2, kPhi2, e("l2"), 1);
  set(m.G, m.dG, kPhi2t, kPhi2t, e("l2t"), 1);
  set(m.G, m.dG, kPhi3, kPhi3, e("l3"), 1);
  set(m.G, m.dG, kPhi4, kPhi4, e("l4"), 1);
  set(m.G, m.dG, kPhi2, kPhi2t, e("l23"), 1);

  set(m.H0, m.dH0, kPhi1, kPhi1, e("n1s"), 1);
  set(m.H0, m.dH0, kPhi2, kPhi2, e("n2s"), 1);
  set(m.H0, m.dH0, kPhi2t, kPhi2t, e("n2ts"), 1);
  set(m.H0, m.dH0, kPhi3, kPhi3, e("n3s"), 1);
  set(m.H0, m.dH0, kPhi4, kPhi4, e("n4s"), 1);

  set(m.H1, m.dH1, kPhi1, kPhi2, e("n1s"), -2);
  set(m.H1, m.dH1, kPhi1, kPhi2t, e("p2t1"), -2);
  set(m.H1, m.dH1, kPhi2, kPhi3, e("n3s"), -2);
  set(m.H1, m.dH1, kPhi2t, kPhi3, e("p2t2"), -2);
  set(m.H1, m.dH1, kPhi3, kPhi4, e("p41"), -2);

  set(m.H2, m.dH2, kPhi1, kPhi1, e("am1"), 2);
  set(m.H2, m.dH2, kPhi2, kPhi2, e("am2"), 2);
  set(m.H2, m.dH2, kPhi2t, kPhi2t, e("am2t"), 2);
  set(m.H2, m.dH2, kPhi3, kPhi3, e("am3"), 2);
  set(m.H2, m.dH2, kPhi4, kPhi4, e("am4"), 2);
  set(m.H2, m.dH2, kPhi2, kPhi2t, e("p2t3"), -4);
  set(m.H2, m.dH2, kOmega, kPhi2, e("n2s"), -1);
  set(m.H2, m.dH2, kPhi1, kPhi3, e("x13"), 1);
  set(m.H2, m.dH2, kPhi2, kPhi4, e("p42"), -4);
  set(m.H2, m.dH2, kPhi2t, kPhi4, e("x2t4"), 1);
  return m;
}

BasisMatrices build_matrices(const CutoffProfile& profile, const Budget& budget) {
  if (profile.degenerate()) throw DegenerateProfileError("build_matrices: kappa vanishes identically");
  ElementEngine engine(profile, budget);
  return build_matrices(engine.compute_all());
}

RitzSolution solve(const BasisMatrices& m, double alpha, const std::vector<int>& subset, double null_tol) {
  if (!(alpha >= 0.0)) throw ValidationError("solve: alpha must be >= 0");
  double scale = 0.0;
  for (int i : subset) scale = std::max(scale, std::sqrt(std::max(0.0, m.G(i, i))));
  RitzSolution s;
  s.alpha = alpha;
  std::vector<int> keep;
  for (int i : subset) {
    if (std::sqrt(std::max(0.0, m.G(i, i))) < null_tol * scale)
      s.null_directions.push_back(i);
    else
      keep.push_back(i);
  }
  const int n = static_cast<int>(keep.size());
  const Matrix6 H = m.at(alpha), dH = m.error_at(alpha);
  Eigen::MatrixXd G(n, n), Hs(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      G(a, b) = m.G(keep[a], keep[b]);
      Hs(a, b) = H(keep[a], keep[b]);
    }
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() != Eigen::Success) throw ConditioningError("solve: Gram matrix is not positive definite");
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Hs, G);
  if (es.info() != Eigen::Success) throw ConditioningError("solve: generalized eigenproblem failed");
  Eigen::VectorXd v = es.eigenvectors().col(0);
  s.energy = es.eigenvalues()(0);
  s.residual = (Hs * v - s.energy * G * v).norm() / std::max(v.norm(), 1e-300);
  const auto it = std::find(keep.begin(), keep.end(), 0);
  if (it != keep.end()) {
    const double c0 = v(it - keep.begin());
    if (c0 != 0.0) v /= c0;
  }
  for (int a = 0; a < n; ++a) s.coefficients(keep[a]) = v(a);
  const Vector6& c = s.coefficients;
  const double norm = c.dot(m.G * c);
  s.sensitivity = (c.cwiseAbs().transpose() * (dH + std::abs(s.energy) * m.dG) * c.cwiseAbs())(0, 0) / norm;
  return s;
}

RitzSolution solve(const BasisMatrices& m, double alpha, double null_tol) {
  return solve(m, alpha, {0, 1, 2, 3, 4, 5}, null_tol);
}

Vector6 trial_vector(double alpha, double beta) {
  const double a32 = std::pow(alpha, 1.5);
  Vector6 t;
  t << 1.0, 2.0 * a32, alpha * (1.0 - beta * alpha), 4.0 * alpha * alpha, 2.0 * a32, 4.0 * alpha * alpha;
  return t;
}

double trial_quotient(const BasisMatrices& m, double alpha) {
  if (!(alpha >= 0.0)) throw ValidationError("trial_quotient: alpha must be >= 0");
  const Vector6 t = trial_vector(alpha, m.beta());
  return t.dot(m.at(alpha) * t) / t.dot(m.G * t);
}

std::vector<double> alpha_grid(double lo, double hi, int points) {
  if (!(lo > 0.0) || !(hi > lo) || points < 1) throw ValidationError("alpha_grid: need 0 < lo < hi and points >= 1");
  std::vector<double> a(points);
  for (int i = 0; i < points; ++i)
    a[i] = points == 1 ? lo : std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (points - 1));
  if (points > 1) a.front() = lo, a.back() = hi;
  return a;
}

std::vector<RitzCurvePoint> ritz_curve(const BasisMatrices& m, const std::vector<double>& alphas) {
  std::vector<RitzCurvePoint> out;
  for (double a : alphas) {
    const auto s = solve(m, a);
    out.push_back({a, s.energy, s.sensitivity, trial_quotient(m, a), s.coefficients});
  }
  return out;
}

ExpansionFit fit_expansion(const std::vector<double>& alpha, const std::vector<double>& energy,
                           const std::vector<double>& error) {
  const int n = static_cast<int>(alpha.size());
  if (n < 6 || energy.size() != alpha.size()) throw ValidationError("fit_expansion: needs at least 6 (alpha, E) points");
  if (!error.empty() && error.size() != alpha.size()) throw ValidationError("fit_expansion: error list size mismatch");
  double amax = 0.0;
  for (double a : alpha) {
    if (!(a > 0.0) || a > 0.1) throw ValidationError("fit_expansion: alpha must lie in (0, 0.1]");
    amax = std::max(amax, a);
  }
  // Columns scaled by amax so the conditioning test reflects the spread.
  Eigen::MatrixXd A(n, 3);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    const double t = alpha[i] / amax;
    A.row(i) << 1.0, t, t * t;
    y(i) = energy[i] / (alpha[i] * alpha[i]);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv(2) < 1e-8 * sv(0)) throw ValidationError("fit_expansion: alpha points too clustered for a quadratic fit");
  const Eigen::MatrixXd L = svd.matrixV() * sv.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
  const Eigen::VectorXd c = L * y;
  const double unscale[3] = {1.0, 1.0 / amax, 1.0 / (amax * amax)};
  ExpansionFit f;
  Estimate* out[3] = {&f.c2, &f.c3, &f.c4};
  for (int j = 0; j < 3; ++j) {
    out[j]->value = c(j) * unscale[j];
    double e = 0.0;
    if (!error.empty())
      for (int i = 0; i < n; ++i) e += std::abs(L(j, i)) * error[i] / (alpha[i] * alpha[i]);
    out[j]->error = e * unscale[j];
  }
  for (int i = 0; i < n; ++i) {
    const double a = alpha[i];
    f.residual = std::max(f.residual, std::abs(energy[i] - a * a * (f.c2.value + f.c3.value * a + f.c4.value * a * a)));
  }
  return f;
}

}  // namespace pf
