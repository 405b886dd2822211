#include "pf/oracle.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "pf/quadrature.hpp"

namespace pf {

namespace {

Mat3 generic_rotation() {
  return (Eigen::AngleAxisd(0.3, Vec3::UnitZ()) * Eigen::AngleAxisd(0.7, Vec3::UnitY()) *
          Eigen::AngleAxisd(1.1, Vec3::UnitZ()))
      .toRotationMatrix();
}

std::vector<Vec3> icosahedron() {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v;
  for (double a : {-1.0, 1.0})
    for (double b : {-t, t}) {
      v.emplace_back(0, a, b);
      v.emplace_back(a, b, 0);
      v.emplace_back(b, 0, a);
    }
  return v;
}

std::vector<Vec3> dodecahedron() {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v;
  for (double a : {-1.0, 1.0})
    for (double b : {-1.0, 1.0})
      for (double c : {-1.0, 1.0}) v.emplace_back(a, b, c);
  for (double a : {-1.0, 1.0})
    for (double b : {-1.0, 1.0}) {
      v.emplace_back(0, a / t, b * t);
      v.emplace_back(a / t, b * t, 0);
      v.emplace_back(b * t, 0, a / t);
    }
  return v;
}

}  // namespace

std::vector<Vec3> spherical_design(int directions) {
  std::vector<Vec3> v;
  switch (directions) {
    case 4:
      v = {Vec3(1, 1, 1), Vec3(1, -1, -1), Vec3(-1, 1, -1), Vec3(-1, -1, 1)};
      break;
    case 6:
      v = {Vec3(1, 0, 0), Vec3(-1, 0, 0), Vec3(0, 1, 0), Vec3(0, -1, 0), Vec3(0, 0, 1), Vec3(0, 0, -1)};
      break;
    case 8:
      for (double a : {-1.0, 1.0})
        for (double b : {-1.0, 1.0})
          for (double c : {-1.0, 1.0}) v.emplace_back(a, b, c);
      break;
    case 12:
      v = icosahedron();
      break;
    case 20:
      v = dodecahedron();
      break;
    case 32: {
      v = icosahedron();
      const auto d = dodecahedron();
      v.insert(v.end(), d.begin(), d.end());
      break;
    }
    default:
      throw ValidationError("spherical design sizes are 4, 6, 8, 12, 20, 32");
  }
  const Mat3 R = generic_rotation();
  for (auto& x : v) x = R * x.normalized();
  return v;
}

std::vector<Mode> mode_set(const CutoffProfile& profile, int radial, int directions) {
  if (radial < 1) throw ValidationError("mode_set: need at least one radial node");
  const auto dirs = spherical_design(directions);
  std::vector<double> x, w;
  gauss_legendre(radial, 0.0, 1.0, x, w);
  std::vector<Mode> modes;
  const double lam = profile.lambda;
  for (int i = 0; i < radial; ++i) {
    const double r = lam * x[i] * x[i];
    const double wr = w[i] * r * r * 2.0 * lam * x[i];
    for (const auto& d : dirs) modes.push_back({r * d, wr * 4.0 * M_PI / directions});
  }
  return modes;
}

long DiscreteModel::index_of(const std::vector<unsigned char>& n) const {
  auto it = index_.find(n);
  return it == index_.end() ? -1 : it->second;
}

DiscreteModel build_model(const CutoffProfile& profile, std::vector<Mode> modes, int nmax, const Vec3& p,
                          long max_dimension) {
  if (nmax < 0) throw ValidationError("build_model: negative photon cap");
  DiscreteModel m;
  m.profile = profile;
  m.modes = std::move(modes);
  m.nmax = nmax;
  m.p = p;
  const int S = 2 * static_cast<int>(m.modes.size());
  for (const auto& mode : m.modes) {
    if (!(mode.k.norm() > 0.0)) throw DomainError("build_model: zero mode momentum");
    if (!(mode.w > 0.0)) throw DomainError("build_model: non-positive mode weight");
    const auto c = couplings(profile, mode.k);
    for (int l = 0; l < 2; ++l) m.g_.push_back(c.g[l] * std::sqrt(mode.w));
  }

  // Dimension = C(S + nmax, nmax).
  double dim = 1.0;
  for (int j = 1; j <= nmax; ++j) dim = dim * (S + j) / j;
  if (dim > static_cast<double>(max_dimension))
    throw ValidationError("build_model: Fock dimension " + std::to_string(static_cast<long>(dim)) +
                          " exceeds cap " + std::to_string(max_dimension));

  // Graded lexicographic enumeration of non-decreasing state sequences.
  std::vector<int> seq;
  std::function<void(int, int)> rec = [&](int remaining, int start) {
    if (remaining == 0) {
      std::vector<unsigned char> n(S, 0);
      for (int s : seq) ++n[s];
      m.index_[n] = static_cast<long>(m.occ_.size());
      m.occ_.push_back(std::move(n));
      m.photons_.push_back(static_cast<int>(seq.size()));
      return;
    }
    for (int s = start; s < S; ++s) {
      seq.push_back(s);
      rec(remaining - 1, s);
      seq.pop_back();
    }
  };
  for (int N = 0; N <= nmax; ++N) rec(N, 0);

  const long D = m.dimension();
  m.hf_.setZero(D);
  m.dstar_.setZero(D);
  for (int i = 0; i < 3; ++i) m.pf_[i].setZero(D);
  std::array<std::vector<Eigen::Triplet<double>>, 3> trip;
  for (long idx = 0; idx < D; ++idx) {
    const auto& n = m.occ_[idx];
    Vec3 P = Vec3::Zero();
    double h = 0.0;
    for (int s = 0; s < S; ++s) {
      if (!n[s]) continue;
      const Vec3& k = m.modes[s / 2].k;
      h += n[s] * k.norm();
      P += n[s] * k;
      auto lower = n;
      --lower[s];
      const long target = m.index_.at(lower);
      const double amp = std::sqrt(static_cast<double>(n[s]));
      for (int i = 0; i < 3; ++i)
        if (m.g_[s](i) != 0.0) trip[i].emplace_back(target, idx, amp * m.g_[s](i));
    }
    m.hf_(idx) = h;
    for (int i = 0; i < 3; ++i) m.pf_[i](idx) = P(i);
    m.dstar_(idx) = h + P.squaredNorm();
  }
  for (int i = 0; i < 3; ++i) {
    m.am_[i].resize(D, D);
    m.am_[i].setFromTriplets(trip[i].begin(), trip[i].end());
    m.ap_[i] = m.am_[i].transpose();
  }
  return m;
}

Vector DiscreteModel::resolvent(const Vector& v) const {
  Vector r(v.size());
  for (long i = 0; i < v.size(); ++i) r(i) = photons_[i] == 0 ? 0.0 : v(i) / dstar_(i);
  return r;
}

Vector DiscreteModel::apply(const Vector& v, double alpha) const {
  Vector out = hf_.cwiseProduct(v);
  const double sa = std::sqrt(alpha);
  for (int i = 0; i < 3; ++i) {
    const Vector pm = Vector::Constant(v.size(), p(i)) - pf_[i];
    out += pm.cwiseProduct(pm).cwiseProduct(v);
    if (alpha == 0.0) continue;
    const Vector Av = ap_[i] * v + am_[i] * v;
    const Vector pv = pm.cwiseProduct(v);
    out -= sa * (pm.cwiseProduct(Av) + ap_[i] * pv + am_[i] * pv);
    const Vector amv = am_[i] * v;
    out += alpha * (ap_[i] * (ap_[i] * v) + am_[i] * amv + 2.0 * (ap_[i] * amv));
  }
  return out;
}

SparseMatrix DiscreteModel::sparse_hamiltonian(double alpha) const {
  const long D = dimension();
  SparseMatrix T(D, D);
  Vector diag = hf_;
  std::array<SparseMatrix, 3> PM;
  for (int i = 0; i < 3; ++i) {
    const Vector pm = Vector::Constant(D, p(i)) - pf_[i];
    diag += pm.cwiseProduct(pm);
    PM[i] = SparseMatrix(pm.asDiagonal().toDenseMatrix().sparseView());
  }
  T = SparseMatrix(diag.asDiagonal().toDenseMatrix().sparseView());
  if (alpha == 0.0) return T;
  const double sa = std::sqrt(alpha);
  for (int i = 0; i < 3; ++i) {
    const SparseMatrix A = ap_[i] + am_[i];
    const SparseMatrix lin = PM[i] * A + A * PM[i];
    const SparseMatrix quad = ap_[i] * ap_[i] + am_[i] * am_[i] + 2.0 * (ap_[i] * am_[i]);
    T = T - sa * lin + alpha * quad;
  }
  T.prune(0.0);
  return T;
}

Eigen::MatrixXd DiscreteModel::dense_hamiltonian(double alpha) const {
  const long D = dimension();
  Eigen::MatrixXd H(D, D);
  Vector e = Vector::Zero(D);
  for (long j = 0; j < D; ++j) {
    e(j) = 1.0;
    H.col(j) = apply(e, alpha);
    e(j) = 0.0;
  }
  return 0.5 * (H + H.transpose());
}

PhotonRule DiscreteModel::rule() const {
  PhotonRule r;
  for (const auto& m : modes) r.push(profile, m.k, m.w);
  return r;
}

Vector DiscreteModel::from_amplitude(int sector, const SectorKernel& kernel) const {
  Vector v = Vector::Zero(dimension());
  std::vector<Photon> cfg;
  for (long idx = 0; idx < dimension(); ++idx) {
    if (photons_[idx] != sector) continue;
    const auto& n = occ_[idx];
    cfg.clear();
    double factor = std::tgamma(sector + 1.0);
    double weight = 1.0;
    for (int s = 0; s < single_states(); ++s)
      for (int c = 0; c < n[s]; ++c) {
        cfg.push_back({modes[s / 2].k, s % 2});
        weight *= modes[s / 2].w;
      }
    for (int s = 0; s < single_states(); ++s) factor /= std::tgamma(n[s] + 1.0);
    v(idx) = std::sqrt(factor * weight) * (sector == 0 ? 1.0 : kernel(cfg));
  }
  return v;
}

SpectralResult lanczos_lowest(const std::function<Vector(const Vector&)>& apply, const Vector& start,
                              const EigenOptions& opts) {
  const long D = start.size();
  const int maxit = static_cast<int>(std::min<long>(opts.max_iterations, D));
  Eigen::MatrixXd Q(D, maxit + 1);
  std::vector<double> a, b;
  Q.col(0) = start.normalized();
  SpectralResult res;
  double scale = 0.0;
  for (int j = 0; j < maxit; ++j) {
    Vector w = apply(Q.col(j));
    a.push_back(Q.col(j).dot(w));
    // Two passes of classical Gram-Schmidt against the whole basis.
    for (int pass = 0; pass < 2; ++pass) w -= Q.leftCols(j + 1) * (Q.leftCols(j + 1).transpose() * w);
    const double beta = w.norm();
    b.push_back(beta);
    const int m = j + 1;
    const bool check = (m % 5 == 0) || m == maxit || beta < 1e-14;
    if (check) {
      Eigen::MatrixXd Tm = Eigen::MatrixXd::Zero(m, m);
      for (int i = 0; i < m; ++i) {
        Tm(i, i) = a[i];
        if (i + 1 < m) Tm(i, i + 1) = Tm(i + 1, i) = b[i];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Tm);
      scale = std::max(scale, es.eigenvalues().cwiseAbs().maxCoeff());
      const double est = std::abs(beta * es.eigenvectors()(m - 1, 0));
      if (est <= opts.tolerance * std::max(scale, 1.0) || beta < 1e-14 || m == maxit) {
        Vector x = Q.leftCols(m) * es.eigenvectors().col(0);
        x.normalize();
        const Vector r = apply(x);
        const double theta = x.dot(r);
        res.energy = theta;
        res.vector = x;
        res.residual = (r - theta * x).norm();
        res.iterations = m;
        if (res.residual <= opts.tolerance * std::max(scale, 1.0) * 10.0) return res;
        if (m == maxit || beta < 1e-14)
          throw ConvergenceError("lanczos: no convergence after " + std::to_string(m) + " iterations",
                                 res.residual);
      }
    }
    if (beta < 1e-14) break;
    Q.col(j + 1) = w / beta;
  }
  throw ConvergenceError("lanczos: breakdown", res.residual);
}

SpectralResult ground_state(const DiscreteModel& model, double alpha, const EigenOptions& opts) {
  const long D = model.dimension();
  SpectralResult res;
  if (D <= opts.dense_limit) {
    const Eigen::MatrixXd H = model.dense_hamiltonian(alpha);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    res.energy = es.eigenvalues()(0);
    res.vector = es.eigenvectors().col(0);
    res.residual = (H * res.vector - res.energy * res.vector).norm();
    res.iterations = 1;
  } else {
    Vector start = Vector::Zero(D);
    start(0) = 1.0;
    res = lanczos_lowest([&](const Vector& v) { return model.apply(v, alpha); }, start, opts);
  }
  if (res.vector(0) < 0) res.vector = -res.vector;
  return res;
}

double star(const DiscreteModel& m, const Vector& a, const Vector& b) {
  return a.dot(m.dstar().cwiseProduct(b));
}

namespace {

Vector p_dot_aplus(const DiscreteModel& m, const Vector& v) {
  Vector out = Vector::Zero(v.size());
  for (int i = 0; i < 3; ++i) out += m.pf(i).cwiseProduct(m.aplus(i) * v);
  return out;
}
Vector p_dot_aminus(const DiscreteModel& m, const Vector& v) {
  Vector out = Vector::Zero(v.size());
  for (int i = 0; i < 3; ++i) out += m.pf(i).cwiseProduct(m.aminus(i) * v);
  return out;
}
Vector aplus_aplus(const DiscreteModel& m, const Vector& v) {
  Vector out = Vector::Zero(v.size());
  for (int i = 0; i < 3; ++i) out += m.aplus(i) * (m.aplus(i) * v);
  return out;
}
Vector aminus_aminus(const DiscreteModel& m, const Vector& v) {
  Vector out = Vector::Zero(v.size());
  for (int i = 0; i < 3; ++i) out += m.aminus(i) * (m.aminus(i) * v);
  return out;
}
Vector aplus_aminus(const DiscreteModel& m, const Vector& v) {
  Vector out = Vector::Zero(v.size());
  for (int i = 0; i < 3; ++i) out += m.aplus(i) * (m.aminus(i) * v);
  return out;
}
double aminus_norm2(const DiscreteModel& m, const Vector& v) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i) s += (m.aminus(i) * v).squaredNorm();
  return s;
}
double aminus_dot(const DiscreteModel& m, const Vector& a, const Vector& b) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i) s += (m.aminus(i) * a).dot(m.aminus(i) * b);
  return s;
}

}  // namespace

DiscreteBasis discrete_basis_states(const DiscreteModel& m) {
  if (m.nmax < 4) throw ValidationError("discrete_basis_states: needs nmax >= 4");
  DiscreteBasis b;
  b.omega = Vector::Zero(m.dimension());
  b.omega(0) = 1.0;
  b.phi2 = -m.resolvent(aplus_aplus(m, b.omega));
  b.phi3 = -m.resolvent(p_dot_aplus(m, b.phi2));
  b.phi1 = -m.resolvent(p_dot_aminus(m, b.phi2));
  b.phi4a = -m.resolvent(p_dot_aplus(m, b.phi3));
  b.phi4b = -0.25 * m.resolvent(aplus_aplus(m, b.phi2));
  b.phi4 = b.phi4a + b.phi4b;
  b.y[0] = -m.resolvent(p_dot_aplus(m, b.phi1));
  b.y[1] = -m.resolvent(p_dot_aminus(m, b.phi3));
  b.y[2] = -0.5 * m.resolvent(aplus_aminus(m, b.phi2));
  const Vector Y = b.y[0] + b.y[1] + b.y[2];
  const double n2s = star(m, b.phi2, b.phi2);
  b.cstar = n2s > 0.0 ? star(m, b.phi2, Y) / n2s : 0.0;
  b.phi2t = Y - b.cstar * b.phi2;
  return b;
}

std::map<std::string, double> oracle_elements(const DiscreteModel& m, const DiscreteBasis& b) {
  std::map<std::string, double> e;
  e["n1s"] = star(m, b.phi1, b.phi1);
  e["n2s"] = star(m, b.phi2, b.phi2);
  e["n2ts"] = star(m, b.phi2t, b.phi2t);
  e["n3s"] = star(m, b.phi3, b.phi3);
  e["n4s"] = star(m, b.phi4, b.phi4);
  e["l1"] = b.phi1.squaredNorm();
  e["l2"] = b.phi2.squaredNorm();
  e["l2t"] = b.phi2t.squaredNorm();
  e["l3"] = b.phi3.squaredNorm();
  e["l4"] = b.phi4.squaredNorm();
  e["l23"] = b.phi2.dot(b.phi2t);
  e["am1"] = aminus_norm2(m, b.phi1);
  e["am2"] = aminus_norm2(m, b.phi2);
  e["am3"] = aminus_norm2(m, b.phi3);
  e["am4"] = aminus_norm2(m, b.phi4);
  e["am2t"] = aminus_norm2(m, b.phi2t);
  e["x13"] = b.phi1.dot(aminus_aminus(m, b.phi3));
  e["x2t4"] = b.phi2t.dot(aminus_aminus(m, b.phi4));
  for (int a = 0; a < 3; ++a) e["p2t" + std::to_string(a + 1)] = star(m, b.y[a], b.phi2t);
  e["p41"] = star(m, b.phi4a, b.phi4);
  e["p42"] = star(m, b.phi4b, b.phi4);
  e["cstar"] = b.cstar;
  e["id_a"] = b.omega.dot(aminus_aminus(m, b.phi2));
  e["id_b"] = b.phi1.dot(p_dot_aminus(m, b.phi2));
  e["id_c"] = b.phi2.dot(p_dot_aminus(m, b.phi3));
  e["id_d"] = b.phi3.dot(p_dot_aminus(m, b.phi4));
  e["id_e"] = b.phi2.dot(aminus_aminus(m, b.phi4));
  e["id_f"] = aminus_dot(m, b.phi2, b.phi2t);
  e["id_g"] = star(m, b.phi2, b.phi2t);

  // Photon-only pieces of the hydrogen-side e2 coefficient.
  const Vector v2 = m.resolvent(aplus_aplus(m, b.omega));
  double e2i = 0.0, e2ii = 0.0, e2iii = 0.0;
  for (int i = 0; i < 3; ++i) {
    const Vector r1 = m.resolvent(m.aplus(i) * b.omega);
    e2i += (m.aminus(i) * v2).dot(r1);
    Vector pr = Vector::Zero(r1.size());
    for (int j = 0; j < 3; ++j) pr += m.aplus(j) * m.pf(j).cwiseProduct(r1);
    const Vector u = 2.0 * pr - m.pf(i).cwiseProduct(v2);
    e2ii += u.dot(m.resolvent(u));
    e2iii += aminus_norm2(m, r1);
  }
  e["e2_i"] = 2.0 / 3.0 * e2i;
  e["e2_ii"] = e2ii / 3.0;
  e["e2_iii"] = -2.0 / 3.0 * e2iii;
  return e;
}

DenseBlocks oracle_blocks(const DiscreteModel& m, const DiscreteBasis& b) {
  const auto L = b.list();
  DenseBlocks out;
  out.G.setZero(6, 6);
  out.H0.setZero(6, 6);
  out.H1.setZero(6, 6);
  out.H2.setZero(6, 6);
  for (int j = 0; j < 6; ++j) {
    const Vector& v = *L[j];
    Vector h1 = Vector::Zero(v.size());
    for (int i = 0; i < 3; ++i) {
      const Vector Av = m.aplus(i) * v + m.aminus(i) * v;
      const Vector pv = m.pf(i).cwiseProduct(v);
      h1 += m.pf(i).cwiseProduct(Av) + m.aplus(i) * pv + m.aminus(i) * pv;
    }
    const Vector h2 = aplus_aplus(m, v) + aminus_aminus(m, v) + 2.0 * aplus_aminus(m, v);
    for (int a = 0; a < 6; ++a) {
      out.G(a, j) = L[a]->dot(v);
      out.H0(a, j) = star(m, *L[a], v);
      out.H1(a, j) = L[a]->dot(h1);
      out.H2(a, j) = L[a]->dot(h2);
    }
  }
  return out;
}

std::vector<CurvePoint> richardson_energy_curve(const CutoffProfile& profile,
                                                const std::vector<RefinementLevel>& sequence,
                                                const std::vector<double>& alphas, int nmax,
                                                const EigenOptions& opts) {
  if (sequence.size() < 3) throw ValidationError("richardson_energy_curve: needs at least 3 levels");
  for (std::size_t i = 1; i < sequence.size(); ++i)
    if (sequence[i].radial * sequence[i].directions <= sequence[i - 1].radial * sequence[i - 1].directions ||
        sequence[i].radial < sequence[i - 1].radial || sequence[i].directions < sequence[i - 1].directions)
      throw ValidationError("richardson_energy_curve: refinement sequence is not monotone");
  std::vector<CurvePoint> curve(alphas.size());
  for (std::size_t a = 0; a < alphas.size(); ++a) curve[a].alpha = alphas[a];
  for (const auto& lev : sequence) {
    const auto model = build_model(profile, mode_set(profile, lev.radial, lev.directions), nmax);
    for (std::size_t a = 0; a < alphas.size(); ++a)
      curve[a].levels.push_back(alphas[a] == 0.0 ? 0.0 : ground_state(model, alphas[a], opts).energy);
  }
  for (auto& c : curve) {
    const std::size_t L = c.levels.size();
    const double e2 = c.levels[L - 1], e1 = c.levels[L - 2], e0 = c.levels[L - 3];
    const double d1 = e2 - e1, d0 = e1 - e0;
    c.extrapolated = e2;
    if (d0 != 0.0 && d0 * d1 > 0.0 && std::abs(d1) < std::abs(d0)) c.extrapolated = e2 - d1 * d1 / (d1 - d0);
    c.band = std::max(std::abs(d1), std::abs(c.extrapolated - e2));
  }
  return curve;
}

}  // namespace pf
