#include "pf/elements.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <set>

namespace pf {

namespace {

const double kSqrt2 = std::sqrt(2.0);
const double kSqrt3 = std::sqrt(3.0);
constexpr double kEps = 2.220446049250313e-16;

class ContinuumMeasure : public Measure {
 public:
  ContinuumMeasure(const CutoffProfile& p, const Budget& b) : profile_(p), budget_(b) {
    inner_[0] = ball_rule(p, b.inner);
    inner_[1] = ball_rule(p, b.inner.scaled(b.coarse_ratio));
    double_[0] = ball_rule(p, b.inner_double);
    double_[1] = ball_rule(p, b.inner_double.scaled(b.coarse_ratio));
  }
  std::vector<QuadratureResult> integrate(int n, int outputs, MomentumIntegrand f, bool reduce,
                                          std::uint64_t seed_offset) const override {
    auto task = reduce ? reduce_by_rotation(n, outputs, std::move(f), profile_)
                       : unreduced(n, outputs, std::move(f), profile_);
    const Method m = default_method(task.dimension);
    QuadratureOptions o;
    o.budget = m == Method::TensorGauss ? budget_.nodes : task.dimension >= 9 ? budget_.points_high : budget_.points;
    o.seed = budget_.seed + seed_offset;
    o.workers = budget_.workers;
    o.max_nodes_per_dim = budget_.max_nodes_per_dim;
    o.coarse_ratio = budget_.coarse_ratio;
    return pf::integrate(task, m, o);
  }
  const PhotonRule& inner(int level) const override { return inner_[level]; }
  const PhotonRule& inner_double(int level) const override { return double_[level]; }
  bool exact() const override { return false; }

 private:
  CutoffProfile profile_;
  Budget budget_;
  PhotonRule inner_[2], double_[2];
};

class DiscreteMeasure : public Measure {
 public:
  explicit DiscreteMeasure(const DiscreteModel& m) : rule_(m.rule()) {}
  std::vector<QuadratureResult> integrate(int n, int outputs, MomentumIntegrand f, bool,
                                          std::uint64_t) const override {
    const long M = static_cast<long>(rule_.size());
    long count = 1;
    for (int i = 0; i < n; ++i) count *= M;
    const auto sums = deterministic_sum(
        count, outputs,
        [&](long idx, double* out) {
          Vec3 ks[8];
          double w = 1.0;
          long rem = idx;
          for (int i = n - 1; i >= 0; --i) {
            const long j = rem % M;
            rem /= M;
            ks[i] = rule_.q[j];
            w *= rule_.w[j];
          }
          f(std::span<const Vec3>(ks, n), out, 0);
          for (int o = 0; o < outputs; ++o) out[o] *= w;
        },
        1);
    std::vector<QuadratureResult> res(outputs);
    for (int o = 0; o < outputs; ++o) res[o] = {sums[o], 0.0, Method::TensorGauss, count, 0, sums[o]};
    return res;
  }
  const PhotonRule& inner(int) const override { return rule_; }
  const PhotonRule& inner_double(int) const override { return rule_; }
  bool exact() const override { return true; }

 private:
  PhotonRule rule_;
};

/// Value of g at the inputs; error from the fine/coarse difference of g plus
/// linearized contributions of any error not explained by that difference.
QuadratureResult derive(const std::vector<QuadratureResult>& in,
                        const std::function<double(const std::vector<double>&)>& g) {
  std::vector<double> x(in.size()), xc(in.size());
  long nodes = 0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    x[i] = in[i].value;
    xc[i] = in[i].coarse;
    nodes += in[i].nodes;
  }
  const double v = g(x), vc = g(xc);
  double err2 = (v - vc) * (v - vc);
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double d = x[i] - xc[i];
    const double extra = std::sqrt(std::max(0.0, in[i].error * in[i].error - d * d));
    if (extra == 0.0) continue;
    auto xp = x;
    xp[i] += extra;
    const double dv = g(xp) - v;
    err2 += dv * dv;
  }
  QuadratureResult r;
  r.value = v;
  r.coarse = vc;
  r.error = std::sqrt(err2);
  r.method = in.empty() ? Method::TensorGauss : in[0].method;
  r.nodes = nodes;
  r.seed = in.empty() ? 0 : in[0].seed;
  return r;
}

QuadratureResult with_floor(QuadratureResult r, const QuadratureResult& floor) {
  r.error = std::max(r.error, std::abs(floor.value));
  return r;
}

// Which job produces each element.
const std::map<std::string, std::string>& job_of() {
  static const std::map<std::string, std::string> m = {
      {"n1s", "sector1"},       {"l1", "sector1"},        {"am2", "sector1"},
      {"id_a", "sector1"},      {"id_b", "sector1"},      {"e2_i", "sector1"},
      {"am1", "sector0"},       {"e2_iii", "sector0"},    {"n2s", "sector2"},
      {"l2", "sector2"},        {"cstar", "sector2"},     {"n2ts", "sector2"},
      {"l2t", "sector2"},       {"l23", "sector2"},       {"p2t1", "sector2"},
      {"p2t2", "sector2"},      {"p2t3", "sector2"},      {"id_g", "sector2"},
      {"e2_ii", "sector2"},     {"am3", "aminus_phi3"},   {"id_c", "aminus_phi3"},
      {"x13", "x13"},           {"n3s", "sector3"},       {"l3", "sector3"},
      {"n4s", "sector4"},       {"l4", "sector4"},        {"p41", "sector4"},
      {"p42", "sector4"},       {"id_d", "phi3_pa_phi4"}, {"id_e", "phi2_aa_phi4"},
      {"am4", "am4"},           {"x2t4", "x2t4"},         {"id_f", "phi2_apam_phi2t"},
      {"am2t", "am2t"},
  };
  return m;
}

template <typename F>
void for_each_polarization(int n, const Couplings* c, F&& f) {
  Vec3 g[5];
  for (unsigned combo = 0; combo < (1u << n); ++combo) {
    for (int i = 0; i < n; ++i) g[i] = c[i].g[(combo >> i) & 1u];
    f(g, combo);
  }
}

}  // namespace

std::string Budget::signature() const {
  char buf[256];
  std::snprintf(buf, sizeof buf, "n%ld-p%ld.%ld-s%llu-c%d-i%d.%d.%d-d%d.%d.%d-r%.3g", nodes, points, points_high,
                static_cast<unsigned long long>(seed), max_nodes_per_dim, inner.radial, inner.polar,
                inner.azimuthal, inner_double.radial, inner_double.polar, inner_double.azimuthal, coarse_ratio);
  return buf;
}

std::unique_ptr<Measure> continuum_measure(const CutoffProfile& profile, const Budget& budget) {
  return std::make_unique<ContinuumMeasure>(profile, budget);
}

std::unique_ptr<Measure> discrete_measure(const DiscreteModel& model) {
  return std::make_unique<DiscreteMeasure>(model);
}

const std::vector<std::string>& inventory_names() {
  static const std::vector<std::string> names = {
      "n1s", "n2s", "n2ts", "n3s", "n4s", "l1", "l2", "l2t", "l3", "l4", "l23", "am1",
      "am2", "am3", "am4", "am2t", "x13", "x2t4", "p2t1", "p2t2", "p2t3", "p41", "p42", "cstar",
      "id_a", "id_b", "id_c", "id_d", "id_e", "id_f", "id_g", "e2_i", "e2_ii", "e2_iii"};
  return names;
}

ElementEngine::ElementEngine(const CutoffProfile& profile, const Budget& budget)
    : profile_(profile), measure_(profile.degenerate() ? nullptr : continuum_measure(profile, budget)) {}

ElementEngine::ElementEngine(const CutoffProfile& profile, std::unique_ptr<Measure> measure)
    : profile_(profile), measure_(std::move(measure)) {}

const MatrixElement& ElementEngine::element(const std::string& name) {
  auto it = inv_.find(name);
  if (it != inv_.end()) return it->second;
  const auto j = job_of().find(name);
  if (j == job_of().end()) throw ValidationError("unknown matrix element '" + name + "'");
  run_job(j->second);
  return inv_.at(name);
}

const Inventory& ElementEngine::compute_all() {
  for (const auto& n : inventory_names()) element(n);
  return inv_;
}

void ElementEngine::store(const std::string& name, const QuadratureResult& r, const std::string& method) {
  raw_[name] = r;
  MatrixElement e;
  e.name = name;
  e.value = r.value;
  e.error = r.error;
  e.method = method;
  e.nodes = r.nodes;
  e.seed = r.method == Method::TensorGauss ? 0 : r.seed;
  e.profile_hash = profile_.hash();
  inv_[name] = e;
}

QuadratureResult ElementEngine::get(const std::string& name) {
  element(name);
  return raw_.at(name);
}

void ElementEngine::run_job(const std::string& job) {
  const auto& jobs = job_of();
  if (!measure_) {
    // kappa = 0: every amplitude vanishes identically.
    for (const auto& [name, j] : jobs)
      if (j == job) store(name, {}, "exact-zero");
    return;
  }
  const Measure& M = *measure_;
  const CutoffProfile p = profile_;
  std::uint64_t offset = 0;
  for (const auto& [name, j] : jobs) {
    if (j == job) break;
    offset += 7919;
  }
  auto tag = [&](const QuadratureResult& r) {
    return M.exact() ? std::string("Discrete") : to_string(r.method);
  };
  auto keep = [&](const std::string& name, const QuadratureResult& r) { store(name, r, tag(r)); };

  if (job == "sector1") {
    const auto r = M.integrate(
        1, 9,
        [&](std::span<const Vec3> ks, double* out, int level) {
          const Vec3& k = ks[0];
          const double f = form_factor(p, k);
          if (f == 0.0) return;
          const auto& rule = M.inner(level);
          const Mat3 Mk = m_tensor(p, k, rule);
          const Vec3 W = phi1_vector(p, k, Mk);
          const Mat3 P = transverse_projector(k);
          const double D1 = resolvent_weight(k);
          const double dW = kEps * std::sqrt(static_cast<double>(rule.size())) * 2.0 * f / D1 * Mk.norm() * k.norm();
          const double w2 = W.squaredNorm();
          out[0] = D1 * w2;
          out[1] = w2;
          out[2] = 4.0 * f * f * (P * Mk * Mk).trace();
          out[3] = -2.0 * f * f * (P * Mk).trace();
          out[4] = -2.0 * f * W.dot(P * (Mk * k));
          out[5] = 4.0 / 3.0 * f * f * (P * Mk).trace() / D1;
          out[6] = D1 * (2.0 * W.norm() * dW + dW * dW);
          out[7] = 2.0 * W.norm() * dW + dW * dW;
          out[8] = 2.0 * f * dW * Mk.norm() * k.norm();
        },
        true, offset);
    keep("n1s", with_floor(r[0], r[6]));
    keep("l1", with_floor(r[1], r[7]));
    keep("am2", r[2]);
    keep("id_a", r[3]);
    keep("id_b", with_floor(r[4], r[8]));
    keep("e2_i", r[5]);
  } else if (job == "sector0") {
    const auto r = M.integrate(
        1, 13,
        [&](std::span<const Vec3> ks, double* out, int level) {
          const Vec3& k = ks[0];
          const double f = form_factor(p, k);
          if (f == 0.0) return;
          const auto& rule = M.inner(level);
          const Mat3 Mk = m_tensor(p, k, rule);
          const Vec3 W = phi1_vector(p, k, Mk);
          const double D1 = resolvent_weight(k);
          const Mat3 P = transverse_projector(k);
          const Vec3 V = f * (P * W);
          for (int i = 0; i < 3; ++i) out[i] = V(i);
          const Mat3 X = (f * f / D1) * P;
          for (int i = 0; i < 9; ++i) out[3 + i] = X(i / 3, i % 3);
          out[12] = f * kEps * std::sqrt(static_cast<double>(rule.size())) * 2.0 * f / D1 * Mk.norm() * k.norm();
        },
        false, offset);
    std::vector<QuadratureResult> v(r.begin(), r.begin() + 3);
    for (auto& c : v) c = with_floor(c, r[12]);
    keep("am1", derive(v, [](const std::vector<double>& x) { return x[0] * x[0] + x[1] * x[1] + x[2] * x[2]; }));
    std::vector<QuadratureResult> X(r.begin() + 3, r.begin() + 12);
    keep("e2_iii", derive(X, [](const std::vector<double>& x) {
           double s = 0;
           for (double y : x) s += y * y;
           return -2.0 / 3.0 * s;
         }));
  } else if (job == "sector2") {
    // Gram matrices of {Phi2, Y1, Y2, Y3}: star form in 0..9, plain in 10..19.
    const auto r = M.integrate(
        2, 21,
        [&](std::span<const Vec3> ks, double* out, int level) {
          const Vec3 &k1 = ks[0], &k2 = ks[1];
          const Couplings c1 = couplings(p, k1), c2 = couplings(p, k2);
          if (c1.f == 0.0 || c2.f == 0.0) return;
          const auto S = sector_two_tensors(p, k1, k2, M.inner(level));
          const double D2 = resolvent_weight(k1, k2);
          const Mat3* st[4] = {&S.phi2, &S.parts[0], &S.parts[1], &S.parts[2]};
          const Vec3 Q = k1 + k2;
          const double D11 = resolvent_weight(k1), D12 = resolvent_weight(k2);
          for (int l1 = 0; l1 < 2; ++l1)
            for (int l2 = 0; l2 < 2; ++l2) {
              double a[4];
              for (int s = 0; s < 4; ++s) a[s] = c1.e[l1].dot(*st[s] * c2.e[l2]);
              int idx = 0;
              for (int s = 0; s < 4; ++s)
                for (int t = s; t < 4; ++t, ++idx) {
                  out[idx] += D2 * a[s] * a[t];
                  out[10 + idx] += a[s] * a[t];
                }
              const Vec3 &g1 = c1.g[l1], &g2 = c2.g[l2];
              const Vec3 v = kSqrt2 * (k2.dot(g1) * g2 / D12 + k1.dot(g2) * g1 / D11 - Q * (g1.dot(g2) / D2));
              out[20] += v.squaredNorm() / D2 / 3.0;
            }
        },
        true, offset);
    auto G = [](const std::vector<double>& x, int base, int s, int t) {
      if (s > t) std::swap(s, t);
      int idx = 0;
      for (int a = 0; a < 4; ++a)
        for (int b = a; b < 4; ++b, ++idx)
          if (a == s && b == t) return x[base + idx];
      return 0.0;
    };
    auto cstar = [G](const std::vector<double>& x) {
      double s = 0;
      for (int a = 1; a < 4; ++a) s += G(x, 0, 0, a);
      return s / G(x, 0, 0, 0);
    };
    std::vector<QuadratureResult> in(r.begin(), r.begin() + 20);
    keep("n2s", r[0]);
    keep("l2", r[10]);
    keep("e2_ii", r[20]);
    keep("cstar", derive(in, cstar));
    keep("n2ts", derive(in, [&](const std::vector<double>& x) {
           const double c = cstar(x);
           double yy = 0;
           for (int a = 1; a < 4; ++a)
             for (int b = 1; b < 4; ++b) yy += G(x, 0, a, b);
           return yy - c * c * G(x, 0, 0, 0);
         }));
    for (int a = 1; a < 4; ++a)
      keep("p2t" + std::to_string(a), derive(in, [&, a](const std::vector<double>& x) {
             double s = 0;
             for (int b = 1; b < 4; ++b) s += G(x, 0, a, b);
             return s - cstar(x) * G(x, 0, a, 0);
           }));
    keep("l2t", derive(in, [&](const std::vector<double>& x) {
           const double c = cstar(x);
           double yy = 0, py = 0;
           for (int a = 1; a < 4; ++a) {
             py += G(x, 10, 0, a);
             for (int b = 1; b < 4; ++b) yy += G(x, 10, a, b);
           }
           return yy - 2 * c * py + c * c * G(x, 10, 0, 0);
         }));
    keep("l23", derive(in, [&](const std::vector<double>& x) {
           double py = 0;
           for (int a = 1; a < 4; ++a) py += G(x, 10, 0, a);
           return py - cstar(x) * G(x, 10, 0, 0);
         }));
    // <Phi2, tilde-Phi2>* on the coarse rule, with c* from the fine rule.
    {
      std::vector<double> xf(20), xc(20);
      for (int i = 0; i < 20; ++i) xf[i] = r[i].value, xc[i] = r[i].coarse;
      const double cf = cstar(xf);
      double pyc = 0, pyf = 0;
      for (int a = 1; a < 4; ++a) pyc += G(xc, 0, 0, a), pyf += G(xf, 0, 0, a);
      QuadratureResult g = r[0];
      g.value = pyc - cf * G(xc, 0, 0, 0);
      g.coarse = g.value;
      const auto cs = derive(in, cstar);
      const double e_py = std::abs(pyf - pyc) + (M.exact() ? 0.0 : 1e-14 * std::abs(pyf));
      const double e_n = r[0].error;
      g.error = std::sqrt(e_py * e_py + cf * cf * e_n * e_n + cs.error * cs.error * r[0].value * r[0].value);
      keep("id_g", g);
    }
  } else if (job == "aminus_phi3") {
    const auto r = M.integrate(
        2, 2,
        [&](std::span<const Vec3> ks, double* out, int level) {
          const Vec3 &k1 = ks[0], &k2 = ks[1];
          const Couplings c1 = couplings(p, k1), c2 = couplings(p, k2);
          if (c1.f == 0.0 || c2.f == 0.0) return;
          const auto C = aminus_phi3_tensors(p, k1, k2, M.inner(level));
          const double D2 = resolvent_weight(k1, k2);
          const Vec3 Q = k1 + k2;
          for (int l1 = 0; l1 < 2; ++l1)
            for (int l2 = 0; l2 < 2; ++l2) {
              Vec3 c;
              for (int i = 0; i < 3; ++i) c(i) = c1.e[l1].dot(C[i] * c2.e[l2]);
              out[0] += c.squaredNorm();
              out[1] += phi2_amplitude(c1.g[l1], c2.g[l2], D2) * Q.dot(c);
            }
        },
        true, offset);
    keep("am3", r[0]);
    keep("id_c", r[1]);
  } else if (job == "x13") {
    const auto r = M.integrate(
        1, 2,
        [&](std::span<const Vec3> ks, double* out, int level) {
          const Vec3& k = ks[0];
          const double f = form_factor(p, k);
          if (f == 0.0) return;
          const auto& rule = M.inner(level);
          const Mat3 Mk = m_tensor(p, k, rule);
          const Vec3 W = phi1_vector(p, k, Mk);
          const Vec3 Z = aa_phi3_vector(p, k, M.inner_double(level));
          const Mat3 P = transverse_projector(k);
          out[0] = W.dot(P * Z);
          const double dW = kEps * std::sqrt(static_cast<double>(rule.size())) * 2.0 * f /
                            resolvent_weight(k) * Mk.norm() * k.norm();
          out[1] = dW * Z.norm();
        },
        true, offset);
    keep("x13", with_floor(r[0], r[1]));
  } else if (job == "sector3") {
    const auto r = M.integrate(
        3, 2,
        [&](std::span<const Vec3> ks, double* out, int) {
          Couplings c[3];
          for (int i = 0; i < 3; ++i) {
            c[i] = couplings(p, ks[i]);
            if (c[i].f == 0.0) return;
          }
          const MomentumTable t(ks);
          for_each_polarization(3, c, [&](const Vec3* g, unsigned) {
            const double a = phi3_amplitude(t, 7u, g);
            out[0] += t.D[7] * a * a;
            out[1] += a * a;
          });
        },
        true, offset);
    keep("n3s", r[0]);
    keep("l3", r[1]);
  } else if (job == "sector4") {
    const auto r = M.integrate(
        4, 4,
        [&](std::span<const Vec3> ks, double* out, int) {
          Couplings c[4];
          for (int i = 0; i < 4; ++i) {
            c[i] = couplings(p, ks[i]);
            if (c[i].f == 0.0) return;
          }
          const MomentumTable t(ks);
          const double D = t.D[15];
          for_each_polarization(4, c, [&](const Vec3* g, unsigned) {
            const double a = phi4a_amplitude(t, 15u, g), b = phi4b_amplitude(t, 15u, g);
            const double s = a + b;
            out[0] += D * s * s;
            out[1] += s * s;
            out[2] += D * a * s;
            out[3] += D * b * s;
          });
        },
        true, offset);
    keep("n4s", r[0]);
    keep("l4", r[1]);
    keep("p41", r[2]);
    keep("p42", r[3]);
  } else if (job == "phi3_pa_phi4") {
    // 2 <Phi3(x), (K_x . g_y) Phi4(y, x)>, momenta (y, x1, x2, x3)
    const auto r = M.integrate(
        4, 1,
        [&](std::span<const Vec3> ks, double* out, int) {
          Couplings c[4];
          for (int i = 0; i < 4; ++i) {
            c[i] = couplings(p, ks[i]);
            if (c[i].f == 0.0) return;
          }
          const MomentumTable t(ks);
          for_each_polarization(4, c, [&](const Vec3* g, unsigned) {
            const double phi4 = phi4a_amplitude(t, 15u, g) + phi4b_amplitude(t, 15u, g);
            out[0] += 2.0 * phi3_amplitude(t, 14u, g) * t.K[14].dot(g[0]) * phi4;
          });
        },
        true, offset);
    keep("id_d", r[0]);
  } else if (job == "phi2_aa_phi4") {
    // 2 sqrt3 <Phi2(x), (g_y . g_y') Phi4(y, y', x)>, momenta (y, y', x1, x2)
    const auto r = M.integrate(
        4, 1,
        [&](std::span<const Vec3> ks, double* out, int) {
          Couplings c[4];
          for (int i = 0; i < 4; ++i) {
            c[i] = couplings(p, ks[i]);
            if (c[i].f == 0.0) return;
          }
          const MomentumTable t(ks);
          for_each_polarization(4, c, [&](const Vec3* g, unsigned) {
            const double phi4 = phi4a_amplitude(t, 15u, g) + phi4b_amplitude(t, 15u, g);
            out[0] += 2.0 * kSqrt3 * phi2_amplitude(t, 12u, g) * g[0].dot(g[1]) * phi4;
          });
        },
        true, offset);
    keep("id_e", r[0]);
  } else if (job == "am4") {
    // 4 <(g_y . g_y') Phi4(y, x) Phi4(y', x)>, momenta (y, y', x1, x2, x3)
    const auto r = M.integrate(
        5, 1,
        [&](std::span<const Vec3> ks, double* out, int) {
          Couplings c[5];
          for (int i = 0; i < 5; ++i) {
            c[i] = couplings(p, ks[i]);
            if (c[i].f == 0.0) return;
          }
          const MomentumTable t(ks);
          for_each_polarization(5, c, [&](const Vec3* g, unsigned) {
            const double a = phi4a_amplitude(t, 29u, g) + phi4b_amplitude(t, 29u, g);
            const double b = phi4a_amplitude(t, 30u, g) + phi4b_amplitude(t, 30u, g);
            out[0] += 4.0 * g[0].dot(g[1]) * a * b;
          });
        },
        true, offset);
    keep("am4", r[0]);
  } else if (job == "x2t4") {
    const auto ide = get("id_e");
    // 2 sqrt3 <(g1 . g2) X(x3, x4), Phi4(x1..x4)> with X folded over q, momenta (x1..x4, q)
    const auto r = M.integrate(
        5, 1,
        [&](std::span<const Vec3> ks, double* out, int) {
          Couplings c[4];
          for (int i = 0; i < 4; ++i) {
            c[i] = couplings(p, ks[i]);
            if (c[i].f == 0.0) return;
          }
          if (kappa_eval(p, ks[4].norm()) == 0.0) return;
          const Mat3 X = sector_two_integrand(p, ks[2], ks[3], ks[4]).raw();
          const MomentumTable t(ks.first(4));
          for_each_polarization(4, c, [&](const Vec3* g, unsigned combo) {
            const double phi4 = phi4a_amplitude(t, 15u, g) + phi4b_amplitude(t, 15u, g);
            const double x = c[2].e[(combo >> 2) & 1u].dot(X * c[3].e[(combo >> 3) & 1u]);
            out[0] += 2.0 * kSqrt3 * g[0].dot(g[1]) * x * phi4;
          });
        },
        true, offset);
    QuadratureResult csr = get("cstar");
    keep("x2t4", derive({r[0], csr, ide}, [](const std::vector<double>& x) { return x[0] - x[1] * x[2]; }));
  } else if (job == "phi2_apam_phi2t" || job == "am2t") {
    const auto am2 = get("am2");
    const auto csr = get("cstar");
    // <A^- Phi2, A^- X>, momenta (x, y, q, q')
    const auto fy = M.integrate(
        4, 1,
        [&](std::span<const Vec3> ks, double* out, int) {
          const Vec3 &k = ks[0], &y = ks[1], &q = ks[2], &qp = ks[3];
          const double fk = form_factor(p, k), fyv = form_factor(p, y), fq = form_factor(p, qp);
          if (fk == 0.0 || fyv == 0.0 || fq == 0.0 || kappa_eval(p, q.norm()) == 0.0) return;
          const Mat3 X = sector_two_integrand(p, y, k, q).raw();
          const double d = resolvent_weight(qp, k);
          out[0] = -2.0 * kSqrt2 * fk * fyv * fq * fq / d *
                   (transverse_projector(qp) * transverse_projector(y) * X * transverse_projector(k)).trace();
        },
        true, offset);
    keep("id_f", derive({fy[0], csr, am2}, [](const std::vector<double>& x) { return x[0] - x[1] * x[2]; }));
    // ||A^- X||^2, momenta (x, y, q, y', q')
    const auto yy = M.integrate(
        5, 1,
        [&](std::span<const Vec3> ks, double* out, int) {
          const Vec3 &k = ks[0], &y = ks[1], &q = ks[2], &yp = ks[3], &qp = ks[4];
          const double fy1 = form_factor(p, y), fy2 = form_factor(p, yp);
          if (form_factor(p, k) == 0.0 || fy1 == 0.0 || fy2 == 0.0 || kappa_eval(p, q.norm()) == 0.0 ||
              kappa_eval(p, qp.norm()) == 0.0)
            return;
          const Mat3 X1 = sector_two_integrand(p, y, k, q).raw();
          const Mat3 X2 = sector_two_integrand(p, yp, k, qp).raw();
          out[0] = 2.0 * fy1 * fy2 *
                   (X1.transpose() * transverse_projector(y) * transverse_projector(yp) * X2 *
                    transverse_projector(k))
                       .trace();
        },
        true, offset + 1);
    keep("am2t", derive({yy[0], fy[0], csr, am2}, [](const std::vector<double>& x) {
           return x[0] - 2.0 * x[2] * x[1] + x[2] * x[2] * x[3];
         }));
  } else {
    throw ValidationError("unknown element job '" + job + "'");
  }
}

MatrixElement compute_element(const std::string& name, const CutoffProfile& profile, const Budget& budget) {
  ElementEngine e(profile, budget);
  return e.element(name);
}

namespace {

Estimate est(const Inventory& inv, const std::string& name) {
  const auto it = inv.find(name);
  if (it == inv.end()) throw ValidationError("missing matrix element '" + name + "'");
  return {it->second.value, it->second.error};
}

}  // namespace

CoefficientSet assemble_coefficients(const Inventory& inv) {
  CoefficientSet c;
  c.inventory = inv;
  const auto n2s = est(inv, "n2s");
  if (!(n2s.value > 0.0)) throw DegenerateProfileError("assemble_coefficients: ||Phi2||*^2 = 0");
  const auto n1s = est(inv, "n1s"), n3s = est(inv, "n3s"), am2 = est(inv, "am2");
  const auto x13 = est(inv, "x13"), am1 = est(inv, "am1"), am3 = est(inv, "am3");
  const auto n2ts = est(inv, "n2ts"), n4s = est(inv, "n4s"), l2 = est(inv, "l2");
  c.d0 = {-n2s.value, n2s.error};
  c.d1.value = 2 * am2.value - 4 * n3s.value - 4 * n1s.value;
  c.d1.error = std::sqrt(std::pow(2 * am2.error, 2) + std::pow(4 * n3s.error, 2) + std::pow(4 * n1s.error, 2));
  c.beta.value = c.d1.value / n2s.value;
  c.beta.error = std::hypot(c.d1.error / n2s.value, c.d1.value * n2s.error / (n2s.value * n2s.value));
  const double first = -c.d1.value * c.d1.value / n2s.value;
  const double first_err = std::hypot(2 * c.d1.value * c.d1.error / n2s.value,
                                      c.d1.value * c.d1.value * n2s.error / (n2s.value * n2s.value));
  c.d2.value = first + 8 * x13.value + 8 * am1.value + 8 * am3.value - 16 * n2ts.value - 16 * n4s.value +
               l2.value * n2s.value;
  c.d2.error = std::sqrt(first_err * first_err + std::pow(8 * x13.error, 2) + std::pow(8 * am1.error, 2) +
                         std::pow(8 * am3.error, 2) + std::pow(16 * n2ts.error, 2) + std::pow(16 * n4s.error, 2) +
                         std::pow(l2.error * n2s.value, 2) + std::pow(l2.value * n2s.error, 2));
  return c;
}

CoefficientSet assemble_coefficients(const CutoffProfile& profile, const Budget& budget) {
  if (profile.degenerate()) throw DegenerateProfileError("assemble_coefficients: kappa vanishes identically");
  ElementEngine e(profile, budget);
  return assemble_coefficients(e.compute_all());
}

Estimate phi2tilde_projection_coefficient(const CutoffProfile& profile, const Budget& budget) {
  if (profile.degenerate()) throw DegenerateProfileError("projection coefficient: ||Phi2||*^2 = 0");
  ElementEngine e(profile, budget);
  const auto& c = e.element("cstar");
  return {c.value, c.error};
}

bool IdentityReport::passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

IdentityReport verify_adjoint_identities(const Inventory& inv, double width) {
  IdentityReport rep;
  auto add = [&](const std::string& name, const std::string& statement, Estimate lhs, Estimate rhs) {
    IdentityCheck c;
    c.name = name;
    c.statement = statement;
    c.lhs = lhs;
    c.rhs = rhs;
    c.tolerance = width * std::hypot(lhs.error, rhs.error);
    c.passed = std::abs(lhs.value - rhs.value) <= c.tolerance;
    rep.checks.push_back(c);
  };
  auto neg = [](Estimate e, double s) { return Estimate{-s * e.value, s * e.error}; };
  add("a", "<Omega, A-.A- Phi2> = -||Phi2||*^2", est(inv, "id_a"), neg(est(inv, "n2s"), 1));
  add("b", "<Phi1, Pf.A- Phi2> = -||Phi1||*^2", est(inv, "id_b"), neg(est(inv, "n1s"), 1));
  add("c", "<Phi2, Pf.A- Phi3> = -||Phi3||*^2", est(inv, "id_c"), neg(est(inv, "n3s"), 1));
  add("d", "<Phi3, Pf.A- Phi4> = -<Phi4_1, Phi4>*", est(inv, "id_d"), neg(est(inv, "p41"), 1));
  add("e", "<Phi2, A-.A- Phi4> = -4 <Phi4_2, Phi4>*", est(inv, "id_e"), neg(est(inv, "p42"), 4));
  add("f", "<Phi2, A+.A- tildePhi2> = -2 <tildePhi2_3, tildePhi2>*", est(inv, "id_f"), neg(est(inv, "p2t3"), 2));
  add("g", "<Phi2, tildePhi2>* = 0", est(inv, "id_g"), {0.0, 0.0});
  {
    const auto a = est(inv, "p2t1"), b = est(inv, "p2t2"), c = est(inv, "p2t3");
    add("g_parts", "sum_a <tildePhi2_a, tildePhi2>* = ||tildePhi2||*^2",
        {a.value + b.value + c.value, std::sqrt(a.error * a.error + b.error * b.error + c.error * c.error)},
        est(inv, "n2ts"));
  }
  {
    const auto a = est(inv, "p41"), b = est(inv, "p42");
    add("phi4_parts", "<Phi4_1, Phi4>* + <Phi4_2, Phi4>* = ||Phi4||*^2",
        {a.value + b.value, std::hypot(a.error, b.error)}, est(inv, "n4s"));
  }
  return rep;
}

std::string cache_path(const std::string& dir, const CutoffProfile& profile, const Budget& budget) {
  std::uint64_t h = 1469598103934665603ull;
  for (char c : budget.signature()) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return dir + "/elements-" + profile.hash() + "-" + buf + ".json";
}

bool load_inventory(const std::string& path, Inventory& inv) {
  std::ifstream in(path);
  if (!in) return false;
  nlohmann::json j;
  try {
    in >> j;
    Inventory out;
    for (const auto& r : j.at("elements")) {
      MatrixElement e;
      e.name = r.at("name").get<std::string>();
      e.value = r.at("value").get<double>();
      e.error = r.at("error").get<double>();
      e.method = r.at("method").get<std::string>();
      e.nodes = r.at("nodes").get<long>();
      e.seed = r.at("seed").get<std::uint64_t>();
      e.profile_hash = j.at("profile").at("hash").get<std::string>();
      out[e.name] = e;
    }
    for (const auto& n : inventory_names())
      if (!out.count(n)) return false;
    inv = std::move(out);
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

void save_inventory(const std::string& path, const Inventory& inv, const CutoffProfile& profile) {
  nlohmann::json j;
  j["profile"] = {{"lambda", profile.lambda}, {"taper", to_string(profile.taper)}, {"hash", profile.hash()}};
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [name, e] : inv)
    arr.push_back({{"name", name},
                   {"value", e.value},
                   {"error", e.error},
                   {"method", e.method},
                   {"nodes", e.nodes},
                   {"seed", e.seed},
                   {"profile", {{"lambda", profile.lambda}, {"taper", to_string(profile.taper)}}}});
  j["elements"] = arr;
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write cache file " + path);
  out << j.dump(2) << "\n";
}

}  // namespace pf
