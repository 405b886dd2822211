#include "pf/quadrature.hpp"

#include <algorithm>
#include <atomic>
#include <boost/random/sobol.hpp>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

namespace pf {

std::string to_string(Method m) {
  switch (m) {
    case Method::TensorGauss: return "TensorGauss";
    case Method::LowDiscrepancy: return "LowDiscrepancy";
    case Method::PlainMonteCarlo: return "PlainMonteCarlo";
  }
  return "unknown";
}

Method default_method(int dimension) {
  return dimension <= 5 ? Method::TensorGauss : Method::LowDiscrepancy;
}

void gauss_legendre(int n, double a, double b, std::vector<double>& x, std::vector<double>& w) {
  x.resize(n);
  w.resize(n);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // Recompute the derivative at the converged root.
    double p0 = 1.0, p1 = 0.0;
    for (int j = 0; j < n; ++j) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
    }
    dp = n * (z * p0 - p1) / (z * z - 1.0);
    const double wt = 2.0 / ((1.0 - z * z) * dp * dp);
    x[i] = mid - half * z;
    x[n - 1 - i] = mid + half * z;
    w[i] = w[n - 1 - i] = half * wt;
  }
}

Rule1D composite_gauss(int n, const std::vector<double>& breaks) {
  std::vector<double> edges{0.0};
  for (double b : breaks)
    if (b > 0.0 && b < 1.0) edges.push_back(b);
  edges.push_back(1.0);
  std::sort(edges.begin(), edges.end());
  const int pieces = static_cast<int>(edges.size()) - 1;
  const int per = std::max(2, static_cast<int>(std::lround(static_cast<double>(n) / pieces)));
  Rule1D r;
  std::vector<double> x, w;
  for (int p = 0; p < pieces; ++p) {
    gauss_legendre(per, edges[p], edges[p + 1], x, w);
    r.x.insert(r.x.end(), x.begin(), x.end());
    r.w.insert(r.w.end(), w.begin(), w.end());
  }
  return r;
}

std::vector<double> deterministic_sum(long count, int outputs,
                                      const std::function<void(long, double*)>& f, int workers,
                                      std::vector<double>* abs_sum) {
  constexpr long chunk = 256;
  const long chunks = (count + chunk - 1) / chunk;
  std::vector<double> partial(static_cast<std::size_t>(chunks) * outputs, 0.0);
  std::vector<double> partial_abs(static_cast<std::size_t>(chunks) * outputs, 0.0);
  std::vector<std::exception_ptr> failures(chunks);
  std::atomic<long> next{0};

  auto work = [&]() {
    std::vector<double> out(outputs);
    std::vector<CompensatedSum> acc(outputs);
    for (;;) {
      const long c = next.fetch_add(1);
      if (c >= chunks) return;
      try {
        std::fill(acc.begin(), acc.end(), CompensatedSum{});
        double* ab = &partial_abs[static_cast<std::size_t>(c) * outputs];
        const long end = std::min(count, (c + 1) * chunk);
        for (long i = c * chunk; i < end; ++i) {
          std::fill(out.begin(), out.end(), 0.0);
          f(i, out.data());
          for (int o = 0; o < outputs; ++o) {
            acc[o].add(out[o]);
            ab[o] += std::abs(out[o]);
          }
        }
        for (int o = 0; o < outputs; ++o) partial[static_cast<std::size_t>(c) * outputs + o] = acc[o].value();
      } catch (...) {
        failures[c] = std::current_exception();
      }
    }
  };

  const int nthreads = std::max(1, std::min<int>(workers, static_cast<int>(chunks)));
  if (nthreads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : failures)
    if (e) std::rethrow_exception(e);

  std::vector<double> total(outputs);
  if (abs_sum) abs_sum->assign(outputs, 0.0);
  for (int o = 0; o < outputs; ++o) {
    CompensatedSum s;
    for (long c = 0; c < chunks; ++c) {
      s.add(partial[static_cast<std::size_t>(c) * outputs + o]);
      if (abs_sum) (*abs_sum)[o] += partial_abs[static_cast<std::size_t>(c) * outputs + o];
    }
    total[o] = s.value();
  }
  return total;
}

namespace {

void check_finite(const double* u, int dim, const double* out, int outputs) {
  for (int o = 0; o < outputs; ++o) {
    if (!std::isfinite(out[o])) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "non-finite integrand sample (output " << o << ") at u = (";
      for (int j = 0; j < dim; ++j) msg << (j ? ", " : "") << u[j];
      msg << ")";
      throw PoisonedResultError(msg.str());
    }
  }
}

struct ProductRule {
  std::vector<Rule1D> rules;
  long size() const {
    long s = 1;
    for (const auto& r : rules) s *= static_cast<long>(r.x.size());
    return s;
  }
};

std::vector<double> run_product(const IntegralTask& task, const ProductRule& rule, int level,
                                int workers, std::vector<double>& abs_sum) {
  const int d = task.dimension;
  return deterministic_sum(
      rule.size(), task.outputs,
      [&](long idx, double* out) {
        double u[64];
        double w = 1.0;
        long rem = idx;
        for (int j = d - 1; j >= 0; --j) {
          const long nj = static_cast<long>(rule.rules[j].x.size());
          const long i = rem % nj;
          rem /= nj;
          u[j] = rule.rules[j].x[i];
          w *= rule.rules[j].w[i];
        }
        task.integrand(u, out, level);
        check_finite(u, d, out, task.outputs);
        for (int o = 0; o < task.outputs; ++o) out[o] *= w;
      },
      workers, &abs_sum);
}

std::vector<QuadratureResult> tensor_gauss(const IntegralTask& task, const QuadratureOptions& opts) {
  const int d = task.dimension;
  int n = static_cast<int>(std::floor(std::pow(static_cast<double>(opts.budget), 1.0 / d) + 1e-9));
  n = std::clamp(n, 2, opts.max_nodes_per_dim);
  const int m = std::max(2, static_cast<int>(std::lround(n * opts.coarse_ratio)));
  ProductRule fine, coarse;
  for (int j = 0; j < d; ++j) {
    const auto& br = j < static_cast<int>(task.breaks.size()) ? task.breaks[j] : std::vector<double>{};
    fine.rules.push_back(composite_gauss(n, br));
    coarse.rules.push_back(composite_gauss(m, br));
  }
  std::vector<double> abs_f, abs_c;
  const auto vf = run_product(task, fine, 0, opts.workers, abs_f);
  const auto vc = run_product(task, coarse, 1, opts.workers, abs_c);
  std::vector<QuadratureResult> res(task.outputs);
  for (int o = 0; o < task.outputs; ++o) {
    auto& r = res[o];
    r.value = vf[o];
    r.coarse = vc[o];
    r.error = std::max(std::abs(vf[o] - vc[o]), 1e-14 * abs_f[o]);
    r.method = Method::TensorGauss;
    r.nodes = fine.size() + coarse.size();
    r.seed = 0;
  }
  return res;
}

std::vector<QuadratureResult> sampled(const IntegralTask& task, Method method,
                                      const QuadratureOptions& opts) {
  const int d = task.dimension;
  const int B = std::max(2, opts.batches);
  long per = 64;
  while (per * B < opts.budget) per *= 2;

  std::vector<std::uint64_t> net;
  if (method == Method::LowDiscrepancy) {
    boost::random::sobol eng(d);
    net.resize(static_cast<std::size_t>(per) * d);
    for (auto& v : net) v = eng();
  }

  std::vector<std::vector<double>> batch_means(task.outputs, std::vector<double>(B));
  std::vector<double> u(static_cast<std::size_t>(per) * d);
  for (int b = 0; b < B; ++b) {
    std::seed_seq seq{static_cast<std::uint32_t>(opts.seed & 0xffffffffu),
                      static_cast<std::uint32_t>(opts.seed >> 32), static_cast<std::uint32_t>(b),
                      static_cast<std::uint32_t>(method)};
    std::mt19937_64 rng(seq);
    constexpr double scale = 1.0 / 9007199254740992.0;  // 2^-53
    if (method == Method::LowDiscrepancy) {
      std::vector<std::uint64_t> shift(d);
      for (auto& s : shift) s = rng();
      for (long i = 0; i < per; ++i)
        for (int j = 0; j < d; ++j)
          u[i * d + j] = (static_cast<double>((net[i * d + j] ^ shift[j]) >> 11) + 0.5) * scale;
    } else {
      for (auto& x : u) x = (static_cast<double>(rng() >> 11) + 0.5) * scale;
    }
    const auto sums = deterministic_sum(
        per, task.outputs,
        [&](long i, double* out) {
          task.integrand(&u[i * d], out, 0);
          check_finite(&u[i * d], d, out, task.outputs);
        },
        opts.workers);
    for (int o = 0; o < task.outputs; ++o) batch_means[o][b] = sums[o] / static_cast<double>(per);
  }

  std::vector<QuadratureResult> res(task.outputs);
  for (int o = 0; o < task.outputs; ++o) {
    CompensatedSum s;
    for (double v : batch_means[o]) s.add(v);
    const double mean = s.value() / B;
    double var = 0.0;
    for (double v : batch_means[o]) var += (v - mean) * (v - mean);
    auto& r = res[o];
    r.value = mean;
    r.coarse = mean;
    r.error = 3.0 * std::sqrt(var / (static_cast<double>(B) * (B - 1)));
    r.method = method;
    r.nodes = per * B;
    r.seed = opts.seed;
  }
  return res;
}

}  // namespace

std::vector<QuadratureResult> integrate(const IntegralTask& task, Method method,
                                        const QuadratureOptions& opts) {
  if (task.dimension < 0 || task.dimension > 64) throw DomainError("integrate: unsupported dimension");
  if (task.dimension == 0) {
    std::vector<double> out(task.outputs, 0.0);
    task.integrand(nullptr, out.data(), 0);
    check_finite(nullptr, 0, out.data(), task.outputs);
    std::vector<QuadratureResult> res(task.outputs);
    for (int o = 0; o < task.outputs; ++o) res[o] = {out[o], 0.0, method, 1, 0, out[o]};
    return res;
  }
  if (method == Method::TensorGauss) return tensor_gauss(task, opts);
  return sampled(task, method, opts);
}

namespace {

std::vector<double> radial_breaks(const CutoffProfile& p) {
  if (p.taper == Taper::SmoothCubic && p.lambda > 1.0) return {std::sqrt((p.lambda - 1.0) / p.lambda)};
  return {};
}

}  // namespace

IntegralTask reduce_by_rotation(int n, int outputs, MomentumIntegrand f, const CutoffProfile& profile) {
  IntegralTask t;
  t.outputs = outputs;
  t.dimension = n <= 1 ? n : 3 * n - 3;
  t.reduction = "rotation";
  const auto rb = radial_breaks(profile);
  for (int j = 0; j < n; ++j) {
    if (j == 0) {
      t.breaks.push_back(rb);
    } else if (j == 1) {
      t.breaks.push_back(rb);
      t.breaks.push_back({});
    } else {
      t.breaks.push_back(rb);
      t.breaks.push_back({});
      t.breaks.push_back({});
    }
  }
  const double lam = profile.lambda;
  t.integrand = [n, outputs, lam, f = std::move(f)](const double* u, double* out, int level) {
    Vec3 ks[8];
    double jac = n == 1 ? 4.0 * M_PI : (n >= 2 ? 8.0 * M_PI * M_PI : 1.0);
    int pos = 0;
    for (int j = 0; j < n; ++j) {
      const double s = u[pos++];
      const double r = lam * s * s;
      if (r == 0.0) return;
      jac *= r * r * 2.0 * lam * s;
      if (j == 0) {
        ks[j] = Vec3(0, 0, r);
      } else if (j == 1) {
        const double c = 2.0 * u[pos++] - 1.0;
        jac *= 2.0;
        ks[j] = r * Vec3(std::sqrt(std::max(0.0, 1 - c * c)), 0.0, c);
      } else {
        const double c = 2.0 * u[pos++] - 1.0;
        const double phi = 2.0 * M_PI * u[pos++];
        jac *= 4.0 * M_PI;
        const double sn = std::sqrt(std::max(0.0, 1 - c * c));
        ks[j] = r * Vec3(sn * std::cos(phi), sn * std::sin(phi), c);
      }
    }
    f(std::span<const Vec3>(ks, n), out, level);
    for (int o = 0; o < outputs; ++o) out[o] *= jac;
  };
  return t;
}

IntegralTask unreduced(int n, int outputs, MomentumIntegrand f, const CutoffProfile& profile) {
  IntegralTask t;
  t.outputs = outputs;
  t.dimension = 3 * n;
  t.reduction = "none";
  const auto rb = radial_breaks(profile);
  for (int j = 0; j < n; ++j) {
    t.breaks.push_back(rb);
    t.breaks.push_back({});
    t.breaks.push_back({});
  }
  const double lam = profile.lambda;
  t.integrand = [n, outputs, lam, f = std::move(f)](const double* u, double* out, int level) {
    Vec3 ks[8];
    double jac = 1.0;
    for (int j = 0; j < n; ++j) {
      const double s = u[3 * j];
      const double r = lam * s * s;
      if (r == 0.0) return;
      const double c = 2.0 * u[3 * j + 1] - 1.0;
      const double phi = 2.0 * M_PI * u[3 * j + 2];
      jac *= r * r * 2.0 * lam * s * 4.0 * M_PI;
      const double sn = std::sqrt(std::max(0.0, 1 - c * c));
      ks[j] = r * Vec3(sn * std::cos(phi), sn * std::sin(phi), c);
    }
    f(std::span<const Vec3>(ks, n), out, level);
    for (int o = 0; o < outputs; ++o) out[o] *= jac;
  };
  return t;
}

}  // namespace pf
