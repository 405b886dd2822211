#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pf/model.hpp"

namespace pf {

enum class Method { TensorGauss, LowDiscrepancy, PlainMonteCarlo };

std::string to_string(Method m);

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  Method method = Method::TensorGauss;
  long nodes = 0;
  std::uint64_t seed = 0;
  // Coarse-level value for TensorGauss (the nested-rule partner); equals value otherwise.
  double coarse = 0.0;
};

/// Vector-valued integrand on the unit cube. `level` 0 is the fine rule, 1 the
/// coarse partner used for the TensorGauss error estimate; integrands with
/// internal quadrature refine those together.
using CubeIntegrand = std::function<void(const double* u, double* out, int level)>;

struct IntegralTask {
  int dimension = 0;
  int outputs = 1;
  CubeIntegrand integrand;
  // Interior break points in (0,1) per coordinate; composite rules split there.
  std::vector<std::vector<double>> breaks;
  std::string reduction = "none";
};

struct QuadratureOptions {
  long budget = 100000;
  std::uint64_t seed = 42;
  int workers = 1;
  int batches = 16;
  int max_nodes_per_dim = 96;
  double coarse_ratio = 0.7;
};

/// Gauss-Legendre nodes and weights on [a,b].
void gauss_legendre(int n, double a, double b, std::vector<double>& x, std::vector<double>& w);

/// One-dimensional composite rule on [0,1] split at the given break points.
struct Rule1D {
  std::vector<double> x, w;
};
Rule1D composite_gauss(int n, const std::vector<double>& breaks);

std::vector<QuadratureResult> integrate(const IntegralTask& task, Method method,
                                        const QuadratureOptions& opts);

/// Method policy: tensor Gauss up to five dimensions, digital nets above.
Method default_method(int dimension);

/// Integrand over n photon momenta, polarization sums already carried out.
using MomentumIntegrand = std::function<void(std::span<const Vec3> ks, double* out, int level)>;

/// Fixes k1 on the polar axis and k2 in the xz half-plane (dimension 3n-3).
IntegralTask reduce_by_rotation(int n, int outputs, MomentumIntegrand f, const CutoffProfile& profile);

/// Full 3n-dimensional parametrization of the same integral.
IntegralTask unreduced(int n, int outputs, MomentumIntegrand f, const CutoffProfile& profile);

/// Neumaier compensated accumulator.
struct CompensatedSum {
  double sum = 0.0, c = 0.0;
  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      c += (sum - t) + x;
    else
      c += (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + c; }
};

/// Sums f(i) for i in [0, count) over fixed-size chunks; the result does not
/// depend on the number of workers. f writes `outputs` values.
std::vector<double> deterministic_sum(long count, int outputs,
                                      const std::function<void(long, double*)>& f, int workers,
                                      std::vector<double>* abs_sum = nullptr);

}  // namespace pf
