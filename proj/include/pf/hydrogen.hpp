#pragma once

#include <Eigen/Dense>
#include <vector>

#include "pf/elements.hpp"

namespace pf {

enum class RadialScheme { Uniform, Logarithmic };

/// Grid in a mapped coordinate x: r = x (uniform) or r = scale (e^x - 1).
struct RadialGrid {
  double r_max = 60.0;
  int points = 20000;  // intervals, even
  RadialScheme scheme = RadialScheme::Uniform;
  double scale = 1.0;

  void validate() const;
  RadialGrid halved() const;
  double x_max() const;
  double step() const { return x_max() / points; }
  double r(double x) const;
  double dr(double x) const;   // dr/dx
  double ddr(double x) const;  // d2r/dx2
};

/// Reduced radial s-wave function chi = sqrt(4 pi) r u on the grid nodes.
struct RadialState {
  RadialGrid grid;
  Eigen::VectorXd r, chi, u;  // u(0) is the limit value
  double energy = 0.0;        // discrete eigenvalue
  double rayleigh = 0.0;      // quadrature Rayleigh quotient of -Delta - 1/|x|
  double error = 0.0;         // estimated grid error of the energy
};

RadialState ground_u1(const RadialGrid& grid = {});

/// Simpson rule in x of g(r) dr.
double radial_integral(const RadialGrid& grid, const Eigen::VectorXd& g);

/// Closed-form hydrogen ground state in these units.
inline double u1_exact(double r) { return std::exp(-0.5 * r) / std::sqrt(8.0 * M_PI); }

Estimate e1(const CutoffProfile& profile);
Estimate a0(const CutoffProfile& profile);

struct E3Result {
  Estimate value;
  double inner_norm = 0.0;  // <grad u1, (-Delta - 1/|x| + 1/4) grad u1>
  double commutator = 0.0;  // 2 pi u1(0)^2 (-1/(3 pi))
};
E3Result e3(const RadialGrid& grid = {});

/// <v, B^-1 v> for v = Q1perp Delta u1 with B = -Delta - 1/|x| + 1/4 restricted to u1-perp.
struct ResolventForm {
  double value = 0.0;
  double error = 0.0;
  double residual = 0.0;
};
ResolventForm laplacian_resolvent_form(const RadialGrid& grid = {});

struct E2Pieces {
  Estimate i, ii, iii, iv, total;
};
E2Pieces e2(const CutoffProfile& profile, const Budget& budget, const RadialGrid& grid = {});
E2Pieces e2(const Inventory& inv, const CutoffProfile& profile, const RadialGrid& grid = {});

struct HydrogenCoefficients {
  Estimate e1, e2, e3, a0;
  E2Pieces pieces;
  Estimate dt0, dt1, dt2, dt3;
};

HydrogenCoefficients hydrogen_coefficients(const CoefficientSet& c, const CutoffProfile& profile,
                                           const RadialGrid& grid = {});

struct SigmaPoint {
  double alpha = 0.0;
  Estimate sigma0, binding, sigma;
};
std::vector<SigmaPoint> assemble_sigma(const CoefficientSet& c, const HydrogenCoefficients& h,
                                       const std::vector<double>& alphas);

}  // namespace pf
