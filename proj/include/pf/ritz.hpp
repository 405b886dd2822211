#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "pf/elements.hpp"

namespace pf {

using Matrix6 = Eigen::Matrix<double, 6, 6>;
using Vector6 = Eigen::Matrix<double, 6, 1>;

/// Basis order: Omega, Phi1, Phi2, tilde-Phi2, Phi3, Phi4.
inline constexpr std::array<const char*, 6> kBasisNames = {"Omega", "Phi1", "Phi2", "Phi2t", "Phi3", "Phi4"};

/// <b_i, T(0) b_j> = H0 + sqrt(alpha) H1 + alpha H2, each entry with an error half-width.
struct BasisMatrices {
  Matrix6 G, H0, H1, H2;
  Matrix6 dG, dH0, dH1, dH2;
  Matrix6 at(double alpha) const { return H0 + std::sqrt(alpha) * H1 + alpha * H2; }
  Matrix6 error_at(double alpha) const { return dH0 + std::sqrt(alpha) * dH1 + alpha * dH2; }
  double beta() const;
};

BasisMatrices build_matrices(const Inventory& inv);
BasisMatrices build_matrices(const CutoffProfile& profile, const Budget& budget);

struct RitzSolution {
  double alpha = 0.0;
  double energy = 0.0;
  double sensitivity = 0.0;  // from the entry half-widths
  double residual = 0.0;
  Vector6 coefficients = Vector6::Zero();
  std::vector<int> null_directions;
};

/// Lowest generalized eigenpair on the span, dropping basis vectors whose
/// plain norm is below null_tol times the largest one.
RitzSolution solve(const BasisMatrices& m, double alpha, double null_tol = 1e-8);

/// Solve restricted to a subset of the basis.
RitzSolution solve(const BasisMatrices& m, double alpha, const std::vector<int>& subset, double null_tol = 1e-8);

Vector6 trial_vector(double alpha, double beta);
double trial_quotient(const BasisMatrices& m, double alpha);

struct RitzCurvePoint {
  double alpha = 0.0;
  double energy = 0.0;
  double sensitivity = 0.0;
  double trial = 0.0;
  Vector6 coefficients = Vector6::Zero();
};

std::vector<double> alpha_grid(double lo = 1e-4, double hi = 1e-1, int points = 12);
std::vector<RitzCurvePoint> ritz_curve(const BasisMatrices& m, const std::vector<double>& alphas);

struct ExpansionFit {
  Estimate c2, c3, c4;
  double residual = 0.0;
};

/// Least squares of E / alpha^2 against (1, alpha, alpha^2). Errors on the
/// inputs are propagated as fully correlated.
ExpansionFit fit_expansion(const std::vector<double>& alpha, const std::vector<double>& energy,
                           const std::vector<double>& error = {});

}  // namespace pf
