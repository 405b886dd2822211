#pragma once

#include <Eigen/Sparse>
#include <map>
#include <string>
#include <vector>

#include "pf/kernels.hpp"

namespace pf {

struct Mode {
  Vec3 k;
  double w = 1.0;
};

/// Radial Gauss nodes (r = lambda u^2) times a rotated spherical design with
/// 4, 6, 8, 12, 20 or 32 directions.
std::vector<Mode> mode_set(const CutoffProfile& profile, int radial, int directions);
std::vector<Vec3> spherical_design(int directions);

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Truncated Fock space over modes x 2 polarizations.
class DiscreteModel {
 public:
  CutoffProfile profile;
  std::vector<Mode> modes;
  int nmax = 4;
  Vec3 p = Vec3::Zero();

  int single_states() const { return static_cast<int>(g_.size()); }
  long dimension() const { return static_cast<long>(photons_.size()); }
  int photons(long i) const { return photons_[i]; }
  const std::vector<unsigned char>& occupation(long i) const { return occ_[i]; }
  /// Index of an occupation vector, -1 if outside the truncated space.
  long index_of(const std::vector<unsigned char>& n) const;

  const Vector& hf() const { return hf_; }
  const Vector& pf(int i) const { return pf_[i]; }
  /// H_f + P_f^2 (diagonal).
  const Vector& dstar() const { return dstar_; }
  const SparseMatrix& aminus(int i) const { return am_[i]; }
  const SparseMatrix& aplus(int i) const { return ap_[i]; }
  const Vec3& coupling(int s) const { return g_[s]; }
  const Vec3& momentum(int s) const { return modes[s / 2].k; }

  /// (H_f + P_f^2)^{-1} off the vacuum, zero on it.
  Vector resolvent(const Vector& v) const;
  /// T(p) v at coupling alpha, matrix-free.
  Vector apply(const Vector& v, double alpha) const;
  Eigen::MatrixXd dense_hamiltonian(double alpha) const;
  SparseMatrix sparse_hamiltonian(double alpha) const;

  /// Modes as a one-photon rule, for running continuum code on these nodes.
  PhotonRule rule() const;

  /// Coefficient of a continuum amplitude on an occupation basis vector:
  /// sqrt(N!/prod n_s!) psi(s_1..s_N) prod sqrt(w).
  Vector from_amplitude(int sector, const SectorKernel& kernel) const;

  friend DiscreteModel build_model(const CutoffProfile&, std::vector<Mode>, int, const Vec3&, long);

 private:
  std::vector<std::vector<unsigned char>> occ_;
  std::vector<int> photons_;
  std::map<std::vector<unsigned char>, long> index_;
  std::vector<Vec3> g_;
  Vector hf_, dstar_;
  std::array<Vector, 3> pf_;
  std::array<SparseMatrix, 3> am_, ap_;
};

DiscreteModel build_model(const CutoffProfile& profile, std::vector<Mode> modes, int nmax = 4,
                          const Vec3& p = Vec3::Zero(), long max_dimension = 2000000);

struct SpectralResult {
  double energy = 0.0;
  Vector vector;
  double residual = 0.0;
  int iterations = 0;
};

struct EigenOptions {
  long dense_limit = 2500;
  int max_iterations = 400;
  double tolerance = 1e-12;
};

SpectralResult ground_state(const DiscreteModel& model, double alpha, const EigenOptions& opts = {});

/// Symmetric Lanczos with full reorthogonalization for the lowest eigenpair.
SpectralResult lanczos_lowest(const std::function<Vector(const Vector&)>& apply, const Vector& start,
                              const EigenOptions& opts);

/// The six basis states built with the discrete operators, plus parts.
struct DiscreteBasis {
  Vector omega, phi1, phi2, phi2t, phi3, phi4;
  Vector phi4a, phi4b;
  std::array<Vector, 3> y;
  double cstar = 0.0;
  std::array<const Vector*, 6> list() const { return {&omega, &phi1, &phi2, &phi2t, &phi3, &phi4}; }
};
DiscreteBasis discrete_basis_states(const DiscreteModel& model);

double star(const DiscreteModel& m, const Vector& a, const Vector& b);

/// Every inventory quantity of the element module, by dense linear algebra.
std::map<std::string, double> oracle_elements(const DiscreteModel& model, const DiscreteBasis& basis);

/// 6x6 Gram and Hamiltonian blocks by direct operator application.
struct DenseBlocks {
  Eigen::MatrixXd G, H0, H1, H2;
};
DenseBlocks oracle_blocks(const DiscreteModel& model, const DiscreteBasis& basis);

struct RefinementLevel {
  int radial = 1;
  int directions = 4;
};

struct CurvePoint {
  double alpha = 0.0;
  std::vector<double> levels;
  double extrapolated = 0.0;
  double band = 0.0;
};

/// Ground energies on a refinement sequence and their extrapolation.
std::vector<CurvePoint> richardson_energy_curve(const CutoffProfile& profile,
                                                const std::vector<RefinementLevel>& sequence,
                                                const std::vector<double>& alphas, int nmax = 4,
                                                const EigenOptions& opts = {});

}  // namespace pf
