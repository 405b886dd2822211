#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "pf/kernels.hpp"
#include "pf/oracle.hpp"
#include "pf/quadrature.hpp"

namespace pf {

struct Budget {
  long nodes = 100000;      // tensor Gauss, up to five dimensions
  long points = 1000000;    // digital nets, six to eight dimensions
  long points_high = 1000000;  // nine dimensions and up
  std::uint64_t seed = 42;
  int workers = 1;
  int max_nodes_per_dim = 64;
  InnerSpec inner{16, 10, 10};        // nested one-photon rule
  InnerSpec inner_double{10, 6, 6};   // rule for doubly nested sums
  double coarse_ratio = 0.7;
  std::string signature() const;
};

struct MatrixElement {
  std::string name;
  double value = 0.0;
  double error = 0.0;
  std::string method;
  long nodes = 0;
  std::uint64_t seed = 0;
  std::string profile_hash;
};
using Inventory = std::map<std::string, MatrixElement>;

/// Where the outer integrals run: the continuum (reduced by rotation) or
/// the oracle's mode points with their weights.
class Measure {
 public:
  virtual ~Measure() = default;
  virtual std::vector<QuadratureResult> integrate(int n, int outputs, MomentumIntegrand f, bool reduce,
                                                  std::uint64_t seed_offset) const = 0;
  virtual const PhotonRule& inner(int level) const = 0;
  virtual const PhotonRule& inner_double(int level) const = 0;
  virtual bool exact() const = 0;
};

std::unique_ptr<Measure> continuum_measure(const CutoffProfile& profile, const Budget& budget);
std::unique_ptr<Measure> discrete_measure(const DiscreteModel& model);

/// All element names, in a fixed order.
const std::vector<std::string>& inventory_names();

/// Computes inventory elements lazily, one job per group of related integrals.
class ElementEngine {
 public:
  ElementEngine(const CutoffProfile& profile, const Budget& budget);
  ElementEngine(const CutoffProfile& profile, std::unique_ptr<Measure> measure);
  const MatrixElement& element(const std::string& name);
  const Inventory& compute_all();
  const Inventory& inventory() const { return inv_; }

 private:
  void run_job(const std::string& job);
  void store(const std::string& name, const QuadratureResult& r, const std::string& method);
  QuadratureResult get(const std::string& name);

  CutoffProfile profile_;
  std::unique_ptr<Measure> measure_;
  Inventory inv_;
  std::map<std::string, QuadratureResult> raw_;
};

MatrixElement compute_element(const std::string& name, const CutoffProfile& profile, const Budget& budget);

struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

struct CoefficientSet {
  Estimate d0, d1, d2, beta;
  Inventory inventory;
};

/// d0, d1, d2 and beta from the inventory; errors root-sum-square.
CoefficientSet assemble_coefficients(const Inventory& inv);
CoefficientSet assemble_coefficients(const CutoffProfile& profile, const Budget& budget);

/// Projection scalar c* = <Phi2, X>* / ||Phi2||*^2 of tilde-Phi2.
Estimate phi2tilde_projection_coefficient(const CutoffProfile& profile, const Budget& budget);

struct IdentityCheck {
  std::string name;
  std::string statement;
  Estimate lhs, rhs;
  double tolerance = 0.0;
  bool passed = false;
};
struct IdentityReport {
  std::vector<IdentityCheck> checks;
  bool passed() const;
};

IdentityReport verify_adjoint_identities(const Inventory& inv, double width = 3.0);

/// Element cache records, content-addressed by profile hash and budget.
std::string cache_path(const std::string& dir, const CutoffProfile& profile, const Budget& budget);
bool load_inventory(const std::string& path, Inventory& inv);
void save_inventory(const std::string& path, const Inventory& inv, const CutoffProfile& profile);

}  // namespace pf
