#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "modstab/bimap.hpp"
#include "modstab/modular.hpp"

namespace modstab {

struct StabilizeConfig {
  Direction direction = Direction::ascending;
  int n_max = 40;
  double tol = 1e-10;
  double magnitude_cap = 1e12;
  int start_level = 0;
  RhoTildeWeight weight = RhoTildeWeight::psi_xx_z0;
  ProbeSet probes;
};

/// Raised when a scaled argument or value leaves the magnitude cap.
class OverflowAbort : public Error {
 public:
  OverflowAbort(int level, std::size_t probe, double magnitude);

  [[nodiscard]] int level() const noexcept { return level_; }
  [[nodiscard]] std::size_t probe() const noexcept { return probe_; }
  [[nodiscard]] double magnitude() const noexcept { return magnitude_; }

 private:
  int level_;
  std::size_t probe_;
  double magnitude_;
};

/// Worst margins of the partial-sum bounds at one level n, over all probes.
/// lhs is rho(iterate_n(x, z) - d(x, z)).
///
/// ascending:  printed = 2^-n sum_{i<=n} psi(2^{i-1}x, 2^{i-1}x) psi(z, 0)   (reported only)
///             gated   = sum_{i<=n} 2^-i psi(2^{i-1}x, 2^{i-1}x) psi(z, 0)
/// descending: gated   = sum_{i=2}^n k^n/2^{n-i+1} a_i + k^{n-1}/2^{n-1} a_1 with
///             a_i = psi(x/2^i, x/2^i) psi(z, 0)      (weight psi_xx_z0)
///             a_i = psi(x/2^{i-1}, 0) psi(z, 0)      (weight psi_x0_z0)
///             and printed = gated.
/// final = psi(x, x) psi(z, 0) / (2(1 - L)) in both directions.
struct TelescopingLevel {
  int level = 0;
  double lhs_sup = 0.0;
  double printed_margin = -std::numeric_limits<double>::infinity();
  double gated_margin = -std::numeric_limits<double>::infinity();
  double final_margin = -std::numeric_limits<double>::infinity();
  std::size_t gated_witness = 0;
  std::size_t final_witness = 0;
};

struct StabilizeOutcome {
  BiEval D;
  Direction direction = Direction::ascending;
  int start_level = 0;
  int N_converged = 0;
  bool converged = false;

  std::vector<int> levels;                     // level n of each recorded delta
  std::vector<RhoTildeValue> per_iter_deltas;  // rho_tilde(iterate_n - iterate_{n-1})
  std::vector<double> per_iter_sup_deltas;     // probe-sup rho(iterate_n - iterate_{n-1})
  std::optional<double> contraction_estimate;

  double bound_margin = -std::numeric_limits<double>::infinity();
  std::size_t bound_witness = 0;
  std::vector<TelescopingLevel> telescoping;

  /// Probe estimate of sup_{n,m <= N} rho_tilde(iterate_n - iterate_m).
  double orbit_sup = 0.0;
  double orbit_bound = 0.0;  // 1 / (1 - L)
};

/// Direct-method iteration: iterate_n(x, z) = 2^-n d(2^n x, z) (ascending) or
/// 2^n d(x / 2^n, z) (descending), stopping when the probe-sup modular distance
/// between successive iterates drops below tol or n reaches n_max.
///
/// Preconditions (PreconditionError): d.zero_boundary(), psi.direction() equal
/// to cfg.direction, check_psi_law passes on cfg.probes, n_max >= 1, tol > 0.
StabilizeOutcome stabilize(const BiMap& d, const PsiEnvelope& psi, const ModularSpec& rho,
                           const StabilizeConfig& cfg);

/// Geometric mean of the ratios of successive nonzero finite deltas. All-zero
/// history gives 0; fewer than three deltas otherwise is a PreconditionError.
double estimate_contraction(std::span<const double> deltas);

/// psi(x, x) psi(z, 0) / (2(1 - L)).
double hyers_bound(const PsiEnvelope& psi, const AlgElem& x, const AlgElem& z);

struct UniquenessVariant {
  std::string label;
  int start_level = 0;
  int n_max = 0;
  int N_converged = 0;
  bool converged = false;
  double disagreement = 0.0;  // probe-sup rho(D_variant - D_reference)
};

struct UniquenessReport {
  std::vector<UniquenessVariant> variants;
  double worst = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

/// Re-runs the iteration from start levels 1..trials and with n_max - 5 and
/// n_max + 5, and compares every D with the reference run on the probes.
UniquenessReport check_uniqueness(const BiMap& d, const PsiEnvelope& psi, const ModularSpec& rho,
                                  const StabilizeConfig& cfg, int trials = 3);

}  // namespace modstab
