#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "modstab/algebra.hpp"
#include "modstab/bimap.hpp"
#include "modstab/modular.hpp"

namespace modstab {

inline constexpr double kIdentityTol = 1e-10;
inline constexpr double kInequalityTol = 1e-9;

/// One checked inequality at one probe; pass iff margin = lhs - rhs <= tol.
/// An evaluation that aborts (non-finite value) yields pass = false, NaN
/// numbers and the reason in note.
struct CheckRecord {
  std::string check_name;
  std::size_t probe_id = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
  bool pass = false;
  std::string note;
};

bool all_pass(const std::vector<CheckRecord>& records);
double worst_margin(const std::vector<CheckRecord>& records);

/// lhs = rho(f(l(x+y), z+w) + f(l(x+y), z-w) + f(l(x-y), z+w) + f(l(x-y), z-w) - 4l f(x, z))
/// rhs = rho(4s[f((x+y)/2, z-w) + f((x-y)/2, z+w) - f(x, z) + f(y, w)]) + psi(x, y) psi(z, w)
std::vector<CheckRecord> check_inequality_a(const BiEval& f, const ModularSpec& rho, Scalar s,
                                            const std::optional<PsiEnvelope>& psi, const ProbeSet& probes,
                                            double tol = kInequalityTol);
std::vector<CheckRecord> check_inequality_a(const BiMap& f, const ModularSpec& rho, Scalar s,
                                            const std::optional<PsiEnvelope>& psi, const ProbeSet& probes,
                                            double tol = kInequalityTol);

/// lhs = rho(4[f(l(x+y)/2, z-w) + f(l(x-y)/2, z+w) - l f(x, z) + l f(y, w)])
/// rhs = rho(s[f(x+y, z+w) + f(x+y, z-w) + f(x-y, z+w) + f(x-y, z-w) - 4f(x, z)]) + psi(x, y) psi(z, w)
std::vector<CheckRecord> check_inequality_b(const BiEval& f, const ModularSpec& rho, Scalar s,
                                            const std::optional<PsiEnvelope>& psi, const ProbeSet& probes,
                                            double tol = kInequalityTol);
std::vector<CheckRecord> check_inequality_b(const BiMap& f, const ModularSpec& rho, Scalar s,
                                            const std::optional<PsiEnvelope>& psi, const ProbeSet& probes,
                                            double tol = kInequalityTol);

/// Excess of each inequality over its s-term, without the envelope:
/// lhs - rho(s-term) per probe. Used to calibrate theta.
std::vector<double> inequality_a_excess(const BiEval& f, const ModularSpec& rho, Scalar s, const ProbeSet& probes);
std::vector<double> inequality_b_excess(const BiEval& f, const ModularSpec& rho, Scalar s, const ProbeSet& probes);

struct BiadditivityReport {
  double slot_one = 0.0;  // sup rho(f(x+x', z) - f(x, z) - f(x', z)), x' = probe.y
  double slot_two = 0.0;  // sup rho(f(x, z+z') - f(x, z) - f(x, z')), z' = probe.w
  std::size_t slot_one_witness = 0;
  std::size_t slot_two_witness = 0;

  [[nodiscard]] bool pass(double tol = kIdentityTol) const { return slot_one <= tol && slot_two <= tol; }
};

BiadditivityReport check_biadditivity(const BiEval& f, const ModularSpec& rho, const ProbeSet& probes);

struct LinearityEntry {
  Scalar lambda;
  bool unimodular = true;
  double direct = 0.0;  // sup rho(f(l x, z) - l f(x, z))
  double route = 0.0;   // sup rho(f(l x, z) - (M/3) sum_i f(mu_i x, z)); 0 for unimodular l
  int M = 0;
};

struct LinearityReport {
  std::vector<LinearityEntry> entries;
  std::vector<CheckRecord> records;  // one per (scalar, probe)
  double worst_unimodular = 0.0;
  double worst_generic = 0.0;

  [[nodiscard]] bool pass() const { return all_pass(records); }
};

/// 1, -1, i, -i, 16 seeded unit-circle points, then n_generic seeded complex
/// values with modulus in (1, 4].
std::vector<Scalar> linearity_scalars(std::uint64_t seed, std::size_t n_generic = 8);

/// Unimodular scalars: direct residual. Other scalars: M = floor(4|l|) + 1,
/// 3l/M = mu_1 + mu_2 + mu_3, route residual and direct residual, gated on the
/// larger of the two against M * tol (the route sums M/3 * 3 evaluations).
LinearityReport check_first_slot_linearity(const BiEval& f, const ModularSpec& rho, const std::vector<Scalar>& scalars,
                                           const ProbeSet& probes, double tol = kIdentityTol);

/// margin = rho(D(x, z) - d(x, z)) - psi(x, x) psi(z, 0) / (2(1 - L)).
std::vector<CheckRecord> check_stability_bound(const BiEval& d, const BiEval& D, const PsiEnvelope& psi,
                                               const ModularSpec& rho, const ProbeSet& probes,
                                               double tol = kInequalityTol);

/// Records "biderivation_slot_one": rho(f(xy, z) - f(x, z)y - x f(y, z)) and
/// "biderivation_slot_two": rho(f(x, zw) - f(x, z)w - z f(x, w)), each against
/// psi(x, y) psi(z, w) (0 when psi is absent). The value space must be the
/// algebra itself.
std::vector<CheckRecord> check_biderivation(const BiEval& f, const ModularSpec& rho, const AlgebraSpec& alg,
                                            const std::optional<PsiEnvelope>& psi, const ProbeSet& probes,
                                            double tol = kIdentityTol);
std::vector<CheckRecord> check_biderivation(const BiMap& f, const ModularSpec& rho, const AlgebraSpec& alg,
                                            const std::optional<PsiEnvelope>& psi, const ProbeSet& probes,
                                            double tol = kIdentityTol);

struct SuperstabilityReport {
  double sup = 0.0;  // sup rho(d(2x, z) - 2 d(x, z))
  std::size_t witness = 0;
  bool pass = false;
};

SuperstabilityReport check_superstability(const BiEval& d, const ModularSpec& rho, const ProbeSet& probes,
                                          double tol = kIdentityTol);

/// rho(a(x, z) - b(x, z)) <= tol per probe.
std::vector<CheckRecord> check_identity(const std::string& name, const BiEval& a, const BiEval& b,
                                        const ModularSpec& rho, const ProbeSet& probes, double tol = kIdentityTol);

enum class InequalityKind { A, B };

struct ThetaCalibration {
  double theta_star = 0.0;  // smallest theta making every probe pass
  std::size_t witness = 0;
  bool infinite = false;    // positive excess where the envelope vanishes
};

/// theta* = max over probes of excess / ((|x|^p + |y|^p)(|z|^p + |w|^p)).
ThetaCalibration calibrate_theta(const BiEval& f, const ModularSpec& rho, Scalar s, InequalityKind which, double p,
                                 const ModularSpec& norm_modular, const ProbeSet& probes);

}  // namespace modstab
