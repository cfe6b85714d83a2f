#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "modstab/algebra.hpp"
#include "modstab/modular.hpp"
#include "modstab/types.hpp"

namespace modstab {

/// Evaluatable two-variable map A x A -> X.
using BiEval = std::function<VecX(const AlgElem&, const AlgElem&)>;

enum class Direction { ascending, descending };

std::string_view to_string(Direction d);
Direction parse_direction(std::string_view name);

enum class PerturbationKind {
  bounded_osc,  // eps * sin(sum_i Re x_i) * proj(z)
  power_env,    // eps * |x|^p |z|^p * e_0
  quadratic,    // eps * (sum_i x_i)^2 * proj(z)
  conjugate,    // eps * (sum_i conj(x_i)) * proj(z)
};

std::string_view to_string(PerturbationKind k);
PerturbationKind parse_perturbation(std::string_view name);

/// Named closed-form perturbation term g(x, z). With boundary_safe, g is
/// multiplied by |x|^2/(1+|x|^2) * |z|^2/(1+|z|^2), which vanishes at x = 0 and
/// at z = 0.
struct Perturbation {
  PerturbationKind kind = PerturbationKind::bounded_osc;
  double epsilon = 0.0;
  double p = 0.5;
  bool boundary_safe = false;

  [[nodiscard]] VecX operator()(const AlgElem& x, const AlgElem& z, std::size_t dim_x) const;
  /// Whether g(x, 0) = g(0, z) = 0 holds identically.
  [[nodiscard]] bool vanishes_on_boundary() const noexcept;
};

/// d(x, z) = kernel(x, z) + g(x, z), where the kernel is the C-bilinear map
/// kernel(x, z)_k = sum_{i,j} x_i z_j T[i][j][k].
class BiMap {
 public:
  static BiMap tensor(std::size_t dim_a, std::size_t dim_x, std::vector<Scalar> coefficients,
                      std::string name = "tensor");
  /// c * (xz - zx) on the algebra; X = A.
  static BiMap commutator(const AlgebraSpec& alg, Scalar c = {1.0, 0.0});
  /// c * xz on the algebra; X = A.
  static BiMap product(const AlgebraSpec& alg, Scalar c = {1.0, 0.0});
  static BiMap zero(std::size_t dim_a, std::size_t dim_x);
  /// Arbitrary evaluator (API only; configs cannot inject code).
  static BiMap custom(std::size_t dim_a, std::size_t dim_x, BiEval fn, bool zero_boundary,
                      std::string name = "custom");

  [[nodiscard]] BiMap with_perturbation(const Perturbation& g) const;

  [[nodiscard]] std::size_t dim_a() const noexcept { return dim_a_; }
  [[nodiscard]] std::size_t dim_x() const noexcept { return dim_x_; }
  [[nodiscard]] bool zero_boundary() const noexcept { return zero_boundary_; }
  [[nodiscard]] bool has_perturbation() const noexcept { return perturbation_.has_value(); }
  [[nodiscard]] const std::optional<Perturbation>& perturbation() const noexcept { return perturbation_; }
  [[nodiscard]] const std::string& name() const noexcept { return name_; }

  /// Kernel value alone (exactly bilinear).
  [[nodiscard]] VecX kernel(const AlgElem& x, const AlgElem& z) const;

  /// Kernel plus perturbation. Throws NonFiniteError naming the point when the
  /// value is not finite.
  [[nodiscard]] VecX operator()(const AlgElem& x, const AlgElem& z) const;

  [[nodiscard]] BiEval evaluator() const;

 private:
  BiMap() = default;

  std::size_t dim_a_ = 0;
  std::size_t dim_x_ = 0;
  std::vector<Scalar> tensor_;  // empty for custom maps
  BiEval custom_;
  std::optional<Perturbation> perturbation_;
  bool zero_boundary_ = true;
  std::string name_;
};

/// The control function psi with its scaling constant L.
///
/// power form:     psi(x, y) = sqrt(theta) * (|x|^p + |y|^p)
/// tabulated form: psi(x, y) = t(|x|) + t(|y|) for a radial profile t given on
///                 knots, interpolated log-log and extended by the end slopes.
/// |.| is the Luxemburg norm of `norm_modular` on the coefficient space of A.
class PsiEnvelope {
 public:
  static PsiEnvelope power(double theta, double p, double L, Direction direction,
                           ModularSpec norm_modular = ModularSpec::norm());
  /// L defaults to 2^{p-1} (ascending) or 2^{1-p} (descending): the smallest
  /// constant for which the power form satisfies the scaling law.
  static PsiEnvelope power_default_L(double theta, double p, Direction direction,
                                     ModularSpec norm_modular = ModularSpec::norm());
  /// Knots (r_k, t_k) with 0 < r_1 < ... and t_k > 0.
  static PsiEnvelope tabulated(std::vector<std::pair<double, double>> knots, double L,
                               Direction direction, ModularSpec norm_modular = ModularSpec::norm());

  [[nodiscard]] double operator()(const AlgElem& x, const AlgElem& y) const;
  [[nodiscard]] double radial(double r) const;
  [[nodiscard]] double norm(const AlgElem& x) const;

  [[nodiscard]] bool is_power() const noexcept { return knots_.empty(); }
  [[nodiscard]] double theta() const noexcept { return theta_; }
  [[nodiscard]] double p() const noexcept { return p_; }
  [[nodiscard]] double L() const noexcept { return L_; }
  [[nodiscard]] Direction direction() const noexcept { return direction_; }
  [[nodiscard]] const ModularSpec& norm_modular() const noexcept { return norm_modular_; }

  [[nodiscard]] PsiEnvelope with_theta(double theta) const;

 private:
  PsiEnvelope(double L, Direction direction, ModularSpec norm_modular);

  double theta_ = 0.0;
  double p_ = 0.0;
  double L_ = 0.5;
  Direction direction_ = Direction::ascending;
  ModularSpec norm_modular_;
  std::vector<std::pair<double, double>> knots_;
};

enum class ProbeKind {
  random,
  diagonal,       // (x, x, z, 0, 1)
  axis,           // (x, 0, z, 0, 1)
  half_diagonal,  // (x/2, x/2, z, 0, 1)
  zero_x,         // (0, 0, z, w, lambda)
  zero_z,         // (x, y, 0, 0, lambda)
};

std::string_view to_string(ProbeKind k);

struct Probe {
  AlgElem x;
  AlgElem y;
  AlgElem z;
  AlgElem w;
  Scalar lambda{1.0, 0.0};
  ProbeKind kind = ProbeKind::random;

  /// The special tuples the proofs specialize to (lambda = 1, w = 0).
  [[nodiscard]] bool mandatory() const noexcept {
    return kind == ProbeKind::diagonal || kind == ProbeKind::axis || kind == ProbeKind::half_diagonal;
  }
};

/// Finite, seeded surrogate for "for all x, y, z, w in A".
class ProbeSet {
 public:
  /// Deterministic given (dim, count, radius, seed): every coordinate has
  /// modulus <= radius. count/8 each of the diagonal, axis and half-diagonal
  /// tuples come first, then one zero_x and one zero_z probe, then random
  /// probes whose lambda cycles 1, -1, i, -i, then four seeded unit-circle draws.
  static ProbeSet generate(std::size_t dim, std::size_t count, double radius, std::uint64_t seed);

  /// Random probes whose radii are spread over radius * 2^[-octaves, octaves].
  static ProbeSet multiscale(std::size_t dim, std::size_t count, double radius, std::uint64_t seed,
                             int octaves = 6);

  static ProbeSet from_points(std::vector<Probe> points, std::uint64_t seed = 0, double radius = 0.0);

  [[nodiscard]] ProbeSet merged(const ProbeSet& other) const;

  [[nodiscard]] const std::vector<Probe>& points() const noexcept { return points_; }
  [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }
  [[nodiscard]] const Probe& operator[](std::size_t i) const { return points_[i]; }
  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] double radius() const noexcept { return radius_; }
  [[nodiscard]] std::size_t dim() const noexcept { return points_.empty() ? 0 : points_.front().x.dim(); }

 private:
  std::vector<Probe> points_;
  std::uint64_t seed_ = 0;
  double radius_ = 0.0;
};

enum class RhoTildeWeight {
  psi_xx_z0,  // psi(x, x) psi(z, 0)
  psi_x0_z0,  // psi(x, 0) psi(z, 0)
};

std::string_view to_string(RhoTildeWeight w);
RhoTildeWeight parse_rho_tilde_weight(std::string_view name);

double rho_tilde_weight(const PsiEnvelope& psi, RhoTildeWeight kind, const AlgElem& x, const AlgElem& z);

/// Probe-set lower bound for the function-space modular
/// inf{c > 0 : rho(delta(x, z)) <= c * weight(x, z)}.
struct RhoTildeValue {
  double value = 0.0;
  bool infinite = false;  // some zero-weight probe carried a nonzero defect
  std::size_t witness = 0;
  std::size_t effective_probes = 0;

  [[nodiscard]] double as_double() const noexcept {
    return infinite ? std::numeric_limits<double>::infinity() : value;
  }
};

RhoTildeValue rho_tilde(const ModularSpec& rho, const PsiEnvelope& psi, RhoTildeWeight weight,
                        const BiEval& delta, const ProbeSet& probes);

/// Same computation from precomputed per-probe weights and rho(delta) values.
RhoTildeValue rho_tilde_from(const std::vector<double>& weights, const std::vector<double>& rho_values);

/// One application of the contraction: ascending (x, z) -> f(2x, z) / 2,
/// descending (x, z) -> 2 f(x/2, z). Only the first argument is scaled.
BiEval direct_step(BiEval f, Direction direction);

/// Value of the n-th iterate of direct_step at (x, z), computed directly.
VecX scaled_iterate(const BiEval& f, Direction direction, int level, const AlgElem& x, const AlgElem& z);

struct PsiLawReport {
  double worst_law_margin = -std::numeric_limits<double>::infinity();
  std::size_t law_witness = 0;
  bool law_ok = true;
  bool limit_ok = true;
  int worst_limit_levels = 0;  // levels needed to fall below 1e-9 of the start
  std::size_t limit_witness = 0;

  [[nodiscard]] bool pass() const noexcept { return law_ok && limit_ok; }
};

/// Scaling law (ascending psi(2x,2x) <= 2L psi(x,x); descending
/// psi(x,x) <= (L/2) psi(2x,2x)) on every probe, plus an empirical check that
/// psi(2^n x, 2^n y)/2^n (resp. 2^n psi(x/2^n, x/2^n)) decays monotonically
/// below 1e-9 of its first value within 256 levels.
PsiLawReport check_psi_law(const PsiEnvelope& psi, const ProbeSet& probes);

/// delta(x, z) = weight(x, z) * table[cell(x)][cell(z)], where cell() depends
/// only on the direction of its argument (dominant coordinate and the quadrant
/// of its argument). Used to exercise rho_tilde on non-closed-form maps.
class TabulatedPerturbation {
 public:
  TabulatedPerturbation(PsiEnvelope psi, RhoTildeWeight weight, std::size_t dim_a, std::size_t dim_x,
                        std::uint64_t seed);

  [[nodiscard]] VecX operator()(const AlgElem& x, const AlgElem& z) const;
  [[nodiscard]] BiEval evaluator() const;

  static std::size_t cell(const AlgElem& v);

 private:
  PsiEnvelope psi_;
  RhoTildeWeight weight_;
  std::size_t dim_a_;
  std::size_t dim_x_;
  std::vector<VecX> table_;
};

}  // namespace modstab
