#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "modstab/types.hpp"

namespace modstab {

enum class ModularKind { norm, power, orlicz };

/// Named Orlicz functions accepted in scenario configs.
enum class OrliczPreset { square, exp_minus_one, linear };

std::string_view to_string(OrliczPreset preset);
OrliczPreset parse_orlicz_preset(std::string_view name);

/// A modular functional on a finite-dimensional coefficient space.
///
/// norm:      rho(x) = Euclidean norm of x
/// power(p):  rho(x) = sum_i |x_i|^p      (p >= 1, convex)
/// orlicz:    rho(x) = sum_i phi(|x_i|)
///
/// kappa is the Delta_2 constant claimed for the modular, restricted to (0, 2].
/// Whether the claim holds is a question for check_delta2, not the constructor.
class ModularSpec {
 public:
  using Phi = std::function<double(double)>;

  static ModularSpec norm(double kappa = 2.0);
  static ModularSpec power(double p, double kappa = 2.0);
  static ModularSpec orlicz(OrliczPreset preset, double kappa = 2.0);
  /// Orlicz modular with an arbitrary phi; API-only, used for fixtures such as
  /// deliberately broken modulars.
  static ModularSpec orlicz_custom(std::string name, Phi phi, bool convex, double kappa = 2.0);

  /// Pin the coefficient-space dimension; eval then rejects other sizes.
  [[nodiscard]] ModularSpec with_dim(std::size_t dim) const;

  [[nodiscard]] ModularKind kind() const noexcept { return kind_; }
  [[nodiscard]] double p() const noexcept { return p_; }
  [[nodiscard]] bool convex() const noexcept { return convex_; }
  [[nodiscard]] double kappa() const noexcept { return kappa_; }
  [[nodiscard]] std::optional<std::size_t> dim() const noexcept { return dim_; }
  [[nodiscard]] std::optional<OrliczPreset> preset() const noexcept { return preset_; }
  [[nodiscard]] const std::string& name() const noexcept { return name_; }

  /// rho(x); may be +infinity for fast-growing Orlicz functions.
  [[nodiscard]] double operator()(const VecX& x) const;

 private:
  ModularSpec() = default;

  ModularKind kind_ = ModularKind::norm;
  double p_ = 1.0;
  bool convex_ = true;
  double kappa_ = 2.0;
  std::optional<std::size_t> dim_;
  std::optional<OrliczPreset> preset_;
  Phi phi_;
  std::string name_;
};

double eval_modular(const ModularSpec& m, const VecX& x);

/// Luxemburg norm inf{lambda > 0 : rho(x / lambda) <= 1} by bracketing bisection.
/// Absolute error is at most tol. Throws UnsupportedError for non-convex modulars
/// and DivergenceError when no bracket exists below 2^64.
double luxemburg_norm(const ModularSpec& m, const VecX& x, double tol = 1e-12);

/// Closed form of the Luxemburg norm where one exists (norm and power kinds);
/// falls back to bisection for Orlicz modulars.
double luxemburg_norm_fast(const ModularSpec& m, const VecX& x, double tol = 1e-13);

struct AxiomSample {
  VecX x;
  VecX y;
  double alpha = 0.5;
  double beta = 0.5;
  Scalar unimodular{1.0, 0.0};
};

struct AxiomEntry {
  std::string axiom;  // "(i)", "(ii)", "(iii)", "(iii)'"
  double worst_margin = -std::numeric_limits<double>::infinity();
  std::size_t witness = 0;
  bool checked = false;
};

/// Worst margin per axiom; margin <= 0 means the axiom held on every sample.
struct AxiomReport {
  std::vector<AxiomEntry> entries;

  [[nodiscard]] const AxiomEntry& at(std::string_view axiom) const;
  [[nodiscard]] bool pass(double tol = 1e-12) const;
};

/// Seeded samples: points in the ball of the given radius, convex weights and
/// a unimodular scalar; the first four samples use 1, -1, i, -i.
std::vector<AxiomSample> make_axiom_samples(std::size_t dim, std::size_t count, std::uint64_t seed,
                                            double radius = 1.0);

AxiomReport check_modular_axioms(const ModularSpec& m, const std::vector<AxiomSample>& samples);

struct Delta2Result {
  double kappa_hat = 0.0;
  bool pass = false;
};

Delta2Result check_delta2(const ModularSpec& m, const std::vector<VecX>& samples);

struct RemarkSample {
  VecX x;
  double a = 0.5;  // 0 < a < b
  double b = 1.0;
  Scalar alpha{0.5, 0.0};  // |alpha| <= 1
};

struct RemarkReport {
  double monotone_margin = -std::numeric_limits<double>::infinity();   // rho(ax) - rho(bx)
  double scaling_margin = -std::numeric_limits<double>::infinity();    // rho(alpha x) - |alpha| rho(x)
  double doubling_margin = -std::numeric_limits<double>::infinity();   // rho(x) - rho(2x)/2
  bool convex_checked = false;

  [[nodiscard]] bool pass(double tol = 1e-12) const;
};

std::vector<RemarkSample> make_remark_samples(std::size_t dim, std::size_t count, std::uint64_t seed,
                                              double radius = 1.0);

RemarkReport check_remark_properties(const ModularSpec& m, const std::vector<RemarkSample>& samples);

/// Sampled Fatou check on an explicitly supplied rho-convergent sequence.
/// The liminf is estimated by the minimum over the final tenth of the sequence.
bool check_fatou(const ModularSpec& m, const std::vector<VecX>& seq, const VecX& limit);

}  // namespace modstab
