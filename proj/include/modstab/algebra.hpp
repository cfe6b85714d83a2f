#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "modstab/types.hpp"

namespace modstab {

/// Finite-dimensional associative algebra over C given by structure constants
/// e_i * e_j = sum_k c[i][j][k] e_k.
class AlgebraSpec {
 public:
  /// Built-in presets: "matrix2" (2x2 matrix units E11, E12, E21, E22),
  /// "complex" (dimension 1), "zero_mul" (all products zero, dimension `dim`,
  /// default 2).
  static AlgebraSpec preset(std::string_view name, std::size_t dim = 0);

  /// Explicit structure constants, row-major [i][j][k]. Associativity is
  /// verified on basis triples to 1e-12; violations throw ConfigError.
  static AlgebraSpec from_structure(std::size_t dim, std::vector<Scalar> structure,
                                    std::optional<std::string> name = std::nullopt);

  static std::vector<std::string> preset_names();

  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] const std::optional<std::string>& preset_name() const noexcept { return name_; }
  [[nodiscard]] const std::vector<Scalar>& structure() const noexcept { return c_; }

  [[nodiscard]] Scalar c(std::size_t i, std::size_t j, std::size_t k) const {
    return c_[(i * dim_ + j) * dim_ + k];
  }

  [[nodiscard]] AlgElem basis(std::size_t i) const { return AlgElem::basis(dim_, i); }
  [[nodiscard]] AlgElem mul(const AlgElem& a, const AlgElem& b) const;

  /// Largest |(e_i e_j) e_k - e_i (e_j e_k)| coordinate over all basis triples.
  [[nodiscard]] double associativity_defect() const;

 private:
  AlgebraSpec() = default;

  std::size_t dim_ = 0;
  std::vector<Scalar> c_;
  std::optional<std::string> name_;
};

AlgElem mul(const AlgElem& a, const AlgElem& b, const AlgebraSpec& spec);

/// 1, -1, i, -i followed by n - 4 seeded uniform points of the unit circle.
std::vector<Scalar> sample_unit_circle(std::uint64_t seed, std::size_t n);

struct UnimodularTriple {
  Scalar mu1;
  Scalar mu2;
  Scalar mu3;

  [[nodiscard]] Scalar sum() const { return mu1 + mu2 + mu3; }
};

/// Writes w (|w| <= 3) as a sum of three points of the unit circle.
///
/// w = 0 gives the cube roots of unity. Otherwise mu3 = w/|w| and the residual
/// r = w - mu3, of modulus ||w| - 1| <= 2, is split as
/// e^{i(theta + phi)} + e^{i(theta - phi)} with theta = arg r and
/// phi = arccos(|r| / 2). theta is 0 when r = 0.
UnimodularTriple three_unimodular_decomposition(Scalar w);

}  // namespace modstab
