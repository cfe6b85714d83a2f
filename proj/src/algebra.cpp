#include "modstab/algebra.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "modstab/rng.hpp"

namespace modstab {

AlgebraSpec AlgebraSpec::preset(std::string_view name, std::size_t dim) {
  if (name == "matrix2") {
    // basis index 2*r + c <-> E_{r+1, c+1};  E_ab E_cd = [b == c] E_ad
    std::vector<Scalar> c(64, Scalar{});
    for (std::size_t a = 0; a < 2; ++a)
      for (std::size_t b = 0; b < 2; ++b)
        for (std::size_t d = 0; d < 2; ++d) {
          const std::size_t i = 2 * a + b;
          const std::size_t j = 2 * b + d;
          const std::size_t k = 2 * a + d;
          c[(i * 4 + j) * 4 + k] = 1.0;
        }
    return from_structure(4, std::move(c), "matrix2");
  }
  if (name == "complex") {
    return from_structure(1, {Scalar{1.0, 0.0}}, "complex");
  }
  if (name == "zero_mul") {
    const std::size_t n = dim == 0 ? 2 : dim;
    return from_structure(n, std::vector<Scalar>(n * n * n, Scalar{}), "zero_mul");
  }
  throw ConfigError("unknown algebra preset '" + std::string(name) + "'");
}

std::vector<std::string> AlgebraSpec::preset_names() { return {"matrix2", "complex", "zero_mul"}; }

AlgebraSpec AlgebraSpec::from_structure(std::size_t dim, std::vector<Scalar> structure,
                                        std::optional<std::string> name) {
  if (dim == 0) throw ConfigError("algebra dimension must be positive");
  if (structure.size() != dim * dim * dim) {
    throw ConfigError("algebra of dimension " + std::to_string(dim) + " needs " +
                      std::to_string(dim * dim * dim) + " structure constants, got " +
                      std::to_string(structure.size()));
  }
  for (const auto& s : structure) {
    if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) {
      throw ConfigError("algebra structure constants must be finite");
    }
  }
  AlgebraSpec a;
  a.dim_ = dim;
  a.c_ = std::move(structure);
  a.name_ = std::move(name);
  const double defect = a.associativity_defect();
  if (defect > 1e-12) {
    throw ConfigError("algebra is not associative (defect " + std::to_string(defect) + ")");
  }
  return a;
}

AlgElem AlgebraSpec::mul(const AlgElem& a, const AlgElem& b) const {
  if (a.dim() != dim_ || b.dim() != dim_) {
    throw ConfigError("algebra product expects dimension " + std::to_string(dim_));
  }
  AlgElem out(dim_);
  for (std::size_t i = 0; i < dim_; ++i) {
    if (a[i] == Scalar{}) continue;
    for (std::size_t j = 0; j < dim_; ++j) {
      if (b[j] == Scalar{}) continue;
      const Scalar ab = a[i] * b[j];
      const Scalar* row = &c_[(i * dim_ + j) * dim_];
      for (std::size_t k = 0; k < dim_; ++k) {
        if (row[k] != Scalar{}) out[k] += ab * row[k];
      }
    }
  }
  return out;
}

double AlgebraSpec::associativity_defect() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = 0; j < dim_; ++j)
      for (std::size_t k = 0; k < dim_; ++k) {
        const AlgElem left = mul(mul(basis(i), basis(j)), basis(k));
        const AlgElem right = mul(basis(i), mul(basis(j), basis(k)));
        worst = std::max(worst, (left - right).max_abs());
      }
  return worst;
}

AlgElem mul(const AlgElem& a, const AlgElem& b, const AlgebraSpec& spec) { return spec.mul(a, b); }

std::vector<Scalar> sample_unit_circle(std::uint64_t seed, std::size_t n) {
  if (n < 4) throw PreconditionError("sample_unit_circle needs n >= 4");
  std::vector<Scalar> out = {{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}};
  out.reserve(n);
  Stream rng(seed);
  while (out.size() < n) out.push_back(rng.unit_complex());
  return out;
}

UnimodularTriple three_unimodular_decomposition(Scalar w) {
  const double modulus = std::abs(w);
  if (!(modulus <= 3.0 + 1e-12)) {
    throw OutOfDiscError("three-unimodular decomposition needs |w| <= 3, got |w| = " +
                         std::to_string(modulus));
  }
  if (modulus == 0.0) {
    return {Scalar{1.0, 0.0}, std::polar(1.0, 2.0 * std::numbers::pi / 3.0),
            std::polar(1.0, 4.0 * std::numbers::pi / 3.0)};
  }
  const Scalar mu3 = w / modulus;
  const Scalar r = w - mu3;
  const double r_abs = std::abs(r);
  const double theta = r_abs == 0.0 ? 0.0 : std::arg(r);
  const double phi = std::acos(std::min(1.0, r_abs / 2.0));
  return {std::polar(1.0, theta + phi), std::polar(1.0, theta - phi), mu3};
}

}  // namespace modstab
