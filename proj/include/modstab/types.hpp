#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace modstab {

using Scalar = std::complex<double>;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad configuration: dimension mismatches, unknown presets, out-of-range parameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A functional that was declared a modular but produced an impossible value.
class InvalidModularError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

class OutOfDiscError : public Error {
 public:
  using Error::Error;
};

/// Coefficient vector over a fixed basis. Used both for algebra elements and
/// for elements of the value space.
class CVec {
 public:
  CVec() = default;
  explicit CVec(std::size_t dim) : coords_(dim, Scalar{0.0, 0.0}) {}
  explicit CVec(std::vector<Scalar> coords) : coords_(std::move(coords)) {}
  CVec(std::initializer_list<Scalar> coords) : coords_(coords) {}

  static CVec real(std::initializer_list<double> values);
  static CVec basis(std::size_t dim, std::size_t index);

  [[nodiscard]] std::size_t dim() const noexcept { return coords_.size(); }
  [[nodiscard]] const std::vector<Scalar>& coords() const noexcept { return coords_; }

  Scalar& operator[](std::size_t i) { return coords_[i]; }
  const Scalar& operator[](std::size_t i) const { return coords_[i]; }

  [[nodiscard]] bool is_zero() const noexcept;
  [[nodiscard]] bool all_finite() const noexcept;
  /// Largest coordinate modulus.
  [[nodiscard]] double max_abs() const noexcept;
  /// Euclidean norm, overflow-safe.
  [[nodiscard]] double euclidean() const noexcept;
  [[nodiscard]] CVec conj() const;

  CVec& operator+=(const CVec& other);
  CVec& operator-=(const CVec& other);
  CVec& operator*=(Scalar s);

  friend CVec operator+(CVec a, const CVec& b) { return a += b; }
  friend CVec operator-(CVec a, const CVec& b) { return a -= b; }
  friend CVec operator-(CVec a) { return a *= Scalar{-1.0, 0.0}; }
  friend CVec operator*(Scalar s, CVec a) { return a *= s; }
  friend CVec operator*(CVec a, Scalar s) { return a *= s; }
  friend CVec operator*(double s, CVec a) { return a *= Scalar{s, 0.0}; }
  friend CVec operator/(CVec a, double s) { return a *= Scalar{1.0 / s, 0.0}; }

  friend bool operator==(const CVec&, const CVec&) = default;

 private:
  std::vector<Scalar> coords_;
};

using AlgElem = CVec;
using VecX = CVec;

std::string to_string(const CVec& v);

}  // namespace modstab
