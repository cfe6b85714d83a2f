#include "modstab/types.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace modstab {

CVec CVec::real(std::initializer_list<double> values) {
  std::vector<Scalar> c;
  c.reserve(values.size());
  for (double v : values) c.emplace_back(v, 0.0);
  return CVec(std::move(c));
}

CVec CVec::basis(std::size_t dim, std::size_t index) {
  CVec v(dim);
  v.coords_.at(index) = Scalar{1.0, 0.0};
  return v;
}

bool CVec::is_zero() const noexcept {
  return std::all_of(coords_.begin(), coords_.end(),
                     [](const Scalar& c) { return c.real() == 0.0 && c.imag() == 0.0; });
}

bool CVec::all_finite() const noexcept {
  return std::all_of(coords_.begin(), coords_.end(), [](const Scalar& c) {
    return std::isfinite(c.real()) && std::isfinite(c.imag());
  });
}

double CVec::max_abs() const noexcept {
  double m = 0.0;
  for (const auto& c : coords_) m = std::max(m, std::abs(c));
  return m;
}

double CVec::euclidean() const noexcept {
  const double scale = max_abs();
  if (scale == 0.0 || !std::isfinite(scale)) return scale;
  double sum = 0.0;
  for (const auto& c : coords_) {
    const double re = c.real() / scale;
    const double im = c.imag() / scale;
    sum += re * re + im * im;
  }
  return scale * std::sqrt(sum);
}

CVec CVec::conj() const {
  CVec out(*this);
  for (auto& c : out.coords_) c = std::conj(c);
  return out;
}

CVec& CVec::operator+=(const CVec& other) {
  if (other.dim() != dim()) throw ConfigError("vector dimension mismatch in addition");
  for (std::size_t i = 0; i < coords_.size(); ++i) coords_[i] += other.coords_[i];
  return *this;
}

CVec& CVec::operator-=(const CVec& other) {
  if (other.dim() != dim()) throw ConfigError("vector dimension mismatch in subtraction");
  for (std::size_t i = 0; i < coords_.size(); ++i) coords_[i] -= other.coords_[i];
  return *this;
}

CVec& CVec::operator*=(Scalar s) {
  for (auto& c : coords_) c *= s;
  return *this;
}

std::string to_string(const CVec& v) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (std::size_t i = 0; i < v.dim(); ++i) {
    if (i) os << ", ";
    os << v[i].real();
    if (v[i].imag() != 0.0) os << (v[i].imag() < 0 ? "-" : "+") << std::abs(v[i].imag()) << 'i';
  }
  os << ')';
  return os.str();
}

}  // namespace modstab
