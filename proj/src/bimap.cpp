#include "modstab/bimap.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

#include "modstab/rng.hpp"

namespace modstab {

namespace {

VecX project(const AlgElem& z, std::size_t dim_x) {
  VecX out(dim_x);
  const std::size_t n = std::min(dim_x, z.dim());
  for (std::size_t i = 0; i < n; ++i) out[i] = z[i];
  return out;
}

double boundary_factor(const AlgElem& v) {
  const double n = v.euclidean();
  if (!std::isfinite(n)) return 1.0;
  const double n2 = n * n;
  return n2 / (1.0 + n2);
}

constexpr double kZeroDefect = 1e-12;

}  // namespace

std::string_view to_string(Direction d) { return d == Direction::ascending ? "ascending" : "descending"; }

Direction parse_direction(std::string_view name) {
  if (name == "ascending") return Direction::ascending;
  if (name == "descending") return Direction::descending;
  throw ConfigError("unknown direction '" + std::string(name) + "'");
}

std::string_view to_string(PerturbationKind k) {
  switch (k) {
    case PerturbationKind::bounded_osc:
      return "bounded_osc";
    case PerturbationKind::power_env:
      return "power_env";
    case PerturbationKind::quadratic:
      return "quadratic";
    case PerturbationKind::conjugate:
      return "conjugate";
  }
  return "?";
}

PerturbationKind parse_perturbation(std::string_view name) {
  if (name == "bounded_osc") return PerturbationKind::bounded_osc;
  if (name == "power_env") return PerturbationKind::power_env;
  if (name == "quadratic") return PerturbationKind::quadratic;
  if (name == "conjugate") return PerturbationKind::conjugate;
  throw ConfigError("unknown perturbation '" + std::string(name) + "'");
}

VecX Perturbation::operator()(const AlgElem& x, const AlgElem& z, std::size_t dim_x) const {
  VecX out(dim_x);
  switch (kind) {
    case PerturbationKind::bounded_osc: {
      double s = 0.0;
      for (const auto& c : x.coords()) s += c.real();
      out = (epsilon * std::sin(s)) * project(z, dim_x);
      break;
    }
    case PerturbationKind::power_env: {
      if (dim_x > 0) out[0] = epsilon * std::pow(x.euclidean(), p) * std::pow(z.euclidean(), p);
      break;
    }
    case PerturbationKind::quadratic: {
      Scalar s{};
      for (const auto& c : x.coords()) s += c;
      out = (epsilon * s * s) * project(z, dim_x);
      break;
    }
    case PerturbationKind::conjugate: {
      Scalar s{};
      for (const auto& c : x.coords()) s += std::conj(c);
      out = (epsilon * s) * project(z, dim_x);
      break;
    }
  }
  if (boundary_safe) out = (boundary_factor(x) * boundary_factor(z)) * out;
  return out;
}

bool Perturbation::vanishes_on_boundary() const noexcept {
  if (boundary_safe) return true;
  return !(kind == PerturbationKind::power_env && p <= 0.0);
}

BiMap BiMap::tensor(std::size_t dim_a, std::size_t dim_x, std::vector<Scalar> coefficients,
                    std::string name) {
  if (dim_a == 0 || dim_x == 0) throw ConfigError("bilinear map dimensions must be positive");
  if (coefficients.size() != dim_a * dim_a * dim_x) {
    throw ConfigError("kernel tensor needs " + std::to_string(dim_a * dim_a * dim_x) +
                      " coefficients, got " + std::to_string(coefficients.size()));
  }
  BiMap m;
  m.dim_a_ = dim_a;
  m.dim_x_ = dim_x;
  m.tensor_ = std::move(coefficients);
  m.name_ = std::move(name);
  return m;
}

BiMap BiMap::commutator(const AlgebraSpec& alg, Scalar c) {
  const std::size_t n = alg.dim();
  std::vector<Scalar> t(n * n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) t[(i * n + j) * n + k] = c * (alg.c(i, j, k) - alg.c(j, i, k));
  return tensor(n, n, std::move(t), "commutator");
}

BiMap BiMap::product(const AlgebraSpec& alg, Scalar c) {
  const std::size_t n = alg.dim();
  std::vector<Scalar> t(n * n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) t[(i * n + j) * n + k] = c * alg.c(i, j, k);
  return tensor(n, n, std::move(t), "product");
}

BiMap BiMap::zero(std::size_t dim_a, std::size_t dim_x) {
  return tensor(dim_a, dim_x, std::vector<Scalar>(dim_a * dim_a * dim_x), "zero");
}

BiMap BiMap::custom(std::size_t dim_a, std::size_t dim_x, BiEval fn, bool zero_boundary,
                    std::string name) {
  if (dim_a == 0 || dim_x == 0) throw ConfigError("map dimensions must be positive");
  if (!fn) throw ConfigError("custom map needs an evaluator");
  BiMap m;
  m.dim_a_ = dim_a;
  m.dim_x_ = dim_x;
  m.custom_ = std::move(fn);
  m.zero_boundary_ = zero_boundary;
  m.name_ = std::move(name);
  return m;
}

BiMap BiMap::with_perturbation(const Perturbation& g) const {
  if (!std::isfinite(g.epsilon) || !std::isfinite(g.p)) throw ConfigError("perturbation parameters must be finite");
  BiMap m(*this);
  m.perturbation_ = g;
  m.zero_boundary_ = zero_boundary_ && g.vanishes_on_boundary();
  m.name_ = name_ + "+" + std::string(to_string(g.kind));
  return m;
}

VecX BiMap::kernel(const AlgElem& x, const AlgElem& z) const {
  VecX out(dim_x_);
  if (tensor_.empty()) return out;
  for (std::size_t i = 0; i < dim_a_; ++i) {
    if (x[i] == Scalar{}) continue;
    for (std::size_t j = 0; j < dim_a_; ++j) {
      if (z[j] == Scalar{}) continue;
      const Scalar xz = x[i] * z[j];
      const Scalar* row = &tensor_[(i * dim_a_ + j) * dim_x_];
      for (std::size_t k = 0; k < dim_x_; ++k) {
        if (row[k] != Scalar{}) out[k] += xz * row[k];
      }
    }
  }
  return out;
}

VecX BiMap::operator()(const AlgElem& x, const AlgElem& z) const {
  if (x.dim() != dim_a_ || z.dim() != dim_a_) {
    throw ConfigError("map '" + name_ + "' expects arguments of dimension " + std::to_string(dim_a_));
  }
  VecX out = custom_ ? custom_(x, z) : kernel(x, z);
  if (out.dim() != dim_x_) throw ConfigError("map '" + name_ + "' returned a value of wrong dimension");
  if (perturbation_) out += (*perturbation_)(x, z, dim_x_);
  if (!out.all_finite()) {
    throw NonFiniteError("map '" + name_ + "' is not finite at x = " + to_string(x) + ", z = " + to_string(z));
  }
  return out;
}

BiEval BiMap::evaluator() const {
  auto self = std::make_shared<const BiMap>(*this);
  return [self](const AlgElem& x, const AlgElem& z) { return (*self)(x, z); };
}

PsiEnvelope::PsiEnvelope(double L, Direction direction, ModularSpec norm_modular)
    : L_(L), direction_(direction), norm_modular_(std::move(norm_modular)) {
  if (!(L > 0.0 && L < 1.0)) throw ConfigError("psi constant L must lie in (0, 1), got " + std::to_string(L));
  if (!norm_modular_.convex()) throw ConfigError("psi needs a convex modular for its Luxemburg norm");
}

PsiEnvelope PsiEnvelope::power(double theta, double p, double L, Direction direction, ModularSpec norm_modular) {
  if (!(theta >= 0.0) || !std::isfinite(theta)) throw ConfigError("psi theta must be finite and >= 0");
  if (!(p >= 0.0) || !std::isfinite(p)) throw ConfigError("psi exponent p must be finite and >= 0");
  PsiEnvelope psi(L, direction, std::move(norm_modular));
  psi.theta_ = theta;
  psi.p_ = p;
  return psi;
}

PsiEnvelope PsiEnvelope::power_default_L(double theta, double p, Direction direction, ModularSpec norm_modular) {
  const double L = direction == Direction::ascending ? std::exp2(p - 1.0) : std::exp2(1.0 - p);
  return power(theta, p, L, direction, std::move(norm_modular));
}

PsiEnvelope PsiEnvelope::tabulated(std::vector<std::pair<double, double>> knots, double L, Direction direction,
                                   ModularSpec norm_modular) {
  if (knots.size() < 2) throw ConfigError("tabulated psi needs at least two knots");
  for (std::size_t k = 0; k < knots.size(); ++k) {
    if (!(knots[k].first > 0.0) || !(knots[k].second > 0.0)) {
      throw ConfigError("tabulated psi knots must be positive");
    }
    if (k > 0 && !(knots[k].first > knots[k - 1].first)) {
      throw ConfigError("tabulated psi knots must be strictly increasing");
    }
  }
  PsiEnvelope psi(L, direction, std::move(norm_modular));
  psi.knots_ = std::move(knots);
  return psi;
}

PsiEnvelope PsiEnvelope::with_theta(double theta) const {
  if (!is_power()) throw UnsupportedError("only power-form psi has a theta");
  return power(theta, p_, L_, direction_, norm_modular_);
}

double PsiEnvelope::norm(const AlgElem& x) const { return luxemburg_norm_fast(norm_modular_, x); }

double PsiEnvelope::radial(double r) const {
  if (is_power()) return std::sqrt(theta_) * std::pow(r, p_);
  if (r == 0.0) return 0.0;
  const auto segment = [&](std::size_t k) {
    const auto [r0, t0] = knots_[k];
    const auto [r1, t1] = knots_[k + 1];
    const double slope = std::log(t1 / t0) / std::log(r1 / r0);
    return t0 * std::pow(r / r0, slope);
  };
  if (r <= knots_.front().first) return segment(0);
  if (r >= knots_.back().first) return segment(knots_.size() - 2);
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), r,
                                   [](double v, const std::pair<double, double>& k) { return v < k.first; });
  return segment(static_cast<std::size_t>(it - knots_.begin()) - 1);
}

double PsiEnvelope::operator()(const AlgElem& x, const AlgElem& y) const {
  return radial(norm(x)) + radial(norm(y));
}

std::string_view to_string(ProbeKind k) {
  switch (k) {
    case ProbeKind::random:
      return "random";
    case ProbeKind::diagonal:
      return "diagonal";
    case ProbeKind::axis:
      return "axis";
    case ProbeKind::half_diagonal:
      return "half_diagonal";
    case ProbeKind::zero_x:
      return "zero_x";
    case ProbeKind::zero_z:
      return "zero_z";
  }
  return "?";
}

namespace {

template <class RadiusFn>
std::vector<Probe> build_probes(std::size_t dim, std::size_t count, std::uint64_t seed, RadiusFn radius_of) {
  static const Scalar corners[] = {{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}};
  const std::size_t m = count / 8;
  std::vector<Probe> out;
  out.reserve(count);
  std::size_t random_index = 0;
  for (std::size_t k = 0; k < count; ++k) {
    Stream rng = Stream::substream(seed, k);
    const double r = radius_of(rng);
    Probe pr;
    pr.x = rng.disc_vector(dim, r);
    pr.z = rng.disc_vector(dim, r);
    pr.y = AlgElem(dim);
    pr.w = AlgElem(dim);
    if (k < m) {
      pr.kind = ProbeKind::diagonal;
      pr.y = pr.x;
    } else if (k < 2 * m) {
      pr.kind = ProbeKind::axis;
    } else if (k < 3 * m) {
      pr.kind = ProbeKind::half_diagonal;
      pr.x = 0.5 * pr.x;
      pr.y = pr.x;
    } else if (m > 0 && k == 3 * m) {
      pr.kind = ProbeKind::zero_x;
      pr.x = AlgElem(dim);
      pr.w = rng.disc_vector(dim, r);
      pr.lambda = rng.unit_complex();
    } else if (m > 0 && k == 3 * m + 1) {
      pr.kind = ProbeKind::zero_z;
      pr.y = rng.disc_vector(dim, r);
      pr.z = AlgElem(dim);
      pr.lambda = rng.unit_complex();
    } else {
      pr.kind = ProbeKind::random;
      pr.y = rng.disc_vector(dim, r);
      pr.w = rng.disc_vector(dim, r);
      const std::size_t phase = random_index++ % 8;
      pr.lambda = phase < 4 ? corners[phase] : rng.unit_complex();
    }
    out.push_back(std::move(pr));
  }
  return out;
}

}  // namespace

ProbeSet ProbeSet::generate(std::size_t dim, std::size_t count, double radius, std::uint64_t seed) {
  if (dim == 0 || count == 0) throw ConfigError("probe sets need positive dimension and count");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw ConfigError("probe radius must be positive");
  ProbeSet ps;
  ps.points_ = build_probes(dim, count, seed, [radius](Stream&) { return radius; });
  ps.seed_ = seed;
  ps.radius_ = radius;
  return ps;
}

ProbeSet ProbeSet::multiscale(std::size_t dim, std::size_t count, double radius, std::uint64_t seed, int octaves) {
  if (dim == 0 || count == 0) throw ConfigError("probe sets need positive dimension and count");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw ConfigError("probe radius must be positive");
  ProbeSet ps;
  ps.points_ = build_probes(dim, count, seed ^ 0x6d756c7469ULL, [radius, octaves](Stream& rng) {
    return radius * std::exp2(rng.uniform(-octaves, octaves));
  });
  ps.seed_ = seed;
  ps.radius_ = radius * std::exp2(octaves);
  return ps;
}

ProbeSet ProbeSet::from_points(std::vector<Probe> points, std::uint64_t seed, double radius) {
  ProbeSet ps;
  ps.points_ = std::move(points);
  ps.seed_ = seed;
  ps.radius_ = radius;
  return ps;
}

ProbeSet ProbeSet::merged(const ProbeSet& other) const {
  ProbeSet ps(*this);
  ps.points_.insert(ps.points_.end(), other.points_.begin(), other.points_.end());
  ps.radius_ = std::max(radius_, other.radius_);
  return ps;
}

std::string_view to_string(RhoTildeWeight w) {
  return w == RhoTildeWeight::psi_xx_z0 ? "psi_xx_z0" : "psi_x0_z0";
}

RhoTildeWeight parse_rho_tilde_weight(std::string_view name) {
  if (name == "psi_xx_z0") return RhoTildeWeight::psi_xx_z0;
  if (name == "psi_x0_z0") return RhoTildeWeight::psi_x0_z0;
  throw ConfigError("unknown rho_tilde weight '" + std::string(name) + "'");
}

double rho_tilde_weight(const PsiEnvelope& psi, RhoTildeWeight kind, const AlgElem& x, const AlgElem& z) {
  const AlgElem zero(x.dim());
  const double first = kind == RhoTildeWeight::psi_xx_z0 ? psi(x, x) : psi(x, zero);
  return first * psi(z, zero);
}

RhoTildeValue rho_tilde_from(const std::vector<double>& weights, const std::vector<double>& rho_values) {
  if (weights.size() != rho_values.size()) throw PreconditionError("rho_tilde: weights and values differ in size");
  RhoTildeValue out;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] > 0.0) {
      ++out.effective_probes;
      const double ratio = rho_values[i] / weights[i];
      if (!out.infinite && ratio > out.value) {
        out.value = ratio;
        out.witness = i;
      }
    } else if (rho_values[i] > kZeroDefect && !out.infinite) {
      out.infinite = true;
      out.witness = i;
    }
  }
  if (out.effective_probes == 0 && !out.infinite) {
    throw PreconditionError("rho_tilde: no probe has positive weight");
  }
  if (out.infinite) out.value = std::numeric_limits<double>::infinity();
  return out;
}

RhoTildeValue rho_tilde(const ModularSpec& rho, const PsiEnvelope& psi, RhoTildeWeight weight, const BiEval& delta,
                        const ProbeSet& probes) {
  std::vector<double> weights, values;
  weights.reserve(probes.size());
  values.reserve(probes.size());
  for (const auto& pr : probes.points()) {
    weights.push_back(rho_tilde_weight(psi, weight, pr.x, pr.z));
    values.push_back(rho(delta(pr.x, pr.z)));
  }
  return rho_tilde_from(weights, values);
}

BiEval direct_step(BiEval f, Direction direction) {
  if (direction == Direction::ascending) {
    return [f = std::move(f)](const AlgElem& x, const AlgElem& z) { return 0.5 * f(2.0 * x, z); };
  }
  return [f = std::move(f)](const AlgElem& x, const AlgElem& z) { return 2.0 * f(0.5 * x, z); };
}

VecX scaled_iterate(const BiEval& f, Direction direction, int level, const AlgElem& x, const AlgElem& z) {
  if (level == 0) return f(x, z);
  const double up = std::ldexp(1.0, level);
  const double down = std::ldexp(1.0, -level);
  if (direction == Direction::ascending) return down * f(up * x, z);
  return up * f(down * x, z);
}

PsiLawReport check_psi_law(const PsiEnvelope& psi, const ProbeSet& probes) {
  constexpr int kMaxLevels = 256;
  constexpr double kLawTol = 1e-12;
  constexpr double kDecay = 1e-9;

  PsiLawReport r;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const auto& pr = probes[i];
    const double base = psi(pr.x, pr.x);
    const double doubled = psi(2.0 * pr.x, 2.0 * pr.x);
    double lhs = 0.0, rhs = 0.0;
    if (psi.direction() == Direction::ascending) {
      lhs = doubled;
      rhs = 2.0 * psi.L() * base;
    } else {
      lhs = base;
      rhs = 0.5 * psi.L() * doubled;
    }
    const double margin = (lhs - rhs) / std::max(1.0, std::abs(rhs));
    if (margin > r.worst_law_margin) {
      r.worst_law_margin = margin;
      r.law_witness = i;
    }

    const auto term = [&](int n) {
      if (psi.direction() == Direction::ascending) {
        const double s = std::ldexp(1.0, n);
        return psi(s * pr.x, s * pr.y) / s;
      }
      const double s = std::ldexp(1.0, -n);
      return psi(s * pr.x, s * pr.x) / s;
    };
    const double first = term(0);
    if (!(first > 0.0)) continue;
    double prev = first;
    int reached = -1;
    for (int n = 1; n <= kMaxLevels; ++n) {
      const double t = term(n);
      if (!(t <= prev * (1.0 + 1e-12))) {
        reached = -1;
        break;
      }
      prev = t;
      if (t <= kDecay * first) {
        reached = n;
        break;
      }
    }
    const int levels = reached < 0 ? kMaxLevels + 1 : reached;
    if (levels > r.worst_limit_levels) {
      r.worst_limit_levels = levels;
      r.limit_witness = i;
    }
  }
  r.law_ok = r.worst_law_margin <= kLawTol;
  r.limit_ok = r.worst_limit_levels <= kMaxLevels;
  return r;
}

TabulatedPerturbation::TabulatedPerturbation(PsiEnvelope psi, RhoTildeWeight weight, std::size_t dim_a,
                                             std::size_t dim_x, std::uint64_t seed)
    : psi_(std::move(psi)), weight_(weight), dim_a_(dim_a), dim_x_(dim_x) {
  const std::size_t cells = 4 * dim_a;
  table_.reserve(cells * cells);
  Stream rng(seed);
  for (std::size_t k = 0; k < cells * cells; ++k) table_.push_back(rng.disc_vector(dim_x, 1.0));
}

std::size_t TabulatedPerturbation::cell(const AlgElem& v) {
  std::size_t best = 0;
  double best_abs = -1.0;
  for (std::size_t i = 0; i < v.dim(); ++i) {
    const double a = std::abs(v[i]);
    if (a > best_abs) {
      best_abs = a;
      best = i;
    }
  }
  if (best_abs <= 0.0) return 0;
  const double angle = std::arg(v[best]) + std::numbers::pi;  // [0, 2pi]
  const auto quadrant = static_cast<std::size_t>(std::floor(angle / (std::numbers::pi / 2.0))) % 4;
  return 4 * best + quadrant;
}

VecX TabulatedPerturbation::operator()(const AlgElem& x, const AlgElem& z) const {
  const std::size_t cells = 4 * dim_a_;
  const VecX& entry = table_[cell(x) * cells + cell(z)];
  return rho_tilde_weight(psi_, weight_, x, z) * entry;
}

BiEval TabulatedPerturbation::evaluator() const {
  auto self = std::make_shared<const TabulatedPerturbation>(*this);
  return [self](const AlgElem& x, const AlgElem& z) { return (*self)(x, z); };
}

}  // namespace modstab
