#include "modstab/modular.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "modstab/rng.hpp"

namespace modstab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_kappa(double kappa) {
  if (!(kappa > 0.0 && kappa <= 2.0)) {
    throw ConfigError("Delta_2 constant kappa must lie in (0, 2], got " + std::to_string(kappa));
  }
}

ModularSpec::Phi preset_phi(OrliczPreset preset) {
  switch (preset) {
    case OrliczPreset::square:
      return [](double t) { return t * t; };
    case OrliczPreset::exp_minus_one:
      return [](double t) { return std::expm1(t); };
    case OrliczPreset::linear:
      return [](double t) { return t; };
  }
  throw ConfigError("unknown Orlicz preset");
}

}  // namespace

std::string_view to_string(OrliczPreset preset) {
  switch (preset) {
    case OrliczPreset::square:
      return "square";
    case OrliczPreset::exp_minus_one:
      return "exp_minus_one";
    case OrliczPreset::linear:
      return "linear";
  }
  return "?";
}

OrliczPreset parse_orlicz_preset(std::string_view name) {
  if (name == "square") return OrliczPreset::square;
  if (name == "exp_minus_one") return OrliczPreset::exp_minus_one;
  if (name == "linear") return OrliczPreset::linear;
  throw ConfigError("unknown Orlicz phi preset '" + std::string(name) + "'");
}

ModularSpec ModularSpec::norm(double kappa) {
  check_kappa(kappa);
  ModularSpec m;
  m.kind_ = ModularKind::norm;
  m.kappa_ = kappa;
  m.name_ = "norm";
  return m;
}

ModularSpec ModularSpec::power(double p, double kappa) {
  check_kappa(kappa);
  if (!(p >= 1.0) || !std::isfinite(p)) {
    throw ConfigError("power modular needs a finite exponent p >= 1, got " + std::to_string(p));
  }
  ModularSpec m;
  m.kind_ = ModularKind::power;
  m.p_ = p;
  m.kappa_ = kappa;
  m.name_ = "power(" + std::to_string(p) + ")";
  return m;
}

ModularSpec ModularSpec::orlicz(OrliczPreset preset, double kappa) {
  check_kappa(kappa);
  ModularSpec m;
  m.kind_ = ModularKind::orlicz;
  m.kappa_ = kappa;
  m.preset_ = preset;
  m.phi_ = preset_phi(preset);
  m.name_ = "orlicz(" + std::string(to_string(preset)) + ")";
  return m;
}

ModularSpec ModularSpec::orlicz_custom(std::string name, Phi phi, bool convex, double kappa) {
  check_kappa(kappa);
  if (!phi) throw ConfigError("custom Orlicz modular needs a phi function");
  ModularSpec m;
  m.kind_ = ModularKind::orlicz;
  m.convex_ = convex;
  m.kappa_ = kappa;
  m.phi_ = std::move(phi);
  m.name_ = std::move(name);
  return m;
}

ModularSpec ModularSpec::with_dim(std::size_t dim) const {
  if (dim == 0) throw ConfigError("modular space dimension must be positive");
  ModularSpec m(*this);
  m.dim_ = dim;
  return m;
}

double ModularSpec::operator()(const VecX& x) const {
  if (dim_ && x.dim() != *dim_) {
    throw ConfigError("modular expects dimension " + std::to_string(*dim_) + ", got " +
                      std::to_string(x.dim()));
  }
  switch (kind_) {
    case ModularKind::norm:
      return x.euclidean();
    case ModularKind::power: {
      double sum = 0.0;
      for (const auto& c : x.coords()) sum += p_ == 1.0 ? std::abs(c) : std::pow(std::abs(c), p_);
      return sum;
    }
    case ModularKind::orlicz: {
      double sum = 0.0;
      for (const auto& c : x.coords()) {
        const double v = phi_(std::abs(c));
        if (std::isnan(v) || v < 0.0) {
          throw InvalidModularError("Orlicz function of '" + name_ + "' returned " + std::to_string(v));
        }
        sum += v;
      }
      return sum;
    }
  }
  return kInf;
}

double eval_modular(const ModularSpec& m, const VecX& x) { return m(x); }

double luxemburg_norm(const ModularSpec& m, const VecX& x, double tol) {
  if (!m.convex()) throw UnsupportedError("Luxemburg norm requires a convex modular");
  if (!(tol > 0.0)) throw ConfigError("Luxemburg tolerance must be positive");
  if (x.is_zero()) return 0.0;

  constexpr double kCap = 0x1.0p64;
  const auto inside = [&](double lambda) { return m(x / lambda) <= 1.0; };

  // rho(x / lambda) is non-increasing in lambda, so the predicate is monotone.
  double lo = 0.0;
  double hi = 1.0;
  if (inside(hi)) {
    while (inside(hi / 2.0)) {
      hi /= 2.0;
      if (hi <= tol) return hi / 2.0;
    }
    lo = hi / 2.0;
  } else {
    while (!inside(hi)) {
      hi *= 2.0;
      if (hi > kCap) throw DivergenceError("Luxemburg bracket not found below 2^64");
    }
    lo = hi / 2.0;
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (inside(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double luxemburg_norm_fast(const ModularSpec& m, const VecX& x, double tol) {
  switch (m.kind()) {
    case ModularKind::norm:
      return x.euclidean();
    case ModularKind::power: {
      if (m.p() == 1.0) return m(x);
      const double scale = x.max_abs();
      if (scale == 0.0) return 0.0;
      double sum = 0.0;
      for (const auto& c : x.coords()) sum += std::pow(std::abs(c) / scale, m.p());
      return scale * std::pow(sum, 1.0 / m.p());
    }
    case ModularKind::orlicz:
      break;
  }
  return luxemburg_norm(m, x, tol);
}

const AxiomEntry& AxiomReport::at(std::string_view axiom) const {
  for (const auto& e : entries) {
    if (e.axiom == axiom) return e;
  }
  throw PreconditionError("axiom " + std::string(axiom) + " not in report");
}

bool AxiomReport::pass(double tol) const {
  return std::all_of(entries.begin(), entries.end(),
                     [tol](const AxiomEntry& e) { return !e.checked || e.worst_margin <= tol; });
}

std::vector<AxiomSample> make_axiom_samples(std::size_t dim, std::size_t count, std::uint64_t seed,
                                            double radius) {
  static const Scalar corners[] = {{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}};
  std::vector<AxiomSample> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Stream rng = Stream::substream(seed, k);
    AxiomSample s;
    s.x = rng.ball_vector(dim, radius);
    s.y = rng.ball_vector(dim, radius);
    s.alpha = k == 4 ? 0.0 : (k == 5 ? 1.0 : rng.uniform());
    s.beta = 1.0 - s.alpha;
    s.unimodular = k < 4 ? corners[k] : rng.unit_complex();
    out.push_back(std::move(s));
  }
  return out;
}

AxiomReport check_modular_axioms(const ModularSpec& m, const std::vector<AxiomSample>& samples) {
  AxiomEntry zero{"(i)"}, unimod{"(ii)"}, subadd{"(iii)"}, convex{"(iii)'"};
  zero.checked = unimod.checked = subadd.checked = true;
  convex.checked = m.convex();

  const auto update = [](AxiomEntry& e, double margin, std::size_t k) {
    if (std::isnan(margin)) margin = kInf;
    if (margin > e.worst_margin) {
      e.worst_margin = margin;
      e.witness = k;
    }
  };
  // A modular vanishing on a nonzero vector is a discrete failure; it is
  // reported with unit margin so no tolerance can absorb it.
  const auto definiteness = [&](const VecX& v, double rho_v, std::size_t k) {
    if (v.is_zero()) {
      update(zero, rho_v, k);
    } else {
      update(zero, rho_v > 0.0 ? -rho_v : 1.0, k);
    }
  };

  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto& s = samples[k];
    const double rx = m(s.x);
    const double ry = m(s.y);
    if (k == 0) definiteness(VecX(s.x.dim()), m(VecX(s.x.dim())), k);
    definiteness(s.x, rx, k);
    definiteness(s.y, ry, k);

    const double rux = m(s.unimodular * s.x);
    update(unimod, rux == rx ? 0.0 : std::abs(rux - rx), k);

    const double rc = m(Scalar{s.alpha, 0.0} * s.x + Scalar{s.beta, 0.0} * s.y);
    update(subadd, rc - rx - ry, k);
    if (convex.checked) update(convex, rc - s.alpha * rx - s.beta * ry, k);
  }
  AxiomReport report;
  report.entries = {zero, unimod, subadd, convex};
  return report;
}

Delta2Result check_delta2(const ModularSpec& m, const std::vector<VecX>& samples) {
  if (samples.empty()) throw PreconditionError("check_delta2 needs at least one sample");
  Delta2Result r;
  for (const auto& x : samples) {
    if (x.is_zero()) throw PreconditionError("check_delta2 samples must be nonzero");
    const double rx = m(x);
    if (rx == 0.0) throw InvalidModularError("modular vanishes on nonzero vector " + to_string(x));
    r.kappa_hat = std::max(r.kappa_hat, m(2.0 * x) / rx);
  }
  r.pass = r.kappa_hat <= m.kappa() + 1e-9;
  return r;
}

bool RemarkReport::pass(double tol) const {
  if (monotone_margin > tol) return false;
  if (!convex_checked) return true;
  return scaling_margin <= tol && doubling_margin <= tol;
}

std::vector<RemarkSample> make_remark_samples(std::size_t dim, std::size_t count, std::uint64_t seed,
                                              double radius) {
  std::vector<RemarkSample> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Stream rng = Stream::substream(seed ^ 0x5eedULL, k);
    RemarkSample s;
    s.x = rng.ball_vector(dim, radius);
    s.b = rng.uniform(0.05, 2.0);
    s.a = s.b * rng.uniform(0.01, 0.99);
    s.alpha = rng.disc(1.0);
    out.push_back(std::move(s));
  }
  return out;
}

RemarkReport check_remark_properties(const ModularSpec& m, const std::vector<RemarkSample>& samples) {
  RemarkReport r;
  r.convex_checked = m.convex();
  for (const auto& s : samples) {
    if (!(s.a > 0.0 && s.a < s.b)) throw PreconditionError("remark samples need 0 < a < b");
    if (std::abs(s.alpha) > 1.0) throw PreconditionError("remark samples need |alpha| <= 1");
    r.monotone_margin = std::max(r.monotone_margin, m(s.a * s.x) - m(s.b * s.x));
    if (r.convex_checked) {
      const double rx = m(s.x);
      r.scaling_margin = std::max(r.scaling_margin, m(s.alpha * s.x) - std::abs(s.alpha) * rx);
      r.doubling_margin = std::max(r.doubling_margin, rx - 0.5 * m(2.0 * s.x));
    }
  }
  return r;
}

bool check_fatou(const ModularSpec& m, const std::vector<VecX>& seq, const VecX& limit) {
  if (seq.empty()) throw PreconditionError("Fatou check needs a non-empty sequence");

  std::vector<double> dist;
  dist.reserve(seq.size());
  for (const auto& x : seq) dist.push_back(m(x - limit));

  const bool all_zero = std::all_of(dist.begin(), dist.end(), [](double d) { return d == 0.0; });
  if (!all_zero) {
    for (std::size_t k = seq.size() / 2; k + 1 < seq.size(); ++k) {
      if (dist[k + 1] > dist[k] + 1e-15) {
        throw PreconditionError("sequence is not rho-convergent: tail distance increases at index " +
                                std::to_string(k + 1));
      }
    }
    if (dist.back() > 1e-2 * dist.front()) {
      throw PreconditionError("sequence is not rho-convergent: tail distance did not decay");
    }
  }

  const std::size_t window = std::max<std::size_t>(1, seq.size() / 10);
  double tail_min = kInf;
  for (std::size_t k = seq.size() - window; k < seq.size(); ++k) tail_min = std::min(tail_min, m(seq[k]));
  return m(limit) <= tail_min + 1e-9;
}

}  // namespace modstab
