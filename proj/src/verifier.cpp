#include "modstab/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "modstab/rng.hpp"

namespace modstab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

CheckRecord make_record(std::string name, std::size_t id, double lhs, double rhs, double tol) {
  CheckRecord r;
  r.check_name = std::move(name);
  r.probe_id = id;
  r.lhs = lhs;
  r.rhs = rhs;
  r.margin = lhs - rhs;
  r.pass = r.margin <= tol;
  return r;
}

CheckRecord abort_record(std::string name, std::size_t id, const std::exception& e) {
  CheckRecord r;
  r.check_name = std::move(name);
  r.probe_id = id;
  r.lhs = r.rhs = r.margin = kNaN;
  r.pass = false;
  r.note = std::string("aborted: ") + e.what();
  return r;
}

void require_s(Scalar s) {
  if (!(std::abs(s) < 1.0)) throw ConfigError("s must satisfy |s| < 1, got |s| = " + std::to_string(std::abs(s)));
}

void require_boundary(const BiMap& f) {
  if (!f.zero_boundary()) throw PreconditionError("map '" + f.name() + "' does not vanish on the boundary");
}

double envelope(const std::optional<PsiEnvelope>& psi, const Probe& pr) {
  return psi ? (*psi)(pr.x, pr.y) * (*psi)(pr.z, pr.w) : 0.0;
}

// Defect vectors of the two inequalities at one probe: (lhs argument, s-bracket).
std::pair<VecX, VecX> terms_a(const BiEval& f, const Probe& pr) {
  const auto& [x, y, z, w, l, kind] = pr;
  const AlgElem sp = x + y, sm = x - y, zp = z + w, zm = z - w;
  const VecX fxz = f(x, z);
  VecX lhs = f(l * sp, zp) + f(l * sp, zm) + f(l * sm, zp) + f(l * sm, zm) - (4.0 * l) * fxz;
  VecX bracket = f(0.5 * sp, zm) + f(0.5 * sm, zp) - fxz + f(y, w);
  return {std::move(lhs), std::move(bracket)};
}

std::pair<VecX, VecX> terms_b(const BiEval& f, const Probe& pr) {
  const auto& [x, y, z, w, l, kind] = pr;
  const AlgElem sp = x + y, sm = x - y, zp = z + w, zm = z - w;
  const VecX fxz = f(x, z);
  VecX lhs = 4.0 * (f((0.5 * l) * sp, zm) + f((0.5 * l) * sm, zp) - l * fxz + l * f(y, w));
  VecX bracket = f(sp, zp) + f(sp, zm) + f(sm, zp) + f(sm, zm) - 4.0 * fxz;
  return {std::move(lhs), std::move(bracket)};
}

template <class Terms>
std::vector<CheckRecord> check_inequality(const char* name, Terms terms, double s_scale, const BiEval& f,
                                          const ModularSpec& rho, Scalar s, const std::optional<PsiEnvelope>& psi,
                                          const ProbeSet& probes, double tol) {
  require_s(s);
  std::vector<CheckRecord> out;
  out.reserve(probes.size());
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const auto& pr = probes[i];
    try {
      auto [lhs_vec, bracket] = terms(f, pr);
      const double lhs = rho(lhs_vec);
      const double rhs = rho((s_scale * s) * bracket) + envelope(psi, pr);
      if (!std::isfinite(lhs) || !std::isfinite(rhs)) throw NonFiniteError("modular value is not finite");
      out.push_back(make_record(name, i, lhs, rhs, tol));
    } catch (const NonFiniteError& e) {
      out.push_back(abort_record(name, i, e));
    }
  }
  return out;
}

template <class Terms>
std::vector<double> excess(Terms terms, double s_scale, const BiEval& f, const ModularSpec& rho, Scalar s,
                           const ProbeSet& probes) {
  require_s(s);
  std::vector<double> out;
  out.reserve(probes.size());
  for (const auto& pr : probes.points()) {
    auto [lhs_vec, bracket] = terms(f, pr);
    out.push_back(rho(lhs_vec) - rho((s_scale * s) * bracket));
  }
  return out;
}

}  // namespace

bool all_pass(const std::vector<CheckRecord>& records) {
  return std::all_of(records.begin(), records.end(), [](const CheckRecord& r) { return r.pass; });
}

double worst_margin(const std::vector<CheckRecord>& records) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& r : records) {
    if (std::isnan(r.margin)) return kNaN;
    worst = std::max(worst, r.margin);
  }
  return worst;
}

std::vector<CheckRecord> check_inequality_a(const BiEval& f, const ModularSpec& rho, Scalar s,
                                            const std::optional<PsiEnvelope>& psi, const ProbeSet& probes,
                                            double tol) {
  return check_inequality("inequality_A", terms_a, 4.0, f, rho, s, psi, probes, tol);
}

std::vector<CheckRecord> check_inequality_a(const BiMap& f, const ModularSpec& rho, Scalar s,
                                            const std::optional<PsiEnvelope>& psi, const ProbeSet& probes,
                                            double tol) {
  require_boundary(f);
  return check_inequality_a(f.evaluator(), rho, s, psi, probes, tol);
}

std::vector<CheckRecord> check_inequality_b(const BiEval& f, const ModularSpec& rho, Scalar s,
                                            const std::optional<PsiEnvelope>& psi, const ProbeSet& probes,
                                            double tol) {
  return check_inequality("inequality_B", terms_b, 1.0, f, rho, s, psi, probes, tol);
}

std::vector<CheckRecord> check_inequality_b(const BiMap& f, const ModularSpec& rho, Scalar s,
                                            const std::optional<PsiEnvelope>& psi, const ProbeSet& probes,
                                            double tol) {
  require_boundary(f);
  return check_inequality_b(f.evaluator(), rho, s, psi, probes, tol);
}

std::vector<double> inequality_a_excess(const BiEval& f, const ModularSpec& rho, Scalar s, const ProbeSet& probes) {
  return excess(terms_a, 4.0, f, rho, s, probes);
}

std::vector<double> inequality_b_excess(const BiEval& f, const ModularSpec& rho, Scalar s, const ProbeSet& probes) {
  return excess(terms_b, 1.0, f, rho, s, probes);
}

BiadditivityReport check_biadditivity(const BiEval& f, const ModularSpec& rho, const ProbeSet& probes) {
  BiadditivityReport r;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const auto& pr = probes[i];
    const VecX fxz = f(pr.x, pr.z);
    const double one = rho(f(pr.x + pr.y, pr.z) - fxz - f(pr.y, pr.z));
    const double two = rho(f(pr.x, pr.z + pr.w) - fxz - f(pr.x, pr.w));
    if (one > r.slot_one) {
      r.slot_one = one;
      r.slot_one_witness = i;
    }
    if (two > r.slot_two) {
      r.slot_two = two;
      r.slot_two_witness = i;
    }
  }
  return r;
}

std::vector<Scalar> linearity_scalars(std::uint64_t seed, std::size_t n_generic) {
  std::vector<Scalar> out = sample_unit_circle(seed, 20);
  Stream rng = Stream::substream(seed, 0x6c696eULL);
  for (std::size_t k = 0; k < n_generic; ++k) out.push_back(rng.uniform(1.0, 4.0) * rng.unit_complex());
  if (n_generic > 0) out.back() = Scalar{0.0, 4.0};
  return out;
}

LinearityReport check_first_slot_linearity(const BiEval& f, const ModularSpec& rho, const std::vector<Scalar>& scalars,
                                           const ProbeSet& probes, double tol) {
  LinearityReport rep;
  for (const Scalar lambda : scalars) {
    LinearityEntry e;
    e.lambda = lambda;
    e.unimodular = std::abs(std::abs(lambda) - 1.0) <= 1e-12;
    UnimodularTriple mu{};
    if (!e.unimodular) {
      e.M = static_cast<int>(std::floor(4.0 * std::abs(lambda))) + 1;
      mu = three_unimodular_decomposition(3.0 * lambda / static_cast<double>(e.M));
    }
    const std::string name = e.unimodular ? "linearity_unimodular" : "linearity_generic";
    for (std::size_t i = 0; i < probes.size(); ++i) {
      const auto& pr = probes[i];
      const VecX flx = f(lambda * pr.x, pr.z);
      const double direct = rho(flx - lambda * f(pr.x, pr.z));
      double route = 0.0;
      if (!e.unimodular) {
        const VecX sum = f(mu.mu1 * pr.x, pr.z) + f(mu.mu2 * pr.x, pr.z) + f(mu.mu3 * pr.x, pr.z);
        route = rho(flx - (e.M / 3.0) * sum);
      }
      e.direct = std::max(e.direct, direct);
      e.route = std::max(e.route, route);
      rep.records.push_back(make_record(name, i, std::max(direct, route), 0.0, e.unimodular ? tol : tol * e.M));
    }
    if (e.unimodular) {
      rep.worst_unimodular = std::max(rep.worst_unimodular, e.direct);
    } else {
      rep.worst_generic = std::max(rep.worst_generic, std::max(e.direct, e.route));
    }
    rep.entries.push_back(e);
  }
  return rep;
}

std::vector<CheckRecord> check_stability_bound(const BiEval& d, const BiEval& D, const PsiEnvelope& psi,
                                               const ModularSpec& rho, const ProbeSet& probes, double tol) {
  std::vector<CheckRecord> out;
  out.reserve(probes.size());
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const auto& pr = probes[i];
    const AlgElem zero(pr.z.dim());
    const double bound = psi(pr.x, pr.x) * psi(pr.z, zero) / (2.0 * (1.0 - psi.L()));
    try {
      out.push_back(make_record("stability_bound", i, rho(D(pr.x, pr.z) - d(pr.x, pr.z)), bound, tol));
    } catch (const NonFiniteError& e) {
      out.push_back(abort_record("stability_bound", i, e));
    }
  }
  return out;
}

std::vector<CheckRecord> check_biderivation(const BiEval& f, const ModularSpec& rho, const AlgebraSpec& alg,
                                            const std::optional<PsiEnvelope>& psi, const ProbeSet& probes,
                                            double tol) {
  if (probes.size() > 0 && probes.dim() != alg.dim()) {
    throw ConfigError("biderivation check: probes do not live in the algebra");
  }
  std::vector<CheckRecord> one, two;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const auto& [x, y, z, w, l, kind] = probes[i];
    const VecX fxz = f(x, z);
    if (fxz.dim() != alg.dim()) throw ConfigError("biderivation check needs the value space to be the algebra");
    const double env = envelope(psi, probes[i]);
    const VecX r1 = f(alg.mul(x, y), z) - alg.mul(fxz, y) - alg.mul(x, f(y, z));
    const VecX r2 = f(x, alg.mul(z, w)) - alg.mul(fxz, w) - alg.mul(z, f(x, w));
    one.push_back(make_record("biderivation_slot_one", i, rho(r1), env, tol));
    two.push_back(make_record("biderivation_slot_two", i, rho(r2), env, tol));
  }
  one.insert(one.end(), two.begin(), two.end());
  return one;
}

std::vector<CheckRecord> check_biderivation(const BiMap& f, const ModularSpec& rho, const AlgebraSpec& alg,
                                            const std::optional<PsiEnvelope>& psi, const ProbeSet& probes,
                                            double tol) {
  if (f.dim_a() != alg.dim() || f.dim_x() != alg.dim()) {
    throw ConfigError("biderivation check needs a map A x A -> A");
  }
  return check_biderivation(f.evaluator(), rho, alg, psi, probes, tol);
}

SuperstabilityReport check_superstability(const BiEval& d, const ModularSpec& rho, const ProbeSet& probes,
                                          double tol) {
  SuperstabilityReport r;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const auto& pr = probes[i];
    const double v = rho(d(2.0 * pr.x, pr.z) - 2.0 * d(pr.x, pr.z));
    if (v > r.sup) {
      r.sup = v;
      r.witness = i;
    }
  }
  r.pass = r.sup <= tol;
  return r;
}

std::vector<CheckRecord> check_identity(const std::string& name, const BiEval& a, const BiEval& b,
                                        const ModularSpec& rho, const ProbeSet& probes, double tol) {
  std::vector<CheckRecord> out;
  out.reserve(probes.size());
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const auto& pr = probes[i];
    out.push_back(make_record(name, i, rho(a(pr.x, pr.z) - b(pr.x, pr.z)), 0.0, tol));
  }
  return out;
}

ThetaCalibration calibrate_theta(const BiEval& f, const ModularSpec& rho, Scalar s, InequalityKind which, double p,
                                 const ModularSpec& norm_modular, const ProbeSet& probes) {
  const std::vector<double> ex =
      which == InequalityKind::A ? inequality_a_excess(f, rho, s, probes) : inequality_b_excess(f, rho, s, probes);
  const auto np = [&](const AlgElem& v) { return std::pow(luxemburg_norm_fast(norm_modular, v), p); };
  ThetaCalibration c;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    if (!(ex[i] > 1e-12)) continue;
    const auto& pr = probes[i];
    const double base = (np(pr.x) + np(pr.y)) * (np(pr.z) + np(pr.w));
    if (!(base > 0.0)) {
      c.infinite = true;
      c.witness = i;
      c.theta_star = std::numeric_limits<double>::infinity();
      return c;
    }
    if (ex[i] / base > c.theta_star) {
      c.theta_star = ex[i] / base;
      c.witness = i;
    }
  }
  return c;
}

}  // namespace modstab
