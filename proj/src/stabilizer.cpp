#include "modstab/stabilizer.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace modstab {

OverflowAbort::OverflowAbort(int level, std::size_t probe, double magnitude)
    : Error("magnitude cap exceeded at level " + std::to_string(level) + ", probe " + std::to_string(probe) +
            " (|value| = " + std::to_string(magnitude) + ")"),
      level_(level),
      probe_(probe),
      magnitude_(magnitude) {}

double hyers_bound(const PsiEnvelope& psi, const AlgElem& x, const AlgElem& z) {
  const AlgElem zero(z.dim());
  return psi(x, x) * psi(z, zero) / (2.0 * (1.0 - psi.L()));
}

double estimate_contraction(std::span<const double> deltas) {
  std::vector<double> usable;
  for (double d : deltas) {
    if (std::isfinite(d) && d > 0.0) usable.push_back(d);
  }
  if (usable.empty()) return 0.0;
  if (deltas.size() < 3 || usable.size() < 2) {
    throw PreconditionError("estimate_contraction needs at least three deltas, two of them nonzero");
  }
  double log_sum = 0.0;
  for (std::size_t i = 1; i < usable.size(); ++i) log_sum += std::log(usable[i] / usable[i - 1]);
  return std::exp(log_sum / static_cast<double>(usable.size() - 1));
}

namespace {

// Value of the level-n iterate at one probe, with the magnitude cap enforced
// on the scaled argument and on the raw value.
VecX capped_iterate(const BiMap& d, Direction dir, int n, const AlgElem& x, const AlgElem& z, double cap,
                    std::size_t probe) {
  const double up = std::ldexp(1.0, n);
  const double down = std::ldexp(1.0, -n);
  const AlgElem arg = n == 0 ? x : (dir == Direction::ascending ? up * x : down * x);
  if (arg.max_abs() > cap) throw OverflowAbort(n, probe, arg.max_abs());
  VecX raw = d(arg, z);
  if (raw.max_abs() > cap) throw OverflowAbort(n, probe, raw.max_abs());
  if (n == 0) return raw;
  return dir == Direction::ascending ? down * std::move(raw) : up * std::move(raw);
}

void check_preconditions(const BiMap& d, const PsiEnvelope& psi, const StabilizeConfig& cfg) {
  if (cfg.n_max < 1) throw PreconditionError("n_max must be >= 1");
  if (!(cfg.tol > 0.0)) throw PreconditionError("tol must be positive");
  if (cfg.start_level < 0 || cfg.start_level >= cfg.n_max) {
    throw PreconditionError("start level must lie in [0, n_max)");
  }
  if (cfg.probes.size() == 0) throw PreconditionError("stabilize needs a nonempty probe set");
  if (!d.zero_boundary()) throw PreconditionError("map '" + d.name() + "' does not vanish on the boundary");
  if (psi.direction() != cfg.direction) throw PreconditionError("psi direction differs from the iteration direction");
  const PsiLawReport law = check_psi_law(psi, cfg.probes);
  if (!law.pass()) {
    throw PreconditionError("psi violates its scaling law (worst margin " + std::to_string(law.worst_law_margin) +
                            ", limit levels " + std::to_string(law.worst_limit_levels) + ")");
  }
}

struct ProbeCache {
  double psi_z0 = 0.0;
  double final_bound = 0.0;
  std::vector<double> a;  // a[i], i = 1..n_max: psi factors of the partial sums
};

}  // namespace

StabilizeOutcome stabilize(const BiMap& d, const PsiEnvelope& psi, const ModularSpec& rho,
                           const StabilizeConfig& cfg) {
  check_preconditions(d, psi, cfg);
  const auto& probes = cfg.probes;
  const std::size_t P = probes.size();
  const Direction dir = cfg.direction;
  const double kappa = rho.kappa();
  const double L = psi.L();

  std::vector<ProbeCache> cache(P);
  std::vector<double> weights(P);
  for (std::size_t p = 0; p < P; ++p) {
    const auto& pr = probes[p];
    const AlgElem zero(pr.x.dim());
    auto& c = cache[p];
    c.psi_z0 = psi(pr.z, zero);
    c.final_bound = hyers_bound(psi, pr.x, pr.z);
    weights[p] = rho_tilde_weight(psi, cfg.weight, pr.x, pr.z);
    c.a.assign(static_cast<std::size_t>(cfg.n_max) + 1, 0.0);
    for (int i = 1; i <= cfg.n_max; ++i) {
      double f = 0.0;
      if (dir == Direction::ascending) {
        const AlgElem s = std::ldexp(1.0, i - 1) * pr.x;
        f = psi(s, s);
      } else if (cfg.weight == RhoTildeWeight::psi_xx_z0) {
        const AlgElem s = std::ldexp(1.0, -i) * pr.x;
        f = psi(s, s);
      } else {
        f = psi(std::ldexp(1.0, -(i - 1)) * pr.x, zero);
      }
      c.a[static_cast<std::size_t>(i)] = f * c.psi_z0;
    }
  }

  StabilizeOutcome out;
  out.direction = dir;
  out.start_level = cfg.start_level;
  out.orbit_bound = 1.0 / (1.0 - L);

  std::vector<VecX> base(P);
  std::vector<std::vector<VecX>> history;
  history.emplace_back(P);
  for (std::size_t p = 0; p < P; ++p) {
    base[p] = capped_iterate(d, dir, 0, probes[p].x, probes[p].z, cfg.magnitude_cap, p);
    history.back()[p] = cfg.start_level == 0
                            ? base[p]
                            : capped_iterate(d, dir, cfg.start_level, probes[p].x, probes[p].z, cfg.magnitude_cap, p);
  }

  const auto telescope = [&](int n, const std::vector<VecX>& current) {
    TelescopingLevel t;
    t.level = n;
    const double nn = n;
    for (std::size_t p = 0; p < P; ++p) {
      const auto& c = cache[p];
      const double lhs = rho(current[p] - base[p]);
      t.lhs_sup = std::max(t.lhs_sup, lhs);
      double printed = 0.0, gated = 0.0;
      if (dir == Direction::ascending) {
        for (int i = 1; i <= n; ++i) {
          printed += c.a[static_cast<std::size_t>(i)];
          gated += std::ldexp(c.a[static_cast<std::size_t>(i)], -i);
        }
        printed = std::ldexp(printed, -n);
      } else {
        for (int i = 2; i <= n; ++i) {
          gated += std::pow(kappa, nn) / std::ldexp(1.0, n - i + 1) * c.a[static_cast<std::size_t>(i)];
        }
        gated += std::pow(kappa, nn - 1.0) / std::ldexp(1.0, n - 1) * c.a[1];
        printed = gated;
      }
      t.printed_margin = std::max(t.printed_margin, lhs - printed);
      if (lhs - gated > t.gated_margin) {
        t.gated_margin = lhs - gated;
        t.gated_witness = p;
      }
      if (lhs - c.final_bound > t.final_margin) {
        t.final_margin = lhs - c.final_bound;
        t.final_witness = p;
      }
    }
    out.telescoping.push_back(t);
  };

  if (cfg.start_level > 0) telescope(cfg.start_level, history.back());

  int n = cfg.start_level;
  while (n < cfg.n_max) {
    ++n;
    std::vector<VecX> current(P);
    std::vector<double> dist(P);
    double sup = 0.0;
    for (std::size_t p = 0; p < P; ++p) {
      current[p] = capped_iterate(d, dir, n, probes[p].x, probes[p].z, cfg.magnitude_cap, p);
      dist[p] = rho(current[p] - history.back()[p]);
      sup = std::max(sup, dist[p]);
    }
    out.levels.push_back(n);
    out.per_iter_sup_deltas.push_back(sup);
    out.per_iter_deltas.push_back(rho_tilde_from(weights, dist));
    telescope(n, current);
    history.push_back(std::move(current));
    if (sup < cfg.tol) {
      out.converged = true;
      break;
    }
  }
  out.N_converged = n;

  std::vector<double> rt;
  for (const auto& v : out.per_iter_deltas) rt.push_back(v.as_double());
  try {
    out.contraction_estimate = estimate_contraction(rt);
  } catch (const PreconditionError&) {
    out.contraction_estimate.reset();
  }

  const auto& final_values = history.back();
  for (std::size_t p = 0; p < P; ++p) {
    const double margin = rho(final_values[p] - base[p]) - cache[p].final_bound;
    if (margin > out.bound_margin) {
      out.bound_margin = margin;
      out.bound_witness = p;
    }
  }

  std::vector<double> dist(P);
  for (std::size_t a = 0; a < history.size(); ++a) {
    for (std::size_t b = a + 1; b < history.size(); ++b) {
      for (std::size_t p = 0; p < P; ++p) dist[p] = rho(history[a][p] - history[b][p]);
      out.orbit_sup = std::max(out.orbit_sup, rho_tilde_from(weights, dist).as_double());
    }
  }

  auto frozen = std::make_shared<const BiMap>(d);
  const int N = out.N_converged;
  out.D = [frozen, dir, N](const AlgElem& x, const AlgElem& z) {
    return scaled_iterate([&](const AlgElem& a, const AlgElem& b) { return (*frozen)(a, b); }, dir, N, x, z);
  };
  return out;
}

UniquenessReport check_uniqueness(const BiMap& d, const PsiEnvelope& psi, const ModularSpec& rho,
                                  const StabilizeConfig& cfg, int trials) {
  UniquenessReport rep;
  rep.threshold = 10.0 * cfg.tol;
  const StabilizeOutcome ref = stabilize(d, psi, rho, cfg);
  const auto& probes = cfg.probes;
  std::vector<VecX> ref_values;
  for (const auto& pr : probes.points()) ref_values.push_back(ref.D(pr.x, pr.z));

  std::vector<std::pair<std::string, StabilizeConfig>> variants;
  for (int k = 1; k <= trials; ++k) {
    StabilizeConfig c = cfg;
    c.start_level = k;
    if (c.start_level < c.n_max) variants.emplace_back("start=" + std::to_string(k), c);
  }
  for (int delta : {-5, 5}) {
    StabilizeConfig c = cfg;
    c.n_max = std::max(1, cfg.n_max + delta);
    c.start_level = std::min(c.start_level, c.n_max - 1);
    variants.emplace_back("n_max=" + std::to_string(c.n_max), c);
  }

  rep.pass = ref.converged;
  for (auto& [label, c] : variants) {
    UniquenessVariant v;
    v.label = label;
    v.start_level = c.start_level;
    v.n_max = c.n_max;
    const StabilizeOutcome o = stabilize(d, psi, rho, c);
    v.N_converged = o.N_converged;
    v.converged = o.converged;
    for (std::size_t p = 0; p < probes.size(); ++p) {
      v.disagreement = std::max(v.disagreement, rho(o.D(probes[p].x, probes[p].z) - ref_values[p]));
    }
    rep.worst = std::max(rep.worst, v.disagreement);
    rep.variants.push_back(std::move(v));
  }
  rep.pass = rep.pass && rep.worst <= rep.threshold;
  return rep;
}

}  // namespace modstab
