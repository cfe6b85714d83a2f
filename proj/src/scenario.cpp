#include "modstab/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "modstab/rng.hpp"

namespace modstab {

namespace {

constexpr std::uint64_t kDefaultSeed = 20240601;
constexpr double kOrbitSlack = 1e-6;
constexpr double kBiadditivityDTol = 1e-8;
constexpr double kExactTol = 1e-12;

const std::set<std::string>& d_checks() {
  static const std::set<std::string> s = {"stabilize", "stability_bound", "biadditivity_D", "linearity_D",
                                          "telescoping", "bounded_orbit", "uniqueness", "superstable_identity"};
  return s;
}

const std::set<std::string>& map_checks() {
  static const std::set<std::string> s = {"inequality_A", "inequality_B", "biderivation", "biderivation_slot_two",
                                          "biadditivity", "superstability", "rho_tilde_contraction"};
  return s;
}

const std::set<std::string>& modular_checks() {
  static const std::set<std::string> s = {"modular_axioms", "delta2", "remark", "fatou", "luxemburg"};
  return s;
}

void allow_keys(const json& obj, std::initializer_list<std::string_view> keys, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : obj.items()) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
      throw ConfigError("unknown key '" + k + "' in " + where);
    }
  }
}

double number(const json& j, const std::string& what) {
  if (!j.is_number()) throw ConfigError(what + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(what + " must be finite");
  return v;
}

std::size_t count(const json& j, const std::string& what) {
  if (!j.is_number_integer() || j.get<long long>() <= 0) throw ConfigError(what + " must be a positive integer");
  return j.get<std::size_t>();
}

Scalar complex_value(const json& j, const std::string& what) {
  if (j.is_number()) return {number(j, what), 0.0};
  if (!j.is_array() || j.size() != 2) throw ConfigError(what + " must be [re, im]");
  return {number(j[0], what + ".re"), number(j[1], what + ".im")};
}

std::vector<Scalar> complex_list(const json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + " must be an array of [re, im]");
  std::vector<Scalar> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(complex_value(j[i], what + "[" + std::to_string(i) + "]"));
  return out;
}

std::string text(const json& j, const std::string& what) {
  if (!j.is_string()) throw ConfigError(what + " must be a string");
  return j.get<std::string>();
}

AlgebraSpec parse_algebra(const json& j) {
  if (j.is_string()) return AlgebraSpec::preset(j.get<std::string>());
  allow_keys(j, {"preset", "dim", "structure"}, "algebra");
  if (j.contains("preset")) {
    const std::size_t dim = j.contains("dim") ? count(j["dim"], "algebra.dim") : 0;
    return AlgebraSpec::preset(text(j["preset"], "algebra.preset"), dim);
  }
  if (!j.contains("dim") || !j.contains("structure")) throw ConfigError("algebra needs a preset or dim + structure");
  return AlgebraSpec::from_structure(count(j["dim"], "algebra.dim"), complex_list(j["structure"], "algebra.structure"));
}

BiMap parse_map(const json& j, const std::optional<AlgebraSpec>& alg, std::size_t dim) {
  allow_keys(j, {"kernel", "perturbation"}, "map");
  if (!j.contains("kernel")) throw ConfigError("map needs a kernel");
  const json& k = j["kernel"];
  allow_keys(k, {"preset", "c", "dim_x", "tensor"}, "map.kernel");
  std::optional<BiMap> m;
  if (k.contains("preset")) {
    const std::string preset = text(k["preset"], "map.kernel.preset");
    const Scalar c = k.contains("c") ? complex_value(k["c"], "map.kernel.c") : Scalar{1.0, 0.0};
    if (preset == "zero") {
      const std::size_t dx = k.contains("dim_x") ? count(k["dim_x"], "map.kernel.dim_x") : dim;
      m = BiMap::zero(dim, dx);
    } else {
      if (!alg) throw ConfigError("kernel preset '" + preset + "' needs an algebra");
      if (preset == "commutator") {
        m = BiMap::commutator(*alg, c);
      } else if (preset == "product") {
        m = BiMap::product(*alg, c);
      } else {
        throw ConfigError("unknown kernel preset '" + preset + "'");
      }
    }
  } else if (k.contains("tensor")) {
    const std::size_t dx = k.contains("dim_x") ? count(k["dim_x"], "map.kernel.dim_x") : dim;
    m = BiMap::tensor(dim, dx, complex_list(k["tensor"], "map.kernel.tensor"));
  } else {
    throw ConfigError("map.kernel needs a preset or a tensor");
  }
  if (j.contains("perturbation") && !j["perturbation"].is_null()) {
    const json& g = j["perturbation"];
    allow_keys(g, {"name", "epsilon", "p", "boundary_safe"}, "map.perturbation");
    Perturbation pert;
    pert.kind = parse_perturbation(text(g.value("name", json()), "map.perturbation.name"));
    pert.epsilon = g.contains("epsilon") ? number(g["epsilon"], "map.perturbation.epsilon") : 0.0;
    if (g.contains("p")) pert.p = number(g["p"], "map.perturbation.p");
    if (g.contains("boundary_safe")) {
      if (!g["boundary_safe"].is_boolean()) throw ConfigError("map.perturbation.boundary_safe must be a boolean");
      pert.boundary_safe = g["boundary_safe"].get<bool>();
    }
    m = m->with_perturbation(pert);
  }
  return *m;
}

PsiConfig parse_psi(const json& j) {
  allow_keys(j, {"theta", "p", "L", "direction", "calibrate_against", "calibration_probes", "safety"}, "psi");
  PsiConfig c;
  if (!j.contains("theta")) throw ConfigError("psi needs theta (a number or \"calibrate\")");
  if (j["theta"].is_string()) {
    if (j["theta"] != "calibrate") throw ConfigError("psi.theta must be a number or \"calibrate\"");
    c.calibrate = true;
  } else {
    c.theta = number(j["theta"], "psi.theta");
    if (c.theta < 0.0) throw ConfigError("psi.theta must be >= 0");
  }
  if (!j.contains("p")) throw ConfigError("psi needs p");
  c.p = number(j["p"], "psi.p");
  if (j.contains("L") && !j["L"].is_null()) c.L = number(j["L"], "psi.L");
  c.direction = parse_direction(text(j.value("direction", json("ascending")), "psi.direction"));
  if (j.contains("calibrate_against")) {
    const std::string a = text(j["calibrate_against"], "psi.calibrate_against");
    if (a == "A") {
      c.calibrate_against = InequalityKind::A;
    } else if (a == "B") {
      c.calibrate_against = InequalityKind::B;
    } else {
      throw ConfigError("psi.calibrate_against must be \"A\" or \"B\"");
    }
  }
  if (j.contains("calibration_probes")) c.calibration_probes = count(j["calibration_probes"], "psi.calibration_probes");
  if (j.contains("safety")) {
    c.safety = number(j["safety"], "psi.safety");
    if (c.safety < 1.0) throw ConfigError("psi.safety must be >= 1");
  }
  return c;
}

PsiEnvelope make_psi(const PsiConfig& c, double theta) {
  if (c.L) return PsiEnvelope::power(theta, c.p, *c.L, c.direction);
  return PsiEnvelope::power_default_L(theta, c.p, c.direction);
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json complex_json(Scalar v) { return json::array({v.real(), v.imag()}); }

// Runs the pipeline for a parsed scenario and appends records.
class Runner {
 public:
  Runner(Scenario sc, std::vector<json>& out) : sc_(std::move(sc)), out_(out) {}

  void resolve() {
    if (sc_.map || sc_.psi) probes_ = ProbeSet::generate(sc_.dim, sc_.probe_count, sc_.radius, sc_.seed);
    if (sc_.psi) {
      const PsiConfig& pc = *sc_.psi;
      double theta = pc.theta;
      json calib = nullptr;
      if (pc.calibrate) {
        if (!sc_.map) throw ConfigError("theta calibration needs a map");
        const ProbeSet cal =
            probes_.merged(ProbeSet::multiscale(sc_.dim, pc.calibration_probes, sc_.radius, sc_.seed));
        const ThetaCalibration c = calibrate_theta(sc_.map->evaluator(), rho(), sc_.s, pc.calibrate_against, pc.p,
                                                   ModularSpec::norm(), cal);
        if (c.infinite) throw ConfigError("theta calibration failed: defect where the envelope vanishes");
        theta = pc.safety * c.theta_star;
        calib = {{"theta_star", c.theta_star},
                 {"safety", pc.safety},
                 {"probes", cal.size()},
                 {"against", pc.calibrate_against == InequalityKind::A ? "A" : "B"}};
      }
      psi_ = make_psi(pc, theta);
      if (sc_.iteration.direction != pc.direction) throw ConfigError("iteration direction differs from psi direction");
      resolved_ = {{"theta", theta}, {"p", pc.p}, {"L", psi_->L()}, {"direction", to_string(pc.direction)},
                   {"calibration", calib}};
    }
  }

  json resolved() const { return resolved_; }

  void run() {
    const bool need_d = std::any_of(sc_.checks.begin(), sc_.checks.end(),
                                    [](const std::string& c) { return d_checks().count(c) > 0; });
    if (psi_) psi_law();
    if (need_d) run_stabilize();
    for (const auto& c : sc_.checks) {
      if (c == "psi_law" || c == "stabilize") continue;
      guarded(c, [&] { dispatch(c); });
    }
  }

 private:
  const ModularSpec& rho() const { return sc_.modulars.front(); }

  json base(const std::string& stage) const { return {{"scenario", sc_.name}, {"stage", stage}}; }

  void emit_check(const CheckRecord& r, json extra = json::object()) {
    json j = base("check");
    j["check"] = r.check_name;
    j["probe_id"] = r.probe_id;
    j["lhs"] = r.lhs;
    j["rhs"] = r.rhs;
    j["margin"] = r.margin;
    if (!r.note.empty()) j["note"] = r.note;
    for (auto& [k, v] : extra.items()) j[k] = v;
    j["pass"] = r.pass;
    out_.push_back(std::move(j));
  }

  void emit_summary(const std::string& check, json payload, bool pass) {
    json j = base("check");
    j["check"] = check;
    j["probe_id"] = nullptr;
    for (auto& [k, v] : payload.items()) j[k] = v;
    j["pass"] = pass;
    out_.push_back(std::move(j));
  }

  void emit_all(const std::vector<CheckRecord>& rs, json extra = json::object()) {
    for (const auto& r : rs) emit_check(r, extra);
  }

  template <class Fn>
  void guarded(const std::string& check, Fn fn) {
    try {
      fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      emit_summary(check, {{"error", e.what()}}, false);
    }
  }

  void psi_law() {
    const PsiLawReport r = check_psi_law(*psi_, probes_);
    emit_summary("psi_law",
                 {{"worst_law_margin", r.worst_law_margin},
                  {"law_witness", r.law_witness},
                  {"law_ok", r.law_ok},
                  {"limit_ok", r.limit_ok},
                  {"worst_limit_levels", r.worst_limit_levels},
                  {"limit_witness", r.limit_witness}},
                 r.pass());
  }

  void run_stabilize() {
    StabilizeConfig cfg = sc_.iteration;
    cfg.probes = probes_;
    cfg.weight = sc_.weight;
    try {
      outcome_ = stabilize(*sc_.map, *psi_, rho(), cfg);
    } catch (const OverflowAbort& e) {
      emit_summary("stabilize",
                   {{"error", e.what()}, {"overflow", true}, {"level", e.level()}, {"probe_id_abort", e.probe()}},
                   false);
      return;
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      emit_summary("stabilize", {{"error", e.what()}}, false);
      return;
    }
    const auto& o = *outcome_;
    for (std::size_t i = 0; i < o.levels.size(); ++i) {
      json j = base("iterate");
      j["level"] = o.levels[i];
      j["sup_delta"] = o.per_iter_sup_deltas[i];
      j["rho_tilde"] = o.per_iter_deltas[i].infinite ? json(nullptr) : json(o.per_iter_deltas[i].value);
      j["rho_tilde_infinite"] = o.per_iter_deltas[i].infinite;
      j["overflow"] = false;
      j["pass"] = true;
      out_.push_back(std::move(j));
    }
    emit_summary("stabilize",
                 {{"N_converged", o.N_converged},
                  {"converged", o.converged},
                  {"contraction_estimate", o.contraction_estimate ? json(*o.contraction_estimate) : json(nullptr)},
                  {"L", psi_->L()},
                  {"bound_margin", o.bound_margin},
                  {"bound_witness", o.bound_witness}},
                 o.converged);
  }

  bool have_outcome(const std::string& check) {
    if (outcome_) return true;
    emit_summary(check, {{"error", "no stabilized limit available"}}, false);
    return false;
  }

  void dispatch(const std::string& c) {
    const BiEval d = sc_.map ? sc_.map->evaluator() : BiEval{};
    if (c == "stability_bound") {
      if (have_outcome(c)) emit_all(check_stability_bound(d, outcome_->D, *psi_, rho(), probes_));
    } else if (c == "biadditivity_D") {
      if (!have_outcome(c)) return;
      const auto r = check_biadditivity(outcome_->D, rho(), probes_);
      emit_summary(c,
                   {{"slot_one", r.slot_one}, {"slot_two", r.slot_two}, {"slot_one_witness", r.slot_one_witness},
                    {"slot_two_witness", r.slot_two_witness}, {"tol", kBiadditivityDTol}},
                   r.pass(kBiadditivityDTol));
    } else if (c == "biadditivity") {
      const auto r = check_biadditivity(d, rho(), probes_);
      emit_summary(c,
                   {{"slot_one", r.slot_one}, {"slot_two", r.slot_two}, {"slot_one_witness", r.slot_one_witness},
                    {"slot_two_witness", r.slot_two_witness}, {"tol", kIdentityTol}},
                   r.pass());
    } else if (c == "linearity_D") {
      if (!have_outcome(c)) return;
      const auto rep = check_first_slot_linearity(outcome_->D, rho(), linearity_scalars(sc_.seed), probes_,
                                                  10.0 * sc_.iteration.tol);
      const std::size_t P = probes_.size();
      for (std::size_t k = 0; k < rep.records.size(); ++k) {
        const auto& e = rep.entries[k / P];
        emit_check(rep.records[k], {{"lambda", complex_json(e.lambda)}, {"M", e.M}});
      }
    } else if (c == "telescoping") {
      if (have_outcome(c)) telescoping();
    } else if (c == "bounded_orbit") {
      if (!have_outcome(c)) return;
      const double bound = outcome_->orbit_bound + kOrbitSlack;
      emit_summary(c, {{"orbit_sup", outcome_->orbit_sup}, {"bound", bound}, {"levels", outcome_->N_converged}},
                   outcome_->orbit_sup <= bound);
    } else if (c == "uniqueness") {
      if (!have_outcome(c)) return;
      StabilizeConfig cfg = sc_.iteration;
      cfg.probes = probes_;
      cfg.weight = sc_.weight;
      const auto rep = check_uniqueness(*sc_.map, *psi_, rho(), cfg);
      json vs = json::array();
      for (const auto& v : rep.variants) {
        vs.push_back({{"label", v.label}, {"N_converged", v.N_converged}, {"converged", v.converged},
                      {"disagreement", v.disagreement}});
      }
      emit_summary(c, {{"worst", rep.worst}, {"threshold", rep.threshold}, {"variants", vs}}, rep.pass);
    } else if (c == "superstable_identity") {
      if (have_outcome(c)) emit_all(check_identity(c, outcome_->D, d, rho(), probes_, kExactTol));
    } else if (c == "inequality_A") {
      emit_all(check_inequality_a(*sc_.map, rho(), sc_.s, psi_, probes_));
    } else if (c == "inequality_B") {
      emit_all(check_inequality_b(*sc_.map, rho(), sc_.s, psi_, probes_));
    } else if (c == "biderivation" || c == "biderivation_slot_two") {
      biderivation(c);
    } else if (c == "superstability") {
      const auto r = check_superstability(d, rho(), probes_);
      emit_summary(c, {{"sup", r.sup}, {"witness", r.witness}, {"tol", kIdentityTol}}, r.pass);
    } else if (c == "rho_tilde_contraction") {
      contraction();
    } else if (c == "modular_axioms" || c == "delta2" || c == "remark" || c == "fatou" || c == "luxemburg") {
      for (const auto& m : sc_.modulars) guarded(c, [&] { modular_check(c, m); });
    }
  }

  void telescoping() {
    const bool asc = outcome_->direction == Direction::ascending;
    const std::string form = asc ? "sharp" : (sc_.weight == RhoTildeWeight::psi_xx_z0 ? "kappa_diag" : "kappa_axis");
    for (const auto& t : outcome_->telescoping) {
      emit_summary("telescoping",
                   {{"form", form}, {"level", t.level}, {"lhs_sup", t.lhs_sup}, {"margin", t.gated_margin},
                    {"witness", t.gated_witness}},
                   t.gated_margin <= kInequalityTol);
      emit_summary("telescoping",
                   {{"form", "final"}, {"level", t.level}, {"lhs_sup", t.lhs_sup}, {"margin", t.final_margin},
                    {"witness", t.final_witness}},
                   t.final_margin <= kInequalityTol);
      if (asc) {
        // the printed partial-sum form is reported for comparison only
        emit_summary("telescoping",
                     {{"form", "printed"}, {"level", t.level}, {"margin", t.printed_margin}, {"gated", false}}, true);
      }
    }
  }

  void biderivation(const std::string& c) {
    if (!sc_.algebra) throw ConfigError("biderivation checks need an algebra");
    const std::optional<PsiEnvelope> env = sc_.biderivation_envelope ? psi_ : std::nullopt;
    const auto rs = check_biderivation(*sc_.map, rho(), *sc_.algebra, env, probes_);
    const std::string gated = c == "biderivation" ? "biderivation_slot_one" : "biderivation_slot_two";
    for (const auto& r : rs) {
      if (r.check_name == gated) {
        emit_check(r);
      } else if (c == "biderivation") {
        CheckRecord info = r;
        info.pass = true;
        emit_check(info, {{"gated", false}, {"would_pass", r.pass}});
      }
    }
  }

  void contraction() {
    if (!psi_) throw ConfigError("rho_tilde_contraction needs psi");
    const std::size_t dx = sc_.map ? sc_.map->dim_x() : sc_.dim;
    for (std::size_t k = 0; k < sc_.pairs; ++k) {
      const TabulatedPerturbation a(*psi_, sc_.weight, sc_.dim, dx, mix64(sc_.seed + 2 * k));
      const TabulatedPerturbation b(*psi_, sc_.weight, sc_.dim, dx, mix64(sc_.seed + 2 * k + 1));
      const BiEval fa = a.evaluator(), fb = b.evaluator();
      const BiEval diff = [fa, fb](const AlgElem& x, const AlgElem& z) { return fa(x, z) - fb(x, z); };
      const BiEval ta = direct_step(fa, psi_->direction()), tb = direct_step(fb, psi_->direction());
      const BiEval tdiff = [ta, tb](const AlgElem& x, const AlgElem& z) { return ta(x, z) - tb(x, z); };
      const double before = rho_tilde(rho(), *psi_, sc_.weight, diff, probes_).as_double();
      const double after = rho_tilde(rho(), *psi_, sc_.weight, tdiff, probes_).as_double();
      CheckRecord r;
      r.check_name = "rho_tilde_contraction";
      r.probe_id = k;
      r.lhs = after;
      r.rhs = psi_->L() * before;
      r.margin = r.lhs - r.rhs;
      r.pass = r.margin <= kInequalityTol;
      emit_check(r, {{"pair", k}});
    }
  }

  void modular_check(const std::string& c, const ModularSpec& m) {
    const std::size_t dim = sc_.dim;
    json payload = {{"modular", m.name()}};
    bool pass = false;
    if (c == "modular_axioms") {
      const auto rep = check_modular_axioms(m, make_axiom_samples(dim, sc_.samples, sc_.seed, sc_.radius));
      json entries = json::array();
      for (const auto& e : rep.entries) {
        entries.push_back({{"axiom", e.axiom},
                           {"checked", e.checked},
                           {"worst_margin", e.checked ? json(e.worst_margin) : json(nullptr)},
                           {"witness", e.witness}});
      }
      payload["axioms"] = entries;
      pass = rep.pass();
    } else if (c == "delta2") {
      std::vector<VecX> xs;
      for (const auto& s : make_axiom_samples(dim, sc_.samples, sc_.seed, sc_.radius)) {
        if (!s.x.is_zero()) xs.push_back(s.x);
      }
      const auto r = check_delta2(m, xs);
      payload["kappa_hat"] = r.kappa_hat;
      payload["kappa"] = m.kappa();
      pass = r.pass;
    } else if (c == "remark") {
      const auto r = check_remark_properties(m, make_remark_samples(dim, sc_.samples, sc_.seed, sc_.radius));
      payload["monotone_margin"] = r.monotone_margin;
      payload["scaling_margin"] = r.scaling_margin;
      payload["doubling_margin"] = r.doubling_margin;
      payload["convex_checked"] = r.convex_checked;
      pass = r.pass();
    } else if (c == "fatou") {
      const VecX limit = VecX::basis(dim, 0);
      std::vector<VecX> seq;
      for (int n = 1; n <= 60; ++n) seq.push_back((1.0 - std::ldexp(1.0, -n)) * limit);
      pass = check_fatou(m, seq, limit);
      payload["sequence"] = "(1 - 2^-n) e_0, n = 1..60";
    } else if (c == "luxemburg") {
      Stream rng(sc_.seed);
      double worst = 0.0;
      const std::size_t n = std::min<std::size_t>(sc_.samples, 1000);
      for (std::size_t i = 0; i < n; ++i) {
        const VecX x = rng.disc_vector(dim, sc_.radius * 4.0);
        const double lux = luxemburg_norm(m, x);
        double err = 0.0;
        if (m.kind() == ModularKind::orlicz) {
          // bracket test: rho(x / (lux + 1e-9)) <= 1 < rho(x / (lux - 1e-9))
          if (m(x / (lux + 1e-9)) > 1.0) err = 1.0;
          if (lux > 1e-9 && !(m(x / (lux - 1e-9)) > 1.0)) err = 1.0;
        } else {
          err = std::abs(lux - luxemburg_norm_fast(m, x));
        }
        worst = std::max(worst, err);
      }
      payload["worst_error"] = worst;
      payload["samples"] = n;
      pass = worst <= 1e-9;
    }
    emit_summary(c, payload, pass);
  }

  Scenario sc_;
  std::vector<json>& out_;
  ProbeSet probes_;
  std::optional<PsiEnvelope> psi_;
  std::optional<StabilizeOutcome> outcome_;
  json resolved_ = json::object();
};

json config_failure(const std::string& name, const std::string& message) {
  return {{"scenario", name}, {"stage", "config"}, {"error", message}, {"config_error", true}, {"pass", false}};
}

json make_header(const json& config, const RunOptions& opts, std::uint64_t seed) {
  std::string name = "unknown";
  if (config.is_object() && config.contains("name") && config["name"].is_string()) name = config["name"];
  return {{"stage", "header"},
          {"schema", kReportSchema},
          {"tool_version", kToolVersion},
          {"scenario", name},
          {"config_hash", config_hash(config)},
          {"seed", seed},
          {"timestamp", opts.timestamp ? *opts.timestamp : utc_now()},
          {"pass", true}};
}

}  // namespace

std::vector<std::string> known_checks() {
  std::vector<std::string> out = {"psi_law"};
  for (const auto* s : {&d_checks(), &map_checks(), &modular_checks()}) out.insert(out.end(), s->begin(), s->end());
  std::sort(out.begin(), out.end());
  return out;
}

ModularSpec parse_modular(const json& j) {
  if (j.is_string()) return parse_modular_shorthand(j.get<std::string>());
  allow_keys(j, {"kind", "p", "phi", "kappa"}, "modular");
  const std::string kind = text(j.value("kind", json()), "modular.kind");
  const double kappa = j.contains("kappa") ? number(j["kappa"], "modular.kappa") : 2.0;
  if (kind == "norm") return ModularSpec::norm(kappa);
  if (kind == "power") {
    if (!j.contains("p")) throw ConfigError("power modular needs p");
    return ModularSpec::power(number(j["p"], "modular.p"), kappa);
  }
  if (kind == "orlicz") return ModularSpec::orlicz(parse_orlicz_preset(text(j.value("phi", json()), "modular.phi")), kappa);
  throw ConfigError("unknown modular kind '" + kind + "'");
}

ModularSpec parse_modular_shorthand(std::string_view spec) {
  std::string body(spec);
  double kappa = 2.0;
  if (const auto comma = body.find(','); comma != std::string::npos) {
    const std::string opt = body.substr(comma + 1);
    body = body.substr(0, comma);
    if (opt.rfind("kappa=", 0) != 0) throw ConfigError("unknown modular option '" + opt + "'");
    try {
      kappa = std::stod(opt.substr(6));
    } catch (const std::exception&) {
      throw ConfigError("bad kappa in '" + std::string(spec) + "'");
    }
  }
  const auto colon = body.find(':');
  const std::string kind = body.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : body.substr(colon + 1);
  if (kind == "norm" && arg.empty()) return ModularSpec::norm(kappa);
  if (kind == "power") {
    try {
      std::size_t used = 0;
      const double p = std::stod(arg, &used);
      if (used != arg.size()) throw ConfigError("");
      return ModularSpec::power(p, kappa);
    } catch (const std::exception&) {
      throw ConfigError("power modular needs a numeric exponent, e.g. power:2");
    }
  }
  if (kind == "orlicz") return ModularSpec::orlicz(parse_orlicz_preset(arg), kappa);
  throw ConfigError("unknown modular '" + std::string(spec) + "'");
}

Scenario parse_scenario(const json& j) {
  allow_keys(j,
             {"name", "algebra", "dim", "modular", "map", "psi", "s", "rho_tilde_weight", "probes", "iteration",
              "checks", "samples", "pairs", "biderivation_envelope"},
             "scenario");
  Scenario sc;
  sc.name = text(j.value("name", json()), "name");
  if (j.contains("algebra")) {
    sc.algebra = parse_algebra(j["algebra"]);
    sc.dim = sc.algebra->dim();
    if (j.contains("dim") && count(j["dim"], "dim") != sc.dim) throw ConfigError("dim disagrees with the algebra");
  } else if (j.contains("dim")) {
    sc.dim = count(j["dim"], "dim");
  } else {
    throw ConfigError("scenario needs an algebra or a dim");
  }

  if (!j.contains("modular")) throw ConfigError("scenario needs a modular");
  if (j["modular"].is_array()) {
    for (const auto& m : j["modular"]) sc.modulars.push_back(parse_modular(m));
    if (sc.modulars.empty()) throw ConfigError("modular list is empty");
  } else {
    sc.modulars.push_back(parse_modular(j["modular"]));
  }

  if (j.contains("map") && !j["map"].is_null()) sc.map = parse_map(j["map"], sc.algebra, sc.dim);
  if (j.contains("psi") && !j["psi"].is_null()) sc.psi = parse_psi(j["psi"]);
  if (j.contains("s")) sc.s = complex_value(j["s"], "s");
  if (!(std::abs(sc.s) < 1.0)) throw ConfigError("s must satisfy |s| < 1");
  if (j.contains("rho_tilde_weight")) sc.weight = parse_rho_tilde_weight(text(j["rho_tilde_weight"], "rho_tilde_weight"));

  sc.seed = kDefaultSeed;
  if (j.contains("probes")) {
    const json& p = j["probes"];
    allow_keys(p, {"count", "radius", "seed"}, "probes");
    if (p.contains("count")) sc.probe_count = count(p["count"], "probes.count");
    if (p.contains("radius")) sc.radius = number(p["radius"], "probes.radius");
    if (p.contains("seed")) {
      if (!p["seed"].is_number_unsigned()) throw ConfigError("probes.seed must be a non-negative integer");
      sc.seed = p["seed"].get<std::uint64_t>();
    }
  }
  if (!(sc.radius > 0.0)) throw ConfigError("probes.radius must be positive");

  if (sc.psi) sc.iteration.direction = sc.psi->direction;
  if (j.contains("iteration")) {
    const json& it = j["iteration"];
    allow_keys(it, {"direction", "n_max", "tol", "magnitude_cap"}, "iteration");
    if (it.contains("direction")) sc.iteration.direction = parse_direction(text(it["direction"], "iteration.direction"));
    if (it.contains("n_max")) sc.iteration.n_max = static_cast<int>(count(it["n_max"], "iteration.n_max"));
    if (it.contains("tol")) sc.iteration.tol = number(it["tol"], "iteration.tol");
    if (it.contains("magnitude_cap")) sc.iteration.magnitude_cap = number(it["magnitude_cap"], "iteration.magnitude_cap");
  }
  if (!(sc.iteration.tol > 0.0)) throw ConfigError("iteration.tol must be positive");
  if (!(sc.iteration.magnitude_cap > 0.0)) throw ConfigError("iteration.magnitude_cap must be positive");
  if (sc.psi && sc.psi->direction != sc.iteration.direction) {
    throw ConfigError("iteration direction differs from psi direction");
  }
  if (sc.psi) {
    // L range and p range are validated by constructing the envelope once.
    (void)make_psi(*sc.psi, sc.psi->calibrate ? 1.0 : sc.psi->theta);
  }

  if (j.contains("samples")) sc.samples = count(j["samples"], "samples");
  if (j.contains("pairs")) sc.pairs = count(j["pairs"], "pairs");
  if (j.contains("biderivation_envelope")) {
    if (!j["biderivation_envelope"].is_boolean()) throw ConfigError("biderivation_envelope must be a boolean");
    sc.biderivation_envelope = j["biderivation_envelope"].get<bool>();
  }

  if (!j.contains("checks") || !j["checks"].is_array()) throw ConfigError("scenario needs a checks list");
  const auto names = known_checks();
  for (const auto& c : j["checks"]) {
    const std::string name = text(c, "checks[]");
    if (std::find(names.begin(), names.end(), name) == names.end()) throw ConfigError("unknown check '" + name + "'");
    const bool needs_map = d_checks().count(name) || (map_checks().count(name) && name != "rho_tilde_contraction");
    const bool needs_psi = name == "psi_law" || d_checks().count(name) || name == "rho_tilde_contraction";
    if (needs_map && !sc.map) throw ConfigError("check '" + name + "' needs a map");
    if (needs_psi && !sc.psi) throw ConfigError("check '" + name + "' needs psi");
    if ((name == "biderivation" || name == "biderivation_slot_two") &&
        (!sc.algebra || sc.map->dim_x() != sc.dim)) {
      throw ConfigError("check '" + name + "' needs a map A x A -> A");
    }
    sc.checks.push_back(name);
  }
  if (sc.map && sc.map->dim_a() != sc.dim) throw ConfigError("map dimension disagrees with the algebra");
  for (const auto& m : sc.modulars) {
    if (m.dim() && *m.dim() != (sc.map ? sc.map->dim_x() : sc.dim)) throw ConfigError("modular dimension mismatch");
  }
  return sc;
}

std::vector<std::string> list_builtin_scenarios() {
  return {"corollary-ascending-p05", "corollary-descending-p2", "inequality-B-descending",
          "superstability-commutator", "lemma-falsifier", "axioms-suite"};
}

json builtin_scenario(std::string_view name) {
  const json probes = {{"count", 512}, {"radius", 1.0}, {"seed", kDefaultSeed}};
  const json norm = {{"kind", "norm"}};
  if (name == "corollary-ascending-p05") {
    return {{"name", std::string(name)},
            {"algebra", "matrix2"},
            {"modular", norm},
            {"map",
             {{"kernel", {{"preset", "commutator"}, {"c", {1.0, 0.0}}}},
              {"perturbation", {{"name", "bounded_osc"}, {"epsilon", 0.01}, {"boundary_safe", true}}}}},
            {"psi", {{"theta", "calibrate"}, {"p", 0.5}, {"direction", "ascending"}, {"calibrate_against", "A"}}},
            {"s", {0.5, 0.0}},
            {"rho_tilde_weight", "psi_xx_z0"},
            {"probes", probes},
            {"iteration", {{"direction", "ascending"}, {"n_max", 40}, {"tol", 1e-10}}},
            {"checks",
             {"psi_law", "stabilize", "stability_bound", "biadditivity_D", "linearity_D", "inequality_A",
              "telescoping", "bounded_orbit", "uniqueness", "rho_tilde_contraction"}}};
  }
  if (name == "corollary-descending-p2" || name == "inequality-B-descending") {
    const bool b = name == "inequality-B-descending";
    return {{"name", std::string(name)},
            {"algebra", "matrix2"},
            {"modular", norm},
            {"map",
             {{"kernel", {{"preset", "commutator"}, {"c", {1.0, 0.0}}}},
              {"perturbation", {{"name", "power_env"}, {"epsilon", 0.01}, {"p", 2.0}}}}},
            {"psi",
             {{"theta", "calibrate"}, {"p", 2.0}, {"L", 0.5}, {"direction", "descending"},
              {"calibrate_against", b ? "B" : "A"}}},
            {"s", {0.5, 0.0}},
            {"rho_tilde_weight", b ? "psi_x0_z0" : "psi_xx_z0"},
            {"probes", probes},
            {"iteration", {{"direction", "descending"}, {"n_max", 40}, {"tol", 1e-10}}},
            {"checks",
             {"psi_law", "stabilize", "stability_bound", "biadditivity_D", "linearity_D",
              b ? "inequality_B" : "inequality_A", "telescoping", "bounded_orbit", "uniqueness",
              "rho_tilde_contraction"}}};
  }
  if (name == "superstability-commutator") {
    return {{"name", std::string(name)},
            {"algebra", "matrix2"},
            {"modular", norm},
            {"map", {{"kernel", {{"preset", "commutator"}, {"c", {1.0, 0.0}}}}}},
            {"psi", {{"theta", 1.0}, {"p", 0.5}, {"direction", "ascending"}}},
            {"s", {0.5, 0.0}},
            {"rho_tilde_weight", "psi_xx_z0"},
            {"probes", probes},
            {"iteration", {{"direction", "ascending"}, {"n_max", 40}, {"tol", 1e-10}}},
            {"biderivation_envelope", false},
            {"checks",
             {"psi_law", "inequality_A", "superstability", "biadditivity", "biderivation", "biderivation_slot_two",
              "stabilize", "superstable_identity", "stability_bound", "biadditivity_D", "linearity_D",
              "uniqueness"}}};
  }
  if (name == "lemma-falsifier") {
    return {{"name", std::string(name)},
            {"algebra", "complex"},
            {"modular", norm},
            {"map",
             {{"kernel", {{"preset", "product"}, {"c", {1.0, 0.0}}}},
              {"perturbation", {{"name", "quadratic"}, {"epsilon", 1.0}}}}},
            {"psi", nullptr},
            {"s", {0.5, 0.0}},
            {"probes", probes},
            {"checks", {"inequality_A", "inequality_B", "biadditivity", "superstability"}}};
  }
  if (name == "axioms-suite") {
    return {{"name", std::string(name)},
            {"algebra", "matrix2"},
            {"modular", {norm, {{"kind", "power"}, {"p", 1.0}}, {{"kind", "orlicz"}, {"phi", "square"}}}},
            {"samples", 10000},
            {"probes", probes},
            {"checks", {"modular_axioms", "remark", "fatou", "luxemburg"}}};
  }
  throw ConfigError("unknown builtin scenario '" + std::string(name) + "'");
}

std::string config_hash(const json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : config.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

int exit_code_of(const std::vector<json>& records) {
  int code = 0;
  for (const auto& r : records) {
    if (r.value("pass", false)) continue;
    if (r.value("stage", "") == "config") return 2;
    code = 1;
  }
  return code;
}

RunResult run_scenario(const json& config, const RunOptions& opts) {
  RunResult res;
  json effective = config;
  std::uint64_t seed = kDefaultSeed;
  std::string name = "unknown";
  try {
    if (!effective.is_object()) throw ConfigError("scenario config must be a JSON object");
    if (opts.seed_override || opts.probes_override) {
      json& p = effective["probes"];
      if (p.is_null()) p = json::object();
      if (!p.is_object()) throw ConfigError("probes must be an object");
      if (opts.seed_override) p["seed"] = *opts.seed_override;
      if (opts.probes_override) p["count"] = *opts.probes_override;
    }
    if (effective.contains("name") && effective["name"].is_string()) name = effective["name"];
    if (effective.contains("probes") && effective["probes"].is_object() && effective["probes"].contains("seed") &&
        effective["probes"]["seed"].is_number_unsigned()) {
      seed = effective["probes"]["seed"].get<std::uint64_t>();
    }
  } catch (const ConfigError& e) {
    res.records.push_back(make_header(effective, opts, seed));
    res.records.push_back(config_failure(name, e.what()));
    res.exit_code = exit_code_of(res.records);
    return res;
  }

  res.records.push_back(make_header(effective, opts, seed));
  std::vector<json> body;
  try {
    Runner runner(parse_scenario(effective), body);
    runner.resolve();
    json cfg_rec = {{"scenario", name}, {"stage", "config"}, {"config", effective}, {"resolved", runner.resolved()},
                    {"pass", true}};
    body.push_back(std::move(cfg_rec));
    runner.run();
  } catch (const ConfigError& e) {
    body = {config_failure(name, e.what())};
  } catch (const json::exception& e) {
    body = {config_failure(name, std::string("malformed config: ") + e.what())};
  }
  res.records.insert(res.records.end(), body.begin(), body.end());
  res.exit_code = exit_code_of(res.records);
  return res;
}

RunResult run_scenario_file(const std::string& path, const RunOptions& opts) {
  std::ifstream in(path);
  if (!in) {
    RunResult res;
    res.records.push_back(make_header(json(path), opts, kDefaultSeed));
    res.records.push_back(config_failure("unknown", "cannot open config file '" + path + "'"));
    res.exit_code = 2;
    return res;
  }
  json config;
  try {
    config = json::parse(in);
  } catch (const json::parse_error& e) {
    RunResult res;
    res.records.push_back(make_header(json(path), opts, kDefaultSeed));
    res.records.push_back(config_failure("unknown", std::string("config does not parse: ") + e.what()));
    res.exit_code = 2;
    return res;
  }
  return run_scenario(config, opts);
}

std::string to_jsonl(const std::vector<json>& records) {
  std::string out;
  for (const auto& r : records) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

}  // namespace modstab
