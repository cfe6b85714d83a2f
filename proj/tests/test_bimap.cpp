#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "modstab/bimap.hpp"

using namespace modstab;
using Catch::Approx;

namespace {

AlgElem random_elem(std::mt19937_64& g, std::size_t dim, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  AlgElem v(dim);
  for (std::size_t i = 0; i < dim; ++i) v[i] = {u(g), u(g)};
  return v;
}

// xz - zx for 2x2 matrices in E11, E12, E21, E22 order, written out by hand
AlgElem commutator2(const AlgElem& x, const AlgElem& z) {
  const auto prod = [](const AlgElem& a, const AlgElem& b) {
    return AlgElem{a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3], a[2] * b[0] + a[3] * b[2],
                   a[2] * b[1] + a[3] * b[3]};
  };
  return prod(x, z) - prod(z, x);
}

}  // namespace

TEST_CASE("commutator kernel matches the matrix commutator") {
  const auto d = BiMap::commutator(AlgebraSpec::preset("matrix2"));
  CHECK(d.zero_boundary());
  CHECK(d.dim_a() == 4);
  std::mt19937_64 g(1);
  for (int t = 0; t < 50; ++t) {
    const auto x = random_elem(g, 4), z = random_elem(g, 4);
    CHECK((d(x, z) - commutator2(x, z)).max_abs() < 1e-14);
  }
  const auto d3 = BiMap::commutator(AlgebraSpec::preset("matrix2"), {0.0, 3.0});
  const auto x = random_elem(g, 4), z = random_elem(g, 4);
  CHECK((d3(x, z) - Scalar{0.0, 3.0} * commutator2(x, z)).max_abs() < 1e-14);
}

TEST_CASE("tensor kernels are C-bilinear") {
  std::mt19937_64 g(2);
  std::vector<Scalar> t(3 * 3 * 2);
  for (auto& c : t) c = {std::normal_distribution<double>()(g), std::normal_distribution<double>()(g)};
  const auto d = BiMap::tensor(3, 2, t);
  for (int k = 0; k < 30; ++k) {
    const auto x = random_elem(g, 3), x2 = random_elem(g, 3), z = random_elem(g, 3), z2 = random_elem(g, 3);
    const Scalar a{0.7, -1.3};
    CHECK((d(a * x + x2, z) - (a * d(x, z) + d(x2, z))).max_abs() < 1e-13);
    CHECK((d(x, a * z + z2) - (a * d(x, z) + d(x, z2))).max_abs() < 1e-13);
  }
  // a single coefficient: d(e_1, e_2) = T[1][2]
  const auto e = BiMap::tensor(3, 2, t);
  CHECK(e(AlgElem::basis(3, 1), AlgElem::basis(3, 2)) == VecX{t[(1 * 3 + 2) * 2], t[(1 * 3 + 2) * 2 + 1]});

  CHECK_THROWS_AS(BiMap::tensor(3, 2, std::vector<Scalar>(17)), ConfigError);
  CHECK_THROWS_AS(d(AlgElem(2), AlgElem(3)), ConfigError);
  CHECK(BiMap::zero(2, 3)(AlgElem::basis(2, 0), AlgElem::basis(2, 1)) == VecX(3));
}

TEST_CASE("perturbation values") {
  const AlgElem x = AlgElem::real({1.0, 2.0});
  const AlgElem z = AlgElem::real({3.0, -4.0});

  Perturbation osc{PerturbationKind::bounded_osc, 0.5};
  const VecX v = osc(x, z, 2);
  CHECK(v[0].real() == Approx(0.5 * std::sin(3.0) * 3.0));
  CHECK(v[1].real() == Approx(0.5 * std::sin(3.0) * -4.0));
  // projection pads and truncates
  CHECK(osc(x, z, 3)[2] == Scalar{});
  CHECK(osc(x, z, 1).dim() == 1);

  Perturbation env{PerturbationKind::power_env, 2.0, 0.5};
  const VecX e = env(x, z, 2);
  CHECK(e[0].real() == Approx(2.0 * std::pow(std::sqrt(5.0), 0.5) * std::pow(5.0, 0.5)));
  CHECK(e[1] == Scalar{});

  Perturbation quad{PerturbationKind::quadratic, 1.0};
  CHECK(quad(x, z, 2)[0].real() == Approx(27.0));
  CHECK(quad(2.0 * x, z, 2)[0].real() == Approx(4.0 * 27.0));

  const AlgElem xi{{0.0, 1.0}};
  Perturbation conj{PerturbationKind::conjugate, 1.0};
  CHECK(conj(xi, AlgElem{{1.0, 0.0}}, 1)[0] == Scalar{0.0, -1.0});

  Perturbation safe = osc;
  safe.boundary_safe = true;
  const double fx = 5.0 / 6.0, fz = 25.0 / 26.0;
  CHECK(safe(x, z, 2)[0].real() == Approx(fx * fz * v[0].real()));
  CHECK(safe(AlgElem(2), z, 2).is_zero());
}

TEST_CASE("zero-boundary flag") {
  const auto base = BiMap::product(AlgebraSpec::preset("complex"));
  CHECK(base.with_perturbation({PerturbationKind::quadratic, 1.0}).zero_boundary());
  CHECK(base.with_perturbation({PerturbationKind::power_env, 1.0, 0.5}).zero_boundary());
  CHECK_FALSE(base.with_perturbation({PerturbationKind::power_env, 1.0, 0.0}).zero_boundary());
  CHECK(base.with_perturbation({PerturbationKind::power_env, 1.0, 0.0, true}).zero_boundary());
  CHECK_FALSE(BiMap::custom(1, 1, [](const AlgElem&, const AlgElem&) { return VecX(1); }, false).zero_boundary());
  CHECK_THROWS_AS(base.with_perturbation({PerturbationKind::quadratic, std::nan("")}), ConfigError);
}

TEST_CASE("non-finite values name the point") {
  const auto d = BiMap::product(AlgebraSpec::preset("complex")).with_perturbation({PerturbationKind::quadratic, 1e300});
  CHECK_THROWS_AS(d(AlgElem{{1e10, 0.0}}, AlgElem{{1.0, 0.0}}), NonFiniteError);
  CHECK_NOTHROW(d(AlgElem{{1.0, 0.0}}, AlgElem{{1.0, 0.0}}));
  CHECK_THROWS_WITH(d(AlgElem{{1e10, 0.0}}, AlgElem{{1.0, 0.0}}), Catch::Matchers::ContainsSubstring("x = "));
}

TEST_CASE("power psi values") {
  const auto psi = PsiEnvelope::power(4.0, 0.5, 0.8, Direction::ascending);
  const AlgElem x = AlgElem::real({3.0, 4.0});
  CHECK(psi(x, AlgElem(2)) == Approx(2.0 * std::sqrt(5.0)));
  CHECK(psi(x, x) == Approx(4.0 * std::sqrt(5.0)));
  CHECK(psi(AlgElem(2), AlgElem(2)) == 0.0);
  CHECK(psi.with_theta(1.0)(x, AlgElem(2)) == Approx(std::sqrt(5.0)));

  // Luxemburg norm of power(1) is the l1 norm
  const auto psi1 = PsiEnvelope::power(1.0, 1.0, 0.5, Direction::descending, ModularSpec::power(1.0));
  CHECK(psi1(x, AlgElem(2)) == Approx(7.0));

  CHECK(PsiEnvelope::power_default_L(1.0, 0.5, Direction::ascending).L() == Approx(std::sqrt(0.5)));
  CHECK(PsiEnvelope::power_default_L(1.0, 2.0, Direction::descending).L() == Approx(0.5));
  CHECK_THROWS_AS(PsiEnvelope::power_default_L(1.0, 1.0, Direction::ascending), ConfigError);
  CHECK_THROWS_AS(PsiEnvelope::power(1.0, 0.5, 1.0, Direction::ascending), ConfigError);
  CHECK_THROWS_AS(PsiEnvelope::power(-1.0, 0.5, 0.5, Direction::ascending), ConfigError);
  CHECK_THROWS_AS(PsiEnvelope::power(1.0, -0.5, 0.5, Direction::ascending), ConfigError);
  const auto concave = ModularSpec::orlicz_custom("sqrt", [](double t) { return std::sqrt(t); }, false);
  CHECK_THROWS_AS(PsiEnvelope::power(1.0, 0.5, 0.5, Direction::ascending, concave), ConfigError);
}

TEST_CASE("tabulated psi interpolates log-log") {
  const auto psi = PsiEnvelope::tabulated({{1.0, 1.0}, {4.0, 2.0}, {16.0, 8.0}}, 0.9, Direction::ascending);
  CHECK_FALSE(psi.is_power());
  CHECK(psi.radial(1.0) == Approx(1.0));
  CHECK(psi.radial(2.0) == Approx(std::sqrt(2.0)));  // slope 1/2 on [1, 4]
  CHECK(psi.radial(8.0) == Approx(4.0));             // slope 1 on [4, 16]
  CHECK(psi.radial(0.25) == Approx(0.5));            // first slope extended
  CHECK(psi.radial(0.0) == 0.0);
  CHECK_THROWS_AS(psi.with_theta(2.0), UnsupportedError);
  CHECK_THROWS_AS(PsiEnvelope::tabulated({{1.0, 1.0}}, 0.5, Direction::ascending), ConfigError);
  CHECK_THROWS_AS(PsiEnvelope::tabulated({{2.0, 1.0}, {1.0, 1.0}}, 0.5, Direction::ascending), ConfigError);
  CHECK_THROWS_AS(PsiEnvelope::tabulated({{1.0, 0.0}, {2.0, 1.0}}, 0.5, Direction::ascending), ConfigError);
}

TEST_CASE("probe set layout") {
  const auto ps = ProbeSet::generate(3, 64, 2.0, 77);
  REQUIRE(ps.size() == 64);
  CHECK(ps.dim() == 3);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(ps[i].kind == ProbeKind::diagonal);
    CHECK(ps[i].y == ps[i].x);
    CHECK(ps[8 + i].kind == ProbeKind::axis);
    CHECK(ps[8 + i].y.is_zero());
    CHECK(ps[16 + i].kind == ProbeKind::half_diagonal);
    CHECK(ps[i].lambda == Scalar{1.0, 0.0});
    CHECK(ps[i].w.is_zero());
    CHECK(ps[i].mandatory());
  }
  CHECK(ps[24].kind == ProbeKind::zero_x);
  CHECK(ps[24].x.is_zero());
  CHECK(ps[25].kind == ProbeKind::zero_z);
  CHECK(ps[25].z.is_zero());
  CHECK(ps[26].lambda == Scalar{1.0, 0.0});
  CHECK(ps[27].lambda == Scalar{-1.0, 0.0});
  CHECK(ps[28].lambda == Scalar{0.0, 1.0});
  CHECK(ps[29].lambda == Scalar{0.0, -1.0});
  CHECK(std::abs(ps[30].lambda) == Approx(1.0));
  CHECK_FALSE(ps[30].mandatory());
  for (const auto& p : ps.points())
    for (const auto* v : {&p.x, &p.y, &p.z, &p.w}) CHECK(v->max_abs() <= 2.0);

  const auto again = ProbeSet::generate(3, 64, 2.0, 77);
  for (std::size_t i = 0; i < ps.size(); ++i) CHECK(again[i].x == ps[i].x);
  // probe i does not depend on the total count
  CHECK(ProbeSet::generate(3, 128, 2.0, 77)[40].z == ps[40].z);
  CHECK(ProbeSet::generate(3, 64, 2.0, 78)[0].x != ps[0].x);

  CHECK_THROWS_AS(ProbeSet::generate(0, 8, 1.0, 1), ConfigError);
  CHECK_THROWS_AS(ProbeSet::generate(2, 8, -1.0, 1), ConfigError);
}

TEST_CASE("multiscale probes spread over octaves") {
  const auto ms = ProbeSet::multiscale(2, 400, 1.0, 5, 6);
  double lo = 1e300, hi = 0.0;
  for (const auto& p : ms.points()) {
    if (p.x.is_zero()) continue;
    lo = std::min(lo, p.x.max_abs());
    hi = std::max(hi, p.x.max_abs());
  }
  CHECK(lo < 0.05);
  CHECK(hi > 10.0);
  CHECK(hi <= 64.0);
  CHECK(ms.merged(ProbeSet::generate(2, 16, 1.0, 5)).size() == 416);
}

TEST_CASE("rho_tilde recovers a known constant") {
  const auto psi = PsiEnvelope::power(1.0, 0.5, 0.8, Direction::ascending);
  const auto probes = ProbeSet::generate(2, 64, 1.0, 3);
  const ModularSpec rho = ModularSpec::norm();
  // delta = c * weight * e_0, so rho(delta) / weight = c on every probe with positive weight
  const double c = 0.37;
  const BiEval delta = [&](const AlgElem& x, const AlgElem& z) {
    return VecX{Scalar{c * rho_tilde_weight(psi, RhoTildeWeight::psi_xx_z0, x, z), 0.0}};
  };
  const auto r = rho_tilde(rho, psi, RhoTildeWeight::psi_xx_z0, delta, probes);
  CHECK(r.value == Approx(c).epsilon(1e-12));
  CHECK_FALSE(r.infinite);
  CHECK(r.effective_probes == 62);  // zero_x and zero_z probes have weight 0

  const BiEval zero = [](const AlgElem&, const AlgElem&) { return VecX(1); };
  CHECK(rho_tilde(rho, psi, RhoTildeWeight::psi_xx_z0, zero, probes).value == 0.0);
}

TEST_CASE("rho_tilde_from edge cases") {
  const auto r = rho_tilde_from({1.0, 2.0, 0.0}, {0.5, 3.0, 0.0});
  CHECK(r.value == 1.5);
  CHECK(r.witness == 1);
  const auto inf = rho_tilde_from({1.0, 0.0}, {0.5, 1e-6});
  CHECK(inf.infinite);
  CHECK(std::isinf(inf.as_double()));
  CHECK(inf.witness == 1);
  CHECK_FALSE(rho_tilde_from({1.0, 0.0}, {0.5, 1e-13}).infinite);
  CHECK_THROWS_AS(rho_tilde_from({0.0}, {0.0}), PreconditionError);
  CHECK_THROWS_AS(rho_tilde_from({1.0}, {}), PreconditionError);
}

TEST_CASE("direct_step fixes bilinear maps and scaled_iterate composes it") {
  const auto d = BiMap::commutator(AlgebraSpec::preset("matrix2"));
  const auto f = d.with_perturbation({PerturbationKind::bounded_osc, 0.3});
  std::mt19937_64 g(9);
  const auto x = random_elem(g, 4), z = random_elem(g, 4);
  for (auto dir : {Direction::ascending, Direction::descending}) {
    CHECK((direct_step(d.evaluator(), dir)(x, z) - d(x, z)).max_abs() < 1e-14);
    BiEval it = f.evaluator();
    for (int n = 1; n <= 5; ++n) {
      it = direct_step(it, dir);
      CHECK((it(x, z) - scaled_iterate(f.evaluator(), dir, n, x, z)).max_abs() < 1e-13);
    }
  }
  // only the first argument is scaled
  const auto fe = f.evaluator();
  const auto step = direct_step(fe, Direction::ascending)(x, z);
  CHECK((step - 0.5 * fe(2.0 * x, z)).max_abs() == 0.0);
}

TEST_CASE("psi scaling law") {
  const auto probes = ProbeSet::generate(2, 64, 1.0, 4);
  CHECK(check_psi_law(PsiEnvelope::power_default_L(1.0, 0.5, Direction::ascending), probes).pass());
  CHECK(check_psi_law(PsiEnvelope::power_default_L(1.0, 2.0, Direction::descending), probes).pass());
  CHECK(check_psi_law(PsiEnvelope::power(1.0, 0.5, 0.9, Direction::ascending), probes).pass());

  const auto tight = check_psi_law(PsiEnvelope::power(1.0, 0.5, 0.5, Direction::ascending), probes);
  CHECK_FALSE(tight.law_ok);
  CHECK(tight.worst_law_margin > 0.0);

  // p = 1 ascending: psi(2^n x)/2^n is constant, the limit never vanishes
  const auto flat = check_psi_law(PsiEnvelope::power(1.0, 1.0, 0.99, Direction::ascending), probes);
  CHECK_FALSE(flat.law_ok);
  CHECK_FALSE(flat.limit_ok);
  CHECK_FALSE(flat.pass());
}

TEST_CASE("tabulated perturbation scales with its weight") {
  const auto psi = PsiEnvelope::power(1.0, 0.5, 0.8, Direction::ascending);
  const TabulatedPerturbation t(psi, RhoTildeWeight::psi_xx_z0, 2, 2, 31);
  std::mt19937_64 g(6);
  const auto x = random_elem(g, 2), z = random_elem(g, 2);
  CHECK(TabulatedPerturbation::cell(2.5 * x) == TabulatedPerturbation::cell(x));
  CHECK(TabulatedPerturbation::cell(AlgElem(2)) == 0);
  CHECK(TabulatedPerturbation::cell(AlgElem{{0.0, 0.0}, {1.0, 0.0}}) / 4 == 1);
  const double ratio = rho_tilde_weight(psi, RhoTildeWeight::psi_xx_z0, 4.0 * x, z) /
                       rho_tilde_weight(psi, RhoTildeWeight::psi_xx_z0, x, z);
  CHECK((t(4.0 * x, z) - ratio * t(x, z)).max_abs() < 1e-14);
  // rho_tilde under the norm modular is the largest table entry hit
  const auto probes = ProbeSet::generate(2, 64, 1.0, 8);
  double expect = 0.0;
  for (const auto& p : probes.points()) {
    const double w = rho_tilde_weight(psi, RhoTildeWeight::psi_xx_z0, p.x, p.z);
    if (w > 0.0) expect = std::max(expect, t(p.x, p.z).euclidean() / w);
  }
  const auto r = rho_tilde(ModularSpec::norm(), psi, RhoTildeWeight::psi_xx_z0, t.evaluator(), probes);
  CHECK(r.value == Approx(expect).epsilon(1e-14));
  CHECK(r.value <= std::sqrt(2.0));
}
