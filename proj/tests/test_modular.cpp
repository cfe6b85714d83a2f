#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "modstab/modular.hpp"
#include "modstab/rng.hpp"

using namespace modstab;
using Catch::Approx;

namespace {

// Closed-form Luxemburg norm of sum |x_i|^p: (sum |x_i|^p)^(1/p).
double lp_oracle(const VecX& x, double p) {
  double s = 0.0;
  for (const auto& c : x.coords()) s += std::pow(std::abs(c), p);
  return std::pow(s, 1.0 / p);
}

VecX random_vec(std::mt19937_64& g, std::size_t dim, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  VecX v(dim);
  for (std::size_t i = 0; i < dim; ++i) v[i] = {u(g), u(g)};
  return v;
}

}  // namespace

TEST_CASE("eval_modular matches hand values") {
  const VecX x = VecX::real({3.0, 4.0});
  CHECK(eval_modular(ModularSpec::norm(), x) == Approx(5.0).epsilon(1e-15));
  CHECK(eval_modular(ModularSpec::power(2.0), x) == Approx(25.0).epsilon(1e-15));
  CHECK(eval_modular(ModularSpec::power(1.0), x) == 7.0);
  CHECK(eval_modular(ModularSpec::orlicz(OrliczPreset::square), x) == Approx(25.0));
  CHECK(eval_modular(ModularSpec::orlicz(OrliczPreset::exp_minus_one), x) ==
        Approx(std::expm1(3.0) + std::expm1(4.0)));
  CHECK(eval_modular(ModularSpec::orlicz(OrliczPreset::linear), x) == 7.0);

  // complex coordinates enter through their modulus
  const VecX z{{0.0, 3.0}, {-4.0, 0.0}};
  CHECK(eval_modular(ModularSpec::power(2.0), z) == Approx(25.0));

  for (const auto& m : {ModularSpec::norm(), ModularSpec::power(1.5), ModularSpec::orlicz(OrliczPreset::square)}) {
    CHECK(eval_modular(m, VecX(3)) == 0.0);
  }
}

TEST_CASE("eval_modular rejects bad inputs") {
  const auto pinned = ModularSpec::norm().with_dim(2);
  CHECK_THROWS_AS(pinned(VecX(3)), ConfigError);
  CHECK_NOTHROW(pinned(VecX(2)));

  const auto negative = ModularSpec::orlicz_custom("negative", [](double t) { return -t; }, true);
  CHECK_THROWS_AS(negative(VecX::real({1.0})), InvalidModularError);
  const auto nan = ModularSpec::orlicz_custom("nan", [](double) { return std::nan(""); }, true);
  CHECK_THROWS_AS(nan(VecX::real({1.0})), InvalidModularError);

  CHECK_THROWS_AS(ModularSpec::power(0.5), ConfigError);
  CHECK_THROWS_AS(ModularSpec::norm(0.0), ConfigError);
  CHECK_THROWS_AS(ModularSpec::norm(2.5), ConfigError);
  CHECK_NOTHROW(ModularSpec::norm(2.0));
  CHECK_THROWS_AS(parse_orlicz_preset("cube"), ConfigError);
  CHECK(parse_orlicz_preset("exp_minus_one") == OrliczPreset::exp_minus_one);
}

TEST_CASE("fast-growing Orlicz modular may be infinite") {
  const auto m = ModularSpec::orlicz(OrliczPreset::exp_minus_one);
  CHECK(std::isinf(m(VecX::real({1000.0}))));
}

TEST_CASE("luxemburg_norm examples") {
  const VecX x = VecX::real({3.0, 4.0});
  CHECK(luxemburg_norm(ModularSpec::norm(), x) == Approx(5.0).margin(1e-12));
  CHECK(luxemburg_norm(ModularSpec::power(2.0), x) == Approx(5.0).margin(1e-12));
  CHECK(luxemburg_norm(ModularSpec::power(1.0), x) == Approx(7.0).margin(1e-12));
  CHECK(luxemburg_norm(ModularSpec::power(2.0), VecX(2)) == 0.0);
  // square Orlicz function: sum (|x_i|/l)^2 = 1  =>  l = Euclidean norm
  CHECK(luxemburg_norm(ModularSpec::orlicz(OrliczPreset::square), x) == Approx(5.0).margin(1e-12));
}

TEST_CASE("luxemburg_norm bisection agrees with the closed form") {
  std::mt19937_64 g(7);
  for (double p : {1.0, 1.5, 2.0, 3.0}) {
    const auto m = ModularSpec::power(p);
    for (int k = 0; k < 200; ++k) {
      const double scale = std::ldexp(1.0, k % 20 - 10);
      const VecX x = random_vec(g, 1 + k % 5, scale);
      const double expected = lp_oracle(x, p);
      CHECK(luxemburg_norm(m, x) == Approx(expected).margin(1e-9));
      CHECK(luxemburg_norm_fast(m, x) == Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("luxemburg_norm of exp Orlicz satisfies its defining equation") {
  std::mt19937_64 g(11);
  const auto m = ModularSpec::orlicz(OrliczPreset::exp_minus_one);
  for (int k = 0; k < 100; ++k) {
    const VecX x = random_vec(g, 3, 5.0);
    const double l = luxemburg_norm(m, x, 1e-13);
    // rho(x / l) = 1 exactly at the infimum; a 1e-12 shift in l moves rho by O(1e-12 * rho'/l)
    CHECK(m(x / l) == Approx(1.0).margin(1e-9));
    CHECK(m(x / (l * (1.0 - 1e-9))) > 1.0);
  }
}

TEST_CASE("luxemburg_norm errors") {
  const auto nonconvex = ModularSpec::orlicz_custom("sqrt", [](double t) { return std::sqrt(t); }, false);
  CHECK_THROWS_AS(luxemburg_norm(nonconvex, VecX::real({1.0})), UnsupportedError);
  CHECK_THROWS_AS(luxemburg_norm(ModularSpec::norm(), VecX::real({1.0}), 0.0), ConfigError);
  // phi >= 2 away from zero: no lambda has rho(x / lambda) <= 1
  const auto floor2 = ModularSpec::orlicz_custom("floor2", [](double t) { return t > 0.0 ? 2.0 + t : 0.0; }, true);
  CHECK_THROWS_AS(luxemburg_norm(floor2, VecX::real({1.0})), DivergenceError);
}

TEST_CASE("luxemburg_norm is absolutely homogeneous") {
  std::mt19937_64 g(3);
  const auto m = ModularSpec::orlicz(OrliczPreset::exp_minus_one);
  for (int k = 0; k < 50; ++k) {
    const VecX x = random_vec(g, 2, 1.0);
    const Scalar a{0.3 * (k + 1), -0.2 * k};
    CHECK(luxemburg_norm(m, a * x) == Approx(std::abs(a) * luxemburg_norm(m, x)).margin(1e-10));
  }
}

TEST_CASE("axioms hold for the shipped modulars") {
  const auto samples = make_axiom_samples(4, 2000, 5);
  for (const auto& m : {ModularSpec::norm(), ModularSpec::power(1.0), ModularSpec::power(2.5),
                        ModularSpec::orlicz(OrliczPreset::square), ModularSpec::orlicz(OrliczPreset::exp_minus_one)}) {
    const auto rep = check_modular_axioms(m, samples);
    INFO(m.name());
    CHECK(rep.pass());
    CHECK(rep.at("(iii)'").checked);
    CHECK(rep.at("(i)").worst_margin <= 0.0);
  }
}

TEST_CASE("axiom samples carry the corner unimodulars and endpoint weights") {
  const auto s = make_axiom_samples(2, 8, 1);
  CHECK(s[0].unimodular == Scalar{1.0, 0.0});
  CHECK(s[1].unimodular == Scalar{-1.0, 0.0});
  CHECK(s[2].unimodular == Scalar{0.0, 1.0});
  CHECK(s[3].unimodular == Scalar{0.0, -1.0});
  CHECK(s[4].alpha == 0.0);
  CHECK(s[5].alpha == 1.0);
  for (const auto& a : s) {
    CHECK(a.alpha + a.beta == Approx(1.0));
    CHECK(a.x.euclidean() <= 1.0 + 1e-15);
  }
  // deterministic
  CHECK(make_axiom_samples(2, 8, 1)[6].x == s[6].x);
}

TEST_CASE("a modular vanishing on nonzero vectors fails axiom (i)") {
  const auto broken = ModularSpec::orlicz_custom("dead-zone", [](double t) { return t < 0.25 ? 0.0 : t; }, false);
  const auto rep = check_modular_axioms(broken, make_axiom_samples(3, 500, 2, 0.2));
  CHECK_FALSE(rep.pass());
  CHECK(rep.at("(i)").worst_margin == 1.0);
  CHECK_FALSE(rep.at("(iii)'").checked);
}

TEST_CASE("a concave phi flagged convex fails the convexity axiom") {
  const auto root = ModularSpec::orlicz_custom("sqrt", [](double t) { return std::sqrt(t); }, true);
  const auto rep = check_modular_axioms(root, make_axiom_samples(2, 500, 9));
  CHECK(rep.at("(iii)").worst_margin <= 0.0);
  CHECK(rep.at("(iii)'").worst_margin > 0.0);
  CHECK_FALSE(rep.pass());
}

TEST_CASE("delta2 constants") {
  std::vector<VecX> xs;
  for (const auto& s : make_axiom_samples(3, 500, 4)) xs.push_back(s.x);
  const auto n = check_delta2(ModularSpec::norm(), xs);
  CHECK(n.kappa_hat == Approx(2.0).epsilon(1e-14));
  CHECK(n.pass);
  CHECK(check_delta2(ModularSpec::power(1.0), xs).pass);
  const auto sq = check_delta2(ModularSpec::orlicz(OrliczPreset::square), xs);
  CHECK(sq.kappa_hat == Approx(4.0));
  CHECK_FALSE(sq.pass);
  CHECK_FALSE(check_delta2(ModularSpec::power(2.0), xs).pass);
  // smaller claimed constant than the truth
  CHECK_FALSE(check_delta2(ModularSpec::norm(1.5), xs).pass);

  CHECK_THROWS_AS(check_delta2(ModularSpec::norm(), {}), PreconditionError);
  CHECK_THROWS_AS(check_delta2(ModularSpec::norm(), {VecX(2)}), PreconditionError);
  const auto dead = ModularSpec::orlicz_custom("dead", [](double t) { return t < 1.0 ? 0.0 : t; }, false);
  CHECK_THROWS_AS(check_delta2(dead, {VecX::real({0.5})}), InvalidModularError);
}

TEST_CASE("remark properties") {
  const auto samples = make_remark_samples(3, 3000, 8, 2.0);
  for (const auto& m : {ModularSpec::norm(), ModularSpec::power(1.0), ModularSpec::power(3.0),
                        ModularSpec::orlicz(OrliczPreset::square), ModularSpec::orlicz(OrliczPreset::exp_minus_one)}) {
    INFO(m.name());
    const auto r = check_remark_properties(m, samples);
    CHECK(r.pass());
    CHECK(r.convex_checked);
  }
  // p = 1 is the equality case of rho(x) <= rho(2x)/2
  const auto r1 = check_remark_properties(ModularSpec::power(1.0), samples);
  CHECK(r1.doubling_margin == Approx(0.0).margin(1e-15));

  std::vector<RemarkSample> bad(1);
  bad[0].x = VecX::real({1.0});
  bad[0].a = 2.0;
  bad[0].b = 1.0;
  CHECK_THROWS_AS(check_remark_properties(ModularSpec::norm(), bad), PreconditionError);
  bad[0].a = 0.5;
  bad[0].alpha = {1.0, 1.0};
  CHECK_THROWS_AS(check_remark_properties(ModularSpec::norm(), bad), PreconditionError);
}

TEST_CASE("Fatou property on convergent sequences") {
  const VecX limit = VecX::real({1.0, 0.0});
  std::vector<VecX> up, down;
  for (int n = 1; n <= 60; ++n) {
    up.push_back((1.0 - std::ldexp(1.0, -n)) * limit);
    down.push_back((1.0 + std::ldexp(1.0, -n)) * limit);
  }
  for (const auto& m : {ModularSpec::norm(), ModularSpec::power(2.0), ModularSpec::orlicz(OrliczPreset::square)}) {
    CHECK(check_fatou(m, up, limit));
    CHECK(check_fatou(m, down, limit));
  }
  CHECK(check_fatou(ModularSpec::norm(), std::vector<VecX>(10, limit), limit));
}

TEST_CASE("Fatou check rejects non-convergent input") {
  const VecX limit = VecX::real({1.0});
  std::vector<VecX> drift;
  for (int n = 1; n <= 40; ++n) drift.push_back(VecX::real({1.0 + 0.01 * n}));
  CHECK_THROWS_AS(check_fatou(ModularSpec::norm(), drift, limit), PreconditionError);
  std::vector<VecX> stuck(40, VecX::real({2.0}));
  CHECK_THROWS_AS(check_fatou(ModularSpec::norm(), stuck, limit), PreconditionError);
  CHECK_THROWS_AS(check_fatou(ModularSpec::norm(), {}, limit), PreconditionError);
}

TEST_CASE("substreams do not depend on partitioning") {
  Stream a = Stream::substream(42, 7);
  Stream b = Stream::substream(42, 7);
  for (int k = 0; k < 10; ++k) CHECK(a.next_u64() == b.next_u64());
  Stream c = Stream::substream(42, 8);
  CHECK(Stream::substream(42, 7).next_u64() != c.next_u64());
  Stream d(1);
  for (int k = 0; k < 1000; ++k) {
    const Scalar v = d.disc(2.0);
    CHECK(std::abs(v) <= 2.0);
    CHECK(std::abs(d.unit_complex()) == Approx(1.0).epsilon(1e-15));
  }
}
