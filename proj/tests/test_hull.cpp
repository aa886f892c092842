#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "wildflow/t4_hull.hpp"

using namespace wildflow;
using namespace wildflow::lambda_geometry;
using namespace wildflow::t4_hull;

namespace {

const Vec2 kZ{0.3, -0.2};

HullSpec default_spec() {
  static HullSpec spec = make_hull_spec(kZ);
  return spec;
}

StateU perturb(Rng& rng, const StateU& s, double eps) {
  double g[5];
  double n2 = 0;
  for (double& gi : g) {
    gi = rng.normal();
    n2 += gi * gi;
  }
  double f = eps * rng.uniform() / std::sqrt(std::max(n2, 1e-300));
  return s + StateU{f * g[0], Vec2{f * g[1], f * g[2]}, Vec2{f * g[3], f * g[4]}};
}

void check_witness(const Witness& w, const StateU& s, const HullSpec& spec) {
  StateU rec = w.mix * w.C + (1.0 - w.mix) * w.X;
  CHECK((rec - s).norm() <= 1e-9 * (1.0 + s.norm()));
  CHECK(spec.ball_margin(w.C) >= -1e-9);
  CHECK(std::abs(cone_residual(w.C - w.X)) <= cone_tolerance(w.C - w.X) * 10);
  CHECK(ConstraintSetK::defect(w.X) <= 1e-9);
  CHECK(w.mix >= 0.0);
  CHECK(w.mix <= 1.0);
  // X certified in the corner image by the preimage.
  T4Configuration pre = t4_for_center(w.preimage);
  CHECK((pre.corners[w.family].v - w.corner_param).norm() <= 1e-6);
}

}  // namespace

TEST_CASE("membership: ball states are members with witnesses") {
  HullSpec spec = default_spec();
  auto res = membership_in_Uz(spec.anchor(), spec);
  REQUIRE(res.member);
  check_witness(res.witness, spec.anchor(), spec);

  Rng rng(211);
  for (int it = 0; it < 25; ++it) {
    StateU s = perturb(rng, spec.anchor(), 0.9 * spec.delta);
    auto r = membership_in_Uz(s, spec);
    REQUIRE(r.member);
    check_witness(r.witness, s, spec);
  }
}

TEST_CASE("membership: segment midpoints") {
  HullSpec spec = default_spec();
  T4Configuration t4 = t4_for_center(spec.anchor());
  StateU mid = 0.5 * (spec.anchor() + t4.corners[0]);
  auto r = membership_in_Uz(mid, spec);
  REQUIRE(r.member);
  CHECK(r.witness.mix == doctest::Approx(0.5).epsilon(0.05));
  check_witness(r.witness, mid, spec);

  // All four corner families.
  for (int f = 1; f < 4; ++f) {
    StateU p = 0.25 * spec.anchor() + 0.75 * t4.corners[f];
    auto rf = membership_in_Uz(p, spec);
    REQUIRE(rf.member);
    check_witness(rf.witness, p, spec);
  }
}

TEST_CASE("membership: far states are rejected with diagnostics") {
  HullSpec spec = default_spec();
  auto r = membership_in_Uz(StateU{1.0, Vec2{5, 5}, Vec2{5, 5}}, spec);
  CHECK_FALSE(r.member);
  CHECK(r.defect > 0.0);
  CHECK_FALSE(r.note.empty());

  // |rho| beyond every hull mix is impossible.
  auto r2 = membership_in_Uz(StateU{1.5, Vec2{0, 0}, kZ}, spec);
  CHECK_FALSE(r2.member);
}

TEST_CASE("openness margin at a hand-made midpoint witness") {
  HullSpec spec = default_spec();
  T4Configuration t4 = t4_for_center(spec.anchor());
  Witness w;
  w.family = 0;
  w.C = spec.anchor();
  w.X = t4.corners[0];
  w.mix = 0.5;
  w.corner_param = t4.corners[0].v;
  w.preimage = spec.anchor();
  double eps = openness_margin(w, spec);
  CHECK(eps > 0.0);

  // Perturbations of the witnessed state re-test as members off K.
  StateU s = w.mix * w.C + (1.0 - w.mix) * w.X;
  Rng rng(223);
  for (int it = 0; it < 60; ++it) {
    StateU sp = perturb(rng, s, eps);
    auto r = membership_in_Uz(sp, spec);
    CHECK(r.member);
    CHECK(dist_to_K(sp) > 0.0);
  }
}

TEST_CASE("openness margin edge cases") {
  HullSpec spec = default_spec();
  T4Configuration t4 = t4_for_center(spec.anchor());
  Witness w;
  w.family = 0;
  w.C = spec.anchor();
  w.X = t4.corners[0];
  w.corner_param = t4.corners[0].v;
  w.preimage = spec.anchor();

  w.mix = 0.0;
  CHECK_THROWS_AS(openness_margin(w, spec), DegenerateWitness);
  w.mix = 1.0;
  CHECK_THROWS_AS(openness_margin(w, spec), DegenerateWitness);

  // C on the ball boundary: zero margin.
  w.mix = 0.5;
  w.C = spec.anchor() + StateU{spec.delta, Vec2{0, 0}, Vec2{0, 0}};
  CHECK(openness_margin(w, spec) == 0.0);
}

TEST_CASE("openness margin shrinks with the ball") {
  HullSpec spec = default_spec();
  T4Configuration t4 = t4_for_center(spec.anchor());
  Witness w;
  w.family = 0;
  w.C = spec.anchor();
  w.X = t4.corners[0];
  w.mix = 0.5;
  w.corner_param = t4.corners[0].v;
  w.preimage = spec.anchor();

  HullSpec small{spec.z, 0.4 * spec.delta};
  CHECK(openness_margin(w, small) < openness_margin(w, spec));
}

TEST_CASE("staircase node algebra at the reference parameters") {
  HullSpec spec = default_spec();
  StateU C = spec.anchor();
  StaircaseLaminate lam = staircase_nodes(C, spec, 0.05, 0.95, 4);
  REQUIRE(lam.bulk.size() == 5);
  REQUIRE(lam.deposit.size() == 4);
  double eh = lam.mix_ratio;
  CHECK(eh == doctest::Approx(0.05 / 1.05).epsilon(1e-15));
  for (int k = 1; k <= 4; ++k) {
    StateU mix = (1.0 - eh) * lam.bulk[k - 1] + eh * lam.deposit[k - 1];
    CHECK((mix - lam.bulk[k]).norm() <= 1e-12);
    StateU step = lam.deposit[k - 1] - lam.bulk[k - 1];
    CHECK(std::abs(cone_residual(step)) <= 1e-10);
  }
}

TEST_CASE("staircase telescoping reproduces the base") {
  // Expanding the mixing tree: C_0 = C_d*(1-eh)^{-d} - sum eh/(1-eh)^{k} T_k
  // re-arranged as the exact barycenter identity below.
  HullSpec spec = default_spec();
  StateU C = spec.anchor();
  StaircaseLaminate lam = staircase_nodes(C, spec, 0.04, 0.9, 6);
  double eh = lam.mix_ratio;
  int d = int(lam.deposit.size());
  // C_d = (1-eh)^d C + sum_k eh (1-eh)^{d-k} T_k.
  StateU acc = std::pow(1.0 - eh, d) * C;
  for (int k = 1; k <= d; ++k) acc += eh * std::pow(1.0 - eh, d - k) * lam.deposit[k - 1];
  CHECK((acc - lam.bulk[d]).norm() <= 1e-10);
}

TEST_CASE("staircase depth zero and error contracts") {
  HullSpec spec = default_spec();
  StateU C = spec.anchor();
  StaircaseLaminate lam = staircase_nodes(C, spec, 0.05, 0.95, 0);
  CHECK(lam.bulk.size() == 1);
  CHECK(lam.deposit.empty());

  // (dist) fails for tiny shrink.
  T4Configuration t4 = t4_for_center(C);
  double s0 = find_min_shrink(C, t4);
  CHECK(s0 > 0.0);
  CHECK(s0 < 1.0);
  CHECK_THROWS_AS(staircase_nodes(C, spec, 0.05, 0.5 * s0, 2), BadShrink);
  CHECK_THROWS_AS(staircase(C + StateU{2 * spec.delta, Vec2{0, 0}, Vec2{0, 0}}, spec, 0.05, 0.95, 1),
                  OutOfBall);
}

TEST_CASE("checked staircase: reference parameters escape, feasible ones pass") {
  HullSpec spec = default_spec();
  StateU C = spec.anchor();
  // At (eps=0.05, s=0.95) the second deposit has |rho| > 1, which no hull mix
  // can reach; the operation must refuse.
  CHECK_THROWS_AS(staircase(C, spec, 0.05, 0.95, 4), CornerEscape);

  // The fixed-base deposits drift off the witness segments at a rate
  // proportional to eps * depth, so deep checked staircases need small eps.
  CHECK_THROWS_AS(staircase(C, spec, 0.018, 0.9, 4), CornerEscape);
  StaircaseLaminate lam = staircase(C, spec, 0.003, 0.9, 4);
  CHECK(lam.bulk.size() == 5);
  for (size_t k = 1; k < lam.bulk.size(); ++k) {
    CHECK(membership_in_Uz(lam.bulk[k], spec).member);
    CHECK(membership_in_Uz(lam.deposit[k - 1], spec).member);
  }
}

TEST_CASE("the barrier is nonpositive on nodes and witness segments") {
  HullSpec spec = default_spec();
  StateU C = spec.anchor();
  StaircaseLaminate lam = staircase_nodes(C, spec, 0.018, 0.9, 8);
  for (const StateU& n : lam.bulk) CHECK(lambda_convex_f(n) <= 1e-10);
  for (const StateU& t : lam.deposit) CHECK(lambda_convex_f(t) <= 1e-10);

  Rng rng(227);
  for (int it = 0; it < 40; ++it) {
    StateU s = perturb(rng, spec.anchor(), 0.9 * spec.delta);
    auto r = membership_in_Uz(s, spec);
    REQUIRE(r.member);
    for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      StateU seg = t * r.witness.C + (1.0 - t) * r.witness.X;
      CHECK(lambda_convex_f(seg) <= 1e-10);
    }
    CHECK(lambda_convex_f(r.witness.X) == 0.0);  // corners lie exactly on K
  }
}
