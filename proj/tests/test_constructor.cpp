#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "wildflow/wild_constructor.hpp"

using namespace wildflow;
using namespace wildflow::lambda_geometry;
using namespace wildflow::wild_constructor;

namespace {

ConstructionConfig small_config() {
  ConstructionConfig cfg;
  cfg.rounds = 3;
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST_CASE("initialize yields the constant anchor field") {
  ConstructionConfig cfg = small_config();
  Subsolution sub = initialize(cfg);
  CHECK(sub.nodes.empty());
  Rng rng(41);
  for (int it = 0; it < 50; ++it) {
    Vec3 p{rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(-0.5, 1.5)};
    StateU v = sub.evaluate(p);
    CHECK(v.rho == 0.0);
    CHECK(v.v.norm() == 0.0);
    CHECK((v.q - Vec2{0.3, -0.2}).norm() == 0.0);
  }
  auto d = sub.dist_integral();
  CHECK(d.lo == doctest::Approx(std::sqrt(0.13)).epsilon(1e-12));
  CHECK(d.hi == doctest::Approx(std::sqrt(0.13)).epsilon(1e-12));
}

TEST_CASE("invalid configurations are rejected") {
  ConstructionConfig cfg;
  cfg.horizon = -1.0;
  CHECK_THROWS_AS(initialize(cfg), InvalidConfig);
  cfg = ConstructionConfig{};
  cfg.app_epsilon = 0.7;
  CHECK_THROWS_AS(initialize(cfg), InvalidConfig);
  cfg = ConstructionConfig{};
  cfg.eta = {0.9, 0.9};
  cfg.rounds = 2;
  CHECK_THROWS_AS(initialize(cfg), InvalidConfig);
}

TEST_CASE("app_step: done regions yield empty generations") {
  ConstructionConfig cfg = small_config();
  Subsolution sub = initialize(cfg);
  RegionTask task;
  task.ball = {Vec3{0.5, 0.5, 0.5}, 0.1};
  task.value = StateU{1.0, Vec2{0.3, 0.4}, Vec2{0.3, 0.4}};  // on K
  task.cert = ValueCert{ValueCert::Kind::corner, task.value, task.value, 0.0, 0};
  CHECK(app_step(sub, task, cfg, 0).empty());
  CHECK(sub.nodes.empty());
}

TEST_CASE("app_step: ball case installs a mean-free staircase step") {
  ConstructionConfig cfg = small_config();
  Subsolution sub = initialize(cfg);
  RegionTask task;
  task.parent = -1;
  task.ball = {Vec3{0.5, 0.5, 0.5}, 0.2};
  task.value = sub.base;
  task.cert = ValueCert{ValueCert::Kind::in_ball, sub.base, sub.base, 1.0, 0};
  auto ids = app_step(sub, task, cfg, 0);
  REQUIRE(!ids.empty());
  for (int id : ids) {
    const PatchNode& n = sub.nodes[id];
    // Block direction is a cone direction with usable v2.
    CHECK(std::abs(cone_residual(n.patch.direction)) <=
          cone_tolerance(n.patch.direction) * 10);
    CHECK(std::abs(n.patch.direction.v.y) > 0.0);
    // Deposit value sits on the witness segment, bulk stays in the ball.
    CHECK(n.cert_plus.kind == ValueCert::Kind::segment);
    StateU dep = n.plus_value();
    StateU seg = n.cert_plus.mix * n.cert_plus.C + (1.0 - n.cert_plus.mix) * n.cert_plus.X;
    CHECK((dep - seg).norm() <= 1e-10);
    CHECK(ConstraintSetK::defect(n.cert_plus.X) == 0.0);
    CHECK(n.cert_minus.kind == ValueCert::Kind::in_ball);
    CHECK(sub.hull.in_ball(n.minus_value()));
    // The deposit concentrates near K.
    CHECK(dist_to_K(dep) < 0.05 * dist_to_K(task.value));
  }
}

TEST_CASE("app_step: segment case splits onto the witness endpoints") {
  ConstructionConfig cfg = small_config();
  cfg.freq_base = 12;
  cfg.cutoff_base = 0.05;
  Subsolution sub = initialize(cfg);
  auto t4 = t4_hull::t4_for_center(sub.base);
  StateU C = sub.base;
  StateU X = t4.corners[1];
  double mix = 0.5;
  RegionTask task;
  task.parent = -1;
  task.ball = {Vec3{0.5, 0.5, 0.5}, 0.15};
  task.value = mix * C + (1.0 - mix) * X;
  task.cert = ValueCert{ValueCert::Kind::segment, C, X, mix, 1};
  auto ids = app_step(sub, task, cfg, 0);
  REQUIRE(!ids.empty());
  const PatchNode& n = sub.nodes[ids.front()];
  CHECK((n.plus_value() - C).norm() <= 1e-10);
  CHECK((n.minus_value() - X).norm() <= 1e-10);
  CHECK(n.patch.profile.lambda == doctest::Approx(mix));
  CHECK(n.cert_minus.kind == ValueCert::Kind::corner);
}

TEST_CASE("app_step: concentrated segments recurse into the ball case") {
  ConstructionConfig cfg = small_config();
  cfg.freq_base = 12;
  cfg.cutoff_base = 0.05;
  cfg.max_balls_per_region = 6;
  Subsolution sub = initialize(cfg);
  auto t4 = t4_hull::t4_for_center(sub.base);
  StateU C = sub.base;
  StateU X = t4.corners[1];
  double mix = 0.92;  // above the 7/8 threshold
  RegionTask task;
  task.parent = -1;
  task.ball = {Vec3{0.5, 0.5, 0.5}, 0.2};
  task.value = mix * C + (1.0 - mix) * X;
  task.cert = ValueCert{ValueCert::Kind::segment, C, X, mix, 1};
  auto ids = app_step(sub, task, cfg, 0);
  REQUIRE(ids.size() > 1);
  // The first block concentrates mix of the measure at C; later nodes are
  // children living in its plus band.
  const PatchNode& head = sub.nodes[ids.front()];
  CHECK((head.plus_value() - C).norm() <= 1e-10);
  bool nested = false;
  for (size_t i = 1; i < ids.size(); ++i) {
    const PatchNode& n = sub.nodes[ids[i]];
    if (n.parent == ids.front()) {
      CHECK(n.parent_band == +1);
      CHECK((n.backdrop - C).norm() <= 1e-10);
      nested = true;
    }
  }
  CHECK(nested);
}

TEST_CASE("app_step: values outside the hull are refused") {
  ConstructionConfig cfg = small_config();
  Subsolution sub = initialize(cfg);
  RegionTask task;
  task.ball = {Vec3{0.5, 0.5, 0.5}, 0.1};
  task.value = StateU{0.0, Vec2{3, 3}, Vec2{5, 5}};
  task.cert = ValueCert{};  // unknown
  CHECK_THROWS_AS(app_step(sub, task, cfg, 0), NotInHull);
}

TEST_CASE("perturbation round: disjoint supports and the L1 lower bound") {
  ConstructionConfig cfg = small_config();
  Subsolution sub = initialize(cfg);
  RoundLog log = perturbation_round(sub, cfg, 0);
  REQUIRE(log.patches_added > 0);

  // Root supports pairwise disjoint on the torus.
  for (size_t i = 0; i < sub.roots.size(); ++i)
    for (size_t j = i + 1; j < sub.roots.size(); ++j) {
      const auto& a = sub.nodes[sub.roots[i]].patch;
      const auto& b = sub.nodes[sub.roots[j]].patch;
      CHECK(torus_offset(a.center, b.center).norm() >= a.radius + b.radius);
    }

  // Perturbation bound: the increment mass dominates the dist mass of
  // the processed region with the module constant c = c0 * c1.
  double c = (7.0 / 32.0) * log.c1;
  CHECK(log.increment_l1 >= 0.5 * c * log.processed_measure * dist_to_K(sub.base));
  CHECK(log.app_fraction >= 7.0 / 32.0);
  CHECK(log.dist_after.hi < log.dist_before.hi);
}

TEST_CASE("perturbation round is a no-op on a K-valued field") {
  ConstructionConfig cfg = small_config();
  Subsolution sub = initialize(cfg);
  sub.base = StateU{1.0, Vec2{0.2, 0.1}, Vec2{0.2, 0.1}};  // lies on K
  RoundLog log = perturbation_round(sub, cfg, 0);
  CHECK(log.patches_added == 0);
  CHECK(sub.nodes.empty());
}

TEST_CASE("direct construction: zero rounds") {
  ConstructionConfig cfg = small_config();
  cfg.rounds = 0;
  ConstructionResult res = direct_construction(cfg);
  CHECK(res.final.nodes.empty());
  CHECK(res.log.node_counts.size() == 1);
  CHECK(res.log.rounds.empty());
}

TEST_CASE("direct construction: monotone progress and boundary pinning") {
  ConstructionConfig cfg = small_config();
  ConstructionResult res = direct_construction(cfg);
  REQUIRE(res.log.rounds.size() == 3);

  double prev_dist = res.final.dist_integral(0).hi;
  double prev_rho = res.final.rho_near_fraction(0.1, 0).lo;
  for (int r = 1; r <= 3; ++r) {
    int limit = res.log.node_counts[r];
    double d = res.final.dist_integral(limit).hi;
    double rho = res.final.rho_near_fraction(0.1, limit).lo;
    CHECK(d < prev_dist);
    CHECK(rho > prev_rho);
    prev_dist = d;
    prev_rho = rho;
  }

  // Pinning: the field equals the anchor outside (0,T), exactly.
  Rng rng(43);
  for (int it = 0; it < 200; ++it) {
    Vec3 p{rng.uniform(0, 1), rng.uniform(0, 1),
           (it % 2 == 0) ? rng.uniform(-1.0, 0.0) : rng.uniform(1.0, 2.0)};
    CHECK((res.final.evaluate(p) - res.final.base).norm() == 0.0);
  }

  // Hull confinement: every plateau value certified inside U_z.
  for (const auto& leaf : res.final.leaf_regions()) {
    if (leaf.measure <= 0.0) continue;
    if (leaf.cert.kind == ValueCert::Kind::segment) {
      StateU seg = leaf.cert.mix * leaf.cert.C + (1.0 - leaf.cert.mix) * leaf.cert.X;
      CHECK((seg - leaf.value).norm() <= 1e-9);
      CHECK(res.final.hull.in_ball(leaf.cert.C));
      CHECK(std::abs(cone_residual(leaf.cert.C - leaf.cert.X)) <=
            10 * cone_tolerance(leaf.cert.C - leaf.cert.X));
    } else if (leaf.cert.kind == ValueCert::Kind::in_ball) {
      CHECK(res.final.hull.in_ball(leaf.value));
    }
  }

  // Weak-closeness gates hold with the scheduled frequencies.
  for (const RoundLog& r : res.log.rounds) CHECK(r.pairing_bound <= r.pairing_gate);
}

TEST_CASE("direct construction: determinism and seed sensitivity") {
  ConstructionConfig cfg = small_config();
  ConstructionResult a = direct_construction(cfg);
  ConstructionResult b = direct_construction(cfg);
  std::ostringstream sa, sb;
  a.final.serialize(sa);
  b.final.serialize(sb);
  CHECK(sa.str() == sb.str());

  cfg.seed = 12;
  ConstructionResult c = direct_construction(cfg);
  std::ostringstream sc;
  c.final.serialize(sc);
  CHECK(sa.str() != sc.str());
}

TEST_CASE("exact accounting agrees with field sampling") {
  ConstructionConfig cfg = small_config();
  cfg.rounds = 1;
  ConstructionResult res = direct_construction(cfg);
  const Subsolution& sub = res.final;

  auto bounds = sub.dist_integral();
  auto rho_b = sub.rho_near_fraction(0.1);
  Rng mc(47);
  int n = 60000;
  double dist_mc = 0.0;
  int rho_hits = 0;
  for (int i = 0; i < n; ++i) {
    Vec3 p{mc.uniform(0, 1), mc.uniform(0, 1), mc.uniform(0, sub.horizon)};
    StateU v = sub.evaluate(p);
    dist_mc += dist_to_K(v);
    if (std::abs(std::abs(v.rho) - 1.0) <= 0.1) ++rho_hits;
  }
  dist_mc *= sub.horizon / n;
  double rho_mc = double(rho_hits) / n;
  // Monte-Carlo value must land inside the symbolic interval up to sampling
  // noise.
  CHECK(dist_mc >= bounds.lo - 0.01);
  CHECK(dist_mc <= bounds.hi + 0.01);
  CHECK(rho_mc >= rho_b.lo - 0.01);
  CHECK(rho_mc <= rho_b.hi + 0.01);
}

TEST_CASE("tolerance gate raises when the schedule is exhausted") {
  ConstructionConfig cfg = small_config();
  cfg.rounds = 1;
  cfg.freq_base = 1;
  cfg.freq_cap = 1;
  cfg.cutoff_base = 0.1;
  cfg.root_lattice = 1;  // few large patches push the pairing bound high
  cfg.horizon = 3.0;
  CHECK_THROWS_AS(direct_construction(cfg), ToleranceUnreachable);
}
