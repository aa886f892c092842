#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "wildflow/t4_hull.hpp"

using namespace wildflow;
using namespace wildflow::lambda_geometry;
using namespace wildflow::t4_hull;

namespace {

StateU ball_sample(Rng& rng, const HullSpec& spec) {
  for (;;) {
    double g[5];
    double n2 = 0;
    for (double& gi : g) {
      gi = rng.normal();
      n2 += gi * gi;
    }
    double f = spec.delta * std::cbrt(rng.uniform()) / std::sqrt(n2);
    StateU A = spec.anchor() + StateU{f * g[0], Vec2{f * g[1], f * g[2]}, Vec2{f * g[3], f * g[4]}};
    if (t4_margin(A) > 1e-6) return A;
  }
}

}  // namespace

TEST_CASE("t4_for_center worked example") {
  StateU A{0.0, Vec2{0, 0}, Vec2{0.3, -0.2}};
  T4Configuration c = t4_for_center(A);
  CHECK(c.t == doctest::Approx(0.5));
  CHECK(c.x.x == doctest::Approx(0.3));
  CHECK(c.x.y == doctest::Approx(-0.2));
  CHECK(c.y.x == doctest::Approx(-0.3));
  CHECK(c.y.y == doctest::Approx(0.2));
  CHECK(c.a_x.x == doctest::Approx(0.0));
  CHECK(c.a_x.y == doctest::Approx(-0.5));
  CHECK(c.r_x == doctest::Approx(0.5));
  CHECK(c.corners[0].v.x == doctest::Approx(-0.354).epsilon(2e-3));
  CHECK(c.corners[0].v.y == doctest::Approx(-0.854).epsilon(2e-3));
  CHECK(c.corners[1].v.x == doctest::Approx(0.354).epsilon(2e-3));
  CHECK(c.corners[1].v.y == doctest::Approx(-0.146).epsilon(4e-2));
  CHECK(c.weights[0] == doctest::Approx(0.0379).epsilon(3e-3));
  CHECK(c.weights[1] == doctest::Approx(0.462).epsilon(3e-3));
  CHECK(c.weights[2] == doctest::Approx(0.0379).epsilon(3e-3));
  CHECK(c.weights[3] == doctest::Approx(0.462).epsilon(3e-3));

  // Independent oracle: center-corner differences are singular matrices.
  for (const StateU& T : c.corners) {
    CHECK(std::abs(det3(to_matrix(A - T))) <= 1e-12);
    CHECK(std::abs(cone_residual(A - T)) <= 1e-12);
  }
  double wsum = 0;
  StateU rec{};
  for (int i = 0; i < 4; ++i) {
    wsum += c.weights[i];
    rec += c.weights[i] * c.corners[i];
  }
  CHECK(wsum == doctest::Approx(1.0).epsilon(1e-14));
  CHECK((rec - A).norm() <= 1e-12);
}

TEST_CASE("t4_for_center errors") {
  CHECK_THROWS_AS(t4_for_center(StateU{0.0, Vec2{0, 0}, Vec2{0.0, -0.5}}), CenterOnAxis);
  // A state whose x leaves the corner disk.
  CHECK_THROWS_AS(t4_for_center(StateU{0.0, Vec2{0, 0}, Vec2{0.99, 0.0}}), OutOfBall);
  CHECK_THROWS_AS(t4_for_center(StateU{1.2, Vec2{0.1, 0.1}, Vec2{0, 0}}), OutOfBall);
}

TEST_CASE("corners sit exactly on K with rho = +-1") {
  Rng rng(101);
  HullSpec spec = make_hull_spec(Vec2{0.3, -0.2});
  for (int it = 0; it < 300; ++it) {
    StateU A = ball_sample(rng, spec);
    T4Configuration c = t4_for_center(A);
    for (int i = 0; i < 4; ++i) {
      const StateU& T = c.corners[i];
      CHECK(std::abs(std::abs(T.rho) - 1.0) == 0.0);
      CHECK((T.q - T.rho * T.v).norm() == 0.0);
      CHECK(c.weights[i] > 0.0);
      CHECK(c.weights[i] < 1.0);
    }
  }
}

TEST_CASE("reconstruction property over random ball states") {
  Rng rng(103);
  HullSpec spec = make_hull_spec(Vec2{0.3, -0.2});
  for (int it = 0; it < 1000; ++it) {
    StateU A = ball_sample(rng, spec);
    T4Configuration c = t4_for_center(A);
    StateU rec{};
    double wsum = 0;
    for (int i = 0; i < 4; ++i) {
      rec += c.weights[i] * c.corners[i];
      wsum += c.weights[i];
    }
    CHECK((rec - A).norm() <= 1e-10 * (1.0 + A.norm()));
    CHECK(std::abs(wsum - 1.0) <= 1e-12);
    for (const StateU& T : c.corners) CHECK(std::abs(cone_residual(A - T)) <= 1e-10);
  }
}

TEST_CASE("doubled corner radius fails the singularity oracle") {
  StateU A{0.0, Vec2{0, 0}, Vec2{0.3, -0.2}};
  T4Configuration c = t4_for_center(A, RadiusMode::doubled_bug);
  bool any_failure = false;
  for (const StateU& T : c.corners)
    if (std::abs(cone_residual(A - T)) > 1e-6) any_failure = true;
  CHECK(any_failure);
}

TEST_CASE("admissible_delta") {
  double d = admissible_delta(Vec2{0.3, -0.2});
  CHECK(d > 0.0);
  CHECK(d <= 0.25);

  // A-posteriori: random states in the returned ball always yield valid T4s.
  HullSpec spec{Vec2{0.3, -0.2}, d};
  Rng rng(107);
  for (int it = 0; it < 10000; ++it) {
    double g[5];
    double n2 = 0;
    for (double& gi : g) {
      gi = rng.normal();
      n2 += gi * gi;
    }
    double f = d * std::cbrt(rng.uniform()) / std::sqrt(n2);
    StateU A = spec.anchor() + StateU{f * g[0], Vec2{f * g[1], f * g[2]}, Vec2{f * g[3], f * g[4]}};
    CHECK_NOTHROW(t4_for_center(A));
  }

  CHECK_THROWS_AS(admissible_delta(Vec2{0.0, -0.5}), NoAdmissibleDelta);
  CHECK_THROWS_AS(admissible_delta(Vec2{0.99, 0.0}), NoAdmissibleDelta);

  // Returned delta never exceeds the distance to failure; the anchor margin
  // bounds how far any single component may move before (xy) breaks.
  double margin0 = t4_margin(spec.anchor());
  CHECK(d <= margin0);
}

TEST_CASE("delta shrinks near the excluded point and the rim") {
  double d_mid = admissible_delta(Vec2{0.3, -0.2});
  double d_near_axis = admissible_delta(Vec2{0.02, -0.48});
  double d_near_rim = admissible_delta(Vec2{0.44, -0.3});
  CHECK(d_near_axis < d_mid);
  CHECK(d_near_rim < d_mid);
}

TEST_CASE("corner maps are numerical submersions") {
  // 2x5 finite-difference Jacobian of the first corner has full rank 2.
  HullSpec spec = make_hull_spec(Vec2{0.3, -0.2});
  Rng rng(109);
  const double h = 1e-6;
  for (int it = 0; it < 100; ++it) {
    StateU A = ball_sample(rng, spec);
    auto corner0 = [&](const StateU& s) { return t4_for_center(s).corners[0].v; };
    double J[2][5];
    StateU axes[5] = {StateU{h, {0, 0}, {0, 0}}, StateU{0, {h, 0}, {0, 0}},
                      StateU{0, {0, h}, {0, 0}}, StateU{0, {0, 0}, {h, 0}},
                      StateU{0, {0, 0}, {0, h}}};
    for (int k = 0; k < 5; ++k) {
      Vec2 fp = corner0(A + axes[k]);
      Vec2 fm = corner0(A - axes[k]);
      J[0][k] = (fp.x - fm.x) / (2 * h);
      J[1][k] = (fp.y - fm.y) / (2 * h);
    }
    // Smallest singular value of J via the 2x2 Gram matrix.
    double a = 0, b = 0, c = 0;
    for (int k = 0; k < 5; ++k) {
      a += J[0][k] * J[0][k];
      b += J[0][k] * J[1][k];
      c += J[1][k] * J[1][k];
    }
    double tr = a + c, det = a * c - b * b;
    double smin2 = 0.5 * (tr - std::sqrt(std::max(0.0, tr * tr - 4 * det)));
    CHECK(smin2 > 1e-6);
  }
}

TEST_CASE("center-corner differences respect the K-cone sign") {
  // For d = center - corner the cone identity with rho_d != 0 gives
  // rho_d * v_d2 = -|v_d|^2 <= 0; the observable content of the z2 <= 0
  // remark for states in the intersection of K and the cone.
  HullSpec spec = make_hull_spec(Vec2{0.3, -0.2});
  Rng rng(113);
  for (int it = 0; it < 500; ++it) {
    StateU A = ball_sample(rng, spec);
    T4Configuration c = t4_for_center(A);
    for (const StateU& T : c.corners) {
      StateU d = A - T;
      CHECK(d.rho * d.v.y <= 1e-12);
    }
  }
}
