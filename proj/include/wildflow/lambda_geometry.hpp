#pragma once

// State space of the linearized system, its 3x3 matrix embedding, the wave
// cone, the Lambda-convex barrier and distances to the constraint manifold
// K = {(rho, u, rho u)}.

#include <optional>

#include "wildflow/geometry.hpp"

namespace wildflow::lambda_geometry {

// A point (rho, v, q) in R x R^2 x R^2. The (rho, w, z) coordinates used by
// the hull module are aliases: w = v, z = q.
struct StateU {
  double rho = 0.0;
  Vec2 v{};
  Vec2 q{};

  StateU() = default;
  StateU(double r, Vec2 v_, Vec2 q_) : rho(r), v(v_), q(q_) {}

  StateU operator+(const StateU& o) const { return {rho + o.rho, v + o.v, q + o.q}; }
  StateU operator-(const StateU& o) const { return {rho - o.rho, v - o.v, q - o.q}; }
  StateU operator-() const { return {-rho, -v, -q}; }
  StateU operator*(double a) const { return {a * rho, v * a, q * a}; }
  StateU& operator+=(const StateU& o) {
    rho += o.rho;
    v += o.v;
    q += o.q;
    return *this;
  }
  double norm2() const { return rho * rho + v.norm2() + q.norm2(); }
  double norm() const { return std::sqrt(norm2()); }
};

inline StateU operator*(double a, const StateU& s) { return s * a; }

// [[-v2-rho, v1, 0], [v1, v2, 0], [q1, q2, rho]]; linear in the state.
inline Mat3 to_matrix(const StateU& s) {
  Mat3 m;
  m(0, 0) = -s.v.y - s.rho;
  m(0, 1) = s.v.x;
  m(0, 2) = 0.0;
  m(1, 0) = s.v.x;
  m(1, 1) = s.v.y;
  m(1, 2) = 0.0;
  m(2, 0) = s.q.x;
  m(2, 1) = s.q.y;
  m(2, 2) = s.rho;
  return m;
}

// rho*(v1^2 + v2^2 + rho*v2); equals -det(to_matrix(s)) identically. The state
// is a wave-cone direction iff this vanishes.
inline double cone_residual(const StateU& s) {
  return s.rho * (s.v.x * s.v.x + s.v.y * s.v.y + s.rho * s.v.y);
}

// The residual is cubic, so the membership tolerance scales like (1+|s|)^3.
inline double cone_tolerance(const StateU& s) {
  double n = 1.0 + s.norm();
  return 1e-12 * n * n * n;
}

inline bool in_cone(const StateU& s) { return std::abs(cone_residual(s)) <= cone_tolerance(s); }

inline bool segment_in_cone(const StateU& a, const StateU& b) { return in_cone(a - b); }

// Barrier f(A) = q2 - rho*v2. Vanishes on K, Lambda-convex, and bounds the
// Lambda-hull from one side: hull points satisfy f <= 0.
inline double lambda_convex_f(const StateU& s) { return s.q.y - s.rho * s.v.y; }

// Constraint manifold K described implicitly by q = rho*v. Carries the
// defect |q - rho v| used by membership predicates.
struct ConstraintSetK {
  static double defect(const StateU& s) { return (s.q - s.rho * s.v).norm(); }
  static bool contains(const StateU& s, double tol = 1e-12) { return defect(s) <= tol; }
};

struct KProjection {
  double dist = 0.0;
  double r = 0.0;  // density of the nearest K point
  Vec2 u{};        // velocity of the nearest K point
};

// Euclidean distance in R^5 from s to {(r, u, r u)}. For fixed r the optimal
// u is the least-squares solution u = (v + r q)/(1 + r^2), which reduces the
// problem to one variable:
//   phi(r) = (rho - r)^2 + |r v - q|^2 / (1 + r^2).
// A coarse scan brackets every local minimum and golden-section refines each;
// the scan radius covers all candidate minimizers of the coercive phi.
KProjection project_to_K(const StateU& s);

inline double dist_to_K(const StateU& s) { return project_to_K(s).dist; }

}  // namespace wildflow::lambda_geometry
