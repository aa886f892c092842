#include "wildflow/t4_hull.hpp"

#include <algorithm>
#include <cmath>

namespace wildflow::t4_hull {

using lambda_geometry::cone_residual;
using lambda_geometry::dist_to_K;
using lambda_geometry::in_cone;

namespace {

constexpr double kAxisTol = 1e-12;

struct CornerGeometry {
  double t;
  Vec2 x, y, a_x, a_y;
  double r_x, r_y;
  double nx, ny;  // |x - a_x|, |y - a_y|
};

CornerGeometry corner_geometry(const StateU& A, RadiusMode mode) {
  if (std::abs(A.rho) >= 1.0) throw OutOfBall("t4_for_center: |rho| >= 1");
  CornerGeometry g;
  g.t = 0.5 * (1.0 + A.rho);
  g.x = (A.q + A.v) * (1.0 / (1.0 + A.rho));
  g.y = (A.v - A.q) * (1.0 / (1.0 - A.rho));
  g.a_x = A.v + Vec2{0.0, -0.5 * (1.0 - A.rho)};
  g.a_y = A.v + Vec2{0.0, 0.5 * (1.0 + A.rho)};
  double scale = (mode == RadiusMode::corrected) ? 0.5 : 1.0;
  g.r_x = scale * (1.0 - A.rho);
  g.r_y = scale * (1.0 + A.rho);
  g.nx = (g.x - g.a_x).norm();
  g.ny = (g.y - g.a_y).norm();
  return g;
}

}  // namespace

T4Configuration t4_for_center(const StateU& A, RadiusMode mode) {
  CornerGeometry g = corner_geometry(A, mode);
  double axis_scale = kAxisTol * (1.0 + A.norm());
  if (g.nx <= axis_scale) throw CenterOnAxis("t4_for_center: x lands on its circle center");
  if (g.ny <= axis_scale) throw CenterOnAxis("t4_for_center: y lands on its circle center");
  if (g.nx >= g.r_x) throw OutOfBall("t4_for_center: x outside its corner disk");
  if (g.ny >= g.r_y) throw OutOfBall("t4_for_center: y outside its corner disk");

  Vec2 ux = (g.x - g.a_x) * (1.0 / g.nx);
  Vec2 uy = (g.y - g.a_y) * (1.0 / g.ny);
  Vec2 x1 = g.a_x - g.r_x * ux;
  Vec2 x2 = g.a_x + g.r_x * ux;
  Vec2 y1 = g.a_y - g.r_y * uy;
  Vec2 y2 = g.a_y + g.r_y * uy;
  double mu1 = 0.5 * (1.0 - g.nx / g.r_x);
  double mu2 = 0.5 * (1.0 + g.nx / g.r_x);
  double nu1 = 0.5 * (1.0 - g.ny / g.r_y);
  double nu2 = 0.5 * (1.0 + g.ny / g.r_y);

  T4Configuration c;
  c.center = A;
  c.t = g.t;
  c.x = g.x;
  c.y = g.y;
  c.a_x = g.a_x;
  c.a_y = g.a_y;
  c.r_x = g.r_x;
  c.r_y = g.r_y;
  c.corners[0] = StateU{1.0, x1, x1};
  c.corners[1] = StateU{1.0, x2, x2};
  c.corners[2] = StateU{-1.0, y1, -y1};
  c.corners[3] = StateU{-1.0, y2, -y2};
  c.weights[0] = g.t * mu1;
  c.weights[1] = g.t * mu2;
  c.weights[2] = (1.0 - g.t) * nu1;
  c.weights[3] = (1.0 - g.t) * nu2;
  return c;
}

double t4_margin(const StateU& A) {
  if (std::abs(A.rho) >= 1.0) return -std::abs(A.rho);
  CornerGeometry g = corner_geometry(A, RadiusMode::corrected);
  double m = std::min({g.nx, g.r_x - g.nx, g.ny, g.r_y - g.ny});
  return std::min(m, 1.0 - std::abs(A.rho));
}

namespace {

StateU axis_direction(int k, double step) {
  StateU d{};
  if (k == 0)
    d.rho = step;
  else if (k == 1)
    d.v.x = step;
  else if (k == 2)
    d.v.y = step;
  else if (k == 3)
    d.q.x = step;
  else
    d.q.y = step;
  return d;
}

// The five margin channels of condition (xy); large sentinel where the
// geometry is undefined so the rho channel drives the descent there.
double margin_channel(const StateU& A, int channel) {
  if (channel == 4) return 1.0 - std::abs(A.rho);
  if (std::abs(A.rho) >= 0.999) return 10.0;
  CornerGeometry g = corner_geometry(A, RadiusMode::corrected);
  switch (channel) {
    case 0: return g.nx;
    case 1: return g.r_x - g.nx;
    case 2: return g.ny;
    default: return g.r_y - g.ny;
  }
}

StateU project_ball(const StateU& A, const StateU& anchor, double delta) {
  StateU d = A - anchor;
  double n = d.norm();
  if (n <= delta) return A;
  return anchor + d * (delta / n);
}

// Worst-case state of one margin channel over the closed ball, by projected
// finite-difference descent from deterministic starts.
std::pair<double, StateU> minimize_channel(const StateU& anchor, double delta, int channel) {
  const double h = 1e-7 * (1.0 + delta);
  std::vector<StateU> starts = {anchor};
  for (int k = 0; k < 5; ++k) {
    starts.push_back(anchor + axis_direction(k, 0.95 * delta));
    starts.push_back(anchor + axis_direction(k, -0.95 * delta));
  }
  double best = std::numeric_limits<double>::infinity();
  StateU best_A = anchor;
  for (const StateU& s0 : starts) {
    StateU A = s0;
    double f = margin_channel(A, channel);
    for (int it = 0; it < 40; ++it) {
      double grad[5];
      for (int k = 0; k < 5; ++k) {
        double fp = margin_channel(project_ball(A + axis_direction(k, h), anchor, delta), channel);
        double fm = margin_channel(project_ball(A + axis_direction(k, -h), anchor, delta), channel);
        grad[k] = (fp - fm) / (2 * h);
      }
      double gn2 = 0;
      for (double g : grad) gn2 += g * g;
      if (gn2 < 1e-24) break;
      double step = 0.2 * delta / std::sqrt(gn2);
      bool improved = false;
      for (int bt = 0; bt < 12; ++bt, step *= 0.5) {
        StateU cand = A;
        for (int k = 0; k < 5; ++k) cand += axis_direction(k, -step * grad[k]);
        cand = project_ball(cand, anchor, delta);
        double fc = margin_channel(cand, channel);
        if (fc < f - 1e-15) {
          A = cand;
          f = fc;
          improved = true;
          break;
        }
      }
      if (!improved) break;
    }
    if (f < best) {
      best = f;
      best_A = A;
    }
  }
  return {best, best_A};
}

std::pair<double, StateU> worst_margin_over_ball(const StateU& anchor, double delta) {
  double best = std::numeric_limits<double>::infinity();
  StateU best_A = anchor;
  for (int ch = 0; ch < 5; ++ch) {
    auto [f, A] = minimize_channel(anchor, delta, ch);
    double m = t4_margin(A);
    if (m < best) {
      best = m;
      best_A = A;
    }
    if (f < best) {
      best = std::min(best, f);
      best_A = A;
    }
  }
  return {best, best_A};
}

}  // namespace

double admissible_delta(const Vec2& z, const DeltaOptions& opts) {
  StateU anchor{0.0, Vec2{0, 0}, z};
  double margin0 = t4_margin(anchor);
  if (margin0 < opts.floor_margin + 1e-6)
    throw NoAdmissibleDelta("admissible_delta: anchor margin below the floor");

  // The q-radial direction consumes the anchor margin one-for-one, so the
  // admissible radius never exceeds margin0 - floor; shrink from there along
  // worst-case directions found by descent.
  double delta = std::min(opts.cap, margin0 - opts.floor_margin);
  double last_infeasible = std::numeric_limits<double>::infinity();
  for (int outer = 0; outer < 10; ++outer) {
    auto [worst, worst_A] = worst_margin_over_ball(anchor, delta);
    if (worst >= opts.floor_margin) {
      // Seeded random validation; shrink on any miss.
      Rng rng(opts.seed);
      bool ok = true;
      int total = opts.boundary_samples + opts.interior_samples;
      for (int i = 0; i < total && ok; ++i) {
        double g[5];
        double n2 = 0.0;
        for (double& gi : g) {
          gi = rng.normal();
          n2 += gi * gi;
        }
        double radius = (i < opts.boundary_samples) ? delta : delta * std::cbrt(rng.uniform());
        double f = radius / std::sqrt(std::max(n2, 1e-300));
        StateU A = anchor + StateU{f * g[0], Vec2{f * g[1], f * g[2]}, Vec2{f * g[3], f * g[4]}};
        if (t4_margin(A) < opts.floor_margin) ok = false;
      }
      if (ok) return delta;
    }
    last_infeasible = delta;
    // Walk the floor crossing along the ray to the worst state.
    StateU dir = worst_A - anchor;
    double n = dir.norm();
    if (n < 1e-12) throw NoAdmissibleDelta("admissible_delta: anchor itself is on the margin floor");
    dir = dir * (1.0 / n);
    double lo = 0.0, hi = n;
    for (int it = 0; it < 40; ++it) {
      double mid = 0.5 * (lo + hi);
      if (t4_margin(anchor + dir * mid) >= opts.floor_margin)
        lo = mid;
      else
        hi = mid;
    }
    double next = 0.98 * lo;
    if (next < 1e-6) throw NoAdmissibleDelta("admissible_delta: no positive radius survives");
    delta = std::min(next, 0.98 * last_infeasible);
  }
  return delta * 0.5;  // conservative fallback when the loop does not settle
}

namespace {

// Corner map of one family as a function of the ball state; throws like
// t4_for_center when the state is invalid.
Vec2 corner_of(int family, const StateU& A) {
  CornerGeometry g = corner_geometry(A, RadiusMode::corrected);
  double axis_scale = kAxisTol * (1.0 + A.norm());
  if (family < 2) {
    if (g.nx <= axis_scale) throw CenterOnAxis("corner_of");
    if (g.nx >= g.r_x) throw OutOfBall("corner_of");
    Vec2 ux = (g.x - g.a_x) * (1.0 / g.nx);
    return (family == 0) ? g.a_x - g.r_x * ux : g.a_x + g.r_x * ux;
  }
  if (g.ny <= axis_scale) throw CenterOnAxis("corner_of");
  if (g.ny >= g.r_y) throw OutOfBall("corner_of");
  Vec2 uy = (g.y - g.a_y) * (1.0 / g.ny);
  return (family == 2) ? g.a_y - g.r_y * uy : g.a_y + g.r_y * uy;
}

StateU corner_state(int family, const Vec2& p) {
  return (family < 2) ? StateU{1.0, p, p} : StateU{-1.0, p, -p};
}

StateU clamp_to_ball(const StateU& A, const HullSpec& spec, double shrink = 1.0) {
  StateU d = A - spec.anchor();
  double n = d.norm();
  double cap = spec.delta * shrink;
  if (n <= cap) return A;
  return spec.anchor() + d * (cap / n);
}

}  // namespace

std::optional<StateU> corner_preimage(int family, const Vec2& p, const HullSpec& spec, double tol,
                                      const StateU* warm_start) {
  // Gauss-Newton with finite-difference Jacobian, iterates projected onto the
  // closed ball. Start points are fixed for determinism.
  std::vector<StateU> starts;
  if (warm_start) starts.push_back(clamp_to_ball(*warm_start, spec));
  starts.push_back(spec.anchor());
  const double d6 = spec.delta * 0.6;
  starts.push_back(spec.anchor() + StateU{d6, {0, 0}, {0, 0}});
  starts.push_back(spec.anchor() + StateU{-d6, {0, 0}, {0, 0}});
  starts.push_back(spec.anchor() + StateU{0, {d6, 0}, {0, 0}});
  starts.push_back(spec.anchor() + StateU{0, {0, d6}, {0, 0}});
  starts.push_back(spec.anchor() + StateU{0, {0, 0}, {d6, 0}});
  starts.push_back(spec.anchor() + StateU{0, {0, 0}, {0, d6}});
  starts.push_back(spec.anchor() + StateU{0, {-d6, 0}, {0, -d6}});
  starts.push_back(spec.anchor() + StateU{0, {0, -d6}, {-d6, 0}});

  auto eval = [&](const StateU& A, Vec2& out) -> bool {
    try {
      out = corner_of(family, A);
      return true;
    } catch (const std::runtime_error&) {
      return false;
    }
  };

  const double h = 1e-7 * (1.0 + spec.delta);
  auto axis_state = [](int k, double step) {
    StateU d{};
    if (k == 0)
      d.rho = step;
    else if (k == 1)
      d.v.x = step;
    else if (k == 2)
      d.v.y = step;
    else if (k == 3)
      d.q.x = step;
    else
      d.q.y = step;
    return d;
  };

  for (const StateU& s0 : starts) {
    StateU A = s0;
    Vec2 f;
    if (!eval(A, f)) continue;
    double lambda = 1e-3;
    for (int it = 0; it < 60; ++it) {
      Vec2 r = f - p;
      if (r.norm() <= tol) return A;
      // 2x5 Jacobian by central differences.
      double J[2][5];
      bool ok = true;
      for (int k = 0; k < 5 && ok; ++k) {
        Vec2 fp, fm;
        ok = eval(clamp_to_ball(A + axis_state(k, h), spec), fp) &&
             eval(clamp_to_ball(A + axis_state(k, -h), spec), fm);
        if (ok) {
          J[0][k] = (fp.x - fm.x) / (2 * h);
          J[1][k] = (fp.y - fm.y) / (2 * h);
        }
      }
      if (!ok) break;
      // Solve min |J d + r|^2 + lambda |d|^2 via the 2x2 normal system of
      // J J^T (underdetermined least-norm step d = J^T (J J^T + l I)^{-1} (-r)).
      double a11 = lambda, a12 = 0.0, a22 = lambda;
      for (int k = 0; k < 5; ++k) {
        a11 += J[0][k] * J[0][k];
        a12 += J[0][k] * J[1][k];
        a22 += J[1][k] * J[1][k];
      }
      double det = a11 * a22 - a12 * a12;
      if (std::abs(det) < 1e-30) break;
      double b1 = -r.x, b2 = -r.y;
      double m1 = (a22 * b1 - a12 * b2) / det;
      double m2 = (a11 * b2 - a12 * b1) / det;
      StateU d{};
      for (int k = 0; k < 5; ++k) {
        double dk = J[0][k] * m1 + J[1][k] * m2;
        d += axis_state(k, dk);
      }
      StateU Anew = clamp_to_ball(A + d, spec);
      Vec2 fnew;
      if (eval(Anew, fnew) && (fnew - p).norm() < r.norm()) {
        A = Anew;
        f = fnew;
        lambda = std::max(lambda * 0.5, 1e-9);
      } else {
        lambda *= 4.0;
        if (lambda > 1e6) break;
      }
    }
    Vec2 ff;
    if (eval(A, ff) && (ff - p).norm() <= tol) return A;
  }
  return std::nullopt;
}

double corner_image_boundary_dist(int family, const Vec2& p, const HullSpec& spec, int rays,
                                  int bisections) {
  auto hit = corner_preimage(family, p, spec);
  if (!hit) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  const double reach0 = 4.0 * spec.delta + 0.5;
  for (int k = 0; k < rays; ++k) {
    double ang = 2.0 * M_PI * k / rays;
    Vec2 dir{std::cos(ang), std::sin(ang)};
    // Grow until outside the image.
    double hi = reach0;
    StateU warm = *hit;
    bool found_outside = false;
    for (int g = 0; g < 6; ++g) {
      if (!corner_preimage(family, p + hi * dir, spec, 1e-8, &warm)) {
        found_outside = true;
        break;
      }
      hi *= 2.0;
    }
    if (!found_outside) continue;
    double lo = 0.0;
    for (int it = 0; it < bisections; ++it) {
      double mid = 0.5 * (lo + hi);
      auto q = corner_preimage(family, p + mid * dir, spec, 1e-8, &warm);
      if (q) {
        lo = mid;
        warm = *q;
      } else {
        hi = mid;
      }
    }
    best = std::min(best, lo);
    if (best == 0.0) break;
  }
  return std::isfinite(best) ? best : reach0;
}

namespace {

struct CircleParam {
  bool valid = false;
  Vec2 center{};
  double radius = 0.0;
};

// Circle of corner parameters x with s - corner_state(x) in the cone.
CircleParam corner_circle(int family, const StateU& s) {
  CircleParam c;
  if (family < 2) {
    double rad = 0.5 * (1.0 - s.rho);
    if (rad <= 1e-9) return c;
    c.valid = true;
    c.center = s.v + Vec2{0.0, -rad};
    c.radius = rad;
  } else {
    double rad = 0.5 * (1.0 + s.rho);
    if (rad <= 1e-9) return c;
    c.valid = true;
    c.center = s.v + Vec2{0.0, rad};
    c.radius = rad;
  }
  return c;
}

}  // namespace

MembershipResult membership_in_Uz(const StateU& s, const HullSpec& spec,
                                  const MembershipOptions& opts) {
  MembershipResult res;
  res.defect = std::numeric_limits<double>::infinity();
  const StateU O = spec.anchor();

  // Trivial case: s in B_z. Witness with C = s pushed outward along the first
  // available corner direction so the mix is interior.
  if (spec.in_ball(s)) {
    try {
      T4Configuration t4 = t4_for_center(s);
      const StateU& X = t4.corners[0];
      StateU D = s - X;
      // Largest u with s + u*(s - X) still in the ball.
      double a = D.norm2();
      StateU so = s - O;
      double b = 2.0 * (D.rho * so.rho + D.v.dot(so.v) + D.q.dot(so.q));
      double c = so.norm2() - spec.delta * spec.delta;
      double disc = b * b - 4 * a * c;
      double u = 0.0;
      if (disc > 0.0 && a > 0.0) u = std::max(0.0, (-b + std::sqrt(disc)) / (2 * a)) * 0.5;
      StateU C = s + u * D;
      res.member = true;
      res.witness = Witness{0, C, X, 1.0 / (1.0 + u), t4.corners[0].v, s};
      res.defect = 0.0;
      return res;
    } catch (const std::runtime_error&) {
      // fall through to the general search
    }
  }

  Rng rng(opts.seed);
  double angle_offset = rng.uniform() * 2.0 * M_PI / opts.angle_samples;

  // One angle probe: either produces a witness or reports the geometric
  // defect of the closest admissible segment.
  auto try_angle = [&](int family, const CircleParam& circle, double ang,
                       double& defect_out) -> std::optional<Witness> {
    defect_out = std::numeric_limits<double>::infinity();
    Vec2 p = circle.center + circle.radius * Vec2{std::cos(ang), std::sin(ang)};
    StateU X = corner_state(family, p);
    StateU D = s - X;
    double a = D.norm2();
    if (a < 1e-28) {
      auto pre = corner_preimage(family, p, spec, opts.image_tol);
      if (pre) return Witness{family, *pre, X, 0.0, p, *pre};
      defect_out = 1.0;
      return std::nullopt;
    }
    StateU xo = X - O;
    double b = 2.0 * (D.rho * xo.rho + D.v.dot(xo.v) + D.q.dot(xo.q));
    double c = xo.norm2() - spec.delta * spec.delta;
    double disc = b * b - 4 * a * c;
    if (disc < 0.0) {
      double u_star = std::max(1.0, -b / (2 * a));
      defect_out = (X + u_star * D - O).norm() - spec.delta;
      return std::nullopt;
    }
    double u_lo = (-b - std::sqrt(disc)) / (2 * a);
    double u_hi = (-b + std::sqrt(disc)) / (2 * a);
    if (u_hi < 1.0) {
      defect_out = (X + std::max(1.0, u_hi) * D - O).norm() - spec.delta;
      return std::nullopt;
    }
    auto pre = corner_preimage(family, p, spec, opts.image_tol);
    if (!pre) {
      defect_out = 1.0;
      return std::nullopt;
    }
    // Deepest ball point on the feasible segment for the best margins.
    double u_star = (a > 0.0) ? -b / (2 * a) : 1.0;
    double u = std::clamp(u_star, std::max(1.0, u_lo), u_hi);
    return Witness{family, X + u * D, X, 1.0 / u, p, *pre};
  };

  std::array<double, 4> best_angle{};
  std::array<double, 4> best_defect;
  best_defect.fill(std::numeric_limits<double>::infinity());

  for (int family = 0; family < 4; ++family) {
    CircleParam circle = corner_circle(family, s);
    if (!circle.valid) continue;
    for (int ia = 0; ia < opts.angle_samples; ++ia) {
      double ang = angle_offset + 2.0 * M_PI * ia / opts.angle_samples;
      double defect;
      if (auto w = try_angle(family, circle, ang, defect)) {
        res.member = true;
        res.witness = *w;
        res.defect = 0.0;
        return res;
      }
      if (defect < best_defect[family]) {
        best_defect[family] = defect;
        best_angle[family] = ang;
      }
    }
  }

  // Narrow witness windows: refine around the best miss of each family.
  double coarse = 2.0 * M_PI / opts.angle_samples;
  for (int family = 0; family < 4; ++family) {
    if (!std::isfinite(best_defect[family])) continue;
    CircleParam circle = corner_circle(family, s);
    const int fine = 96;
    for (int ia = -fine; ia <= fine; ++ia) {
      double ang = best_angle[family] + 2.0 * coarse * ia / fine;
      double defect;
      if (auto w = try_angle(family, circle, ang, defect)) {
        res.member = true;
        res.witness = *w;
        res.defect = 0.0;
        return res;
      }
      if (defect < res.defect) {
        res.defect = defect;
        res.note = "best near-witness defect after refinement";
      }
    }
  }
  if (!std::isfinite(res.defect)) {
    res.defect = *std::min_element(best_defect.begin(), best_defect.end());
    res.note = "no admissible corner circle";
  }
  return res;
}

double openness_margin(const Witness& w, const HullSpec& spec) {
  if (w.mix <= 0.0 || w.mix >= 1.0)
    throw DegenerateWitness("openness_margin: mix must lie in (0,1)");
  double ball_term = w.mix * std::max(0.0, spec.ball_margin(w.C));
  if (ball_term == 0.0) return 0.0;
  double image_term = corner_image_boundary_dist(w.family, w.corner_param, spec);
  double eps = 0.125 * std::min(ball_term, image_term);
  StateU s = w.mix * w.C + (1.0 - w.mix) * w.X;
  double dk = dist_to_K(s);
  if (dk > 0.0) eps = std::min(eps, 0.5 * dk);
  return eps;
}

double find_min_shrink(const StateU& C, const T4Configuration& t4) {
  double dist = dist_to_K(C);
  auto ok = [&](double s) {
    for (const StateU& T : t4.corners)
      if (2.0 * s * (C - T).norm() < dist) return false;
    return true;
  };
  if (!ok(1.0)) return 1.0;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    double mid = 0.5 * (lo + hi);
    if (ok(mid))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

StaircaseLaminate staircase_nodes(const StateU& C, const HullSpec& spec, double epsilon,
                                  double shrink, int depth) {
  if (!(epsilon > 0.0)) throw BadShrink("staircase: epsilon must be positive");
  if (!(shrink > 0.0 && shrink < 1.0)) throw BadShrink("staircase: shrink must lie in (0,1)");
  T4Configuration t4 = t4_for_center(C);
  double s0 = find_min_shrink(C, t4);
  if (shrink <= s0) throw BadShrink("staircase: (dist) inequality fails at this shrink");

  StaircaseLaminate lam;
  lam.base = C;
  lam.shrink = shrink;
  lam.epsilon = epsilon;
  lam.mix_ratio = epsilon / (1.0 + epsilon);
  lam.bulk.push_back(C);
  for (int k = 1; k <= depth; ++k) {
    int i = (k - 1) % 4;
    StateU T_is = (1.0 - shrink) * C + shrink * t4.corners[i];
    StateU D = T_is - C;
    const StateU& prev = lam.bulk.back();
    lam.deposit.push_back(prev + (1.0 + epsilon) * D);
    lam.bulk.push_back(prev + epsilon * D);
    lam.corner_index.push_back(i);
  }
  (void)spec;
  return lam;
}

StaircaseLaminate staircase(const StateU& C, const HullSpec& spec, double epsilon, double shrink,
                            int depth, const MembershipOptions& opts) {
  if (!spec.in_ball(C)) throw OutOfBall("staircase: base outside B_z");
  StaircaseLaminate lam = staircase_nodes(C, spec, epsilon, shrink, depth);
  for (size_t k = 1; k < lam.bulk.size(); ++k) {
    if (!membership_in_Uz(lam.bulk[k], spec, opts).member)
      throw CornerEscape("staircase: node " + std::to_string(k) + " leaves U_z");
    if (!membership_in_Uz(lam.deposit[k - 1], spec, opts).member)
      throw CornerEscape("staircase: deposit " + std::to_string(k) + " leaves U_z");
  }
  return lam;
}

}  // namespace wildflow::t4_hull
