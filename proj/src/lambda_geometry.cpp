#include "wildflow/lambda_geometry.hpp"

#include <algorithm>
#include <vector>

namespace wildflow::lambda_geometry {

namespace {

double phi_of_r(const StateU& s, double r) {
  double dr = s.rho - r;
  Vec2 rv_q = r * s.v - s.q;
  return dr * dr + rv_q.norm2() / (1.0 + r * r);
}

double golden_min(const StateU& s, double a, double b) {
  constexpr double invphi = 0.6180339887498949;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = phi_of_r(s, x1);
  double f2 = phi_of_r(s, x2);
  for (int it = 0; it < 80 && (b - a) > 1e-14 * (1.0 + std::abs(a) + std::abs(b)); ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = phi_of_r(s, x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = phi_of_r(s, x2);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

KProjection project_to_K(const StateU& s) {
  // phi(r) -> (rho-r)^2 + |v|^2 at infinity, so minimizers lie within the
  // scan radius below.
  const double R = 2.0 + 2.0 * (std::abs(s.rho) + s.v.norm() + s.q.norm());
  const int n = 512;

  double best_r = 0.0;
  double best_f = phi_of_r(s, 0.0);

  // Seed points in the spirit of the multistart design: r in {-1,0,1} plus
  // best responses to u in {0, v}, then a bracketing scan.
  const double seed_rs[] = {-1.0, 0.0, 1.0, s.rho,
                            (1.0 + s.v.norm2()) > 0 ? (s.rho + s.q.dot(s.v)) / (1.0 + s.v.norm2()) : 0.0};
  for (double r0 : seed_rs) {
    double f = phi_of_r(s, r0);
    if (f < best_f) {
      best_f = f;
      best_r = r0;
    }
  }

  std::vector<double> fs(n + 1);
  for (int i = 0; i <= n; ++i) fs[i] = phi_of_r(s, -R + 2.0 * R * i / n);
  for (int i = 0; i <= n; ++i) {
    bool left_ok = (i == 0) || fs[i] <= fs[i - 1];
    bool right_ok = (i == n) || fs[i] <= fs[i + 1];
    if (left_ok && right_ok) {
      double a = -R + 2.0 * R * std::max(0, i - 1) / n;
      double b = -R + 2.0 * R * std::min(n, i + 1) / n;
      double r = golden_min(s, a, b);
      double f = phi_of_r(s, r);
      if (f < best_f) {
        best_f = f;
        best_r = r;
      }
    }
  }

  // Polish around the best seed as well.
  {
    double h = 1e-2 * (1.0 + std::abs(best_r));
    double r = golden_min(s, best_r - h, best_r + h);
    double f = phi_of_r(s, r);
    if (f < best_f) {
      best_f = f;
      best_r = r;
    }
  }

  KProjection p;
  p.r = best_r;
  p.u = (s.v + best_r * s.q) * (1.0 / (1.0 + best_r * best_r));
  p.dist = std::sqrt(std::max(0.0, best_f));
  return p;
}

}  // namespace wildflow::lambda_geometry
