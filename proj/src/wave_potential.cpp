#include "wildflow/wave_potential.hpp"

#include <algorithm>
#include <cmath>

namespace wildflow::wave_potential {

using lambda_geometry::cone_residual;
using lambda_geometry::in_cone;

SawtoothJet sawtooth_eval(const SawtoothProfile& p, double x) {
  const double l = p.lambda;
  double u = x - std::floor(x);
  SawtoothJet j;
  const double Sl = (1.0 - l) * l * l / 8.0;  // S(l/2)
  if (u <= 0.5 * l) {
    j.sp = 1.0 - l;
    j.s = (1.0 - l) * u;
    j.S = 0.5 * (1.0 - l) * u * u;
  } else if (u <= 1.0 - 0.5 * l) {
    j.sp = -l;
    j.s = l * (0.5 - u);
    j.S = Sl + 0.5 * l * ((u - 0.5 * l) - (u * u - 0.25 * l * l));
  } else {
    double w = u - (1.0 - 0.5 * l);
    j.sp = 1.0 - l;
    j.s = -0.5 * (1.0 - l) * l + (1.0 - l) * w;
    j.S = l * l * (1.0 - l) / 8.0 - 0.5 * (1.0 - l) * l * w + 0.5 * (1.0 - l) * w * w;
  }
  return j;
}

double sawtooth_mean_S(const SawtoothProfile& p) {
  // S is piecewise quadratic; Simpson per piece is exact.
  const double l = p.lambda;
  auto S = [&](double x) { return sawtooth_eval(p, x).S; };
  auto simpson = [&](double a, double b) {
    return (b - a) / 6.0 * (S(a) + 4.0 * S(0.5 * (a + b)) + S(b));
  };
  return simpson(0.0, 0.5 * l) + simpson(0.5 * l, 1.0 - 0.5 * l) + simpson(1.0 - 0.5 * l, 1.0);
}

double sawtooth_dev_max(const SawtoothProfile& p) {
  double mu = sawtooth_mean_S(p);
  double smax = p.lambda * (1.0 - p.lambda) / 8.0;  // S(1/2), the peak
  return std::max(mu, smax - mu);
}

WaveCoefficients wave_coefficients(const StateU& dir) {
  if (!in_cone(dir)) throw DegenerateDirection("wave_coefficients: direction not in the cone");
  if (dir.rho == 0.0 || dir.v.norm() == 0.0)
    throw DegenerateDirection("wave_coefficients: rho*v must not vanish");
  double v2 = dir.v.y;
  if (std::abs(v2) <= 1e-14 * (1.0 + dir.v.norm()))
    throw DegenerateDirection("wave_coefficients: v2 = 0 breaks the potential ansatz");

  WaveCoefficients wc;
  double sgn = (v2 > 0.0) ? 1.0 : -1.0;
  double root = std::sqrt(std::abs(v2));
  wc.alpha = -sgn;
  double b1 = root;
  double b2 = -sgn * dir.v.x / root;
  // (c,d) solve [-alpha b1, -b2; -alpha b2, b1] (c,d) = (q1,q2).
  double det = -wc.alpha * (b1 * b1 + b2 * b2);
  double c = (dir.q.x * b1 + b2 * dir.q.y) / det;
  wc.d = wc.alpha * (b2 * dir.q.x - b1 * dir.q.y) / det;
  wc.g = Vec3{b1, b2, c};
  return wc;
}

StateU potential_apply(const Jet1& phi, const Jet2& psi) {
  StateU s;
  s.rho = psi.hess[0][0] + psi.hess[1][1];
  s.v = Vec2{psi.hess[0][1], -psi.hess[0][0]};
  s.q = Vec2{-psi.hess[2][0] - phi.grad.x2, -psi.hess[2][1] + phi.grad.x1};
  return s;
}

Jet2 jet_product(const Jet2& a, const Jet2& b) {
  Jet2 r;
  r.val = a.val * b.val;
  r.grad = a.grad * b.val + b.grad * a.val;
  double ag[3] = {a.grad.x1, a.grad.x2, a.grad.t};
  double bg[3] = {b.grad.x1, b.grad.x2, b.grad.t};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      r.hess[i][j] = a.hess[i][j] * b.val + ag[i] * bg[j] + ag[j] * bg[i] + b.hess[i][j] * a.val;
  return r;
}

Jet1 jet_product1(const Jet2& a, const Jet1& b) {
  Jet1 r;
  r.val = a.val * b.val;
  r.grad = a.grad * b.val + b.grad * a.val;
  return r;
}

void Cutoff::radial(double r, double& z, double& zp, double& zpp) const {
  double a = 1.0 - eps;
  if (r <= a) {
    z = 1.0;
    zp = 0.0;
    zpp = 0.0;
    return;
  }
  if (r >= 1.0) {
    z = 0.0;
    zp = 0.0;
    zpp = 0.0;
    return;
  }
  double s = (r - a) / eps;
  z = 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
  zp = -30.0 * s * s * (1.0 - s) * (1.0 - s) / eps;
  zpp = -60.0 * s * (1.0 - s) * (1.0 - 2.0 * s) / (eps * eps);
}

Jet2 Cutoff::jet(const Vec3& y) const {
  Jet2 j;
  double r = y.norm();
  double z, zp, zpp;
  radial(r, z, zp, zpp);
  j.val = z;
  if (zp == 0.0 && zpp == 0.0) return j;
  double yi[3] = {y.x1, y.x2, y.t};
  j.grad = Vec3{zp * yi[0] / r, zp * yi[1] / r, zp * yi[2] / r};
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) {
      double d = (i == k) ? 1.0 : 0.0;
      j.hess[i][k] = zpp * yi[i] * yi[k] / (r * r) + zp * (d / r - yi[i] * yi[k] / (r * r * r));
    }
  return j;
}

WavePatch WavePatch::make(const Vec3& center, double radius, const StateU& direction,
                          double lambda, int freq, double cutoff_width) {
  if (!(radius > 0.0 && radius < 0.5))
    throw std::invalid_argument("WavePatch: radius must lie in (0, 1/2) to embed in the torus");
  if (!(lambda > 0.0 && lambda < 1.0)) throw std::invalid_argument("WavePatch: lambda in (0,1)");
  if (!(cutoff_width > 0.0 && cutoff_width < 0.5))
    throw std::invalid_argument("WavePatch: cutoff width in (0, 1/2)");
  if (freq < 1) throw std::invalid_argument("WavePatch: frequency >= 1");
  WavePatch p;
  p.center = center;
  p.radius = radius;
  p.direction = direction;
  p.profile = SawtoothProfile{lambda};
  p.freq = freq;
  p.cutoff_width = cutoff_width;
  p.wc = wave_coefficients(direction);
  p.mean_S = sawtooth_mean_S(p.profile);
  return p;
}

StateU patch_field(const WavePatch& p, const Vec3& point) {
  Vec3 y = p.local(point);
  double r2 = y.norm2();
  if (r2 >= 1.0) return StateU{};
  double theta = p.wc.g.dot(y);
  double xi = p.freq * theta;
  SawtoothJet st = sawtooth_eval(p.profile, xi);

  double a = 1.0 - p.cutoff_width;
  if (r2 <= a * a) {
    // Plateau: the cutoff is identically 1 and the field is exactly
    // s'(N theta) * direction.
    return st.sp * p.direction;
  }

  Cutoff zeta{p.cutoff_width};
  Jet2 zj = zeta.jet(y);

  const double N = p.freq;
  double gi[3] = {p.wc.g.x1, p.wc.g.x2, p.wc.g.t};
  Jet2 psi;  // alpha/N^2 (S(N theta) - mean S) as a jet in y
  psi.val = p.wc.alpha / (N * N) * (st.S - p.mean_S);
  psi.grad = Vec3{p.wc.alpha / N * st.s * gi[0], p.wc.alpha / N * st.s * gi[1],
                  p.wc.alpha / N * st.s * gi[2]};
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) psi.hess[i][k] = p.wc.alpha * st.sp * gi[i] * gi[k];

  Jet1 phi;  // d/N S'(N theta)
  phi.val = p.wc.d / N * st.s;
  phi.grad = Vec3{p.wc.d * st.sp * gi[0], p.wc.d * st.sp * gi[1], p.wc.d * st.sp * gi[2]};

  Jet2 psi_cut = jet_product(zj, psi);
  Jet1 phi_cut = jet_product1(zj, phi);
  return potential_apply(phi_cut, psi_cut);
}

double patch_band_measure(const WavePatch& p, double lo, double hi) {
  if (hi <= lo) return 0.0;
  double R = 1.0 - p.cutoff_width;  // plateau radius in local units
  double gn = p.wc.g.norm();
  double scale = p.radius * p.radius * p.radius;  // local volume -> physical
  if (gn == 0.0) return 0.0;
  // theta = |g| u with u the coordinate along g; band: frac(N |g| u) in [lo,hi].
  double L = p.freq * gn;  // cycles across a unit of u
  double measure = 0.0;
  int m_lo = static_cast<int>(std::floor(-R * L)) - 1;
  int m_hi = static_cast<int>(std::ceil(R * L)) + 1;
  for (int m = m_lo; m <= m_hi; ++m) {
    double u1 = (m + lo) / L;
    double u2 = (m + hi) / L;
    measure += ball_slab_volume(R, std::max(u1, -R), std::min(u2, R));
  }
  return measure * scale;
}

double WavePatch::segment_deviation_bound() const {
  // Cross terms of the product rule: first-derivative terms carry 1/N, the
  // pure cutoff-Hessian terms 1/N^2.
  double l = profile.lambda;
  double s_max = 0.5 * l * (1.0 - l);
  double S_max = sawtooth_dev_max(profile);
  double e = cutoff_width;
  double zp_max = 1.875 / e;
  double zpp_max = 10.0 / std::sqrt(3.0) / (e * e) + zp_max / std::max(1.0 - e, 0.5);
  double gn = wc.g.norm();
  double coef = std::abs(wc.alpha) + std::abs(wc.d);
  double first = 4.0 * coef * s_max * zp_max * gn / freq;
  double second = 4.0 * coef * S_max * zpp_max / double(freq) / double(freq);
  return first + second;
}

double Domain::measure() const {
  if (kind == Kind::ball) return ball_volume(ball.r);
  return std::max(0.0, hi.x1 - lo.x1) * std::max(0.0, hi.x2 - lo.x2) * std::max(0.0, hi.t - lo.t);
}

double Domain::containment_margin(const Vec3& c, double r) const {
  if (kind == Kind::ball) return ball.r - r - (c - ball.c).norm();
  double m = std::min({c.x1 - lo.x1, hi.x1 - c.x1, c.x2 - lo.x2, hi.x2 - c.x2, c.t - lo.t,
                       hi.t - c.t});
  return m - r;
}

BallCover greedy_ball_cover(const Domain& domain, double target_fraction,
                            const CoverOptions& opts) {
  if (!(target_fraction > 0.0 && target_fraction < 1.0))
    throw std::invalid_argument("greedy_ball_cover: target fraction in (0,1)");
  BallCover cover;
  cover.domain = domain;
  double total = domain.measure();
  if (total <= 0.0) throw std::invalid_argument("greedy_ball_cover: empty domain");

  double scale = (domain.kind == Domain::Kind::ball)
                     ? domain.ball.r
                     : 0.5 * std::min({domain.hi.x1 - domain.lo.x1, domain.hi.x2 - domain.lo.x2,
                                       domain.hi.t - domain.lo.t});
  Vec3 origin = (domain.kind == Domain::Kind::ball)
                    ? domain.ball.c
                    : (domain.lo + domain.hi) * 0.5;
  Rng rng(opts.seed + 0x5eedULL);
  Vec3 shift{rng.uniform(-0.25, 0.25), rng.uniform(-0.25, 0.25), rng.uniform(-0.25, 0.25)};

  double covered = 0.0;
  const double gap = 1e-7 * scale;
  auto disjoint = [&](const Vec3& c, double r) {
    for (const Ball3& b : cover.balls)
      if ((c - b.c).norm() < r + b.r + gap) return false;
    for (const Ball3& b : opts.obstacles)
      if ((c - b.c).norm() < r + b.r + gap) return false;
    return true;
  };

  // Radius ladder from the inscribed scale down; for a ball domain the first
  // candidate is the near-full concentric ball, which already covers
  // (1 - O(gap))^3 of the measure.
  double r = opts.first_radius_factor * scale;
  bool done = false;
  for (int level = 0; level < opts.max_levels && !done; ++level, r *= 0.6) {
    double spacing = 0.45 * r;
    int n = static_cast<int>(std::ceil(2.2 * scale / spacing)) + 1;
    // Center candidate first: optimal for ball-shaped domains.
    std::vector<Vec3> cands;
    cands.reserve(size_t(2 * n + 1) * (2 * n + 1));
    cands.push_back(origin);
    for (int i = -n; i <= n; ++i)
      for (int j = -n; j <= n; ++j)
        for (int k = -n; k <= n; ++k)
          cands.push_back(origin + Vec3{(i + 0.5 * shift.x1) * spacing,
                                        (j + 0.5 * shift.x2) * spacing,
                                        (k + 0.5 * shift.t) * spacing});
    for (const Vec3& c : cands) {
      double inscribe = domain.containment_margin(c, 0.0);
      double rr = std::min(r, inscribe - gap);
      if (rr <= 0.55 * r) continue;
      while (rr > 0.55 * r && !disjoint(c, rr)) rr *= 0.92;
      if (rr <= 0.55 * r || !disjoint(c, rr)) continue;
      cover.balls.push_back({c, rr});
      covered += ball_volume(rr);
      if (covered >= target_fraction * total || int(cover.balls.size()) >= opts.max_balls) {
        done = true;
        break;
      }
    }
  }
  cover.covered_fraction = covered / total;
  cover.uncovered_fraction = 1.0 - cover.covered_fraction;
  cover.capped = cover.covered_fraction < target_fraction;
  if (cover.capped && opts.throw_on_cap)
    throw IterationCap("greedy_ball_cover: reached " + std::to_string(cover.covered_fraction) +
                       " of target " + std::to_string(target_fraction));
  return cover;
}

BuildingBlock building_block(const Domain& domain, const StateU& direction, double lambda,
                             double epsilon, int freq, const CoverOptions& cover_opts,
                             double cutoff_width) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("building_block: epsilon in (0,1)");
  // Budget split: half of epsilon to the uncovered remainder, half to the
  // cutoff annulus, so that (1-eps_cover)(1-eps')^3 >= 1-eps with margin.
  // A wider shell also keeps the second-order cutoff term subordinate at
  // moderate frequencies.
  double eps_cover = 0.5 * epsilon;
  double eps_cut = (cutoff_width > 0.0)
                       ? cutoff_width
                       : std::min(0.1, 1.0 - std::cbrt(1.0 - 0.46 * epsilon));
  eps_cut = std::max(eps_cut, 1e-3);

  BallCover cover = greedy_ball_cover(domain, 1.0 - eps_cover, cover_opts);

  BuildingBlock blk;
  blk.stats.domain_measure = domain.measure();
  blk.stats.covered_fraction = cover.covered_fraction;
  double plus = 0.0, minus = 0.0, annulus = 0.0, dev = 0.0;
  for (const Ball3& b : cover.balls) {
    WavePatch p = WavePatch::make(b.c, b.r, direction, lambda, freq, eps_cut);
    plus += patch_plus_band_measure(p);
    minus += patch_minus_band_measure(p);
    annulus += ball_volume(b.r) - ball_volume(b.r * (1.0 - eps_cut));
    dev = std::max(dev, p.segment_deviation_bound());
    blk.patches.push_back(p);
  }
  blk.stats.plus_fraction = plus / blk.stats.domain_measure;
  blk.stats.minus_fraction = minus / blk.stats.domain_measure;
  blk.stats.annulus_fraction = annulus / blk.stats.domain_measure;
  blk.stats.sup_segment_distance = dev;
  // Smallest N with the first-order cross term below epsilon; rescaling keeps
  // the local frequency, so the bound is radius-free.
  if (!blk.patches.empty()) {
    const WavePatch& ref = blk.patches.front();
    double at_one = ref.segment_deviation_bound() * ref.freq;  // ~ C for N=1
    blk.stats.n_min = std::max(1, static_cast<int>(std::ceil(at_one / epsilon)));
  }
  return blk;
}

}  // namespace wildflow::wave_potential
