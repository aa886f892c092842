#pragma once

// Saw-tooth profiles, the divergence-free potential D(phi, psi), localized
// plane-wave patches, greedy ball covers, and the building block that
// concentrates a field on the two endpoint states of a cone segment.

#include <functional>
#include <stdexcept>
#include <vector>

#include "wildflow/lambda_geometry.hpp"

namespace wildflow::wave_potential {

using lambda_geometry::StateU;

struct DegenerateDirection : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IterationCap : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Saw-tooth profile. 1-periodic, s'(x) = 1-lambda on [0,l/2] u (1-l/2, 1)
// and -lambda on (l/2, 1-l/2]; s its integral with s(0)=0, S the second
// integral with S(0)=0. Values at jumps follow the left-limit convention.
struct SawtoothProfile {
  double lambda = 0.5;
};

struct SawtoothJet {
  double S = 0.0;   // C^{1,1} second integral
  double s = 0.0;   // Lipschitz first integral
  double sp = 0.0;  // piecewise-constant derivative
};

SawtoothJet sawtooth_eval(const SawtoothProfile& p, double x);

// Mean of S over one period. The plateau field only sees S''; patches use
// S - mean(S) in the potential, which shrinks the second-order cutoff
// cross term without changing any band value.
double sawtooth_mean_S(const SawtoothProfile& p);
double sawtooth_dev_max(const SawtoothProfile& p);  // sup |S - mean(S)|

// ---------------------------------------------------------------------------
// Phase and momentum coefficients of the plane-wave potential for a cone
// direction with rho*v != 0. The potentials
//   psi_N = alpha/N^2 S(N theta),  phi_N = d/N S'(N theta),
//   theta = g1 x1 + g2 x2 + c t,
// satisfy D(phi_N, psi_N) = S''(N theta) * U(direction) exactly; the 2x2
// system for (c,d) has determinant -alpha(|v|^2/|v2|) and is solvable
// whenever v != 0.
struct WaveCoefficients {
  double alpha = 0.0;
  Vec3 g{};  // (g1, g2, c)
  double d = 0.0;
};

WaveCoefficients wave_coefficients(const StateU& direction);

// ---------------------------------------------------------------------------
// Scalar jets for the generic potential operator. grad/hess indices follow
// (x1, x2, t).
struct Jet1 {
  double val = 0.0;
  Vec3 grad{};
};

struct Jet2 {
  double val = 0.0;
  Vec3 grad{};
  double hess[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
};

// Reads the state off D(phi, psi):
//   rho = Lap psi, v = (psi_12, -psi_11),
//   q = (-psi_t1 - phi_2, -psi_t2 + phi_1).
StateU potential_apply(const Jet1& phi, const Jet2& psi);

Jet2 jet_product(const Jet2& a, const Jet2& b);
Jet1 jet_product1(const Jet2& a, const Jet1& b);

// ---------------------------------------------------------------------------
// C^2 radial cutoff: 1 on |y| <= 1-eps, 0 on |y| >= 1, quintic smoothstep in
// the transition shell.
struct Cutoff {
  double eps = 0.1;

  void radial(double r, double& z, double& zp, double& zpp) const;
  Jet2 jet(const Vec3& y) const;
};

// ---------------------------------------------------------------------------
// One localized saw-tooth plane wave on a space-time ball. All evaluation is
// analytic; on the plateau of the cutoff the field equals
// s'(N g.y) * direction with y the unit-ball local coordinate.
struct WavePatch {
  Vec3 center{};
  double radius = 0.0;
  StateU direction{};
  SawtoothProfile profile{};
  int freq = 1;
  double cutoff_width = 0.1;
  WaveCoefficients wc{};
  double mean_S = 0.0;  // cached sawtooth_mean_S(profile)

  static WavePatch make(const Vec3& center, double radius, const StateU& direction, double lambda,
                        int freq, double cutoff_width);

  Vec3 local(const Vec3& p) const { return torus_offset(p, center) * (1.0 / radius); }
  bool contains(const Vec3& p) const { return local(p).norm2() < 1.0; }
  double plateau_radius() const { return radius * (1.0 - cutoff_width); }

  // Upper bound on the off-segment part of the field (the cutoff cross
  // terms), used for N_min and annulus budgets.
  double segment_deviation_bound() const;
};

StateU patch_field(const WavePatch& p, const Vec3& point);

// Exact Lebesgue measure of {y in plateau ball : frac(N g.y) in [lo,hi]},
// in physical units (slab-by-slab spherical caps).
double patch_band_measure(const WavePatch& p, double lo, double hi);

inline double patch_plus_band_measure(const WavePatch& p) {
  // s' = 1 - lambda on [0, l/2] u (1 - l/2, 1): total length lambda.
  double l = p.profile.lambda;
  return patch_band_measure(p, 0.0, 0.5 * l) + patch_band_measure(p, 1.0 - 0.5 * l, 1.0);
}
inline double patch_minus_band_measure(const WavePatch& p) {
  double l = p.profile.lambda;
  return patch_band_measure(p, 0.5 * l, 1.0 - 0.5 * l);
}

// ---------------------------------------------------------------------------
// Domains and greedy disjoint ball packing.
struct Ball3 {
  Vec3 c{};
  double r = 0.0;
  double volume() const { return ball_volume(r); }
};

struct Domain {
  enum class Kind { ball, box } kind = Kind::ball;
  Ball3 ball{};
  Vec3 lo{}, hi{};

  static Domain make_ball(const Vec3& c, double r) {
    Domain d;
    d.kind = Kind::ball;
    d.ball = {c, r};
    return d;
  }
  static Domain make_box(const Vec3& lo, const Vec3& hi) {
    Domain d;
    d.kind = Kind::box;
    d.lo = lo;
    d.hi = hi;
    return d;
  }
  double measure() const;
  // Margin by which B(c,r) sits inside the domain (negative if it pokes out).
  double containment_margin(const Vec3& c, double r) const;
};

struct BallCover {
  Domain domain{};
  std::vector<Ball3> balls;
  double covered_fraction = 0.0;
  double uncovered_fraction = 1.0;
  bool capped = false;
};

struct CoverOptions {
  int max_balls = 4096;
  int max_levels = 7;
  double first_radius_factor = 1.0;  // first level radius relative to the inscribed scale
  uint64_t seed = 0;                 // shifts the candidate lattice
  std::vector<Ball3> obstacles;      // pre-existing disjointness constraints
  bool throw_on_cap = false;
};

BallCover greedy_ball_cover(const Domain& domain, double target_fraction,
                            const CoverOptions& opts = {});

// ---------------------------------------------------------------------------
// Building block: a cover of the domain, one rescaled patch per ball, and
// exact-by-construction measure statistics.
struct MeasureStats {
  double domain_measure = 0.0;
  double covered_fraction = 0.0;
  double plus_fraction = 0.0;   // field = (1-lambda) * direction
  double minus_fraction = 0.0;  // field = -lambda * direction
  double annulus_fraction = 0.0;
  double sup_segment_distance = 0.0;  // analytic bound, O(1/N)
  int n_min = 0;                      // smallest N meeting the requested epsilon
};

struct BuildingBlock {
  std::vector<WavePatch> patches;
  MeasureStats stats;
};

BuildingBlock building_block(const Domain& domain, const StateU& direction, double lambda,
                             double epsilon, int freq, const CoverOptions& cover_opts = {},
                             double cutoff_width = 0.0 /* 0 = derive from epsilon */);

}  // namespace wildflow::wave_potential
