#pragma once

// Degenerate T4 configurations around anchor states (0,0,z), the sets B_z,
// U_z, K_z, first-hull membership with explicit witnesses, the quantitative
// openness margin, and the staircase laminate.

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wildflow/lambda_geometry.hpp"

namespace wildflow::t4_hull {

using lambda_geometry::StateU;

struct CenterOnAxis : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct OutOfBall : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NoAdmissibleDelta : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateWitness : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CornerEscape : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BadShrink : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Anchor flux z and radius delta of the state-space ball B_z around (0,0,z).
// Admissible anchors lie in the open disk of radius 1/2 around (0,-1/2),
// excluding its center; that is the disk the corner parametrization sweeps.
struct HullSpec {
  Vec2 z{};
  double delta = 0.0;

  StateU anchor() const { return StateU{0.0, Vec2{0, 0}, z}; }
  bool in_ball(const StateU& s) const { return (s - anchor()).norm() <= delta; }
  double ball_margin(const StateU& s) const { return delta - (s - anchor()).norm(); }
};

// Corner radius convention. `corrected` uses r_x=(1-rho)/2, r_y=(1+rho)/2,
// the radii of the cone circles S_{1-rho}, S_{-1-rho}; `doubled_bug` uses
// r=1-rho and exists only as a regression fixture (its corners fail the
// determinant oracle).
enum class RadiusMode { corrected, doubled_bug };

struct T4Configuration {
  StateU center;
  std::array<StateU, 4> corners{};  // (1,x1,x1),(1,x2,x2),(-1,y1,-y1),(-1,y2,-y2)
  std::array<double, 4> weights{};
  double t = 0.0;
  Vec2 x{}, y{};
  Vec2 a_x{}, a_y{};
  double r_x = 0.0, r_y = 0.0;
};

// Corner coordinates: t=(1+rho)/2, x=(q+v)/(1+rho), y=(v-q)/(1-rho), with
// corner circles centered a_x = v+(0,-(1-rho)/2), a_y = v+(0,(1+rho)/2).
// Throws CenterOnAxis when x or y hits its circle center, OutOfBall when it
// leaves the open disk (or |rho| >= 1).
T4Configuration t4_for_center(const StateU& A, RadiusMode mode = RadiusMode::corrected);

// min over both corner families of (|x-a|, r-|x-a|) and the rho headroom;
// negative when the configuration is invalid.
double t4_margin(const StateU& A);

struct DeltaOptions {
  double cap = 0.25;
  double floor_margin = 1e-4;
  int boundary_samples = 192;
  int interior_samples = 64;
  uint64_t seed = 0x77d1f00dULL;
};

// Largest delta <= cap such that a deterministic sample of the closed ball
// of radius delta around (0,0,z) passes t4_for_center with margin >=
// floor_margin. Throws NoAdmissibleDelta when even a tiny ball fails.
double admissible_delta(const Vec2& z, const DeltaOptions& opts = {});

inline HullSpec make_hull_spec(const Vec2& z, double delta = 0.0, const DeltaOptions& opts = {}) {
  if (delta <= 0.0) delta = admissible_delta(z, opts);
  return HullSpec{z, delta};
}

// Hull membership witness: state = mix*C + (1-mix)*X with C in B_z, X in
// T_family(B_z), C - X in the wave cone. `preimage` is a ball state whose
// family-corner equals X's corner parameter, certifying X's image membership.
struct Witness {
  int family = 0;  // 0..3
  StateU C{};
  StateU X{};
  double mix = 0.0;
  Vec2 corner_param{};
  StateU preimage{};
};

struct MembershipResult {
  bool member = false;
  Witness witness{};
  // Best near-witness defect when not a member: ball overshoot plus corner
  // image defect, for diagnostics.
  double defect = 0.0;
  std::string note;
};

struct MembershipOptions {
  int angle_samples = 720;
  double image_tol = 1e-8;
  uint64_t seed = 1;
};

// Decides membership of s in U_z = union over i of the first Lambda-hull of
// B_z and T_i(B_z), by search over the corner circle of s (which enforces the
// cone constraint exactly) and the mix parameter.
MembershipResult membership_in_Uz(const StateU& s, const HullSpec& spec,
                                  const MembershipOptions& opts = {});

// Is p attainable as the `family` corner of some state in the closed ball?
// Gauss-Newton inversion with deterministic multistart; returns the preimage.
std::optional<StateU> corner_preimage(int family, const Vec2& p, const HullSpec& spec,
                                      double tol = 1e-8, const StateU* warm_start = nullptr);

// Distance from p to the boundary of the family-corner image of B_z,
// estimated by radial bisection on the preimage indicator.
double corner_image_boundary_dist(int family, const Vec2& p, const HullSpec& spec,
                                  int rays = 48, int bisections = 22);

// epsilon = 1/8 * min(mix * dist(C, boundary of B_z), image boundary
// distance of the corner), capped by half the distance of the witnessed
// state to K so perturbations stay off K. Zero when C sits on the ball
// boundary. Throws DegenerateWitness for mix in {0,1}.
double openness_margin(const Witness& w, const HullSpec& spec);

// Staircase laminate around a ball state C. Pulled-in corners
// T_{i,s} = (1-s) C + s T_i(C) with s in (s0, 1); nodes satisfy the exact
// mixing identity C_k = (1 - e/(1+e)) C_{k-1} + (e/(1+e)) T_k with
// T_k = C_{k-1} + (1+e) (T_{i,s} - C) and every step direction in the cone.
struct StaircaseLaminate {
  StateU base{};
  double shrink = 0.0;   // s
  double epsilon = 0.0;  // e
  double mix_ratio = 0.0;  // e/(1+e)
  std::vector<StateU> bulk;     // C_0 = base, C_1, ..., C_depth
  std::vector<StateU> deposit;  // T_1, ..., T_depth
  std::vector<int> corner_index;
};

// Smallest shrink satisfying 2 s |C - T_i(C)| >= dist_K(C) for all corners,
// found by bisection on the predicate.
double find_min_shrink(const StateU& C, const T4Configuration& t4);

// Node algebra only; no hull membership checks. Used to assert the exact
// mixing/cone identities independently of the search.
StaircaseLaminate staircase_nodes(const StateU& C, const HullSpec& spec, double epsilon,
                                  double shrink, int depth);

// Full operation: validates the (dist) inequality (BadShrink) and checks that
// every node and deposit stays in U_z (CornerEscape).
StaircaseLaminate staircase(const StateU& C, const HullSpec& spec, double epsilon, double shrink,
                            int depth, const MembershipOptions& opts = {});

}  // namespace wildflow::t4_hull
