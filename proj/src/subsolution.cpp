#include "wildflow/subsolution.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "wildflow/lambda_geometry.hpp"

namespace wildflow::wild_constructor {

using lambda_geometry::dist_to_K;
using wildflow::ball_volume;
using wave_potential::patch_field;
using wave_potential::patch_minus_band_measure;
using wave_potential::patch_plus_band_measure;

StateU Subsolution::evaluate(const Vec3& p, int node_limit) const {
  int limit = node_limit < 0 ? int(nodes.size()) : node_limit;
  StateU value = base;
  if (p.t <= 0.0 || p.t >= horizon) return value;
  int current = -1;
  const std::vector<int>* candidates = &roots;
  for (;;) {
    int next = -1;
    for (int id : *candidates) {
      if (id >= limit) continue;
      if (nodes[id].patch.contains(p)) {
        next = id;
        break;  // supports within one generation are disjoint
      }
    }
    if (next < 0) break;
    value += patch_field(nodes[next].patch, p);
    current = next;
    candidates = &nodes[current].children;
  }
  return value;
}

double patch_dist_upper(const StateU& backdrop, const WavePatch& patch) {
  // dist_K along the value segment [backdrop - l U, backdrop + (1-l) U],
  // sampled with a Lipschitz correction, plus the cutoff deviation.
  const double l = patch.profile.lambda;
  const StateU& U = patch.direction;
  const int n = 24;
  double sup = 0.0;
  for (int i = 0; i <= n; ++i) {
    double tau = -l + double(i) / n;
    sup = std::max(sup, dist_to_K(backdrop + tau * U));
  }
  sup += U.norm() / n;  // dist_K is 1-Lipschitz along the segment
  return sup + patch.segment_deviation_bound();
}

std::vector<LeafRegion> Subsolution::leaf_regions(int node_limit) const {
  int limit = node_limit < 0 ? int(nodes.size()) : node_limit;
  std::vector<LeafRegion> out;

  double root_residual = domain_measure();
  for (int id : roots)
    if (id < limit) root_residual -= ball_volume(nodes[id].patch.radius);
  LeafRegion root;
  root.node = -1;
  root.band = 0;
  root.value = base;
  root.cert = ValueCert{ValueCert::Kind::in_ball, base, base, 1.0, 0};
  root.measure = root_residual;
  out.push_back(root);

  for (int id = 0; id < limit; ++id) {
    const PatchNode& n = nodes[id];
    double plus = patch_plus_band_measure(n.patch);
    double minus = patch_minus_band_measure(n.patch);
    for (int child : n.children) {
      if (child >= limit) continue;
      double v = ball_volume(nodes[child].patch.radius);
      if (nodes[child].parent_band > 0)
        plus -= v;
      else
        minus -= v;
    }
    LeafRegion lp;
    lp.node = id;
    lp.band = +1;
    lp.value = n.plus_value();
    lp.cert = n.cert_plus;
    lp.measure = std::max(0.0, plus);
    out.push_back(lp);
    LeafRegion lm;
    lm.node = id;
    lm.band = -1;
    lm.value = n.minus_value();
    lm.cert = n.cert_minus;
    lm.measure = std::max(0.0, minus);
    out.push_back(lm);
  }
  return out;
}

std::vector<AnnulusBudget> Subsolution::annulus_budgets(int node_limit) const {
  int limit = node_limit < 0 ? int(nodes.size()) : node_limit;
  std::vector<AnnulusBudget> out;
  out.reserve(limit);
  for (int id = 0; id < limit; ++id) {
    const PatchNode& n = nodes[id];
    AnnulusBudget a;
    a.node = id;
    a.measure = ball_volume(n.patch.radius) - ball_volume(n.patch.plateau_radius());
    a.dist_upper = patch_dist_upper(n.backdrop, n.patch);
    double dev = n.patch.segment_deviation_bound();
    double lo1 = n.minus_value().rho, hi1 = n.plus_value().rho;
    a.rho_lo = std::min({lo1, hi1, n.backdrop.rho}) - dev;
    a.rho_hi = std::max({lo1, hi1, n.backdrop.rho}) + dev;
    out.push_back(a);
  }
  return out;
}

Interval Subsolution::dist_integral(int node_limit) const {
  Interval acc{0.0, 0.0};
  for (const LeafRegion& r : leaf_regions(node_limit)) {
    double d = dist_to_K(r.value) * r.measure;
    acc.lo += d;
    acc.hi += d;
  }
  for (const AnnulusBudget& a : annulus_budgets(node_limit)) acc.hi += a.dist_upper * a.measure;
  return acc;
}

Interval Subsolution::rho_near_fraction(double eta, int node_limit) const {
  Interval acc{0.0, 0.0};
  double total = domain_measure();
  for (const LeafRegion& r : leaf_regions(node_limit)) {
    bool near = std::abs(std::abs(r.value.rho) - 1.0) <= eta;
    if (near) {
      acc.lo += r.measure;
      acc.hi += r.measure;
    }
  }
  for (const AnnulusBudget& a : annulus_budgets(node_limit)) {
    bool may_hit = (a.rho_hi >= 1.0 - eta && a.rho_lo <= 1.0 + eta) ||
                   (a.rho_hi >= -1.0 - eta && a.rho_lo <= -1.0 + eta);
    if (may_hit) acc.hi += a.measure;
  }
  acc.lo /= total;
  acc.hi /= total;
  return acc;
}

double Subsolution::slice_sup_abs_rho(double t, int node_limit) const {
  int limit = node_limit < 0 ? int(nodes.size()) : node_limit;
  double sup = std::abs(base.rho);
  if (t <= 0.0 || t >= horizon) return sup;
  for (int id = 0; id < limit; ++id) {
    const PatchNode& n = nodes[id];
    double dt = std::abs(t - n.patch.center.t);
    if (dt >= n.patch.plateau_radius()) continue;
    sup = std::max({sup, std::abs(n.plus_value().rho), std::abs(n.minus_value().rho)});
  }
  return sup;
}

Subsolution Subsolution::prefix(int node_limit) const {
  int limit = node_limit < 0 ? int(nodes.size()) : node_limit;
  Subsolution out;
  out.base = base;
  out.horizon = horizon;
  out.hull = hull;
  out.nodes.assign(nodes.begin(), nodes.begin() + limit);
  for (PatchNode& n : out.nodes) {
    auto& ch = n.children;
    ch.erase(std::remove_if(ch.begin(), ch.end(), [&](int id) { return id >= limit; }), ch.end());
  }
  for (int id : roots)
    if (id < limit) out.roots.push_back(id);
  return out;
}

namespace {

void put_state(std::ostream& os, const StateU& s) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %.17g %.17g", s.rho, s.v.x, s.v.y, s.q.x,
                s.q.y);
  os << buf;
}

StateU get_state(std::istream& is) {
  StateU s;
  is >> s.rho >> s.v.x >> s.v.y >> s.q.x >> s.q.y;
  return s;
}

void put_cert(std::ostream& os, const ValueCert& c) {
  os << int(c.kind) << ' ' << c.family << ' ';
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g ", c.mix);
  os << buf;
  put_state(os, c.C);
  os << ' ';
  put_state(os, c.X);
}

ValueCert get_cert(std::istream& is) {
  ValueCert c;
  int kind;
  is >> kind >> c.family >> c.mix;
  c.kind = static_cast<ValueCert::Kind>(kind);
  c.C = get_state(is);
  c.X = get_state(is);
  return c;
}

}  // namespace

void Subsolution::serialize(std::ostream& os) const {
  os << "wildflow-subsolution v1\n";
  char buf[256];
  os << "base ";
  put_state(os, base);
  os << '\n';
  std::snprintf(buf, sizeof buf, "horizon %.17g\nhull %.17g %.17g %.17g\n", horizon, hull.z.x,
                hull.z.y, hull.delta);
  os << buf;
  os << "patches " << nodes.size() << '\n';
  for (size_t i = 0; i < nodes.size(); ++i) {
    const PatchNode& n = nodes[i];
    std::snprintf(buf, sizeof buf,
                  "patch %zu parent %d band %d round %d center %.17g %.17g %.17g radius %.17g ", i,
                  n.parent, int(n.parent_band), n.round, n.patch.center.x1, n.patch.center.x2,
                  n.patch.center.t, n.patch.radius);
    os << buf << "dir ";
    put_state(os, n.patch.direction);
    std::snprintf(buf, sizeof buf, " lambda %.17g freq %d cutoff %.17g c %.17g d %.17g backdrop ",
                  n.patch.profile.lambda, n.patch.freq, n.patch.cutoff_width, n.patch.wc.g.t,
                  n.patch.wc.d);
    os << buf;
    put_state(os, n.backdrop);
    os << " certplus ";
    put_cert(os, n.cert_plus);
    os << " certminus ";
    put_cert(os, n.cert_minus);
    os << '\n';
  }
}

Subsolution Subsolution::deserialize(std::istream& is) {
  std::string word, version;
  is >> word >> version;
  if (word != "wildflow-subsolution" || version != "v1")
    throw std::runtime_error("subsolution: unrecognized header");
  Subsolution sub;
  is >> word;
  sub.base = get_state(is);
  is >> word >> sub.horizon;
  is >> word >> sub.hull.z.x >> sub.hull.z.y >> sub.hull.delta;
  size_t count;
  is >> word >> count;
  sub.nodes.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    size_t idx;
    PatchNode n;
    Vec3 center;
    double radius, lambda, cutoff;
    int freq, band;
    is >> word >> idx;
    is >> word >> n.parent;
    is >> word >> band;
    n.parent_band = band;
    is >> word >> n.round;
    is >> word >> center.x1 >> center.x2 >> center.t;
    is >> word >> radius;
    is >> word;
    StateU dir = get_state(is);
    is >> word >> lambda;
    is >> word >> freq;
    is >> word >> cutoff;
    double c_stored, d_stored;
    is >> word >> c_stored;
    is >> word >> d_stored;
    is >> word;
    n.backdrop = get_state(is);
    is >> word;
    n.cert_plus = get_cert(is);
    is >> word;
    n.cert_minus = get_cert(is);
    n.patch = WavePatch::make(center, radius, dir, lambda, freq, cutoff);
    // The phase coefficients are derived from the direction; a mismatch
    // means the stream was edited or corrupted.
    if (std::abs(n.patch.wc.g.t - c_stored) > 1e-9 * (1.0 + std::abs(c_stored)) ||
        std::abs(n.patch.wc.d - d_stored) > 1e-9 * (1.0 + std::abs(d_stored)))
      throw std::runtime_error("subsolution: stored phase coefficients disagree");
    sub.nodes.push_back(n);
  }
  for (size_t i = 0; i < sub.nodes.size(); ++i) {
    int p = sub.nodes[i].parent;
    if (p < 0)
      sub.roots.push_back(int(i));
    else
      sub.nodes[p].children.push_back(int(i));
  }
  if (!is) throw std::runtime_error("subsolution: truncated stream");
  return sub;
}

}  // namespace wildflow::wild_constructor
