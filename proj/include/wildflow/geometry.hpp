#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <ostream>

namespace wildflow {

struct Vec2 {
  double x = 0.0, y = 0.0;

  Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator-() const { return {-x, -y}; }
  Vec2 operator*(double a) const { return {a * x, a * y}; }
  Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double norm2() const { return x * x + y * y; }
  double norm() const { return std::sqrt(norm2()); }
};

inline Vec2 operator*(double a, const Vec2& v) { return v * a; }

// Point of T^2 x R; components (x1, x2, t), torus coordinates in [0,1).
struct Vec3 {
  double x1 = 0.0, x2 = 0.0, t = 0.0;

  Vec3() = default;
  Vec3(double a, double b, double c) : x1(a), x2(b), t(c) {}

  Vec3 operator+(const Vec3& o) const { return {x1 + o.x1, x2 + o.x2, t + o.t}; }
  Vec3 operator-(const Vec3& o) const { return {x1 - o.x1, x2 - o.x2, t - o.t}; }
  Vec3 operator*(double a) const { return {a * x1, a * x2, a * t}; }
  double dot(const Vec3& o) const { return x1 * o.x1 + x2 * o.x2 + t * o.t; }
  double norm2() const { return x1 * x1 + x2 * x2 + t * t; }
  double norm() const { return std::sqrt(norm2()); }
  double operator[](int i) const { return i == 0 ? x1 : (i == 1 ? x2 : t); }
};

inline Vec3 operator*(double a, const Vec3& v) { return v * a; }

// Shortest signed representative of a torus offset.
inline double torus_delta(double a, double b) {
  double d = a - b;
  d -= std::round(d);
  return d;
}

// Offset p - c with the spatial components reduced to the nearest periodic
// image; time is not periodic.
inline Vec3 torus_offset(const Vec3& p, const Vec3& c) {
  return {torus_delta(p.x1, c.x1), torus_delta(p.x2, c.x2), p.t - c.t};
}

struct Mat3 {
  std::array<std::array<double, 3>, 3> a{};

  double& operator()(int i, int j) { return a[i][j]; }
  double operator()(int i, int j) const { return a[i][j]; }
};

inline double det3(const Mat3& m) {
  return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
         m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
         m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

// Volume of { y in B(0,R) : y.dot(unit) <= h }, the spherical cap cdf.
inline double ball_cap_volume(double R, double h) {
  if (h <= -R) return 0.0;
  if (h >= R) return 4.0 / 3.0 * M_PI * R * R * R;
  return M_PI * (2.0 / 3.0 * R * R * R + R * R * h - h * h * h / 3.0);
}

// Volume of the slab { a <= y.dot(unit) <= b } inside B(0,R).
inline double ball_slab_volume(double R, double a, double b) {
  if (b <= a) return 0.0;
  return ball_cap_volume(R, b) - ball_cap_volume(R, a);
}

inline double ball_volume(double R) { return 4.0 / 3.0 * M_PI * R * R * R; }

// Area of { y in disk(0,R) : y.dot(unit) <= h } in the plane.
inline double disk_cap_area(double R, double h) {
  if (h <= -R) return 0.0;
  if (h >= R) return M_PI * R * R;
  double c = h / R;
  return R * R * (std::acos(-c) + c * std::sqrt(1.0 - c * c));
}

inline double disk_slab_area(double R, double a, double b) {
  if (b <= a) return 0.0;
  return disk_cap_area(R, b) - disk_cap_area(R, a);
}

// splitmix64/xoshiro256** deterministic generator; identical streams on every
// platform for a given seed.
struct Rng {
  std::array<uint64_t, 4> s;

  explicit Rng(uint64_t seed) {
    uint64_t z = seed;
    for (auto& w : s) {
      z += 0x9e3779b97f4a7c15ULL;
      uint64_t t = z;
      t = (t ^ (t >> 30)) * 0xbf58476d1ce4e5b9ULL;
      t = (t ^ (t >> 27)) * 0x94d049bb133111ebULL;
      w = t ^ (t >> 31);
    }
  }

  static uint64_t rotl(uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

  uint64_t next() {
    uint64_t result = rotl(s[1] * 5, 7) * 9;
    uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return result;
  }

  // uniform in [0,1)
  double uniform() { return (next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() {
    // Box-Muller; two uniforms per call keeps the stream position fixed.
    double u1 = uniform(), u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }
};

}  // namespace wildflow
