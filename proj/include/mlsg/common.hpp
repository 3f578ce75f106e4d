// SPDX-License-Identifier: Apache-2.0

#ifndef MLSG_COMMON_HPP
#define MLSG_COMMON_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace mlsg {

class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

/// Rotation by +90 degrees; used for P1 hat gradients.
inline Vec2 rot90(const Vec2& v) { return {-v.y, v.x}; }

struct Triangle {
  std::array<Vec2, 3> p;

  double signed_area() const {
    return 0.5 * (p[1] - p[0]).cross(p[2] - p[0]);
  }
  double area() const { return std::abs(signed_area()); }
  Vec2 centroid() const {
    return {(p[0].x + p[1].x + p[2].x) / 3.0, (p[0].y + p[1].y + p[2].y) / 3.0};
  }
  double diameter() const {
    const double a = (p[1] - p[0]).norm();
    const double b = (p[2] - p[1]).norm();
    const double c = (p[0] - p[2]).norm();
    return std::max(a, std::max(b, c));
  }
  Vec2 point(double lambda0, double lambda1, double lambda2) const {
    return p[0] * lambda0 + p[1] * lambda1 + p[2] * lambda2;
  }

  /// Constant gradients of the three P1 hat functions on this triangle.
  std::array<Vec2, 3> hat_gradients() const {
    const double two_a = 2.0 * signed_area();
    return {rot90(p[2] - p[1]) * (1.0 / two_a),
            rot90(p[0] - p[2]) * (1.0 / two_a),
            rot90(p[1] - p[0]) * (1.0 / two_a)};
  }
};

/// Barycentric coordinates of a point with respect to a triangle.
/// Throws on (near-)degenerate triangles.
inline std::array<double, 3> barycentric(const Vec2& x, const Triangle& t) {
  const double two_a = 2.0 * t.signed_area();
  if (std::abs(two_a) < 1e-300) {
    throw Error("barycentric: degenerate triangle");
  }
  const double l0 = (t.p[1] - x).cross(t.p[2] - x) / two_a;
  const double l1 = (t.p[2] - x).cross(t.p[0] - x) / two_a;
  const double l2 = 1.0 - l0 - l1;
  return {l0, l1, l2};
}

/// Undirected edge identified by its (sorted) endpoint vertex ids.
struct Edge {
  int a = -1;
  int b = -1;

  Edge() = default;
  Edge(int u, int v) : a(std::min(u, v)), b(std::max(u, v)) {}

  bool operator==(const Edge& o) const { return a == o.a && b == o.b; }
  bool operator<(const Edge& o) const {
    return a != o.a ? a < o.a : b < o.b;
  }
};

struct EdgeHash {
  std::size_t operator()(const Edge& e) const {
    return std::hash<std::uint64_t>()(
        (static_cast<std::uint64_t>(static_cast<std::uint32_t>(e.a)) << 32) |
        static_cast<std::uint32_t>(e.b));
  }
};

namespace threading {

inline int& worker_cap() {
  static int cap = static_cast<int>(std::thread::hardware_concurrency());
  return cap;
}

inline void set_worker_cap(int n) { worker_cap() = n > 0 ? n : 1; }

/// Splits [0, n) into contiguous chunks, one worker thread per chunk.
/// Each index is processed by exactly one thread, so results are
/// independent of the thread count as long as fn(i) writes only to slot i.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const int cap = worker_cap();
  if (cap <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(cap, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = n * w / workers;
    const std::size_t hi = n * (w + 1) / workers;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace threading

}  // namespace mlsg

#endif  // MLSG_COMMON_HPP
