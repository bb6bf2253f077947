#ifndef ANITRI_GEOMETRY_HPP
#define ANITRI_GEOMETRY_HPP

#include <array>
#include <cstdint>
#include <utility>

namespace anitri {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  bool operator==(const Vec2&) const = default;
};

using Point2 = Vec2;

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
double norm(Vec2 a);

/// (x, y) pair order; used for all deterministic tie-breaking.
inline bool lex_less(Point2 a, Point2 b) {
  return a.x < b.x || (a.x == b.x && a.y < b.y);
}

/// Bisection edge label. Edge `k` is the segment (v[k], v[(k+1)%3]);
/// its apex (the vertex the bisection starts from) is v[(k+2)%3].
/// The labels match the edge vectors a = v2-v1, b = v3-v2, c = v1-v3.
enum class EdgeChoice : std::uint8_t { A = 0, B = 1, C = 2 };

inline int edge_index(EdgeChoice e) { return static_cast<int>(e); }
inline int apex_index(EdgeChoice e) { return (edge_index(e) + 2) % 3; }

/// One mesh element. `newest_vertex_index` tracks the vertex created by the
/// most recent bisection (-1 until assigned; see ensure_newest_vertex for the
/// root convention). `level` is the bisection depth from the initial mesh.
struct Triangle {
  std::array<Point2, 3> v{};
  int newest_vertex_index = -1;
  int level = 0;
};

double signed_area(const Triangle& t);
double area(const Triangle& t);
double diameter(const Triangle& t);
Point2 barycenter(const Triangle& t);
bool is_degenerate(const Triangle& t);

/// Edge vectors (a, b, c) = (v2-v1, v3-v2, v1-v3); they sum to zero.
/// Throws std::invalid_argument on a degenerate triangle.
std::array<Vec2, 3> edge_vectors(const Triangle& t);

/// Index of the mid-edge label whose segment is longest (ties: smallest label).
EdgeChoice longest_edge(const Triangle& t);

/// Roots carry no bisection history; the convention is that their newest
/// vertex is the one opposite the longest edge, so a newest-vertex split on a
/// root behaves like longest-edge bisection.
Triangle ensure_newest_vertex(Triangle t);

/// Edge label bisected by a newest-vertex split (the edge whose apex is the
/// newest vertex). Requires newest_vertex_index set.
EdgeChoice newest_vertex_edge(const Triangle& t);

/// Split `t` from the apex of edge `e` to the midpoint of that edge.
/// Children have equal area, level+1, newest vertex at the created midpoint
/// (stored index 2). The first child contains the lexicographically smaller
/// endpoint of the split edge, which fixes a canonical child order.
std::pair<Triangle, Triangle> bisect(const Triangle& t, EdgeChoice e);

/// Symmetric 2x2 form q(u) = <Qu, u>, stored as its three entries.
struct QuadraticForm {
  double q11 = 0.0;
  double q12 = 0.0;
  double q22 = 0.0;

  double operator()(Vec2 u) const {
    return q11 * u.x * u.x + 2.0 * q12 * u.x * u.y + q22 * u.y * u.y;
  }
  double det() const { return q11 * q22 - q12 * q12; }
};

/// Shape quality of T in the metric of q:
///   rho_q(T) = max(|q(a)|,|q(b)|,|q(c)|) / (|T| sqrt(|det Q|)).
/// Minimal value 4/sqrt(3), attained by q-equilateral triangles.
/// Throws std::invalid_argument if det(Q) == 0.
double rho_q(const Triangle& t, const QuadraticForm& q);

/// |Q|: same eigenvectors, absolute eigenvalues. Positive semi-definite.
QuadraticForm abs_form(const QuadraticForm& q);

}  // namespace anitri

#endif
