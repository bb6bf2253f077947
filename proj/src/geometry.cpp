#include "anitri/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace anitri {

double norm(Vec2 a) { return std::hypot(a.x, a.y); }

double signed_area(const Triangle& t) {
  return 0.5 * cross(t.v[1] - t.v[0], t.v[2] - t.v[0]);
}

double area(const Triangle& t) { return std::abs(signed_area(t)); }

double diameter(const Triangle& t) {
  double d = 0.0;
  for (int k = 0; k < 3; ++k) d = std::max(d, norm(t.v[(k + 1) % 3] - t.v[k]));
  return d;
}

Point2 barycenter(const Triangle& t) {
  return {(t.v[0].x + t.v[1].x + t.v[2].x) / 3.0,
          (t.v[0].y + t.v[1].y + t.v[2].y) / 3.0};
}

bool is_degenerate(const Triangle& t) { return signed_area(t) == 0.0; }

std::array<Vec2, 3> edge_vectors(const Triangle& t) {
  if (is_degenerate(t)) throw std::invalid_argument("edge_vectors: degenerate triangle");
  return {t.v[1] - t.v[0], t.v[2] - t.v[1], t.v[0] - t.v[2]};
}

EdgeChoice longest_edge(const Triangle& t) {
  int best = 0;
  double len = 0.0;
  for (int k = 0; k < 3; ++k) {
    double l = norm(t.v[(k + 1) % 3] - t.v[k]);
    if (l > len) {
      len = l;
      best = k;
    }
  }
  return static_cast<EdgeChoice>(best);
}

Triangle ensure_newest_vertex(Triangle t) {
  if (t.newest_vertex_index < 0) t.newest_vertex_index = apex_index(longest_edge(t));
  return t;
}

EdgeChoice newest_vertex_edge(const Triangle& t) {
  if (t.newest_vertex_index < 0)
    throw std::logic_error("newest_vertex_edge: newest vertex not assigned");
  return static_cast<EdgeChoice>((t.newest_vertex_index + 1) % 3);
}

std::pair<Triangle, Triangle> bisect(const Triangle& t, EdgeChoice e) {
  if (is_degenerate(t)) throw std::invalid_argument("bisect: degenerate triangle");
  const int k = edge_index(e);
  Point2 p = t.v[k];
  Point2 q = t.v[(k + 1) % 3];
  const Point2 apex = t.v[(k + 2) % 3];
  const Point2 mid{(p.x + q.x) / 2.0, (p.y + q.y) / 2.0};
  if (lex_less(q, p)) std::swap(p, q);
  Triangle c1{{apex, p, mid}, 2, t.level + 1};
  Triangle c2{{apex, q, mid}, 2, t.level + 1};
  return {c1, c2};
}

double rho_q(const Triangle& t, const QuadraticForm& q) {
  if (q.det() == 0.0) throw std::invalid_argument("rho_q: singular quadratic form");
  const auto ev = edge_vectors(t);
  const double m = std::max({std::abs(q(ev[0])), std::abs(q(ev[1])), std::abs(q(ev[2]))});
  return m / (area(t) * std::sqrt(std::abs(q.det())));
}

QuadraticForm abs_form(const QuadraticForm& q) {
  // Closed-form symmetric 2x2 eigendecomposition.
  const double mean = 0.5 * (q.q11 + q.q22);
  const double half_diff = 0.5 * (q.q11 - q.q22);
  const double radius = std::hypot(half_diff, q.q12);
  const double l1 = mean + radius;
  const double l2 = mean - radius;
  if (radius == 0.0) return {std::abs(l1), 0.0, std::abs(l2)};
  // Unit eigenvector for l1; the one for l2 is its perpendicular.
  double cx, cy;
  if (half_diff >= 0.0) {
    cx = half_diff + radius;
    cy = q.q12;
  } else {
    cx = q.q12;
    cy = radius - half_diff;
  }
  const double n = std::hypot(cx, cy);
  cx /= n;
  cy /= n;
  const double a1 = std::abs(l1), a2 = std::abs(l2);
  return {a1 * cx * cx + a2 * cy * cy, (a1 - a2) * cx * cy,
          a1 * cy * cy + a2 * cx * cx};
}

}  // namespace anitri
