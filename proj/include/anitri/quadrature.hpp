#ifndef ANITRI_QUADRATURE_HPP
#define ANITRI_QUADRATURE_HPP

#include <functional>
#include <span>
#include <vector>

#include "anitri/geometry.hpp"

namespace anitri {

/// Quadrature rule on the triangle in barycentric coordinates.
/// Weights sum to 1; integrals are |T| * sum(w_k f(p_k)).
struct TriRule {
  struct Node {
    double b0, b1, b2, w;
  };
  int degree = 0;  // polynomial exactness
  std::vector<Node> nodes;
};

/// Rule exact for total degree <= `degree`. Symmetric (Dunavant) rules for the
/// common low orders, a collapsed tensor Gauss rule beyond them. Cached.
const TriRule& tri_rule(int degree);

inline Point2 bary_point(const Triangle& t, double b0, double b1, double b2) {
  return {b0 * t.v[0].x + b1 * t.v[1].x + b2 * t.v[2].x,
          b0 * t.v[0].y + b1 * t.v[1].y + b2 * t.v[2].y};
}

template <class F>
double integrate(const Triangle& t, int degree, F&& f) {
  const TriRule& rule = tri_rule(degree);
  double s = 0.0;
  for (const auto& n : rule.nodes) s += n.w * f(bary_point(t, n.b0, n.b1, n.b2));
  return s * area(t);
}

/// Integrate a function that is smooth except across vertical lines x = c.
/// The triangle is clipped along each breakline and the rule applied piecewise,
/// so piecewise-polynomial integrands are integrated exactly.
double integrate_clipped(const Triangle& t, int degree,
                         std::span<const double> x_breaks,
                         const std::function<double(Point2)>& f);

/// Gauss-Legendre nodes/weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace anitri

#endif
