#include "anitri/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace anitri {

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Chebyshev initial guess, Newton on P_n.
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
}

namespace {

void push_symmetric(TriRule& r, double a, double w) {
  // orbit of (a, b, b) with b = (1-a)/2
  const double b = (1.0 - a) / 2.0;
  r.nodes.push_back({a, b, b, w});
  r.nodes.push_back({b, a, b, w});
  r.nodes.push_back({b, b, a, w});
}

// Dunavant symmetric rules for the low degrees used on the default path.
TriRule dunavant(int degree) {
  TriRule r;
  r.degree = degree;
  switch (degree) {
    case 1:
      r.nodes.push_back({1.0 / 3, 1.0 / 3, 1.0 / 3, 1.0});
      break;
    case 2:
      push_symmetric(r, 2.0 / 3, 1.0 / 3);
      break;
    case 4:
      push_symmetric(r, 0.108103018168070, 0.223381589678011);
      push_symmetric(r, 0.816847572980459, 0.109951743655322);
      break;
    case 5:
      r.nodes.push_back({1.0 / 3, 1.0 / 3, 1.0 / 3, 0.225});
      push_symmetric(r, 0.059715871789770, 0.132394152788506);
      push_symmetric(r, 0.797426985353087, 0.125939180544827);
      break;
    default:
      throw std::logic_error("dunavant: no table for this degree");
  }
  return r;
}

// Collapsed tensor Gauss rule: exact for total degree <= deg with
// n = ceil((deg+2)/2) points per direction.
TriRule collapsed(int degree) {
  TriRule r;
  r.degree = degree;
  const int n = (degree + 3) / 2;
  std::vector<double> x, w;
  gauss_legendre(n, x, w);
  for (int i = 0; i < n; ++i) {
    const double u = 0.5 * (x[i] + 1.0);
    const double wu = 0.5 * w[i];
    for (int j = 0; j < n; ++j) {
      const double vv = 0.5 * (x[j] + 1.0);
      const double wv = 0.5 * w[j];
      // ref triangle {(0,0),(1,0),(0,1)}: (x,y) = (u, v(1-u))
      const double px = u, py = vv * (1.0 - u);
      const double weight = wu * wv * (1.0 - u) / 0.5;
      r.nodes.push_back({1.0 - px - py, px, py, weight});
    }
  }
  return r;
}

}  // namespace

const TriRule& tri_rule(int degree) {
  static std::map<int, TriRule> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  if (degree < 1) degree = 1;
  auto it = cache.find(degree);
  if (it != cache.end()) return it->second;
  TriRule r;
  if (degree <= 1) r = dunavant(1);
  else if (degree <= 2) r = dunavant(2);
  else if (degree <= 4) r = dunavant(4);
  else if (degree <= 5) r = dunavant(5);
  else r = collapsed(degree);
  return cache.emplace(degree, std::move(r)).first->second;
}

namespace {

using Polygon = std::vector<Point2>;

// Clip polygon against halfplane sign*(x - c) <= 0 (Sutherland-Hodgman).
Polygon clip_halfplane(const Polygon& poly, double c, double sign) {
  Polygon out;
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    const Point2 a = poly[i];
    const Point2 b = poly[(i + 1) % n];
    const double da = sign * (a.x - c);
    const double db = sign * (b.x - c);
    if (da <= 0.0) out.push_back(a);
    if ((da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0)) {
      const double s = da / (da - db);
      out.push_back({a.x + s * (b.x - a.x), a.y + s * (b.y - a.y)});
    }
  }
  return out;
}

}  // namespace

double integrate_clipped(const Triangle& t, int degree,
                         std::span<const double> x_breaks,
                         const std::function<double(Point2)>& f) {
  // Gather breaklines that actually cross the triangle's x-range.
  double xmin = t.v[0].x, xmax = t.v[0].x;
  for (int k = 1; k < 3; ++k) {
    xmin = std::min(xmin, t.v[k].x);
    xmax = std::max(xmax, t.v[k].x);
  }
  std::vector<double> cuts;
  for (double c : x_breaks)
    if (c > xmin && c < xmax) cuts.push_back(c);
  if (cuts.empty()) return integrate(t, degree, f);
  std::sort(cuts.begin(), cuts.end());

  double total = 0.0;
  Polygon rest = {t.v[0], t.v[1], t.v[2]};
  auto add_piece = [&](const Polygon& poly) {
    if (poly.size() < 3) return;
    for (size_t k = 1; k + 1 < poly.size(); ++k) {
      Triangle piece{{poly[0], poly[k], poly[k + 1]}, -1, t.level};
      if (area(piece) == 0.0) continue;
      total += integrate(piece, degree, f);
    }
  };
  for (double c : cuts) {
    add_piece(clip_halfplane(rest, c, +1.0));
    rest = clip_halfplane(rest, c, -1.0);
  }
  add_piece(rest);
  return total;
}

}  // namespace anitri
