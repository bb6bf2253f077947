#include <doctest.h>

#include <random>
#include <set>
#include <span>
#include <vector>
#include <stdexcept>

#include "anitri/geometry.hpp"
#include "test_helpers.hpp"

using namespace anitri;
using anitri::testing::random_form;
using anitri::testing::random_triangle;
using anitri::testing::t_ref;

TEST_CASE("edge vectors follow the fixed convention and telescope to zero") {
  const Triangle t{{Point2{0, 0}, Point2{1, 0}, Point2{0, 1}}, -1, 0};
  const auto ev = edge_vectors(t);
  CHECK(ev[0] == Vec2{1, 0});
  CHECK(ev[1] == Vec2{-1, 1});
  CHECK(ev[2] == Vec2{0, -1});

  const auto er = edge_vectors(t_ref());
  CHECK(er[0] == Vec2{1, 0});
  CHECK(er[1] == Vec2{0, 1});
  CHECK(er[2] == Vec2{-1, -1});

  std::mt19937_64 rng(7);
  for (int i = 0; i < 1000; ++i) {
    const Triangle r = random_triangle(rng);
    const auto e = edge_vectors(r);
    const Vec2 sum = e[0] + e[1] + e[2];
    CHECK(norm(sum) <= 1e-12 * diameter(r));
  }

  const Triangle degen{{Point2{0, 0}, Point2{1, 1}, Point2{2, 2}}, -1, 0};
  CHECK(is_degenerate(degen));
  CHECK(area(degen) == 0.0);
  CHECK_THROWS_AS(edge_vectors(degen), std::invalid_argument);
}

TEST_CASE("reference measurements") {
  const Triangle t = t_ref();
  CHECK(diameter(t) == doctest::Approx(std::sqrt(2.0)));
  CHECK(area(t) == doctest::Approx(0.5));
  const Point2 bc = barycenter(t);
  CHECK(bc.x == doctest::Approx(2.0 / 3.0));
  CHECK(bc.y == doctest::Approx(1.0 / 3.0));

  Triangle eq{{Point2{0, 0}, Point2{1, 0}, Point2{0.5, std::sqrt(3.0) / 2}}, -1, 0};
  CHECK(diameter(eq) == doctest::Approx(1.0));
}

TEST_CASE("bisection from (0,0) of the reference triangle hits (1, 1/2)") {
  // Splitting the edge between (1,0) and (1,1); its apex is (0,0).
  auto [t1, t2] = bisect(t_ref(), EdgeChoice::B);
  const std::set<std::pair<double, double>> s1{{t1.v[0].x, t1.v[0].y},
                                               {t1.v[1].x, t1.v[1].y},
                                               {t1.v[2].x, t1.v[2].y}};
  const std::set<std::pair<double, double>> s2{{t2.v[0].x, t2.v[0].y},
                                               {t2.v[1].x, t2.v[1].y},
                                               {t2.v[2].x, t2.v[2].y}};
  CHECK(s1 == std::set<std::pair<double, double>>{{0, 0}, {1, 0}, {1, 0.5}});
  CHECK(s2 == std::set<std::pair<double, double>>{{0, 0}, {1, 1}, {1, 0.5}});
  CHECK(t1.newest_vertex_index == 2);
  CHECK(t1.v[2] == Point2{1, 0.5});
  CHECK(t1.level == 1);
}

TEST_CASE("children halve the area for every edge choice") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const Triangle t = random_triangle(rng);
    for (int e = 0; e < 3; ++e) {
      auto [t1, t2] = bisect(t, static_cast<EdgeChoice>(e));
      CHECK(area(t1) == doctest::Approx(area(t) / 2).epsilon(1e-12));
      CHECK(area(t2) == doctest::Approx(area(t) / 2).epsilon(1e-12));
    }
  }
}

namespace {

// All triangles produced by `levels` rounds of newest-vertex bisection after
// an initial bisection of edge `first`.
std::vector<Triangle> bnn_family(const Triangle& t, EdgeChoice first, int levels) {
  std::vector<Triangle> cur;
  {
    auto [a, b] = bisect(t, first);
    cur = {a, b};
  }
  for (int l = 0; l < levels; ++l) {
    std::vector<Triangle> next;
    for (const Triangle& c : cur) {
      auto [a, b] = bisect(c, newest_vertex_edge(c));
      next.push_back(a);
      next.push_back(b);
    }
    cur = next;
  }
  return cur;
}

}  // namespace

TEST_CASE("BNN sequences at least halve the diameter") {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 1000; ++i) {
    const Triangle t = random_triangle(rng);
    for (int e = 0; e < 3; ++e)
      for (const Triangle& g : bnn_family(t, static_cast<EdgeChoice>(e), 2))
        CHECK(diameter(g) <= (0.5 + 1e-12) * diameter(t));
  }

  Triangle eq{{Point2{0, 0}, Point2{1, 0}, Point2{0.5, std::sqrt(3.0) / 2}}, -1, 0};
  for (int e = 0; e < 3; ++e)
    for (const Triangle& g : bnn_family(eq, static_cast<EdgeChoice>(e), 2))
      CHECK(diameter(g) <= (0.5 + 1e-12) * diameter(eq));
}

namespace {

// Expand every split chain of the pattern (positions of N fixed, all edge
// choices tried at B positions) and collect the outcome triangles.
void expand_pattern(const Triangle& t, std::span<const char> pattern, size_t pos,
                    std::vector<Triangle>& out) {
  if (pos == pattern.size()) {
    out.push_back(t);
    return;
  }
  if (pattern[pos] == 'N') {
    auto [a, b] = bisect(t, newest_vertex_edge(t));
    expand_pattern(a, pattern, pos + 1, out);
    expand_pattern(b, pattern, pos + 1, out);
  } else {
    for (int e = 0; e < 3; ++e) {
      auto [a, b] = bisect(t, static_cast<EdgeChoice>(e));
      expand_pattern(a, pattern, pos + 1, out);
      expand_pattern(b, pattern, pos + 1, out);
    }
  }
}

}  // namespace

TEST_CASE("{BN...BN} chains shrink diameters by 1 - 2^-k (spot check k <= 3)") {
  // Sequences of length k+2 with newest-vertex splits at steps 2 and k+2 and
  // free bisections elsewhere; checked empirically for small k only.
  std::mt19937_64 rng(37);
  for (int k = 1; k <= 3; ++k) {
    std::vector<char> pattern(k + 2, 'B');
    pattern[1] = 'N';
    pattern[k + 1] = 'N';
    const double bound = (1.0 - std::pow(2.0, -k)) * (1.0 + 1e-12);
    for (int rep = 0; rep < 30; ++rep) {
      const Triangle t = ensure_newest_vertex(random_triangle(rng));
      std::vector<Triangle> leaves;
      expand_pattern(t, pattern, 0, leaves);
      for (const Triangle& g : leaves) CHECK(diameter(g) <= bound * diameter(t));
    }
  }
}

TEST_CASE("rho_q basics") {
  const QuadraticForm euclid{1, 0, 1};
  Triangle eq{{Point2{0, 0}, Point2{1, 0}, Point2{0.5, std::sqrt(3.0) / 2}}, -1, 0};
  CHECK(rho_q(eq, euclid) == doctest::Approx(4.0 / std::sqrt(3.0)).epsilon(1e-12));

  // Scaling leaves rho unchanged.
  std::mt19937_64 rng(17);
  for (int i = 0; i < 50; ++i) {
    const Triangle t = random_triangle(rng);
    Triangle scaled = t;
    for (auto& v : scaled.v) v = v * 3.7;
    CHECK(rho_q(scaled, euclid) == doctest::Approx(rho_q(t, euclid)).epsilon(1e-10));
  }

  const QuadraticForm singular{1, 0, 0};
  CHECK_THROWS_AS(rho_q(eq, singular), std::invalid_argument);
}

TEST_CASE("rho_q is invariant under null-cone shear of an indefinite form") {
  // q = x^2 - 10 y^2; its null cone is spanned by (sqrt(10), +-1).
  const QuadraticForm q{1, 0, -10};
  const double r = std::sqrt(10.0);
  const Vec2 u{r, 1}, v{r, -1};
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> tdist(0.25, 4.0);
  for (int i = 0; i < 200; ++i) {
    const double tt = tdist(rng);
    // psi = U diag(t, 1/t) U^{-1} with U = [u v]
    const double det = u.x * v.y - u.y * v.x;
    auto apply = [&](Point2 p) {
      const double a = (p.x * v.y - p.y * v.x) / det;   // coefficient on u
      const double b = (p.y * u.x - p.x * u.y) / det;   // coefficient on v
      const Vec2 w = u * (tt * a) + v * (b / tt);
      return Point2{w.x, w.y};
    };
    const Triangle t = random_triangle(rng);
    Triangle mapped = t;
    for (auto& p : mapped.v) p = apply(p);
    CHECK(rho_q(mapped, q) == doctest::Approx(rho_q(t, q)).epsilon(1e-9));
  }
}

TEST_CASE("rho_q lower bound 4/sqrt(3) for definite forms") {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 1000; ++i) {
    const Triangle t = random_triangle(rng);
    const QuadraticForm q = random_form(rng, true);
    CHECK(rho_q(t, q) >= 4.0 / std::sqrt(3.0) - 1e-9);
  }
}

TEST_CASE("abs_form matches the eigendecomposition") {
  const QuadraticForm q{1, 0, -10};
  const QuadraticForm a = abs_form(q);
  CHECK(a.q11 == doctest::Approx(1.0));
  CHECK(a.q12 == doctest::Approx(0.0));
  CHECK(a.q22 == doctest::Approx(10.0));

  // rotated diag(3,-2) by 30 degrees -> rotated diag(3,2)
  const double c = std::cos(M_PI / 6), s = std::sin(M_PI / 6);
  const QuadraticForm rot{3 * c * c + (-2) * s * s, (3 - (-2)) * c * s,
                          3 * s * s + (-2) * c * c};
  const QuadraticForm expect{3 * c * c + 2 * s * s, (3 - 2) * c * s,
                             3 * s * s + 2 * c * c};
  const QuadraticForm got = abs_form(rot);
  CHECK(got.q11 == doctest::Approx(expect.q11).epsilon(1e-12));
  CHECK(got.q12 == doctest::Approx(expect.q12).epsilon(1e-12));
  CHECK(got.q22 == doctest::Approx(expect.q22).epsilon(1e-12));

  // PSD forms are fixed; the map is idempotent.
  std::mt19937_64 rng(29);
  for (int i = 0; i < 300; ++i) {
    const QuadraticForm any = random_form(rng, false);
    const QuadraticForm pos = random_form(rng, true);
    const QuadraticForm fixed = abs_form(pos);
    CHECK(fixed.q11 == doctest::Approx(pos.q11).epsilon(1e-10));
    CHECK(fixed.q12 == doctest::Approx(pos.q12).epsilon(2e-10));
    CHECK(fixed.q22 == doctest::Approx(pos.q22).epsilon(1e-10));
    const QuadraticForm once = abs_form(any);
    const QuadraticForm twice = abs_form(once);
    CHECK(twice.q11 == doctest::Approx(once.q11).epsilon(1e-10));
    CHECK(twice.q12 == doctest::Approx(once.q12).epsilon(2e-10));
    CHECK(twice.q22 == doctest::Approx(once.q22).epsilon(1e-10));
  }
}

TEST_CASE("root newest-vertex convention is opposite the longest edge") {
  Triangle t = ensure_newest_vertex(t_ref());
  // Longest edge is the hypotenuse (0,0)-(1,1) = edge c; its apex is (1,0).
  CHECK(t.newest_vertex_index == 1);
  CHECK(t.v[1] == Point2{1, 0});
  // A newest-vertex split of the root then bisects the hypotenuse.
  CHECK(edge_index(newest_vertex_edge(t)) == 2);
}
