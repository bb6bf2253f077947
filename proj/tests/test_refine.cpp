#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "anitri/refine.hpp"
#include "test_helpers.hpp"

using namespace anitri;
using anitri::testing::random_triangle;
using anitri::testing::t_ref;

namespace {

ErrorRecord record_of(const FunctionSource& f, const Triangle& t,
                      const ApproxConfig& cfg) {
  return local_error(f, t, cfg);
}

// Independent re-implementation of the L2 projection decision at order 12.
EdgeChoice oracle_decide_l2(const FunctionSource& f, const Triangle& t) {
  ApproxConfig cfg;
  cfg.quadrature_order = 12;
  double best = 1e300;
  int arg = -1;
  for (int e = 0; e < 3; ++e) {
    auto [t1, t2] = bisect(t, static_cast<EdgeChoice>(e));
    const double d = std::pow(local_error(f, t1, cfg).error, 2) +
                     std::pow(local_error(f, t2, cfg).error, 2);
    if (d < best * (1.0 - 1e-12)) {
      best = d;
      arg = e;
    }
  }
  return static_cast<EdgeChoice>(arg);
}

}  // namespace

TEST_CASE("decide: ties on a null function follow the opposite-vertex order") {
  const auto zero = make_analytic([](Point2) { return 0.0; }, {-2, -2, 2, 2});
  ApproxConfig acfg;
  RefineConfig rcfg;
  const SourceView src = view_of(*zero);
  DecideResult r = decide(src, t_ref(), rcfg, acfg);
  for (double d : r.d) CHECK(d == 0.0);
  // Apexes are (1,1) for edge a, (0,0) for b, (1,0) for c.
  CHECK(edge_index(r.edge) == 0);

  rcfg.tie = TieRule::LexSmallestOpposite;
  r = decide(src, t_ref(), rcfg, acfg);
  CHECK(edge_index(r.edge) == 1);
}

TEST_CASE("decide matches the exhaustive order-12 oracle on quadratics") {
  const auto f = make_quadratic({1, 0, 100}, {-10, -10, 10, 10});
  ApproxConfig acfg;
  RefineConfig rcfg;
  const SourceView src = view_of(*f);

  const Triangle axis{{Point2{0, 0}, Point2{1, 0}, Point2{0, 1}}, -1, 0};
  CHECK(edge_index(decide(src, axis, rcfg, acfg).edge) ==
        edge_index(oracle_decide_l2(*f, axis)));

  std::mt19937_64 rng(301);
  for (int rep = 0; rep < 60; ++rep) {
    const Triangle t = random_triangle(rng);
    const DecideResult got = decide(src, t, rcfg, acfg);
    // Only compare when the minimum is isolated; exact ties are label order.
    std::array<double, 3> d = got.d;
    std::sort(d.begin(), d.end());
    if (d[1] - d[0] <= 1e-9 * d[1]) continue;
    CHECK(edge_index(got.edge) == edge_index(oracle_decide_l2(*f, t)));
  }
}

TEST_CASE("decide: all three L2 decisions equal e_T^2 on the stalled function") {
  const auto f = make_counterexample_l2();
  ApproxConfig acfg;
  RefineConfig rcfg;
  const SourceView src = view_of(*f);
  const double e = record_of(*f, t_ref(), acfg).error;
  const DecideResult r = decide(src, t_ref(), rcfg, acfg);
  for (double d : r.d) CHECK(d == doctest::Approx(e * e).epsilon(1e-12));
}

TEST_CASE("refine_once: zero-error parents split greedily by convention") {
  const auto f = make_analytic([](Point2 p) { return 1.0 + 2 * p.x - p.y; },
                               {-2, -2, 2, 2});
  ApproxConfig acfg;
  RefineConfig rcfg;
  rcfg.rule = RefineRule::Modified;
  const SourceView src = view_of(*f);
  const Triangle t = ensure_newest_vertex(t_ref());
  const SplitResult s = refine_once(src, t, record_of(*f, t, acfg), rcfg, acfg);
  CHECK(s.kind == SplitKind::Greedy);
  CHECK(s.gate_checked);
  CHECK(s.gate_held);
}

TEST_CASE("decide: interpolation metric sees no preferred edge on the oscillator") {
  // Every child vertex of every bisection of t_ref lies on a vanishing line
  // of sin(2 pi x), so all interpolants are zero and each edge scores the
  // same L^1 mass.
  const auto f = make_counterexample_interp(1);
  ApproxConfig acfg;
  RefineConfig rcfg;
  rcfg.metric = DecisionMetric::L1Interp;
  const DecideResult r = decide(view_of(*f), t_ref(), rcfg, acfg);
  CHECK(r.d[0] == doctest::Approx(r.d[1]).epsilon(1e-12));
  CHECK(r.d[1] == doctest::Approx(r.d[2]).epsilon(1e-12));
  CHECK(r.d[0] > 0.1);  // the mass itself is far from zero
}

TEST_CASE("refine_once rejects theta outside (0,1)") {
  const auto f = make_quadratic({1, 0, 1}, {-10, -10, 10, 10});
  ApproxConfig acfg;
  RefineConfig rcfg;
  rcfg.rule = RefineRule::Modified;
  const SourceView src = view_of(*f);
  const Triangle t = ensure_newest_vertex(t_ref());
  const ErrorRecord parent = record_of(*f, t, acfg);
  for (double bad : {0.0, 1.0, -0.5, 1.5}) {
    rcfg.theta = bad;
    CHECK_THROWS_AS(refine_once(src, t, parent, rcfg, acfg), std::invalid_argument);
  }
}

TEST_CASE("refine_once: the stalled function falls back to newest-vertex") {
  const auto f = make_counterexample_l2();
  ApproxConfig acfg;
  RefineConfig rcfg;
  rcfg.rule = RefineRule::Modified;
  const SourceView src = view_of(*f);
  const Triangle t = ensure_newest_vertex(t_ref());
  const SplitResult s = refine_once(src, t, record_of(*f, t, acfg), rcfg, acfg);
  CHECK(s.kind == SplitKind::Newest);
  CHECK_FALSE(s.gate_held);
  // Root newest vertex is (1,0); the fallback bisects the hypotenuse at
  // (1/2, 1/2), leaving the Lemma-1 x-pattern family.
  CHECK(s.t1.v[2] == Point2{0.5, 0.5});
}

TEST_CASE("refine_once: quadratics always cut the squared error by 3/5") {
  const auto f = make_quadratic({1, 0, 1}, {-10, -10, 10, 10});
  ApproxConfig acfg;
  RefineConfig rcfg;
  rcfg.rule = RefineRule::Modified;
  const SourceView src = view_of(*f);
  std::mt19937_64 rng(303);
  for (int rep = 0; rep < 300; ++rep) {
    Triangle t = ensure_newest_vertex(random_triangle(rng));
    const ErrorRecord parent = record_of(*f, t, acfg);
    const SplitResult s = refine_once(src, t, parent, rcfg, acfg);
    // Guaranteed squared-error reduction for quadratics under the best split
    // (the as-written gate compares sqrt of this against theta, so heavily
    // distorted triangles can still fall back to a newest-vertex split).
    CHECK(s.gate_lhs * s.gate_lhs <= 0.6 * parent.error * parent.error + 1e-12);
  }
  // Away from the optimal shape the theta = 2/3 gate holds and the split is
  // greedy. (A q-equilateral triangle sits exactly at the sqrt(3/5) = 0.775
  // worst case: nothing to gain from any bisection, so the gate hands it to
  // the newest-vertex fallback.)
  const Triangle shapes[] = {
      ensure_newest_vertex(t_ref()),
      ensure_newest_vertex(Triangle{{Point2{0, 0}, Point2{1, 0}, Point2{0, 1}}, -1, 0}),
      ensure_newest_vertex(Triangle{{Point2{0, 0}, Point2{2, 0}, Point2{0.3, 0.8}}, -1, 0})};
  for (const Triangle& t : shapes) {
    const ErrorRecord parent = record_of(*f, t, acfg);
    const SplitResult s = refine_once(src, t, parent, rcfg, acfg);
    CHECK(s.kind == SplitKind::Greedy);
    CHECK(s.gate_lhs <= rcfg.theta * parent.error);
  }
  const Triangle equilateral = ensure_newest_vertex(
      Triangle{{Point2{0, 0}, Point2{1, 0}, Point2{0.5, std::sqrt(3.0) / 2}}, -1, 0});
  const ErrorRecord parent = record_of(*f, equilateral, acfg);
  const SplitResult s = refine_once(src, equilateral, parent, rcfg, acfg);
  CHECK(s.kind == SplitKind::Newest);
  CHECK(s.gate_lhs / parent.error == doctest::Approx(std::sqrt(0.6)).epsilon(1e-6));
}

TEST_CASE("build_hierarchy: cardinality and nesting") {
  const auto zero = make_analytic([](Point2) { return 0.0; }, {-2, -2, 2, 2});
  ApproxConfig acfg;
  RefineConfig rcfg;

  const Triangle root = t_ref();
  const Hierarchy h0 = build_hierarchy(*zero, std::span(&root, 1), 0, rcfg, acfg);
  CHECK(h0.levels.size() == 1);
  CHECK(h0.levels[0].size() == 1);

  // Unit square split into two symmetric triangles, three levels of zero
  // function: 16 triangles.
  const std::array<Triangle, 2> square{
      Triangle{{Point2{0, 0}, Point2{1, 0}, Point2{1, 1}}, -1, 0},
      Triangle{{Point2{0, 0}, Point2{1, 1}, Point2{0, 1}}, -1, 0}};
  const Hierarchy h3 = build_hierarchy(*zero, square, 3, rcfg, acfg);
  CHECK(h3.levels[3].size() == 16);

  const auto f = make_analytic(
      [](Point2 p) { return std::sin(2 * p.x) * std::cos(p.y); }, {-2, -2, 2, 2});
  const Hierarchy h = build_hierarchy(*f, square, 5, rcfg, acfg);
  double total = 0.0;
  for (size_t j = 0; j < h.levels.size(); ++j)
    CHECK(h.levels[j].size() == (1u << j) * 2u);
  for (int id : h.levels[4]) {
    const HierarchyNode& n = h.nodes[id];
    auto [t1, t2] = bisect(n.tri, n.edge);
    CHECK(h.nodes[n.child[0]].tri.v == t1.v);
    CHECK(h.nodes[n.child[1]].tri.v == t2.v);
    total += area(n.tri);
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("modified hierarchies record a re-assertable theta guarantee") {
  const auto f = make_sharp_transition(0.3, {0, 0, 1.1, 1.1});
  ApproxConfig acfg;
  RefineConfig rcfg;
  rcfg.rule = RefineRule::Modified;
  const std::array<Triangle, 2> square{
      Triangle{{Point2{0, 0}, Point2{1.1, 0}, Point2{1.1, 1.1}}, -1, 0},
      Triangle{{Point2{0, 0}, Point2{1.1, 1.1}, Point2{0, 1.1}}, -1, 0}};
  const Hierarchy h = build_hierarchy(*f, square, 4, rcfg, acfg);
  for (const HierarchyNode& n : h.nodes) {
    if (n.child[0] < 0 || n.kind != SplitKind::Greedy) continue;
    const double e1 = h.nodes[n.child[0]].error;
    const double e2 = h.nodes[n.child[1]].error;
    if (n.error <= 1e-12) continue;
    CHECK(std::sqrt(e1 * e1 + e2 * e2) <= rcfg.theta * n.error + 1e-12);
  }
}

TEST_CASE("the greedy stall: level errors never improve on the counterexample") {
  const auto f = make_counterexample_l2();
  ApproxConfig acfg;
  RefineConfig rcfg;
  rcfg.tie = TieRule::LexSmallestOpposite;  // the apex-anchored split pattern
  const Triangle root = t_ref();
  const Hierarchy h = build_hierarchy(*f, std::span(&root, 1), 6, rcfg, acfg);
  std::vector<double> level_err;
  for (const auto& level : h.levels) {
    double acc = 0.0;
    for (int id : level) acc += h.nodes[id].error * h.nodes[id].error;
    level_err.push_back(std::sqrt(acc));
  }
  for (size_t j = 1; j < level_err.size(); ++j)
    CHECK(level_err[j] >= level_err[0] - 1e-9);
  // Every split stayed inside the Lemma-1 family: every node error equals the
  // full local L2 mass (the projection is zero).
  for (const HierarchyNode& n : h.nodes) {
    const double mass = std::sqrt(integrate_clipped(
        n.tri, 8, f->x_breaklines(),
        [&](Point2 p) { return f->eval(p) * f->eval(p); }));
    CHECK(n.error == doctest::Approx(mass).epsilon(1e-9));
  }
}
