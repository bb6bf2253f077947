#include "anitri/refine.hpp"

#include <cmath>
#include <stdexcept>

namespace anitri {

SourceView view_of(const FunctionSource& f) {
  SourceView v;
  v.f = &f;
  if (f.kind() == SourceKind::PixelGrid)
    v.grid = static_cast<const PixelGridSource*>(&f);
  return v;
}

namespace {

struct Candidate {
  Triangle t1, t2;
  ErrorRecord rec1, rec2;  // records under the config used for the metric
  PixelSet px1, px2;
  double d = 0.0;
};

ErrorRecord eval_error(const SourceView& src, const Triangle& t,
                       std::span<const PixelIndex> pixels, const ApproxConfig& cfg) {
  if (src.is_pixel()) return local_error_pixels(*src.grid, t, pixels, cfg);
  return local_error(*src.f, t, cfg);
}

Candidate make_candidate(const SourceView& src, const Triangle& t, EdgeChoice e,
                         const ApproxConfig& cfg) {
  Candidate c;
  auto [t1, t2] = bisect(t, e);
  c.t1 = t1;
  c.t2 = t2;
  if (src.is_pixel()) {
    PixelSet tmp(src.pixels.begin(), src.pixels.end());
    split_pixels(*src.grid, tmp, t1, t2, c.px1, c.px2);
  }
  c.rec1 = eval_error(src, c.t1, c.px1, cfg);
  c.rec2 = eval_error(src, c.t2, c.px2, cfg);
  return c;
}

double metric_value(const Candidate& c, const RefineConfig& rcfg) {
  switch (rcfg.metric) {
    case DecisionMetric::L2ProjSq:
      return c.rec1.error * c.rec1.error + c.rec2.error * c.rec2.error;
    case DecisionMetric::L1Interp:
      return c.rec1.error + c.rec2.error;
    case DecisionMetric::LpProjPow:
    case DecisionMetric::LpInterpPow:
      if (rcfg.metric_p == kInfinity)
        return std::max(c.rec1.error, c.rec2.error);
      return std::pow(c.rec1.error, rcfg.metric_p) +
             std::pow(c.rec2.error, rcfg.metric_p);
  }
  return 0.0;
}

ApproxConfig metric_config(const RefineConfig& rcfg, const ApproxConfig& acfg) {
  ApproxConfig m = acfg;
  switch (rcfg.metric) {
    case DecisionMetric::L2ProjSq:
      m.op = LocalOperator::Projection;
      m.p = 2.0;
      break;
    case DecisionMetric::LpProjPow:
      m.op = LocalOperator::Projection;
      m.p = rcfg.metric_p;
      break;
    case DecisionMetric::L1Interp:
      m.op = LocalOperator::Interpolation;
      m.p = 1.0;
      break;
    case DecisionMetric::LpInterpPow:
      m.op = LocalOperator::Interpolation;
      m.p = rcfg.metric_p;
      break;
  }
  return m;
}

bool same_config(const ApproxConfig& a, const ApproxConfig& b) {
  return a.degree == b.degree && a.p == b.p && a.op == b.op &&
         a.quadrature_order == b.quadrature_order;
}

EdgeChoice pick_edge(const std::array<double, 3>& d, const Triangle& t,
                     TieRule tie) {
  double dmin = std::min({d[0], d[1], d[2]});
  const double tol = dmin * 1e-9;
  int best = -1;
  for (int e = 0; e < 3; ++e) {
    if (d[e] > dmin + tol) continue;
    if (best < 0) {
      best = e;
      continue;
    }
    const Point2 cur = t.v[apex_index(static_cast<EdgeChoice>(best))];
    const Point2 cand = t.v[apex_index(static_cast<EdgeChoice>(e))];
    const bool take = (tie == TieRule::LexLargestOpposite) ? lex_less(cur, cand)
                                                           : lex_less(cand, cur);
    if (take) best = e;
  }
  return static_cast<EdgeChoice>(best);
}

// Noise floor below which a parent error counts as zero for the theta gate
// (the 0 <= theta*0 convention).
double error_floor(const ErrorRecord& parent, const Triangle& t) {
  double mag = 0.0;
  for (double c : parent.fit.coeffs) mag += std::abs(c);
  return 1e-13 * std::sqrt(area(t)) * std::max(1.0, mag);
}

}  // namespace

DecideResult decide(const SourceView& src, const Triangle& t,
                    const RefineConfig& rcfg, const ApproxConfig& acfg) {
  const ApproxConfig mcfg = metric_config(rcfg, acfg);
  DecideResult r{};
  for (int e = 0; e < 3; ++e) {
    Candidate c = make_candidate(src, t, static_cast<EdgeChoice>(e), mcfg);
    r.d[e] = metric_value(c, rcfg);
  }
  r.edge = pick_edge(r.d, t, rcfg.tie);
  return r;
}

SplitResult refine_once(const SourceView& src, const Triangle& t,
                        const ErrorRecord& parent, const RefineConfig& rcfg,
                        const ApproxConfig& acfg) {
  if (rcfg.rule == RefineRule::Modified && !(rcfg.theta > 0.0 && rcfg.theta < 1.0))
    throw std::invalid_argument("refine_once: theta must lie in (0, 1)");
  const ApproxConfig mcfg = metric_config(rcfg, acfg);
  const bool reuse = same_config(mcfg, acfg);

  std::array<double, 3> d{};
  std::array<Candidate, 3> cands;
  for (int e = 0; e < 3; ++e) {
    cands[e] = make_candidate(src, t, static_cast<EdgeChoice>(e), mcfg);
    d[e] = metric_value(cands[e], rcfg);
  }
  const EdgeChoice edge = pick_edge(d, t, rcfg.tie);

  auto main_candidate = [&](EdgeChoice e) {
    if (reuse) return std::move(cands[edge_index(e)]);
    return make_candidate(src, t, e, acfg);
  };

  SplitResult out;
  EdgeChoice final_edge = edge;
  SplitKind kind = SplitKind::Greedy;
  Candidate chosen = main_candidate(edge);
  if (rcfg.rule == RefineRule::Modified) {
    double lhs;
    if (acfg.p == kInfinity)
      lhs = std::max(chosen.rec1.error, chosen.rec2.error);
    else
      lhs = std::pow(std::pow(chosen.rec1.error, acfg.p) +
                         std::pow(chosen.rec2.error, acfg.p),
                     1.0 / acfg.p);
    out.gate_checked = true;
    out.gate_lhs = lhs;
    out.gate_rhs = rcfg.theta * parent.error;
    out.gate_held =
        (lhs <= out.gate_rhs) || (parent.error <= error_floor(parent, t));
    if (!out.gate_held) {
      const EdgeChoice nv = newest_vertex_edge(ensure_newest_vertex(t));
      kind = SplitKind::Newest;
      if (edge_index(nv) != edge_index(edge)) chosen = main_candidate(nv);
      final_edge = nv;
    }
  }
  out.t1 = chosen.t1;
  out.t2 = chosen.t2;
  out.rec1 = std::move(chosen.rec1);
  out.rec2 = std::move(chosen.rec2);
  out.px1 = std::move(chosen.px1);
  out.px2 = std::move(chosen.px2);
  out.edge = final_edge;
  out.kind = kind;
  return out;
}

Hierarchy build_hierarchy(const FunctionSource& f, std::span<const Triangle> d0,
                          int levels, const RefineConfig& rcfg,
                          const ApproxConfig& acfg) {
  if (levels < 0) throw std::invalid_argument("build_hierarchy: negative level count");
  Hierarchy h;
  h.levels.resize(levels + 1);
  SourceView src = view_of(f);
  std::vector<PixelSet> pixel_sets;  // parallel to nodes for raster sources
  for (const Triangle& t : d0) {
    Triangle root = ensure_newest_vertex(t);
    root.level = 0;
    const int id = h.node_count();
    if (src.is_pixel()) pixel_sets.push_back(pixels_in(*src.grid, root));
    HierarchyNode n;
    n.tri = root;
    if (src.is_pixel())
      n.error = local_error_pixels(*src.grid, root, pixel_sets[id], acfg).error;
    else
      n.error = local_error(f, root, acfg).error;
    h.nodes.push_back(n);
    h.levels[0].push_back(id);
  }
  for (int j = 0; j < levels; ++j) {
    for (int id : h.levels[j]) {
      SourceView local = src;
      if (src.is_pixel()) local.pixels = pixel_sets[id];
      ErrorRecord parent_rec;
      parent_rec.error = h.nodes[id].error;
      if (rcfg.rule == RefineRule::Modified) {
        // refine_once needs the cached fit for its zero-error floor
        if (src.is_pixel())
          parent_rec = local_error_pixels(*src.grid, h.nodes[id].tri, local.pixels, acfg);
        else
          parent_rec = local_error(f, h.nodes[id].tri, acfg);
      }
      SplitResult s = refine_once(local, h.nodes[id].tri, parent_rec, rcfg, acfg);
      for (int which = 0; which < 2; ++which) {
        const int cid = h.node_count();
        HierarchyNode c;
        c.tri = which == 0 ? s.t1 : s.t2;
        c.parent = id;
        c.error = which == 0 ? s.rec1.error : s.rec2.error;
        h.nodes.push_back(c);
        if (src.is_pixel()) pixel_sets.push_back(which == 0 ? s.px1 : s.px2);
        h.nodes[id].child[which] = cid;
        h.levels[j + 1].push_back(cid);
      }
      h.nodes[id].edge = s.edge;
      h.nodes[id].kind = s.kind;
    }
  }
  return h;
}

}  // namespace anitri
