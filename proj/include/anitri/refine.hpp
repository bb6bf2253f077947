#ifndef ANITRI_REFINE_HPP
#define ANITRI_REFINE_HPP

#include <array>
#include <optional>
#include <vector>

#include "anitri/approx.hpp"

namespace anitri {

/// Decision function d_T(e, f) scoring the three candidate bisections.
enum class DecisionMetric {
  L2ProjSq,     // sum of squared child L^2 projection errors
  LpProjPow,    // sum of child projection errors^p
  L1Interp,     // sum of child L^1 interpolation errors
  LpInterpPow,  // sum of child interpolation errors^p
};

enum class RefineRule { PureGreedy, Modified };

/// Tie-breaking among minimizing edges, keyed on the vertex opposite the
/// candidate edge. LexLargestOpposite is the published default; the other
/// order reproduces the apex-anchored split pattern of the greedy-stall
/// construction, where lexicographic ties would otherwise escape the stall.
enum class TieRule { LexLargestOpposite, LexSmallestOpposite };

struct RefineConfig {
  DecisionMetric metric = DecisionMetric::L2ProjSq;
  double metric_p = 2.0;  // exponent for the Lp*Pow metrics
  RefineRule rule = RefineRule::PureGreedy;
  double theta = 2.0 / 3.0;  // error-reduction gate of the modified rule
  TieRule tie = TieRule::LexLargestOpposite;
};

/// B = error-driven greedy bisection, N = newest-vertex fallback.
enum class SplitKind : std::uint8_t { Greedy, Newest };
inline char split_kind_char(SplitKind k) { return k == SplitKind::Greedy ? 'B' : 'N'; }

/// Source plus, for rasters, the pixel set owned by the current triangle.
struct SourceView {
  const FunctionSource* f = nullptr;
  const PixelGridSource* grid = nullptr;     // non-null iff pixel source
  std::span<const PixelIndex> pixels{};      // pixels of the triangle at hand

  bool is_pixel() const { return grid != nullptr; }
};

SourceView view_of(const FunctionSource& f);

struct DecideResult {
  EdgeChoice edge;
  std::array<double, 3> d{};  // decision values per edge label
};

/// Evaluate d_T(e, f) for the three edges and return the minimizer; ties
/// (within 1e-9 relative) resolved by cfg.tie.
DecideResult decide(const SourceView& src, const Triangle& t,
                    const RefineConfig& rcfg, const ApproxConfig& acfg);

struct SplitResult {
  Triangle t1, t2;
  SplitKind kind;
  EdgeChoice edge;
  ErrorRecord rec1, rec2;  // children records under the main ApproxConfig
  PixelSet px1, px2;       // children pixel sets (pixel sources only)
  bool gate_checked = false;
  bool gate_held = false;
  double gate_lhs = 0.0, gate_rhs = 0.0;
};

/// One application of the refinement rule. PureGreedy always follows the
/// decision function; Modified takes the greedy split only when the decided
/// edge reduces the error by the factor theta, otherwise bisects from the
/// newest vertex. `parent` is the triangle's cached error record.
SplitResult refine_once(const SourceView& src, const Triangle& t,
                        const ErrorRecord& parent, const RefineConfig& rcfg,
                        const ApproxConfig& acfg);

struct HierarchyNode {
  Triangle tri;
  int parent = -1;
  std::array<int, 2> child{-1, -1};
  EdgeChoice edge{};
  SplitKind kind{};
  double error = 0.0;
};

/// Full-level hierarchy D_0..D_J; every triangle of every level is split, so
/// level j holds 2^j * |D_0| triangles.
struct Hierarchy {
  std::vector<HierarchyNode> nodes;
  std::vector<std::vector<int>> levels;

  int node_count() const { return static_cast<int>(nodes.size()); }
};

Hierarchy build_hierarchy(const FunctionSource& f, std::span<const Triangle> d0,
                          int levels, const RefineConfig& rcfg,
                          const ApproxConfig& acfg);

}  // namespace anitri

#endif
