#ifndef ANITRI_TREE_HPP
#define ANITRI_TREE_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "anitri/refine.hpp"

namespace anitri {

struct TreeNode {
  Triangle tri;
  int parent = -1;
  std::array<int, 2> child{-1, -1};
  EdgeChoice edge{};   // valid iff internal
  SplitKind kind{};    // valid iff internal
  double error = 0.0;  // cached e_T(f)_p
  LocalPolynomial fit; // cached A_T f
  bool underdetermined = false;

  bool is_leaf() const { return child[0] < 0; }
};

/// When and how each split happened; lets tests re-assert the heap ordering
/// and the modified-rule guarantee after the fact.
struct SplitRecord {
  int node = -1;
  double error_at_split = 0.0;
  double max_other_leaf = 0.0;  // largest error among the other leaves then
  double child_error[2] = {0.0, 0.0};
  SplitKind kind{};
  bool gate_checked = false;
  bool gate_held = false;
  double gate_lhs = 0.0, gate_rhs = 0.0;
};

struct StopRule {
  enum class Kind { MaxLeaves, LocalError, GlobalError };
  Kind kind = Kind::MaxLeaves;
  int leaves = 0;
  double eps = 0.0;

  static StopRule max_leaves(int n);
  static StopRule local_error(double eps);
  static StopRule global_error(double eps);
};

/// The bisection tree: node arena plus growth bookkeeping. Ids are assigned
/// in creation order (roots first, then each split's children consecutively),
/// so a parent id is always smaller than its children's and runs are
/// reproducible. Single writer; concurrent readers are safe once grown.
class BisectionTree {
 public:
  BisectionTree() = default;

  int node_count() const { return static_cast<int>(nodes_.size()); }
  int root_count() const { return n0_; }
  int leaf_count() const { return leaf_count_; }
  const TreeNode& node(int id) const { return nodes_[id]; }
  const std::vector<int>& roots() const { return roots_; }
  std::vector<int> leaves() const;  // ascending id

  /// True when growth gave up before meeting the stop rule (every remaining
  /// leaf already has zero error).
  bool stopped_early() const { return stopped_early_; }

  const std::vector<SplitRecord>& history() const { return history_; }

  const PixelGridSource* grid() const { return grid_; }
  const PixelSet& pixels_of(int id) const;

  /// Verifies #nodes == 2#leaves - N_0, child counts, and that children tile
  /// their parent; throws std::logic_error on violation.
  void check_structure() const;

  // Mutation is reserved for the growth/decode routines.
  int add_root(const Triangle& t, ErrorRecord rec, PixelSet px = {});
  void split_node(int id, SplitResult&& s);
  /// For synthetic trees (pruning studies, tests); grown trees cache their
  /// errors at split time and never reassign them.
  void set_error(int id, double e) { nodes_[id].error = e; }
  void set_grid(const PixelGridSource* grid) { grid_ = grid; }
  void set_stopped_early(bool v) { stopped_early_ = v; }
  void push_history(SplitRecord r) { history_.push_back(r); }

 private:
  std::vector<TreeNode> nodes_;
  std::vector<int> roots_;
  std::vector<PixelSet> pixels_;
  std::vector<SplitRecord> history_;
  const PixelGridSource* grid_ = nullptr;
  int n0_ = 0;
  int leaf_count_ = 0;
  bool stopped_early_ = false;
};

/// Greedy tree algorithm: repeatedly split the leaf with the largest local
/// error (ties toward the smaller id) until the stop rule holds.
BisectionTree greedy_grow(const FunctionSource& f, std::span<const Triangle> d0,
                          const ApproxConfig& acfg, const RefineConfig& rcfg,
                          const StopRule& stop);

/// Same leaf selection, but every split is a newest-vertex bisection: the
/// adaptive isotropic baseline.
BisectionTree grow_isotropic(const FunctionSource& f, std::span<const Triangle> d0,
                             const ApproxConfig& acfg, const StopRule& stop);

/// Breadth-first newest-vertex splitting irrespective of error: the uniform
/// baseline. Equals build_hierarchy with forced N splits when `leaves` is
/// N_0 * 2^J.
BisectionTree grow_uniform(const FunctionSource& f, std::span<const Triangle> d0,
                           const ApproxConfig& acfg, int leaves);

/// ||f - f_N||_{L^p} aggregated from the cached leaf errors.
double global_error(const BisectionTree& tree, double p);

/// Optimal CART pruning: the subtree minimizing
///   sum_leaves e_T^p + lambda #S     (p < infinity)
///   max_leaves  e_T  + lambda #S     (p = infinity)
/// over all pruned subtrees with the same roots; ties toward the smaller
/// tree. Returns a rebuilt tree (fresh ids in breadth-first order).
BisectionTree cart_prune(const BisectionTree& tree, double lambda, double p);

/// Tree topology as 2-bit codes (00 leaf, 01/10/11 bisect edge a/b/c) in
/// breadth-first queue order, packed MSB-first.
struct BitStream {
  std::vector<std::uint8_t> bytes;
  std::size_t bit_count = 0;
  int n0 = 0;
};

BitStream encode(const BisectionTree& tree);

/// Rebuilds the tree skeleton (geometry only, no errors) from a stream.
/// Throws std::runtime_error with the offending bit position on malformed
/// input. bisect() is deterministic, so leaf vertex sets round-trip
/// bit-exactly.
BisectionTree decode(const BitStream& bits, std::span<const Triangle> d0);

/// "ATB1" magic, N_0 as 32-bit big-endian, then the packed codes.
void write_bitstream(const std::string& path, const BitStream& bits);
BitStream read_bitstream(const std::string& path);

/// Mesh text format: "ATMESH1 <N_0> <node_count>" then one line per node:
/// id, parent, the 3 vertices, kind (B/N/-), edge (a/b/c/-).
void write_mesh_text(std::ostream& out, const BisectionTree& tree);
BisectionTree read_mesh_text(std::istream& in);

/// Hierarchies share the node layout; converting lets the wavelet and
/// encoding machinery run on them directly.
BisectionTree from_hierarchy(const Hierarchy& h);

}  // namespace anitri

#endif
