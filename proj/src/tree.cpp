#include "anitri/tree.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <ostream>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace anitri {

StopRule StopRule::max_leaves(int n) {
  if (n < 1) throw std::invalid_argument("StopRule: leaf budget must be >= 1");
  return {Kind::MaxLeaves, n, 0.0};
}
StopRule StopRule::local_error(double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("StopRule: eps must be > 0");
  return {Kind::LocalError, 0, eps};
}
StopRule StopRule::global_error(double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("StopRule: eps must be > 0");
  return {Kind::GlobalError, 0, eps};
}

std::vector<int> BisectionTree::leaves() const {
  std::vector<int> out;
  out.reserve(leaf_count_);
  for (int i = 0; i < node_count(); ++i)
    if (nodes_[i].is_leaf()) out.push_back(i);
  return out;
}

const PixelSet& BisectionTree::pixels_of(int id) const {
  static const PixelSet empty;
  if (grid_ == nullptr) return empty;
  return pixels_[id];
}

int BisectionTree::add_root(const Triangle& t, ErrorRecord rec, PixelSet px) {
  const int id = node_count();
  TreeNode n;
  n.tri = t;
  n.error = rec.error;
  n.fit = std::move(rec.fit);
  n.underdetermined = rec.underdetermined;
  nodes_.push_back(std::move(n));
  pixels_.push_back(std::move(px));
  roots_.push_back(id);
  ++n0_;
  ++leaf_count_;
  return id;
}

void BisectionTree::split_node(int id, SplitResult&& s) {
  if (!nodes_[id].is_leaf()) throw std::logic_error("split_node: not a leaf");
  for (int which = 0; which < 2; ++which) {
    TreeNode c;
    c.tri = which == 0 ? s.t1 : s.t2;
    c.parent = id;
    ErrorRecord& rec = which == 0 ? s.rec1 : s.rec2;
    c.error = rec.error;
    c.fit = std::move(rec.fit);
    c.underdetermined = rec.underdetermined;
    nodes_[id].child[which] = node_count();
    nodes_.push_back(std::move(c));
    pixels_.push_back(std::move(which == 0 ? s.px1 : s.px2));
  }
  nodes_[id].edge = s.edge;
  nodes_[id].kind = s.kind;
  ++leaf_count_;  // one leaf became two
}

void BisectionTree::check_structure() const {
  int leaves_seen = 0;
  for (int i = 0; i < node_count(); ++i) {
    const TreeNode& n = nodes_[i];
    if (n.is_leaf()) {
      ++leaves_seen;
      if (n.child[1] >= 0) throw std::logic_error("tree: half-split node");
      continue;
    }
    if (n.child[1] < 0) throw std::logic_error("tree: single child");
    auto [t1, t2] = bisect(n.tri, n.edge);
    const TreeNode& c0 = nodes_[n.child[0]];
    const TreeNode& c1 = nodes_[n.child[1]];
    if (c0.tri.v != t1.v || c1.tri.v != t2.v)
      throw std::logic_error("tree: children do not tile their parent");
    if (c0.parent != i || c1.parent != i) throw std::logic_error("tree: bad parent link");
  }
  if (leaves_seen != leaf_count_) throw std::logic_error("tree: leaf count drift");
  if (node_count() != 2 * leaf_count_ - n0_)
    throw std::logic_error("tree: #S != 2#L - N0");
}

namespace {

enum class GrowthPolicy { Adaptive, IsotropicNV, UniformBreadthFirst };

struct HeapEntry {
  double error;
  int id;
  bool operator<(const HeapEntry& o) const {
    // max-heap on error; among ties the smaller id wins
    if (error != o.error) return error < o.error;
    return id > o.id;
  }
};

SplitResult newest_vertex_split(const SourceView& src, const Triangle& t,
                                const ApproxConfig& acfg) {
  SplitResult s;
  const Triangle tt = ensure_newest_vertex(t);
  s.edge = newest_vertex_edge(tt);
  s.kind = SplitKind::Newest;
  auto [t1, t2] = bisect(tt, s.edge);
  s.t1 = t1;
  s.t2 = t2;
  if (src.is_pixel()) {
    PixelSet parent(src.pixels.begin(), src.pixels.end());
    split_pixels(*src.grid, parent, s.t1, s.t2, s.px1, s.px2);
    s.rec1 = local_error_pixels(*src.grid, s.t1, s.px1, acfg);
    s.rec2 = local_error_pixels(*src.grid, s.t2, s.px2, acfg);
  } else {
    s.rec1 = local_error(*src.f, s.t1, acfg);
    s.rec2 = local_error(*src.f, s.t2, acfg);
  }
  return s;
}

BisectionTree grow(const FunctionSource& f, std::span<const Triangle> d0,
                   const ApproxConfig& acfg, const RefineConfig& rcfg,
                   const StopRule& stop, GrowthPolicy policy) {
  if (d0.empty()) throw std::invalid_argument("grow: empty initial mesh");
  BisectionTree tree;
  SourceView base = view_of(f);
  if (base.is_pixel()) tree.set_grid(base.grid);

  // Root pixel partition: closed containment, earlier root wins on shared
  // boundaries.
  std::vector<PixelSet> root_px(d0.size());
  if (base.is_pixel()) {
    std::vector<std::uint8_t> claimed(base.grid->pixel_count(), 0);
    for (size_t k = 0; k < d0.size(); ++k) {
      PixelSet cand = pixels_in(*base.grid, d0[k]);
      for (PixelIndex i : cand)
        if (!claimed[static_cast<size_t>(i)]) {
          claimed[static_cast<size_t>(i)] = 1;
          root_px[k].push_back(i);
        }
    }
  }

  std::priority_queue<HeapEntry> heap;
  std::deque<int> fifo;
  double global_pow = 0.0;   // sum of leaf errors^p (p < inf)
  double parked_max = 0.0;   // largest error among unrefinable leaves
  const bool finite_p = acfg.p != kInfinity;

  for (size_t k = 0; k < d0.size(); ++k) {
    Triangle root = ensure_newest_vertex(d0[k]);
    root.level = 0;
    ErrorRecord rec =
        base.is_pixel()
            ? local_error_pixels(*base.grid, root, root_px[k], acfg)
            : local_error(f, root, acfg);
    if (finite_p) global_pow += std::pow(rec.error, acfg.p);
    const int id = tree.add_root(root, std::move(rec), std::move(root_px[k]));
    heap.push({tree.node(id).error, id});
    fifo.push_back(id);
  }

  if (stop.kind == StopRule::Kind::MaxLeaves && stop.leaves < tree.root_count())
    throw std::invalid_argument("grow: leaf budget below the root count");

  auto heap_top_alive = [&]() -> HeapEntry {
    while (!heap.empty() && !tree.node(heap.top().id).is_leaf()) heap.pop();
    if (heap.empty()) return {0.0, -1};
    return heap.top();
  };

  auto satisfied = [&]() {
    switch (stop.kind) {
      case StopRule::Kind::MaxLeaves:
        return tree.leaf_count() >= stop.leaves;
      case StopRule::Kind::LocalError:
        return std::max(heap_top_alive().error, parked_max) <= stop.eps;
      case StopRule::Kind::GlobalError:
        if (finite_p) return std::pow(global_pow, 1.0 / acfg.p) <= stop.eps;
        return std::max(heap_top_alive().error, parked_max) <= stop.eps;
    }
    return true;
  };

  while (!satisfied()) {
    int id = -1;
    if (policy == GrowthPolicy::UniformBreadthFirst) {
      while (!fifo.empty() && !tree.node(fifo.front()).is_leaf()) fifo.pop_front();
      if (fifo.empty()) break;
      id = fifo.front();
      fifo.pop_front();
    } else {
      const HeapEntry top = heap_top_alive();
      if (top.id < 0 || top.error <= 0.0) {
        tree.set_stopped_early(true);
        break;
      }
      id = top.id;
      heap.pop();
    }

    SplitRecord hist;
    hist.node = id;
    hist.error_at_split = tree.node(id).error;
    hist.max_other_leaf = heap_top_alive().error;

    SourceView src = base;
    if (base.is_pixel()) src.pixels = tree.pixels_of(id);
    SplitResult s;
    if (policy == GrowthPolicy::Adaptive) {
      ErrorRecord parent;
      parent.error = tree.node(id).error;
      parent.fit = tree.node(id).fit;
      s = refine_once(src, tree.node(id).tri, parent, rcfg, acfg);
    } else {
      s = newest_vertex_split(src, tree.node(id).tri, acfg);
    }
    if (is_degenerate(s.t1) || is_degenerate(s.t2)) {
      // Bisection exhausted double precision (the midpoint collapsed onto an
      // endpoint). Park the leaf: it stays in the partition but never
      // re-enters the split queue. Sup-norm greedy growth can drive a single
      // lineage this deep by thinning it without shrinking its diameter.
      parked_max = std::max(parked_max, tree.node(id).error);
      continue;
    }
    hist.kind = s.kind;
    hist.gate_checked = s.gate_checked;
    hist.gate_held = s.gate_held;
    hist.gate_lhs = s.gate_lhs;
    hist.gate_rhs = s.gate_rhs;
    hist.child_error[0] = s.rec1.error;
    hist.child_error[1] = s.rec2.error;

    if (finite_p)
      global_pow += std::pow(s.rec1.error, acfg.p) + std::pow(s.rec2.error, acfg.p) -
                    std::pow(tree.node(id).error, acfg.p);
    const double e1 = s.rec1.error, e2 = s.rec2.error;
    tree.split_node(id, std::move(s));
    const int c0 = tree.node(id).child[0], c1 = tree.node(id).child[1];
    heap.push({e1, c0});
    heap.push({e2, c1});
    fifo.push_back(c0);
    fifo.push_back(c1);
    tree.push_history(hist);
  }
  return tree;
}

}  // namespace

BisectionTree greedy_grow(const FunctionSource& f, std::span<const Triangle> d0,
                          const ApproxConfig& acfg, const RefineConfig& rcfg,
                          const StopRule& stop) {
  return grow(f, d0, acfg, rcfg, stop, GrowthPolicy::Adaptive);
}

BisectionTree grow_isotropic(const FunctionSource& f, std::span<const Triangle> d0,
                             const ApproxConfig& acfg, const StopRule& stop) {
  return grow(f, d0, acfg, RefineConfig{}, stop, GrowthPolicy::IsotropicNV);
}

BisectionTree grow_uniform(const FunctionSource& f, std::span<const Triangle> d0,
                           const ApproxConfig& acfg, int leaves) {
  return grow(f, d0, acfg, RefineConfig{}, StopRule::max_leaves(leaves),
              GrowthPolicy::UniformBreadthFirst);
}

double global_error(const BisectionTree& tree, double p) {
  if (p == kInfinity) {
    double m = 0.0;
    for (int id : tree.leaves()) m = std::max(m, tree.node(id).error);
    return m;
  }
  double acc = 0.0;
  for (int id : tree.leaves()) acc += std::pow(tree.node(id).error, p);
  return std::pow(acc, 1.0 / p);
}

namespace {

// Copy the subtree selected by keep_split into a fresh tree, breadth-first.
BisectionTree materialize_pruned(const BisectionTree& tree,
                                 const std::vector<char>& keep_split) {
  BisectionTree out;
  if (tree.grid() != nullptr) out.set_grid(tree.grid());
  std::deque<std::pair<int, int>> queue;  // (old id, new id)
  for (int r : tree.roots()) {
    const TreeNode& n = tree.node(r);
    ErrorRecord rec;
    rec.error = n.error;
    rec.fit = n.fit;
    rec.underdetermined = n.underdetermined;
    const int nid = out.add_root(n.tri, std::move(rec), PixelSet(tree.pixels_of(r)));
    queue.emplace_back(r, nid);
  }
  while (!queue.empty()) {
    auto [oid, nid] = queue.front();
    queue.pop_front();
    if (!keep_split[oid]) continue;
    const TreeNode& n = tree.node(oid);
    SplitResult s;
    const TreeNode& oc0 = tree.node(n.child[0]);
    const TreeNode& oc1 = tree.node(n.child[1]);
    s.t1 = oc0.tri;
    s.t2 = oc1.tri;
    s.edge = n.edge;
    s.kind = n.kind;
    s.rec1 = {oc0.error, oc0.fit, oc0.underdetermined};
    s.rec2 = {oc1.error, oc1.fit, oc1.underdetermined};
    s.px1 = tree.pixels_of(n.child[0]);
    s.px2 = tree.pixels_of(n.child[1]);
    out.split_node(nid, std::move(s));
    queue.emplace_back(n.child[0], out.node(nid).child[0]);
    queue.emplace_back(n.child[1], out.node(nid).child[1]);
  }
  return out;
}

}  // namespace

BisectionTree cart_prune(const BisectionTree& tree, double lambda, double p) {
  if (lambda < 0.0) throw std::invalid_argument("cart_prune: lambda must be >= 0");
  const int n = tree.node_count();
  std::vector<char> keep(n, 0);

  if (p != kInfinity) {
    // Bottom-up DP; children have larger ids than their parent, so a single
    // descending sweep visits them first.
    std::vector<double> cost(n, 0.0);
    for (int i = n - 1; i >= 0; --i) {
      const TreeNode& nd = tree.node(i);
      const double leaf_cost = std::pow(nd.error, p) + lambda;
      if (nd.is_leaf()) {
        cost[i] = leaf_cost;
        continue;
      }
      const double split_cost = lambda + cost[nd.child[0]] + cost[nd.child[1]];
      if (split_cost < leaf_cost) {
        cost[i] = split_cost;
        keep[i] = 1;
      } else {
        cost[i] = leaf_cost;  // ties prune
      }
    }
    return materialize_pruned(tree, keep);
  }

  // p = infinity: scan the candidate error caps (every achievable sup is some
  // node error). For a cap M, the minimal tree prunes at the highest nodes
  // with error <= M and must split every node above the cap; a full-tree leaf
  // above the cap makes M infeasible.
  std::vector<double> caps;
  caps.reserve(n);
  for (int i = 0; i < n; ++i) caps.push_back(tree.node(i).error);
  std::sort(caps.begin(), caps.end());
  caps.erase(std::unique(caps.begin(), caps.end()), caps.end());

  double best_cost = std::numeric_limits<double>::infinity();
  int best_size = std::numeric_limits<int>::max();
  std::vector<char> best_keep(n, 0), cur(n, 0);
  for (double cap : caps) {
    bool feasible = true;
    int size = 0;
    double actual_max = 0.0;
    std::fill(cur.begin(), cur.end(), 0);
    // breadth-first walk from the roots
    std::deque<int> q(tree.roots().begin(), tree.roots().end());
    while (!q.empty() && feasible) {
      const int i = q.front();
      q.pop_front();
      ++size;
      const TreeNode& nd = tree.node(i);
      if (nd.error <= cap) {
        actual_max = std::max(actual_max, nd.error);
        continue;  // prune here
      }
      if (nd.is_leaf()) {
        feasible = false;
        break;
      }
      cur[i] = 1;
      q.push_back(nd.child[0]);
      q.push_back(nd.child[1]);
    }
    if (!feasible) continue;
    const double c = actual_max + lambda * size;
    if (c < best_cost || (c == best_cost && size < best_size)) {
      best_cost = c;
      best_size = size;
      best_keep = cur;
    }
  }
  return materialize_pruned(tree, best_keep);
}

namespace {

void append_code(BitStream& bs, unsigned code) {
  const size_t byte = bs.bit_count / 8;
  if (byte >= bs.bytes.size()) bs.bytes.push_back(0);
  const int shift = 6 - static_cast<int>(bs.bit_count % 8);
  bs.bytes[byte] |= static_cast<std::uint8_t>(code << shift);
  bs.bit_count += 2;
}

unsigned read_code(const BitStream& bs, size_t bit_pos) {
  const size_t byte = bit_pos / 8;
  if (byte >= bs.bytes.size())
    throw std::runtime_error("bitstream truncated at bit " + std::to_string(bit_pos));
  const int shift = 6 - static_cast<int>(bit_pos % 8);
  return (bs.bytes[byte] >> shift) & 0x3u;
}

}  // namespace

BitStream encode(const BisectionTree& tree) {
  BitStream bs;
  bs.n0 = tree.root_count();
  std::deque<int> queue(tree.roots().begin(), tree.roots().end());
  while (!queue.empty()) {
    const int id = queue.front();
    queue.pop_front();
    const TreeNode& n = tree.node(id);
    if (n.is_leaf()) {
      append_code(bs, 0u);
    } else {
      append_code(bs, 1u + static_cast<unsigned>(edge_index(n.edge)));
      queue.push_back(n.child[0]);
      queue.push_back(n.child[1]);
    }
  }
  return bs;
}

BisectionTree decode(const BitStream& bits, std::span<const Triangle> d0) {
  if (bits.n0 != static_cast<int>(d0.size()))
    throw std::runtime_error("decode: N_0 mismatch with provided roots");
  BisectionTree tree;
  std::deque<int> queue;
  for (const Triangle& t : d0) {
    Triangle root = ensure_newest_vertex(t);
    root.level = 0;
    queue.push_back(tree.add_root(root, ErrorRecord{}));
  }
  size_t pos = 0;
  const size_t limit = bits.bit_count > 0 ? bits.bit_count : bits.bytes.size() * 8;
  while (!queue.empty()) {
    if (pos + 2 > limit)
      throw std::runtime_error("bitstream truncated at bit " + std::to_string(pos));
    const unsigned code = read_code(bits, pos);
    pos += 2;
    const int id = queue.front();
    queue.pop_front();
    if (code == 0) continue;
    SplitResult s;
    s.edge = static_cast<EdgeChoice>(code - 1);
    s.kind = SplitKind::Greedy;  // kinds are not part of the encoding
    auto [t1, t2] = bisect(tree.node(id).tri, s.edge);
    s.t1 = t1;
    s.t2 = t2;
    tree.split_node(id, std::move(s));
    queue.push_back(tree.node(id).child[0]);
    queue.push_back(tree.node(id).child[1]);
  }
  // Allow byte padding only.
  if (bits.bytes.size() > (pos + 7) / 8)
    throw std::runtime_error("bitstream has trailing data after bit " +
                             std::to_string(pos));
  return tree;
}

void write_bitstream(const std::string& path, const BitStream& bits) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("bitstream: cannot write " + path);
  out.write("ATB1", 4);
  const std::uint32_t n0 = static_cast<std::uint32_t>(bits.n0);
  const unsigned char hdr[4] = {
      static_cast<unsigned char>((n0 >> 24) & 0xff),
      static_cast<unsigned char>((n0 >> 16) & 0xff),
      static_cast<unsigned char>((n0 >> 8) & 0xff),
      static_cast<unsigned char>(n0 & 0xff)};
  out.write(reinterpret_cast<const char*>(hdr), 4);
  out.write(reinterpret_cast<const char*>(bits.bytes.data()),
            static_cast<std::streamsize>(bits.bytes.size()));
}

BitStream read_bitstream(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("bitstream: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::string(magic, 4) != "ATB1")
    throw std::runtime_error("bitstream: bad magic");
  unsigned char hdr[4];
  in.read(reinterpret_cast<char*>(hdr), 4);
  if (in.gcount() != 4) throw std::runtime_error("bitstream: truncated header");
  BitStream bs;
  bs.n0 = (hdr[0] << 24) | (hdr[1] << 16) | (hdr[2] << 8) | hdr[3];
  char c;
  while (in.get(c)) bs.bytes.push_back(static_cast<std::uint8_t>(c));
  bs.bit_count = bs.bytes.size() * 8;
  return bs;
}

void write_mesh_text(std::ostream& out, const BisectionTree& tree) {
  out.precision(17);
  out << "ATMESH1 " << tree.root_count() << " " << tree.node_count() << "\n";
  for (int i = 0; i < tree.node_count(); ++i) {
    const TreeNode& n = tree.node(i);
    out << i << " " << n.parent;
    for (int k = 0; k < 3; ++k) out << " " << n.tri.v[k].x << " " << n.tri.v[k].y;
    if (n.is_leaf())
      out << " - -\n";
    else
      out << " " << split_kind_char(n.kind) << " "
          << static_cast<char>('a' + edge_index(n.edge)) << "\n";
  }
}

BisectionTree read_mesh_text(std::istream& in) {
  std::string magic;
  int n0 = 0, count = 0;
  if (!(in >> magic >> n0 >> count) || magic != "ATMESH1")
    throw std::runtime_error("mesh text: bad header");
  BisectionTree tree;
  struct Pending {
    int parent;
    char kind, edge;
  };
  std::vector<Pending> meta(count);
  for (int i = 0; i < count; ++i) {
    int id = 0, parent = 0;
    Triangle t;
    char kind, edge;
    if (!(in >> id >> parent >> t.v[0].x >> t.v[0].y >> t.v[1].x >> t.v[1].y >>
          t.v[2].x >> t.v[2].y >> kind >> edge) ||
        id != i)
      throw std::runtime_error("mesh text: malformed node line " + std::to_string(i));
    meta[i] = {parent, kind, edge};
    if (parent < 0) {
      Triangle root = ensure_newest_vertex(t);
      root.level = 0;
      tree.add_root(root, ErrorRecord{});
    }
  }
  if (tree.root_count() != n0) throw std::runtime_error("mesh text: N_0 mismatch");
  // Ids were assigned chronologically: a split's children got the next two
  // ids. Replaying the splits ordered by their first child id therefore
  // reproduces the original numbering exactly; the vertex data is regenerated
  // by bisect(), which reproduces the stored coordinates bit for bit.
  std::vector<std::array<int, 2>> kids(count, {-1, -1});
  for (int i = 0; i < count; ++i) {
    const int p = meta[i].parent;
    if (p < 0) continue;
    if (p >= i) throw std::runtime_error("mesh text: child precedes parent");
    if (kids[p][0] < 0)
      kids[p][0] = i;
    else
      kids[p][1] = i;
  }
  std::vector<int> order;
  for (int i = 0; i < count; ++i)
    if (meta[i].kind != '-') {
      if (kids[i][1] < 0) throw std::runtime_error("mesh text: orphan split");
      order.push_back(i);
    }
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return kids[a][0] < kids[b][0]; });
  for (int i : order) {
    SplitResult s;
    s.edge = static_cast<EdgeChoice>(meta[i].edge - 'a');
    s.kind = meta[i].kind == 'B' ? SplitKind::Greedy : SplitKind::Newest;
    auto [t1, t2] = bisect(tree.node(i).tri, s.edge);
    s.t1 = t1;
    s.t2 = t2;
    if (tree.node(i).child[0] != -1 || kids[i][0] != tree.node_count())
      throw std::runtime_error("mesh text: ids are not in split order");
    tree.split_node(i, std::move(s));
  }
  return tree;
}

BisectionTree from_hierarchy(const Hierarchy& h) {
  BisectionTree tree;
  std::vector<int> map(h.nodes.size(), -1);
  for (size_t i = 0; i < h.nodes.size(); ++i) {
    const HierarchyNode& n = h.nodes[i];
    if (n.parent < 0) {
      ErrorRecord rec;
      rec.error = n.error;
      map[i] = tree.add_root(n.tri, std::move(rec));
    }
  }
  for (size_t i = 0; i < h.nodes.size(); ++i) {
    const HierarchyNode& n = h.nodes[i];
    if (n.child[0] < 0) continue;
    SplitResult s;
    s.t1 = h.nodes[n.child[0]].tri;
    s.t2 = h.nodes[n.child[1]].tri;
    s.edge = n.edge;
    s.kind = n.kind;
    s.rec1.error = h.nodes[n.child[0]].error;
    s.rec2.error = h.nodes[n.child[1]].error;
    tree.split_node(map[i], std::move(s));
    map[n.child[0]] = tree.node(map[i]).child[0];
    map[n.child[1]] = tree.node(map[i]).child[1];
  }
  return tree;
}

}  // namespace anitri
