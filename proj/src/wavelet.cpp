#include "anitri/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace anitri {

namespace {

// Linear functions on a triangle by their vertex values. The L^2(T) inner
// product of two such functions is |T|/12 * ((sum u)(sum v) + sum u_i v_i).
using VertexValues = std::array<double, 3>;

double inner(double tri_area, const VertexValues& u, const VertexValues& v) {
  const double su = u[0] + u[1] + u[2];
  const double sv = v[0] + v[1] + v[2];
  return tri_area / 12.0 * (su * sv + u[0] * v[0] + u[1] * v[1] + u[2] * v[2]);
}

VertexValues scaling_values(double tri_area, int i) {
  const double s = std::sqrt(3.0) / std::sqrt(tri_area);
  VertexValues v{-s, -s, -s};
  v[i] = s;
  return v;
}

LocalPolynomial linear_from_vertex_values(const Triangle& t, const VertexValues& vals) {
  LocalPolynomial p;
  p.degree = 1;
  p.center = barycenter(t);
  p.scale = diameter(t);
  p.coeffs.assign(3, 0.0);
  // Solve for [c0, c1, c2] with c0 + c1 X + c2 Y matching the vertex values.
  Eigen::Matrix3d A;
  Eigen::Vector3d b;
  for (int k = 0; k < 3; ++k) {
    A(k, 0) = 1.0;
    A(k, 1) = (t.v[k].x - p.center.x) / p.scale;
    A(k, 2) = (t.v[k].y - p.center.y) / p.scale;
    b(k) = vals[k];
  }
  Eigen::Vector3d c = A.partialPivLu().solve(b);
  for (int k = 0; k < 3; ++k) p.coeffs[k] = c(k);
  return p;
}

// Child labeling per the two-scale convention, derived from the bisection
// record: index of the created midpoint (newest vertex), of the shared apex,
// and of the remaining split-edge endpoint.
struct ChildLabels {
  int apex, mid, end;
};

ChildLabels child_labels(const Triangle& parent, EdgeChoice edge, const Triangle& child) {
  const Point2 apex = parent.v[apex_index(edge)];
  ChildLabels lab{-1, child.newest_vertex_index, -1};
  if (lab.mid < 0) throw std::logic_error("wavelet: child without newest vertex");
  for (int k = 0; k < 3; ++k) {
    if (k == lab.mid) continue;
    if (child.v[k] == apex)
      lab.apex = k;
    else
      lab.end = k;
  }
  if (lab.apex < 0 || lab.end < 0)
    throw std::logic_error("wavelet: children do not share the bisection apex");
  return lab;
}

// Values of the parent scaling function phi_p^i at a child's vertices.
VertexValues parent_values_on_child(const Triangle& parent, EdgeChoice edge,
                                    const Triangle& child, const ChildLabels& lab,
                                    int i) {
  const double s = std::sqrt(3.0) / std::sqrt(area(parent));
  auto value_at_parent_vertex = [&](int pv) { return pv == i ? s : -s; };
  // Which parent vertex the child's apex/endpoint correspond to:
  const int k = edge_index(edge);
  const int apex_pv = apex_index(edge);
  int end_pv = -1;
  for (int cand : {k, (k + 1) % 3})
    if (parent.v[cand] == child.v[lab.end]) end_pv = cand;
  if (end_pv < 0) throw std::logic_error("wavelet: endpoint does not match parent");
  const int other_pv = (end_pv == k) ? (k + 1) % 3 : k;
  VertexValues out{};
  out[lab.apex] = value_at_parent_vertex(apex_pv);
  out[lab.end] = value_at_parent_vertex(end_pv);
  out[lab.mid] =
      0.5 * (value_at_parent_vertex(end_pv) + value_at_parent_vertex(other_pv));
  return out;
}

struct SplitFrame {
  const Triangle *parent, *c1, *c2;
  EdgeChoice edge;
  ChildLabels lab1, lab2;
};

SplitFrame frame_of(const BisectionTree& tree, int node) {
  const TreeNode& n = tree.node(node);
  if (n.is_leaf()) throw std::invalid_argument("wavelet: node is a leaf");
  const TreeNode& a = tree.node(n.child[0]);
  const TreeNode& b = tree.node(n.child[1]);
  SplitFrame f{&n.tri, &a.tri, &b.tri, n.edge,
               child_labels(n.tri, n.edge, a.tri),
               child_labels(n.tri, n.edge, b.tri)};
  return f;
}

// Rows 3..5 of the two-scale matrix: wavelet combinations of the child
// scaling functions. Shared-vertex labels: index 1 is the created midpoint,
// index 2 the bisection apex, index 3 the remaining split-edge endpoint.
// (Stated the other way around in places, but only this assignment makes the
// three combinations orthogonal to P_1 of the parent: the midpoint value of a
// linear function is the mean of the endpoint values, which is exactly what
// cancels the psi^3 pairing.)
Eigen::Matrix<double, 3, 6> wavelet_rows(const SplitFrame& f) {
  Eigen::Matrix<double, 3, 6> W = Eigen::Matrix<double, 3, 6>::Zero();
  const double r2 = 1.0 / std::sqrt(2.0);
  auto c1 = [&](int stored) { return stored; };
  auto c2 = [&](int stored) { return 3 + stored; };
  // psi^1 = (phi'_3 - phi''_3) / sqrt(2)
  W(0, c1(f.lab1.end)) = r2;
  W(0, c2(f.lab2.end)) = -r2;
  // psi^2 = (phi'_1 - phi'_2 - phi''_1 + phi''_2) / 2
  W(1, c1(f.lab1.mid)) = 0.5;
  W(1, c1(f.lab1.apex)) = -0.5;
  W(1, c2(f.lab2.mid)) = -0.5;
  W(1, c2(f.lab2.apex)) = 0.5;
  // psi^3 = (phi'_1 - phi'_3 + phi''_1 - phi''_3) / 2
  W(2, c1(f.lab1.mid)) = 0.5;
  W(2, c1(f.lab1.end)) = -0.5;
  W(2, c2(f.lab2.mid)) = 0.5;
  W(2, c2(f.lab2.end)) = -0.5;
  return W;
}

}  // namespace

ScalingBasis scaling_basis(const Triangle& t) {
  if (is_degenerate(t)) throw std::invalid_argument("scaling_basis: degenerate triangle");
  ScalingBasis b;
  const double a = area(t);
  for (int i = 0; i < 3; ++i)
    b.phi[i] = linear_from_vertex_values(t, scaling_values(a, i));
  return b;
}

Eigen::Matrix<double, 6, 6> two_scale_matrix(const BisectionTree& tree, int node) {
  const SplitFrame f = frame_of(tree, node);
  Eigen::Matrix<double, 6, 6> M = Eigen::Matrix<double, 6, 6>::Zero();
  const double child_area = area(*f.c1);
  for (int i = 0; i < 3; ++i) {
    const VertexValues on1 = parent_values_on_child(*f.parent, f.edge, *f.c1, f.lab1, i);
    const VertexValues on2 = parent_values_on_child(*f.parent, f.edge, *f.c2, f.lab2, i);
    for (int j = 0; j < 3; ++j) {
      M(i, j) = inner(child_area, on1, scaling_values(child_area, j));
      M(i, 3 + j) = inner(area(*f.c2), on2, scaling_values(area(*f.c2), j));
    }
  }
  M.block<3, 6>(3, 0) = wavelet_rows(f);
  return M;
}

WaveletTriple wavelet_triple(const BisectionTree& tree, int node) {
  const SplitFrame f = frame_of(tree, node);
  const Eigen::Matrix<double, 3, 6> W = wavelet_rows(f);
  WaveletTriple out;
  const double a1 = area(*f.c1), a2 = area(*f.c2);
  for (int w = 0; w < 3; ++w) {
    VertexValues v1{}, v2{};
    for (int j = 0; j < 3; ++j) {
      const VertexValues s1 = scaling_values(a1, j);
      const VertexValues s2 = scaling_values(a2, j);
      for (int k = 0; k < 3; ++k) {
        v1[k] += W(w, j) * s1[k];
        v2[k] += W(w, 3 + j) * s2[k];
      }
    }
    out.psi[w].on_first = linear_from_vertex_values(*f.c1, v1);
    out.psi[w].on_second = linear_from_vertex_values(*f.c2, v2);
  }
  return out;
}

namespace {

std::array<double, 3> leaf_scaling_coeffs(const FunctionSource& f, const Triangle& t,
                                          const ApproxConfig& acfg) {
  const double a = area(t);
  std::array<VertexValues, 3> phis{scaling_values(a, 0), scaling_values(a, 1),
                                   scaling_values(a, 2)};
  std::array<LocalPolynomial, 3> polys;
  for (int i = 0; i < 3; ++i) polys[i] = linear_from_vertex_values(t, phis[i]);
  const bool pixel = f.kind() == SourceKind::PixelGrid;
  const auto* grid = pixel ? static_cast<const PixelGridSource*>(&f) : nullptr;
  std::array<double, 3> out{};
  const auto breaks = f.x_breaklines();
  for (int i = 0; i < 3; ++i)
    out[i] = integrate_clipped(t, acfg.quadrature_order, breaks, [&](Point2 p) {
      const double fv = pixel ? grid->sample_nearest(p) : f.eval(p);
      return fv * polys[i].eval(p);
    });
  return out;
}

}  // namespace

CoeffMap decompose(const FunctionSource& f, const BisectionTree& tree,
                   const ApproxConfig& acfg) {
  const int n = tree.node_count();
  std::vector<std::array<double, 3>> scal(n, {0.0, 0.0, 0.0});
  CoeffMap coeffs;
  for (int i = n - 1; i >= 0; --i) {  // children before parents
    const TreeNode& nd = tree.node(i);
    if (nd.is_leaf()) {
      scal[i] = leaf_scaling_coeffs(f, nd.tri, acfg);
      continue;
    }
    const Eigen::Matrix<double, 6, 6> M = two_scale_matrix(tree, i);
    Eigen::Matrix<double, 6, 1> c;
    for (int j = 0; j < 3; ++j) {
      c(j) = scal[nd.child[0]][j];
      c(3 + j) = scal[nd.child[1]][j];
    }
    const Eigen::Matrix<double, 6, 1> cd = M * c;
    for (int j = 0; j < 3; ++j) scal[i][j] = cd(j);
    for (int j = 0; j < 3; ++j) coeffs[{i, 3 + j}] = cd(3 + j);
  }
  for (int r : tree.roots())
    for (int j = 0; j < 3; ++j) coeffs[{r, j}] = scal[r][j];
  return coeffs;
}

CoeffMap decompose(const FunctionSource& f, const Hierarchy& h,
                   const ApproxConfig& acfg) {
  return decompose(f, from_hierarchy(h), acfg);
}

CoeffMap threshold(const CoeffMap& coeffs, double eps, ThresholdMode mode,
                   const BisectionTree& tree, double p) {
  if (eps < 0.0) throw std::invalid_argument("threshold: eps must be >= 0");
  CoeffMap out;
  std::map<int, std::array<double, 3>> norms;  // per node, lazily for p != 2
  for (const auto& [key, value] : coeffs) {
    if (key.index < 3) {  // root scaling terms are always kept
      out[key] = value;
      continue;
    }
    double weight = 1.0;
    if (mode == ThresholdMode::NormWeighted && p != 2.0) {
      auto it = norms.find(key.node);
      if (it == norms.end()) {
        const WaveletTriple wt = wavelet_triple(tree, key.node);
        const TreeNode& nd = tree.node(key.node);
        std::array<double, 3> ns{};
        for (int w = 0; w < 3; ++w) {
          const auto& piece = wt.psi[w];
          const Triangle& t1 = tree.node(nd.child[0]).tri;
          const Triangle& t2 = tree.node(nd.child[1]).tri;
          if (p == kInfinity) {
            double m = 0.0;
            for (int k = 0; k < 3; ++k) {
              m = std::max(m, std::abs(piece.on_first.eval(t1.v[k])));
              m = std::max(m, std::abs(piece.on_second.eval(t2.v[k])));
            }
            ns[w] = m;
          } else {
            const double i1 = integrate(t1, 14, [&](Point2 q) {
              return std::pow(std::abs(piece.on_first.eval(q)), p);
            });
            const double i2 = integrate(t2, 14, [&](Point2 q) {
              return std::pow(std::abs(piece.on_second.eval(q)), p);
            });
            ns[w] = std::pow(i1 + i2, 1.0 / p);
          }
        }
        it = norms.emplace(key.node, ns).first;
      }
      weight = it->second[key.index - 3];
    }
    if (std::abs(value) * weight >= eps) out[key] = value;
  }
  return out;
}

const LocalPolynomial* PiecewiseFit::find(int leaf) const {
  auto it = std::lower_bound(leaf_polys.begin(), leaf_polys.end(), leaf,
                             [](const auto& a, int b) { return a.first < b; });
  if (it == leaf_polys.end() || it->first != leaf) return nullptr;
  return &it->second;
}

PiecewiseFit reconstruct(const CoeffMap& coeffs, const BisectionTree& tree) {
  const int n = tree.node_count();
  for (const auto& [key, value] : coeffs) {
    (void)value;
    if (key.node < 0 || key.node >= n || key.index < 0 || key.index > 5)
      throw std::out_of_range("reconstruct: coefficient key outside tree");
    const bool is_root = tree.node(key.node).parent < 0;
    if (key.index < 3 && !is_root)
      throw std::out_of_range("reconstruct: scaling coefficient on a non-root");
    if (key.index >= 3 && tree.node(key.node).is_leaf())
      throw std::out_of_range("reconstruct: wavelet coefficient on a leaf");
  }
  std::vector<std::array<double, 3>> scal(n, {0.0, 0.0, 0.0});
  auto get = [&](int node, int idx) {
    auto it = coeffs.find({node, idx});
    return it == coeffs.end() ? 0.0 : it->second;
  };
  for (int r : tree.roots())
    for (int j = 0; j < 3; ++j) scal[r][j] = get(r, j);
  for (int i = 0; i < n; ++i) {  // parents before children
    const TreeNode& nd = tree.node(i);
    if (nd.is_leaf()) continue;
    Eigen::Matrix<double, 6, 1> cd;
    for (int j = 0; j < 3; ++j) {
      cd(j) = scal[i][j];
      cd(3 + j) = get(i, 3 + j);
    }
    const Eigen::Matrix<double, 6, 6> M = two_scale_matrix(tree, i);
    const Eigen::Matrix<double, 6, 1> c = M.transpose() * cd;
    for (int j = 0; j < 3; ++j) {
      scal[nd.child[0]][j] = c(j);
      scal[nd.child[1]][j] = c(3 + j);
    }
  }
  PiecewiseFit fit;
  for (int i = 0; i < n; ++i) {
    const TreeNode& nd = tree.node(i);
    if (!nd.is_leaf()) continue;
    const double a = area(nd.tri);
    VertexValues vals{};
    for (int j = 0; j < 3; ++j) {
      const VertexValues s = scaling_values(a, j);
      for (int k = 0; k < 3; ++k) vals[k] += scal[i][j] * s[k];
    }
    fit.leaf_polys.emplace_back(i, linear_from_vertex_values(nd.tri, vals));
  }
  return fit;
}

double l2_norm(const BisectionTree& tree, const PiecewiseFit& fit) {
  double acc = 0.0;
  for (const auto& [leaf, poly] : fit.leaf_polys) {
    const Triangle& t = tree.node(leaf).tri;
    acc += integrate(t, 4, [&](Point2 p) {
      const double v = poly.eval(p);
      return v * v;
    });
  }
  return std::sqrt(acc);
}

double l2_diff(const BisectionTree& tree, const PiecewiseFit& a, const PiecewiseFit& b) {
  double acc = 0.0;
  for (const auto& [leaf, poly] : a.leaf_polys) {
    const LocalPolynomial* other = b.find(leaf);
    const Triangle& t = tree.node(leaf).tri;
    acc += integrate(t, 4, [&](Point2 p) {
      const double v = poly.eval(p) - (other ? other->eval(p) : 0.0);
      return v * v;
    });
  }
  return std::sqrt(acc);
}

void write_coeffs(std::ostream& out, const CoeffMap& coeffs) {
  out.precision(17);
  for (const auto& [key, value] : coeffs)
    out << key.node << " " << key.index << " " << value << "\n";
}

CoeffMap read_coeffs(std::istream& in) {
  CoeffMap out;
  int node = 0, index = 0;
  double value = 0.0;
  while (in >> node >> index >> value) out[{node, index}] = value;
  return out;
}

}  // namespace anitri
