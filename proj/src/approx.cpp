#include "anitri/approx.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace anitri {

namespace {

void basis_at(const LocalPolynomial& shape, Point2 p, double* out) {
  const double X = (p.x - shape.center.x) / shape.scale;
  const double Y = (p.y - shape.center.y) / shape.scale;
  out[0] = 1.0;
  if (shape.degree >= 1) {
    out[1] = X;
    out[2] = Y;
  }
  if (shape.degree >= 2) {
    out[3] = X * X;
    out[4] = X * Y;
    out[5] = Y * Y;
  }
}

LocalPolynomial make_shape(const Triangle& t, int degree) {
  LocalPolynomial s;
  s.degree = degree;
  s.center = barycenter(t);
  s.scale = diameter(t);
  if (s.scale <= 0.0) s.scale = 1.0;
  s.coeffs.assign(poly_dim(degree), 0.0);
  return s;
}

double lp_power(double r, double p) {
  if (p == 2.0) return r * r;
  if (p == 1.0) return std::abs(r);
  return std::pow(std::abs(r), p);
}

// Quadrature nodes of T clipped along the source's breaklines, with weights
// already scaled by piece area (so integral = sum w*f).
struct NodeSet {
  std::vector<Point2> pts;
  std::vector<double> w;
};

void collect_nodes(const Triangle& t, int order, std::span<const double> breaks,
                   NodeSet& out) {
  const TriRule& rule = tri_rule(order);
  auto add_tri = [&](const Triangle& piece) {
    const double a = area(piece);
    if (a == 0.0) return;
    for (const auto& n : rule.nodes) {
      out.pts.push_back(bary_point(piece, n.b0, n.b1, n.b2));
      out.w.push_back(n.w * a);
    }
  };
  double xmin = t.v[0].x, xmax = t.v[0].x;
  for (int k = 1; k < 3; ++k) {
    xmin = std::min(xmin, t.v[k].x);
    xmax = std::max(xmax, t.v[k].x);
  }
  std::vector<double> cuts;
  for (double c : breaks)
    if (c > xmin && c < xmax) cuts.push_back(c);
  if (cuts.empty()) {
    add_tri(t);
    return;
  }
  std::sort(cuts.begin(), cuts.end());
  std::vector<Point2> rest = {t.v[0], t.v[1], t.v[2]};
  auto clip = [](const std::vector<Point2>& poly, double c, double sign) {
    std::vector<Point2> res;
    const size_t n = poly.size();
    for (size_t i = 0; i < n; ++i) {
      const Point2 a = poly[i];
      const Point2 b = poly[(i + 1) % n];
      const double da = sign * (a.x - c), db = sign * (b.x - c);
      if (da <= 0.0) res.push_back(a);
      if ((da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0)) {
        const double s = da / (da - db);
        res.push_back({a.x + s * (b.x - a.x), a.y + s * (b.y - a.y)});
      }
    }
    return res;
  };
  auto add_poly = [&](const std::vector<Point2>& poly) {
    for (size_t k = 1; k + 1 < poly.size(); ++k)
      add_tri(Triangle{{poly[0], poly[k], poly[k + 1]}, -1, t.level});
  };
  for (double c : cuts) {
    add_poly(clip(rest, c, +1.0));
    rest = clip(rest, c, -1.0);
  }
  add_poly(rest);
}

}  // namespace

double LocalPolynomial::eval(Point2 p) const {
  double b[6];
  basis_at(*this, p, b);
  double acc = 0.0;
  for (size_t k = 0; k < coeffs.size(); ++k) acc += coeffs[k] * b[k];
  return acc;
}

LocalPolynomial project(const FunctionSource& f, const Triangle& t,
                        const ApproxConfig& cfg) {
  if (f.kind() == SourceKind::PixelGrid) {
    const auto& grid = static_cast<const PixelGridSource&>(f);
    const PixelSet px = pixels_in(grid, t);
    return project_pixels(grid, t, px, cfg);
  }
  LocalPolynomial fit = make_shape(t, cfg.degree);
  const int dim = poly_dim(cfg.degree);
  NodeSet ns;
  collect_nodes(t, cfg.quadrature_order, f.x_breaklines(), ns);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
  double b[6];
  for (size_t k = 0; k < ns.pts.size(); ++k) {
    basis_at(fit, ns.pts[k], b);
    const double fv = f.eval(ns.pts[k]);
    for (int i = 0; i < dim; ++i) {
      rhs(i) += ns.w[k] * fv * b[i];
      for (int j = i; j < dim; ++j) G(i, j) += ns.w[k] * b[i] * b[j];
    }
  }
  G = G.selfadjointView<Eigen::Upper>();
  Eigen::VectorXd c = G.completeOrthogonalDecomposition().solve(rhs);
  for (int i = 0; i < dim; ++i) fit.coeffs[i] = c(i);
  return fit;
}

LocalPolynomial project_pixels(const PixelGridSource& grid, const Triangle& t,
                               std::span<const PixelIndex> pixels,
                               const ApproxConfig& cfg) {
  LocalPolynomial fit = make_shape(t, cfg.degree);
  const int dim = poly_dim(cfg.degree);
  const int n = static_cast<int>(pixels.size());
  if (n == 0) return fit;
  Eigen::MatrixXd A(n, dim);
  Eigen::VectorXd y(n);
  double b[6];
  for (int r = 0; r < n; ++r) {
    basis_at(fit, grid.center(pixels[r]), b);
    for (int j = 0; j < dim; ++j) A(r, j) = b[j];
    y(r) = grid.value(pixels[r]);
  }
  Eigen::VectorXd c = A.completeOrthogonalDecomposition().solve(y);
  for (int i = 0; i < dim; ++i) fit.coeffs[i] = c(i);
  return fit;
}

LocalPolynomial interpolate(const FunctionSource& f, const Triangle& t,
                            const ApproxConfig& cfg) {
  LocalPolynomial fit = make_shape(t, cfg.degree);
  const int dim = poly_dim(cfg.degree);
  std::vector<Point2> nodes;
  if (cfg.degree == 0) {
    nodes.push_back(barycenter(t));
  } else {
    for (int i = 0; i < 3; ++i) nodes.push_back(t.v[i]);
    if (cfg.degree == 2)
      for (int i = 0; i < 3; ++i) {
        const Point2 a = t.v[i], b2 = t.v[(i + 1) % 3];
        nodes.push_back({(a.x + b2.x) / 2.0, (a.y + b2.y) / 2.0});
      }
  }
  const bool pixel = (f.kind() == SourceKind::PixelGrid);
  const auto* grid = pixel ? static_cast<const PixelGridSource*>(&f) : nullptr;
  Eigen::MatrixXd V(dim, dim);
  Eigen::VectorXd y(dim);
  double b[6];
  for (int r = 0; r < dim; ++r) {
    basis_at(fit, nodes[r], b);
    for (int j = 0; j < dim; ++j) V(r, j) = b[j];
    y(r) = pixel ? grid->sample_nearest(nodes[r]) : f.eval(nodes[r]);
  }
  Eigen::VectorXd c = V.completeOrthogonalDecomposition().solve(y);
  for (int i = 0; i < dim; ++i) fit.coeffs[i] = c(i);
  return fit;
}

double residual_norm(const FunctionSource& f, const Triangle& t,
                     const LocalPolynomial& fit, const ApproxConfig& cfg) {
  if (f.kind() == SourceKind::PixelGrid) {
    const auto& grid = static_cast<const PixelGridSource&>(f);
    const PixelSet px = pixels_in(grid, t);
    double acc = 0.0;
    for (PixelIndex i : px) {
      const double r = grid.value(i) - fit.eval(grid.center(i));
      if (cfg.p == kInfinity)
        acc = std::max(acc, std::abs(r));
      else
        acc += lp_power(r, cfg.p);
    }
    return cfg.p == kInfinity ? acc : std::pow(acc, 1.0 / cfg.p);
  }
  NodeSet ns;
  collect_nodes(t, cfg.quadrature_order, f.x_breaklines(), ns);
  if (cfg.p == kInfinity) {
    double m = 0.0;
    auto probe = [&](Point2 p) { m = std::max(m, std::abs(f.eval(p) - fit.eval(p))); };
    for (const auto& p : ns.pts) probe(p);
    for (int i = 0; i < 3; ++i) {
      probe(t.v[i]);
      const Point2 a = t.v[i], b = t.v[(i + 1) % 3];
      probe({(a.x + b.x) / 2.0, (a.y + b.y) / 2.0});
    }
    return m;
  }
  double acc = 0.0;
  for (size_t k = 0; k < ns.pts.size(); ++k)
    acc += ns.w[k] * lp_power(f.eval(ns.pts[k]) - fit.eval(ns.pts[k]), cfg.p);
  return std::pow(std::max(acc, 0.0), 1.0 / cfg.p);
}

ErrorRecord local_error(const FunctionSource& f, const Triangle& t,
                        const ApproxConfig& cfg) {
  if (f.kind() == SourceKind::PixelGrid) {
    const auto& grid = static_cast<const PixelGridSource&>(f);
    const PixelSet px = pixels_in(grid, t);
    return local_error_pixels(grid, t, px, cfg);
  }
  ErrorRecord rec;
  rec.fit = (cfg.op == LocalOperator::Projection) ? project(f, t, cfg)
                                                  : interpolate(f, t, cfg);
  rec.error = residual_norm(f, t, rec.fit, cfg);
  return rec;
}

ErrorRecord local_error_pixels(const PixelGridSource& grid, const Triangle& t,
                               std::span<const PixelIndex> pixels,
                               const ApproxConfig& cfg) {
  ErrorRecord rec;
  rec.fit = (cfg.op == LocalOperator::Projection)
                ? project_pixels(grid, t, pixels, cfg)
                : interpolate(grid, t, cfg);
  if (static_cast<int>(pixels.size()) < poly_dim(cfg.degree)) {
    // Too few samples to constrain the fit; the triangle cannot reduce the
    // discrete error, so it never asks for refinement.
    rec.underdetermined = true;
    rec.error = 0.0;
    return rec;
  }
  double acc = 0.0, vmax = 0.0;
  for (PixelIndex i : pixels) {
    const double r = grid.value(i) - rec.fit.eval(grid.center(i));
    vmax = std::max(vmax, std::abs(grid.value(i)));
    if (cfg.p == kInfinity)
      acc = std::max(acc, std::abs(r));
    else
      acc += lp_power(r, cfg.p);
  }
  rec.error = cfg.p == kInfinity ? acc : std::pow(acc, 1.0 / cfg.p);
  // Snap rounding-level residuals to an exact zero so that rasters the fit
  // matches exactly (constant images, tiny sets) stop asking for refinement.
  if (rec.error <= 1.5e-14 * std::sqrt(double(pixels.size())) * vmax)
    rec.error = 0.0;
  return rec;
}

}  // namespace anitri
