#include "anitri/experiments.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "anitri/csv.hpp"
#include "anitri/quadrature.hpp"

namespace anitri {

std::array<Triangle, 2> split_square(const Rect& r) {
  const Point2 a{r.x0, r.y0}, b{r.x1, r.y0}, c{r.x1, r.y1}, d{r.x0, r.y1};
  Triangle t1{{a, b, c}, -1, 0};
  Triangle t2{{a, c, d}, -1, 0};
  return {ensure_newest_vertex(t1), ensure_newest_vertex(t2)};
}

Triangle euclidean_equilateral() {
  return Triangle{{Point2{0, 0}, Point2{1, 0}, Point2{0.5, std::sqrt(3.0) / 2.0}}, -1, 0};
}

namespace {

const double kRhoBar = 4.0 * std::sqrt(3.0);

std::filesystem::path ensure_outdir(const std::string& outdir) {
  std::filesystem::path p(outdir);
  std::filesystem::create_directories(p);
  return p;
}

struct TierCounts {
  int white = 0, grey = 0, dark = 0, rho_ok = 0;
};

TierCounts classify(const std::vector<int>& ids, const Hierarchy& h,
                    const QuadraticForm& q, bool indefinite) {
  TierCounts c;
  const QuadraticForm aq = abs_form(q);
  for (int id : ids) {
    const Triangle& t = h.nodes[id].tri;
    const double r = rho_q(t, q);
    if (r <= kRhoBar) ++c.rho_ok;
    if (!indefinite) {
      (r <= kRhoBar ? c.white : c.grey)++;
      continue;
    }
    const double ra = rho_q(t, aq);
    if (ra <= kRhoBar)
      ++c.white;
    else if (r <= kRhoBar)
      ++c.grey;
    else
      ++c.dark;
  }
  return c;
}

}  // namespace

QuadraticDemoResult run_quadratic_demo(const QuadraticForm& q, int levels,
                                       const std::string& outdir,
                                       const RefineConfig& rcfg,
                                       const ApproxConfig& acfg) {
  if (q.det() == 0.0)
    throw std::invalid_argument("quadratic demo: singular form");
  const auto dir = ensure_outdir(outdir);
  const Triangle root = euclidean_equilateral();
  const Rect dom{-0.05, -0.05, 1.05, 0.95};
  auto f = make_quadratic(q, {-1, -1, 2, 2});
  const Hierarchy h = build_hierarchy(*f, std::span(&root, 1), levels, rcfg, acfg);
  const bool indefinite = q.det() < 0.0;

  CsvWriter csv((dir / "stats.csv").string());
  csv.row({"level", "triangles", "frac_white", "frac_grey", "frac_dark",
           "frac_rho_ok"});
  TierCounts last;
  for (int j = 0; j <= levels; ++j) {
    const TierCounts c = classify(h.levels[j], h, q, indefinite);
    const double n = static_cast<double>(h.levels[j].size());
    csv.row({CsvWriter::cell(j), CsvWriter::cell(static_cast<int>(n)),
             CsvWriter::cell(c.white / n), CsvWriter::cell(c.grey / n),
             CsvWriter::cell(c.dark / n), CsvWriter::cell(c.rho_ok / n)});
    last = c;
  }

  std::vector<SvgPolygon> polys;
  const QuadraticForm aq = abs_form(q);
  for (int id : h.levels[levels]) {
    const Triangle& t = h.nodes[id].tri;
    std::string fill = "#ffffff";
    if (!indefinite) {
      if (rho_q(t, q) > kRhoBar) fill = "#b0b0b0";
    } else if (rho_q(t, aq) > kRhoBar) {
      fill = rho_q(t, q) <= kRhoBar ? "#b0b0b0" : "#505050";
    }
    polys.push_back({{t.v[0], t.v[1], t.v[2]}, fill});
  }
  write_svg_mesh((dir / "mesh.svg").string(), polys, dom);

  QuadraticDemoResult res;
  res.levels = levels;
  res.triangles = static_cast<int>(h.levels[levels].size());
  res.indefinite = indefinite;
  const double n = static_cast<double>(res.triangles);
  res.frac_white = last.white / n;
  res.frac_grey = last.grey / n;
  res.frac_dark = last.dark / n;
  res.frac_rho_ok = last.rho_ok / n;
  return res;
}

namespace {

// Arc length of the circle of radius r inside [0, side]^2.
double arc_in_square(double r, double side) {
  if (r <= 0.0) return 0.0;
  if (r <= side) return r * (M_PI / 2.0);
  if (r >= side * std::sqrt(2.0)) return 0.0;
  return r * (M_PI / 2.0 - 2.0 * std::acos(side / r));
}

// Composite Gauss over [lo, hi] split at the given interior kinks.
template <class F>
double radial_integral(double lo, double hi, std::vector<double> kinks, F&& f) {
  kinks.push_back(lo);
  kinks.push_back(hi);
  std::sort(kinks.begin(), kinks.end());
  std::vector<double> x, w;
  gauss_legendre(12, x, w);
  double total = 0.0;
  for (size_t i = 0; i + 1 < kinks.size(); ++i) {
    const double a = std::max(kinks[i], lo), b = std::min(kinks[i + 1], hi);
    if (b <= a) continue;
    const int panels = 160;
    const double hstep = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
      const double c = a + p * hstep;
      for (size_t k = 0; k < x.size(); ++k) {
        const double r = c + 0.5 * hstep * (x[k] + 1.0);
        total += 0.5 * hstep * w[k] * f(r);
      }
    }
  }
  return total;
}

}  // namespace

HessianConstants hessian_constants(const SharpTransitionSource& f, double side) {
  const double rmax = side * std::sqrt(2.0);
  const double d = f.delta();
  std::vector<double> kinks;
  for (double c : {1.0, 1.0 + d, 2.0, 2.0 + d, side})
    if (c > 0.0 && c < rmax) kinks.push_back(c);
  // |g''| and |g'|/r change leading order inside the blend; sample the blend
  // densely enough by splitting it further.
  for (int k = 1; k < 8; ++k) {
    const double c = 1.0 + d * k / 8.0;
    if (c < rmax) kinks.push_back(c);
  }
  auto eigs = [&](double r) {
    const double l1 = f.radial_d2(r);
    const double l2 = f.radial_d1(r) / std::max(r, 1e-300);
    return std::pair<double, double>(l1, l2);
  };
  auto spec = [&](double r) {
    auto [l1, l2] = eigs(r);
    return std::max(std::abs(l1), std::abs(l2));
  };
  auto sqrt_det = [&](double r) {
    auto [l1, l2] = eigs(r);
    return std::sqrt(std::abs(l1 * l2));
  };
  HessianConstants out;
  out.U = std::sqrt(radial_integral(0.0, rmax, kinks, [&](double r) {
    const double s = spec(r);
    return s * s * arc_in_square(r, side);
  }));
  out.I = std::pow(radial_integral(0.0, rmax, kinks,
                                   [&](double r) {
                                     return std::pow(spec(r), 2.0 / 3.0) *
                                            arc_in_square(r, side);
                                   }),
                   1.5);
  out.A = std::pow(radial_integral(0.0, rmax, kinks,
                                   [&](double r) {
                                     return std::pow(sqrt_det(r), 2.0 / 3.0) *
                                            arc_in_square(r, side);
                                   }),
                   1.5);
  return out;
}

std::vector<TableRow> run_table42(std::span<const double> deltas, int leaves,
                                  double theta, const std::string& outdir,
                                  double domain_side) {
  const auto dir = ensure_outdir(outdir);
  CsvWriter csv((dir / "table.csv").string());
  csv.row({"delta", "U", "I", "A", "C_U", "C_I", "C_A"});
  const Rect dom{0, 0, domain_side, domain_side};
  const auto d0 = split_square(dom);
  ApproxConfig acfg;  // m = 1, p = 2, projection
  std::vector<TableRow> rows;
  for (double delta : deltas) {
    SharpTransitionSource f(delta, dom);
    TableRow row;
    row.delta = delta;
    row.theory = hessian_constants(f, domain_side);

    const BisectionTree uni = grow_uniform(f, d0, acfg, leaves);
    row.C_U = leaves * global_error(uni, 2.0);

    const BisectionTree iso =
        grow_isotropic(f, d0, acfg, StopRule::max_leaves(leaves));
    row.C_I = leaves * global_error(iso, 2.0);

    RefineConfig rcfg;
    rcfg.rule = RefineRule::Modified;
    rcfg.theta = theta;
    const BisectionTree ada =
        greedy_grow(f, d0, acfg, rcfg, StopRule::max_leaves(leaves));
    row.C_A = leaves * global_error(ada, 2.0);

    csv.row({CsvWriter::cell(delta), CsvWriter::cell(row.theory.U),
             CsvWriter::cell(row.theory.I), CsvWriter::cell(row.theory.A),
             CsvWriter::cell(row.C_U), CsvWriter::cell(row.C_I),
             CsvWriter::cell(row.C_A)});
    rows.push_back(row);
  }
  return rows;
}

PixelGridSource rasterize(const BisectionTree& tree) {
  if (tree.grid() == nullptr)
    throw std::invalid_argument("rasterize: tree was not grown on a pixel grid");
  const PixelGridSource& grid = *tree.grid();
  std::vector<double> out(grid.pixel_count(), 0.0);
  for (int id : tree.leaves()) {
    const TreeNode& n = tree.node(id);
    for (PixelIndex i : tree.pixels_of(id))
      out[static_cast<size_t>(i)] = n.fit.eval(grid.center(i));
  }
  return PixelGridSource(grid.width(), grid.height(), std::move(out));
}

double psnr(const PixelGridSource& reference, const PixelGridSource& test) {
  if (reference.pixel_count() != test.pixel_count())
    throw std::invalid_argument("psnr: size mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < reference.pixel_count(); ++i) {
    const double d = reference.values()[i] - test.values()[i];
    acc += d * d;
  }
  const double mse = acc / static_cast<double>(reference.pixel_count());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);  // == 255^2 / mse on the 0..255 scale
}

std::vector<SvgPolygon> leaf_polygons(const BisectionTree& tree,
                                      const std::string& fill) {
  std::vector<SvgPolygon> polys;
  for (int id : tree.leaves()) {
    const Triangle& t = tree.node(id).tri;
    polys.push_back({{t.v[0], t.v[1], t.v[2]}, fill});
  }
  return polys;
}

Rect mesh_bounds(const BisectionTree& tree) {
  Rect r{1e300, 1e300, -1e300, -1e300};
  for (int root : tree.roots())
    for (const Point2& p : tree.node(root).tri.v) {
      r.x0 = std::min(r.x0, p.x);
      r.y0 = std::min(r.y0, p.y);
      r.x1 = std::max(r.x1, p.x);
      r.y1 = std::max(r.y1, p.y);
    }
  return r;
}

ImageResult run_image(const std::string& pgm_path, int leaves,
                      const std::string& rule, double theta,
                      const std::string& outdir) {
  const auto dir = ensure_outdir(outdir);
  PixelGridSource img = read_pgm(pgm_path);
  const auto d0 = split_square({0, 0, 1, 1});
  ApproxConfig acfg;
  BisectionTree tree;
  if (rule == "newest") {
    tree = grow_isotropic(img, d0, acfg, StopRule::max_leaves(leaves));
  } else if (rule == "greedy" || rule == "modified") {
    RefineConfig rcfg;
    rcfg.rule = rule == "greedy" ? RefineRule::PureGreedy : RefineRule::Modified;
    rcfg.theta = theta;
    tree = greedy_grow(img, d0, acfg, rcfg, StopRule::max_leaves(leaves));
  } else {
    throw std::invalid_argument("run_image: rule must be newest|greedy|modified");
  }

  const PixelGridSource render = rasterize(tree);
  write_pgm((dir / "approx.pgm").string(), render);
  write_svg_mesh((dir / "mesh.svg").string(), leaf_polygons(tree), mesh_bounds(tree));
  const BitStream bits = encode(tree);
  write_bitstream((dir / "tree.atb").string(), bits);
  {
    std::ofstream mesh((dir / "mesh.txt").string(), std::ios::binary);
    write_mesh_text(mesh, tree);
  }

  ImageResult res;
  res.leaves = tree.leaf_count();
  res.iterations = static_cast<int>(tree.history().size());
  res.bits = bits.bit_count;
  double acc = 0.0;
  for (size_t i = 0; i < img.pixel_count(); ++i) {
    const double d = img.values()[i] - render.values()[i];
    acc += d * d;
  }
  res.mse = acc / static_cast<double>(img.pixel_count());
  res.psnr = res.mse == 0.0 ? std::numeric_limits<double>::infinity()
                            : 10.0 * std::log10(1.0 / res.mse);
  CsvWriter csv((dir / "psnr.csv").string());
  csv.row({"rule", "leaves", "iterations", "bits", "mse", "psnr_db"});
  csv.row({rule, CsvWriter::cell(res.leaves), CsvWriter::cell(res.iterations),
           CsvWriter::cell(static_cast<int>(res.bits)), CsvWriter::cell(res.mse),
           CsvWriter::cell(res.psnr)});
  return res;
}

std::shared_ptr<const FunctionSource> parse_source(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string head = spec.substr(0, colon);
  const std::string args = colon == std::string::npos ? "" : spec.substr(colon + 1);
  auto split_args = [&]() {
    std::vector<double> out;
    size_t pos = 0;
    while (pos < args.size()) {
      size_t next = args.find(',', pos);
      if (next == std::string::npos) next = args.size();
      out.push_back(std::stod(args.substr(pos, next - pos)));
      pos = next + 1;
    }
    return out;
  };
  if (head == "quad") {
    const auto v = split_args();
    if (v.size() != 3) throw std::invalid_argument("quad source needs q11,q12,q22");
    return make_quadratic({v[0], v[1], v[2]}, {-1, -1, 2, 2});
  }
  if (head == "sharp") {
    const auto v = split_args();
    if (v.empty()) throw std::invalid_argument("sharp source needs a delta");
    const double side = v.size() > 1 ? v[1] : 1.1;
    return make_sharp_transition(v[0], {0, 0, side, side});
  }
  if (head == "cxl2") return make_counterexample_l2();
  if (head == "cxinterp") {
    const auto v = split_args();
    return make_counterexample_interp(v.empty() ? 1 : static_cast<int>(v[0]));
  }
  if (head == "pgm")
    return std::make_shared<PixelGridSource>(read_pgm(args));
  throw std::invalid_argument("unknown source spec: " + spec);
}

}  // namespace anitri
