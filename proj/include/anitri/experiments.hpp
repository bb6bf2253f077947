#ifndef ANITRI_EXPERIMENTS_HPP
#define ANITRI_EXPERIMENTS_HPP

#include <memory>
#include <string>
#include <vector>

#include "anitri/svg.hpp"
#include "anitri/tree.hpp"
#include "anitri/wavelet.hpp"

namespace anitri {

/// The canonical coarse mesh of a square: two symmetric triangles split along
/// the (x0,y0)-(x1,y1) diagonal.
std::array<Triangle, 2> split_square(const Rect& r);

/// Unit-side triangle equilateral for the euclidean metric, the unadapted
/// start of the quadratic-form experiments.
Triangle euclidean_equilateral();

struct QuadraticDemoResult {
  int levels = 0;
  int triangles = 0;
  bool indefinite = false;
  // Definite forms use two tiers (white: rho_q <= 4 sqrt 3, grey otherwise).
  // Indefinite forms use three: white rho_|q| <= 4 sqrt 3, grey rho_q <= 4
  // sqrt 3 < rho_|q|, dark the rest.
  double frac_white = 0.0, frac_grey = 0.0, frac_dark = 0.0;
  double frac_rho_ok = 0.0;  // rho_q <= 4 sqrt 3
};

/// D_J refinement of an equilateral root driven by q; writes mesh.svg with
/// the tier coloring and stats.csv (one row per level).
QuadraticDemoResult run_quadratic_demo(const QuadraticForm& q, int levels,
                                       const std::string& outdir,
                                       const RefineConfig& rcfg = {},
                                       const ApproxConfig& acfg = {});

struct HessianConstants {
  double U = 0.0;  // ||d2 f||_{L^2}
  double I = 0.0;  // ||d2 f||_{L^{2/3}}
  double A = 0.0;  // ||sqrt|det d2 f|||_{L^{2/3}}
};

/// Radial quadrature of the Hessian functionals of the sharp-transition
/// profile over [0, side]^2 (spectral matrix norm; the L^{2/3} quasi-norms
/// are (integral |.|^{2/3})^{3/2}).
HessianConstants hessian_constants(const SharpTransitionSource& f, double side);

struct TableRow {
  double delta = 0.0;
  HessianConstants theory;
  double C_U = 0.0, C_I = 0.0, C_A = 0.0;  // N * ||f - f_N||_2 per strategy
};

/// Uniform / adaptive-isotropic / adaptive-anisotropic constants at leaf
/// budget N for each delta; writes table.csv.
std::vector<TableRow> run_table42(std::span<const double> deltas, int leaves,
                                  double theta, const std::string& outdir,
                                  double domain_side = 1.1);

/// Point-sample the per-leaf fits at the pixel centers owned by each leaf.
PixelGridSource rasterize(const BisectionTree& tree);

/// Peak signal-to-noise ratio on the 0..255 intensity scale.
double psnr(const PixelGridSource& reference, const PixelGridSource& test);

struct ImageResult {
  int leaves = 0;
  int iterations = 0;
  std::size_t bits = 0;
  double mse = 0.0;   // on the [0,1] intensity scale
  double psnr = 0.0;  // dB
};

/// Greedy image approximation: rule is "newest", "greedy" or "modified".
/// Writes approx.pgm, mesh.svg, tree.atb and psnr.csv into outdir.
ImageResult run_image(const std::string& pgm_path, int leaves,
                      const std::string& rule, double theta,
                      const std::string& outdir);

/// Mesh rendering helper shared by the CLI commands: one polygon per leaf.
std::vector<SvgPolygon> leaf_polygons(const BisectionTree& tree,
                                      const std::string& fill = "none");
Rect mesh_bounds(const BisectionTree& tree);

/// CLI source specs: "quad:q11,q12,q22", "sharp:<delta>[,<side>]",
/// "cxl2", "cxinterp:<m>", "pgm:<path>".
std::shared_ptr<const FunctionSource> parse_source(const std::string& spec);

}  // namespace anitri

#endif
