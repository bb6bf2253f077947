// Command-line driver for the greedy anisotropic bisection experiments.

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "anitri/csv.hpp"
#include "anitri/experiments.hpp"

using namespace anitri;

namespace {

ApproxConfig approx_config(int m, const std::string& p) {
  ApproxConfig cfg;
  cfg.degree = m;
  cfg.p = (p == "inf") ? kInfinity : std::stod(p);
  return cfg;
}

RefineConfig refine_config(const std::string& metric, const std::string& rule,
                           double theta, double metric_p, const std::string& tie) {
  RefineConfig cfg;
  if (metric == "l2proj") cfg.metric = DecisionMetric::L2ProjSq;
  else if (metric == "lpproj") cfg.metric = DecisionMetric::LpProjPow;
  else if (metric == "l1interp") cfg.metric = DecisionMetric::L1Interp;
  else if (metric == "lpinterp") cfg.metric = DecisionMetric::LpInterpPow;
  else throw CLI::ValidationError("--metric", "unknown metric " + metric);
  cfg.metric_p = metric_p;
  if (rule == "greedy") cfg.rule = RefineRule::PureGreedy;
  else if (rule == "modified") cfg.rule = RefineRule::Modified;
  else if (rule != "newest")
    throw CLI::ValidationError("--rule", "unknown rule " + rule);
  cfg.theta = theta;
  cfg.tie = (tie == "smallest") ? TieRule::LexSmallestOpposite
                                : TieRule::LexLargestOpposite;
  return cfg;
}

StopRule parse_stop(const std::string& s) {
  const auto colon = s.find(':');
  const std::string head = s.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : s.substr(colon + 1);
  if (head == "leaves") return StopRule::max_leaves(std::stoi(arg));
  if (head == "local") return StopRule::local_error(std::stod(arg));
  if (head == "global") return StopRule::global_error(std::stod(arg));
  throw CLI::ValidationError("--stop", "expected leaves:N | local:eps | global:eps");
}

std::array<Triangle, 2> default_mesh(const FunctionSource& f) {
  return split_square(f.domain());
}

// For sharp-transition meshes, reproduce the aspect-ratio coloring: white
// when rho_q(T) <= 4 with q the Hessian at the barycenter, grey otherwise
// (triangles on the blend-zone boundary are classified as-is).
std::vector<SvgPolygon> colored_polygons(const BisectionTree& tree,
                                         const FunctionSource& f) {
  if (f.kind() != SourceKind::SharpTransition) return leaf_polygons(tree);
  const auto& sharp = static_cast<const SharpTransitionSource&>(f);
  std::vector<SvgPolygon> polys = leaf_polygons(tree);
  size_t k = 0;
  for (int id : tree.leaves()) {
    const Triangle& t = tree.node(id).tri;
    const Point2 bc = barycenter(t);
    const double r = std::max(std::hypot(bc.x, bc.y), 1e-12);
    const double g1 = sharp.radial_d1(r), g2 = sharp.radial_d2(r);
    const double cx = bc.x / r, cy = bc.y / r;
    const QuadraticForm q{g2 * cx * cx + g1 / r * cy * cy,
                          (g2 - g1 / r) * cx * cy,
                          g2 * cy * cy + g1 / r * cx * cx};
    std::string fill = "#b0b0b0";
    if (q.det() != 0.0 && rho_q(t, q) <= 4.0) fill = "#ffffff";
    polys[k++].fill = fill;
  }
  return polys;
}

void write_mesh_outputs(const BisectionTree& tree, const std::string& outdir,
                        const FunctionSource* f = nullptr) {
  std::filesystem::create_directories(outdir);
  std::ofstream mesh(outdir + "/mesh.txt", std::ios::binary);
  write_mesh_text(mesh, tree);
  const auto polys = f ? colored_polygons(tree, *f) : leaf_polygons(tree);
  write_svg_mesh(outdir + "/mesh.svg", polys, mesh_bounds(tree));
  write_bitstream(outdir + "/tree.atb", encode(tree));
}

void write_convergence(const BisectionTree& tree, double p, const std::string& path) {
  CsvWriter csv(path);
  csv.row({"split", "leaves", "global_error"});
  const bool inf = p == kInfinity;
  double acc = 0.0;
  int leaves = tree.root_count();
  for (int r : tree.roots())
    acc += inf ? 0.0 : std::pow(tree.node(r).error, p);
  auto emit = [&](int split) {
    const double g = inf ? global_error(tree, p) : std::pow(acc, 1.0 / p);
    csv.row({CsvWriter::cell(split), CsvWriter::cell(leaves), CsvWriter::cell(g)});
  };
  if (!inf) emit(0);
  int k = 0;
  for (const SplitRecord& h : tree.history()) {
    ++k;
    ++leaves;
    if (!inf) {
      acc += std::pow(h.child_error[0], p) + std::pow(h.child_error[1], p) -
             std::pow(h.error_at_split, p);
      emit(k);
    }
  }
  if (inf) emit(k);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Greedy anisotropic triangle-bisection approximation"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  int m = 1;
  std::string p = "2";
  double theta = 2.0 / 3.0;
  std::string rule = "greedy", metric = "l2proj", tie = "largest";
  double metric_p = 2.0, lambda = 0.0;
  long seed = 0;  // reserved for randomized diagnostics; the core is deterministic
  std::string out = "out";
  app.add_option("--m", m, "polynomial degree (0..2)")
      ->check(CLI::Range(0, 2))
      ->capture_default_str();
  app.add_option("--p", p, "error exponent (number or 'inf')")->capture_default_str();
  app.add_option("--theta", theta, "modified-rule gate")->capture_default_str();
  app.add_option("--rule", rule, "greedy | modified | newest")->capture_default_str();
  app.add_option("--metric", metric, "l2proj | lpproj | l1interp | lpinterp")
      ->capture_default_str();
  app.add_option("--metric-p", metric_p, "exponent for lp* metrics")
      ->capture_default_str();
  app.add_option("--tie", tie, "largest | smallest opposite-vertex tie rule")
      ->capture_default_str();
  app.add_option("--lambda", lambda, "CART penalty")->capture_default_str();
  app.add_option("--seed", seed, "unused by the deterministic core");
  app.add_option("--out", out, "output directory")->capture_default_str();

  auto* hier = app.add_subcommand("hierarchy", "full-level refinement of a quadratic form");
  std::string qspec = "1,0,100";
  int levels = 8;
  hier->add_option("--q", qspec, "q11,q12,q22")->capture_default_str();
  hier->add_option("--levels", levels, "hierarchy depth J")->capture_default_str();

  auto* greedy = app.add_subcommand("greedy", "greedy tree growth on a source");
  std::string source = "sharp:0.2";
  std::string stop = "leaves:1024";
  greedy->add_option("--source", source, "quad:...|sharp:d|cxl2|cxinterp:m|pgm:path")
      ->capture_default_str();
  greedy->add_option("--stop", stop, "leaves:N | local:eps | global:eps")
      ->capture_default_str();

  auto* cart = app.add_subcommand("cart", "grow generously, then optimal pruning");
  int grow_leaves = 1024;
  cart->add_option("--source", source, "source spec")->capture_default_str();
  cart->add_option("--grow-leaves", grow_leaves,
                   "leaf budget before pruning; pick >= 4x the size you expect "
                   "the pruned tree to have")
      ->capture_default_str();

  auto* wave = app.add_subcommand("wavelet", "multiscale decomposition and thresholding");
  int wlevels = 6;
  double eps = 0.0;
  std::string mode = "plain";
  wave->add_option("--source", source, "source spec")->capture_default_str();
  wave->add_option("--levels", wlevels, "hierarchy depth J")->capture_default_str();
  wave->add_option("--eps", eps, "threshold")->capture_default_str();
  wave->add_option("--mode", mode, "plain | norm")->capture_default_str();

  auto* image = app.add_subcommand("image", "PGM approximation pipeline");
  std::string input;
  int leaves = 2000;
  image->add_option("--input", input, "PGM (P2 or 8-bit P5)")->required();
  image->add_option("--leaves", leaves, "triangle budget")->capture_default_str();

  auto* table = app.add_subcommand("table42", "uniform/isotropic/anisotropic constants");
  std::string deltas = "0.2,0.1,0.05";
  int tleaves = 8192;
  double side = 1.1;
  table->add_option("--deltas", deltas, "comma-separated list")->capture_default_str();
  table->add_option("--leaves", tleaves, "leaf budget N")->capture_default_str();
  table->add_option("--side", side, "domain side length")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    const ApproxConfig acfg = approx_config(m, p);
    const RefineConfig rcfg = refine_config(metric, rule, theta, metric_p, tie);

    if (hier->parsed()) {
      const auto v = parse_source("quad:" + qspec);
      const auto& q = static_cast<const QuadraticSource&>(*v).form();
      const auto res = run_quadratic_demo(q, levels, out, rcfg, acfg);
      std::cout << "triangles: " << res.triangles
                << "  frac(rho_q <= 4sqrt3): " << res.frac_rho_ok << "\n";
    } else if (greedy->parsed()) {
      const auto f = parse_source(source);
      const auto d0 = default_mesh(*f);
      BisectionTree tree;
      if (rule == "newest")
        tree = grow_isotropic(*f, d0, acfg, parse_stop(stop));
      else
        tree = greedy_grow(*f, d0, acfg, rcfg, parse_stop(stop));
      write_mesh_outputs(tree, out, f.get());
      write_convergence(tree, acfg.p, out + "/convergence.csv");
      std::cout << "leaves: " << tree.leaf_count()
                << "  error: " << global_error(tree, acfg.p)
                << (tree.stopped_early() ? "  (stopped early: zero errors)" : "")
                << "\n";
    } else if (cart->parsed()) {
      const auto f = parse_source(source);
      const auto d0 = default_mesh(*f);
      BisectionTree tree =
          greedy_grow(*f, d0, acfg, rcfg, StopRule::max_leaves(grow_leaves));
      BisectionTree pruned = cart_prune(tree, lambda, acfg.p);
      write_mesh_outputs(pruned, out);
      CsvWriter csv(out + "/cart.csv");
      csv.row({"lambda", "grown_leaves", "pruned_leaves", "error"});
      csv.row({CsvWriter::cell(lambda), CsvWriter::cell(tree.leaf_count()),
               CsvWriter::cell(pruned.leaf_count()),
               CsvWriter::cell(global_error(pruned, acfg.p))});
      std::cout << "pruned to " << pruned.leaf_count()
                << " leaves, error " << global_error(pruned, acfg.p) << "\n";
    } else if (wave->parsed()) {
      const auto f = parse_source(source);
      const auto d0 = default_mesh(*f);
      const Hierarchy h = build_hierarchy(*f, d0, wlevels, rcfg, acfg);
      const BisectionTree tree = from_hierarchy(h);
      const CoeffMap coeffs = decompose(*f, tree, acfg);
      const CoeffMap kept =
          threshold(coeffs, eps,
                    mode == "norm" ? ThresholdMode::NormWeighted : ThresholdMode::Plain,
                    tree, acfg.p);
      std::filesystem::create_directories(out);
      std::ofstream cf(out + "/coeffs.txt", std::ios::binary);
      write_coeffs(cf, kept);
      double dropped = 0.0;
      for (const auto& [key, value] : coeffs)
        if (!kept.count(key)) dropped += value * value;
      CsvWriter csv(out + "/wavelet.csv");
      csv.row({"coeffs", "kept", "eps", "discarded_l2"});
      csv.row({CsvWriter::cell(static_cast<int>(coeffs.size())),
               CsvWriter::cell(static_cast<int>(kept.size())), CsvWriter::cell(eps),
               CsvWriter::cell(std::sqrt(dropped))});
      std::cout << "kept " << kept.size() << " of " << coeffs.size()
                << " coefficients\n";
    } else if (image->parsed()) {
      const auto res = run_image(input, leaves, rule, theta, out);
      std::cout << "leaves: " << res.leaves << "  psnr: " << res.psnr
                << " dB  bits: " << res.bits << "\n";
    } else if (table->parsed()) {
      std::vector<double> ds;
      size_t pos = 0;
      while (pos < deltas.size()) {
        size_t next = deltas.find(',', pos);
        if (next == std::string::npos) next = deltas.size();
        ds.push_back(std::stod(deltas.substr(pos, next - pos)));
        pos = next + 1;
      }
      const auto rows = run_table42(ds, tleaves, theta, out, side);
      for (const auto& r : rows)
        std::cout << "delta=" << r.delta << "  U=" << r.theory.U
                  << " I=" << r.theory.I << " A=" << r.theory.A
                  << "  C_U=" << r.C_U << " C_I=" << r.C_I << " C_A=" << r.C_A
                  << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
