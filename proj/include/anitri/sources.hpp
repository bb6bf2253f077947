#ifndef ANITRI_SOURCES_HPP
#define ANITRI_SOURCES_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "anitri/geometry.hpp"

namespace anitri {

struct Rect {
  double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;
  bool contains(Point2 p) const {
    return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1;
  }
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
};

enum class SourceKind {
  Analytic,
  Quadratic,
  SharpTransition,
  CounterexampleInterp,
  CounterexampleL2,
  PixelGrid,
};

/// A target function f on a rectangular domain. Everything downstream only
/// needs point evaluation plus, for piecewise-smooth sources, the vertical
/// lines across which f loses smoothness (so quadrature can split there).
/// Immutable after construction; evaluation is thread-safe.
class FunctionSource {
 public:
  virtual ~FunctionSource() = default;

  virtual SourceKind kind() const = 0;
  const Rect& domain() const { return domain_; }

  /// Value at p. Throws std::out_of_range outside the domain. Pixel grids are
  /// sampled, not point-evaluated; they only accept exact pixel centers.
  virtual double eval(Point2 p) const = 0;

  virtual bool point_evaluable() const { return true; }

  /// Vertical lines x = c across which f is not smooth (empty if none).
  virtual std::vector<double> x_breaklines() const { return {}; }

 protected:
  explicit FunctionSource(Rect domain) : domain_(domain) {}
  Rect domain_;
};

class AnalyticSource final : public FunctionSource {
 public:
  AnalyticSource(std::function<double(Point2)> f, Rect domain)
      : FunctionSource(domain), f_(std::move(f)) {}
  SourceKind kind() const override { return SourceKind::Analytic; }
  double eval(Point2 p) const override;

 private:
  std::function<double(Point2)> f_;
};

class QuadraticSource final : public FunctionSource {
 public:
  QuadraticSource(QuadraticForm q, Rect domain) : FunctionSource(domain), q_(q) {}
  SourceKind kind() const override { return SourceKind::Quadratic; }
  double eval(Point2 p) const override;
  const QuadraticForm& form() const { return q_; }

 private:
  QuadraticForm q_;
};

/// Radial profile g_delta: (5-r^2)/4 inside the unit circle, a quintic blend
/// of width delta, then the mirrored cap. Globally C^2; the six blend
/// coefficients are solved from the value/derivative matching conditions.
class SharpTransitionSource final : public FunctionSource {
 public:
  SharpTransitionSource(double delta, Rect domain);
  SourceKind kind() const override { return SourceKind::SharpTransition; }
  double eval(Point2 p) const override;

  double delta() const { return delta_; }
  double radial(double r) const;
  double radial_d1(double r) const;
  double radial_d2(double r) const;

  /// Blend polynomial coefficients in the scaled variable s = (r-1)/delta.
  const std::array<double, 6>& blend_coeffs() const { return blend_; }

 private:
  double delta_;
  std::array<double, 6> blend_{};
};

/// Continuous function vanishing on the lines x = k/(2m); interpolation by
/// degree-m polynomials annihilates it on the reference triangle. Realized as
/// sin(2 pi m x).
class CounterexampleInterpSource final : public FunctionSource {
 public:
  explicit CounterexampleInterpSource(int m);
  SourceKind kind() const override { return SourceKind::CounterexampleInterp; }
  double eval(Point2 p) const override;
  int m() const { return m_; }
  /// |f - I_T f| kinks on the vanishing lines; declaring them keeps odd-p
  /// error integrals sharp.
  std::vector<double> x_breaklines() const override;

 private:
  int m_;
};

/// f(x,y) = u(x) on [0,1/2], u(x-1/2) on (1/2,1], with u = L_3(4x-1).
/// The first three moments of u vanish, which makes f orthogonal to P_1 on
/// every triangle whose vertex x-coordinates are (0,1/2,1), (0,1,1) or
/// (1/2,1,1): the greedy L^2 rule stalls on it.
class CounterexampleL2Source final : public FunctionSource {
 public:
  CounterexampleL2Source();
  SourceKind kind() const override { return SourceKind::CounterexampleL2; }
  double eval(Point2 p) const override;
  std::vector<double> x_breaklines() const override { return {0.5}; }
  static double u(double x);
};

using PixelIndex = std::int32_t;
using PixelSet = std::vector<PixelIndex>;

/// Grayscale raster mapped onto [0,1]^2 with intensities in [0,1]. Row 0 of
/// the raster is the top of the domain. Pixel index = row * width + col.
class PixelGridSource final : public FunctionSource {
 public:
  PixelGridSource(int width, int height, std::vector<double> values);

  SourceKind kind() const override { return SourceKind::PixelGrid; }
  bool point_evaluable() const override { return false; }
  /// Only exact pixel centers are evaluable; anything else throws.
  double eval(Point2 p) const override;

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const { return values_.size(); }
  double value(PixelIndex i) const { return values_[static_cast<size_t>(i)]; }
  const std::vector<double>& values() const { return values_; }
  Point2 center(PixelIndex i) const;
  /// Nearest-pixel lookup; the piecewise-constant extension of the raster.
  double sample_nearest(Point2 p) const;

 private:
  int width_, height_;
  std::vector<double> values_;
};

std::shared_ptr<const FunctionSource> make_quadratic(QuadraticForm q, Rect domain);
std::shared_ptr<const FunctionSource> make_sharp_transition(double delta,
                                                            Rect domain = {0, 0, 1.1, 1.1});
std::shared_ptr<const FunctionSource> make_counterexample_interp(int m);
std::shared_ptr<const FunctionSource> make_counterexample_l2();
std::shared_ptr<const FunctionSource> make_analytic(std::function<double(Point2)> f,
                                                    Rect domain);

/// Pixels of `grid` whose centers lie in the closed triangle.
PixelSet pixels_in(const PixelGridSource& grid, const Triangle& t);

/// Distribute `parent` pixels between the two children of a bisection.
/// A center on the shared edge goes to `c1` (the canonical first child, which
/// receives the smaller node id); every parent pixel lands in exactly one
/// child, so leaf pixel sets always partition the root set.
void split_pixels(const PixelGridSource& grid, const PixelSet& parent,
                  const Triangle& c1, const Triangle& c2, PixelSet& out1,
                  PixelSet& out2);

/// Netpbm PGM input (P2 ascii and 8-bit P5), intensities scaled to [0,1].
PixelGridSource read_pgm(const std::string& path);
PixelGridSource read_pgm_stream(std::istream& in);
void write_pgm(const std::string& path, const PixelGridSource& img);

}  // namespace anitri

#endif
