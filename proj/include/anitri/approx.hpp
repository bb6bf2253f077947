#ifndef ANITRI_APPROX_HPP
#define ANITRI_APPROX_HPP

#include <limits>
#include <span>
#include <vector>

#include "anitri/geometry.hpp"
#include "anitri/quadrature.hpp"
#include "anitri/sources.hpp"

namespace anitri {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Polynomial in monomials of ((x,y) - center)/scale, graded order
/// [1, X, Y, X^2, XY, Y^2, ...]. Centering/scaling per triangle keeps the
/// normal equations well conditioned across wildly anisotropic elements.
struct LocalPolynomial {
  int degree = 0;
  Point2 center{};
  double scale = 1.0;
  std::vector<double> coeffs;  // (degree+1)(degree+2)/2 entries

  double eval(Point2 p) const;
};

inline int poly_dim(int degree) { return (degree + 1) * (degree + 2) / 2; }

enum class LocalOperator { Projection, Interpolation };

struct ApproxConfig {
  int degree = 1;                           // m in {0, 1, 2}
  double p = 2.0;                           // error exponent, kInfinity allowed
  LocalOperator op = LocalOperator::Projection;
  int quadrature_order = 8;
};

struct ErrorRecord {
  double error = 0.0;
  LocalPolynomial fit;
  bool underdetermined = false;  // pixel triangle with fewer samples than dim
};

/// L^2(T)-orthogonal projection onto Pi_m (under the configured quadrature for
/// continuous sources, exact discrete least squares over the pixel set for
/// rasters).
LocalPolynomial project(const FunctionSource& f, const Triangle& t,
                        const ApproxConfig& cfg);

/// Lagrange interpolation at the nodes { sum (k_i/m) v_i : sum k_i = m }
/// (barycenter when m = 0). Pixel grids are sampled at the nearest center.
LocalPolynomial interpolate(const FunctionSource& f, const Triangle& t,
                            const ApproxConfig& cfg);

/// e_T(f)_p = ||f - A_T f||_{L^p(T)}. For p = infinity the sup is estimated on
/// the quadrature nodes plus vertices and edge midpoints (a lower bound on the
/// true sup). Pixel sources use the discrete l^p norm over the pixel set.
ErrorRecord local_error(const FunctionSource& f, const Triangle& t,
                        const ApproxConfig& cfg);

/// Pixel-set overloads used by the tree module, which owns the partition of
/// the raster into per-leaf pixel sets.
LocalPolynomial project_pixels(const PixelGridSource& grid, const Triangle& t,
                               std::span<const PixelIndex> pixels,
                               const ApproxConfig& cfg);
ErrorRecord local_error_pixels(const PixelGridSource& grid, const Triangle& t,
                               std::span<const PixelIndex> pixels,
                               const ApproxConfig& cfg);

/// ||f - fit||_{L^p(T)} for an already computed fit.
double residual_norm(const FunctionSource& f, const Triangle& t,
                     const LocalPolynomial& fit, const ApproxConfig& cfg);

}  // namespace anitri

#endif
