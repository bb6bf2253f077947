#ifndef ANITRI_WAVELET_HPP
#define ANITRI_WAVELET_HPP

#include <Eigen/Dense>
#include <map>
#include <vector>

#include "anitri/tree.hpp"

namespace anitri {

/// Orthonormal basis of P_1 on T: phi^i is sqrt(3)/sqrt(|T|) at vertex i and
/// the negative of that at the other two vertices.
struct ScalingBasis {
  std::array<LocalPolynomial, 3> phi;
};

ScalingBasis scaling_basis(const Triangle& t);

/// Wavelets of an internal node: each psi is linear on either child and
/// spans, together with P_1(T), the two-child space. Orthonormal and
/// orthogonal to P_1(T).
struct WaveletTriple {
  struct Piece {
    LocalPolynomial on_first, on_second;
  };
  std::array<Piece, 3> psi;
};

WaveletTriple wavelet_triple(const BisectionTree& tree, int node);

/// Orthogonal 6x6 change of basis at one split: rows are the parent scaling
/// functions then the wavelets, columns the two children's scaling functions.
/// Entries depend only on the vertex correspondence, not on the geometry.
Eigen::Matrix<double, 6, 6> two_scale_matrix(const BisectionTree& tree, int node);

struct CoeffKey {
  int node = -1;
  int index = 0;  // 0..2 root scaling, 3..5 wavelet
  auto operator<=>(const CoeffKey&) const = default;
};

/// Multiscale coefficients of P_J f over a tree: scaling coefficients on the
/// roots, one wavelet triple per internal node. Orthonormality gives
/// Parseval: sum of squares equals ||P_J f||^2.
using CoeffMap = std::map<CoeffKey, double>;

CoeffMap decompose(const FunctionSource& f, const BisectionTree& tree,
                   const ApproxConfig& acfg);
CoeffMap decompose(const FunctionSource& f, const Hierarchy& h,
                   const ApproxConfig& acfg);

enum class ThresholdMode { Plain, NormWeighted };

/// Keep |f_lambda| >= eps (Plain) or ||f_lambda psi_lambda||_{L^p} >= eps
/// (NormWeighted; identical to Plain at p=2 since ||psi||_2 = 1). Root
/// scaling coefficients are always kept.
CoeffMap threshold(const CoeffMap& coeffs, double eps, ThresholdMode mode,
                   const BisectionTree& tree, double p = 2.0);

/// Piecewise-linear function over the tree leaves.
struct PiecewiseFit {
  std::vector<std::pair<int, LocalPolynomial>> leaf_polys;  // sorted by leaf id

  const LocalPolynomial* find(int leaf) const;
};

/// Inverse of decompose; missing (thresholded) coefficients count as zero.
/// Throws std::out_of_range when a key does not match the tree.
PiecewiseFit reconstruct(const CoeffMap& coeffs, const BisectionTree& tree);

/// L^2 norm of a piecewise fit / of the difference of two fits over the same
/// tree (exact; the integrands are polynomial).
double l2_norm(const BisectionTree& tree, const PiecewiseFit& fit);
double l2_diff(const BisectionTree& tree, const PiecewiseFit& a, const PiecewiseFit& b);

/// Text interchange: one line "node index value" per coefficient, 17
/// significant digits.
void write_coeffs(std::ostream& out, const CoeffMap& coeffs);
CoeffMap read_coeffs(std::istream& in);

}  // namespace anitri

#endif
