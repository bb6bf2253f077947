#include "anitri/sources.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace anitri {

namespace {
void check_domain(const Rect& d, Point2 p) {
  if (!d.contains(p)) throw std::out_of_range("FunctionSource::eval: point outside domain");
}
}  // namespace

double AnalyticSource::eval(Point2 p) const {
  check_domain(domain_, p);
  return f_(p);
}

double QuadraticSource::eval(Point2 p) const {
  check_domain(domain_, p);
  return q_(p);
}

SharpTransitionSource::SharpTransitionSource(double delta, Rect domain)
    : FunctionSource(domain), delta_(delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("sharp transition: delta must be > 0");
  // Blend quintic in s = (r-1)/delta on [0,1]. Matching the inner branch at
  // s=0 (value 1, slope -1/2, curvature -1/2 in r) and the outer branch at
  // s=1 (value -1, slope -1/2, curvature +1/2 in r); derivatives scale by
  // delta per order when expressed in s.
  Eigen::Matrix<double, 6, 6> A = Eigen::Matrix<double, 6, 6>::Zero();
  Eigen::Matrix<double, 6, 1> b;
  const double d = delta_;
  const double rhs[6] = {1.0, -0.5 * d, -0.5 * d * d, -1.0, -0.5 * d, 0.5 * d * d};
  int row = 0;
  for (double s : {0.0, 1.0}) {
    for (int der = 0; der < 3; ++der) {
      for (int k = der; k < 6; ++k) {
        double c = 1.0;
        for (int j = 0; j < der; ++j) c *= (k - j);
        A(row, k) = c * std::pow(s, k - der);
      }
      b(row) = rhs[row];
      ++row;
    }
  }
  Eigen::Matrix<double, 6, 1> coef = A.fullPivLu().solve(b);
  for (int k = 0; k < 6; ++k) blend_[k] = coef(k);
}

double SharpTransitionSource::radial(double r) const {
  if (r <= 1.0) return (5.0 - r * r) / 4.0;
  if (r < 1.0 + delta_) {
    const double s = (r - 1.0) / delta_;
    double acc = 0.0;
    for (int k = 5; k >= 0; --k) acc = acc * s + blend_[k];
    return acc;
  }
  const double s = r - 1.0 - delta_;
  return -(5.0 - (1.0 - s) * (1.0 - s)) / 4.0;
}

double SharpTransitionSource::radial_d1(double r) const {
  if (r <= 1.0) return -r / 2.0;
  if (r < 1.0 + delta_) {
    const double s = (r - 1.0) / delta_;
    double acc = 0.0;
    for (int k = 5; k >= 1; --k) acc = acc * s + k * blend_[k];
    return acc / delta_;
  }
  const double s = r - 1.0 - delta_;
  return -(1.0 - s) / 2.0;
}

double SharpTransitionSource::radial_d2(double r) const {
  if (r <= 1.0) return -0.5;
  if (r < 1.0 + delta_) {
    const double s = (r - 1.0) / delta_;
    double acc = 0.0;
    for (int k = 5; k >= 2; --k) acc = acc * s + k * (k - 1) * blend_[k];
    return acc / (delta_ * delta_);
  }
  return 0.5;
}

double SharpTransitionSource::eval(Point2 p) const {
  check_domain(domain_, p);
  return radial(std::hypot(p.x, p.y));
}

CounterexampleInterpSource::CounterexampleInterpSource(int m)
    : FunctionSource({0, 0, 1, 1}), m_(m) {
  if (m < 1) throw std::invalid_argument("counterexample: m must be >= 1");
}

double CounterexampleInterpSource::eval(Point2 p) const {
  check_domain(domain_, p);
  return std::sin(2.0 * M_PI * m_ * p.x);
}

std::vector<double> CounterexampleInterpSource::x_breaklines() const {
  std::vector<double> lines;
  for (int k = 1; k < 2 * m_; ++k) lines.push_back(k / (2.0 * m_));
  return lines;
}

CounterexampleL2Source::CounterexampleL2Source() : FunctionSource({0, 0, 1, 1}) {}

double CounterexampleL2Source::u(double x) {
  return ((160.0 * x - 120.0) * x + 24.0) * x - 1.0;
}

double CounterexampleL2Source::eval(Point2 p) const {
  check_domain(domain_, p);
  return p.x <= 0.5 ? u(p.x) : u(p.x - 0.5);
}

PixelGridSource::PixelGridSource(int width, int height, std::vector<double> values)
    : FunctionSource({0, 0, 1, 1}),
      width_(width),
      height_(height),
      values_(std::move(values)) {
  if (width_ <= 0 || height_ <= 0 ||
      values_.size() != static_cast<size_t>(width_) * static_cast<size_t>(height_))
    throw std::invalid_argument("PixelGridSource: size mismatch");
}

Point2 PixelGridSource::center(PixelIndex i) const {
  const int col = i % width_;
  const int row = i / width_;
  return {(col + 0.5) / width_, 1.0 - (row + 0.5) / height_};
}

double PixelGridSource::sample_nearest(Point2 p) const {
  check_domain(domain_, p);
  int col = static_cast<int>(std::floor(p.x * width_));
  int row = static_cast<int>(std::floor((1.0 - p.y) * height_));
  col = std::min(std::max(col, 0), width_ - 1);
  row = std::min(std::max(row, 0), height_ - 1);
  return values_[static_cast<size_t>(row) * width_ + col];
}

double PixelGridSource::eval(Point2 p) const {
  check_domain(domain_, p);
  const double fx = p.x * width_ - 0.5;
  const double fy = (1.0 - p.y) * height_ - 0.5;
  const double cx = std::round(fx), cy = std::round(fy);
  if (std::abs(fx - cx) > 1e-9 || std::abs(fy - cy) > 1e-9)
    throw std::invalid_argument("PixelGridSource::eval: not a pixel center");
  return values_[static_cast<size_t>(cy) * width_ + static_cast<size_t>(cx)];
}

std::shared_ptr<const FunctionSource> make_quadratic(QuadraticForm q, Rect domain) {
  return std::make_shared<QuadraticSource>(q, domain);
}
std::shared_ptr<const FunctionSource> make_sharp_transition(double delta, Rect domain) {
  return std::make_shared<SharpTransitionSource>(delta, domain);
}
std::shared_ptr<const FunctionSource> make_counterexample_interp(int m) {
  return std::make_shared<CounterexampleInterpSource>(m);
}
std::shared_ptr<const FunctionSource> make_counterexample_l2() {
  return std::make_shared<CounterexampleL2Source>();
}
std::shared_ptr<const FunctionSource> make_analytic(std::function<double(Point2)> f,
                                                    Rect domain) {
  return std::make_shared<AnalyticSource>(std::move(f), domain);
}

namespace {

bool in_closed_triangle(const Triangle& t, Point2 p) {
  const double s = signed_area(t) >= 0.0 ? 1.0 : -1.0;
  for (int k = 0; k < 3; ++k) {
    const Vec2 e = t.v[(k + 1) % 3] - t.v[k];
    if (s * cross(e, p - t.v[k]) < 0.0) return false;
  }
  return true;
}

}  // namespace

PixelSet pixels_in(const PixelGridSource& grid, const Triangle& t) {
  // Scan only the bounding-box rows/cols.
  double xmin = t.v[0].x, xmax = t.v[0].x, ymin = t.v[0].y, ymax = t.v[0].y;
  for (int k = 1; k < 3; ++k) {
    xmin = std::min(xmin, t.v[k].x);
    xmax = std::max(xmax, t.v[k].x);
    ymin = std::min(ymin, t.v[k].y);
    ymax = std::max(ymax, t.v[k].y);
  }
  const int w = grid.width(), h = grid.height();
  int c0 = std::max(0, static_cast<int>(std::floor(xmin * w - 0.5)));
  int c1 = std::min(w - 1, static_cast<int>(std::ceil(xmax * w - 0.5)));
  int r0 = std::max(0, static_cast<int>(std::floor((1.0 - ymax) * h - 0.5)));
  int r1 = std::min(h - 1, static_cast<int>(std::ceil((1.0 - ymin) * h - 0.5)));
  PixelSet out;
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c) {
      const PixelIndex i = r * w + c;
      if (in_closed_triangle(t, grid.center(i))) out.push_back(i);
    }
  return out;
}

void split_pixels(const PixelGridSource& grid, const PixelSet& parent,
                  const Triangle& c1, const Triangle& c2, PixelSet& out1,
                  PixelSet& out2) {
  (void)c2;
  out1.clear();
  out2.clear();
  for (PixelIndex i : parent) {
    if (in_closed_triangle(c1, grid.center(i)))
      out1.push_back(i);
    else
      out2.push_back(i);
  }
}

}  // namespace anitri
