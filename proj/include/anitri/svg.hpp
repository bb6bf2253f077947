#ifndef ANITRI_SVG_HPP
#define ANITRI_SVG_HPP

#include <span>
#include <string>

#include "anitri/sources.hpp"

namespace anitri {

struct SvgPolygon {
  std::array<Point2, 3> pts;
  std::string fill;  // "#rrggbb" or "none"
};

/// One polygon per triangle, black hairline strokes, y axis flipped so the
/// mesh appears in the usual orientation.
void write_svg_mesh(const std::string& path, std::span<const SvgPolygon> polys,
                    const Rect& viewbox);

}  // namespace anitri

#endif
