#include "anitri/svg.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace anitri {

void write_svg_mesh(const std::string& path, std::span<const SvgPolygon> polys,
                    const Rect& viewbox) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("svg: cannot write " + path);
  const double w = viewbox.width(), h = viewbox.height();
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" "
                "viewBox=\"%.9g %.9g %.9g %.9g\" width=\"800\" height=\"%d\">\n",
                viewbox.x0, viewbox.y0, w, h,
                static_cast<int>(800.0 * h / w + 0.5));
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n" << buf;
  std::snprintf(buf, sizeof buf,
                "<g stroke=\"#000000\" stroke-width=\"%.9g\" "
                "stroke-linejoin=\"round\">\n",
                w / 2000.0);
  out << buf;
  const double yflip = viewbox.y0 + viewbox.y1;
  for (const SvgPolygon& p : polys) {
    out << "<polygon points=\"";
    for (int k = 0; k < 3; ++k) {
      std::snprintf(buf, sizeof buf, "%s%.9g,%.9g", k ? " " : "", p.pts[k].x,
                    yflip - p.pts[k].y);
      out << buf;
    }
    out << "\" fill=\"" << p.fill << "\"/>\n";
  }
  out << "</g>\n</svg>\n";
}

}  // namespace anitri
