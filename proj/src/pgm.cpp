#include <fstream>
#include <sstream>
#include <stdexcept>

#include "anitri/sources.hpp"

namespace anitri {

namespace {

// Next token after whitespace and '#' comment lines.
int next_int(std::istream& in, const char* what) {
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (!std::isspace(c)) {
      break;
    }
    c = in.get();
  }
  if (c == EOF) throw std::runtime_error(std::string("pgm: unexpected EOF before ") + what);
  if (!std::isdigit(c)) throw std::runtime_error(std::string("pgm: malformed ") + what);
  long v = 0;
  while (c != EOF && std::isdigit(c)) {
    v = v * 10 + (c - '0');
    if (v > 1 << 30) throw std::runtime_error(std::string("pgm: overflow in ") + what);
    c = in.get();
  }
  if (c != EOF) in.unget();
  return static_cast<int>(v);
}

}  // namespace

PixelGridSource read_pgm_stream(std::istream& in) {
  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  if (m0 != 'P' || (m1 != '2' && m1 != '5'))
    throw std::runtime_error("pgm: not a P2/P5 file");
  const bool binary = (m1 == '5');
  const int width = next_int(in, "width");
  const int height = next_int(in, "height");
  const int maxval = next_int(in, "maxval");
  if (width <= 0 || height <= 0) throw std::runtime_error("pgm: bad dimensions");
  if (maxval <= 0 || maxval > 65535) throw std::runtime_error("pgm: bad maxval");
  std::vector<double> values(static_cast<size_t>(width) * height);
  if (binary) {
    if (maxval > 255) throw std::runtime_error("pgm: 16-bit P5 not supported");
    const int sep = in.get();
    if (sep == EOF || !std::isspace(sep))
      throw std::runtime_error("pgm: missing separator after maxval");
    std::vector<unsigned char> raw(values.size());
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<size_t>(in.gcount()) != raw.size())
      throw std::runtime_error("pgm: truncated pixel data");
    for (size_t i = 0; i < raw.size(); ++i) values[i] = raw[i] / double(maxval);
  } else {
    for (size_t i = 0; i < values.size(); ++i) {
      const int v = next_int(in, "pixel");
      if (v > maxval) throw std::runtime_error("pgm: sample exceeds maxval");
      values[i] = v / double(maxval);
    }
  }
  return PixelGridSource(width, height, std::move(values));
}

PixelGridSource read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("pgm: cannot open " + path);
  return read_pgm_stream(in);
}

void write_pgm(const std::string& path, const PixelGridSource& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("pgm: cannot write " + path);
  out << "P5\n" << img.width() << " " << img.height() << "\n255\n";
  for (double v : img.values()) {
    const double clamped = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    out.put(static_cast<char>(static_cast<int>(clamped * 255.0 + 0.5)));
  }
}

}  // namespace anitri
