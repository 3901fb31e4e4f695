#include "ta/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "ta/errors.hpp"

namespace ta {

namespace {

// Reads the next PPM header token, skipping whitespace and # comments.
std::string next_token(std::istream& is) {
  std::string tok;
  int c;
  while ((c = is.get()) != EOF) {
    if (c == '#') {
      while ((c = is.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

}  // namespace

Tensor read_ppm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open image: " + path);
  if (next_token(is) != "P6") throw IoError("not a binary PPM (P6): " + path);
  const int w = std::stoi(next_token(is));
  const int h = std::stoi(next_token(is));
  const int maxval = std::stoi(next_token(is));
  if (w < 1 || h < 1) throw IoError("bad PPM dimensions in " + path);
  if (maxval != 255) throw IoError("only 8-bit PPM supported, maxval=" + std::to_string(maxval));
  std::vector<unsigned char> buf(static_cast<std::size_t>(w) * h * 3);
  is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!is) throw IoError("truncated PPM data in " + path);
  Tensor img({3, h, w});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        img(c, y, x) = buf[(static_cast<std::size_t>(y) * w + x) * 3 + c] / 255.0;
  return img;
}

void write_ppm(const std::string& path, const Tensor& img) {
  if (img.rank() != 3 || img.dim(0) != 3) {
    throw ShapeError("write_ppm: expected (3,H,W) image, got " + img.shape_str());
  }
  const int h = img.dim(1), w = img.dim(2);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path);
  os << "P6\n" << w << " " << h << "\n255\n";
  std::vector<unsigned char> buf(static_cast<std::size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(img(c, y, x), 0.0, 1.0);
        buf[(static_cast<std::size_t>(y) * w + x) * 3 + c] =
            static_cast<unsigned char>(std::lround(v * 255.0));
      }
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!os) throw IoError("write failed: " + path);
}

Tensor clamp01(const Tensor& img) {
  Tensor out = img;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(out[i], 0.0, 1.0);
  return out;
}

Tensor luma601(const Tensor& img) {
  if (img.rank() != 3 || img.dim(0) != 3) {
    throw ShapeError("luma601: expected (3,H,W) image, got " + img.shape_str());
  }
  const int h = img.dim(1), w = img.dim(2);
  Tensor y({h, w});
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j)
      y(i, j) = 0.299 * img(0, i, j) + 0.587 * img(1, i, j) + 0.114 * img(2, i, j);
  return y;
}

}  // namespace ta
