#include "tsr/tensor.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "tsr/error.hpp"

namespace tsr {

void validate(const ImageTensor& t, const char* what) {
  if (t.height <= 0 || t.width <= 0 || t.channels <= 0)
    throw DimensionError(std::string(what) + ": empty tensor");
  if (t.data.size() != size_t(t.height) * size_t(t.width) * size_t(t.channels))
    throw DimensionError(std::string(what) + ": data length != h*w*c");
  for (double v : t.data)
    if (!std::isfinite(v))
      throw DimensionError(std::string(what) + ": non-finite value");
}

double mean_square_diff(const ImageTensor& a, const ImageTensor& b) {
  if (!a.same_shape(b))
    throw DimensionError("mean_square_diff: shape mismatch");
  return mean_square_diff(a.data, b.data);
}

double mean_square_diff(const std::vector<double>& a,
                        const std::vector<double>& b) {
  if (a.size() != b.size())
    throw DimensionError("mean_square_diff: length mismatch");
  double acc = 0.0;
  for (size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    acc += d * d;
  }
  return acc / double(a.size());
}

void write_pgm16(const std::string& path, const ImageTensor& img, int channel,
                 double peak) {
  if (channel < 0 || channel >= img.channels)
    throw DimensionError("write_pgm16: channel out of range");
  if (!(peak > 0.0)) throw ConfigError("write_pgm16: peak must be positive");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("write_pgm16: cannot open " + path);

  const double scale = peak / 65535.0;
  char header[160];
  // Sample bytes are little-endian u16; value = sample * scale.
  std::snprintf(header, sizeof header,
                "P5\n# tsr16le scale=%.17g\n%d %d\n65535\n", scale, img.width,
                img.height);
  out.write(header, std::streamsize(std::strlen(header)));

  std::vector<unsigned char> row(size_t(img.width) * 2);
  for (int i = 0; i < img.height; ++i) {
    for (int j = 0; j < img.width; ++j) {
      double v = img.at(i, j, channel) / scale;
      if (v < 0.0) v = 0.0;
      if (v > 65535.0) v = 65535.0;
      const auto q = uint16_t(std::lround(v));
      row[size_t(j) * 2] = (unsigned char)(q & 0xff);
      row[size_t(j) * 2 + 1] = (unsigned char)(q >> 8);
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              std::streamsize(row.size()));
  }
  if (!out) throw IoError("write_pgm16: short write to " + path);
}

ImageTensor read_pgm16(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("read_pgm16: cannot open " + path);

  std::string magic;
  in >> magic;
  if (magic != "P5") throw IoError("read_pgm16: not a P5 file: " + path);

  double scale = 1.0 / 65535.0;
  auto skip_ws_and_comments = [&]() {
    for (;;) {
      int c = in.peek();
      if (c == '#') {
        std::string line;
        std::getline(in, line);
        double s = 0.0;
        if (std::sscanf(line.c_str(), "# tsr16le scale=%lg", &s) == 1 &&
            s > 0.0)
          scale = s;
      } else if (std::isspace(c)) {
        in.get();
      } else {
        break;
      }
    }
  };

  skip_ws_and_comments();
  int w = 0, h = 0, maxval = 0;
  in >> w;
  skip_ws_and_comments();
  in >> h;
  skip_ws_and_comments();
  in >> maxval;
  in.get(); // single whitespace before raster
  if (w <= 0 || h <= 0 || maxval != 65535)
    throw IoError("read_pgm16: bad header in " + path);

  ImageTensor img(h, w, 1);
  std::vector<unsigned char> row(size_t(w) * 2);
  for (int i = 0; i < h; ++i) {
    in.read(reinterpret_cast<char*>(row.data()), std::streamsize(row.size()));
    if (!in) throw IoError("read_pgm16: truncated raster in " + path);
    for (int j = 0; j < w; ++j) {
      const uint16_t q =
          uint16_t(row[size_t(j) * 2] | (row[size_t(j) * 2 + 1] << 8));
      img.at(i, j, 0) = double(q) * scale;
    }
  }
  return img;
}

} // namespace tsr
