#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tsr/error.hpp"

namespace tsr {

/// Dense H x W x C raster, row-major in (i, j, c) order.
///
/// Used for inputs, targets, predictions and gradients alike. HDR ground
/// truth lives in [0, ymax], saturated inputs in [0, 1]; gradients are
/// unbounded. All values must stay finite.
struct ImageTensor {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> data;

  ImageTensor() = default;
  ImageTensor(int h, int w, int c, double fill = 0.0)
      : height(h), width(w), channels(c) {
    if (h <= 0 || w <= 0 || c <= 0) {
      throw DimensionError("image tensor: non-positive dimension");
    }
    data.assign(size_t(h) * size_t(w) * size_t(c), fill);
  }

  double& at(int i, int j, int c) {
    return data[(size_t(i) * width + j) * channels + c];
  }
  double at(int i, int j, int c) const {
    return data[(size_t(i) * width + j) * channels + c];
  }

  size_t size() const { return data.size(); }

  bool same_shape(const ImageTensor& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
};

/// Throws DimensionError unless the shape invariant holds and every value
/// is finite.
void validate(const ImageTensor& t, const char* what);

/// Mean over all elements of the squared difference. The shared distance
/// convention for every loss in this project (resolution independent, so
/// blend weights mean the same thing at any patch size).
double mean_square_diff(const ImageTensor& a, const ImageTensor& b);

double mean_square_diff(const std::vector<double>& a,
                        const std::vector<double>& b);

/// Debug dump: one 16-bit binary PGM per call, little-endian sample bytes.
/// Values are scaled by 65535/peak; the scale is recorded in a header
/// comment so read_pgm16 can undo it.
void write_pgm16(const std::string& path, const ImageTensor& img, int channel,
                 double peak);

/// Reads a PGM written by write_pgm16; returns a single-channel tensor with
/// values mapped back to [0, peak].
ImageTensor read_pgm16(const std::string& path);

} // namespace tsr
