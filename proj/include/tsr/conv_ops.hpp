#pragma once

#include <cstddef>

namespace tsr {

/// Low-level convolution primitives on planar (channel, row, column)
/// buffers. All backward functions accumulate into their gradient outputs;
/// callers zero the buffers once per accumulation scope. Passing nullptr
/// for a gradient output skips that computation.

/// 2-D convolution, odd kernel k, same zero padding (k-1)/2, stride 1 or 2.
/// x: [in_c][h][w]; weight: [out_c][in_c][k][k]; bias: [out_c] (may be
/// nullptr for no bias); out: [out_c][oh][ow] with oh = (h-1)/stride + 1.
void conv_forward(const double* x, int in_c, int h, int w,
                  const double* weight, const double* bias, int out_c, int k,
                  int stride, double* out);

void conv_backward(const double* x, int in_c, int h, int w,
                   const double* weight, int out_c, int k, int stride,
                   const double* gout, double* gx, double* gweight,
                   double* gbias);

/// Transposed convolution, kernel 4, stride 2, padding 1: doubles the
/// spatial size. weight: [in_c][out_c][4][4]; out: [out_c][2h][2w].
void convt_forward(const double* x, int in_c, int h, int w,
                   const double* weight, const double* bias, int out_c,
                   double* out);

void convt_backward(const double* x, int in_c, int h, int w,
                    const double* weight, int out_c, const double* gout,
                    double* gx, double* gweight, double* gbias);

/// 2x2 max pooling, stride 2; h and w must be even. argmax records the flat
/// input-plane index of each selected element (ties go to the first element
/// in row-major scan order).
void maxpool_forward(const double* x, int c, int h, int w, double* out,
                     int* argmax);

void maxpool_backward(const double* gout, int c, int h, int w,
                      const int* argmax, double* gx);

/// Nearest-neighbor 2x upsampling; out: [c][2h][2w].
void upsample2_forward(const double* x, int c, int h, int w, double* out);

void upsample2_backward(const double* gout, int c, int h, int w, double* gx);

void relu_forward(const double* x, size_t n, double* out);

/// gx += gout where the forward input was positive.
void relu_backward(const double* x, const double* gout, size_t n, double* gx);

} // namespace tsr
