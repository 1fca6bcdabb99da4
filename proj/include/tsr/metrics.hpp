#pragma once

#include <vector>

#include "tsr/tensor.hpp"

namespace tsr {

/// Discrete temporal Gaussian, sigma given in seconds and converted to
/// frames via the frame rate, truncated at +-3 sigma and normalized to
/// sum 1. Subtracting its output from the signal is the high-pass whose
/// energy defines the smoothness measure.
struct TemporalFilter {
  double sigma_seconds = 0.15;
  double frame_rate = 25.0;
  int radius = 0;
  std::vector<double> kernel;
};

TemporalFilter make_temporal_filter(double sigma_seconds, double frame_rate);

/// Per-pixel-per-frame high-pass energy D = |v - (G * v)|^2, temporal
/// convolution with reflect padding. With masks supplied (one per frame,
/// same shape), energy outside the mask is zeroed. Throws DimensionError
/// when the sequence is shorter than the kernel support.
std::vector<ImageTensor> highpass_energy(
    const std::vector<ImageTensor>& frames, const TemporalFilter& filt,
    const std::vector<ImageTensor>* masks = nullptr);

/// S = sqrt(sum D(ref) / sum D(rec)). A perfectly static reconstruction of
/// a moving truth gives +infinity; two static sequences give 1 by
/// convention. S < 1 means the reconstruction flickers more than the
/// truth, S > 1 that it is smoother.
double smoothness(const std::vector<ImageTensor>& ref,
                  const std::vector<ImageTensor>& rec,
                  const TemporalFilter& filt,
                  const std::vector<ImageTensor>* masks = nullptr);

/// The two energy sums behind S, exposed so multi-sequence aggregates can
/// pool energies instead of averaging ratios.
void smoothness_sums(const std::vector<ImageTensor>& ref,
                     const std::vector<ImageTensor>& rec,
                     const TemporalFilter& filt,
                     const std::vector<ImageTensor>* masks, double& sum_ref,
                     double& sum_rec);

/// 10 log10(peak^2 / MSE) pooled over all frames; masked pixels only when
/// masks are given. Identical inputs give +infinity; a mask selecting
/// nothing is an error.
double psnr(const std::vector<ImageTensor>& ref,
            const std::vector<ImageTensor>& rec, double peak,
            const std::vector<ImageTensor>* masks = nullptr);

/// Number of elements a mask sequence selects.
unsigned long long masked_count(const std::vector<ImageTensor>& masks);

/// Scores for one evaluated sequence. A sequence whose masks select no
/// pixel at all reports NaN scores and is excluded from aggregates.
struct SequenceScore {
  double psnr_db = 0.0;
  double smoothness = 0.0;
  unsigned long long masked_pixels = 0;
};

/// Aggregate over a set of sequences. Squared error and temporal energies
/// are pooled across sequences before forming PSNR and S, so sequences
/// with more masked pixels weigh proportionally more.
struct MetricReport {
  double psnr_db = 0.0;
  double smoothness = 0.0;
  unsigned long long masked_pixels = 0;
  std::vector<SequenceScore> per_sequence;
};

} // namespace tsr
