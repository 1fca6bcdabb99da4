#include "tsr/metrics.hpp"

#include <cmath>
#include <limits>

#include "tsr/error.hpp"

namespace tsr {

namespace {

void check_sequence(const std::vector<ImageTensor>& frames,
                    const char* what) {
  if (frames.empty()) throw DimensionError(std::string(what) + ": empty sequence");
  for (const ImageTensor& f : frames) {
    validate(f, what);
    if (!f.same_shape(frames.front())) {
      throw DimensionError(std::string(what) + ": frame shapes differ");
    }
  }
}

// Half-sample reflection: index -1 maps to 0, F maps to F-1. The kernel
// support never exceeds the sequence (checked by the caller), so one
// reflection suffices.
int reflect(int t, int n) {
  if (t < 0) return -t - 1;
  if (t >= n) return 2 * n - t - 1;
  return t;
}

} // namespace

TemporalFilter make_temporal_filter(double sigma_seconds, double frame_rate) {
  if (!(sigma_seconds > 0.0) || !(frame_rate > 0.0)) {
    throw ConfigError("temporal filter: sigma and frame rate must be positive");
  }
  TemporalFilter f;
  f.sigma_seconds = sigma_seconds;
  f.frame_rate = frame_rate;
  const double sigma_frames = sigma_seconds * frame_rate;
  f.radius = static_cast<int>(std::ceil(3.0 * sigma_frames));
  f.kernel.resize(2 * f.radius + 1);
  double sum = 0.0;
  for (int k = -f.radius; k <= f.radius; ++k) {
    const double v = std::exp(-0.5 * (k / sigma_frames) * (k / sigma_frames));
    f.kernel[k + f.radius] = v;
    sum += v;
  }
  for (double& v : f.kernel) v /= sum;
  return f;
}

std::vector<ImageTensor> highpass_energy(
    const std::vector<ImageTensor>& frames, const TemporalFilter& filt,
    const std::vector<ImageTensor>* masks) {
  check_sequence(frames, "highpass_energy");
  const int n = static_cast<int>(frames.size());
  const int support = 2 * filt.radius + 1;
  if (n < support) {
    throw DimensionError("highpass_energy: sequence shorter than the filter");
  }
  if (masks) {
    if (static_cast<int>(masks->size()) != n) {
      throw DimensionError("highpass_energy: mask count mismatch");
    }
    for (const ImageTensor& m : *masks) {
      if (!m.same_shape(frames.front())) {
        throw DimensionError("highpass_energy: mask shape mismatch");
      }
    }
  }

  const size_t npix = frames.front().data.size();
  std::vector<ImageTensor> energy(n);
  std::vector<double> diff(npix);
  for (int t = 0; t < n; ++t) {
    std::fill(diff.begin(), diff.end(), 0.0);
    // Residual in difference form sum_k g_k (v_t - v_{t+k}); static inputs
    // cancel exactly instead of leaving kernel-normalization dust.
    const std::vector<double>& v = frames[t].data;
    for (int k = -filt.radius; k <= filt.radius; ++k) {
      if (k == 0) continue;
      const double g = filt.kernel[k + filt.radius];
      const std::vector<double>& src = frames[reflect(t + k, n)].data;
      for (size_t i = 0; i < npix; ++i) diff[i] += g * (v[i] - src[i]);
    }
    ImageTensor e(frames[t].height, frames[t].width, frames[t].channels);
    for (size_t i = 0; i < npix; ++i) {
      e.data[i] = diff[i] * diff[i];
    }
    if (masks) {
      const std::vector<double>& m = (*masks)[t].data;
      for (size_t i = 0; i < npix; ++i) {
        if (m[i] == 0.0) e.data[i] = 0.0;
      }
    }
    energy[t] = std::move(e);
  }
  return energy;
}

void smoothness_sums(const std::vector<ImageTensor>& ref,
                     const std::vector<ImageTensor>& rec,
                     const TemporalFilter& filt,
                     const std::vector<ImageTensor>* masks, double& sum_ref,
                     double& sum_rec) {
  check_sequence(ref, "smoothness");
  check_sequence(rec, "smoothness");
  if (ref.size() != rec.size() || !ref.front().same_shape(rec.front())) {
    throw DimensionError("smoothness: sequences do not match");
  }
  const std::vector<ImageTensor> d_ref = highpass_energy(ref, filt, masks);
  const std::vector<ImageTensor> d_rec = highpass_energy(rec, filt, masks);
  sum_ref = 0.0;
  sum_rec = 0.0;
  for (const ImageTensor& e : d_ref) {
    for (double v : e.data) sum_ref += v;
  }
  for (const ImageTensor& e : d_rec) {
    for (double v : e.data) sum_rec += v;
  }
}

double smoothness(const std::vector<ImageTensor>& ref,
                  const std::vector<ImageTensor>& rec,
                  const TemporalFilter& filt,
                  const std::vector<ImageTensor>* masks) {
  double sum_ref = 0.0, sum_rec = 0.0;
  smoothness_sums(ref, rec, filt, masks, sum_ref, sum_rec);
  if (sum_rec == 0.0) {
    return sum_ref == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  }
  return std::sqrt(sum_ref / sum_rec);
}

double psnr(const std::vector<ImageTensor>& ref,
            const std::vector<ImageTensor>& rec, double peak,
            const std::vector<ImageTensor>* masks) {
  check_sequence(ref, "psnr");
  check_sequence(rec, "psnr");
  if (ref.size() != rec.size() || !ref.front().same_shape(rec.front())) {
    throw DimensionError("psnr: sequences do not match");
  }
  if (!(peak > 0.0)) throw ConfigError("psnr: peak must be positive");
  if (masks && masks->size() != ref.size()) {
    throw DimensionError("psnr: mask count mismatch");
  }
  double acc = 0.0;
  unsigned long long count = 0;
  for (size_t t = 0; t < ref.size(); ++t) {
    const std::vector<double>& a = ref[t].data;
    const std::vector<double>& b = rec[t].data;
    const double* m = masks ? (*masks)[t].data.data() : nullptr;
    for (size_t i = 0; i < a.size(); ++i) {
      if (m && m[i] == 0.0) continue;
      const double d = a[i] - b[i];
      acc += d * d;
      ++count;
    }
  }
  if (count == 0) throw UsageError("psnr: mask selects no pixels");
  const double mse = acc / static_cast<double>(count);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

unsigned long long masked_count(const std::vector<ImageTensor>& masks) {
  unsigned long long count = 0;
  for (const ImageTensor& m : masks) {
    for (double v : m.data) {
      if (v != 0.0) ++count;
    }
  }
  return count;
}

} // namespace tsr
