#include "tsr/procgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "tsr/error.hpp"
#include "tsr/rng.hpp"

namespace fs = std::filesystem;

namespace tsr {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;
constexpr double kBackgroundCeil = 0.35;
constexpr uint64_t kTrainStream = 1;
constexpr uint64_t kTestStream = 2;

struct Feature {
  int kind = 0; // 0 disk, 1 rectangle
  double r = 0.0, rx = 0.0, ry = 0.0;
  double peak = 0.0;
  double c0i = 0.0, c0j = 0.0;
  double lo_i = 0.0, hi_i = 0.0, lo_j = 0.0, hi_j = 0.0;
  double vi = 0.0, vj = 0.0;
  double amp_i = 0.0, amp_j = 0.0;
  double om_i = 0.0, om_j = 0.0;
  double ph_i = 0.0, ph_j = 0.0;
};

struct Beam {
  int orient = 0; // 0: varies along rows, 1: along columns
  double pos = 0.0;
  double halfw = 0.0;
  double value = 0.0;
};

struct Scene {
  double b0 = 0.0, grad_amp = 0.0, grad_theta = 0.0;
  double sin_amp = 0.0, sin_freq = 0.0, ph_bi = 0.0, ph_bj = 0.0;
  std::vector<Feature> features;
  std::vector<Beam> beams;
};

int draw_count(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.below(static_cast<uint64_t>(hi - lo + 1)));
}

// Triangle-wave reflection of u into [lo, hi]; 1-Lipschitz, so per-frame
// displacement never exceeds the unfolded step.
double fold(double u, double lo, double hi) {
  const double range = hi - lo;
  if (range <= 0.0) return 0.5 * (lo + hi);
  const double period = 2.0 * range;
  double tau = std::fmod(u - lo, period);
  if (tau < 0.0) tau += period;
  return tau <= range ? lo + tau : hi - (tau - range);
}

double feature_center_i(const Feature& f, double t) {
  return fold(f.c0i + f.vi * t + f.amp_i * std::sin(f.om_i * t + f.ph_i),
              f.lo_i, f.hi_i);
}

double feature_center_j(const Feature& f, double t) {
  return fold(f.c0j + f.vj * t + f.amp_j * std::sin(f.om_j * t + f.ph_j),
              f.lo_j, f.hi_j);
}

// All scene randomness is drawn here, in one fixed order; rendering a frame
// consumes no randomness at all.
Scene make_scene(const SceneSpec& spec, Rng& rng) {
  Scene sc;
  const double s = static_cast<double>(spec.image_size);
  sc.b0 = rng.uniform(0.05, 0.25);
  sc.grad_theta = rng.uniform(0.0, kTwoPi);
  sc.grad_amp = rng.uniform(0.0, 0.10);
  sc.sin_amp = rng.uniform(0.0, 0.08);
  sc.sin_freq = rng.uniform(0.5, 2.0);
  sc.ph_bi = rng.uniform(0.0, kTwoPi);
  sc.ph_bj = rng.uniform(0.0, kTwoPi);

  const int n_feat =
      draw_count(rng, spec.feature_count_min, spec.feature_count_max);
  const double vmax = spec.max_speed / std::sqrt(2.0);
  sc.features.reserve(n_feat);
  for (int fi = 0; fi < n_feat; ++fi) {
    Feature f;
    f.kind = static_cast<int>(rng.below(2));
    double extent_i, extent_j;
    if (f.kind == 0) {
      f.r = rng.uniform(spec.radius_frac_min, spec.radius_frac_max) * s;
      extent_i = extent_j = f.r;
    } else {
      f.rx = rng.uniform(spec.radius_frac_min, spec.radius_frac_max) * s;
      f.ry = rng.uniform(spec.radius_frac_min, spec.radius_frac_max) * s;
      extent_i = f.rx;
      extent_j = f.ry;
    }
    f.peak = rng.uniform(spec.peak_min, spec.peak_max);
    f.lo_i = extent_i;
    f.hi_i = s - 1.0 - extent_i;
    f.lo_j = extent_j;
    f.hi_j = s - 1.0 - extent_j;
    if (f.lo_i <= f.hi_i) {
      f.c0i = rng.uniform(f.lo_i, f.hi_i);
    } else {
      rng.uniform(0.0, 1.0);
      f.c0i = 0.5 * (s - 1.0);
    }
    if (f.lo_j <= f.hi_j) {
      f.c0j = rng.uniform(f.lo_j, f.hi_j);
    } else {
      rng.uniform(0.0, 1.0);
      f.c0j = 0.5 * (s - 1.0);
    }
    // Per-axis budget vmax so the Euclidean step stays within max_speed;
    // |d/dt sin| <= omega bounds the oscillation's per-frame share.
    for (int axis = 0; axis < 2; ++axis) {
      const double sign = rng.below(2) == 0 ? 1.0 : -1.0;
      const double speed = rng.uniform(0.2, 0.6) * vmax;
      const double omega = rng.uniform(0.2, 1.0);
      const double amp = rng.uniform(0.5, 1.0) * (vmax - speed) / omega;
      const double phase = rng.uniform(0.0, kTwoPi);
      if (axis == 0) {
        f.vi = sign * speed;
        f.amp_i = amp;
        f.om_i = omega;
        f.ph_i = phase;
      } else {
        f.vj = sign * speed;
        f.amp_j = amp;
        f.om_j = omega;
        f.ph_j = phase;
      }
    }
    sc.features.push_back(f);
  }

  const int n_beam = draw_count(rng, spec.beam_count_min, spec.beam_count_max);
  sc.beams.reserve(n_beam);
  for (int bi = 0; bi < n_beam; ++bi) {
    Beam b;
    b.orient = static_cast<int>(rng.below(2));
    b.pos = rng.uniform(0.0, s - 1.0);
    b.halfw =
        0.5 * rng.uniform(spec.beam_width_frac_min, spec.beam_width_frac_max) *
        s;
    b.value = rng.uniform(0.05, 0.30);
    sc.beams.push_back(b);
  }

  // Saturated pixels are promised whenever the peak range reaches above 1.
  if (spec.peak_max > 1.0 && !sc.features.empty()) {
    bool any = false;
    for (const Feature& f : sc.features) any = any || f.peak > 1.0;
    if (!any) {
      const double lo = std::max(spec.peak_min, 1.0 + 0.05 * (spec.peak_max - 1.0));
      sc.features[0].peak = rng.uniform(std::min(lo, spec.peak_max), spec.peak_max);
    }
  }
  return sc;
}

double coverage(double signed_dist) {
  const double c = 0.5 - signed_dist;
  if (c <= 0.0) return 0.0;
  if (c >= 1.0) return 1.0;
  return c;
}

ImageTensor render(const Scene& sc, const SceneSpec& spec, double t) {
  const int n = spec.image_size;
  const double s = static_cast<double>(n);
  ImageTensor y(n, n, 1);

  std::vector<double> ci(sc.features.size()), cj(sc.features.size());
  for (size_t k = 0; k < sc.features.size(); ++k) {
    ci[k] = feature_center_i(sc.features[k], t);
    cj[k] = feature_center_j(sc.features[k], t);
  }

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double bg =
          sc.b0 +
          sc.grad_amp * ((i * std::cos(sc.grad_theta) +
                          j * std::sin(sc.grad_theta)) /
                         s) +
          sc.sin_amp * std::sin(kTwoPi * sc.sin_freq * i / s + sc.ph_bi) *
              std::sin(kTwoPi * sc.sin_freq * j / s + sc.ph_bj);
      double v = std::clamp(bg, 0.0, kBackgroundCeil);
      for (size_t k = 0; k < sc.features.size(); ++k) {
        const Feature& f = sc.features[k];
        double sd;
        if (f.kind == 0) {
          sd = std::hypot(i - ci[k], j - cj[k]) - f.r;
        } else {
          sd = std::max(std::fabs(i - ci[k]) - f.rx,
                        std::fabs(j - cj[k]) - f.ry);
        }
        const double cov = coverage(sd);
        if (cov > 0.0) v += cov * (f.peak - v);
      }
      for (const Beam& b : sc.beams) {
        const double d =
            (b.orient == 0 ? std::fabs(i - b.pos) : std::fabs(j - b.pos)) -
            b.halfw;
        const double cov = coverage(d);
        if (cov > 0.0) v += cov * (b.value - v);
      }
      y.at(i, j, 0) = std::clamp(v, 0.0, spec.ymax);
    }
  }
  return y;
}

FramePair frame_from_truth(ImageTensor y) {
  FramePair p;
  p.x = ImageTensor(y.height, y.width, y.channels);
  p.mask = ImageTensor(y.height, y.width, y.channels);
  for (size_t i = 0; i < y.data.size(); ++i) {
    p.x.data[i] = std::clamp(y.data[i], 0.0, 1.0);
    p.mask.data[i] = y.data[i] > 1.0 ? 1.0 : 0.0;
  }
  p.y = std::move(y);
  return p;
}

} // namespace

void validate(const SceneSpec& spec) {
  if (spec.image_size < 4) {
    throw ConfigError("scene: image size too small");
  }
  if (spec.ymax < 1.0) throw ConfigError("scene: ymax must be >= 1");
  if (spec.feature_count_min < 0 ||
      spec.feature_count_min > spec.feature_count_max) {
    throw ConfigError("scene: invalid feature count range");
  }
  if (!(spec.radius_frac_min > 0.0 &&
        spec.radius_frac_min <= spec.radius_frac_max &&
        spec.radius_frac_max <= 0.5)) {
    throw ConfigError("scene: invalid radius fraction range");
  }
  if (!(spec.peak_min > 0.0 && spec.peak_min <= spec.peak_max &&
        spec.peak_max <= spec.ymax)) {
    throw ConfigError("scene: invalid peak range");
  }
  if (spec.beam_count_min < 0 || spec.beam_count_min > spec.beam_count_max) {
    throw ConfigError("scene: invalid beam count range");
  }
  if (!(spec.beam_width_frac_min > 0.0 &&
        spec.beam_width_frac_min <= spec.beam_width_frac_max &&
        spec.beam_width_frac_max <= 0.5)) {
    throw ConfigError("scene: invalid beam width range");
  }
  if (spec.max_speed < 0.0) throw ConfigError("scene: negative max speed");
  if (!(spec.frame_rate > 0.0)) throw ConfigError("scene: frame rate must be positive");
}

std::vector<FramePair> generate_training_set(const SceneSpec& spec,
                                             int count) {
  validate(spec);
  if (count < 0) throw ConfigError("training set: negative count");
  std::vector<FramePair> out;
  out.reserve(count);
  const uint64_t base = Rng::derive(spec.seed, kTrainStream);
  for (int i = 0; i < count; ++i) {
    Rng rng(Rng::derive(base, static_cast<uint64_t>(i)));
    const Scene sc = make_scene(spec, rng);
    out.push_back(frame_from_truth(render(sc, spec, 0.0)));
  }
  return out;
}

SequenceSet generate_test_sequences(const SceneSpec& spec, int sequences,
                                    int frames) {
  validate(spec);
  if (sequences < 1 || frames < 2) {
    throw ConfigError("test set: need >= 1 sequence and >= 2 frames");
  }
  SequenceSet set;
  set.frame_rate = spec.frame_rate;
  set.sequences.resize(sequences);
  const uint64_t base = Rng::derive(spec.seed, kTestStream);
  for (int s = 0; s < sequences; ++s) {
    Rng rng(Rng::derive(base, static_cast<uint64_t>(s)));
    const Scene sc = make_scene(spec, rng);
    auto& seq = set.sequences[s];
    seq.reserve(frames);
    for (int t = 0; t < frames; ++t) {
      seq.push_back(frame_from_truth(render(sc, spec, static_cast<double>(t))));
    }
  }
  return set;
}

std::vector<FeatureTrack> feature_tracks(const SceneSpec& spec,
                                         int sequence_index, int frames) {
  validate(spec);
  Rng rng(Rng::derive(Rng::derive(spec.seed, kTestStream),
                      static_cast<uint64_t>(sequence_index)));
  const Scene sc = make_scene(spec, rng);
  std::vector<FeatureTrack> tracks(sc.features.size());
  for (size_t k = 0; k < sc.features.size(); ++k) {
    tracks[k].ci.resize(frames);
    tracks[k].cj.resize(frames);
    for (int t = 0; t < frames; ++t) {
      tracks[k].ci[t] = feature_center_i(sc.features[k], t);
      tracks[k].cj[t] = feature_center_j(sc.features[k], t);
    }
  }
  return tracks;
}

void dump_dataset(const std::string& dir, const SequenceSet& set,
                  double ymax) {
  fs::create_directories(dir);
  std::ofstream manifest(fs::path(dir) / "manifest.txt", std::ios::trunc);
  if (!manifest) throw IoError("dataset dump: cannot write manifest in " + dir);
  char line[512];
  std::snprintf(line, sizeof(line),
                "# tsr-dataset v1\n# frame_rate %.17g\n# ymax %.17g\n",
                set.frame_rate, ymax);
  manifest << line;
  for (size_t s = 0; s < set.sequences.size(); ++s) {
    for (size_t f = 0; f < set.sequences[s].size(); ++f) {
      const FramePair& fp = set.sequences[s][f];
      if (fp.y.channels != 1) {
        throw UsageError("dataset dump: only single-channel frames supported");
      }
      char xn[64], yn[64], mn[64];
      std::snprintf(xn, sizeof(xn), "s%03zu_f%04zu_x.pgm", s, f);
      std::snprintf(yn, sizeof(yn), "s%03zu_f%04zu_y.pgm", s, f);
      std::snprintf(mn, sizeof(mn), "s%03zu_f%04zu_mask.pgm", s, f);
      write_pgm16((fs::path(dir) / xn).string(), fp.x, 0, 1.0);
      write_pgm16((fs::path(dir) / yn).string(), fp.y, 0, ymax);
      write_pgm16((fs::path(dir) / mn).string(), fp.mask, 0, 1.0);
      std::snprintf(line, sizeof(line), "%zu %zu %s %s %s\n", s, f, xn, yn,
                    mn);
      manifest << line;
    }
  }
  if (!manifest) throw IoError("dataset dump: manifest write failed");
}

LoadedDataset load_dataset(const std::string& dir) {
  std::ifstream manifest(fs::path(dir) / "manifest.txt");
  if (!manifest) throw IoError("dataset load: no manifest in " + dir);
  LoadedDataset out;
  out.set.frame_rate = 25.0;
  out.ymax = 0.0;
  std::map<long, std::map<long, FramePair>> table;
  std::string line;
  long lineno = 0;
  while (std::getline(manifest, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string key;
      hs >> key;
      if (key == "frame_rate") hs >> out.set.frame_rate;
      if (key == "ymax") hs >> out.ymax;
      continue;
    }
    std::istringstream ls(line);
    long s = -1, f = -1;
    std::string xn, yn, mn;
    if (!(ls >> s >> f >> xn >> yn >> mn) || s < 0 || f < 0) {
      throw IoError("dataset load: malformed manifest line " +
                    std::to_string(lineno));
    }
    FramePair fp;
    fp.x = read_pgm16((fs::path(dir) / xn).string());
    fp.y = read_pgm16((fs::path(dir) / yn).string());
    fp.mask = read_pgm16((fs::path(dir) / mn).string());
    for (double& v : fp.mask.data) v = v > 0.5 ? 1.0 : 0.0;
    table[s][f] = std::move(fp);
  }
  if (table.empty()) throw IoError("dataset load: empty manifest in " + dir);
  if (out.ymax <= 0.0) throw IoError("dataset load: manifest lacks ymax");
  long expect_s = 0;
  for (auto& [s, frames] : table) {
    if (s != expect_s++) throw IoError("dataset load: sequence ids not dense");
    std::vector<FramePair> seq;
    long expect_f = 0;
    for (auto& [f, fp] : frames) {
      if (f != expect_f++) throw IoError("dataset load: frame ids not dense");
      seq.push_back(std::move(fp));
    }
    out.set.sequences.push_back(std::move(seq));
  }
  return out;
}

} // namespace tsr
