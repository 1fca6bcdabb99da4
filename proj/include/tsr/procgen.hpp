#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tsr/tensor.hpp"

namespace tsr {

/// Seeded description of the synthetic HDR scenes: a dim smooth background,
/// a handful of bright disk/rectangle features whose peaks exceed the
/// saturation level, and narrow dark beams that occlude them. Test
/// sequences move the features along linear + sinusoidal trajectories
/// folded back at the image margins; beams stay static within a sequence.
struct SceneSpec {
  uint64_t seed = 1234;
  int image_size = 32;
  double ymax = 4.0;
  int feature_count_min = 3;
  int feature_count_max = 6;
  double radius_frac_min = 0.08;
  double radius_frac_max = 0.16;
  double peak_min = 1.2;
  double peak_max = 4.0;
  int beam_count_min = 0;
  int beam_count_max = 2;
  double beam_width_frac_min = 0.04;
  double beam_width_frac_max = 0.10;
  double max_speed = 2.0;
  double frame_rate = 25.0;
};

void validate(const SceneSpec& spec);

/// HDR truth y in [0, ymax], input x = clamp(y, 0, 1), mask = (y > 1).
struct FramePair {
  ImageTensor y;
  ImageTensor x;
  ImageTensor mask;
};

struct SequenceSet {
  std::vector<std::vector<FramePair>> sequences;
  double frame_rate = 25.0;
};

/// count independent static scenes (scene i is fully determined by
/// spec.seed and i). When the configured peak range admits values above 1,
/// every scene is guaranteed at least one feature brighter than 1.
std::vector<FramePair> generate_training_set(const SceneSpec& spec, int count);

/// sequences x frames moving scenes; per-frame feature-center displacement
/// is bounded by spec.max_speed (Euclidean, pixels).
SequenceSet generate_test_sequences(const SceneSpec& spec, int sequences,
                                    int frames);

/// Folded feature-center positions for one test sequence, frame by frame;
/// lets tests verify motion bounds without touching the renderer.
struct FeatureTrack {
  std::vector<double> ci;
  std::vector<double> cj;
};

std::vector<FeatureTrack> feature_tracks(const SceneSpec& spec,
                                         int sequence_index, int frames);

/// On-disk dump: 16-bit PGM triplets plus a manifest with one line per
/// frame (sequence id, frame index, x/y/mask file names). y values are
/// scaled against ymax, x and mask against 1. Quantization to 16 bits is
/// lossy; the in-memory generators remain the exact reference.
void dump_dataset(const std::string& dir, const SequenceSet& set,
                  double ymax);

struct LoadedDataset {
  SequenceSet set;
  double ymax = 0.0;
};

LoadedDataset load_dataset(const std::string& dir);

} // namespace tsr
