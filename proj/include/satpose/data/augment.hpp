#pragma once

#include "satpose/data/dataset.hpp"
#include "satpose/util/rng.hpp"

namespace satpose {

// Photometric/occlusion augmentations; labels are never touched. Random
// erase and sun flare are clipped to the target's bounding box.
struct AugmentConfig {
  bool brightness_contrast = true;
  bool random_erase = true;
  bool sun_flare = true;
  bool blur = true;
  bool noise = true;
  double probability = 0.5;  // independent coin per augmentation

  static AugmentConfig all_off() { return {false, false, false, false, false, 0.5}; }
  static AugmentConfig baseline() { return {true, false, false, true, true, 0.5}; }
};

enum class BlurKind { Motion, Median, Gaussian };
enum class NoiseKind { Gaussian, Speckle };

struct AugmentApplied {
  bool brightness_contrast = false;
  bool random_erase = false;
  bool sun_flare = false;
  bool blur = false;
  bool noise = false;
  BlurKind blur_kind = BlurKind::Motion;
  NoiseKind noise_kind = NoiseKind::Gaussian;
};

AugmentApplied augment(Sample& sample, Rng& rng, const AugmentConfig& cfg);

}  // namespace satpose
