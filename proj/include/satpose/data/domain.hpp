#pragma once

#include <cstdint>
#include <string>

namespace satpose {

// Rendering-condition ranges for one image domain. The two *_like target
// domains are deliberately offset from `source` (flat bright lab lighting vs
// harsh directional lamp) so a source-trained model sees a real shift.
struct DomainParams {
  std::string name = "source";

  double light_theta_min_deg = 0;  // polar angle of the light direction from the camera axis
  double light_theta_max_deg = 70;
  double ambient_min = 0.10, ambient_max = 0.25;
  double diffuse_min = 0.50, diffuse_max = 0.90;
  double specular_min = 0.10, specular_max = 0.40;
  double shininess = 24;

  double background_min = 2, background_max = 15;  // 8-bit levels
  double background_gradient = 10;
  double background_noise_sigma = 2.0;
  double sensor_noise_sigma = 2.5;
  double flare_probability = 0.10;

  bool texture_randomize = true;   // per-sample albedo patterns (style stand-in)
  std::uint64_t texture_seed = 7;  // fixed pattern when not randomizing

  static DomainParams source();
  static DomainParams lightbox_like();
  static DomainParams sunlamp_like();
  static DomainParams by_name(const std::string& name);  // throws ConfigError
};

}  // namespace satpose
