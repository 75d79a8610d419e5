#include "satpose/data/augment.hpp"

#include <algorithm>
#include <cmath>

namespace satpose {

namespace {

std::uint8_t clamp_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

struct PixelRect {
  int x0, y0, x1, y1;  // half-open
  bool empty() const { return x1 <= x0 || y1 <= y0; }
};

PixelRect bbox_rect(const Sample& s) {
  PixelRect r;
  r.x0 = std::max(0, static_cast<int>(std::floor(s.bbox[0])));
  r.y0 = std::max(0, static_cast<int>(std::floor(s.bbox[1])));
  r.x1 = std::min(s.image.width, static_cast<int>(std::ceil(s.bbox[2])));
  r.y1 = std::min(s.image.height, static_cast<int>(std::ceil(s.bbox[3])));
  return r;
}

void apply_brightness_contrast(Image8& img, Rng& rng) {
  const double alpha = rng.uniform(0.65, 1.45);
  const double beta = rng.uniform(-35.0, 35.0);
  for (auto& px : img.pixels) px = clamp_u8(alpha * (px - 128.0) + 128.0 + beta);
}

void apply_random_erase(Image8& img, const PixelRect& box, Rng& rng) {
  if (box.empty()) return;
  const int bw = box.x1 - box.x0, bh = box.y1 - box.y0;
  const int count = rng.uniform_int(1, 3);
  for (int k = 0; k < count; ++k) {
    const int w = std::max(1, static_cast<int>(rng.uniform(0.15, 0.5) * bw));
    const int h = std::max(1, static_cast<int>(rng.uniform(0.15, 0.5) * bh));
    const int x = box.x0 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(std::max(1, bw - w + 1))));
    const int y = box.y0 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(std::max(1, bh - h + 1))));
    const bool noisy = rng.coin(0.5);
    const std::uint8_t fill = static_cast<std::uint8_t>(rng.uniform_index(256));
    for (int yy = y; yy < std::min(y + h, box.y1); ++yy) {
      for (int xx = x; xx < std::min(x + w, box.x1); ++xx) {
        img.at(xx, yy) = noisy ? static_cast<std::uint8_t>(rng.uniform_index(256)) : fill;
      }
    }
  }
}

void apply_sun_flare(Image8& img, const PixelRect& box, Rng& rng) {
  if (box.empty()) return;
  const double cx = rng.uniform(box.x0, box.x1);
  const double cy = rng.uniform(box.y0, box.y1);
  const double radius = rng.uniform(0.25, 0.8) * std::max(box.x1 - box.x0, box.y1 - box.y0);
  const double amp = rng.uniform(80.0, 200.0);
  for (int y = box.y0; y < box.y1; ++y) {
    for (int x = box.x0; x < box.x1; ++x) {
      const double d = std::hypot(x + 0.5 - cx, y + 0.5 - cy);
      if (d < radius) {
        const double f = 1.0 - d / radius;
        img.at(x, y) = clamp_u8(img.at(x, y) + amp * f * f);
      }
    }
  }
}

void apply_motion_blur(Image8& img, Rng& rng) {
  const int len = rng.coin(0.5) ? 5 : 7;
  const double angle = rng.uniform(0.0, kPi);
  const double dx = std::cos(angle), dy = std::sin(angle);
  Image8 src = img;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double acc = 0.0;
      int cnt = 0;
      for (int k = -(len / 2); k <= len / 2; ++k) {
        const int sx = x + static_cast<int>(std::lround(k * dx));
        const int sy = y + static_cast<int>(std::lround(k * dy));
        if (src.inside(sx, sy)) {
          acc += src.at(sx, sy);
          ++cnt;
        }
      }
      img.at(x, y) = clamp_u8(acc / std::max(1, cnt));
    }
  }
}

void apply_median_blur(Image8& img) {
  Image8 src = img;
  std::uint8_t window[9];
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      int n = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int sx = std::clamp(x + dx, 0, img.width - 1);
          const int sy = std::clamp(y + dy, 0, img.height - 1);
          window[n++] = src.at(sx, sy);
        }
      }
      std::nth_element(window, window + 4, window + 9);
      img.at(x, y) = window[4];
    }
  }
}

void apply_gaussian_blur(Image8& img, Rng& rng) {
  const double sigma = rng.uniform(0.6, 1.6);
  const int radius = std::max(1, static_cast<int>(std::ceil(2.0 * sigma)));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double ksum = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    kernel[static_cast<std::size_t>(k + radius)] = std::exp(-0.5 * k * k / (sigma * sigma));
    ksum += kernel[static_cast<std::size_t>(k + radius)];
  }
  for (auto& v : kernel) v /= ksum;

  std::vector<double> tmp(img.pixels.size());
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const int sx = std::clamp(x + k, 0, img.width - 1);
        acc += kernel[static_cast<std::size_t>(k + radius)] * img.at(sx, y);
      }
      tmp[static_cast<std::size_t>(y) * img.width + x] = acc;
    }
  }
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const int sy = std::clamp(y + k, 0, img.height - 1);
        acc += kernel[static_cast<std::size_t>(k + radius)] * tmp[static_cast<std::size_t>(sy) * img.width + x];
      }
      img.at(x, y) = clamp_u8(acc);
    }
  }
}

void apply_noise(Image8& img, NoiseKind kind, Rng& rng) {
  if (kind == NoiseKind::Gaussian) {
    const double sigma = rng.uniform(3.0, 10.0);
    for (auto& px : img.pixels) px = clamp_u8(px + rng.normal(0.0, sigma));
  } else {
    const double sigma = rng.uniform(0.05, 0.15);
    for (auto& px : img.pixels) px = clamp_u8(px * (1.0 + rng.normal(0.0, sigma)));
  }
}

}  // namespace

AugmentApplied augment(Sample& sample, Rng& rng, const AugmentConfig& cfg) {
  AugmentApplied applied;
  const PixelRect box = bbox_rect(sample);

  if (cfg.brightness_contrast && rng.coin(cfg.probability)) {
    applied.brightness_contrast = true;
    apply_brightness_contrast(sample.image, rng);
  }
  if (cfg.random_erase && rng.coin(cfg.probability)) {
    applied.random_erase = true;
    apply_random_erase(sample.image, box, rng);
  }
  if (cfg.sun_flare && rng.coin(cfg.probability)) {
    applied.sun_flare = true;
    apply_sun_flare(sample.image, box, rng);
  }
  if (cfg.blur && rng.coin(cfg.probability)) {
    applied.blur = true;
    const int kind = rng.uniform_int(0, 2);  // equal probability among the three
    applied.blur_kind = static_cast<BlurKind>(kind);
    switch (applied.blur_kind) {
      case BlurKind::Motion:
        apply_motion_blur(sample.image, rng);
        break;
      case BlurKind::Median:
        apply_median_blur(sample.image);
        break;
      case BlurKind::Gaussian:
        apply_gaussian_blur(sample.image, rng);
        break;
    }
  }
  if (cfg.noise && rng.coin(cfg.probability)) {
    applied.noise = true;
    applied.noise_kind = rng.coin(0.5) ? NoiseKind::Gaussian : NoiseKind::Speckle;
    apply_noise(sample.image, applied.noise_kind, rng);
  }
  return applied;
}

}  // namespace satpose
