#include "satpose/data/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "satpose/util/errors.hpp"
#include "satpose/util/rng.hpp"

namespace satpose {

DomainParams DomainParams::source() { return DomainParams{}; }

DomainParams DomainParams::lightbox_like() {
  DomainParams d;
  d.name = "lightbox_like";
  // Albedo panels: flat, bright, low contrast; visible lab background.
  d.light_theta_min_deg = 0;
  d.light_theta_max_deg = 50;
  d.ambient_min = 0.38;
  d.ambient_max = 0.58;
  d.diffuse_min = 0.22;
  d.diffuse_max = 0.42;
  d.specular_min = 0.0;
  d.specular_max = 0.12;
  d.background_min = 26;
  d.background_max = 62;
  d.background_gradient = 26;
  d.background_noise_sigma = 4.0;
  d.sensor_noise_sigma = 6.0;
  d.flare_probability = 0.02;
  d.texture_randomize = false;
  d.texture_seed = 101;
  return d;
}

DomainParams DomainParams::sunlamp_like() {
  DomainParams d;
  d.name = "sunlamp_like";
  // Single arc lamp: harsh highlights, dead shadows, frequent glare.
  d.light_theta_min_deg = 15;
  d.light_theta_max_deg = 80;
  d.ambient_min = 0.02;
  d.ambient_max = 0.08;
  d.diffuse_min = 0.9;
  d.diffuse_max = 1.4;
  d.specular_min = 0.5;
  d.specular_max = 1.0;
  d.shininess = 8;
  d.background_min = 0;
  d.background_max = 6;
  d.background_gradient = 4;
  d.background_noise_sigma = 1.5;
  d.sensor_noise_sigma = 3.5;
  d.flare_probability = 0.5;
  d.texture_randomize = false;
  d.texture_seed = 101;
  return d;
}

DomainParams DomainParams::by_name(const std::string& name) {
  if (name == "source") return source();
  if (name == "lightbox_like") return lightbox_like();
  if (name == "sunlamp_like") return sunlamp_like();
  throw ConfigError("unknown domain: " + name);
}

namespace {

struct FaceTexture {
  int kind = 0;  // 0 solid, 1 checker, 2 stripes, 3 cell noise
  double albedo_a = 0.6;
  double albedo_b = 0.3;
  double scale = 16;
  double phase = 0;
  int axis = 0;
  std::uint64_t salt = 0;
};

double hash01(std::uint64_t x) {
  x = Rng::mix(x, 0x9E3779B97F4A7C15ULL);
  return static_cast<double>(x >> 11) * (1.0 / 9007199254740992.0);
}

double face_albedo(const FaceTexture& ft, const Vec3& p_body) {
  const double coords[3] = {p_body.x(), p_body.y(), p_body.z()};
  const double u = coords[ft.axis % 3] * ft.scale + ft.phase;
  const double v = coords[(ft.axis + 1) % 3] * ft.scale + ft.phase * 0.5;
  switch (ft.kind) {
    case 1: {  // checker
      const long long cell =
          static_cast<long long>(std::floor(u)) + static_cast<long long>(std::floor(v));
      return (cell & 1) ? ft.albedo_a : ft.albedo_b;
    }
    case 2:  // stripes
      return (static_cast<long long>(std::floor(u)) & 1) ? ft.albedo_a : ft.albedo_b;
    case 3: {  // cell noise
      const std::uint64_t cu = static_cast<std::uint64_t>(static_cast<long long>(std::floor(u)) + (1 << 20));
      const std::uint64_t cv = static_cast<std::uint64_t>(static_cast<long long>(std::floor(v)) + (1 << 20));
      const double h = hash01(Rng::mix(ft.salt, cu * 0x1000193 + cv));
      return ft.albedo_b + (ft.albedo_a - ft.albedo_b) * h;
    }
    default:
      return ft.albedo_a;
  }
}

std::vector<FaceTexture> make_textures(const TargetModel& model, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<FaceTexture> out(static_cast<std::size_t>(model.face_count));
  for (auto& ft : out) {
    ft.kind = rng.uniform_int(0, 3);
    ft.albedo_a = rng.uniform(0.35, 0.95);
    ft.albedo_b = rng.uniform(0.15, 0.75);
    ft.scale = rng.uniform(8.0, 40.0);
    ft.phase = rng.uniform(0.0, 2.0);
    ft.axis = rng.uniform_int(0, 2);
    ft.salt = rng.next_u64();
  }
  return out;
}

}  // namespace

RenderedSample render_scene(const Pose& pose, const DomainParams& domain,
                            const CameraIntrinsics& K, std::uint64_t seed,
                            const TargetModel& model) {
  if (pose.t.z() < 0.2) throw DataError("render_scene: target behind the near plane");
  const int W = K.width, H = K.height;
  if (W <= 0 || H <= 0) throw ConfigError("render_scene: camera has empty image plane");

  Rng rng(seed);

  // Scene conditions.
  const double theta = std::acos(
      rng.uniform(std::cos(deg2rad(domain.light_theta_max_deg)), std::cos(deg2rad(domain.light_theta_min_deg))));
  const double phi = rng.uniform(0.0, 2.0 * kPi);
  const Vec3 light_dir(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
                       std::cos(theta));  // from light toward the scene (camera frame)
  const double ambient = rng.uniform(domain.ambient_min, domain.ambient_max);
  const double diffuse = rng.uniform(domain.diffuse_min, domain.diffuse_max);
  const double specular = rng.uniform(domain.specular_min, domain.specular_max);
  const auto textures =
      make_textures(model, domain.texture_randomize ? rng.next_u64() : domain.texture_seed);

  // Background: base level + linear ramp + per-pixel noise.
  std::vector<double> lum(static_cast<std::size_t>(W) * H);
  {
    const double base = rng.uniform(domain.background_min, domain.background_max);
    const double gx = rng.uniform(-1.0, 1.0), gy = rng.uniform(-1.0, 1.0);
    const double amp = rng.uniform(0.0, domain.background_gradient);
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const double ramp = amp * (gx * (x / static_cast<double>(W) - 0.5) +
                                   gy * (y / static_cast<double>(H) - 0.5));
        lum[static_cast<std::size_t>(y) * W + x] =
            base + ramp + rng.normal(0.0, domain.background_noise_sigma);
      }
    }
  }

  // Camera-frame geometry.
  std::vector<Vec3> cam(model.vertices.size());
  std::vector<double> su(model.vertices.size()), sv(model.vertices.size());
  for (std::size_t i = 0; i < model.vertices.size(); ++i) {
    cam[i] = pose.R * model.vertices[i] + pose.t;
    if (cam[i].z() < 0.05) throw DataError("render_scene: vertex behind the near plane");
    su[i] = K.fx * cam[i].x() / cam[i].z() + K.cx;
    sv[i] = K.fy * cam[i].y() / cam[i].z() + K.cy;
  }

  std::vector<float> zbuf(static_cast<std::size_t>(W) * H, std::numeric_limits<float>::infinity());
  Image8 mask(W, H, 0);

  for (const auto& tri : model.triangles) {
    int ia = tri.a, ib = tri.b, ic = tri.c;
    double area = (su[ib] - su[ia]) * (sv[ic] - sv[ia]) - (sv[ib] - sv[ia]) * (su[ic] - su[ia]);
    if (std::abs(area) < 1e-9) continue;
    if (area < 0) {
      std::swap(ib, ic);
      area = -area;
    }

    // Flat shading per face, normal flipped toward the camera.
    const Vec3& A = cam[static_cast<std::size_t>(tri.a)];
    const Vec3& B = cam[static_cast<std::size_t>(tri.b)];
    const Vec3& C = cam[static_cast<std::size_t>(tri.c)];
    Vec3 n = (B - A).cross(C - A);
    const double nl = n.norm();
    if (nl < 1e-12) continue;
    n /= nl;
    const Vec3 center = (A + B + C) / 3.0;
    if (n.dot(center) > 0) n = -n;
    const double ndl = std::max(0.0, n.dot(-light_dir));
    const Vec3 view = -center.normalized();
    const Vec3 half = (view - light_dir).normalized();
    const double spec = specular * std::pow(std::max(0.0, n.dot(half)), domain.shininess);
    const double shade = ambient + diffuse * ndl;

    const int x0 = std::max(0, static_cast<int>(std::floor(std::min({su[ia], su[ib], su[ic]}))));
    const int x1 = std::min(W - 1, static_cast<int>(std::ceil(std::max({su[ia], su[ib], su[ic]}))));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min({sv[ia], sv[ib], sv[ic]}))));
    const int y1 = std::min(H - 1, static_cast<int>(std::ceil(std::max({sv[ia], sv[ib], sv[ic]}))));

    const double iza = 1.0 / cam[static_cast<std::size_t>(ia)].z();
    const double izb = 1.0 / cam[static_cast<std::size_t>(ib)].z();
    const double izc = 1.0 / cam[static_cast<std::size_t>(ic)].z();
    const Vec3 pa = model.vertices[static_cast<std::size_t>(ia)] * iza;
    const Vec3 pb = model.vertices[static_cast<std::size_t>(ib)] * izb;
    const Vec3 pc = model.vertices[static_cast<std::size_t>(ic)] * izc;
    const FaceTexture& ft = textures[static_cast<std::size_t>(tri.face_id)];

    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double px = x + 0.5, py = y + 0.5;
        const double w0 = (su[ib] - px) * (sv[ic] - py) - (sv[ib] - py) * (su[ic] - px);
        const double w1 = (su[ic] - px) * (sv[ia] - py) - (sv[ic] - py) * (su[ia] - px);
        const double w2 = (su[ia] - px) * (sv[ib] - py) - (sv[ia] - py) * (su[ib] - px);
        if (w0 < 0 || w1 < 0 || w2 < 0) continue;
        const double l0 = w0 / area, l1 = w1 / area, l2 = w2 / area;
        const double iz = l0 * iza + l1 * izb + l2 * izc;
        const double z = 1.0 / iz;
        const std::size_t idx = static_cast<std::size_t>(y) * W + x;
        if (static_cast<float>(z) >= zbuf[idx]) continue;
        zbuf[idx] = static_cast<float>(z);
        mask.pixels[idx] = 255;
        const Vec3 p_body = (l0 * pa + l1 * pb + l2 * pc) * z;  // perspective-correct
        const double albedo = face_albedo(ft, p_body);
        lum[idx] = 255.0 * std::clamp(albedo * shade + spec, 0.0, 1.0);
      }
    }
  }

  long long mask_count = 0;
  int bx0 = W, by0 = H, bx1 = -1, by1 = -1;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      if (mask.at(x, y)) {
        ++mask_count;
        bx0 = std::min(bx0, x);
        by0 = std::min(by0, y);
        bx1 = std::max(bx1, x);
        by1 = std::max(by1, y);
      }
    }
  }
  if (mask_count == 0) throw DataError("render_scene: target outside the frustum");

  // Lamp glare.
  if (rng.coin(domain.flare_probability)) {
    const double fx = rng.uniform(bx0, bx1 + 1.0);
    const double fy = rng.uniform(by0, by1 + 1.0);
    const double radius = rng.uniform(0.3, 0.9) * std::max(bx1 - bx0 + 1, by1 - by0 + 1);
    const double amp = rng.uniform(60.0, 160.0);
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const double d = std::hypot(x + 0.5 - fx, y + 0.5 - fy);
        if (d < radius) {
          const double f = 1.0 - d / radius;
          lum[static_cast<std::size_t>(y) * W + x] += amp * f * f;
        }
      }
    }
  }

  // Sensor noise and quantization.
  RenderedSample out;
  out.image = Image8(W, H);
  for (std::size_t i = 0; i < lum.size(); ++i) {
    const double v = lum[i] + rng.normal(0.0, domain.sensor_noise_sigma);
    out.image.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
  }
  out.mask = std::move(mask);
  out.pose = pose;
  out.bbox = {static_cast<double>(bx0), static_cast<double>(by0), static_cast<double>(bx1 + 1),
              static_cast<double>(by1 + 1)};

  // Keypoint projections + z-buffer visibility.
  const auto kps = model.keypoints();
  for (const auto& kp : kps) {
    const Vec3 pc = pose.R * kp + pose.t;
    KeypointLabel label;
    label.u = K.fx * pc.x() / pc.z() + K.cx;
    label.v = K.fy * pc.y() / pc.z() + K.cy;
    const int px = static_cast<int>(std::floor(label.u));
    const int py = static_cast<int>(std::floor(label.v));
    if (pc.z() > 0 && out.image.inside(px, py)) {
      const double tol = std::max(0.005, 0.003 * pc.z());
      label.visible = pc.z() <= zbuf[static_cast<std::size_t>(py) * W + px] + tol;
    }
    out.keypoints.push_back(label);
  }
  return out;
}

}  // namespace satpose
