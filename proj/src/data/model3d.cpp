#include "satpose/data/model3d.hpp"

#include <algorithm>
#include <cmath>

namespace satpose {

namespace {

// Quad as two triangles (vertex ids in winding order).
void add_quad(TargetModel& m, int a, int b, int c, int d, int face_id) {
  m.triangles.push_back({a, b, c, face_id});
  m.triangles.push_back({a, c, d, face_id});
}

int add_vertex(TargetModel& m, double x, double y, double z) {
  m.vertices.emplace_back(x, y, z);
  return static_cast<int>(m.vertices.size()) - 1;
}

TargetModel build() {
  TargetModel m;

  // Body box, half extents (0.25, 0.20, 0.15).
  const double hx = 0.25, hy = 0.20, hz = 0.15;
  int corner[8];
  for (int i = 0; i < 8; ++i) {
    const double x = (i & 1) ? hx : -hx;
    const double y = (i & 2) ? hy : -hy;
    const double z = (i & 4) ? hz : -hz;
    corner[i] = add_vertex(m, x, y, z);
  }
  add_quad(m, corner[0], corner[1], corner[3], corner[2], 0);  // z = -hz
  add_quad(m, corner[4], corner[6], corner[7], corner[5], 1);  // z = +hz
  add_quad(m, corner[0], corner[4], corner[5], corner[1], 2);  // y = -hy
  add_quad(m, corner[2], corner[3], corner[7], corner[6], 3);  // y = +hy
  add_quad(m, corner[0], corner[2], corner[6], corner[4], 4);  // x = -hx
  add_quad(m, corner[1], corner[5], corner[7], corner[3], 5);  // x = +hx

  // Solar panel wing off the +x face.
  const double px0 = 0.26, px1 = 0.45, py = 0.18;
  const int p0 = add_vertex(m, px0, -py, 0.0);
  const int p1 = add_vertex(m, px1, -py, 0.0);
  const int p2 = add_vertex(m, px1, py, 0.0);
  const int p3 = add_vertex(m, px0, py, 0.0);
  add_quad(m, p0, p1, p2, p3, 6);

  // Two antenna rods off the z = -hz face, tips at z = -0.45.
  const double rod_w = 0.012;
  const double tip_z = -0.45;
  const double bases[2][2] = {{-0.12, -0.08}, {0.12, 0.08}};
  for (int r = 0; r < 2; ++r) {
    const double bx = bases[r][0], by = bases[r][1];
    const int b0 = add_vertex(m, bx - rod_w, by, -hz);
    const int b1 = add_vertex(m, bx + rod_w, by, -hz);
    const int t1 = add_vertex(m, bx + rod_w, by, tip_z);
    const int t0 = add_vertex(m, bx - rod_w, by, tip_z);
    add_quad(m, b0, b1, t1, t0, 7 + r);
    // Tip vertex proper (rod midline) so the keypoint is a mesh vertex.
    const int tip = add_vertex(m, bx, by, tip_z);
    m.triangles.push_back({t0, t1, tip, 7 + r});
    if (r == 0) {
      m.keypoint_vertex_ids.push_back(tip);
    } else {
      m.keypoint_vertex_ids.push_back(tip);
    }
  }

  m.face_count = 9;

  // Keypoints: 8 box corners + 2 antenna tips (added above) + 1 panel corner.
  for (int i = 0; i < 8; ++i) m.keypoint_vertex_ids.push_back(corner[i]);
  m.keypoint_vertex_ids.push_back(p2);
  std::rotate(m.keypoint_vertex_ids.begin(), m.keypoint_vertex_ids.begin() + 2,
              m.keypoint_vertex_ids.end());  // box corners first
  return m;
}

}  // namespace

double TargetModel::bounding_radius() const {
  double r = 0.0;
  for (const auto& v : vertices) r = std::max(r, v.norm());
  return r;
}

const TargetModel& TargetModel::standard() {
  static const TargetModel model = build();
  return model;
}

}  // namespace satpose
