#pragma once

#include <vector>

#include "satpose/geom/geometry.hpp"

namespace satpose {

// Procedural satellite: box body, one solar-panel wing, two antenna rods.
// Triangles reference mesh vertices and carry a face id used for texturing
// and flat shading. Keypoints are a fixed subset of the mesh vertices.
struct TargetModel {
  struct Triangle {
    int a, b, c;
    int face_id;
  };

  std::vector<Vec3> vertices;  // body frame, meters
  std::vector<Triangle> triangles;
  std::vector<int> keypoint_vertex_ids;
  int face_count = 0;

  std::vector<Vec3> keypoints() const {
    std::vector<Vec3> out;
    out.reserve(keypoint_vertex_ids.size());
    for (const int id : keypoint_vertex_ids) out.push_back(vertices[static_cast<std::size_t>(id)]);
    return out;
  }

  double bounding_radius() const;

  // The canonical 11-keypoint target used throughout.
  static const TargetModel& standard();
};

}  // namespace satpose
