#pragma once

#include <vector>

#include <json.hpp>

#include "cylrev/geom.hpp"

namespace cylrev {

// Pinhole camera, computer-vision convention: x right, y down, z forward.
// Pose is world-to-camera: x_cam = R x_world + t.
struct Camera {
    double fx = 0, fy = 0, cx = 0, cy = 0;
    int width = 0, height = 0;
    Mat3 rot;   // world-to-camera rotation
    Vec3 trans; // world-to-camera translation

    Vec3 center() const { return rot.transposed() * (-trans); }

    // Ray through pixel center (row, col); direction unit length in world.
    Ray pixel_ray(double row, double col) const {
        Vec3 d_cam{(col + 0.5 - cx) / fx, (row + 0.5 - cy) / fy, 1.0};
        Vec3 d = rot.transposed() * d_cam;
        return {center(), d.normalized()};
    }

    // World point -> (row, col, depth along optical axis). Returns false if
    // the point is behind the camera.
    bool project(const Vec3& p, double& row, double& col, double& depth) const {
        Vec3 pc = rot * p + trans;
        if (pc.z <= 1e-9) return false;
        col = fx * pc.x / pc.z + cx - 0.5;
        row = fy * pc.y / pc.z + cy - 0.5;
        depth = pc.z;
        return true;
    }

    void validate() const;
};

// Camera centers on a Fibonacci spiral over the sphere of given radius, all
// looking at the origin. Default framing: 40-degree vertical FOV.
std::vector<Camera> fibonacci_views(int n, double radius, int img_h, int img_w,
                                    double fov_deg = 40.0);

Camera look_at_camera(const Vec3& eye, const Vec3& target, int img_h, int img_w, double fov_deg);

nlohmann::json camera_to_json(const Camera& cam);
Camera camera_from_json(const nlohmann::json& j);

}  // namespace cylrev
