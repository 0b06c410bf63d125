#include "cylrev/camera.hpp"

#include <cmath>
#include <stdexcept>

#include "cylrev/sketch.hpp"  // ValidationError

namespace cylrev {

void Camera::validate() const {
    if (!(fx > 0) || !(fy > 0)) throw ValidationError("camera focal length must be positive");
    if (cx < 0 || cx >= width || cy < 0 || cy >= height)
        throw ValidationError("camera principal point outside image");
    // Rotation orthonormality.
    Mat3 rtr = rot.transposed() * rot;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double want = i == j ? 1.0 : 0.0;
            if (std::abs(rtr(i, j) - want) > 1e-9)
                throw ValidationError("camera rotation is not orthonormal");
        }
}

Camera look_at_camera(const Vec3& eye, const Vec3& target, int img_h, int img_w, double fov_deg) {
    Camera cam;
    cam.width = img_w;
    cam.height = img_h;
    cam.fy = 0.5 * img_h / std::tan(0.5 * deg2rad(fov_deg));
    cam.fx = cam.fy;
    cam.cx = 0.5 * img_w;
    cam.cy = 0.5 * img_h;

    Vec3 fwd = (target - eye).normalized();
    Vec3 up{0, 0, 1};
    if (std::abs(fwd.dot(up)) > 0.999) up = {1, 0, 0};
    Vec3 right = fwd.cross(up).normalized();
    Vec3 down = fwd.cross(right).normalized();  // y points down in image space
    // Rows of R are the camera basis vectors expressed in world coordinates.
    cam.rot.m = {right.x, right.y, right.z, down.x, down.y, down.z, fwd.x, fwd.y, fwd.z};
    cam.trans = -(cam.rot * eye);
    return cam;
}

std::vector<Camera> fibonacci_views(int n, double radius, int img_h, int img_w, double fov_deg) {
    if (n < 1) throw ValidationError("view count must be >= 1");
    const double golden_conj = (std::sqrt(5.0) - 1.0) / 2.0;
    std::vector<Camera> cams;
    cams.reserve(n);
    for (int i = 0; i < n; ++i) {
        double z = 1.0 - 2.0 * (i + 0.5) / n;
        double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        double phi = 2.0 * kPi * i * golden_conj;
        Vec3 eye = Vec3{r * std::cos(phi), r * std::sin(phi), z} * radius;
        cams.push_back(look_at_camera(eye, {0, 0, 0}, img_h, img_w, fov_deg));
    }
    return cams;
}

nlohmann::json camera_to_json(const Camera& cam) {
    // 4x4 world-to-camera pose, row-major.
    std::vector<double> pose(16, 0.0);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) pose[4 * i + j] = cam.rot(i, j);
        pose[4 * i + 3] = i == 0 ? cam.trans.x : i == 1 ? cam.trans.y : cam.trans.z;
    }
    pose[15] = 1.0;
    return {{"fx", cam.fx}, {"fy", cam.fy}, {"cx", cam.cx},         {"cy", cam.cy},
            {"width", cam.width}, {"height", cam.height}, {"pose", pose}};
}

Camera camera_from_json(const nlohmann::json& j) {
    Camera cam;
    cam.fx = j.at("fx").get<double>();
    cam.fy = j.at("fy").get<double>();
    cam.cx = j.at("cx").get<double>();
    cam.cy = j.at("cy").get<double>();
    cam.width = j.at("width").get<int>();
    cam.height = j.at("height").get<int>();
    auto pose = j.at("pose").get<std::vector<double>>();
    if (pose.size() != 16) throw ValidationError("camera pose must be a 4x4 row-major matrix");
    for (int i = 0; i < 3; ++i) {
        for (int jj = 0; jj < 3; ++jj) cam.rot(i, jj) = pose[4 * i + jj];
        (i == 0 ? cam.trans.x : i == 1 ? cam.trans.y : cam.trans.z) = pose[4 * i + 3];
    }
    cam.validate();
    return cam;
}

}  // namespace cylrev
