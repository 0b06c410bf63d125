#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace cylrev {

struct Vec2 {
    double x = 0.0, y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double k) const { return {x * k, y * k}; }
    Vec2 operator/(double k) const { return {x / k, y / k}; }
    Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
    Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
    Vec2& operator*=(double k) { x *= k; y *= k; return *this; }

    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double cross(const Vec2& o) const { return x * o.y - y * o.x; }
    double norm2() const { return x * x + y * y; }
    double norm() const { return std::sqrt(norm2()); }
    Vec2 normalized() const { double n = norm(); return n > 0 ? Vec2{x / n, y / n} : Vec2{0, 0}; }
    Vec2 perp() const { return {-y, x}; }
};

inline Vec2 operator*(double k, const Vec2& v) { return v * k; }

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3() = default;
    Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3 operator*(double k) const { return {x * k, y * k, z * k}; }
    Vec3 operator/(double k) const { return {x / k, y / k, z / k}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Vec3& operator*=(double k) { x *= k; y *= k; z *= k; return *this; }
    Vec3& operator/=(double k) { x /= k; y /= k; z /= k; return *this; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm2() const { return x * x + y * y + z * z; }
    double norm() const { return std::sqrt(norm2()); }
    Vec3 normalized() const {
        double n = norm();
        return n > 0 ? Vec3{x / n, y / n, z / n} : Vec3{0, 0, 0};
    }
    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

inline Vec3 operator*(double k, const Vec3& v) { return v * k; }

// Column-major-free 3x3: rows stored explicitly.
struct Mat3 {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};  // row-major

    static Mat3 identity() { return {}; }

    double operator()(int r, int c) const { return m[3 * r + c]; }
    double& operator()(int r, int c) { return m[3 * r + c]; }

    Vec3 operator*(const Vec3& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
                m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }
    Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0;
                for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
                r(i, j) = s;
            }
        return r;
    }
    Mat3 transposed() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
        return r;
    }
    Vec3 row(int i) const { return {m[3 * i], m[3 * i + 1], m[3 * i + 2]}; }
    Vec3 col(int j) const { return {m[j], m[3 + j], m[6 + j]}; }
};

// Minimal rotation taking +z onto the unit vector n (Rodrigues). For n ~ -z a
// 180-degree rotation about x is used so the result stays deterministic.
inline Mat3 rotation_z_to(const Vec3& n) {
    const Vec3 z{0, 0, 1};
    double c = z.dot(n);
    if (c < -1.0 + 1e-12) {
        Mat3 r;
        r.m = {1, 0, 0, 0, -1, 0, 0, 0, -1};
        return r;
    }
    Vec3 k = z.cross(n);
    Mat3 kx;
    kx.m = {0, -k.z, k.y, k.z, 0, -k.x, -k.y, k.x, 0};
    Mat3 r = Mat3::identity();
    double f = 1.0 / (1.0 + c);
    Mat3 kx2 = kx * kx;
    for (int i = 0; i < 9; ++i) r.m[i] += kx.m[i] + kx2.m[i] * f;
    return r;
}

struct Ray {
    Vec3 origin;
    Vec3 dir;  // unit length
    Vec3 at(double t) const { return origin + dir * t; }
};

struct Aabb {
    Vec3 lo{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
            std::numeric_limits<double>::max()};
    Vec3 hi{std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest(),
            std::numeric_limits<double>::lowest()};

    void expand(const Vec3& p) {
        lo.x = std::min(lo.x, p.x); lo.y = std::min(lo.y, p.y); lo.z = std::min(lo.z, p.z);
        hi.x = std::max(hi.x, p.x); hi.y = std::max(hi.y, p.y); hi.z = std::max(hi.z, p.z);
    }
    void expand(const Aabb& b) { expand(b.lo); expand(b.hi); }
    Vec3 center() const { return (lo + hi) * 0.5; }
    Vec3 extent() const { return hi - lo; }

    // Slab test; returns false on miss, otherwise [t0,t1] clipped to t >= 0.
    bool intersect(const Ray& r, double& t0, double& t1) const {
        t0 = 0.0;
        t1 = std::numeric_limits<double>::max();
        for (int i = 0; i < 3; ++i) {
            double o = r.origin[i], d = r.dir[i];
            double lo_i = i == 0 ? lo.x : (i == 1 ? lo.y : lo.z);
            double hi_i = i == 0 ? hi.x : (i == 1 ? hi.y : hi.z);
            if (std::abs(d) < 1e-15) {
                if (o < lo_i || o > hi_i) return false;
                continue;
            }
            double ta = (lo_i - o) / d, tb = (hi_i - o) / d;
            if (ta > tb) std::swap(ta, tb);
            t0 = std::max(t0, ta);
            t1 = std::min(t1, tb);
            if (t0 > t1) return false;
        }
        return true;
    }
};

struct Aabb2 {
    Vec2 lo{std::numeric_limits<double>::max(), std::numeric_limits<double>::max()};
    Vec2 hi{std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};

    void expand(const Vec2& p) {
        lo.x = std::min(lo.x, p.x); lo.y = std::min(lo.y, p.y);
        hi.x = std::max(hi.x, p.x); hi.y = std::max(hi.y, p.y);
    }
    double dist2(const Vec2& p) const {
        double dx = std::max({lo.x - p.x, 0.0, p.x - hi.x});
        double dy = std::max({lo.y - p.y, 0.0, p.y - hi.y});
        return dx * dx + dy * dy;
    }
};

constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }
inline double clampd(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

}  // namespace cylrev
