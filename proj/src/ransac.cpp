#include "cylrev/ransac.hpp"

#include <Eigen/Dense>

#include "cylrev/rng.hpp"

namespace cylrev {

namespace {

Vec3 canonical_sign(Vec3 n) {
    double ax = std::abs(n.x), ay = std::abs(n.y), az = std::abs(n.z);
    double comp = az >= ax && az >= ay ? n.z : (ay >= ax ? n.y : n.x);
    return comp < 0 ? -n : n;
}

}  // namespace

PlaneFit ransac_plane(const std::vector<Vec3>& points, int iters, double tol, uint64_t seed) {
    const size_t n = points.size();
    if (n < 3) throw RansacError("plane fit needs at least 3 points");

    Rng rng(seed, 0x9a5c);
    int best_count = -1;
    Vec3 best_n{0, 0, 1};
    double best_d = 0;
    for (int it = 0; it < iters; ++it) {
        size_t i = rng.next_u64() % n, j = rng.next_u64() % n, k = rng.next_u64() % n;
        if (i == j || j == k || i == k) continue;
        Vec3 cand = (points[j] - points[i]).cross(points[k] - points[i]);
        double len = cand.norm();
        if (len < 1e-12) continue;
        cand = cand / len;
        double d = cand.dot(points[i]);
        int count = 0;
        for (const auto& p : points) count += std::abs(cand.dot(p) - d) <= tol;
        if (count > best_count) {
            best_count = count;
            best_n = cand;
            best_d = d;
        }
    }
    if (best_count < 3) throw RansacError("RANSAC found no valid plane hypothesis");

    // Least-squares refinement over the inliers of the best hypothesis.
    PlaneFit fit;
    fit.inliers.assign(n, false);
    Vec3 centroid{0, 0, 0};
    int m = 0;
    for (size_t p = 0; p < n; ++p) {
        if (std::abs(best_n.dot(points[p]) - best_d) <= tol) {
            fit.inliers[p] = true;
            centroid += points[p];
            ++m;
        }
    }
    centroid /= double(m);
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (size_t p = 0; p < n; ++p) {
        if (!fit.inliers[p]) continue;
        Vec3 r = points[p] - centroid;
        Eigen::Vector3d v(r.x, r.y, r.z);
        cov += v * v.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
    Eigen::Vector3d en = es.eigenvectors().col(0);  // smallest eigenvalue
    Vec3 refined{en.x(), en.y(), en.z()};
    if (refined.norm() < 1e-12 || es.eigenvalues()(1) < 1e-18)
        throw RansacError("plane inliers are collinear");
    refined = refined.normalized();
    fit.normal = canonical_sign(refined);
    fit.offset = fit.normal.dot(centroid);
    fit.inlier_count = m;
    return fit;
}

}  // namespace cylrev
