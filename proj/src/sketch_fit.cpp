#include "cylrev/sketch_fit.hpp"

#include <omp.h>

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <algorithm>
#include <map>
#include <unordered_map>

namespace cylrev {

namespace {

constexpr double kWidthMin = 0.02;
constexpr double kWidthFactor = 1.0;  // must not exceed 1: the cap may only
                                      // smooth the nearest samples, never the
                                      // far field, or the winding breaks
constexpr int kWidthNeighbor = 7;

// Per-query smoothing width: a multiple of the distance to the k-th nearest
// sample, floored.
double query_width(const Vec2& x, const std::vector<Vec2>& samples) {
    double best[kWidthNeighbor];
    std::fill(best, best + kWidthNeighbor, std::numeric_limits<double>::max());
    for (const auto& y : samples) {
        double d2 = (x - y).norm2();
        if (d2 < 1e-24) continue;  // the query itself
        if (d2 < best[kWidthNeighbor - 1]) {
            best[kWidthNeighbor - 1] = d2;
            for (int i = kWidthNeighbor - 1; i > 0 && best[i] < best[i - 1]; --i)
                std::swap(best[i], best[i - 1]);
        }
    }
    return std::max(kWidthMin, kWidthFactor * std::sqrt(best[kWidthNeighbor - 1]));
}

// Width-regularized Gauss kernel; the cap keeps the near-singular term
// bounded while the far field stays exact.
Vec2 kernel_phi(const Vec2& x, const Vec2& y, double w) {
    Vec2 r = x - y;
    double rn2 = std::max(r.norm2(), w * w);
    return r * (-1.0 / (2.0 * kPi * rn2));
}

}  // namespace

std::vector<OrientedPoint2D> estimate_normals_2d(const std::vector<Vec2>& points) {
    const int n = static_cast<int>(points.size());
    if (n < 8) throw SketchFitError("normal estimation needs at least 8 boundary samples");

    std::vector<double> widths(n);
    for (int i = 0; i < n; ++i) widths[i] = query_width(points[i], points);

    // A mu = 1/2 with A in R^{n x 2n}; minimal-norm solution via CG on A A^T.
    Eigen::MatrixXd a(n, 2 * n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            Vec2 phi = kernel_phi(points[i], points[j], widths[i]);
            a(i, 2 * j) = phi.x;
            a(i, 2 * j + 1) = phi.y;
        }
    }
    Eigen::MatrixXd gram = a * a.transpose();
    double ridge = 1e-9 * gram.trace() / n + 1e-12;
    gram.diagonal().array() += ridge;
    Eigen::VectorXd b = Eigen::VectorXd::Constant(n, 0.5);

    Eigen::ConjugateGradient<Eigen::MatrixXd, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(1e-6);
    cg.setMaxIterations(4 * n);
    cg.compute(gram);
    Eigen::VectorXd z = cg.solve(b);

    std::vector<OrientedPoint2D> out(n);
    bool usable = z.allFinite();
    if (usable) {
        Eigen::VectorXd mu = a.transpose() * z;
        // The raw coefficients satisfy the boundary constraints but may carry
        // tangential components; the winding field's own gradient is normal
        // to its level set, so differentiate the field instead. The field is
        // ~1/2 at samples and drops outward, which also fixes orientation.
        auto field = [&](const Vec2& x) {
            double w = query_width(x, points);
            double u = 0;
            for (int j = 0; j < n; ++j)
                u += kernel_phi(x, points[j], w).dot(Vec2{mu(2 * j), mu(2 * j + 1)});
            return u;
        };
        // Sign convention: is the field higher inside? Probe along the mean
        // inward direction from the sample centroid.
        const double h = 0.5 * kWidthMin;
        int degenerate = 0;
        for (int i = 0; i < n; ++i) {
            Vec2 p = points[i];
            Vec2 grad{(field({p.x + h, p.y}) - field({p.x - h, p.y})) / (2 * h),
                      (field({p.x, p.y + h}) - field({p.x, p.y - h})) / (2 * h)};
            double len = grad.norm();
            out[i].position = p;
            if (len < 1e-9) {
                ++degenerate;
                out[i].normal = {1, 0};
            } else {
                out[i].normal = grad / (-len);  // outward = decreasing field
            }
        }
        if (degenerate > n / 4) usable = false;
        if (usable) return out;
    }

    // Fallback: local-PCA tangents, normals oriented away from the local
    // neighborhood centroid.
    for (int i = 0; i < n; ++i) {
        std::vector<std::pair<double, int>> dist;
        dist.reserve(n);
        for (int j = 0; j < n; ++j) dist.push_back({(points[i] - points[j]).norm2(), j});
        std::nth_element(dist.begin(), dist.begin() + 8, dist.end());
        Vec2 mean{0, 0};
        for (int t = 0; t < 8; ++t) mean += points[dist[t].second];
        mean = mean / 8.0;
        double cxx = 0, cxy = 0, cyy = 0;
        for (int t = 0; t < 8; ++t) {
            Vec2 d = points[dist[t].second] - mean;
            cxx += d.x * d.x;
            cxy += d.x * d.y;
            cyy += d.y * d.y;
        }
        // Principal direction of the 2x2 covariance.
        double theta = 0.5 * std::atan2(2 * cxy, cxx - cyy);
        Vec2 tangent{std::cos(theta), std::sin(theta)};
        Vec2 normal = tangent.perp();
        if (normal.dot(points[i] - mean) < 0) normal = normal * -1.0;
        out[i] = {points[i], normal};
    }
    return out;
}

SketchGrid fit_implicit_sketch(const std::vector<OrientedPoint2D>& oriented, int grid_res,
                               int threads) {
    const int n = static_cast<int>(oriented.size());
    if (n < 8) throw SketchFitError("implicit sketch needs at least 8 oriented samples");

    std::vector<Vec2> pts(n);
    for (int i = 0; i < n; ++i) pts[i] = oriented[i].position;
    std::vector<double> widths(n);
    for (int i = 0; i < n; ++i) widths[i] = query_width(pts[i], pts);

    // Scalar source magnitudes: B a = 1/2, B_ij = <phi_j(x_i), n_j>.
    Eigen::MatrixXd bm(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            bm(i, j) = kernel_phi(pts[i], pts[j], widths[i]).dot(oriented[j].normal);
    Eigen::MatrixXd gram = bm * bm.transpose();
    gram.diagonal().array() += 1e-2 * gram.trace() / n + 1e-12;
    Eigen::ConjugateGradient<Eigen::MatrixXd, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(1e-6);
    cg.setMaxIterations(4 * n);
    cg.compute(gram);
    Eigen::VectorXd z = cg.solve(Eigen::VectorXd::Constant(n, 0.5));
    if (!z.allFinite()) throw SketchFitError("implicit sketch solve failed");
    Eigen::VectorXd coeff = bm.transpose() * z;

    auto indicator = [&](const Vec2& x) {
        double w = query_width(x, pts);
        double u = 0;
        for (int j = 0; j < n; ++j)
            u += coeff(j) * kernel_phi(x, pts[j], w).dot(oriented[j].normal);
        return u;
    };

    // Shift so the median indicator value at the inputs sits at zero.
    std::vector<double> at_inputs(n);
    for (int i = 0; i < n; ++i) at_inputs[i] = indicator(pts[i]);
    std::vector<double> sorted = at_inputs;
    std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.end());
    double median = sorted[n / 2];

    SketchGrid grid;
    grid.res = grid_res;
    grid.values.assign(size_t(grid_res) * grid_res, 0.0);
#pragma omp parallel for schedule(static) num_threads(std::max(1, threads))
    for (int iy = 0; iy < grid_res; ++iy)
        for (int ix = 0; ix < grid_res; ++ix)
            grid.at(ix, iy) = median - indicator(grid.node(ix, iy));
    return grid;
}

SketchLoop fit_closed_bspline(const std::vector<Vec2>& points, int n_ctrl, double* max_residual) {
    const int n = static_cast<int>(points.size());
    const int m = std::max(4, n_ctrl);

    // Chord-length parameters in [0, m).
    std::vector<double> params(n);
    double total = 0;
    for (int i = 0; i < n; ++i) total += (points[(i + 1) % n] - points[i]).norm();
    double acc = 0;
    for (int i = 0; i < n; ++i) {
        params[i] = total > 0 ? m * acc / total : m * double(i) / n;
        acc += (points[(i + 1) % n] - points[i]).norm();
    }

    auto basis = [](double f, double out[4]) {
        double f2 = f * f, f3 = f2 * f;
        out[0] = (1 - 3 * f + 3 * f2 - f3) / 6.0;
        out[1] = (4 - 6 * f2 + 3 * f3) / 6.0;
        out[2] = (1 + 3 * f + 3 * f2 - 3 * f3) / 6.0;
        out[3] = f3 / 6.0;
    };

    Eigen::MatrixXd design = Eigen::MatrixXd::Zero(n, m);
    for (int i = 0; i < n; ++i) {
        int span = std::min(static_cast<int>(params[i]), m - 1);
        double f = params[i] - span;
        double w[4];
        basis(f, w);
        for (int t = 0; t < 4; ++t) design(i, (span + m - 1 + t) % m) += w[t];
    }
    Eigen::MatrixXd normal_eq = design.transpose() * design;
    normal_eq.diagonal().array() += 1e-9;
    Eigen::VectorXd px(n), py(n);
    for (int i = 0; i < n; ++i) {
        px(i) = points[i].x;
        py(i) = points[i].y;
    }
    Eigen::VectorXd cx = normal_eq.ldlt().solve(design.transpose() * px);
    Eigen::VectorXd cy = normal_eq.ldlt().solve(design.transpose() * py);

    if (max_residual) {
        double worst = 0;
        for (int i = 0; i < n; ++i) {
            double ex = design.row(i) * cx - px(i);
            double ey = design.row(i) * cy - py(i);
            worst = std::max(worst, std::sqrt(ex * ex + ey * ey));
        }
        *max_residual = worst;
    }

    // Convert each span to a cubic Bezier.
    SketchLoop loop;
    auto ctrl = [&](int i) {
        int k = ((i % m) + m) % m;
        return Vec2{cx(k), cy(k)};
    };
    for (int span = 0; span < m; ++span) {
        Vec2 d0 = ctrl(span - 1), d1 = ctrl(span), d2 = ctrl(span + 1), d3 = ctrl(span + 2);
        BezierSeg bz;
        bz.p0 = (d0 + d1 * 4.0 + d2) / 6.0;
        bz.p1 = (d1 * 4.0 + d2 * 2.0) / 6.0;
        bz.p2 = (d1 * 2.0 + d2 * 4.0) / 6.0;
        bz.p3 = (d1 + d2 * 4.0 + d3) / 6.0;
        loop.segments.push_back(bz);
    }
    return loop;
}

SketchLoops extract_sketch_loops(const SketchGrid& grid) {
    const int g = grid.res;
    struct Seg {
        int64_t from_edge, to_edge;
        Vec2 from_pt, to_pt;
    };
    std::vector<Seg> segs;

    auto edge_id = [&](int ix, int iy, int axis) -> int64_t {
        return (int64_t(iy) * g + ix) * 2 + axis;  // axis 0: horizontal, 1: vertical
    };
    auto interp = [&](int ix, int iy, int axis, double fa, double fb) -> Vec2 {
        double t = fa / (fa - fb);
        Vec2 p = grid.node(ix, iy);
        double h = grid.spacing();
        return axis == 0 ? Vec2{p.x + t * h, p.y} : Vec2{p.x, p.y + t * h};
    };

    for (int iy = 0; iy + 1 < g; ++iy) {
        for (int ix = 0; ix + 1 < g; ++ix) {
            double f00 = grid.at(ix, iy), f10 = grid.at(ix + 1, iy);
            double f11 = grid.at(ix + 1, iy + 1), f01 = grid.at(ix, iy + 1);
            int mask = (f00 < 0 ? 1 : 0) | (f10 < 0 ? 2 : 0) | (f11 < 0 ? 4 : 0) |
                       (f01 < 0 ? 8 : 0);
            if (mask == 0 || mask == 15) continue;

            // Edge crossing points (computed lazily by code below).
            const int64_t eB = edge_id(ix, iy, 0), eR = edge_id(ix + 1, iy, 1);
            const int64_t eT = edge_id(ix, iy + 1, 0), eL = edge_id(ix, iy, 1);
            auto pB = [&] { return interp(ix, iy, 0, f00, f10); };
            auto pR = [&] { return interp(ix + 1, iy, 1, f10, f11); };
            auto pT = [&] { return interp(ix, iy + 1, 0, f01, f11); };
            auto pL = [&] { return interp(ix, iy, 1, f00, f01); };
            auto emit = [&](int64_t ea, Vec2 pa, int64_t eb, Vec2 pb) {
                segs.push_back({ea, eb, pa, pb});
            };

            // Material (f < 0) stays on the left of travel direction.
            switch (mask) {
                case 1: emit(eB, pB(), eL, pL()); break;
                case 2: emit(eR, pR(), eB, pB()); break;
                case 4: emit(eT, pT(), eR, pR()); break;
                case 8: emit(eL, pL(), eT, pT()); break;
                case 3: emit(eR, pR(), eL, pL()); break;
                case 6: emit(eT, pT(), eB, pB()); break;
                case 12: emit(eL, pL(), eR, pR()); break;
                case 9: emit(eB, pB(), eT, pT()); break;
                case 7: emit(eT, pT(), eL, pL()); break;
                case 11: emit(eR, pR(), eT, pT()); break;
                case 13: emit(eB, pB(), eR, pR()); break;
                case 14: emit(eL, pL(), eB, pB()); break;
                case 5: {
                    double center = 0.25 * (f00 + f10 + f11 + f01);
                    if (center < 0) {
                        emit(eB, pB(), eR, pR());
                        emit(eT, pT(), eL, pL());
                    } else {
                        emit(eB, pB(), eL, pL());
                        emit(eT, pT(), eR, pR());
                    }
                    break;
                }
                case 10: {
                    double center = 0.25 * (f00 + f10 + f11 + f01);
                    if (center < 0) {
                        emit(eR, pR(), eT, pT());
                        emit(eL, pL(), eB, pB());
                    } else {
                        emit(eR, pR(), eB, pB());
                        emit(eL, pL(), eT, pT());
                    }
                    break;
                }
                default: break;
            }
        }
    }
    if (segs.empty()) throw SketchFitError("implicit sketch has no zero crossing");

    std::unordered_map<int64_t, int> by_from;
    by_from.reserve(segs.size());
    for (size_t i = 0; i < segs.size(); ++i) by_from[segs[i].from_edge] = static_cast<int>(i);

    SketchLoops out;
    std::vector<bool> used(segs.size(), false);
    for (size_t start = 0; start < segs.size(); ++start) {
        if (used[start]) continue;
        std::vector<Vec2> loop;
        int cur = static_cast<int>(start);
        bool closed = false;
        while (!used[cur]) {
            used[cur] = true;
            loop.push_back(segs[cur].from_pt);
            auto it = by_from.find(segs[cur].to_edge);
            if (it == by_from.end()) break;  // open chain at the grid border
            cur = it->second;
            if (cur == static_cast<int>(start)) {
                closed = true;
                break;
            }
        }
        if (!closed || loop.size() < 6) continue;
        out.polylines.push_back(std::move(loop));
    }
    if (out.polylines.empty()) throw SketchFitError("no closed loops of sufficient size");

    // Discard speck loops: below 2% of the dominant loop's area they are
    // grid-level noise, not sketch features.
    double max_area = 0;
    auto loop_area = [](const std::vector<Vec2>& poly) {
        double a = 0;
        for (size_t i = 0; i < poly.size(); ++i) a += poly[i].cross(poly[(i + 1) % poly.size()]);
        return std::abs(a / 2);
    };
    for (const auto& poly : out.polylines) max_area = std::max(max_area, loop_area(poly));
    std::vector<std::vector<Vec2>> kept;
    for (auto& poly : out.polylines)
        if (loop_area(poly) >= 0.02 * max_area) kept.push_back(std::move(poly));
    out.polylines = std::move(kept);

    const double cell = grid.spacing();
    for (const auto& poly : out.polylines) {
        int n_ctrl = std::max(4, static_cast<int>(std::ceil(poly.size() / 4.0)));
        SketchLoop spline;
        for (int round = 0; round < 6; ++round) {
            double resid = 0;
            spline = fit_closed_bspline(poly, n_ctrl, &resid);
            if (resid < cell || n_ctrl >= static_cast<int>(poly.size())) break;
            n_ctrl = std::min(static_cast<int>(poly.size()), n_ctrl + (n_ctrl + 1) / 2);
        }
        out.splines.push_back(std::move(spline));
    }
    return out;
}

}  // namespace cylrev
