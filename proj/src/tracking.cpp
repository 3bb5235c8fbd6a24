#include "camflow/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "camflow/errors.hpp"

namespace camflow {

namespace {

inline double clamped(const Grid2D& g, int y, int x) {
    y = std::clamp(y, 0, g.height() - 1);
    x = std::clamp(x, 0, g.width() - 1);
    return g.at(y, x);
}

double sample_clamped(const Grid2D& g, double y, double x) {
    y = std::clamp(y, 0.0, static_cast<double>(g.height() - 1));
    x = std::clamp(x, 0.0, static_cast<double>(g.width() - 1));
    const int y0 = std::min(static_cast<int>(y), std::max(g.height() - 2, 0));
    const int x0 = std::min(static_cast<int>(x), std::max(g.width() - 2, 0));
    const double ly = y - y0, lx = x - x0;
    const int y1 = std::min(y0 + 1, g.height() - 1);
    const int x1 = std::min(x0 + 1, g.width() - 1);
    return (1 - ly) * (1 - lx) * g.at(y0, x0) + (1 - ly) * lx * g.at(y0, x1) +
           ly * (1 - lx) * g.at(y1, x0) + ly * lx * g.at(y1, x1);
}

Grid2D blur3(const Grid2D& g) {
    Grid2D tmp(g.height(), g.width());
    for (int y = 0; y < g.height(); ++y) {
        for (int x = 0; x < g.width(); ++x) {
            tmp.at(y, x) = 0.25 * clamped(g, y, x - 1) + 0.5 * g.at(y, x) +
                           0.25 * clamped(g, y, x + 1);
        }
    }
    Grid2D out(g.height(), g.width());
    for (int y = 0; y < g.height(); ++y) {
        for (int x = 0; x < g.width(); ++x) {
            out.at(y, x) = 0.25 * clamped(tmp, y - 1, x) + 0.5 * tmp.at(y, x) +
                           0.25 * clamped(tmp, y + 1, x);
        }
    }
    return out;
}

Grid2D downsample2(const Grid2D& g) {
    const Grid2D smooth = blur3(g);
    const int oh = std::max(2, (g.height() + 1) / 2);
    const int ow = std::max(2, (g.width() + 1) / 2);
    Grid2D out(oh, ow);
    const double ry = oh > 1 ? static_cast<double>(g.height() - 1) / (oh - 1) : 0.0;
    const double rx = ow > 1 ? static_cast<double>(g.width() - 1) / (ow - 1) : 0.0;
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            out.at(y, x) = sample_clamped(smooth, y * ry, x * rx);
        }
    }
    return out;
}

void gradients(const Grid2D& g, Grid2D& gy, Grid2D& gx) {
    for (int y = 0; y < g.height(); ++y) {
        for (int x = 0; x < g.width(); ++x) {
            gy.at(y, x) = 0.5 * (clamped(g, y + 1, x) - clamped(g, y - 1, x));
            gx.at(y, x) = 0.5 * (clamped(g, y, x + 1) - clamped(g, y, x - 1));
        }
    }
}

}  // namespace

std::vector<Corner> shi_tomasi_corners(const Grid2D& frame, int max_corners,
                                       double quality_level, double min_distance) {
    if (frame.height() < 3 || frame.width() < 3) {
        throw std::invalid_argument("shi_tomasi_corners: frame must be at least 3x3");
    }
    const int h = frame.height(), w = frame.width();
    // One smoothing pass sharpens response localization on hard edges.
    const Grid2D smooth = blur3(frame);
    Grid2D gy(h, w), gx(h, w);
    gradients(smooth, gy, gx);

    // Min eigenvalue of the structure tensor summed over a box window.
    const int rad = 1;
    Grid2D response(h, w);
    double max_resp = 0.0;
    for (int y = rad + 1; y < h - rad - 1; ++y) {
        for (int x = rad + 1; x < w - rad - 1; ++x) {
            double sxx = 0.0, syy = 0.0, sxy = 0.0;
            for (int dy = -rad; dy <= rad; ++dy) {
                for (int dx = -rad; dx <= rad; ++dx) {
                    const double ix = gx.at(y + dy, x + dx);
                    const double iy = gy.at(y + dy, x + dx);
                    sxx += ix * ix;
                    syy += iy * iy;
                    sxy += ix * iy;
                }
            }
            const double half_trace = 0.5 * (sxx + syy);
            const double root = std::sqrt(0.25 * (sxx - syy) * (sxx - syy) + sxy * sxy);
            const double min_eig = half_trace - root;
            response.at(y, x) = min_eig;
            max_resp = std::max(max_resp, min_eig);
        }
    }
    if (max_resp <= 0.0) return {};

    const double threshold = quality_level * max_resp;
    std::vector<Corner> candidates;
    for (int y = 1; y < h - 1; ++y) {
        for (int x = 1; x < w - 1; ++x) {
            const double r = response.at(y, x);
            if (r < threshold || r <= 0.0) continue;
            bool local_max = true;
            for (int dy = -1; dy <= 1 && local_max; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dy == 0 && dx == 0) continue;
                    if (response.at(y + dy, x + dx) > r) {
                        local_max = false;
                        break;
                    }
                }
            }
            if (local_max) candidates.push_back({static_cast<double>(y), static_cast<double>(x), r});
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Corner& a, const Corner& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.y != b.y) return a.y < b.y;
        return a.x < b.x;
    });

    std::vector<Corner> accepted;
    const double min_dist_sq = min_distance * min_distance;
    for (const Corner& c : candidates) {
        if (max_corners > 0 && static_cast<int>(accepted.size()) >= max_corners) break;
        bool ok = true;
        for (const Corner& a : accepted) {
            const double ddy = a.y - c.y, ddx = a.x - c.x;
            if (ddy * ddy + ddx * ddx < min_dist_sq) {
                ok = false;
                break;
            }
        }
        if (ok) accepted.push_back(c);
    }
    return accepted;
}

std::vector<TrackedPoint> lk_track(const Grid2D& prev, const Grid2D& next,
                                   const std::vector<Corner>& points,
                                   const LkParams& params) {
    if (prev.height() != next.height() || prev.width() != next.width()) {
        throw std::invalid_argument("lk_track: frame dimension mismatch");
    }
    if (params.window % 2 == 0 || params.window < 3) {
        throw std::invalid_argument("lk_track: window must be odd and >= 3");
    }

    std::vector<Grid2D> pyr_prev{prev}, pyr_next{next};
    for (int l = 1; l < params.levels; ++l) {
        const Grid2D& top = pyr_prev.back();
        if (std::min(top.height(), top.width()) < 2 * params.window) break;
        pyr_prev.push_back(downsample2(pyr_prev.back()));
        pyr_next.push_back(downsample2(pyr_next.back()));
    }
    const int coarsest = static_cast<int>(pyr_prev.size()) - 1;

    std::vector<Grid2D> grad_y, grad_x;
    grad_y.reserve(pyr_prev.size());
    grad_x.reserve(pyr_prev.size());
    for (const Grid2D& level : pyr_prev) {
        Grid2D gy(level.height(), level.width()), gx(level.height(), level.width());
        gradients(level, gy, gx);
        grad_y.push_back(std::move(gy));
        grad_x.push_back(std::move(gx));
    }

    const int rad = params.window / 2;
    const double min_eig_threshold = 1e-6 * params.window * params.window;

    std::vector<TrackedPoint> result;
    result.reserve(points.size());
    for (const Corner& p : points) {
        TrackedPoint tp;
        tp.y = p.y;
        tp.x = p.x;

        double gy_acc = 0.0, gx_acc = 0.0;  // displacement carried across levels
        bool ok = true;
        bool converged_finest = false;
        for (int l = coarsest; l >= 0; --l) {
            const Grid2D& pl = pyr_prev[l];
            const Grid2D& nl = pyr_next[l];
            const double scale_y =
                pl.height() > 1 ? static_cast<double>(pl.height() - 1) / (prev.height() - 1) : 1.0;
            const double scale_x =
                pl.width() > 1 ? static_cast<double>(pl.width() - 1) / (prev.width() - 1) : 1.0;
            const double py = p.y * scale_y;
            const double px = p.x * scale_x;

            // Spatial gradient matrix around the point in the prev image.
            double sxx = 0.0, syy = 0.0, sxy = 0.0;
            for (int wy = -rad; wy <= rad; ++wy) {
                for (int wx = -rad; wx <= rad; ++wx) {
                    const double iy = sample_clamped(grad_y[l], py + wy, px + wx);
                    const double ix = sample_clamped(grad_x[l], py + wy, px + wx);
                    syy += iy * iy;
                    sxx += ix * ix;
                    sxy += ix * iy;
                }
            }
            const double det = sxx * syy - sxy * sxy;
            const double half_trace = 0.5 * (sxx + syy);
            const double min_eig =
                half_trace - std::sqrt(std::max(half_trace * half_trace - det, 0.0));
            if (min_eig < min_eig_threshold || det <= 0.0) {
                ok = false;
                break;
            }

            double vy = 0.0, vx = 0.0;
            bool level_converged = false;
            for (int iter = 0; iter < params.iterations; ++iter) {
                double by = 0.0, bx = 0.0;
                for (int wy = -rad; wy <= rad; ++wy) {
                    for (int wx = -rad; wx <= rad; ++wx) {
                        const double di =
                            sample_clamped(pl, py + wy, px + wx) -
                            sample_clamped(nl, py + wy + gy_acc + vy, px + wx + gx_acc + vx);
                        by += di * sample_clamped(grad_y[l], py + wy, px + wx);
                        bx += di * sample_clamped(grad_x[l], py + wy, px + wx);
                    }
                }
                const double uy = (sxx * by - sxy * bx) / det;
                const double ux = (syy * bx - sxy * by) / det;
                vy += uy;
                vx += ux;
                if (std::hypot(uy, ux) < params.epsilon) {
                    level_converged = true;
                    break;
                }
            }
            gy_acc += vy;
            gx_acc += vx;
            if (l == 0) converged_finest = level_converged;
            if (l > 0) {
                const Grid2D& up = pyr_prev[l - 1];
                const double ry =
                    pl.height() > 1 ? static_cast<double>(up.height() - 1) / (pl.height() - 1) : 2.0;
                const double rx =
                    pl.width() > 1 ? static_cast<double>(up.width() - 1) / (pl.width() - 1) : 2.0;
                gy_acc *= ry;
                gx_acc *= rx;
            }
        }

        tp.dy = gy_acc;
        tp.dx = gx_acc;
        tp.converged = ok && converged_finest;
        result.push_back(tp);
    }
    return result;
}

namespace {

FrameTransform fit_transform(const std::vector<Match>& matches, TransformModel model) {
    FrameTransform t;
    if (model == TransformModel::translation) {
        double sy = 0.0, sx = 0.0;
        for (const Match& m : matches) {
            sy += m.dy;
            sx += m.dx;
        }
        t.ty = sy / matches.size();
        t.tx = sx / matches.size();
        return t;
    }

    // 2-D Procrustes without scale: rotation from centered cross/dot sums.
    double pcy = 0.0, pcx = 0.0, qcy = 0.0, qcx = 0.0;
    for (const Match& m : matches) {
        pcy += m.y;
        pcx += m.x;
        qcy += m.y + m.dy;
        qcx += m.x + m.dx;
    }
    const double n = static_cast<double>(matches.size());
    pcy /= n;
    pcx /= n;
    qcy /= n;
    qcx /= n;

    double cross = 0.0, dot = 0.0;
    for (const Match& m : matches) {
        const double py = m.y - pcy, px = m.x - pcx;
        const double qy = m.y + m.dy - qcy, qx = m.x + m.dx - qcx;
        cross += px * qy - py * qx;
        dot += px * qx + py * qy;
    }
    t.angle = (cross == 0.0 && dot == 0.0) ? 0.0 : std::atan2(cross, dot);

    const double c = std::cos(t.angle), s = std::sin(t.angle);
    // q = R p + trans with R rotating (x, y) by angle (y down, x right)
    t.tx = qcx - (c * pcx - s * pcy);
    t.ty = qcy - (s * pcx + c * pcy);
    return t;
}

double residual(const Match& m, const FrameTransform& t) {
    const double c = std::cos(t.angle), s = std::sin(t.angle);
    const double qx = c * m.x - s * m.y + t.tx;
    const double qy = s * m.x + c * m.y + t.ty;
    return std::hypot(qy - (m.y + m.dy), qx - (m.x + m.dx));
}

}  // namespace

FrameTransform estimate_transform(const std::vector<Match>& matches, TransformModel model) {
    const std::size_t need = model == TransformModel::rigid ? 3 : 1;
    if (matches.size() < need) {
        throw InsufficientDataError("estimate_transform: need at least " +
                                    std::to_string(need) + " matches, got " +
                                    std::to_string(matches.size()));
    }

    FrameTransform t = fit_transform(matches, model);

    std::vector<double> residuals(matches.size());
    for (std::size_t i = 0; i < matches.size(); ++i) residuals[i] = residual(matches[i], t);
    std::vector<double> sorted = residuals;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    const double med = sorted[sorted.size() / 2];

    std::vector<Match> kept;
    kept.reserve(matches.size());
    for (std::size_t i = 0; i < matches.size(); ++i) {
        if (residuals[i] <= 3.0 * med + 1e-9) kept.push_back(matches[i]);
    }
    if (kept.size() >= need && kept.size() < matches.size()) {
        t = fit_transform(kept, model);
    }
    return t;
}

}  // namespace camflow
