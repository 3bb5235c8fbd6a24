#include "camflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace camflow {

FlowField::FlowField(int height, int width) : height(height), width(width) {
    if (height <= 0 || width <= 0) {
        throw std::invalid_argument("FlowField: dimensions must be positive");
    }
    dy.assign(static_cast<std::size_t>(height) * width, 0.0);
    dx.assign(static_cast<std::size_t>(height) * width, 0.0);
}

double FlowField::magnitude_at(int y, int x) const {
    const std::size_t i = idx(y, x);
    return std::hypot(dy[i], dx[i]);
}

bool FlowField::all_finite() const {
    auto finite = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double e) { return std::isfinite(e); });
    };
    return finite(dy) && finite(dx);
}

namespace {

inline double clamped(const Grid2D& g, int y, int x) {
    y = std::clamp(y, 0, g.height() - 1);
    x = std::clamp(x, 0, g.width() - 1);
    return g.at(y, x);
}

// Bilinear sampling with replicate borders; warping must not invent zeros.
double sample_clamped(const Grid2D& g, double y, double x) {
    y = std::clamp(y, 0.0, static_cast<double>(g.height() - 1));
    x = std::clamp(x, 0.0, static_cast<double>(g.width() - 1));
    const int y0 = std::min(static_cast<int>(y), g.height() - 2 >= 0 ? g.height() - 2 : 0);
    const int x0 = std::min(static_cast<int>(x), g.width() - 2 >= 0 ? g.width() - 2 : 0);
    const double ly = y - y0, lx = x - x0;
    const int y1 = std::min(y0 + 1, g.height() - 1);
    const int x1 = std::min(x0 + 1, g.width() - 1);
    return (1 - ly) * (1 - lx) * g.at(y0, x0) + (1 - ly) * lx * g.at(y0, x1) +
           ly * (1 - lx) * g.at(y1, x0) + ly * lx * g.at(y1, x1);
}

Grid2D blur3(const Grid2D& g) {
    // separable [1 2 1]/4 with replicate borders
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

// Classic weighted neighborhood average used by the iterative solver.
double local_average(const Grid2D& f, int y, int x) {
    const double c = 1.0 / 6.0, d = 1.0 / 12.0;
    return c * (clamped(f, y - 1, x) + clamped(f, y + 1, x) + clamped(f, y, x - 1) +
                clamped(f, y, x + 1)) +
           d * (clamped(f, y - 1, x - 1) + clamped(f, y - 1, x + 1) +
                clamped(f, y + 1, x - 1) + clamped(f, y + 1, x + 1));
}

struct LevelFlow {
    Grid2D u;  // dy
    Grid2D v;  // dx
};

// One pyramid level: warp `next` by the incoming flow, then solve for the
// residual flow with Jacobi iterations of the quadratic (data + smoothness)
// energy. Pixels whose warped coordinate leaves the frame have no
// correspondence; their data term is dropped and smoothness fills them in.
void solve_level(const Grid2D& prev, const Grid2D& next, int iterations,
                 double alpha, LevelFlow& flow) {
    const int h = prev.height(), w = prev.width();

    Grid2D warped(h, w);
    std::vector<bool> valid(static_cast<std::size_t>(h) * w, true);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double sy = y + flow.u.at(y, x);
            const double sx = x + flow.v.at(y, x);
            warped.at(y, x) = sample_clamped(next, sy, sx);
            if (sy < 0.0 || sy > h - 1.0 || sx < 0.0 || sx > w - 1.0) {
                valid[static_cast<std::size_t>(y) * w + x] = false;
            }
        }
    }

    // Derivatives of the average image; It from the warped difference.
    Grid2D ix(h, w), iy(h, w), it(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!valid[static_cast<std::size_t>(y) * w + x]) continue;
            const double gx_prev = 0.5 * (clamped(prev, y, x + 1) - clamped(prev, y, x - 1));
            const double gx_warp = 0.5 * (clamped(warped, y, x + 1) - clamped(warped, y, x - 1));
            const double gy_prev = 0.5 * (clamped(prev, y + 1, x) - clamped(prev, y - 1, x));
            const double gy_warp = 0.5 * (clamped(warped, y + 1, x) - clamped(warped, y - 1, x));
            ix.at(y, x) = 0.5 * (gx_prev + gx_warp);
            iy.at(y, x) = 0.5 * (gy_prev + gy_warp);
            it.at(y, x) = warped.at(y, x) - prev.at(y, x);
        }
    }

    Grid2D du(h, w), dv(h, w);
    Grid2D du_next(h, w), dv_next(h, w);
    for (int iter = 0; iter < iterations; ++iter) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double ubar = local_average(du, y, x);
                const double vbar = local_average(dv, y, x);
                const double gx = ix.at(y, x), gy = iy.at(y, x);
                const double common =
                    (gy * ubar + gx * vbar + it.at(y, x)) / (alpha + gx * gx + gy * gy);
                du_next.at(y, x) = ubar - gy * common;
                dv_next.at(y, x) = vbar - gx * common;
            }
        }
        std::swap(du, du_next);
        std::swap(dv, dv_next);
    }

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            flow.u.at(y, x) += du.at(y, x);
            flow.v.at(y, x) += dv.at(y, x);
        }
    }
}

Grid2D upsample_scaled(const Grid2D& coarse, int out_h, int out_w, double scale) {
    Grid2D fine = bilinear_upsample(coarse, out_h, out_w);
    for (double& v : fine.values()) v *= scale;
    return fine;
}

}  // namespace

FlowField dense_flow(const Grid2D& prev, const Grid2D& next, const FlowParams& params) {
    if (prev.empty() || next.empty()) {
        throw std::invalid_argument("dense_flow: empty frame");
    }
    if (prev.height() != next.height() || prev.width() != next.width()) {
        throw std::invalid_argument("dense_flow: frame dimension mismatch");
    }

    FlowField result(prev.height(), prev.width());
    const auto [pmin, pmax] = prev.min_max();
    const auto [nmin, nmax] = next.min_max();
    if (pmax - pmin < 1e-9 || nmax - nmin < 1e-9) {
        result.degenerate = true;
        return result;
    }

    // Build pyramids, coarsest last.
    std::vector<Grid2D> pyr_prev{prev}, pyr_next{next};
    for (int l = 1; l < params.levels; ++l) {
        const Grid2D& top = pyr_prev.back();
        if (std::min(top.height(), top.width()) / 2 < params.min_level_size) break;
        pyr_prev.push_back(downsample2(pyr_prev.back()));
        pyr_next.push_back(downsample2(pyr_next.back()));
    }

    const int coarsest = static_cast<int>(pyr_prev.size()) - 1;
    LevelFlow flow{Grid2D(pyr_prev[coarsest].height(), pyr_prev[coarsest].width()),
                   Grid2D(pyr_prev[coarsest].height(), pyr_prev[coarsest].width())};
    for (int l = coarsest; l >= 0; --l) {
        const Grid2D& p = pyr_prev[l];
        const Grid2D& n = pyr_next[l];
        if (l != coarsest) {
            const Grid2D& below_p = pyr_prev[l + 1];
            const double sy = below_p.height() > 1
                                  ? static_cast<double>(p.height() - 1) / (below_p.height() - 1)
                                  : 1.0;
            const double sx = below_p.width() > 1
                                  ? static_cast<double>(p.width() - 1) / (below_p.width() - 1)
                                  : 1.0;
            flow.u = upsample_scaled(flow.u, p.height(), p.width(), sy);
            flow.v = upsample_scaled(flow.v, p.height(), p.width(), sx);
        }
        solve_level(p, n, params.iterations, params.alpha, flow);
    }

    for (int y = 0; y < result.height; ++y) {
        for (int x = 0; x < result.width; ++x) {
            result.dy[result.idx(y, x)] = flow.u.at(y, x);
            result.dx[result.idx(y, x)] = flow.v.at(y, x);
        }
    }
    return result;
}

}  // namespace camflow
