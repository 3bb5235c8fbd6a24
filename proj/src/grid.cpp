#include "camflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace camflow {

Grid2D::Grid2D(int height, int width, double fill)
    : height_(height), width_(width) {
    if (height <= 0 || width <= 0) {
        throw std::invalid_argument("Grid2D: dimensions must be positive");
    }
    values_.assign(static_cast<std::size_t>(height) * width, fill);
}

Grid2D::Grid2D(int height, int width, std::vector<double> values)
    : height_(height), width_(width), values_(std::move(values)) {
    if (height <= 0 || width <= 0) {
        throw std::invalid_argument("Grid2D: dimensions must be positive");
    }
    if (values_.size() != static_cast<std::size_t>(height) * width) {
        throw std::invalid_argument("Grid2D: values length must equal height * width");
    }
}

bool Grid2D::all_finite() const {
    return std::all_of(values_.begin(), values_.end(),
                       [](double v) { return std::isfinite(v); });
}

std::pair<double, double> Grid2D::min_max() const {
    auto [lo, hi] = std::minmax_element(values_.begin(), values_.end());
    return {*lo, *hi};
}

FeatureMap::FeatureMap(int channels, int height, int width, double fill)
    : channels_(channels), height_(height), width_(width) {
    if (channels <= 0 || height <= 0 || width <= 0) {
        throw std::invalid_argument("FeatureMap: dimensions must be positive");
    }
    values_.assign(static_cast<std::size_t>(channels) * height * width, fill);
}

FeatureMap FeatureMap::from_channels(const std::vector<Grid2D>& channels) {
    if (channels.empty()) {
        throw std::invalid_argument("FeatureMap::from_channels: need at least one channel");
    }
    const int h = channels.front().height();
    const int w = channels.front().width();
    FeatureMap map(static_cast<int>(channels.size()), h, w);
    for (std::size_t c = 0; c < channels.size(); ++c) {
        if (channels[c].height() != h || channels[c].width() != w) {
            throw std::invalid_argument("FeatureMap::from_channels: channel dims differ");
        }
        std::copy(channels[c].values().begin(), channels[c].values().end(),
                  map.channel_data(static_cast<int>(c)));
    }
    return map;
}

double* FeatureMap::channel_data(int c) {
    return values_.data() + static_cast<std::size_t>(c) * plane();
}

const double* FeatureMap::channel_data(int c) const {
    return values_.data() + static_cast<std::size_t>(c) * plane();
}

Grid2D FeatureMap::channel(int c) const {
    if (c < 0 || c >= channels_) {
        throw std::invalid_argument("FeatureMap::channel: index out of range");
    }
    std::vector<double> vals(channel_data(c), channel_data(c) + plane());
    return Grid2D(height_, width_, std::move(vals));
}

bool FeatureMap::all_finite() const {
    return std::all_of(values_.begin(), values_.end(),
                       [](double v) { return std::isfinite(v); });
}

namespace {

// Shared corner/weight decomposition for bilinear sampling on one channel.
struct BilinearTaps {
    int y0 = 0, x0 = 0;       // low corner
    double ly = 0.0, lx = 0.0; // fractional parts
    bool outside = false;      // fully outside the support
};

BilinearTaps bilinear_taps(int height, int width, double y, double x) {
    BilinearTaps t;
    if (y <= -1.0 || y >= static_cast<double>(height) || x <= -1.0 ||
        x >= static_cast<double>(width)) {
        t.outside = true;
        return t;
    }
    t.y0 = static_cast<int>(std::floor(y));
    t.x0 = static_cast<int>(std::floor(x));
    t.ly = y - t.y0;
    t.lx = x - t.x0;
    return t;
}

inline double cell_or_zero(const double* plane, int height, int width, int y, int x) {
    if (y < 0 || y >= height || x < 0 || x >= width) return 0.0;
    return plane[static_cast<std::size_t>(y) * width + x];
}

double sample_plane(const double* plane, int height, int width, double y, double x) {
    const BilinearTaps t = bilinear_taps(height, width, y, x);
    if (t.outside) return 0.0;
    const double v00 = cell_or_zero(plane, height, width, t.y0, t.x0);
    const double v01 = cell_or_zero(plane, height, width, t.y0, t.x0 + 1);
    const double v10 = cell_or_zero(plane, height, width, t.y0 + 1, t.x0);
    const double v11 = cell_or_zero(plane, height, width, t.y0 + 1, t.x0 + 1);
    const double hy = 1.0 - t.ly, hx = 1.0 - t.lx;
    return hy * hx * v00 + hy * t.lx * v01 + t.ly * hx * v10 + t.ly * t.lx * v11;
}

}  // namespace

double bilinear_sample(const FeatureMap& map, double y, double x, int channel) {
    if (map.empty()) {
        throw std::invalid_argument("bilinear_sample: empty map");
    }
    if (channel < 0 || channel >= map.channels()) {
        throw std::invalid_argument("bilinear_sample: channel index out of range");
    }
    return sample_plane(map.channel_data(channel), map.height(), map.width(), y, x);
}

double bilinear_sample(const Grid2D& grid, double y, double x) {
    if (grid.empty()) {
        throw std::invalid_argument("bilinear_sample: empty grid");
    }
    return sample_plane(grid.data(), grid.height(), grid.width(), y, x);
}

void bilinear_sample_backward(const FeatureMap& map, double y, double x, int channel,
                              double upstream, FeatureMap* grad_map,
                              double* grad_y, double* grad_x) {
    if (map.empty()) {
        throw std::invalid_argument("bilinear_sample_backward: empty map");
    }
    if (channel < 0 || channel >= map.channels()) {
        throw std::invalid_argument("bilinear_sample_backward: channel index out of range");
    }
    const int h = map.height(), w = map.width();
    const BilinearTaps t = bilinear_taps(h, w, y, x);
    if (t.outside) return;

    const double hy = 1.0 - t.ly, hx = 1.0 - t.lx;
    if (grad_map) {
        auto add = [&](int yy, int xx, double wgt) {
            if (yy >= 0 && yy < h && xx >= 0 && xx < w) {
                grad_map->at(channel, yy, xx) += upstream * wgt;
            }
        };
        add(t.y0, t.x0, hy * hx);
        add(t.y0, t.x0 + 1, hy * t.lx);
        add(t.y0 + 1, t.x0, t.ly * hx);
        add(t.y0 + 1, t.x0 + 1, t.ly * t.lx);
    }
    if (grad_y || grad_x) {
        const double* plane = map.channel_data(channel);
        const double v00 = cell_or_zero(plane, h, w, t.y0, t.x0);
        const double v01 = cell_or_zero(plane, h, w, t.y0, t.x0 + 1);
        const double v10 = cell_or_zero(plane, h, w, t.y0 + 1, t.x0);
        const double v11 = cell_or_zero(plane, h, w, t.y0 + 1, t.x0 + 1);
        if (grad_y) *grad_y += upstream * (hx * (v10 - v00) + t.lx * (v11 - v01));
        if (grad_x) *grad_x += upstream * (hy * (v01 - v00) + t.ly * (v11 - v10));
    }
}

namespace {

// Align-corners source coordinate; a 1-wide destination or source collapses to 0.
inline double src_coord(int dst_idx, int src_dim, int dst_dim) {
    if (dst_dim <= 1 || src_dim <= 1) return 0.0;
    return static_cast<double>(dst_idx) * (src_dim - 1) / (dst_dim - 1);
}

}  // namespace

FeatureMap bilinear_upsample(const FeatureMap& map, int out_height, int out_width) {
    if (map.empty()) {
        throw std::invalid_argument("bilinear_upsample: empty map");
    }
    if (out_height < map.height() || out_width < map.width()) {
        throw std::invalid_argument("bilinear_upsample: target smaller than source");
    }
    FeatureMap out(map.channels(), out_height, out_width);
    for (int c = 0; c < map.channels(); ++c) {
        const double* src = map.channel_data(c);
        double* dst = out.channel_data(c);
        for (int i = 0; i < out_height; ++i) {
            const double sy = src_coord(i, map.height(), out_height);
            for (int j = 0; j < out_width; ++j) {
                const double sx = src_coord(j, map.width(), out_width);
                dst[static_cast<std::size_t>(i) * out_width + j] =
                    sample_plane(src, map.height(), map.width(), sy, sx);
            }
        }
    }
    return out;
}

Grid2D bilinear_upsample(const Grid2D& grid, int out_height, int out_width) {
    if (grid.empty()) {
        throw std::invalid_argument("bilinear_upsample: empty grid");
    }
    if (out_height < grid.height() || out_width < grid.width()) {
        throw std::invalid_argument("bilinear_upsample: target smaller than source");
    }
    Grid2D out(out_height, out_width);
    for (int i = 0; i < out_height; ++i) {
        const double sy = src_coord(i, grid.height(), out_height);
        for (int j = 0; j < out_width; ++j) {
            const double sx = src_coord(j, grid.width(), out_width);
            out.at(i, j) = sample_plane(grid.data(), grid.height(), grid.width(), sy, sx);
        }
    }
    return out;
}

ConvKernel::ConvKernel(int out_channels, int in_channels, int kh, int kw)
    : out_channels(out_channels), in_channels(in_channels), kh(kh), kw(kw) {
    if (out_channels <= 0 || in_channels <= 0 || kh <= 0 || kw <= 0) {
        throw std::invalid_argument("ConvKernel: dimensions must be positive");
    }
    weights.assign(static_cast<std::size_t>(out_channels) * in_channels * kh * kw, 0.0);
    bias.assign(static_cast<std::size_t>(out_channels), 0.0);
}

FeatureMap conv2d(const FeatureMap& input, const ConvKernel& kernel) {
    if (input.empty()) {
        throw std::invalid_argument("conv2d: empty input");
    }
    if (kernel.in_channels != input.channels()) {
        throw std::invalid_argument("conv2d: kernel in_channels (" +
                                    std::to_string(kernel.in_channels) +
                                    ") != input channels (" +
                                    std::to_string(input.channels()) + ")");
    }
    if (kernel.kh % 2 == 0 || kernel.kw % 2 == 0) {
        throw std::invalid_argument("conv2d: kernel dims must be odd");
    }
    const int h = input.height(), w = input.width();
    const int ph = kernel.kh / 2, pw = kernel.kw / 2;
    FeatureMap out(kernel.out_channels, h, w);
    for (int oc = 0; oc < kernel.out_channels; ++oc) {
        double* dst = out.channel_data(oc);
        for (int i = 0; i < h; ++i) {
            for (int j = 0; j < w; ++j) {
                double acc = kernel.bias[oc];
                for (int ic = 0; ic < kernel.in_channels; ++ic) {
                    const double* src = input.channel_data(ic);
                    for (int u = 0; u < kernel.kh; ++u) {
                        const int yy = i + u - ph;
                        if (yy < 0 || yy >= h) continue;
                        for (int v = 0; v < kernel.kw; ++v) {
                            const int xx = j + v - pw;
                            if (xx < 0 || xx >= w) continue;
                            acc += kernel.w(oc, ic, u, v) *
                                   src[static_cast<std::size_t>(yy) * w + xx];
                        }
                    }
                }
                dst[static_cast<std::size_t>(i) * w + j] = acc;
            }
        }
    }
    return out;
}

void conv2d_backward(const FeatureMap& input, const ConvKernel& kernel,
                     const FeatureMap& upstream, FeatureMap* grad_input,
                     ConvKernel* grad_kernel) {
    if (kernel.in_channels != input.channels()) {
        throw std::invalid_argument("conv2d_backward: kernel/input channel mismatch");
    }
    if (upstream.channels() != kernel.out_channels ||
        upstream.height() != input.height() || upstream.width() != input.width()) {
        throw std::invalid_argument("conv2d_backward: upstream shape mismatch");
    }
    const int h = input.height(), w = input.width();
    const int ph = kernel.kh / 2, pw = kernel.kw / 2;
    for (int oc = 0; oc < kernel.out_channels; ++oc) {
        const double* up = upstream.channel_data(oc);
        if (grad_kernel) {
            double bsum = 0.0;
            for (int i = 0; i < h * w; ++i) bsum += up[i];
            grad_kernel->bias[oc] += bsum;
        }
        for (int i = 0; i < h; ++i) {
            for (int j = 0; j < w; ++j) {
                const double u_val = up[static_cast<std::size_t>(i) * w + j];
                if (u_val == 0.0) continue;
                for (int ic = 0; ic < kernel.in_channels; ++ic) {
                    for (int u = 0; u < kernel.kh; ++u) {
                        const int yy = i + u - ph;
                        if (yy < 0 || yy >= h) continue;
                        for (int v = 0; v < kernel.kw; ++v) {
                            const int xx = j + v - pw;
                            if (xx < 0 || xx >= w) continue;
                            if (grad_kernel) {
                                grad_kernel->w(oc, ic, u, v) += u_val * input.at(ic, yy, xx);
                            }
                            if (grad_input) {
                                grad_input->at(ic, yy, xx) += u_val * kernel.w(oc, ic, u, v);
                            }
                        }
                    }
                }
            }
        }
    }
}

std::pair<Grid2D, Grid2D> softmax_pair(const Grid2D& a, const Grid2D& b) {
    if (a.height() != b.height() || a.width() != b.width()) {
        throw std::invalid_argument("softmax_pair: dimension mismatch");
    }
    Grid2D wa(a.height(), a.width());
    Grid2D wb(a.height(), a.width());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double av = a.values()[i], bv = b.values()[i];
        const double m = std::max(av, bv);
        const double ea = std::exp(av - m), eb = std::exp(bv - m);
        const double first = ea / (ea + eb);
        wa.values()[i] = first;
        wb.values()[i] = 1.0 - first;
    }
    return {std::move(wa), std::move(wb)};
}

std::vector<double> global_avg_pool(const FeatureMap& map) {
    if (map.empty()) {
        throw std::invalid_argument("global_avg_pool: empty map");
    }
    std::vector<double> means(map.channels(), 0.0);
    const int plane = map.plane();
    for (int c = 0; c < map.channels(); ++c) {
        const double* src = map.channel_data(c);
        double sum = 0.0;
        for (int i = 0; i < plane; ++i) sum += src[i];
        means[c] = sum / plane;
    }
    return means;
}

}  // namespace camflow
