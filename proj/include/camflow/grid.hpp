#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace camflow {

/// Dense 2-D grid of doubles, row-major.
class Grid2D {
public:
    Grid2D() = default;
    Grid2D(int height, int width, double fill = 0.0);
    Grid2D(int height, int width, std::vector<double> values);

    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    double& at(int y, int x) { return values_[idx(y, x)]; }
    double at(int y, int x) const { return values_[idx(y, x)]; }

    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    bool all_finite() const;
    std::pair<double, double> min_max() const;

private:
    std::size_t idx(int y, int x) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    int height_ = 0;
    int width_ = 0;
    std::vector<double> values_;
};

/// Multi-channel grid; all channels share height/width. Storage is channel-major.
class FeatureMap {
public:
    FeatureMap() = default;
    FeatureMap(int channels, int height, int width, double fill = 0.0);

    static FeatureMap from_channels(const std::vector<Grid2D>& channels);

    int channels() const { return channels_; }
    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }
    int plane() const { return height_ * width_; }

    double& at(int c, int y, int x) { return values_[idx(c, y, x)]; }
    double at(int c, int y, int x) const { return values_[idx(c, y, x)]; }

    double* channel_data(int c);
    const double* channel_data(int c) const;
    Grid2D channel(int c) const;

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    bool all_finite() const;
    bool same_shape(const FeatureMap& other) const {
        return channels_ == other.channels_ && height_ == other.height_ &&
               width_ == other.width_;
    }

private:
    std::size_t idx(int c, int y, int x) const {
        return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
    }

    int channels_ = 0;
    int height_ = 0;
    int width_ = 0;
    std::vector<double> values_;
};

// Bilinear interpolation with zero padding: samples fully outside the grid
// return 0, partial overlap interpolates against implicit zeros. Integer
// in-bounds coordinates return the stored value exactly.
double bilinear_sample(const FeatureMap& map, double y, double x, int channel);
double bilinear_sample(const Grid2D& grid, double y, double x);

// Accumulates d(sample)/d(map values) * upstream into grad_map (if non-null)
// and d(sample)/dy, d(sample)/dx * upstream into grad_y / grad_x (if non-null).
void bilinear_sample_backward(const FeatureMap& map, double y, double x, int channel,
                              double upstream, FeatureMap* grad_map,
                              double* grad_y, double* grad_x);

// Align-corners bilinear upsampling: source coordinate for output index i is
// i * (src - 1) / (dst - 1); a 1-wide source axis broadcasts its single value.
// Target must be at least as large as the source along both axes.
FeatureMap bilinear_upsample(const FeatureMap& map, int out_height, int out_width);
Grid2D bilinear_upsample(const Grid2D& grid, int out_height, int out_width);

/// 4-D convolution weights [out_ch][in_ch][kh][kw] plus per-out-channel bias.
struct ConvKernel {
    int out_channels = 0;
    int in_channels = 0;
    int kh = 0;
    int kw = 0;
    std::vector<double> weights;
    std::vector<double> bias;

    ConvKernel() = default;
    ConvKernel(int out_channels, int in_channels, int kh, int kw);

    double& w(int oc, int ic, int u, int v) { return weights[widx(oc, ic, u, v)]; }
    double w(int oc, int ic, int u, int v) const { return weights[widx(oc, ic, u, v)]; }

    std::size_t widx(int oc, int ic, int u, int v) const {
        return ((static_cast<std::size_t>(oc) * in_channels + ic) * kh + u) * kw + v;
    }
};

// Stride-1 convolution with same-size zero padding. Kernel dims must be odd
// and kernel in_channels must match the input channel count.
FeatureMap conv2d(const FeatureMap& input, const ConvKernel& kernel);

// Gradients of conv2d given upstream = dL/d(output). Accumulates into
// grad_input / grad_kernel when non-null; grad_kernel must be zero- or
// pre-initialized with the same shape as kernel.
void conv2d_backward(const FeatureMap& input, const ConvKernel& kernel,
                     const FeatureMap& upstream, FeatureMap* grad_input,
                     ConvKernel* grad_kernel);

// Elementwise two-way softmax, stabilized by subtracting the per-cell max:
// first = exp(a) / (exp(a) + exp(b)), second = 1 - first.
std::pair<Grid2D, Grid2D> softmax_pair(const Grid2D& a, const Grid2D& b);

// Per-channel arithmetic mean.
std::vector<double> global_avg_pool(const FeatureMap& map);

}  // namespace camflow
