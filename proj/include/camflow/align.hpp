#pragma once

#include <vector>

#include "camflow/grid.hpp"

namespace camflow {

/// Per-scale features for K+1 consecutive timesteps. Scale 0 is the finest;
/// spatial sizes strictly decrease toward the last (coarsest) scale.
class ClipFeatureStack {
public:
    ClipFeatureStack() = default;
    ClipFeatureStack(std::vector<std::vector<FeatureMap>> scales, int reference_index);

    int num_scales() const { return static_cast<int>(scales_.size()); }
    int timesteps() const { return scales_.empty() ? 0 : static_cast<int>(scales_[0].size()); }
    int reference_index() const { return reference_; }

    const FeatureMap& at(int scale, int t) const { return scales_[scale][t]; }
    FeatureMap& at(int scale, int t) { return scales_[scale][t]; }
    const std::vector<FeatureMap>& scale(int k) const { return scales_[k]; }

private:
    std::vector<std::vector<FeatureMap>> scales_;  // [scale][t]
    int reference_ = 0;
};

/// Per-timestep, per-cell (dy, dx) displacements for one scale, in that
/// scale's cell units.
struct OffsetField {
    int timesteps = 0;
    int height = 0;
    int width = 0;
    std::vector<double> dy;  // [t][y][x]
    std::vector<double> dx;

    OffsetField() = default;
    OffsetField(int timesteps, int height, int width);

    std::size_t idx(int t, int y, int x) const {
        return (static_cast<std::size_t>(t) * height + y) * width + x;
    }
    double& dy_at(int t, int y, int x) { return dy[idx(t, y, x)]; }
    double dy_at(int t, int y, int x) const { return dy[idx(t, y, x)]; }
    double& dx_at(int t, int y, int x) { return dx[idx(t, y, x)]; }
    double dx_at(int t, int y, int x) const { return dx[idx(t, y, x)]; }
};

/// One OffsetField per scale, indexed like ClipFeatureStack scales
/// (index 0 finest, last coarsest).
using OffsetPyramid = std::vector<OffsetField>;

/// Per-scale 3x3 convolutions mapping stacked clip channels to 2*(K+1) offset
/// channels; channel 2t is dy and 2t+1 is dx for timestep t.
struct OffsetPredictor {
    std::vector<ConvKernel> per_scale;
    int timesteps = 0;

    static OffsetPredictor zeros_for(const ClipFeatureStack& stack);
    // Constant predicted offset for one timestep at one scale (bias-only).
    void set_bias(int scale, int t, double dy, double dx);
};

/// Spatial tap weights shared across channels and timesteps.
struct TapKernel {
    int kh = 0;
    int kw = 0;
    std::vector<double> weights;

    static TapKernel identity(int kh = 3, int kw = 3);
    double w(int u, int v) const { return weights[static_cast<std::size_t>(u) * kw + v]; }
};

// Channel-wise concatenation in temporal order.
FeatureMap stack_features(const std::vector<FeatureMap>& maps);

// Per scale: conv2d over the stacked clip, reshaped into per-timestep fields.
OffsetPyramid predict_offsets(const ClipFeatureStack& stack, const OffsetPredictor& predictor);

// Coarse-to-fine refinement: the coarsest field passes through; each finer
// field adds the bilinear-upsampled coarser result. With rescale, upsampled
// offsets are multiplied by the spatial size ratio so displacement is
// preserved in each scale's own cell units (1-wide sources broadcast with
// ratio = fine size).
OffsetPyramid refine_offsets(const OffsetPyramid& raw, bool rescale = true);

// Deformable sampling at one scale: every tap of the kernel window
// is sampled at tap + offset via bilinear interpolation and accumulated with
// the tap weight. One offset pair per cell, shared across taps and channels.
std::vector<FeatureMap> deformable_sample(const ClipFeatureStack& stack,
                                          const OffsetPyramid& offsets, int scale,
                                          const TapKernel& kernel = TapKernel::identity());

struct DeformableGrads {
    std::vector<FeatureMap> features;  // per timestep, same dims as inputs
    OffsetField offsets;
};

// Gradients of deformable_sample wrt the scale's feature values and offsets,
// given upstream = dL/d(output) per timestep.
DeformableGrads deformable_sample_backward(const ClipFeatureStack& stack,
                                           const OffsetPyramid& offsets, int scale,
                                           const std::vector<FeatureMap>& upstream,
                                           const TapKernel& kernel = TapKernel::identity());

struct AlignParams {
    bool rescale_offsets = true;
    bool sample_reference = false;  // reference frame bypasses sampling by default
};

// predict_offsets -> refine_offsets -> deformable_sample at every scale.
ClipFeatureStack align_clip(const ClipFeatureStack& stack, const OffsetPredictor& predictor,
                            const AlignParams& params = {});

// The default 6-scale ladder, finest first.
std::vector<int> default_scale_sizes();

}  // namespace camflow
