#pragma once

#include <vector>

#include "camflow/grid.hpp"

namespace camflow {

/// Per-pixel displacement field between two frames, (dy, dx) in pixels.
struct FlowField {
    int height = 0;
    int width = 0;
    std::vector<double> dy;
    std::vector<double> dx;
    bool degenerate = false;

    FlowField() = default;
    FlowField(int height, int width);

    std::size_t idx(int y, int x) const {
        return static_cast<std::size_t>(y) * width + x;
    }
    double magnitude_at(int y, int x) const;
    bool all_finite() const;
};

struct FlowParams {
    int levels = 4;             // pyramid levels including full resolution
    int iterations = 100;       // solver iterations per level
    double alpha = 0.05;        // smoothness weight, scaled to [0,1] intensities
    int min_level_size = 8;     // stop coarsening below this many pixels per side
};

// Coarse-to-fine variational flow (quadratic data + smoothness penalties,
// warping between levels). Frames must share dimensions and hold intensities
// in [0,1]. Constant frames produce zero flow with the degenerate flag set.
FlowField dense_flow(const Grid2D& prev, const Grid2D& next,
                     const FlowParams& params = {});

}  // namespace camflow
