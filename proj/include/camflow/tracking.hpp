#pragma once

#include <vector>

#include "camflow/grid.hpp"

namespace camflow {

/// One detected corner, score = min eigenvalue of the structure tensor.
struct Corner {
    double y = 0.0;
    double x = 0.0;
    double score = 0.0;
};

// Local maxima of the min-eigenvalue response, thresholded at
// quality_level * global max and non-max suppressed at min_distance.
// Sorted by descending score; may be empty.
std::vector<Corner> shi_tomasi_corners(const Grid2D& frame, int max_corners,
                                       double quality_level, double min_distance);

struct TrackedPoint {
    double y = 0.0;
    double x = 0.0;
    double dy = 0.0;
    double dx = 0.0;
    bool converged = false;
};

struct LkParams {
    int levels = 3;
    int window = 15;        // odd
    int iterations = 20;
    double epsilon = 0.01;  // converged when the update falls below this (px)
};

// Iterative pyramidal Lucas-Kanade per point. Non-converged points keep their
// last displacement estimate but are flagged.
std::vector<TrackedPoint> lk_track(const Grid2D& prev, const Grid2D& next,
                                   const std::vector<Corner>& points,
                                   const LkParams& params = {});

/// Rigid per-frame-pair motion: translation in pixels plus rotation in radians.
struct FrameTransform {
    double ty = 0.0;
    double tx = 0.0;
    double angle = 0.0;
};

enum class TransformModel { translation, rigid };

struct Match {
    double y = 0.0;
    double x = 0.0;
    double dy = 0.0;
    double dx = 0.0;
};

// Least-squares fit with one pass of outlier rejection (drop residuals above
// 3x the median, refit). Rigid needs >= 3 matches, translation >= 1; fewer
// raises InsufficientDataError.
FrameTransform estimate_transform(const std::vector<Match>& matches,
                                  TransformModel model = TransformModel::rigid);

}  // namespace camflow
