#pragma once

#include <map>
#include <string>
#include <vector>

#include "camflow/flow.hpp"
#include "camflow/grid.hpp"
#include "camflow/tracking.hpp"

namespace camflow {

/// Axis-aligned pixel box, inclusive-exclusive: x1 <= x < x2, y1 <= y < y2.
struct Box {
    int x1 = 0;
    int y1 = 0;
    int x2 = 0;
    int y2 = 0;

    bool contains(int x, int y) const { return x >= x1 && x < x2 && y >= y1 && y < y2; }
    Box clipped(int width, int height) const;
    bool valid() const { return x1 < x2 && y1 < y2; }
};

/// Boxes grouped by 0-based frame index.
using BoxAnnotations = std::map<int, std::vector<Box>>;

/// Per-frame-pair average masked flow magnitude series for one video.
struct MotionProfile {
    std::string video_id;
    std::vector<double> flow;          // one value per consecutive frame pair
    int nframes = 0;
    std::vector<int> degenerate_pairs; // pair indices where flow was degenerate
};

// Zeroes displacement vectors at pixels strictly inside any box, leaves the
// rest untouched.
FlowField mask_flow(const FlowField& flow, const std::vector<Box>& boxes);

// Average Euclidean flow magnitude over ALL pixels; masked pixels contribute
// zero but stay in the denominator.
double frame_flow_magnitude(const FlowField& masked);

// Variant dividing by the count of unmasked pixels instead (0 if fully masked).
double frame_flow_magnitude_unmasked_denominator(const FlowField& masked,
                                                 const std::vector<Box>& boxes);

// Length-normalized total variation: (1/nframes) * sum |flow[i+1] - flow[i]|.
// Series with fewer than 2 values rank 0.
double rank_from_series(const std::vector<double>& flow_series, int nframes);
double compute_rank(const MotionProfile& profile);

struct RankFlowParams {
    FlowParams flow;
    bool unmasked_denominator = false;
};

struct RankFlowResult {
    MotionProfile profile;
    double rank = 0.0;
};

// Full flow-based pipeline per consecutive pair: dense_flow -> mask_flow ->
// frame_flow_magnitude, then the moving-difference rank.
RankFlowResult rank_video_flow(const std::vector<Grid2D>& frames,
                               const BoxAnnotations& boxes,
                               const RankFlowParams& params = {},
                               const std::string& video_id = "");

struct RankStabilizeParams {
    int max_corners = 200;
    double quality_level = 0.01;
    double min_distance = 8.0;
    LkParams lk;
};

struct RankStabilizeResult {
    double rank = 0.0;
    std::vector<double> magnitudes;      // per-pair transform magnitude
    std::vector<int> insufficient_pairs; // pairs lacking enough matches
};

// Stabilization-based ranking: corners -> LK -> rigid fit per pair, then the
// length-normalized sum of transform magnitudes. Rotation is converted to a
// pixel scale via lambda = frame diagonal / pi.
RankStabilizeResult rank_video_stabilize(const std::vector<Grid2D>& frames,
                                         const RankStabilizeParams& params = {});

struct VideoRanking {
    std::string video;
    double rank = 0.0;
    int nframes = 0;
    std::string method;  // "flow" or "stabilize"
    std::vector<std::string> flags;
};

struct HistogramBin {
    double lo = 0.0;
    double hi = 0.0;
    int count = 0;
};

struct RankingReport {
    std::vector<VideoRanking> videos;    // sorted descending by rank
    std::vector<HistogramBin> histogram; // fixed-width bins from 0 to max rank
};

// Sorts descending by rank (ties broken by video id) and bins ranks into
// `bins` uniform bins over [0, max rank]; the max rank lands in the last bin.
RankingReport build_report(std::vector<VideoRanking> rankings, int bins = 20);

}  // namespace camflow
