#include "camflow/motion_rank.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace camflow {

Box Box::clipped(int width, int height) const {
    Box b;
    b.x1 = std::clamp(x1, 0, width);
    b.x2 = std::clamp(x2, 0, width);
    b.y1 = std::clamp(y1, 0, height);
    b.y2 = std::clamp(y2, 0, height);
    return b;
}

FlowField mask_flow(const FlowField& flow, const std::vector<Box>& boxes) {
    FlowField out = flow;
    for (const Box& raw : boxes) {
        const Box b = raw.clipped(flow.width, flow.height);
        if (!b.valid()) continue;
        for (int y = b.y1; y < b.y2; ++y) {
            for (int x = b.x1; x < b.x2; ++x) {
                out.dy[out.idx(y, x)] = 0.0;
                out.dx[out.idx(y, x)] = 0.0;
            }
        }
    }
    return out;
}

double frame_flow_magnitude(const FlowField& masked) {
    if (masked.height <= 0 || masked.width <= 0) return 0.0;
    double sum = 0.0;
    const std::size_t n = masked.dy.size();
    for (std::size_t i = 0; i < n; ++i) {
        sum += std::hypot(masked.dy[i], masked.dx[i]);
    }
    return sum / static_cast<double>(masked.height) / static_cast<double>(masked.width);
}

double frame_flow_magnitude_unmasked_denominator(const FlowField& masked,
                                                 const std::vector<Box>& boxes) {
    if (masked.height <= 0 || masked.width <= 0) return 0.0;
    double sum = 0.0;
    long unmasked = 0;
    for (int y = 0; y < masked.height; ++y) {
        for (int x = 0; x < masked.width; ++x) {
            bool inside = false;
            for (const Box& raw : boxes) {
                const Box b = raw.clipped(masked.width, masked.height);
                if (b.valid() && b.contains(x, y)) {
                    inside = true;
                    break;
                }
            }
            if (inside) continue;
            ++unmasked;
            sum += masked.magnitude_at(y, x);
        }
    }
    return unmasked > 0 ? sum / unmasked : 0.0;
}

double rank_from_series(const std::vector<double>& flow_series, int nframes) {
    if (flow_series.size() < 2 || nframes <= 0) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < flow_series.size(); ++i) {
        total += std::fabs(flow_series[i + 1] - flow_series[i]);
    }
    return total / nframes;
}

double compute_rank(const MotionProfile& profile) {
    return rank_from_series(profile.flow, profile.nframes);
}

RankFlowResult rank_video_flow(const std::vector<Grid2D>& frames,
                               const BoxAnnotations& boxes,
                               const RankFlowParams& params,
                               const std::string& video_id) {
    if (frames.size() < 2) {
        throw std::invalid_argument("rank_video_flow: need at least 2 frames");
    }
    RankFlowResult result;
    result.profile.video_id = video_id;
    result.profile.nframes = static_cast<int>(frames.size());
    result.profile.flow.reserve(frames.size() - 1);

    static const std::vector<Box> no_boxes;
    for (std::size_t t = 0; t + 1 < frames.size(); ++t) {
        const FlowField raw = dense_flow(frames[t], frames[t + 1], params.flow);
        if (raw.degenerate) {
            result.profile.degenerate_pairs.push_back(static_cast<int>(t));
        }
        const auto it = boxes.find(static_cast<int>(t));
        const std::vector<Box>& frame_boxes = it != boxes.end() ? it->second : no_boxes;
        const FlowField masked = mask_flow(raw, frame_boxes);
        const double mag = params.unmasked_denominator
                               ? frame_flow_magnitude_unmasked_denominator(masked, frame_boxes)
                               : frame_flow_magnitude(masked);
        result.profile.flow.push_back(mag);
    }
    result.rank = compute_rank(result.profile);
    return result;
}

RankStabilizeResult rank_video_stabilize(const std::vector<Grid2D>& frames,
                                         const RankStabilizeParams& params) {
    if (frames.size() < 2) {
        throw std::invalid_argument("rank_video_stabilize: need at least 2 frames");
    }
    RankStabilizeResult result;
    const int nframes = static_cast<int>(frames.size());
    const double lambda =
        std::hypot(static_cast<double>(frames[0].height()), static_cast<double>(frames[0].width())) /
        3.14159265358979323846;

    double total = 0.0;
    for (std::size_t t = 0; t + 1 < frames.size(); ++t) {
        const std::vector<Corner> corners = shi_tomasi_corners(
            frames[t], params.max_corners, params.quality_level, params.min_distance);
        const std::vector<TrackedPoint> tracked =
            lk_track(frames[t], frames[t + 1], corners, params.lk);

        std::vector<Match> matches;
        matches.reserve(tracked.size());
        for (const TrackedPoint& tp : tracked) {
            if (tp.converged) matches.push_back({tp.y, tp.x, tp.dy, tp.dx});
        }
        if (matches.size() < 3) {
            result.insufficient_pairs.push_back(static_cast<int>(t));
            result.magnitudes.push_back(0.0);
            continue;
        }
        const FrameTransform tf = estimate_transform(matches, TransformModel::rigid);
        const double mag = std::hypot(tf.ty, tf.tx) + lambda * std::fabs(tf.angle);
        result.magnitudes.push_back(mag);
        total += mag;
    }
    result.rank = total / nframes;
    return result;
}

RankingReport build_report(std::vector<VideoRanking> rankings, int bins) {
    if (rankings.empty()) {
        throw std::invalid_argument("build_report: empty ranking list");
    }
    if (bins <= 0) {
        throw std::invalid_argument("build_report: bins must be positive");
    }
    RankingReport report;
    std::sort(rankings.begin(), rankings.end(), [](const VideoRanking& a, const VideoRanking& b) {
        if (a.rank != b.rank) return a.rank > b.rank;
        return a.video < b.video;
    });

    double max_rank = 0.0;
    for (const VideoRanking& r : rankings) max_rank = std::max(max_rank, r.rank);

    // Degenerate all-zero corpus still gets well-formed bins.
    const double span = max_rank > 0.0 ? max_rank : 1.0;
    const double width = span / bins;
    report.histogram.resize(bins);
    for (int b = 0; b < bins; ++b) {
        report.histogram[b].lo = b * width;
        report.histogram[b].hi = (b + 1) * width;
    }
    for (const VideoRanking& r : rankings) {
        int b = static_cast<int>(r.rank / width);
        b = std::clamp(b, 0, bins - 1);  // max rank belongs to the last bin
        report.histogram[b].count += 1;
    }
    report.videos = std::move(rankings);
    return report;
}

}  // namespace camflow
