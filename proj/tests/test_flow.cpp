#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "camflow/errors.hpp"
#include "camflow/flow.hpp"
#include "camflow/synth.hpp"
#include "camflow/tracking.hpp"
#include "helpers.hpp"

using namespace camflow;

namespace {

// Mean endpoint error against a constant ground-truth displacement, interior
// only (border pixels excluded).
double mean_epe(const FlowField& flow, double gt_dy, double gt_dx, int border) {
    double total = 0.0;
    long count = 0;
    for (int y = border; y < flow.height - border; ++y) {
        for (int x = border; x < flow.width - border; ++x) {
            const std::size_t i = flow.idx(y, x);
            total += std::hypot(flow.dy[i] - gt_dy, flow.dx[i] - gt_dx);
            ++count;
        }
    }
    return total / count;
}

SynthSpec pan_spec(double v, int frames, int size, std::uint64_t seed) {
    SynthSpec spec;
    spec.id = "pan";
    spec.seed = seed;
    spec.height = size;
    spec.width = size;
    spec.frames = frames;
    spec.path = CameraPath::pan;
    spec.pan_v = v;
    return spec;
}

}  // namespace

TEST_SUITE("flow") {

TEST_CASE("dense_flow on identical frames is exactly zero") {
    auto gen = testutil::rng(31);
    const Grid2D frame = testutil::random_grid(gen, 48, 48, 0.0, 1.0);
    const FlowField flow = dense_flow(frame, frame);
    CHECK_FALSE(flow.degenerate);
    for (std::size_t i = 0; i < flow.dy.size(); ++i) {
        CHECK(flow.dy[i] == 0.0);
        CHECK(flow.dx[i] == 0.0);
    }
}

TEST_CASE("dense_flow recovers a 2-px translation within 0.5 px") {
    const SynthResult synth = generate_synth(pan_spec(2.0, 2, 96, 5));
    const FlowField flow = dense_flow(synth.frames.frames[0], synth.frames.frames[1]);
    CHECK_FALSE(flow.degenerate);
    CHECK(flow.all_finite());
    CHECK(mean_epe(flow, 0.0, 2.0, 5) < 0.5);
}

TEST_CASE("dense_flow flags constant frames as degenerate") {
    const Grid2D gray(32, 32, 0.5);
    const FlowField flow = dense_flow(gray, gray);
    CHECK(flow.degenerate);
    for (std::size_t i = 0; i < flow.dy.size(); ++i) {
        CHECK(flow.dy[i] == 0.0);
        CHECK(flow.dx[i] == 0.0);
    }
}

TEST_CASE("dense_flow rejects mismatched dimensions") {
    CHECK_THROWS_AS(dense_flow(Grid2D(8, 8, 0.1), Grid2D(8, 9, 0.1)), std::invalid_argument);
}

TEST_CASE("dense_flow is approximately antisymmetric on translations") {
    const SynthResult synth = generate_synth(pan_spec(1.5, 2, 96, 6));
    const Grid2D& a = synth.frames.frames[0];
    const Grid2D& b = synth.frames.frames[1];
    const FlowField fwd = dense_flow(a, b);
    const FlowField bwd = dense_flow(b, a);
    double total = 0.0;
    long count = 0;
    for (int y = 5; y < fwd.height - 5; ++y) {
        for (int x = 5; x < fwd.width - 5; ++x) {
            const std::size_t i = fwd.idx(y, x);
            total += std::hypot(fwd.dy[i] + bwd.dy[i], fwd.dx[i] + bwd.dx[i]);
            ++count;
        }
    }
    CHECK(total / count < 0.5);
}

TEST_CASE("dense_flow ignores a shared constant intensity offset") {
    const SynthResult synth = generate_synth(pan_spec(1.0, 2, 64, 7));
    Grid2D a = synth.frames.frames[0];
    Grid2D b = synth.frames.frames[1];
    const FlowField base = dense_flow(a, b);
    for (double& v : a.values()) v += 0.05;
    for (double& v : b.values()) v += 0.05;
    const FlowField shifted = dense_flow(a, b);
    CHECK(testutil::max_abs_diff(base.dy, shifted.dy) < 1e-12);
    CHECK(testutil::max_abs_diff(base.dx, shifted.dx) < 1e-12);
}

TEST_CASE("shi_tomasi_corners returns nothing on a constant frame") {
    CHECK(shi_tomasi_corners(Grid2D(32, 32, 0.3), 50, 0.01, 4.0).empty());
}

TEST_CASE("shi_tomasi_corners finds the vertices of a bright square") {
    Grid2D frame(40, 40, 0.0);
    for (int y = 10; y < 22; ++y) {
        for (int x = 10; x < 22; ++x) frame.at(y, x) = 1.0;
    }
    const auto corners = shi_tomasi_corners(frame, 10, 0.2, 5.0);
    REQUIRE(corners.size() == 4);

    // oracle: vertices of the painted square
    const double vy[4] = {10, 10, 21, 21};
    const double vx[4] = {10, 21, 10, 21};
    for (int v = 0; v < 4; ++v) {
        double best = 1e9;
        for (const Corner& c : corners) {
            best = std::min(best, std::max(std::fabs(c.y - vy[v]), std::fabs(c.x - vx[v])));
        }
        CHECK(best <= 1.0);
    }
}

TEST_CASE("shi_tomasi_corners finds checkerboard intersections") {
    const int cell = 8, size = 64;
    Grid2D board(size, size);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            board.at(y, x) = ((y / cell) + (x / cell)) % 2 == 0 ? 1.0 : 0.0;
        }
    }
    const auto corners = shi_tomasi_corners(board, 100, 0.2, 4.0);
    // oracle: one corner per interior cell intersection
    const int per_axis = size / cell - 1;
    CHECK(static_cast<int>(corners.size()) == per_axis * per_axis);
    for (const Corner& c : corners) {
        const double ry = std::fabs(c.y - cell * std::round(c.y / cell));
        const double rx = std::fabs(c.x - cell * std::round(c.x / cell));
        CHECK(ry <= 1.0);
        CHECK(rx <= 1.0);
    }
}

TEST_CASE("shi_tomasi_corners respects min_distance and ordering") {
    auto gen = testutil::rng(32);
    const Grid2D frame = testutil::random_grid(gen, 64, 64, 0.0, 1.0);
    const double min_distance = 6.0;
    const auto corners = shi_tomasi_corners(frame, 40, 0.01, min_distance);
    REQUIRE(!corners.empty());
    for (std::size_t i = 0; i + 1 < corners.size(); ++i) {
        CHECK(corners[i].score >= corners[i + 1].score);
    }
    for (std::size_t i = 0; i < corners.size(); ++i) {
        CHECK(corners[i].score >= 0.0);
        for (std::size_t j = i + 1; j < corners.size(); ++j) {
            const double d = std::hypot(corners[i].y - corners[j].y,
                                        corners[i].x - corners[j].x);
            CHECK(d >= min_distance);
        }
    }
}

TEST_CASE("lk_track on identical frames returns exact zeros") {
    const SynthResult synth = generate_synth(pan_spec(0.0, 1, 64, 8));
    const Grid2D& frame = synth.frames.frames[0];
    const auto corners = shi_tomasi_corners(frame, 20, 0.05, 6.0);
    REQUIRE(!corners.empty());
    const auto tracked = lk_track(frame, frame, corners);
    for (const TrackedPoint& tp : tracked) {
        CHECK(tp.converged);
        CHECK(tp.dy == 0.0);
        CHECK(tp.dx == 0.0);
    }
}

TEST_CASE("lk_track recovers a 3-px shift within 0.3 px") {
    const SynthResult synth = generate_synth(pan_spec(3.0, 2, 96, 9));
    const Grid2D& prev = synth.frames.frames[0];
    const Grid2D& next = synth.frames.frames[1];
    auto corners = shi_tomasi_corners(prev, 30, 0.05, 8.0);
    // drop corners too close to the border for a clean 15x15 window
    std::erase_if(corners, [&](const Corner& c) {
        return c.y < 12 || c.x < 12 || c.y > prev.height() - 13 || c.x > prev.width() - 13;
    });
    REQUIRE(corners.size() >= 5);
    const auto tracked = lk_track(prev, next, corners);
    int converged = 0;
    for (const TrackedPoint& tp : tracked) {
        if (!tp.converged) continue;
        ++converged;
        CHECK(std::hypot(tp.dy - 0.0, tp.dx - 3.0) < 0.3);
    }
    CHECK(converged >= 5);
}

TEST_CASE("lk_track flags textureless points as non-converged") {
    Grid2D frame(64, 64, 0.5);
    // texture only in the left half
    auto gen = testutil::rng(33);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (int y = 0; y < 64; ++y) {
        for (int x = 0; x < 24; ++x) frame.at(y, x) = dist(gen);
    }
    const std::vector<Corner> points = {{32.0, 50.0, 0.0}};
    const auto tracked = lk_track(frame, frame, points);
    REQUIRE(tracked.size() == 1);
    CHECK_FALSE(tracked[0].converged);
}

TEST_CASE("estimate_transform recovers a pure translation") {
    std::vector<Match> matches;
    for (int i = 0; i < 5; ++i) {
        matches.push_back({10.0 + 7 * i, 4.0 + 5 * i, 1.0, 2.0});
    }
    const FrameTransform t = estimate_transform(matches);
    CHECK(t.ty == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(t.tx == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(t.angle == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("estimate_transform recovers a synthesized rotation") {
    // oracle: rotate points 5 degrees about the frame center, zero translation
    const double angle = 5.0 * 3.14159265358979323846 / 180.0;
    const double c = std::cos(angle), s = std::sin(angle);
    const double cy = 32.0, cx = 32.0;
    auto gen = testutil::rng(34);
    std::uniform_real_distribution<double> dist(2.0, 62.0);
    std::vector<Match> matches;
    for (int i = 0; i < 24; ++i) {
        const double y = dist(gen), x = dist(gen);
        const double qx = c * (x - cx) - s * (y - cy) + cx;
        const double qy = s * (x - cx) + c * (y - cy) + cy;
        matches.push_back({y, x, qy - y, qx - x});
    }
    const FrameTransform t = estimate_transform(matches);
    CHECK(std::fabs(t.angle - angle) < 0.2 * 3.14159265358979323846 / 180.0);
}

TEST_CASE("estimate_transform reproduces a noiseless transform to 1e-6") {
    const double angle = -0.03, ty = 1.25, tx = -0.75;
    const double c = std::cos(angle), s = std::sin(angle);
    auto gen = testutil::rng(35);
    std::uniform_real_distribution<double> dist(0.0, 100.0);
    std::vector<Match> matches;
    for (int i = 0; i < 12; ++i) {
        const double y = dist(gen), x = dist(gen);
        const double qx = c * x - s * y + tx;
        const double qy = s * x + c * y + ty;
        matches.push_back({y, x, qy - y, qx - x});
    }
    const FrameTransform t = estimate_transform(matches);
    CHECK(std::fabs(t.ty - ty) < 1e-6);
    CHECK(std::fabs(t.tx - tx) < 1e-6);
    CHECK(std::fabs(t.angle - angle) < 1e-6);
}

TEST_CASE("estimate_transform survives one gross outlier") {
    std::vector<Match> matches;
    for (int i = 0; i < 9; ++i) {
        matches.push_back({5.0 * i, 3.0 * i + 1.0, 2.0, -1.0});
    }
    matches.push_back({20.0, 20.0, 35.0, -12.0});
    const FrameTransform t = estimate_transform(matches, TransformModel::translation);
    CHECK(t.ty == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(t.tx == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("estimate_transform wants 3 matches for the rigid model") {
    std::vector<Match> two = {{0, 0, 1, 1}, {5, 5, 1, 1}};
    CHECK_THROWS_AS(estimate_transform(two, TransformModel::rigid), InsufficientDataError);
    CHECK_THROWS_AS(estimate_transform({}, TransformModel::translation), InsufficientDataError);
    // translation-only succeeds with a single match
    const FrameTransform t = estimate_transform({{3, 3, 0.5, 0.25}}, TransformModel::translation);
    CHECK(t.ty == 0.5);
    CHECK(t.tx == 0.25);
}

}  // TEST_SUITE
