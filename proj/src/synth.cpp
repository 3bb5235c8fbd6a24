#include "camflow/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "camflow/errors.hpp"

namespace camflow {

namespace {

// White noise blurred with three box-filter passes: band-limited enough for
// flow estimation to be well posed.
Grid2D make_texture(int height, int width, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    Grid2D tex(height, width);
    for (double& v : tex.values()) v = dist(rng);

    const int rad = 2;
    Grid2D tmp(height, width);
    for (int pass = 0; pass < 3; ++pass) {
        // horizontal
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                double sum = 0.0;
                for (int d = -rad; d <= rad; ++d) {
                    sum += tex.at(y, std::clamp(x + d, 0, width - 1));
                }
                tmp.at(y, x) = sum / (2 * rad + 1);
            }
        }
        // vertical
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                double sum = 0.0;
                for (int d = -rad; d <= rad; ++d) {
                    sum += tmp.at(std::clamp(y + d, 0, height - 1), x);
                }
                tex.at(y, x) = sum / (2 * rad + 1);
            }
        }
    }

    // stretch back to [0.1, 0.9] so quantization to 8 bits keeps contrast
    const auto [lo, hi] = tex.min_max();
    const double span = hi - lo;
    if (span > 0.0) {
        for (double& v : tex.values()) v = 0.1 + 0.8 * (v - lo) / span;
    }
    return tex;
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

// Coverage-weighted composite of an axis-aligned square onto the frame.
void composite_sprite(Grid2D& frame, double top, double left, int size, double value) {
    const double bottom = top + size, right = left + size;
    const int y_begin = std::max(0, static_cast<int>(std::floor(top)));
    const int y_end = std::min(frame.height(), static_cast<int>(std::ceil(bottom)));
    const int x_begin = std::max(0, static_cast<int>(std::floor(left)));
    const int x_end = std::min(frame.width(), static_cast<int>(std::ceil(right)));
    for (int y = y_begin; y < y_end; ++y) {
        const double cy = std::min<double>(y + 1, bottom) - std::max<double>(y, top);
        for (int x = x_begin; x < x_end; ++x) {
            const double cx = std::min<double>(x + 1, right) - std::max<double>(x, left);
            const double coverage = std::clamp(cy, 0.0, 1.0) * std::clamp(cx, 0.0, 1.0);
            frame.at(y, x) = (1.0 - coverage) * frame.at(y, x) + coverage * value;
        }
    }
}

}  // namespace

std::vector<std::array<double, 2>> camera_path_displacements(const SynthSpec& spec) {
    std::vector<std::array<double, 2>> displacements;
    if (spec.frames < 2) return displacements;
    displacements.reserve(spec.frames - 1);
    for (int t = 0; t + 1 < spec.frames; ++t) {
        std::array<double, 2> d = {0.0, 0.0};
        if (spec.path == CameraPath::pan || spec.path == CameraPath::mixed) {
            d[1] += spec.pan_v;
        }
        if (spec.path == CameraPath::jitter || spec.path == CameraPath::mixed) {
            // Shake-then-rest cycle: +a / rest / -a / rest per axis, axes
            // alternating. Mean displacement is zero; the true magnitude
            // series a,0,a,0,... carries a nonzero moving difference, so the
            // rank scales with the amplitude.
            const double a = spec.jitter_amplitude;
            switch (t % 8) {
                case 0: d[0] += a; break;
                case 2: d[0] -= a; break;
                case 4: d[1] += a; break;
                case 6: d[1] -= a; break;
                default: break;  // rest
            }
        }
        displacements.push_back(d);
    }
    return displacements;
}

SynthResult generate_synth(const SynthSpec& spec) {
    if (spec.height < 8 || spec.width < 8) {
        throw SpecError("generate_synth: frame size too small");
    }
    if (spec.frames < 1) {
        throw SpecError("generate_synth: need at least one frame");
    }

    SynthResult result;
    result.displacements = camera_path_displacements(spec);
    result.magnitudes.reserve(result.displacements.size());
    for (const auto& d : result.displacements) {
        result.magnitudes.push_back(std::hypot(d[0], d[1]));
    }
    result.closed_form_rank = rank_from_series(result.magnitudes, spec.frames);

    // Frame t is a window into the texture canvas; a content translation of
    // +d between frames means the window origin moves by -d.
    std::vector<std::array<double, 2>> origins(spec.frames, {0.0, 0.0});
    double min_y = 0.0, max_y = 0.0, min_x = 0.0, max_x = 0.0;
    for (int t = 1; t < spec.frames; ++t) {
        origins[t][0] = origins[t - 1][0] - result.displacements[t - 1][0];
        origins[t][1] = origins[t - 1][1] - result.displacements[t - 1][1];
        min_y = std::min(min_y, origins[t][0]);
        max_y = std::max(max_y, origins[t][0]);
        min_x = std::min(min_x, origins[t][1]);
        max_x = std::max(max_x, origins[t][1]);
    }
    const int margin_y = static_cast<int>(std::ceil(std::max(-min_y, max_y))) + 2;
    const int margin_x = static_cast<int>(std::ceil(std::max(-min_x, max_x))) + 2;
    const Grid2D canvas =
        make_texture(spec.height + 2 * margin_y, spec.width + 2 * margin_x, spec.seed);

    result.frames.video_id = spec.id;
    result.frames.frame_rate_tag = "synthetic";
    result.frames.frames.reserve(spec.frames);
    for (int t = 0; t < spec.frames; ++t) {
        const double oy = margin_y + origins[t][0];
        const double ox = margin_x + origins[t][1];
        Grid2D frame(spec.height, spec.width);
        const bool integral = oy == std::floor(oy) && ox == std::floor(ox);
        for (int y = 0; y < spec.height; ++y) {
            for (int x = 0; x < spec.width; ++x) {
                frame.at(y, x) = integral
                                     ? canvas.at(static_cast<int>(oy) + y, static_cast<int>(ox) + x)
                                     : sample_clamped(canvas, oy + y, ox + x);
            }
        }

        if (spec.sprite) {
            const SpriteSpec& s = *spec.sprite;
            const double top = s.y0 + t * s.vy;
            const double left = s.x0 + t * s.vx;
            if (top < 0 || left < 0 || top + s.size > spec.height ||
                left + s.size > spec.width) {
                throw SpecError("generate_synth: sprite path leaves the frame at t=" +
                                std::to_string(t));
            }
            composite_sprite(frame, top, left, s.size, s.value);
            Box box;
            box.y1 = static_cast<int>(std::floor(top));
            box.x1 = static_cast<int>(std::floor(left));
            box.y2 = static_cast<int>(std::ceil(top + s.size));
            box.x2 = static_cast<int>(std::ceil(left + s.size));
            result.boxes[t].push_back(box.clipped(spec.width, spec.height));
        }

        result.frames.frames.push_back(std::move(frame));
    }
    return result;
}

SynthSpec load_synth_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("load_synth_spec: cannot open " + path.string());
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("load_synth_spec: invalid JSON in " + path.string() + ": " + e.what());
    }

    SynthSpec spec;
    try {
        spec.id = j.value("id", spec.id);
        spec.seed = j.value("seed", spec.seed);
        spec.height = j.value("height", spec.height);
        spec.width = j.value("width", spec.width);
        spec.frames = j.value("frames", spec.frames);
        if (j.contains("path")) {
            const auto& p = j.at("path");
            const std::string type = p.at("type").get<std::string>();
            if (type == "static") {
                spec.path = CameraPath::static_camera;
            } else if (type == "pan") {
                spec.path = CameraPath::pan;
                spec.pan_v = p.at("v").get<double>();
            } else if (type == "jitter") {
                spec.path = CameraPath::jitter;
                spec.jitter_amplitude = p.at("amplitude").get<double>();
            } else if (type == "mixed") {
                spec.path = CameraPath::mixed;
                spec.pan_v = p.at("v").get<double>();
                spec.jitter_amplitude = p.at("amplitude").get<double>();
            } else {
                throw FormatError("load_synth_spec: unknown path type '" + type + "'");
            }
        }
        if (j.contains("sprite")) {
            const auto& s = j.at("sprite");
            SpriteSpec sprite;
            sprite.y0 = s.at("y0").get<double>();
            sprite.x0 = s.at("x0").get<double>();
            sprite.vy = s.value("vy", 0.0);
            sprite.vx = s.value("vx", 0.0);
            sprite.size = s.value("size", sprite.size);
            sprite.value = s.value("value", sprite.value);
            spec.sprite = sprite;
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("load_synth_spec: bad field in " + path.string() + ": " + e.what());
    }
    return spec;
}

}  // namespace camflow
