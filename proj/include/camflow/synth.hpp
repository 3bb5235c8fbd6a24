#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "camflow/frames.hpp"
#include "camflow/motion_rank.hpp"

namespace camflow {

enum class CameraPath { static_camera, pan, jitter, mixed };

/// Moving bright square composited after the camera transform, with emitted
/// per-frame annotation boxes.
struct SpriteSpec {
    double y0 = 0.0;
    double x0 = 0.0;
    double vy = 0.0;
    double vx = 0.0;
    int size = 8;
    double value = 1.0;
};

struct SynthSpec {
    std::string id = "synth";
    std::uint64_t seed = 1;
    int height = 128;
    int width = 128;
    int frames = 30;
    CameraPath path = CameraPath::static_camera;
    double pan_v = 0.0;             // px/frame along +x
    // Shake amplitude in px; displacement cycles (+a,0), rest, (-a,0), rest,
    // (0,+a), rest, (0,-a), rest so the camera keeps returning to its start.
    double jitter_amplitude = 0.0;
    std::optional<SpriteSpec> sprite;
};

struct SynthResult {
    FrameSequence frames;
    BoxAnnotations boxes;
    // Apparent image-content translation (dy, dx) per consecutive frame pair;
    // this is what dense flow between the pair should recover.
    std::vector<std::array<double, 2>> displacements;
    std::vector<double> magnitudes;
    double closed_form_rank = 0.0;
};

// Closed-form per-pair displacements for a camera path (no rendering).
std::vector<std::array<double, 2>> camera_path_displacements(const SynthSpec& spec);

// Seeded band-limited texture translated along the camera path with bilinear
// resampling; deterministic per seed. Sprite paths leaving the frame raise
// SpecError.
SynthResult generate_synth(const SynthSpec& spec);

// JSON spec file, e.g. {"id":"v1","seed":7,"width":128,"height":128,
// "frames":30,"path":{"type":"jitter","amplitude":2.0},
// "sprite":{"y0":10,"x0":10,"vy":0.5,"vx":1.0,"size":8,"value":1.0}}.
SynthSpec load_synth_spec(const std::filesystem::path& path);

}  // namespace camflow
