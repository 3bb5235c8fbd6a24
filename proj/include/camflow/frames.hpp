#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "camflow/grid.hpp"
#include "camflow/motion_rank.hpp"

namespace camflow {

/// Ordered grayscale frames of one video, values in [0,1].
struct FrameSequence {
    std::string video_id;
    std::vector<Grid2D> frames;
    std::string frame_rate_tag;  // informational only

    int nframes() const { return static_cast<int>(frames.size()); }
    int height() const { return frames.empty() ? 0 : frames[0].height(); }
    int width() const { return frames.empty() ? 0 : frames[0].width(); }
};

// Loads every .pgm/.ppm in the directory, ordered by the numeric index in the
// filename stem. Gaps in numbering load fine with a warning; mixed dimensions
// raise FormatError.
FrameSequence load_frames(const std::filesystem::path& dir,
                          std::vector<std::string>* warnings = nullptr);

// Writes frames as zero-padded numbered PGMs (000.pgm, 001.pgm, ...).
void save_frames(const FrameSequence& sequence, const std::filesystem::path& dir,
                 int maxval = 255);

// CSV `frame,x1,y1,x2,y2` with 0-based frame indices. Boxes are clipped to
// frame_width x frame_height when both are positive; degenerate boxes raise
// FormatError with the offending line number.
BoxAnnotations load_annotations(const std::filesystem::path& path, int frame_width = 0,
                                int frame_height = 0,
                                std::vector<std::string>* warnings = nullptr);

void save_annotations(const BoxAnnotations& boxes, const std::filesystem::path& path);

}  // namespace camflow
