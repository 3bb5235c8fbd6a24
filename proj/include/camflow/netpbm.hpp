#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "camflow/grid.hpp"

namespace camflow {

/// Decoded netpbm image: grayscale (channels == 1) or RGB (channels == 3),
/// interleaved, up to 16 bits per sample.
struct PnmImage {
    int width = 0;
    int height = 0;
    int channels = 1;
    int maxval = 255;
    std::vector<std::uint16_t> samples;
};

// Binary PGM (P5) / PPM (P6) reader. 16-bit samples are big-endian per the
// netpbm convention.
PnmImage read_pnm(const std::filesystem::path& path);

// Normalizes to [0,1] and converts RGB to luma (0.299 R + 0.587 G + 0.114 B).
Grid2D pnm_to_gray(const PnmImage& image);

// Quantizes [0,1] values to a binary PGM; maxval 255 or 65535.
void write_pgm(const std::filesystem::path& path, const Grid2D& gray, int maxval = 255);

}  // namespace camflow
