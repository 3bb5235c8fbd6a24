#pragma once

#include <filesystem>

#include "camflow/flow.hpp"

namespace camflow {

// Binary flow layout: 4-byte magic "CFLO", then height and width as
// little-endian 32-bit integers, then row-major (dy, dx) float32 pairs.
void write_flow_file(const std::filesystem::path& path, const FlowField& flow);
FlowField read_flow_file(const std::filesystem::path& path);

}  // namespace camflow
