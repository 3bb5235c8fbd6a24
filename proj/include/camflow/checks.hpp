#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace camflow {

struct CheckResult {
    std::string name;
    bool pass = false;
    double measured = 0.0;
    double tolerance = 0.0;
};

struct CheckReport {
    std::vector<CheckResult> checks;

    bool all_pass() const;
    std::vector<std::string> failing_names() const;
};

// Invariant suite for the feature-alignment module: zero-offset identity,
// pyramid refinement propagation and linearity, analytic-gradient checks,
// and translation recovery.
CheckReport run_align_checks(std::uint64_t seed);

// Invariant suite for the fusion module: weight partition, reduction to plain
// averaging under a zero EmbedNet, convex bounds, softmax shift invariance,
// and analytic-gradient checks.
CheckReport run_fusion_checks(std::uint64_t seed);

void save_check_report(const CheckReport& report, const std::filesystem::path& path);

}  // namespace camflow
