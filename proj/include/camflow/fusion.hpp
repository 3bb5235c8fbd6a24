#pragma once

#include <cstdint>
#include <vector>

#include "camflow/grid.hpp"

namespace camflow {

/// Pooled per-channel scene descriptor plus the spatial dims it broadcasts to.
struct GlobalFeature {
    std::vector<double> values;  // one scalar per channel
    int height = 0;
    int width = 0;

    int channels() const { return static_cast<int>(values.size()); }
    FeatureMap broadcast() const;
};

// Per-channel mean of the local map, carrying its broadcast dims.
GlobalFeature make_global(const FeatureMap& local);

// 2C channels: 0..C-1 local, C..2C-1 broadcast global.
FeatureMap fuse_concat(const FeatureMap& local, const GlobalFeature& global);

// Elementwise (local + broadcast global) / 2; the sum variant omits the /2.
FeatureMap fuse_average(const FeatureMap& local, const GlobalFeature& global,
                        bool sum_variant = false);

/// Three-layer embedding network producing a one-channel weight map:
/// 1x1 (C -> C/2), 3x3 (C/2 -> C/2), 1x1 (C/2 -> 1), ramp nonlinearity between
/// layers. Zero-initialized by default.
class EmbedNet {
public:
    explicit EmbedNet(int channels);
    static EmbedNet random(int channels, std::uint64_t seed, double scale = 0.5);

    int input_channels() const { return channels_; }
    int hidden_channels() const { return reduce_.out_channels; }

    FeatureMap forward(const FeatureMap& input) const;

    std::vector<double> parameters() const;
    void set_parameters(const std::vector<double>& params);
    std::size_t parameter_count() const;

    // Intermediate activations needed by the backward pass.
    struct Cache {
        FeatureMap pre1, act1;  // after reduce conv, after ramp
        FeatureMap pre2, act2;  // after spatial conv, after ramp
        FeatureMap out;         // one channel
    };
    Cache forward_cached(const FeatureMap& input) const;

    struct Grads {
        FeatureMap input;
        std::vector<double> params;  // layout matches parameters()
    };
    // Gradients wrt input and parameters given upstream = dL/d(out).
    Grads backward(const FeatureMap& input, const Cache& cache,
                   const FeatureMap& upstream) const;

private:
    int channels_ = 0;
    ConvKernel reduce_;
    ConvKernel spatial_;
    ConvKernel project_;
};

/// Single-channel softmax weights, local + global = 1 everywhere.
struct FusionWeights {
    Grid2D local_weight;
    Grid2D global_weight;
};

struct WeightedFusion {
    FeatureMap fused;
    FusionWeights weights;
};

// Embedding-softmax weighted averaging: the shared EmbedNet embeds both the
// local map and the broadcast global map; the per-location softmax of the two
// embeddings weights a convex combination, broadcast across channels.
WeightedFusion fuse_weighted(const FeatureMap& local, const GlobalFeature& global,
                             const EmbedNet& embed);

struct WeightedFusionGrads {
    FeatureMap local;
    std::vector<double> global;        // per channel
    std::vector<double> embed_params;  // layout matches EmbedNet::parameters()
};

// Full chain rule through the weighted combination, the softmax, and both
// EmbedNet applications (shared parameters accumulate).
WeightedFusionGrads fuse_weighted_backward(const FeatureMap& local,
                                           const GlobalFeature& global,
                                           const EmbedNet& embed,
                                           const FeatureMap& upstream);

}  // namespace camflow
