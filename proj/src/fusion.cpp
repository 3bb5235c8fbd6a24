#include "camflow/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace camflow {

FeatureMap GlobalFeature::broadcast() const {
    if (values.empty() || height <= 0 || width <= 0) {
        throw std::invalid_argument("GlobalFeature::broadcast: empty descriptor");
    }
    FeatureMap out(channels(), height, width);
    for (int c = 0; c < channels(); ++c) {
        double* dst = out.channel_data(c);
        std::fill(dst, dst + out.plane(), values[c]);
    }
    return out;
}

GlobalFeature make_global(const FeatureMap& local) {
    GlobalFeature g;
    g.values = global_avg_pool(local);
    g.height = local.height();
    g.width = local.width();
    return g;
}

namespace {

void check_channels(const FeatureMap& local, const GlobalFeature& global, const char* op) {
    if (global.channels() != local.channels()) {
        throw std::invalid_argument(std::string(op) + ": channel count mismatch");
    }
    if (global.height != local.height() || global.width != local.width()) {
        throw std::invalid_argument(std::string(op) + ": broadcast dims mismatch");
    }
}

}  // namespace

FeatureMap fuse_concat(const FeatureMap& local, const GlobalFeature& global) {
    check_channels(local, global, "fuse_concat");
    const int c = local.channels();
    FeatureMap out(2 * c, local.height(), local.width());
    std::copy(local.values().begin(), local.values().end(), out.values().begin());
    for (int ch = 0; ch < c; ++ch) {
        double* dst = out.channel_data(c + ch);
        std::fill(dst, dst + out.plane(), global.values[ch]);
    }
    return out;
}

FeatureMap fuse_average(const FeatureMap& local, const GlobalFeature& global,
                        bool sum_variant) {
    check_channels(local, global, "fuse_average");
    FeatureMap out(local.channels(), local.height(), local.width());
    for (int c = 0; c < local.channels(); ++c) {
        const double g = global.values[c];
        const double* src = local.channel_data(c);
        double* dst = out.channel_data(c);
        for (int i = 0; i < local.plane(); ++i) {
            dst[i] = sum_variant ? src[i] + g : 0.5 * (src[i] + g);
        }
    }
    return out;
}

EmbedNet::EmbedNet(int channels) : channels_(channels) {
    if (channels <= 0) {
        throw std::invalid_argument("EmbedNet: channels must be positive");
    }
    const int half = std::max(1, channels / 2);
    reduce_ = ConvKernel(half, channels, 1, 1);
    spatial_ = ConvKernel(half, half, 3, 3);
    project_ = ConvKernel(1, half, 1, 1);
}

EmbedNet EmbedNet::random(int channels, std::uint64_t seed, double scale) {
    EmbedNet net(channels);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-scale, scale);
    auto fill = [&](ConvKernel& k) {
        for (double& w : k.weights) w = dist(rng);
        for (double& b : k.bias) b = dist(rng);
    };
    fill(net.reduce_);
    fill(net.spatial_);
    fill(net.project_);
    return net;
}

namespace {

FeatureMap ramp(const FeatureMap& in) {
    FeatureMap out = in;
    for (double& v : out.values()) v = std::max(0.0, v);
    return out;
}

}  // namespace

FeatureMap EmbedNet::forward(const FeatureMap& input) const {
    if (input.channels() != channels_) {
        throw std::invalid_argument("EmbedNet::forward: channel contract mismatch");
    }
    return conv2d(ramp(conv2d(ramp(conv2d(input, reduce_)), spatial_)), project_);
}

EmbedNet::Cache EmbedNet::forward_cached(const FeatureMap& input) const {
    if (input.channels() != channels_) {
        throw std::invalid_argument("EmbedNet::forward_cached: channel contract mismatch");
    }
    Cache cache;
    cache.pre1 = conv2d(input, reduce_);
    cache.act1 = ramp(cache.pre1);
    cache.pre2 = conv2d(cache.act1, spatial_);
    cache.act2 = ramp(cache.pre2);
    cache.out = conv2d(cache.act2, project_);
    return cache;
}

std::vector<double> EmbedNet::parameters() const {
    std::vector<double> params;
    params.reserve(parameter_count());
    for (const ConvKernel* k : {&reduce_, &spatial_, &project_}) {
        params.insert(params.end(), k->weights.begin(), k->weights.end());
        params.insert(params.end(), k->bias.begin(), k->bias.end());
    }
    return params;
}

void EmbedNet::set_parameters(const std::vector<double>& params) {
    if (params.size() != parameter_count()) {
        throw std::invalid_argument("EmbedNet::set_parameters: length mismatch");
    }
    std::size_t pos = 0;
    for (ConvKernel* k : {&reduce_, &spatial_, &project_}) {
        std::copy_n(params.begin() + pos, k->weights.size(), k->weights.begin());
        pos += k->weights.size();
        std::copy_n(params.begin() + pos, k->bias.size(), k->bias.begin());
        pos += k->bias.size();
    }
}

std::size_t EmbedNet::parameter_count() const {
    std::size_t n = 0;
    for (const ConvKernel* k : {&reduce_, &spatial_, &project_}) {
        n += k->weights.size() + k->bias.size();
    }
    return n;
}

EmbedNet::Grads EmbedNet::backward(const FeatureMap& input, const Cache& cache,
                                   const FeatureMap& upstream) const {
    Grads grads;
    grads.input = FeatureMap(input.channels(), input.height(), input.width());
    ConvKernel g_reduce(reduce_.out_channels, reduce_.in_channels, reduce_.kh, reduce_.kw);
    ConvKernel g_spatial(spatial_.out_channels, spatial_.in_channels, spatial_.kh, spatial_.kw);
    ConvKernel g_project(project_.out_channels, project_.in_channels, project_.kh, project_.kw);

    FeatureMap d_act2(cache.act2.channels(), cache.act2.height(), cache.act2.width());
    conv2d_backward(cache.act2, project_, upstream, &d_act2, &g_project);

    // ramp backward: pass through where the pre-activation was positive
    for (std::size_t i = 0; i < d_act2.values().size(); ++i) {
        if (cache.pre2.values()[i] <= 0.0) d_act2.values()[i] = 0.0;
    }

    FeatureMap d_act1(cache.act1.channels(), cache.act1.height(), cache.act1.width());
    conv2d_backward(cache.act1, spatial_, d_act2, &d_act1, &g_spatial);
    for (std::size_t i = 0; i < d_act1.values().size(); ++i) {
        if (cache.pre1.values()[i] <= 0.0) d_act1.values()[i] = 0.0;
    }

    conv2d_backward(input, reduce_, d_act1, &grads.input, &g_reduce);

    grads.params.reserve(parameter_count());
    for (const ConvKernel* k : {&g_reduce, &g_spatial, &g_project}) {
        grads.params.insert(grads.params.end(), k->weights.begin(), k->weights.end());
        grads.params.insert(grads.params.end(), k->bias.begin(), k->bias.end());
    }
    return grads;
}

WeightedFusion fuse_weighted(const FeatureMap& local, const GlobalFeature& global,
                             const EmbedNet& embed) {
    check_channels(local, global, "fuse_weighted");
    if (embed.input_channels() != local.channels()) {
        throw std::invalid_argument("fuse_weighted: EmbedNet channel contract mismatch");
    }
    const FeatureMap global_map = global.broadcast();
    const FeatureMap local_embed = embed.forward(local);
    const FeatureMap global_embed = embed.forward(global_map);

    WeightedFusion result;
    auto [wl, wg] = softmax_pair(local_embed.channel(0), global_embed.channel(0));
    result.weights.local_weight = std::move(wl);
    result.weights.global_weight = std::move(wg);

    result.fused = FeatureMap(local.channels(), local.height(), local.width());
    for (int c = 0; c < local.channels(); ++c) {
        const double g = global.values[c];
        const double* src = local.channel_data(c);
        double* dst = result.fused.channel_data(c);
        const double* wld = result.weights.local_weight.data();
        const double* wgd = result.weights.global_weight.data();
        for (int i = 0; i < local.plane(); ++i) {
            dst[i] = src[i] * wld[i] + g * wgd[i];
        }
    }
    return result;
}

WeightedFusionGrads fuse_weighted_backward(const FeatureMap& local,
                                           const GlobalFeature& global,
                                           const EmbedNet& embed,
                                           const FeatureMap& upstream) {
    check_channels(local, global, "fuse_weighted_backward");
    if (!upstream.same_shape(local)) {
        throw std::invalid_argument("fuse_weighted_backward: upstream shape mismatch");
    }
    const FeatureMap global_map = global.broadcast();
    const EmbedNet::Cache local_cache = embed.forward_cached(local);
    const EmbedNet::Cache global_cache = embed.forward_cached(global_map);
    const auto [w_local, w_global] =
        softmax_pair(local_cache.out.channel(0), global_cache.out.channel(0));

    const int plane = local.plane();
    WeightedFusionGrads grads;
    grads.local = FeatureMap(local.channels(), local.height(), local.width());
    grads.global.assign(local.channels(), 0.0);

    // Direct paths of p = l*w_l + g*w_g, plus dL/dw accumulated per location.
    Grid2D d_wl(local.height(), local.width());
    Grid2D d_wg(local.height(), local.width());
    for (int c = 0; c < local.channels(); ++c) {
        const double* up = upstream.channel_data(c);
        const double* l = local.channel_data(c);
        double* gl = grads.local.channel_data(c);
        const double g = global.values[c];
        for (int i = 0; i < plane; ++i) {
            gl[i] += up[i] * w_local.data()[i];
            grads.global[c] += up[i] * w_global.data()[i];
            d_wl.values()[i] += up[i] * l[i];
            d_wg.values()[i] += up[i] * g;
        }
    }

    // Softmax backward: w_l = sigmoid(a - b) with a = local embed, b = global
    // embed, so dL/da = (dL/dw_l - dL/dw_g) * w_l * w_g and dL/db = -dL/da.
    FeatureMap d_local_embed(1, local.height(), local.width());
    FeatureMap d_global_embed(1, local.height(), local.width());
    for (int i = 0; i < plane; ++i) {
        const double s = (d_wl.values()[i] - d_wg.values()[i]) * w_local.data()[i] *
                         w_global.data()[i];
        d_local_embed.values()[i] = s;
        d_global_embed.values()[i] = -s;
    }

    const EmbedNet::Grads local_pass = embed.backward(local, local_cache, d_local_embed);
    const EmbedNet::Grads global_pass = embed.backward(global_map, global_cache, d_global_embed);

    for (std::size_t i = 0; i < grads.local.values().size(); ++i) {
        grads.local.values()[i] += local_pass.input.values()[i];
    }
    // The broadcast global scalar feeds every spatial cell of its channel.
    for (int c = 0; c < local.channels(); ++c) {
        const double* gmap = global_pass.input.channel_data(c);
        for (int i = 0; i < plane; ++i) grads.global[c] += gmap[i];
    }

    grads.embed_params = local_pass.params;
    for (std::size_t i = 0; i < grads.embed_params.size(); ++i) {
        grads.embed_params[i] += global_pass.params[i];
    }
    return grads;
}

}  // namespace camflow
