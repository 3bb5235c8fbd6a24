#include "camflow/align.hpp"

#include <stdexcept>
#include <string>

namespace camflow {

ClipFeatureStack::ClipFeatureStack(std::vector<std::vector<FeatureMap>> scales,
                                   int reference_index)
    : scales_(std::move(scales)), reference_(reference_index) {
    if (scales_.empty()) {
        throw std::invalid_argument("ClipFeatureStack: need at least one scale");
    }
    const int timesteps = static_cast<int>(scales_[0].size());
    if (timesteps == 0) {
        throw std::invalid_argument("ClipFeatureStack: need at least one timestep");
    }
    if (reference_ < 0 || reference_ >= timesteps) {
        throw std::invalid_argument("ClipFeatureStack: reference index out of range");
    }
    for (std::size_t k = 0; k < scales_.size(); ++k) {
        const auto& scale = scales_[k];
        if (static_cast<int>(scale.size()) != timesteps) {
            throw std::invalid_argument("ClipFeatureStack: timestep count differs across scales");
        }
        for (const FeatureMap& m : scale) {
            if (m.channels() != scale[0].channels() || m.height() != scale[0].height() ||
                m.width() != scale[0].width()) {
                throw std::invalid_argument(
                    "ClipFeatureStack: all timesteps at a scale must share dims");
            }
        }
        if (k > 0) {
            const FeatureMap& prev = scales_[k - 1][0];
            const FeatureMap& cur = scale[0];
            const bool shrinks = cur.height() <= prev.height() && cur.width() <= prev.width() &&
                                 (cur.height() < prev.height() || cur.width() < prev.width());
            if (!shrinks) {
                throw std::invalid_argument(
                    "ClipFeatureStack: scales must strictly decrease in spatial size");
            }
        }
    }
}

OffsetField::OffsetField(int timesteps, int height, int width)
    : timesteps(timesteps), height(height), width(width) {
    if (timesteps <= 0 || height <= 0 || width <= 0) {
        throw std::invalid_argument("OffsetField: dimensions must be positive");
    }
    dy.assign(static_cast<std::size_t>(timesteps) * height * width, 0.0);
    dx.assign(static_cast<std::size_t>(timesteps) * height * width, 0.0);
}

OffsetPredictor OffsetPredictor::zeros_for(const ClipFeatureStack& stack) {
    OffsetPredictor predictor;
    predictor.timesteps = stack.timesteps();
    predictor.per_scale.reserve(stack.num_scales());
    for (int k = 0; k < stack.num_scales(); ++k) {
        const int stacked_channels = stack.at(k, 0).channels() * stack.timesteps();
        predictor.per_scale.emplace_back(2 * stack.timesteps(), stacked_channels, 3, 3);
    }
    return predictor;
}

void OffsetPredictor::set_bias(int scale, int t, double dy, double dx) {
    if (scale < 0 || scale >= static_cast<int>(per_scale.size())) {
        throw std::invalid_argument("OffsetPredictor::set_bias: scale out of range");
    }
    if (t < 0 || 2 * t + 1 >= per_scale[scale].out_channels) {
        throw std::invalid_argument("OffsetPredictor::set_bias: timestep out of range");
    }
    per_scale[scale].bias[2 * t] = dy;
    per_scale[scale].bias[2 * t + 1] = dx;
}

TapKernel TapKernel::identity(int kh, int kw) {
    if (kh % 2 == 0 || kw % 2 == 0 || kh <= 0 || kw <= 0) {
        throw std::invalid_argument("TapKernel: dims must be odd and positive");
    }
    TapKernel k;
    k.kh = kh;
    k.kw = kw;
    k.weights.assign(static_cast<std::size_t>(kh) * kw, 0.0);
    k.weights[static_cast<std::size_t>(kh / 2) * kw + kw / 2] = 1.0;
    return k;
}

FeatureMap stack_features(const std::vector<FeatureMap>& maps) {
    if (maps.empty()) {
        throw std::invalid_argument("stack_features: need at least one map");
    }
    const int h = maps[0].height(), w = maps[0].width();
    int total_channels = 0;
    for (const FeatureMap& m : maps) {
        if (m.height() != h || m.width() != w) {
            throw std::invalid_argument("stack_features: spatial dimension mismatch");
        }
        total_channels += m.channels();
    }
    FeatureMap out(total_channels, h, w);
    int offset = 0;
    for (const FeatureMap& m : maps) {
        std::copy(m.values().begin(), m.values().end(), out.channel_data(offset));
        offset += m.channels();
    }
    return out;
}

OffsetPyramid predict_offsets(const ClipFeatureStack& stack, const OffsetPredictor& predictor) {
    if (static_cast<int>(predictor.per_scale.size()) != stack.num_scales()) {
        throw std::invalid_argument("predict_offsets: predictor scale count mismatch");
    }
    const int timesteps = stack.timesteps();
    OffsetPyramid pyramid;
    pyramid.reserve(stack.num_scales());
    for (int k = 0; k < stack.num_scales(); ++k) {
        const ConvKernel& kernel = predictor.per_scale[k];
        if (kernel.out_channels != 2 * timesteps) {
            throw std::invalid_argument("predict_offsets: predictor must emit 2*(K+1) channels");
        }
        const FeatureMap stacked = stack_features(stack.scale(k));
        const FeatureMap raw = conv2d(stacked, kernel);
        OffsetField field(timesteps, raw.height(), raw.width());
        for (int t = 0; t < timesteps; ++t) {
            for (int y = 0; y < raw.height(); ++y) {
                for (int x = 0; x < raw.width(); ++x) {
                    field.dy_at(t, y, x) = raw.at(2 * t, y, x);
                    field.dx_at(t, y, x) = raw.at(2 * t + 1, y, x);
                }
            }
        }
        pyramid.push_back(std::move(field));
    }
    return pyramid;
}

namespace {

double axis_ratio(int fine, int coarse) {
    if (coarse <= 1) return static_cast<double>(fine);
    return static_cast<double>(fine - 1) / static_cast<double>(coarse - 1);
}

// Upsample one timestep plane of an offset component and optionally rescale.
Grid2D lift_plane(const OffsetField& field, const std::vector<double>& comp, int t,
                  int out_h, int out_w, double scale) {
    Grid2D plane(field.height, field.width);
    for (int y = 0; y < field.height; ++y) {
        for (int x = 0; x < field.width; ++x) {
            plane.at(y, x) = comp[field.idx(t, y, x)];
        }
    }
    Grid2D up = bilinear_upsample(plane, out_h, out_w);
    if (scale != 1.0) {
        for (double& v : up.values()) v *= scale;
    }
    return up;
}

}  // namespace

OffsetPyramid refine_offsets(const OffsetPyramid& raw, bool rescale) {
    if (raw.empty()) return {};
    OffsetPyramid refined(raw.size());
    const int coarsest = static_cast<int>(raw.size()) - 1;
    refined[coarsest] = raw[coarsest];
    for (int k = coarsest - 1; k >= 0; --k) {
        const OffsetField& fine_raw = raw[k];
        const OffsetField& coarse = refined[k + 1];
        if (fine_raw.timesteps != coarse.timesteps) {
            throw std::invalid_argument("refine_offsets: timestep mismatch across scales");
        }
        OffsetField out = fine_raw;
        const double sy = rescale ? axis_ratio(fine_raw.height, coarse.height) : 1.0;
        const double sx = rescale ? axis_ratio(fine_raw.width, coarse.width) : 1.0;
        for (int t = 0; t < fine_raw.timesteps; ++t) {
            const Grid2D up_dy =
                lift_plane(coarse, coarse.dy, t, fine_raw.height, fine_raw.width, sy);
            const Grid2D up_dx =
                lift_plane(coarse, coarse.dx, t, fine_raw.height, fine_raw.width, sx);
            for (int y = 0; y < fine_raw.height; ++y) {
                for (int x = 0; x < fine_raw.width; ++x) {
                    out.dy_at(t, y, x) += up_dy.at(y, x);
                    out.dx_at(t, y, x) += up_dx.at(y, x);
                }
            }
        }
        refined[k] = std::move(out);
    }
    return refined;
}

namespace {

void check_scale_args(const ClipFeatureStack& stack, const OffsetPyramid& offsets, int scale) {
    if (scale < 0 || scale >= stack.num_scales()) {
        throw std::invalid_argument("deformable_sample: scale out of range");
    }
    if (static_cast<int>(offsets.size()) != stack.num_scales()) {
        throw std::invalid_argument("deformable_sample: pyramid scale count mismatch");
    }
    const FeatureMap& f = stack.at(scale, 0);
    const OffsetField& o = offsets[scale];
    if (o.timesteps != stack.timesteps() || o.height != f.height() || o.width != f.width()) {
        throw std::invalid_argument("deformable_sample: offset dims mismatch at scale " +
                                    std::to_string(scale));
    }
}

}  // namespace

std::vector<FeatureMap> deformable_sample(const ClipFeatureStack& stack,
                                          const OffsetPyramid& offsets, int scale,
                                          const TapKernel& kernel) {
    check_scale_args(stack, offsets, scale);
    const OffsetField& field = offsets[scale];
    const int ch = kernel.kh / 2, cw = kernel.kw / 2;

    std::vector<FeatureMap> aligned;
    aligned.reserve(stack.timesteps());
    for (int t = 0; t < stack.timesteps(); ++t) {
        const FeatureMap& src = stack.at(scale, t);
        FeatureMap out(src.channels(), src.height(), src.width());
        for (int c = 0; c < src.channels(); ++c) {
            for (int i = 0; i < src.height(); ++i) {
                for (int j = 0; j < src.width(); ++j) {
                    const double oy = field.dy_at(t, i, j);
                    const double ox = field.dx_at(t, i, j);
                    double acc = 0.0;
                    for (int u = 0; u < kernel.kh; ++u) {
                        for (int v = 0; v < kernel.kw; ++v) {
                            const double wgt = kernel.w(u, v);
                            if (wgt == 0.0) continue;
                            acc += wgt * bilinear_sample(src, i + u - ch + oy, j + v - cw + ox, c);
                        }
                    }
                    out.at(c, i, j) = acc;
                }
            }
        }
        aligned.push_back(std::move(out));
    }
    return aligned;
}

DeformableGrads deformable_sample_backward(const ClipFeatureStack& stack,
                                           const OffsetPyramid& offsets, int scale,
                                           const std::vector<FeatureMap>& upstream,
                                           const TapKernel& kernel) {
    check_scale_args(stack, offsets, scale);
    if (static_cast<int>(upstream.size()) != stack.timesteps()) {
        throw std::invalid_argument("deformable_sample_backward: upstream timestep mismatch");
    }
    const OffsetField& field = offsets[scale];
    const int ch = kernel.kh / 2, cw = kernel.kw / 2;

    DeformableGrads grads;
    grads.offsets = OffsetField(stack.timesteps(), field.height, field.width);
    grads.features.reserve(stack.timesteps());
    for (int t = 0; t < stack.timesteps(); ++t) {
        const FeatureMap& src = stack.at(scale, t);
        if (!upstream[t].same_shape(src)) {
            throw std::invalid_argument("deformable_sample_backward: upstream shape mismatch");
        }
        FeatureMap grad_feat(src.channels(), src.height(), src.width());
        for (int c = 0; c < src.channels(); ++c) {
            for (int i = 0; i < src.height(); ++i) {
                for (int j = 0; j < src.width(); ++j) {
                    const double up = upstream[t].at(c, i, j);
                    if (up == 0.0) continue;
                    const double oy = field.dy_at(t, i, j);
                    const double ox = field.dx_at(t, i, j);
                    double gy = 0.0, gx = 0.0;
                    for (int u = 0; u < kernel.kh; ++u) {
                        for (int v = 0; v < kernel.kw; ++v) {
                            const double wgt = kernel.w(u, v);
                            if (wgt == 0.0) continue;
                            bilinear_sample_backward(src, i + u - ch + oy, j + v - cw + ox, c,
                                                     up * wgt, &grad_feat, &gy, &gx);
                        }
                    }
                    grads.offsets.dy_at(t, i, j) += gy;
                    grads.offsets.dx_at(t, i, j) += gx;
                }
            }
        }
        grads.features.push_back(std::move(grad_feat));
    }
    return grads;
}

ClipFeatureStack align_clip(const ClipFeatureStack& stack, const OffsetPredictor& predictor,
                            const AlignParams& params) {
    const OffsetPyramid raw = predict_offsets(stack, predictor);
    const OffsetPyramid refined = refine_offsets(raw, params.rescale_offsets);

    std::vector<std::vector<FeatureMap>> aligned_scales;
    aligned_scales.reserve(stack.num_scales());
    for (int k = 0; k < stack.num_scales(); ++k) {
        std::vector<FeatureMap> aligned = deformable_sample(stack, refined, k);
        if (!params.sample_reference) {
            aligned[stack.reference_index()] = stack.at(k, stack.reference_index());
        }
        aligned_scales.push_back(std::move(aligned));
    }
    return ClipFeatureStack(std::move(aligned_scales), stack.reference_index());
}

std::vector<int> default_scale_sizes() { return {38, 19, 10, 5, 3, 1}; }

}  // namespace camflow
