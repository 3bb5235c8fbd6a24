#include "camflow/checks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "camflow/align.hpp"
#include "camflow/errors.hpp"
#include "camflow/fusion.hpp"
#include "camflow/gradcheck.hpp"
#include "camflow/grid.hpp"

namespace camflow {

bool CheckReport::all_pass() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const CheckResult& c) { return c.pass; });
}

std::vector<std::string> CheckReport::failing_names() const {
    std::vector<std::string> names;
    for (const CheckResult& c : checks) {
        if (!c.pass) names.push_back(c.name);
    }
    return names;
}

namespace {

FeatureMap random_map(std::mt19937_64& rng, int channels, int height, int width,
                      double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    FeatureMap map(channels, height, width);
    for (double& v : map.values()) v = dist(rng);
    return map;
}

// Offsets with fractional parts kept away from integers so the piecewise
// bilinear derivative is well defined at finite-difference probes.
double random_offset(std::mt19937_64& rng, double span) {
    std::uniform_real_distribution<double> whole(-span, span);
    std::uniform_real_distribution<double> frac(0.1, 0.9);
    return std::floor(whole(rng)) + frac(rng);
}

ClipFeatureStack single_scale_stack(std::mt19937_64& rng, int timesteps, int channels,
                                    int size) {
    std::vector<FeatureMap> maps;
    for (int t = 0; t < timesteps; ++t) {
        maps.push_back(random_map(rng, channels, size, size));
    }
    return ClipFeatureStack({std::move(maps)}, timesteps - 1);
}

double max_abs_diff(const FeatureMap& a, const FeatureMap& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.values().size(); ++i) {
        worst = std::max(worst, std::fabs(a.values()[i] - b.values()[i]));
    }
    return worst;
}

OffsetPyramid random_pyramid(std::mt19937_64& rng, const std::vector<int>& sizes,
                             int timesteps) {
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    OffsetPyramid pyramid;
    for (int s : sizes) {
        OffsetField f(timesteps, s, s);
        for (double& v : f.dy) v = dist(rng);
        for (double& v : f.dx) v = dist(rng);
        pyramid.push_back(std::move(f));
    }
    return pyramid;
}

}  // namespace

CheckReport run_align_checks(std::uint64_t seed) {
    CheckReport report;
    std::mt19937_64 rng(seed);

    // Zero offsets with the identity kernel must reproduce inputs exactly.
    {
        double worst = 0.0;
        for (int inst = 0; inst < 20; ++inst) {
            ClipFeatureStack stack = single_scale_stack(rng, 3, 2, 7);
            OffsetPyramid zeros{OffsetField(3, 7, 7)};
            const auto out = deformable_sample(stack, zeros, 0);
            for (int t = 0; t < 3; ++t) {
                worst = std::max(worst, max_abs_diff(out[t], stack.at(0, t)));
            }
        }
        report.checks.push_back({"zero_offset_identity", worst == 0.0, worst, 0.0});
    }

    // A constant coarsest offset propagates as constant x cumulative ratio.
    {
        const std::vector<int> sizes = default_scale_sizes();
        const int timesteps = 2;
        OffsetPyramid raw;
        for (int s : sizes) raw.emplace_back(timesteps, s, s);
        const double base_dy = 2.0, base_dx = -1.0;
        OffsetField& coarsest = raw.back();
        for (int t = 0; t < timesteps; ++t) {
            coarsest.dy_at(t, 0, 0) = base_dy;
            coarsest.dx_at(t, 0, 0) = base_dx;
        }
        const OffsetPyramid refined = refine_offsets(raw);

        double worst = 0.0;
        double ratio = 1.0;
        for (int k = static_cast<int>(sizes.size()) - 2; k >= 0; --k) {
            const int fine = sizes[k], coarse = sizes[k + 1];
            ratio *= coarse <= 1 ? fine : static_cast<double>(fine - 1) / (coarse - 1);
            for (int t = 0; t < timesteps; ++t) {
                for (int y = 0; y < fine; ++y) {
                    for (int x = 0; x < fine; ++x) {
                        worst = std::max(worst,
                                         std::fabs(refined[k].dy_at(t, y, x) - base_dy * ratio));
                        worst = std::max(worst,
                                         std::fabs(refined[k].dx_at(t, y, x) - base_dx * ratio));
                    }
                }
            }
        }
        report.checks.push_back({"pyramid_constant_propagation", worst < 1e-9, worst, 1e-9});
    }

    // refine_offsets is a fixed linear operator on raw offsets.
    {
        const std::vector<int> sizes = {9, 5, 3, 1};
        const double alpha = 0.7, beta = -1.3;
        double worst = 0.0;
        for (int inst = 0; inst < 5; ++inst) {
            const OffsetPyramid a = random_pyramid(rng, sizes, 2);
            const OffsetPyramid b = random_pyramid(rng, sizes, 2);
            OffsetPyramid combo = a;
            for (std::size_t k = 0; k < combo.size(); ++k) {
                for (std::size_t i = 0; i < combo[k].dy.size(); ++i) {
                    combo[k].dy[i] = alpha * a[k].dy[i] + beta * b[k].dy[i];
                    combo[k].dx[i] = alpha * a[k].dx[i] + beta * b[k].dx[i];
                }
            }
            const OffsetPyramid ra = refine_offsets(a);
            const OffsetPyramid rb = refine_offsets(b);
            const OffsetPyramid rc = refine_offsets(combo);
            for (std::size_t k = 0; k < rc.size(); ++k) {
                for (std::size_t i = 0; i < rc[k].dy.size(); ++i) {
                    worst = std::max(worst, std::fabs(rc[k].dy[i] -
                                                      (alpha * ra[k].dy[i] + beta * rb[k].dy[i])));
                    worst = std::max(worst, std::fabs(rc[k].dx[i] -
                                                      (alpha * ra[k].dx[i] + beta * rb[k].dx[i])));
                }
            }
        }
        report.checks.push_back({"refinement_linearity", worst < 1e-9, worst, 1e-9});
    }

    // Analytic bilinear gradients vs central differences.
    {
        double worst = 0.0;
        for (int inst = 0; inst < 10; ++inst) {
            const FeatureMap map = random_map(rng, 1, 5, 5);
            const double y = random_offset(rng, 2.0) + 2.0;
            const double x = random_offset(rng, 2.0) + 2.0;

            std::vector<double> values(map.values());
            auto f_values = [&](const std::vector<double>& p) {
                FeatureMap m(1, 5, 5);
                m.values() = p;
                return bilinear_sample(m, y, x, 0);
            };
            FeatureMap grad_map(1, 5, 5);
            double gy = 0.0, gx = 0.0;
            bilinear_sample_backward(map, y, x, 0, 1.0, &grad_map, &gy, &gx);
            worst = std::max(worst,
                             finite_diff_check(f_values, values, grad_map.values()).max_rel_error);

            auto f_coords = [&](const std::vector<double>& p) {
                return bilinear_sample(map, p[0], p[1], 0);
            };
            worst = std::max(worst,
                             finite_diff_check(f_coords, {y, x}, {gy, gx}).max_rel_error);
        }
        report.checks.push_back({"gradient_bilinear", worst < 1e-3, worst, 1e-3});
    }

    // Deformable sampling gradients wrt offsets and feature values.
    {
        double worst = 0.0;
        for (int inst = 0; inst < 10; ++inst) {
            const int timesteps = 2, channels = 2, size = 5;
            ClipFeatureStack stack = single_scale_stack(rng, timesteps, channels, size);
            OffsetPyramid offsets{OffsetField(timesteps, size, size)};
            for (double& v : offsets[0].dy) v = random_offset(rng, 1.0);
            for (double& v : offsets[0].dx) v = random_offset(rng, 1.0);

            std::vector<FeatureMap> upstream;
            for (int t = 0; t < timesteps; ++t) {
                upstream.push_back(random_map(rng, channels, size, size));
            }
            const DeformableGrads grads =
                deformable_sample_backward(stack, offsets, 0, upstream);

            auto loss = [&](const ClipFeatureStack& s, const OffsetPyramid& o) {
                const auto out = deformable_sample(s, o, 0);
                double acc = 0.0;
                for (int t = 0; t < timesteps; ++t) {
                    for (std::size_t i = 0; i < out[t].values().size(); ++i) {
                        acc += out[t].values()[i] * upstream[t].values()[i];
                    }
                }
                return acc;
            };

            // offsets: dy then dx flattened
            std::vector<double> offset_params(offsets[0].dy);
            offset_params.insert(offset_params.end(), offsets[0].dx.begin(), offsets[0].dx.end());
            std::vector<double> offset_grad(grads.offsets.dy);
            offset_grad.insert(offset_grad.end(), grads.offsets.dx.begin(),
                               grads.offsets.dx.end());
            auto f_offsets = [&](const std::vector<double>& p) {
                OffsetPyramid o{OffsetField(timesteps, size, size)};
                std::copy_n(p.begin(), o[0].dy.size(), o[0].dy.begin());
                std::copy_n(p.begin() + o[0].dy.size(), o[0].dx.size(), o[0].dx.begin());
                return loss(stack, o);
            };
            worst = std::max(worst,
                             finite_diff_check(f_offsets, offset_params, offset_grad).max_rel_error);

            // feature values of timestep 0
            auto f_values = [&](const std::vector<double>& p) {
                ClipFeatureStack s = stack;
                s.at(0, 0).values() = p;
                return loss(s, offsets);
            };
            worst = std::max(worst, finite_diff_check(f_values, stack.at(0, 0).values(),
                                                      grads.features[0].values())
                                        .max_rel_error);
        }
        report.checks.push_back({"gradient_deformable", worst < 1e-3, worst, 1e-3});
    }

    // Known integer translation recovered through the full align pipeline.
    {
        double worst = 0.0;
        std::uniform_int_distribution<int> shift(-3, 3);
        for (int inst = 0; inst < 5; ++inst) {
            const int size = 16, channels = 2;
            const int dy = shift(rng), dx = shift(rng);
            const FeatureMap reference = random_map(rng, channels, size, size, 0.0, 1.0);
            FeatureMap previous(channels, size, size);
            for (int c = 0; c < channels; ++c) {
                for (int y = 0; y < size; ++y) {
                    for (int x = 0; x < size; ++x) {
                        const int sy = y - dy, sx = x - dx;
                        if (sy >= 0 && sy < size && sx >= 0 && sx < size) {
                            previous.at(c, y, x) = reference.at(c, sy, sx);
                        }
                    }
                }
            }
            ClipFeatureStack stack({{previous, reference}}, 1);
            OffsetPredictor predictor = OffsetPredictor::zeros_for(stack);
            predictor.set_bias(0, 0, dy, dx);
            const ClipFeatureStack aligned = align_clip(stack, predictor);

            const int margin = std::max(std::abs(dy), std::abs(dx)) + 1;
            for (int c = 0; c < channels; ++c) {
                for (int y = margin; y < size - margin; ++y) {
                    for (int x = margin; x < size - margin; ++x) {
                        worst = std::max(worst, std::fabs(aligned.at(0, 0).at(c, y, x) -
                                                          reference.at(c, y, x)));
                    }
                }
            }
        }
        report.checks.push_back({"alignment_recovery", worst < 1e-9, worst, 1e-9});
    }

    return report;
}

CheckReport run_fusion_checks(std::uint64_t seed) {
    CheckReport report;
    std::mt19937_64 rng(seed);
    const int channels = 4, size = 6;

    // Weight maps partition unity and stay in [0,1].
    {
        double worst = 0.0;
        for (int inst = 0; inst < 10; ++inst) {
            const FeatureMap local = random_map(rng, channels, size, size);
            const GlobalFeature global = make_global(local);
            const EmbedNet embed = EmbedNet::random(channels, seed + inst);
            const WeightedFusion fusion = fuse_weighted(local, global, embed);
            for (std::size_t i = 0; i < fusion.weights.local_weight.size(); ++i) {
                const double wl = fusion.weights.local_weight.values()[i];
                const double wg = fusion.weights.global_weight.values()[i];
                worst = std::max(worst, std::fabs(wl + wg - 1.0));
                worst = std::max(worst, std::max(-wl, wl - 1.0));
                worst = std::max(worst, std::max(-wg, wg - 1.0));
            }
        }
        report.checks.push_back({"weight_partition", worst < 1e-12, worst, 1e-12});
    }

    // Zero EmbedNet makes the weighted strategy coincide with plain averaging.
    {
        double worst = 0.0;
        for (int inst = 0; inst < 5; ++inst) {
            const FeatureMap local = random_map(rng, channels, size, size);
            const GlobalFeature global = make_global(local);
            const EmbedNet zero(channels);
            const FeatureMap averaged = fuse_average(local, global);
            const WeightedFusion fusion = fuse_weighted(local, global, zero);
            worst = std::max(worst, max_abs_diff(fusion.fused, averaged));
        }
        report.checks.push_back({"zero_embed_equals_average", worst < 1e-12, worst, 1e-12});
    }

    // Convex combination bound per channel per cell.
    {
        double worst = 0.0;
        for (int inst = 0; inst < 5; ++inst) {
            const FeatureMap local = random_map(rng, channels, size, size);
            const GlobalFeature global = make_global(local);
            const EmbedNet embed = EmbedNet::random(channels, seed + 100 + inst);
            const WeightedFusion fusion = fuse_weighted(local, global, embed);
            for (int c = 0; c < channels; ++c) {
                for (int i = 0; i < local.plane(); ++i) {
                    const double l = local.channel_data(c)[i];
                    const double g = global.values[c];
                    const double p = fusion.fused.channel_data(c)[i];
                    worst = std::max(worst, std::min(l, g) - p);
                    worst = std::max(worst, p - std::max(l, g));
                }
            }
        }
        report.checks.push_back({"convex_combination_bound", worst < 1e-12, worst, 1e-12});
    }

    // Shifting both embeddings by a shared constant leaves the output alone.
    {
        double worst = 0.0;
        for (int inst = 0; inst < 5; ++inst) {
            const FeatureMap local = random_map(rng, channels, size, size);
            const GlobalFeature global = make_global(local);
            EmbedNet embed = EmbedNet::random(channels, seed + 200 + inst);
            const WeightedFusion before = fuse_weighted(local, global, embed);
            std::vector<double> params = embed.parameters();
            params.back() += 5.0;  // final projection bias shifts both embeddings
            embed.set_parameters(params);
            const WeightedFusion after = fuse_weighted(local, global, embed);
            worst = std::max(worst, max_abs_diff(before.fused, after.fused));
        }
        report.checks.push_back({"softmax_shift_invariance", worst < 1e-12, worst, 1e-12});
    }

    // Gradients wrt local, global, and EmbedNet parameters.
    {
        double worst = 0.0;
        for (int inst = 0; inst < 5; ++inst) {
            const int c = 3, s = 4;
            const FeatureMap local = random_map(rng, c, s, s);
            GlobalFeature global;
            global.height = s;
            global.width = s;
            std::uniform_real_distribution<double> dist(-1.0, 1.0);
            for (int i = 0; i < c; ++i) global.values.push_back(dist(rng));
            const EmbedNet embed = EmbedNet::random(c, seed + 300 + inst);
            const FeatureMap upstream = random_map(rng, c, s, s);

            auto loss = [&](const FeatureMap& l, const GlobalFeature& g, const EmbedNet& e) {
                const WeightedFusion fusion = fuse_weighted(l, g, e);
                double acc = 0.0;
                for (std::size_t i = 0; i < fusion.fused.values().size(); ++i) {
                    acc += fusion.fused.values()[i] * upstream.values()[i];
                }
                return acc;
            };
            const WeightedFusionGrads grads =
                fuse_weighted_backward(local, global, embed, upstream);

            auto f_local = [&](const std::vector<double>& p) {
                FeatureMap l(c, s, s);
                l.values() = p;
                return loss(l, global, embed);
            };
            worst = std::max(worst, finite_diff_check(f_local, local.values(),
                                                      grads.local.values())
                                        .max_rel_error);

            auto f_global = [&](const std::vector<double>& p) {
                GlobalFeature g = global;
                g.values = p;
                return loss(local, g, embed);
            };
            worst = std::max(worst,
                             finite_diff_check(f_global, global.values, grads.global)
                                 .max_rel_error);

            auto f_params = [&](const std::vector<double>& p) {
                EmbedNet e = embed;
                e.set_parameters(p);
                return loss(local, global, e);
            };
            worst = std::max(worst, finite_diff_check(f_params, embed.parameters(),
                                                      grads.embed_params)
                                        .max_rel_error);
        }
        report.checks.push_back({"gradient_weighted_fusion", worst < 1e-3, worst, 1e-3});
    }

    return report;
}

void save_check_report(const CheckReport& report, const std::filesystem::path& path) {
    nlohmann::json j;
    j["checks"] = nlohmann::json::array();
    int failed = 0;
    for (const CheckResult& c : report.checks) {
        j["checks"].push_back({{"name", c.name},
                               {"pass", c.pass},
                               {"measured", c.measured},
                               {"tolerance", c.tolerance}});
        if (!c.pass) ++failed;
    }
    j["passed"] = static_cast<int>(report.checks.size()) - failed;
    j["failed"] = failed;
    std::ofstream out(path);
    if (!out) {
        throw IoError("save_check_report: cannot open " + path.string());
    }
    out << j.dump(2) << "\n";
}

}  // namespace camflow
