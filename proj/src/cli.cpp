#include "camflow/cli.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "camflow/checks.hpp"
#include "camflow/errors.hpp"
#include "camflow/flowio.hpp"
#include "camflow/frames.hpp"
#include "camflow/motion_rank.hpp"
#include "camflow/synth.hpp"

namespace camflow {

namespace {

int worker_count() {
    if (const char* env = std::getenv("CAMFLOW_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

// Index-sharded parallel loop with deterministic result slots.
void parallel_for(int count, int workers, const std::function<void(int)>& body) {
    if (workers <= 1 || count <= 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    const int n = std::min(workers, count);
    pool.reserve(n);
    for (int w = 0; w < n; ++w) {
        pool.emplace_back([&]() {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
                body(i);
            }
        });
    }
    for (std::thread& t : pool) t.join();
}

nlohmann::json ranking_to_json(const std::vector<VideoRanking>& rows) {
    nlohmann::json arr = nlohmann::json::array();
    for (const VideoRanking& r : rows) {
        arr.push_back({{"video", r.video},
                       {"rank", r.rank},
                       {"nframes", r.nframes},
                       {"method", r.method},
                       {"flags", r.flags}});
    }
    return arr;
}

void write_json(const nlohmann::json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open output file " + path);
    out << j.dump(2) << "\n";
}

void write_histogram_csv(const std::vector<HistogramBin>& bins, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open histogram file " + path);
    out << "bin_lo,bin_hi,count\n";
    for (const HistogramBin& b : bins) {
        out << b.lo << "," << b.hi << "," << b.count << "\n";
    }
}

VideoRanking rank_one(const FrameSequence& seq, const BoxAnnotations& boxes,
                      const std::string& method, const RankFlowParams& flow_params,
                      const RankStabilizeParams& stab_params) {
    VideoRanking row;
    row.video = seq.video_id;
    row.nframes = seq.nframes();
    row.method = method;
    if (method == "flow") {
        const RankFlowResult result = rank_video_flow(seq.frames, boxes, flow_params, seq.video_id);
        row.rank = result.rank;
        for (int p : result.profile.degenerate_pairs) {
            row.flags.push_back("pair" + std::to_string(p) + ":degenerate");
        }
    } else {
        const RankStabilizeResult result = rank_video_stabilize(seq.frames, stab_params);
        row.rank = result.rank;
        for (int p : result.insufficient_pairs) {
            row.flags.push_back("pair" + std::to_string(p) + ":insufficient");
        }
    }
    return row;
}

struct CorpusEntry {
    std::string id;
    std::string frames_dir;
    std::string boxes_csv;  // optional
};

std::vector<CorpusEntry> load_corpus_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open corpus list " + path);
    std::vector<CorpusEntry> entries;
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ss(line);
        CorpusEntry entry;
        if (!std::getline(ss, entry.id, ',') || !std::getline(ss, entry.frames_dir, ',')) {
            throw FormatError("corpus list: malformed line " + std::to_string(line_number) +
                              " (want id,frames_dir[,boxes_csv])");
        }
        std::getline(ss, entry.boxes_csv, ',');
        entries.push_back(entry);
    }
    if (entries.empty()) throw FormatError("corpus list: no entries in " + path);
    return entries;
}

int run_checks_command(const CheckReport& report, const std::string& out_path) {
    if (!out_path.empty()) save_check_report(report, out_path);
    for (const CheckResult& c : report.checks) {
        std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " measured=" << c.measured
                  << " tolerance=" << c.tolerance << "\n";
    }
    if (!report.all_pass()) {
        std::cerr << "failing checks:";
        for (const std::string& name : report.failing_names()) std::cerr << " " << name;
        std::cerr << "\n";
        return 1;
    }
    return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"camera-motion ranking, feature alignment and fusion toolkit"};
    app.require_subcommand(1);

    // rank
    std::string rank_frames, rank_boxes, rank_method = "flow", rank_out;
    bool rank_unmasked = false;
    FlowParams flow_defaults;
    auto* rank_cmd = app.add_subcommand("rank", "rank one video by camera motion");
    rank_cmd->add_option("--frames", rank_frames, "directory of numbered PGM/PPM frames")
        ->required();
    rank_cmd->add_option("--boxes", rank_boxes, "annotation CSV frame,x1,y1,x2,y2");
    rank_cmd->add_option("--method", rank_method, "flow|stabilize")
        ->check(CLI::IsMember({"flow", "stabilize"}));
    rank_cmd->add_option("--out", rank_out, "write ranking rows as JSON");
    rank_cmd->add_flag("--unmasked-denominator", rank_unmasked,
                       "divide by unmasked pixel count instead of all pixels");
    rank_cmd->add_option("--levels", flow_defaults.levels, "flow pyramid levels");
    rank_cmd->add_option("--iterations", flow_defaults.iterations, "flow solver iterations");
    rank_cmd->add_option("--alpha", flow_defaults.alpha, "flow smoothness weight");

    // rank-corpus
    std::string corpus_list, corpus_method = "flow", corpus_out, corpus_hist;
    int corpus_bins = 20;
    auto* corpus_cmd = app.add_subcommand("rank-corpus", "rank many videos and emit a report");
    corpus_cmd->add_option("--list", corpus_list, "CSV list: id,frames_dir[,boxes_csv]")
        ->required();
    corpus_cmd->add_option("--method", corpus_method, "flow|stabilize")
        ->check(CLI::IsMember({"flow", "stabilize"}));
    corpus_cmd->add_option("--out", corpus_out, "write ranking rows as JSON");
    corpus_cmd->add_option("--hist", corpus_hist, "write histogram CSV bin_lo,bin_hi,count");
    corpus_cmd->add_option("--bins", corpus_bins, "histogram bin count");

    // flow
    std::string flow_frames, flow_out;
    int flow_pair = 0;
    auto* flow_cmd = app.add_subcommand("flow", "write the dense flow field for one frame pair");
    flow_cmd->add_option("--frames", flow_frames, "directory of numbered PGM/PPM frames")
        ->required();
    flow_cmd->add_option("--pair", flow_pair, "pair index i for frames (i, i+1)")->required();
    flow_cmd->add_option("--out", flow_out, "output flow file (default flow_<i>.cflo)");

    // synth
    std::string synth_spec_path, synth_out;
    int synth_maxval = 255;
    auto* synth_cmd = app.add_subcommand("synth", "materialize a synthetic sequence");
    synth_cmd->add_option("--spec", synth_spec_path, "SynthSpec JSON file")->required();
    synth_cmd->add_option("--out", synth_out, "output directory")->required();
    synth_cmd->add_option("--maxval", synth_maxval, "PGM maxval: 255 or 65535")
        ->check(CLI::IsMember({255, 65535}));

    // align-check / fuse-check
    std::uint64_t align_seed = 1, fuse_seed = 1;
    std::string align_out, fuse_out;
    auto* align_cmd = app.add_subcommand("align-check", "run the alignment invariant suite");
    align_cmd->add_option("--seed", align_seed, "random seed");
    align_cmd->add_option("--out", align_out, "write CheckReport JSON");
    auto* fuse_cmd = app.add_subcommand("fuse-check", "run the fusion invariant suite");
    fuse_cmd->add_option("--seed", fuse_seed, "random seed");
    fuse_cmd->add_option("--out", fuse_out, "write CheckReport JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (rank_cmd->parsed()) {
            std::vector<std::string> warnings;
            const FrameSequence seq = load_frames(rank_frames, &warnings);
            BoxAnnotations boxes;
            if (!rank_boxes.empty()) {
                boxes = load_annotations(rank_boxes, seq.width(), seq.height(), &warnings);
            }
            for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
            RankFlowParams params;
            params.flow = flow_defaults;
            params.unmasked_denominator = rank_unmasked;
            const VideoRanking row =
                rank_one(seq, boxes, rank_method, params, RankStabilizeParams{});
            std::cout << row.video << " rank=" << row.rank << " nframes=" << row.nframes
                      << " method=" << row.method << "\n";
            if (!rank_out.empty()) write_json(ranking_to_json({row}), rank_out);
            return 0;
        }

        if (corpus_cmd->parsed()) {
            const std::vector<CorpusEntry> entries = load_corpus_list(corpus_list);
            std::vector<VideoRanking> rows(entries.size());
            std::vector<std::string> errors(entries.size());
            parallel_for(static_cast<int>(entries.size()), worker_count(), [&](int i) {
                try {
                    std::vector<std::string> warnings;
                    FrameSequence seq = load_frames(entries[i].frames_dir, &warnings);
                    seq.video_id = entries[i].id;
                    BoxAnnotations boxes;
                    if (!entries[i].boxes_csv.empty()) {
                        boxes = load_annotations(entries[i].boxes_csv, seq.width(),
                                                 seq.height(), &warnings);
                    }
                    rows[i] = rank_one(seq, boxes, corpus_method, RankFlowParams{},
                                       RankStabilizeParams{});
                } catch (const std::exception& e) {
                    errors[i] = e.what();
                }
            });
            for (std::size_t i = 0; i < errors.size(); ++i) {
                if (!errors[i].empty()) {
                    throw IoError("video '" + entries[i].id + "': " + errors[i]);
                }
            }
            const RankingReport report = build_report(rows, corpus_bins);
            for (const VideoRanking& r : report.videos) {
                std::cout << r.video << " rank=" << r.rank << " nframes=" << r.nframes << "\n";
            }
            if (!corpus_out.empty()) write_json(ranking_to_json(report.videos), corpus_out);
            if (!corpus_hist.empty()) write_histogram_csv(report.histogram, corpus_hist);
            return 0;
        }

        if (flow_cmd->parsed()) {
            const FrameSequence seq = load_frames(flow_frames);
            if (flow_pair < 0 || flow_pair + 1 >= seq.nframes()) {
                std::cerr << "error: pair index " << flow_pair << " out of range for "
                          << seq.nframes() << " frames\n";
                return 1;
            }
            const FlowField flow =
                dense_flow(seq.frames[flow_pair], seq.frames[flow_pair + 1]);
            const std::string path =
                flow_out.empty() ? "flow_" + std::to_string(flow_pair) + ".cflo" : flow_out;
            write_flow_file(path, flow);
            std::cout << "wrote " << path << (flow.degenerate ? " (degenerate)" : "") << "\n";
            return 0;
        }

        if (synth_cmd->parsed()) {
            const SynthSpec spec = load_synth_spec(synth_spec_path);
            const SynthResult result = generate_synth(spec);
            std::filesystem::create_directories(synth_out);
            save_frames(result.frames, synth_out, synth_maxval);
            save_annotations(result.boxes, std::filesystem::path(synth_out) / "annotations.csv");
            nlohmann::json truth;
            truth["id"] = spec.id;
            truth["nframes"] = spec.frames;
            truth["displacements"] = result.displacements;
            truth["magnitudes"] = result.magnitudes;
            truth["closed_form_rank"] = result.closed_form_rank;
            write_json(truth, (std::filesystem::path(synth_out) / "truth.json").string());
            std::cout << "wrote " << spec.frames << " frames to " << synth_out << "\n";
            return 0;
        }

        if (align_cmd->parsed()) {
            return run_checks_command(run_align_checks(align_seed), align_out);
        }
        if (fuse_cmd->parsed()) {
            return run_checks_command(run_fusion_checks(fuse_seed), fuse_out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace camflow
