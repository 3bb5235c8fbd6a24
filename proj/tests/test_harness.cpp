#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "camflow/checks.hpp"
#include "camflow/cli.hpp"
#include "camflow/errors.hpp"
#include "camflow/flowio.hpp"
#include "camflow/frames.hpp"
#include "camflow/netpbm.hpp"
#include "camflow/synth.hpp"
#include "helpers.hpp"

using namespace camflow;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("camflow_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

int run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back("camflow");
    for (const std::string& a : args) argv.push_back(a.c_str());
    return cli_main(static_cast<int>(argv.size()), argv.data());
}

SynthSpec small_spec(CameraPath path, double amount, int frames = 6, int size = 48,
                     std::uint64_t seed = 3) {
    SynthSpec spec;
    spec.seed = seed;
    spec.height = size;
    spec.width = size;
    spec.frames = frames;
    spec.path = path;
    if (path == CameraPath::pan) spec.pan_v = amount;
    if (path == CameraPath::jitter) spec.jitter_amplitude = amount;
    return spec;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("pgm round trip stays within quantization error") {
    TempDir dir("pgm");
    auto gen = testutil::rng(101);
    const Grid2D gray = testutil::random_grid(gen, 17, 23, 0.0, 1.0);

    write_pgm(dir.path / "a.pgm", gray, 255);
    const Grid2D back8 = pnm_to_gray(read_pnm(dir.path / "a.pgm"));
    REQUIRE(back8.height() == 17);
    REQUIRE(back8.width() == 23);
    CHECK(testutil::max_abs_diff(gray.values(), back8.values()) <= 1.0 / 255.0);

    write_pgm(dir.path / "b.pgm", gray, 65535);
    const Grid2D back16 = pnm_to_gray(read_pnm(dir.path / "b.pgm"));
    CHECK(testutil::max_abs_diff(gray.values(), back16.values()) <= 1.0 / 65535.0);
}

TEST_CASE("ppm images load as luma") {
    TempDir dir("ppm");
    // hand-rolled 1x2 P6: red then white
    std::ofstream out(dir.path / "c.ppm", std::ios::binary);
    out << "P6\n2 1\n255\n";
    const unsigned char px[6] = {255, 0, 0, 255, 255, 255};
    out.write(reinterpret_cast<const char*>(px), 6);
    out.close();

    const Grid2D gray = pnm_to_gray(read_pnm(dir.path / "c.ppm"));
    CHECK(gray.at(0, 0) == doctest::Approx(0.299).epsilon(1e-6));
    CHECK(gray.at(0, 1) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("read_pnm rejects missing and malformed files") {
    TempDir dir("bad");
    CHECK_THROWS_AS(read_pnm(dir.path / "missing.pgm"), IoError);
    std::ofstream(dir.path / "bad.pgm") << "P9\n2 2\n255\n";
    CHECK_THROWS_AS(read_pnm(dir.path / "bad.pgm"), FormatError);
    std::ofstream(dir.path / "short.pgm", std::ios::binary) << "P5\n4 4\n255\nxy";
    CHECK_THROWS_AS(read_pnm(dir.path / "short.pgm"), FormatError);
}

TEST_CASE("load_frames orders by numeric index and tolerates gaps") {
    TempDir dir("frames");
    const Grid2D a(4, 4, 0.1), b(4, 4, 0.5), c(4, 4, 0.9);
    write_pgm(dir.path / "000.pgm", a);
    write_pgm(dir.path / "002.pgm", b);   // gap in numbering
    write_pgm(dir.path / "010.pgm", c);
    std::vector<std::string> warnings;
    const FrameSequence seq = load_frames(dir.path, &warnings);
    REQUIRE(seq.nframes() == 3);
    CHECK(seq.frames[0].at(0, 0) == doctest::Approx(0.1).epsilon(0.01));
    CHECK(seq.frames[1].at(0, 0) == doctest::Approx(0.5).epsilon(0.01));
    CHECK(seq.frames[2].at(0, 0) == doctest::Approx(0.9).epsilon(0.01));
    CHECK(!warnings.empty());
}

TEST_CASE("load_frames rejects mixed dimensions and empty dirs") {
    TempDir dir("mixed");
    write_pgm(dir.path / "000.pgm", Grid2D(4, 4, 0.5));
    write_pgm(dir.path / "001.pgm", Grid2D(4, 5, 0.5));
    CHECK_THROWS_AS(load_frames(dir.path), FormatError);

    TempDir empty("empty");
    CHECK_THROWS_AS(load_frames(empty.path), IoError);
    CHECK_THROWS_AS(load_frames(empty.path / "nope"), IoError);
}

TEST_CASE("save_frames then load_frames round-trips a sequence") {
    TempDir dir("seq");
    const SynthResult synth = generate_synth(small_spec(CameraPath::pan, 1.0, 4));
    save_frames(synth.frames, dir.path / "video", 65535);
    const FrameSequence loaded = load_frames(dir.path / "video");
    REQUIRE(loaded.nframes() == 4);
    for (int t = 0; t < 4; ++t) {
        CHECK(testutil::max_abs_diff(loaded.frames[t].values(),
                                     synth.frames.frames[t].values()) <= 1.0 / 65535.0);
    }
}

TEST_CASE("load_annotations parses, groups, and clips") {
    TempDir dir("boxes");
    {
        std::ofstream out(dir.path / "boxes.csv");
        out << "0,1,2,5,7\n";
        out << "0,3,3,4,4\n";
        out << "\n";
        out << "# comment line\n";
        out << "3,10,10,20,20\n";
        out << "4,-5,-5,100,100\n";  // needs clipping
    }
    std::vector<std::string> warnings;
    const BoxAnnotations boxes = load_annotations(dir.path / "boxes.csv", 32, 32, &warnings);
    REQUIRE(boxes.size() == 3);
    CHECK(boxes.at(0).size() == 2);
    CHECK(boxes.at(0)[0].x1 == 1);
    CHECK(boxes.at(0)[0].y2 == 7);
    CHECK(boxes.at(3).size() == 1);
    CHECK(boxes.at(4)[0].x1 == 0);
    CHECK(boxes.at(4)[0].x2 == 32);
    CHECK(!warnings.empty());
}

TEST_CASE("load_annotations reports bad lines with their number") {
    TempDir dir("badboxes");
    {
        std::ofstream out(dir.path / "a.csv");
        out << "0,1,1,5,5\n";
        out << "1,9,9,3,3\n";  // x1 >= x2
    }
    try {
        load_annotations(dir.path / "a.csv", 32, 32);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }

    {
        std::ofstream out(dir.path / "b.csv");
        out << "0;1;1;5;5\n";  // wrong separators
    }
    CHECK_THROWS_AS(load_annotations(dir.path / "b.csv", 32, 32), FormatError);

    // empty file loads as an empty annotation set
    std::ofstream(dir.path / "c.csv").close();
    CHECK(load_annotations(dir.path / "c.csv", 32, 32).empty());
}

TEST_CASE("generate_synth static path repeats one frame") {
    const SynthResult synth = generate_synth(small_spec(CameraPath::static_camera, 0.0, 5));
    REQUIRE(synth.frames.nframes() == 5);
    for (int t = 1; t < 5; ++t) {
        CHECK(testutil::max_abs_diff(synth.frames.frames[t].values(),
                                     synth.frames.frames[0].values()) == 0.0);
    }
    for (const auto& d : synth.displacements) {
        CHECK(d[0] == 0.0);
        CHECK(d[1] == 0.0);
    }
    CHECK(synth.closed_form_rank == 0.0);
}

TEST_CASE("generate_synth pan ground truth is the constant displacement") {
    const SynthResult synth = generate_synth(small_spec(CameraPath::pan, 2.0, 5));
    REQUIRE(synth.displacements.size() == 4);
    for (const auto& d : synth.displacements) {
        CHECK(d[0] == 0.0);
        CHECK(d[1] == 2.0);
    }
    CHECK(synth.closed_form_rank == 0.0);  // constant series
    // frames really are translated copies: compare overlapping interiors
    const Grid2D& f0 = synth.frames.frames[0];
    const Grid2D& f1 = synth.frames.frames[1];
    for (int y = 0; y < f0.height(); ++y) {
        for (int x = 2; x < f0.width(); ++x) {
            CHECK(f1.at(y, x) == doctest::Approx(f0.at(y, x - 2)).epsilon(1e-12));
        }
    }
}

TEST_CASE("generate_synth jitter truth matches the closed form") {
    const int frames = 11;
    const double a = 1.5;
    const SynthResult synth = generate_synth(small_spec(CameraPath::jitter, a, frames));
    REQUIRE(synth.magnitudes.size() == frames - 1);
    // shake-then-rest magnitudes alternate a, 0
    for (std::size_t i = 0; i < synth.magnitudes.size(); ++i) {
        CHECK(synth.magnitudes[i] == (i % 2 == 0 ? a : 0.0));
    }
    // independent closed form: every moving difference is a
    const double expected = a * (frames - 2) / frames;
    CHECK(synth.closed_form_rank == doctest::Approx(expected).epsilon(1e-12));
    // and the generated truth agrees with the rank formula evaluated directly
    CHECK(rank_from_series(synth.magnitudes, frames) ==
          doctest::Approx(synth.closed_form_rank).epsilon(1e-12));
}

TEST_CASE("generate_synth is deterministic per seed") {
    const SynthSpec spec = small_spec(CameraPath::jitter, 2.0, 6);
    const SynthResult a = generate_synth(spec);
    const SynthResult b = generate_synth(spec);
    for (int t = 0; t < a.frames.nframes(); ++t) {
        CHECK(testutil::max_abs_diff(a.frames.frames[t].values(),
                                     b.frames.frames[t].values()) == 0.0);
    }
    SynthSpec other = spec;
    other.seed += 1;
    const SynthResult c = generate_synth(other);
    CHECK(testutil::max_abs_diff(a.frames.frames[0].values(),
                                 c.frames.frames[0].values()) > 0.0);
}

TEST_CASE("generate_synth mixed path sums pan and jitter displacements") {
    SynthSpec spec = small_spec(CameraPath::mixed, 0.0, 10);
    spec.pan_v = 1.5;
    spec.jitter_amplitude = 2.0;
    const SynthResult synth = generate_synth(spec);
    REQUIRE(synth.displacements.size() == 9);
    // pair 0 shakes +a in y on top of the constant pan
    CHECK(synth.displacements[0][0] == 2.0);
    CHECK(synth.displacements[0][1] == 1.5);
    // pair 1 is a rest pair: pan only
    CHECK(synth.displacements[1][0] == 0.0);
    CHECK(synth.displacements[1][1] == 1.5);
    // pair 4 shakes +a in x, stacking with the pan
    CHECK(synth.displacements[4][0] == 0.0);
    CHECK(synth.displacements[4][1] == 3.5);
    for (std::size_t i = 0; i < synth.magnitudes.size(); ++i) {
        CHECK(synth.magnitudes[i] ==
              doctest::Approx(std::hypot(synth.displacements[i][0], synth.displacements[i][1])));
    }
}

TEST_CASE("load_synth_spec parses paths and sprites") {
    TempDir dir("specjson");
    const fs::path path = dir.path / "spec.json";
    {
        std::ofstream out(path);
        out << R"({"id":"m1","seed":9,"width":64,"height":48,"frames":12,)"
            << R"("path":{"type":"mixed","v":1.25,"amplitude":0.75},)"
            << R"("sprite":{"y0":5,"x0":6,"vy":0.5,"vx":1.0,"size":7,"value":0.9}})";
    }
    const SynthSpec spec = load_synth_spec(path);
    CHECK(spec.id == "m1");
    CHECK(spec.seed == 9);
    CHECK(spec.width == 64);
    CHECK(spec.height == 48);
    CHECK(spec.frames == 12);
    CHECK(spec.path == CameraPath::mixed);
    CHECK(spec.pan_v == 1.25);
    CHECK(spec.jitter_amplitude == 0.75);
    REQUIRE(spec.sprite.has_value());
    CHECK(spec.sprite->y0 == 5.0);
    CHECK(spec.sprite->vx == 1.0);
    CHECK(spec.sprite->size == 7);

    std::ofstream(dir.path / "bad.json") << R"({"path":{"type":"orbit"}})";
    CHECK_THROWS_AS(load_synth_spec(dir.path / "bad.json"), FormatError);
    std::ofstream(dir.path / "junk.json") << "not json";
    CHECK_THROWS_AS(load_synth_spec(dir.path / "junk.json"), FormatError);
    CHECK_THROWS_AS(load_synth_spec(dir.path / "missing.json"), IoError);
}

TEST_CASE("generate_synth sprites emit annotations and respect bounds") {
    SynthSpec spec = small_spec(CameraPath::static_camera, 0.0, 5);
    SpriteSpec sprite;
    sprite.y0 = 4.0;
    sprite.x0 = 4.0;
    sprite.vy = 0.0;
    sprite.vx = 2.0;
    sprite.size = 6;
    sprite.value = 1.0;
    spec.sprite = sprite;
    const SynthResult synth = generate_synth(spec);
    REQUIRE(synth.boxes.size() == 5);
    for (const auto& [frame, list] : synth.boxes) {
        REQUIRE(list.size() == 1);
        CHECK(list[0].x1 == 4 + 2 * frame);
        CHECK(list[0].x2 == 4 + 2 * frame + 6);
    }

    SynthSpec bad = spec;
    bad.sprite->vx = 20.0;
    CHECK_THROWS_AS(generate_synth(bad), SpecError);
}

TEST_CASE("flow files round-trip through the binary layout") {
    TempDir dir("flow");
    auto gen = testutil::rng(102);
    FlowField flow(9, 7);
    std::uniform_real_distribution<double> dist(-4.0, 4.0);
    for (double& v : flow.dy) v = dist(gen);
    for (double& v : flow.dx) v = dist(gen);

    write_flow_file(dir.path / "f.cflo", flow);
    const FlowField back = read_flow_file(dir.path / "f.cflo");
    REQUIRE(back.height == 9);
    REQUIRE(back.width == 7);
    for (std::size_t i = 0; i < flow.dy.size(); ++i) {
        CHECK(back.dy[i] == doctest::Approx(flow.dy[i]).epsilon(1e-6));
        CHECK(back.dx[i] == doctest::Approx(flow.dx[i]).epsilon(1e-6));
    }

    std::ofstream(dir.path / "junk.cflo", std::ios::binary) << "NOPE";
    CHECK_THROWS_AS(read_flow_file(dir.path / "junk.cflo"), FormatError);
}

TEST_CASE("check report JSON names every check") {
    TempDir dir("checks");
    CheckReport report;
    report.checks.push_back({"alpha", true, 0.5, 1.0});
    report.checks.push_back({"beta", false, 2.0, 1.0});
    save_check_report(report, dir.path / "r.json");

    std::ifstream in(dir.path / "r.json");
    nlohmann::json j;
    in >> j;
    CHECK(j["checks"].size() == 2);
    CHECK(j["checks"][0]["name"] == "alpha");
    CHECK(j["passed"] == 1);
    CHECK(j["failed"] == 1);
    CHECK_FALSE(report.all_pass());
    CHECK(report.failing_names() == std::vector<std::string>{"beta"});
}

TEST_CASE("cli synth then rank reports a zero rank for a static video") {
    TempDir dir("cli");
    const fs::path spec_path = dir.path / "spec.json";
    {
        std::ofstream out(spec_path);
        out << R"({"id":"static1","seed":4,"width":48,"height":48,"frames":4,)"
            << R"("path":{"type":"static"}})";
    }
    const fs::path video_dir = dir.path / "video";
    CHECK(run_cli({"synth", "--spec", spec_path.string(), "--out", video_dir.string()}) == 0);
    CHECK(fs::exists(video_dir / "000.pgm"));
    CHECK(fs::exists(video_dir / "truth.json"));

    const fs::path report_path = dir.path / "report.json";
    CHECK(run_cli({"rank", "--frames", video_dir.string(), "--out", report_path.string()}) == 0);
    std::ifstream in(report_path);
    nlohmann::json j;
    in >> j;
    REQUIRE(j.is_array());
    REQUIRE(j.size() == 1);
    CHECK(j[0]["rank"].get<double>() == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(j[0]["method"] == "flow");
    CHECK(j[0]["nframes"] == 4);
}

TEST_CASE("cli emits corpus reports with histogram csv") {
    TempDir dir("corpus");
    std::vector<std::string> ids = {"a", "b"};
    std::vector<double> amps = {0.0, 2.0};
    std::string list_text;
    for (int i = 0; i < 2; ++i) {
        SynthSpec spec = small_spec(amps[i] == 0.0 ? CameraPath::static_camera : CameraPath::jitter,
                                    amps[i], 5, 48, 10 + i);
        spec.id = ids[i];
        const SynthResult synth = generate_synth(spec);
        save_frames(synth.frames, dir.path / ids[i]);
        list_text += ids[i] + "," + (dir.path / ids[i]).string() + "\n";
    }
    const fs::path list_path = dir.path / "list.csv";
    std::ofstream(list_path) << list_text;

    const fs::path out_json = dir.path / "corpus.json";
    const fs::path out_hist = dir.path / "hist.csv";
    CHECK(run_cli({"rank-corpus", "--list", list_path.string(), "--out", out_json.string(),
                   "--hist", out_hist.string(), "--bins", "5"}) == 0);

    std::ifstream in(out_json);
    nlohmann::json j;
    in >> j;
    REQUIRE(j.size() == 2);
    CHECK(j[0]["video"] == "b");  // jitter outranks static
    CHECK(j[0]["rank"].get<double>() > j[1]["rank"].get<double>());

    std::ifstream hist(out_hist);
    std::string header;
    std::getline(hist, header);
    CHECK(header == "bin_lo,bin_hi,count");
    int lines = 0;
    for (std::string line; std::getline(hist, line);) ++lines;
    CHECK(lines == 5);
}

TEST_CASE("cli flow subcommand writes a readable flow file") {
    TempDir dir("cliflow");
    SynthSpec spec = small_spec(CameraPath::pan, 1.0, 3);
    const SynthResult synth = generate_synth(spec);
    save_frames(synth.frames, dir.path / "v");
    const fs::path out = dir.path / "pair0.cflo";
    CHECK(run_cli({"flow", "--frames", (dir.path / "v").string(), "--pair", "0", "--out",
                   out.string()}) == 0);
    const FlowField flow = read_flow_file(out);
    CHECK(flow.height == 48);
    CHECK(flow.width == 48);
    // out-of-range pair index fails
    CHECK(run_cli({"flow", "--frames", (dir.path / "v").string(), "--pair", "9"}) == 1);
}

TEST_CASE("cli stabilize method flags a textureless video") {
    TempDir dir("flat");
    const fs::path video_dir = dir.path / "v";
    fs::create_directories(video_dir);
    for (int t = 0; t < 3; ++t) {
        std::ostringstream name;
        name.width(3);
        name.fill('0');
        name << t;
        write_pgm(video_dir / (name.str() + ".pgm"), Grid2D(24, 24, 0.5));
    }
    const fs::path report_path = dir.path / "report.json";
    CHECK(run_cli({"rank", "--frames", video_dir.string(), "--method", "stabilize", "--out",
                   report_path.string()}) == 0);
    std::ifstream in(report_path);
    nlohmann::json j;
    in >> j;
    REQUIRE(j.size() == 1);
    CHECK(j[0]["rank"].get<double>() == 0.0);
    CHECK(j[0]["method"] == "stabilize");
    CHECK(j[0]["flags"].size() == 2);  // both pairs lack trackable structure
}

TEST_CASE("cli check suites pass and write reports") {
    TempDir dir("clichecks");
    const fs::path align_out = dir.path / "align.json";
    const fs::path fuse_out = dir.path / "fuse.json";
    CHECK(run_cli({"align-check", "--seed", "1", "--out", align_out.string()}) == 0);
    CHECK(run_cli({"fuse-check", "--seed", "1", "--out", fuse_out.string()}) == 0);
    std::ifstream in(align_out);
    nlohmann::json j;
    in >> j;
    CHECK(j["failed"] == 0);
    CHECK(j["checks"].size() >= 5);
}

TEST_CASE("cli corpus output is identical under any worker count") {
    TempDir dir("threads");
    std::string list_text;
    for (int i = 0; i < 3; ++i) {
        SynthSpec spec = small_spec(CameraPath::jitter, 1.0 + i, 5, 48, 20 + i);
        spec.id = "v" + std::to_string(i);
        save_frames(generate_synth(spec).frames, dir.path / spec.id);
        list_text += spec.id + "," + (dir.path / spec.id).string() + "\n";
    }
    const fs::path list_path = dir.path / "list.csv";
    std::ofstream(list_path) << list_text;

    auto corpus_bytes = [&](const char* threads, const fs::path& out) {
        ::setenv("CAMFLOW_THREADS", threads, 1);
        REQUIRE(run_cli({"rank-corpus", "--list", list_path.string(), "--out", out.string()}) == 0);
        ::unsetenv("CAMFLOW_THREADS");
        std::ifstream in(out, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    const std::string serial = corpus_bytes("1", dir.path / "serial.json");
    const std::string parallel = corpus_bytes("3", dir.path / "parallel.json");
    CHECK(serial == parallel);
    CHECK(!serial.empty());
}

TEST_CASE("cli usage errors exit with code 2") {
    CHECK(run_cli({"rank", "--no-such-flag"}) == 2);
    CHECK(run_cli({"not-a-command"}) == 2);
    CHECK(run_cli({}) == 2);
    // operational failure (missing directory) exits 1
    CHECK(run_cli({"rank", "--frames", "/nonexistent/dir"}) == 1);
}

}  // TEST_SUITE
