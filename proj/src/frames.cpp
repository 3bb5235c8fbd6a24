#include "camflow/frames.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "camflow/errors.hpp"
#include "camflow/netpbm.hpp"

namespace camflow {

namespace {

// Numeric index embedded in the filename stem (last run of digits), or -1.
long stem_index(const std::string& stem) {
    int end = static_cast<int>(stem.size());
    while (end > 0 && !std::isdigit(static_cast<unsigned char>(stem[end - 1]))) --end;
    int begin = end;
    while (begin > 0 && std::isdigit(static_cast<unsigned char>(stem[begin - 1]))) --begin;
    if (begin == end) return -1;
    return std::stol(stem.substr(begin, end - begin));
}

}  // namespace

FrameSequence load_frames(const std::filesystem::path& dir,
                          std::vector<std::string>* warnings) {
    if (!std::filesystem::is_directory(dir)) {
        throw IoError("load_frames: not a directory: " + dir.string());
    }
    struct Entry {
        long index;
        std::filesystem::path path;
    };
    std::vector<Entry> entries;
    for (const auto& item : std::filesystem::directory_iterator(dir)) {
        if (!item.is_regular_file()) continue;
        const std::string ext = item.path().extension().string();
        if (ext != ".pgm" && ext != ".ppm") continue;
        const long idx = stem_index(item.path().stem().string());
        if (idx < 0) {
            if (warnings) {
                warnings->push_back("skipping non-numbered file " + item.path().filename().string());
            }
            continue;
        }
        entries.push_back({idx, item.path()});
    }
    if (entries.empty()) {
        throw IoError("load_frames: no numbered .pgm/.ppm files in " + dir.string());
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        if (a.index != b.index) return a.index < b.index;
        return a.path < b.path;
    });
    for (std::size_t i = 0; i + 1 < entries.size(); ++i) {
        if (entries[i + 1].index != entries[i].index + 1 && warnings) {
            warnings->push_back("gap in frame numbering between " +
                                std::to_string(entries[i].index) + " and " +
                                std::to_string(entries[i + 1].index));
        }
    }

    FrameSequence sequence;
    sequence.video_id = dir.filename().string();
    sequence.frames.reserve(entries.size());
    for (const Entry& e : entries) {
        Grid2D frame = pnm_to_gray(read_pnm(e.path));
        if (!sequence.frames.empty() &&
            (frame.height() != sequence.height() || frame.width() != sequence.width())) {
            throw FormatError("load_frames: inconsistent dimensions at " + e.path.string());
        }
        sequence.frames.push_back(std::move(frame));
    }
    return sequence;
}

void save_frames(const FrameSequence& sequence, const std::filesystem::path& dir,
                 int maxval) {
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < sequence.frames.size(); ++i) {
        std::ostringstream name;
        name.width(3);
        name.fill('0');
        name << i;
        write_pgm(dir / (name.str() + ".pgm"), sequence.frames[i], maxval);
    }
}

BoxAnnotations load_annotations(const std::filesystem::path& path, int frame_width,
                                int frame_height, std::vector<std::string>* warnings) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("load_annotations: cannot open " + path.string());
    }
    BoxAnnotations annotations;
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        // allow blank lines and comments
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;

        std::istringstream ss(line);
        int frame = 0;
        Box box;
        char c1 = 0, c2 = 0, c3 = 0, c4 = 0;
        if (!(ss >> frame >> c1 >> box.x1 >> c2 >> box.y1 >> c3 >> box.x2 >> c4 >> box.y2) ||
            c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',') {
            throw FormatError("load_annotations: malformed line " +
                              std::to_string(line_number) + " in " + path.string());
        }
        if (box.x1 >= box.x2 || box.y1 >= box.y2) {
            throw FormatError("load_annotations: degenerate box at line " +
                              std::to_string(line_number) + " in " + path.string());
        }
        if (frame < 0) {
            throw FormatError("load_annotations: negative frame index at line " +
                              std::to_string(line_number) + " in " + path.string());
        }
        if (frame_width > 0 && frame_height > 0) {
            const Box clipped = box.clipped(frame_width, frame_height);
            if (clipped.x1 != box.x1 || clipped.y1 != box.y1 || clipped.x2 != box.x2 ||
                clipped.y2 != box.y2) {
                if (warnings) {
                    warnings->push_back("box clipped to frame bounds at line " +
                                        std::to_string(line_number));
                }
            }
            if (!clipped.valid()) {
                if (warnings) {
                    warnings->push_back("box entirely outside frame at line " +
                                        std::to_string(line_number) + ", dropped");
                }
                continue;
            }
            box = clipped;
        }
        annotations[frame].push_back(box);
    }
    return annotations;
}

void save_annotations(const BoxAnnotations& boxes, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("save_annotations: cannot open " + path.string());
    }
    for (const auto& [frame, list] : boxes) {
        for (const Box& b : list) {
            out << frame << "," << b.x1 << "," << b.y1 << "," << b.x2 << "," << b.y2 << "\n";
        }
    }
}

}  // namespace camflow
