#include "camflow/netpbm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "camflow/errors.hpp"

namespace camflow {

namespace {

// Next whitespace-delimited token, skipping '#' comments to end of line.
std::string next_token(std::istream& in, const std::filesystem::path& path) {
    std::string token;
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    while (c != EOF && !std::isspace(c) && c != '#') {
        token.push_back(static_cast<char>(c));
        c = in.get();
    }
    if (c == '#') in.unget();
    if (token.empty()) {
        throw FormatError("netpbm: truncated header in " + path.string());
    }
    return token;
}

int parse_int(const std::string& token, const std::filesystem::path& path) {
    try {
        std::size_t pos = 0;
        const int value = std::stoi(token, &pos);
        if (pos != token.size()) throw FormatError("");
        return value;
    } catch (...) {
        throw FormatError("netpbm: bad header value '" + token + "' in " + path.string());
    }
}

}  // namespace

PnmImage read_pnm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("netpbm: cannot open " + path.string());
    }
    const std::string magic = next_token(in, path);
    PnmImage img;
    if (magic == "P5") {
        img.channels = 1;
    } else if (magic == "P6") {
        img.channels = 3;
    } else {
        throw FormatError("netpbm: unsupported magic '" + magic + "' in " + path.string());
    }
    img.width = parse_int(next_token(in, path), path);
    img.height = parse_int(next_token(in, path), path);
    img.maxval = parse_int(next_token(in, path), path);
    if (img.width <= 0 || img.height <= 0 || img.maxval <= 0 || img.maxval > 65535) {
        throw FormatError("netpbm: bad dimensions/maxval in " + path.string());
    }
    // The header ends with exactly one whitespace byte before the raster.

    const std::size_t count =
        static_cast<std::size_t>(img.width) * img.height * img.channels;
    img.samples.resize(count);
    if (img.maxval < 256) {
        std::vector<std::uint8_t> raw(count);
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count));
        if (static_cast<std::size_t>(in.gcount()) != count) {
            throw FormatError("netpbm: truncated raster in " + path.string());
        }
        std::copy(raw.begin(), raw.end(), img.samples.begin());
    } else {
        std::vector<std::uint8_t> raw(count * 2);
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count * 2));
        if (static_cast<std::size_t>(in.gcount()) != count * 2) {
            throw FormatError("netpbm: truncated raster in " + path.string());
        }
        for (std::size_t i = 0; i < count; ++i) {
            img.samples[i] = static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
        }
    }
    return img;
}

Grid2D pnm_to_gray(const PnmImage& image) {
    if (image.width <= 0 || image.height <= 0) {
        throw FormatError("pnm_to_gray: empty image");
    }
    Grid2D gray(image.height, image.width);
    const double scale = 1.0 / image.maxval;
    if (image.channels == 1) {
        for (std::size_t i = 0; i < gray.size(); ++i) {
            gray.values()[i] = image.samples[i] * scale;
        }
    } else {
        for (std::size_t i = 0; i < gray.size(); ++i) {
            const double r = image.samples[3 * i] * scale;
            const double g = image.samples[3 * i + 1] * scale;
            const double b = image.samples[3 * i + 2] * scale;
            gray.values()[i] = 0.299 * r + 0.587 * g + 0.114 * b;
        }
    }
    return gray;
}

void write_pgm(const std::filesystem::path& path, const Grid2D& gray, int maxval) {
    if (maxval != 255 && maxval != 65535) {
        throw std::invalid_argument("write_pgm: maxval must be 255 or 65535");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("write_pgm: cannot open " + path.string());
    }
    out << "P5\n" << gray.width() << " " << gray.height() << "\n" << maxval << "\n";
    auto quantize = [&](double v) {
        const double clamped = std::clamp(v, 0.0, 1.0);
        return static_cast<long>(std::lround(clamped * maxval));
    };
    if (maxval == 255) {
        std::vector<std::uint8_t> raw(gray.size());
        for (std::size_t i = 0; i < gray.size(); ++i) {
            raw[i] = static_cast<std::uint8_t>(quantize(gray.values()[i]));
        }
        out.write(reinterpret_cast<const char*>(raw.data()),
                  static_cast<std::streamsize>(raw.size()));
    } else {
        std::vector<std::uint8_t> raw(gray.size() * 2);
        for (std::size_t i = 0; i < gray.size(); ++i) {
            const long q = quantize(gray.values()[i]);
            raw[2 * i] = static_cast<std::uint8_t>((q >> 8) & 0xFF);
            raw[2 * i + 1] = static_cast<std::uint8_t>(q & 0xFF);
        }
        out.write(reinterpret_cast<const char*>(raw.data()),
                  static_cast<std::streamsize>(raw.size()));
    }
    if (!out) {
        throw IoError("write_pgm: write failed for " + path.string());
    }
}

}  // namespace camflow
