#include "cfx/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace cfx {

namespace {

constexpr int kSide = 8;
constexpr int kMaxval = 16;

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

}  // namespace

std::vector<int> quantize_pixels(const Vector& pixels) {
    if (pixels.size() != kSide * kSide) {
        throw DimensionMismatch("an 8 x 8 image needs 64 pixels, got " + std::to_string(pixels.size()));
    }
    std::vector<int> out(kSide * kSide);
    for (int i = 0; i < kSide * kSide; ++i) {
        const double v = std::isfinite(pixels(i)) ? pixels(i) : 0.0;
        out[i] = static_cast<int>(std::lround(std::clamp(v, 0.0, static_cast<double>(kMaxval))));
    }
    return out;
}

std::string to_pgm(const Vector& pixels) {
    const auto q = quantize_pixels(pixels);
    std::ostringstream out;
    out << "P2\n" << kSide << ' ' << kSide << '\n' << kMaxval << '\n';
    for (int r = 0; r < kSide; ++r) {
        for (int c = 0; c < kSide; ++c) {
            out << q[r * kSide + c] << (c + 1 < kSide ? ' ' : '\n');
        }
    }
    return out.str();
}

std::vector<int> parse_pgm(const std::string& text) {
    std::istringstream in(text);
    std::string magic;
    int width = 0;
    int height = 0;
    int maxval = 0;
    if (!(in >> magic >> width >> height >> maxval) || magic != "P2" || width <= 0 || height <= 0 || maxval <= 0) {
        throw MalformedInput("not a plain PGM header", 1);
    }
    std::vector<int> out(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
    for (auto& v : out) {
        if (!(in >> v) || v < 0 || v > maxval) {
            throw MalformedInput("bad or missing PGM pixel", 0);
        }
    }
    return out;
}

void emit_images(const ExperimentReport& report, const std::filesystem::path& dir) {
    if (report.dim != kSide * kSide) {
        throw InvalidArgument("images need 64-dimensional digit samples");
    }
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw IoError("cannot create image directory " + dir.string());
    }
    std::ostringstream sheet;
    sheet << "sample,kind,label";
    for (int i = 0; i < kSide * kSide; ++i) {
        sheet << ",p" << i;
    }
    sheet << '\n';
    auto emit = [&](const SampleRecord& r, const char* kind, int label, const Vector& raw) {
        const std::string name = std::to_string(r.sample) + "_" + kind + "_" + std::to_string(label) + ".pgm";
        write_text(dir / name, to_pgm(raw));
        sheet << r.sample << ',' << kind << ',' << label;
        for (int v : quantize_pixels(raw)) {
            sheet << ',' << v;
        }
        sheet << '\n';
    };
    for (const auto& r : report.records) {
        emit(r, "orig", r.y_orig, r.x_orig_raw);
        if (r.baseline.found()) {
            emit(r, "closest", r.y_cf, r.baseline_raw);
        }
        if (r.mapped.found()) {
            emit(r, "plausible", r.y_cf, r.mapped_raw);
        }
    }
    write_text(dir / "contact_sheet.csv", sheet.str());
}

}  // namespace cfx
