// Copyright Contributors to the incalib Project
// SPDX-License-Identifier: Apache-2.0

#include "incalib/rasterio.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <span>

#include "incalib/errors.hpp"

namespace incalib {

namespace {

constexpr std::size_t kHeaderBytes = 24;

void put_u32(unsigned char* dst, std::uint32_t v) {
    dst[0] = static_cast<unsigned char>(v);
    dst[1] = static_cast<unsigned char>(v >> 8);
    dst[2] = static_cast<unsigned char>(v >> 16);
    dst[3] = static_cast<unsigned char>(v >> 24);
}

std::uint32_t get_u32(const unsigned char* src) {
    return static_cast<std::uint32_t>(src[0]) | (static_cast<std::uint32_t>(src[1]) << 8) |
           (static_cast<std::uint32_t>(src[2]) << 16) | (static_cast<std::uint32_t>(src[3]) << 24);
}

void write_raster(const std::string& path, const char* magic, ImageGeometry g,
                  std::uint32_t channels, std::span<const float> values) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("write_map: cannot open " + path);

    const std::uint64_t payload = static_cast<std::uint64_t>(values.size()) * 4;
    if (payload > std::numeric_limits<std::uint32_t>::max())
        throw IoError("write_map: payload exceeds the 32-bit size field");

    unsigned char header[kHeaderBytes];
    std::memcpy(header, magic, 4);
    put_u32(header + 4, kMapFormatVersion);
    put_u32(header + 8, static_cast<std::uint32_t>(g.width));
    put_u32(header + 12, static_cast<std::uint32_t>(g.height));
    put_u32(header + 16, channels);
    put_u32(header + 20, static_cast<std::uint32_t>(payload));
    f.write(reinterpret_cast<const char*>(header), kHeaderBytes);

    if constexpr (std::endian::native == std::endian::little) {
        f.write(reinterpret_cast<const char*>(values.data()),
                static_cast<std::streamsize>(payload));
    } else {
        for (float v : values) {
            std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
            unsigned char b[4];
            put_u32(b, bits);
            f.write(reinterpret_cast<const char*>(b), 4);
        }
    }
    if (!f) throw IoError("write_map: write failed for " + path);
}

struct RasterPayload {
    ImageGeometry geometry;
    std::vector<float> values;
};

RasterPayload read_raster(const std::string& path, const char* magic,
                          std::uint32_t expected_channels) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("read_map: cannot open " + path);

    unsigned char header[kHeaderBytes];
    f.read(reinterpret_cast<char*>(header), kHeaderBytes);
    if (f.gcount() != static_cast<std::streamsize>(kHeaderBytes))
        throw Truncated("read_map: file shorter than the 24-byte header");
    if (std::memcmp(header, magic, 4) != 0)
        throw BadMagic("read_map: expected magic '" + std::string(magic, 4) + "', got '" +
                       std::string(reinterpret_cast<char*>(header), 4) + "'");
    const std::uint32_t version = get_u32(header + 4);
    if (version != kMapFormatVersion)
        throw VersionMismatch("read_map: unsupported format version " + std::to_string(version));
    const std::uint32_t width = get_u32(header + 8);
    const std::uint32_t height = get_u32(header + 12);
    const std::uint32_t channels = get_u32(header + 16);
    const std::uint32_t payload = get_u32(header + 20);
    if (channels != expected_channels)
        throw SizeMismatch("read_map: expected " + std::to_string(expected_channels) +
                           " channels, header declares " + std::to_string(channels));
    if (width < 2 || height < 2)
        throw SizeMismatch("read_map: degenerate geometry in header");
    const std::uint64_t expected_payload =
        static_cast<std::uint64_t>(width) * height * channels * 4;
    if (payload != expected_payload)
        throw SizeMismatch("read_map: declared payload disagrees with the header dimensions");

    RasterPayload out;
    out.geometry = ImageGeometry{static_cast<int>(width), static_cast<int>(height)};
    out.values.resize(static_cast<std::size_t>(expected_payload / 4));
    f.read(reinterpret_cast<char*>(out.values.data()), static_cast<std::streamsize>(payload));
    if (f.gcount() != static_cast<std::streamsize>(payload))
        throw Truncated("read_map: file ends before the declared payload");
    if (f.peek() != std::char_traits<char>::eof())
        throw SizeMismatch("read_map: trailing bytes after the declared payload");

    if constexpr (std::endian::native != std::endian::little) {
        for (float& v : out.values) {
            unsigned char b[4];
            std::memcpy(b, &v, 4);
            v = std::bit_cast<float>(get_u32(b));
        }
    }
    return out;
}

double require_number(const nlohmann::json& j, const char* key) {
    if (!j.contains(key))
        throw ParseError(std::string("parse_intrinsics_json: missing key '") + key + "'");
    if (!j[key].is_number())
        throw ParseError(std::string("parse_intrinsics_json: key '") + key + "' is not a number");
    return j[key].get<double>();
}

// libpng writer shared by both overloads. Rows are 16-bit big-endian
// samples as the PNG format requires.
void write_png16_impl(const std::string& path, int width, int height, int channels,
                      const std::vector<std::uint16_t>& samples) {
    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw IoError("write_png16: cannot open " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw IoError("write_png16: libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw IoError("write_png16: libpng write failed for " + path);
    }
    png_init_io(png, fp);
    const int color = channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
    png_set_IHDR(png, info, width, height, 16, color, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<unsigned char> row(static_cast<std::size_t>(width) * channels * 2);
    for (int y = 0; y < height; ++y) {
        for (int i = 0; i < width * channels; ++i) {
            const std::uint16_t v = samples[static_cast<std::size_t>(y) * width * channels + i];
            row[2 * i] = static_cast<unsigned char>(v >> 8);
            row[2 * i + 1] = static_cast<unsigned char>(v & 0xff);
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

void write_sidecar(const std::string& path, const std::vector<std::pair<double, double>>& ranges) {
    nlohmann::json j;
    j["channels"] = nlohmann::json::array();
    for (const auto& [lo, hi] : ranges) j["channels"].push_back({{"min", lo}, {"max", hi}});
    std::ofstream f(path + ".json", std::ios::binary);
    if (!f) throw IoError("write_png16: cannot open sidecar for " + path);
    f << j.dump(2) << "\n";
}

std::uint16_t quantize(double v, double lo, double hi) {
    if (hi <= lo) return 0;
    const double t = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
    return static_cast<std::uint16_t>(std::lround(t * 65535.0));
}

const std::array<FixtureEntry, 13>& fixture_table() {
    static const std::array<FixtureEntry, 13> table = {{
        {"hypersim", {889.0, 889.0, 512.0, 384.0}, "synthetic render settings"},
        {"nuscenes", {1266.24, 1266.42, 816.27, 491.51}, "checkerboard calibration"},
        {"kitti", {718.86, 718.86, 607.19, 185.22}, "checkerboard calibration"},
        {"cityscapes", {2267.86, 2230.28, 1045.53, 518.88}, "checkerboard calibration"},
        {"nyu", {518.85, 519.47, 325.58, 253.74}, "checkerboard calibration"},
        {"sun3d", {570.34, 570.32, 320.00, 240.00}, "checkerboard calibration"},
        {"arkitscenes", {1601.95, 1601.95, 936.55, 709.61}, "checkerboard calibration"},
        {"objectron", {1579.18, 1579.18, 721.01, 934.70}, "checkerboard calibration"},
        {"waymo", {2060.56, 2060.56, 947.46, 634.37}, "checkerboard calibration"},
        {"rgbd", {570.00, 570.00, 320.00, 240.00}, "manufacturer default, uncalibrated"},
        {"scannet", {1165.72, 1165.74, 649.09, 484.77}, "checkerboard calibration"},
        {"mvs", {570.00, 570.00, 320.00, 240.00}, "manufacturer default, uncalibrated"},
        {"scenes11", {570.00, 570.00, 320.00, 240.00}, "manufacturer default, uncalibrated"},
    }};
    return table;
}

}  // namespace

void write_map(const std::string& path, const IncidentMap& m) {
    m.geometry().validate();
    write_raster(path, "IMAP", m.geometry(), 2, m.data());
}

void write_map(const std::string& path, const DepthMap& m) {
    m.geometry().validate();
    write_raster(path, "DMAP", m.geometry(), 1, m.data());
}

IncidentMap read_incident_map(const std::string& path) {
    RasterPayload p = read_raster(path, "IMAP", 2);
    IncidentMap m(p.geometry);
    std::copy(p.values.begin(), p.values.end(), m.data().begin());
    return m;
}

DepthMap read_depth_map(const std::string& path) {
    RasterPayload p = read_raster(path, "DMAP", 1);
    DepthMap m(p.geometry);
    std::copy(p.values.begin(), p.values.end(), m.data().begin());
    return m;
}

std::string intrinsics_json(const Intrinsics& k, ImageGeometry g) {
    k.validate();
    g.validate();
    nlohmann::json j;
    j["fx"] = k.fx;
    j["fy"] = k.fy;
    j["bx"] = k.bx;
    j["by"] = k.by;
    j["width"] = g.width;
    j["height"] = g.height;
    return j.dump();
}

std::pair<Intrinsics, ImageGeometry> parse_intrinsics_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("parse_intrinsics_json: ") + e.what());
    }
    Intrinsics k{require_number(j, "fx"), require_number(j, "fy"), require_number(j, "bx"),
                 require_number(j, "by")};
    ImageGeometry g{static_cast<int>(require_number(j, "width")),
                    static_cast<int>(require_number(j, "height"))};
    try {
        k.validate();
        g.validate();
    } catch (const std::invalid_argument& e) {
        throw ParseError(std::string("parse_intrinsics_json: ") + e.what());
    }
    return {k, g};
}

const FixtureEntry& fixture_intrinsics(const std::string& name) {
    for (const auto& entry : fixture_table())
        if (entry.name == name) return entry;
    std::string known;
    for (const auto& entry : fixture_table()) {
        if (!known.empty()) known += ", ";
        known += entry.name;
    }
    throw UnknownFixture("unknown fixture '" + name + "'; known fixtures: " + known);
}

std::vector<std::string> fixture_names() {
    std::vector<std::string> names;
    names.reserve(fixture_table().size());
    for (const auto& entry : fixture_table()) names.push_back(entry.name);
    return names;
}

void write_png16(const std::string& path, const IncidentMap& m, bool unit_normalize) {
    const int w = m.width(), h = m.height();
    const int channels = unit_normalize ? 3 : 2;
    std::vector<double> values(static_cast<std::size_t>(w) * h * channels);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t i = (static_cast<std::size_t>(y) * w + x) * channels;
            if (unit_normalize) {
                const Eigen::Vector3d v = m.ray(x, y).normalized();
                values[i] = v.x();
                values[i + 1] = v.y();
                values[i + 2] = v.z();
            } else {
                values[i] = m.vx(x, y);
                values[i + 1] = m.vy(x, y);
            }
        }

    std::vector<std::pair<double, double>> ranges(channels,
                                                  {std::numeric_limits<double>::infinity(),
                                                   -std::numeric_limits<double>::infinity()});
    for (std::size_t i = 0; i < values.size(); ++i) {
        auto& [lo, hi] = ranges[i % channels];
        lo = std::min(lo, values[i]);
        hi = std::max(hi, values[i]);
    }

    // PNG has no 2-channel 16-bit mode; pad the canonical form with a zero
    // blue channel.
    const int png_channels = 3;
    std::vector<std::uint16_t> samples(static_cast<std::size_t>(w) * h * png_channels, 0);
    for (std::size_t px = 0; px < static_cast<std::size_t>(w) * h; ++px)
        for (int c = 0; c < channels; ++c)
            samples[px * png_channels + c] =
                quantize(values[px * channels + c], ranges[c].first, ranges[c].second);
    write_png16_impl(path, w, h, png_channels, samples);
    write_sidecar(path, ranges);
}

void write_png16(const std::string& path, const DepthMap& m) {
    const int w = m.width(), h = m.height();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (m.valid(x, y)) {
                lo = std::min(lo, static_cast<double>(m.at(x, y)));
                hi = std::max(hi, static_cast<double>(m.at(x, y)));
            }
    if (!std::isfinite(lo)) lo = hi = 0.0;

    std::vector<std::uint16_t> samples(static_cast<std::size_t>(w) * h, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (m.valid(x, y))
                samples[static_cast<std::size_t>(y) * w + x] = quantize(m.at(x, y), lo, hi);
    write_png16_impl(path, w, h, 1, samples);
    write_sidecar(path, {{lo, hi}});
}

}  // namespace incalib
