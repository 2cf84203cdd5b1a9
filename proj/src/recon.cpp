// Copyright Contributors to the incalib Project
// SPDX-License-Identifier: Apache-2.0

#include "incalib/recon.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "incalib/errors.hpp"

namespace incalib {

PointCloud unproject(const DepthMap& d, const Intrinsics& k) {
    k.validate();
    d.geometry().validate();
    PointCloud cloud;
    cloud.points.reserve(static_cast<std::size_t>(d.geometry().pixel_count()));
    const double ifx = 1.0 / k.fx;
    const double ify = 1.0 / k.fy;
    for (int y = 0; y < d.height(); ++y)
        for (int x = 0; x < d.width(); ++x) {
            if (!d.valid(x, y)) continue;
            const double depth = d.at(x, y);
            if (!(depth > 0.0))
                throw std::invalid_argument("unproject: valid pixels must have positive depth");
            cloud.points.emplace_back(depth * (x - k.bx) * ifx, depth * (y - k.by) * ify, depth);
        }
    if (cloud.empty()) throw std::invalid_argument("unproject: no valid pixels");
    return cloud;
}

ReprojectionResult reproject(const PointCloud& c, const Intrinsics& k) {
    k.validate();
    if (c.empty()) throw std::invalid_argument("reproject: empty point cloud");
    ReprojectionResult out;
    out.pixels.reserve(c.size());
    out.depths.reserve(c.size());
    for (const auto& p : c.points) {
        if (!(p.z() > 0.0))
            throw std::invalid_argument("reproject: point with non-positive depth");
        out.pixels.push_back({k.fx * (p.x() / p.z()) + k.bx, k.fy * (p.y() / p.z()) + k.by});
        out.depths.push_back(p.z());
    }
    return out;
}

void write_ply(const std::string& path, const PointCloud& c) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("write_ply: cannot open " + path);
    f << "ply\nformat ascii 1.0\nelement vertex " << c.size()
      << "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
    char line[96];
    for (const auto& p : c.points) {
        std::snprintf(line, sizeof(line), "%.17g %.17g %.17g\n", p.x(), p.y(), p.z());
        f << line;
    }
    if (!f) throw IoError("write_ply: write failed for " + path);
}

PointCloud read_ply(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("read_ply: cannot open " + path);
    std::string line;
    if (!std::getline(f, line) || line != "ply") throw ParseError("read_ply: missing ply magic");

    std::size_t count = 0;
    bool ascii = false, have_count = false;
    std::vector<std::string> properties;
    while (std::getline(f, line)) {
        if (line == "end_header") break;
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (word == "format") {
            std::string fmt;
            ls >> fmt;
            ascii = fmt == "ascii";
        } else if (word == "element") {
            std::string kind;
            ls >> kind >> count;
            if (kind != "vertex") throw ParseError("read_ply: unsupported element " + kind);
            have_count = true;
        } else if (word == "property") {
            std::string type, name;
            ls >> type >> name;
            properties.push_back(name);
        }
    }
    if (!ascii || !have_count) throw ParseError("read_ply: expected an ascii vertex header");
    if (properties != std::vector<std::string>{"x", "y", "z"})
        throw ParseError("read_ply: expected exactly x, y, z vertex properties");

    PointCloud cloud;
    cloud.points.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        double x, y, z;
        if (!(f >> x >> y >> z)) throw ParseError("read_ply: truncated vertex list");
        cloud.points.emplace_back(x, y, z);
    }
    return cloud;
}

}  // namespace incalib
