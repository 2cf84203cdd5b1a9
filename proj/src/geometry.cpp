// Copyright Contributors to the incalib Project
// SPDX-License-Identifier: Apache-2.0

#include "incalib/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace incalib {

void Intrinsics::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0))
        throw std::invalid_argument("Intrinsics: focal lengths must be positive");
    if (!std::isfinite(fx) || !std::isfinite(fy) || !std::isfinite(bx) || !std::isfinite(by))
        throw std::invalid_argument("Intrinsics: all fields must be finite");
}

void ImageGeometry::validate() const {
    if (width < 2 || height < 2)
        throw std::invalid_argument("ImageGeometry: dimensions must be >= 2");
}

IncidentMap::IncidentMap(ImageGeometry g) : geom_(g) {
    g.validate();
    data_.assign(2 * static_cast<std::size_t>(g.pixel_count()), 0.0f);
}

bool IncidentMap::all_finite() const noexcept {
    for (float v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

Eigen::Vector3d incident_vector(const Intrinsics& k, const PixelCoord& p) {
    k.validate();
    return {(p.x - k.bx) / k.fx, (p.y - k.by) / k.fy, 1.0};
}

IncidentMap synthesize_incident_map(const Intrinsics& k, ImageGeometry g) {
    k.validate();
    g.validate();
    IncidentMap m(g);
    const double ifx = 1.0 / k.fx;
    const double ify = 1.0 / k.fy;
    for (int y = 0; y < g.height; ++y) {
        const double vy = (y - k.by) * ify;
        for (int x = 0; x < g.width; ++x) {
            const double vx = (x - k.bx) * ifx;
            m.set(x, y, static_cast<float>(vx), static_cast<float>(vy));
        }
    }
    return m;
}

Intrinsics crop_intrinsics(const Intrinsics& k, const PixelCoord& offset) {
    k.validate();
    return {k.fx, k.fy, k.bx - offset.x, k.by - offset.y};
}

std::pair<Intrinsics, ImageGeometry> resize_intrinsics(const Intrinsics& k,
                                                       ImageGeometry g,
                                                       double s) {
    k.validate();
    g.validate();
    if (!(s > 0.0) || !std::isfinite(s))
        throw std::invalid_argument("resize_intrinsics: scale must be positive and finite");
    ImageGeometry out{static_cast<int>(std::lround(g.width * s)),
                      static_cast<int>(std::lround(g.height * s))};
    if (out.width < 2 || out.height < 2)
        throw std::invalid_argument("resize_intrinsics: scaled geometry degenerates below 2x2");
    return {Intrinsics{s * k.fx, s * k.fy, s * k.bx, s * k.by}, out};
}

std::pair<Intrinsics, ImageGeometry> augment_intrinsics(const Intrinsics& k,
                                                        ImageGeometry g,
                                                        std::mt19937_64& rng) {
    k.validate();
    g.validate();
    const double s = std::uniform_real_distribution<double>(1.0, 2.0)(rng);
    auto [scaled, enlarged] = resize_intrinsics(k, g, s);
    const double slack_x = enlarged.width - g.width;
    const double slack_y = enlarged.height - g.height;
    PixelCoord offset{0.0, 0.0};
    if (slack_x > 0.0)
        offset.x = std::uniform_real_distribution<double>(0.0, slack_x)(rng);
    if (slack_y > 0.0)
        offset.y = std::uniform_real_distribution<double>(0.0, slack_y)(rng);
    return {crop_intrinsics(scaled, offset), g};
}

IncidentMap crop_map(const IncidentMap& m, int x0, int y0, int w, int h) {
    if (x0 < 0 || y0 < 0 || w < 2 || h < 2 || x0 + w > m.width() || y0 + h > m.height())
        throw std::invalid_argument("crop_map: window does not fit inside the map");
    IncidentMap out(ImageGeometry{w, h});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            out.set(x, y, m.vx(x0 + x, y0 + y), m.vy(x0 + x, y0 + y));
    return out;
}

}  // namespace incalib
