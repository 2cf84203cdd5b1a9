// Copyright Contributors to the incalib Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "incalib/errors.hpp"

namespace incalib {

/// 4-DoF pinhole intrinsics, all in pixels.
struct Intrinsics {
    double fx = 1.0;
    double fy = 1.0;
    double bx = 0.0;
    double by = 0.0;

    /// Throws std::invalid_argument unless fx > 0, fy > 0 and all fields
    /// are finite.
    void validate() const;
};

struct ImageGeometry {
    int width = 0;
    int height = 0;

    /// Throws std::invalid_argument unless both dimensions are >= 2.
    void validate() const;

    std::int64_t pixel_count() const noexcept {
        return static_cast<std::int64_t>(width) * height;
    }

    friend bool operator==(const ImageGeometry&, const ImageGeometry&) = default;
};

/// Continuous pixel position, pixel-center convention: integer coordinates
/// address pixel centers, the grid is {0..w-1} x {0..h-1}.
struct PixelCoord {
    double x = 0.0;
    double y = 0.0;
};

/// Dense per-pixel incidence directions in canonical z = 1 form. Only the
/// (v_x, v_y) pair is stored, interleaved row-major, as 32-bit floats;
/// the implicit third component is exactly 1.
class IncidentMap {
  public:
    IncidentMap() = default;
    explicit IncidentMap(ImageGeometry g);

    const ImageGeometry& geometry() const noexcept { return geom_; }
    int width() const noexcept { return geom_.width; }
    int height() const noexcept { return geom_.height; }

    float vx(int x, int y) const noexcept { return data_[index(x, y)]; }
    float vy(int x, int y) const noexcept { return data_[index(x, y) + 1]; }
    void set(int x, int y, float vx, float vy) noexcept {
        data_[index(x, y)] = vx;
        data_[index(x, y) + 1] = vy;
    }

    /// Full incidence ray [v_x, v_y, 1] at a grid pixel.
    Eigen::Vector3d ray(int x, int y) const noexcept {
        return {static_cast<double>(vx(x, y)), static_cast<double>(vy(x, y)), 1.0};
    }

    std::span<const float> data() const noexcept { return data_; }
    std::span<float> data() noexcept { return data_; }

    bool all_finite() const noexcept;

    friend bool operator==(const IncidentMap&, const IncidentMap&) = default;

  private:
    std::size_t index(int x, int y) const noexcept {
        return 2 * (static_cast<std::size_t>(y) * geom_.width + x);
    }

    ImageGeometry geom_{};
    std::vector<float> data_;
};

/// Incidence ray [(x-bx)/fx, (y-by)/fy, 1] of pixel p under intrinsics k.
Eigen::Vector3d incident_vector(const Intrinsics& k, const PixelCoord& p);

/// Samples incident_vector at every integer grid pixel of g.
IncidentMap synthesize_incident_map(const Intrinsics& k, ImageGeometry g);

/// Intrinsics of the window starting at `offset`: focal lengths unchanged,
/// principal point translated.
Intrinsics crop_intrinsics(const Intrinsics& k, const PixelCoord& offset);

/// Uniformly scales intrinsics and geometry by s (> 0). Geometry dimensions
/// are rounded to the nearest integer; a resulting dimension < 2 throws
/// std::invalid_argument.
std::pair<Intrinsics, ImageGeometry> resize_intrinsics(const Intrinsics& k,
                                                       ImageGeometry g,
                                                       double s);

/// Enlarges by a uniform random scale s in [1, 2], then crops a random
/// g-sized window out of the enlarged frame. Scale is drawn before the
/// offset so fixtures are reproducible. Returns intrinsics for the window
/// at the original geometry.
std::pair<Intrinsics, ImageGeometry> augment_intrinsics(const Intrinsics& k,
                                                        ImageGeometry g,
                                                        std::mt19937_64& rng);

/// Extracts the w x h sub-raster with top-left corner (x0, y0). Values are
/// copied bit-exactly; the sub-map corresponds to crop_intrinsics(k, (x0, y0)).
IncidentMap crop_map(const IncidentMap& m, int x0, int y0, int w, int h);

}  // namespace incalib
