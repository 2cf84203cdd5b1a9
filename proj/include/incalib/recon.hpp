// Copyright Contributors to the incalib Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "incalib/geometry.hpp"
#include "incalib/metrics.hpp"

namespace incalib {

struct ReprojectionResult {
    std::vector<PixelCoord> pixels;
    std::vector<double> depths;
};

/// P = d * [(x-bx)/fx, (y-by)/fy, 1] for every valid pixel, scanned
/// row-major. Invalid pixels produce no point; a map with no valid pixel or
/// a non-positive valid depth throws.
PointCloud unproject(const DepthMap& d, const Intrinsics& k);

/// Inverse: x = fx X/Z + bx, y = fy Y/Z + by, depth = Z. Any point with
/// Z <= 0 throws.
ReprojectionResult reproject(const PointCloud& c, const Intrinsics& k);

/// ASCII PLY with double x/y/z vertex properties, printed with enough
/// digits to round-trip bit-exactly.
void write_ply(const std::string& path, const PointCloud& c);
PointCloud read_ply(const std::string& path);

}  // namespace incalib
