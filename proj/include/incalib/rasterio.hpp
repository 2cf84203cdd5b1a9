// Copyright Contributors to the incalib Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "incalib/geometry.hpp"
#include "incalib/metrics.hpp"

namespace incalib {

/// IMAP/DMAP container: a 24-byte header followed by row-major,
/// channel-interleaved 32-bit IEEE-754 little-endian values.
///
///   bytes  0..3   magic, "IMAP" or "DMAP"
///   bytes  4..7   format version (u32 LE)
///   bytes  8..11  width           (u32 LE)
///   bytes 12..15  height          (u32 LE)
///   bytes 16..19  channels        (u32 LE, 2 for IMAP, 1 for DMAP)
///   bytes 20..23  payload bytes   (u32 LE, must equal w*h*c*4)
inline constexpr std::uint32_t kMapFormatVersion = 1;

void write_map(const std::string& path, const IncidentMap& m);
void write_map(const std::string& path, const DepthMap& m);

IncidentMap read_incident_map(const std::string& path);
DepthMap read_depth_map(const std::string& path);

/// JSON object with keys fx, fy, bx, by, width, height.
std::string intrinsics_json(const Intrinsics& k, ImageGeometry g);

/// Parses and validates the same object. Missing keys, non-positive focal
/// lengths or degenerate geometry throw ParseError.
std::pair<Intrinsics, ImageGeometry> parse_intrinsics_json(const std::string& text);

/// Dataset intrinsics embedded as fixtures.
struct FixtureEntry {
    std::string name;
    Intrinsics intrinsics;
    std::string source;
};

/// Looks a fixture up by name; throws UnknownFixture listing the known
/// names otherwise.
const FixtureEntry& fixture_intrinsics(const std::string& name);

std::vector<std::string> fixture_names();

/// 16-bit PNG visualization export. Each channel is affinely mapped onto
/// [0, 65535]; the per-channel (min, max) pairs land in a ".json" sidecar
/// next to the image. Lossy by design, for inspection only.
/// unit_normalize exports the full unit ray (3 channels) instead of the
/// canonical z = 1 pair.
void write_png16(const std::string& path, const IncidentMap& m, bool unit_normalize = false);

/// Single-channel grayscale variant; invalid pixels export as 0.
void write_png16(const std::string& path, const DepthMap& m);

}  // namespace incalib
