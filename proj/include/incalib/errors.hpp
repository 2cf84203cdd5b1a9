// Copyright Contributors to the incalib Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace incalib {

/// Base class for all incalib errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --- solver ---

/// Two-point sample with a zero denominator (coincident coordinates or
/// coincident incidence components).
struct DegenerateSample : Error {
    using Error::Error;
};

/// A closed-form solve produced a non-positive or non-finite focal length.
struct InvalidSolution : Error {
    using Error::Error;
};

/// RANSAC finished without any trial reaching the minimum inlier ratio.
struct NoConsensus : Error {
    using Error::Error;
};

/// A least-squares system has no unique solution (constant regressor,
/// too few samples).
struct RankDeficient : Error {
    using Error::Error;
};

// --- rasterio ---

/// File could not be opened, read or written.
struct IoError : Error {
    using Error::Error;
};

/// Raster file magic does not match the expected payload kind.
struct BadMagic : IoError {
    using IoError::IoError;
};

/// Raster file version differs from the supported format version.
struct VersionMismatch : IoError {
    using IoError::IoError;
};

/// File ends before the declared payload.
struct Truncated : IoError {
    using IoError::IoError;
};

/// Declared payload size disagrees with the header dimensions or the
/// actual file length.
struct SizeMismatch : IoError {
    using IoError::IoError;
};

/// Malformed or incomplete JSON / PLY text.
struct ParseError : Error {
    using Error::Error;
};

/// Fixture name not present in the embedded table.
struct UnknownFixture : Error {
    using Error::Error;
};

}  // namespace incalib
