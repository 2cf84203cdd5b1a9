// Copyright Contributors to the incalib Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "incalib/geometry.hpp"

namespace incalib {

struct SolverConfig {
    int iterations = 2048;
    double inlier_threshold = 0.008727;  // 0.5 degrees, radians
    std::uint64_t seed = 0;
    bool assume_centered = false;
    double min_inlier_ratio = 0.2;

    void validate() const;
};

struct CalibrationEstimate {
    Intrinsics intrinsics;
    double inlier_ratio = 0.0;
    double median_residual = 0.0;  // radians
};

/// Strictly increasing positive focal-length candidates.
struct FocalGrid {
    std::vector<double> candidates;

    void validate() const;

    static FocalGrid log_spaced(double f_min, double f_max, int count);

    /// 512 log-spaced candidates covering horizontal FoV 15..140 degrees
    /// at the given image width.
    static FocalGrid default_for_width(int width);
};

enum class MinimalSolveStatus { ok, degenerate_sample, invalid_solution };

/// Closed-form inversion of two pixel/ray correspondences in canonical
/// z = 1 form. Non-throwing variant used inside the RANSAC loop.
MinimalSolveStatus try_minimal_solve(const PixelCoord& p1, const Eigen::Vector3d& v1,
                                     const PixelCoord& p2, const Eigen::Vector3d& v2,
                                     Intrinsics& out) noexcept;

/// Throwing variant: DegenerateSample on coincident coordinates or ray
/// components, InvalidSolution on a non-positive focal length.
Intrinsics minimal_solve(const PixelCoord& p1, const Eigen::Vector3d& v1,
                         const PixelCoord& p2, const Eigen::Vector3d& v2);

/// Angle between the two rays in radians, [0, pi). Both must be finite and
/// nonzero; intended for rays with positive z.
double angular_residual(const Eigen::Vector3d& v_obs, const Eigen::Vector3d& v_model);

/// Robust 4-DoF recovery. cfg.iterations two-point trials are scored by
/// inlier count under the angular threshold; the best candidate is refined
/// by least squares over its full-map inlier set. Deterministic for a given
/// (map, cfg) including under internal parallelism. Maps with more than
/// 65536 pixels are scored on a stride-subsampled set; refinement always
/// uses the full map.
CalibrationEstimate ransac_calibrate(const IncidentMap& m, const SolverConfig& cfg);

/// 1-DoF mode: fx = fy enumerated over the grid with the principal point
/// fixed at the image center. Scores the median angular residual over all
/// pixels; ties break toward the smaller candidate.
CalibrationEstimate enumerate_focal(const IncidentMap& m, ImageGeometry g, const FocalGrid& grid);

/// Closed-form 1-D regressions x = fx*v_x + bx and y = fy*v_y + by over the
/// masked pixels (mask is row-major, nonzero = inlier). Throws RankDeficient
/// when the inlier set cannot determine a unique line.
Intrinsics refine_least_squares(const IncidentMap& m, const Intrinsics& k0,
                                const std::vector<std::uint8_t>& inlier_mask);

/// Dispatch helper used by the CLI: enumerate_focal with the default grid
/// when cfg.assume_centered is set, ransac_calibrate otherwise.
CalibrationEstimate calibrate(const IncidentMap& m, const SolverConfig& cfg);

}  // namespace incalib
