// Copyright Contributors to the incalib Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cmath>
#include <span>
#include <vector>

#include "incalib/geometry.hpp"

namespace incalib {

/// Per-pixel depth raster, 32-bit floats. Non-finite values mark invalid
/// pixels; valid pixels are expected to be positive (checked where a
/// statistic requires it).
class DepthMap {
  public:
    DepthMap() = default;
    explicit DepthMap(ImageGeometry g, float fill = 1.0f);

    const ImageGeometry& geometry() const noexcept { return geom_; }
    int width() const noexcept { return geom_.width; }
    int height() const noexcept { return geom_.height; }

    float at(int x, int y) const noexcept { return data_[index(x, y)]; }
    void set(int x, int y, float d) noexcept { data_[index(x, y)] = d; }
    bool valid(int x, int y) const noexcept { return std::isfinite(at(x, y)); }

    std::span<const float> data() const noexcept { return data_; }
    std::span<float> data() noexcept { return data_; }

    friend bool operator==(const DepthMap&, const DepthMap&) = default;

  private:
    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * geom_.width + x;
    }

    ImageGeometry geom_{};
    std::vector<float> data_;
};

struct PointCloud {
    std::vector<Eigen::Vector3d> points;

    std::size_t size() const noexcept { return points.size(); }
    bool empty() const noexcept { return points.empty(); }
};

/// Maximum relative focal error / maximum normalized principal-point offset.
struct CalibrationError {
    double e_f = 0.0;
    double e_b = 0.0;
};

/// Least-squares fit gt ~ scale * pred + shift.
struct AffineFit {
    double scale = 1.0;
    double shift = 0.0;
};

struct DepthErrors {
    double abs_rel = 0.0;
    double delta1 = 0.0;
};

/// Exact nearest-neighbor index over a fixed set of 3D points. Immutable
/// after construction; queries are reentrant.
class KdTree3 {
  public:
    explicit KdTree3(std::span<const Eigen::Vector3d> points);

    /// Squared Euclidean distance to the nearest indexed point.
    double nearest_dist2(const Eigen::Vector3d& query) const;

  private:
    struct Node {
        int axis = -1;        // -1 marks a leaf
        double split = 0.0;
        int left = -1;
        int right = -1;
        int begin = 0;
        int end = 0;
    };

    int build(int begin, int end);
    void search(int node, const Eigen::Vector3d& q, double& best) const;

    std::vector<Eigen::Vector3d> pts_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

/// e_f = max relative focal error, e_b = max principal-point offset
/// normalized by half the image dimension.
CalibrationError calib_error(const Intrinsics& gt, const Intrinsics& pred, ImageGeometry g);

/// Closed-form least squares over jointly valid pixels. Throws RankDeficient
/// when fewer than 2 joint pixels exist or pred is constant on them.
AffineFit align_affine(const DepthMap& pred, const DepthMap& gt);

/// Scale-only variant: least-squares s minimizing sum (s*pred - gt)^2,
/// shift fixed at 0. Throws RankDeficient when no joint pixel has a
/// nonzero prediction.
AffineFit align_scale(const DepthMap& pred, const DepthMap& gt);

/// AbsRel and delta1 (threshold 1.25) over jointly valid pixels. Ground
/// truth must be positive there; non-positive aligned predictions fail the
/// delta1 test and enter AbsRel with their signed deviation.
DepthErrors depth_errors(const DepthMap& pred_aligned, const DepthMap& gt);

/// Symmetric mean nearest-neighbor Euclidean distance.
double chamfer_l1(const PointCloud& a, const PointCloud& b);

/// Harmonic mean of precision and recall at distance threshold tau
/// (inclusive); 0 when both sides miss entirely.
double fscore(const PointCloud& a, const PointCloud& b, double tau = 0.05);

}  // namespace incalib
