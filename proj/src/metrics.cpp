// Copyright Contributors to the incalib Project
// SPDX-License-Identifier: Apache-2.0

#include "incalib/metrics.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "incalib/errors.hpp"

namespace incalib {

DepthMap::DepthMap(ImageGeometry g, float fill) : geom_(g) {
    g.validate();
    data_.assign(static_cast<std::size_t>(g.pixel_count()), fill);
}

namespace {

double dist2(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
    const double dx = a.x() - b.x();
    const double dy = a.y() - b.y();
    const double dz = a.z() - b.z();
    return dx * dx + dy * dy + dz * dz;
}

constexpr int kLeafSize = 8;

void check_cloud(const PointCloud& c, const char* what) {
    if (c.empty()) throw std::invalid_argument(std::string(what) + ": point cloud is empty");
    for (const auto& p : c.points)
        if (!p.allFinite())
            throw std::invalid_argument(std::string(what) + ": non-finite point coordinate");
}

}  // namespace

KdTree3::KdTree3(std::span<const Eigen::Vector3d> points)
    : pts_(points.begin(), points.end()) {
    if (pts_.empty()) throw std::invalid_argument("KdTree3: empty point set");
    nodes_.reserve(2 * pts_.size() / kLeafSize + 2);
    root_ = build(0, static_cast<int>(pts_.size()));
}

int KdTree3::build(int begin, int end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    Node n;
    n.begin = begin;
    n.end = end;
    if (end - begin > kLeafSize) {
        // Split the widest axis at its median.
        Eigen::Vector3d lo = pts_[begin], hi = pts_[begin];
        for (int i = begin + 1; i < end; ++i) {
            lo = lo.cwiseMin(pts_[i]);
            hi = hi.cwiseMax(pts_[i]);
        }
        int axis = 0;
        (hi - lo).maxCoeff(&axis);
        if (hi[axis] > lo[axis]) {
            const int mid = begin + (end - begin) / 2;
            std::nth_element(pts_.begin() + begin, pts_.begin() + mid, pts_.begin() + end,
                             [axis](const auto& a, const auto& b) { return a[axis] < b[axis]; });
            n.axis = axis;
            n.split = pts_[mid][axis];
            n.left = build(begin, mid);
            n.right = build(mid, end);
        }
    }
    nodes_[id] = n;
    return id;
}

void KdTree3::search(int node, const Eigen::Vector3d& q, double& best) const {
    const Node& n = nodes_[node];
    if (n.axis < 0) {
        for (int i = n.begin; i < n.end; ++i)
            best = std::min(best, dist2(q, pts_[i]));
        return;
    }
    const double delta = q[n.axis] - n.split;
    const int near = delta < 0.0 ? n.left : n.right;
    const int far = delta < 0.0 ? n.right : n.left;
    search(near, q, best);
    if (delta * delta < best) search(far, q, best);
}

double KdTree3::nearest_dist2(const Eigen::Vector3d& q) const {
    double best = std::numeric_limits<double>::infinity();
    search(root_, q, best);
    return best;
}

CalibrationError calib_error(const Intrinsics& gt, const Intrinsics& pred, ImageGeometry g) {
    gt.validate();
    g.validate();
    CalibrationError e;
    e.e_f = std::max(std::abs(pred.fx - gt.fx) / gt.fx, std::abs(pred.fy - gt.fy) / gt.fy);
    e.e_b = std::max(2.0 * std::abs(pred.bx - gt.bx) / g.width,
                     2.0 * std::abs(pred.by - gt.by) / g.height);
    return e;
}

AffineFit align_affine(const DepthMap& pred, const DepthMap& gt) {
    if (pred.geometry() != gt.geometry())
        throw std::invalid_argument("align_affine: geometry mismatch");
    // Two passes: means first, then centered moments.
    std::size_t n = 0;
    double sum_p = 0.0, sum_g = 0.0;
    for (int y = 0; y < pred.height(); ++y)
        for (int x = 0; x < pred.width(); ++x)
            if (pred.valid(x, y) && gt.valid(x, y)) {
                sum_p += pred.at(x, y);
                sum_g += gt.at(x, y);
                ++n;
            }
    if (n < 2) throw RankDeficient("align_affine: fewer than 2 jointly valid pixels");
    const double mean_p = sum_p / static_cast<double>(n);
    const double mean_g = sum_g / static_cast<double>(n);
    double spp = 0.0, spg = 0.0;
    for (int y = 0; y < pred.height(); ++y)
        for (int x = 0; x < pred.width(); ++x)
            if (pred.valid(x, y) && gt.valid(x, y)) {
                const double dp = pred.at(x, y) - mean_p;
                const double dg = gt.at(x, y) - mean_g;
                spp += dp * dp;
                spg += dp * dg;
            }
    if (spp == 0.0) throw RankDeficient("align_affine: prediction is constant on the joint mask");
    AffineFit fit;
    fit.scale = spg / spp;
    fit.shift = mean_g - fit.scale * mean_p;
    return fit;
}

AffineFit align_scale(const DepthMap& pred, const DepthMap& gt) {
    if (pred.geometry() != gt.geometry())
        throw std::invalid_argument("align_scale: geometry mismatch");
    double spp = 0.0, spg = 0.0;
    std::size_t n = 0;
    for (int y = 0; y < pred.height(); ++y)
        for (int x = 0; x < pred.width(); ++x)
            if (pred.valid(x, y) && gt.valid(x, y)) {
                const double p = pred.at(x, y);
                spp += p * p;
                spg += p * static_cast<double>(gt.at(x, y));
                ++n;
            }
    if (n == 0 || spp == 0.0)
        throw RankDeficient("align_scale: no usable jointly valid pixels");
    return {spg / spp, 0.0};
}

DepthErrors depth_errors(const DepthMap& pred_aligned, const DepthMap& gt) {
    if (pred_aligned.geometry() != gt.geometry())
        throw std::invalid_argument("depth_errors: geometry mismatch");
    std::size_t n = 0, n_delta = 0;
    double sum_rel = 0.0;
    for (int y = 0; y < gt.height(); ++y)
        for (int x = 0; x < gt.width(); ++x) {
            if (!pred_aligned.valid(x, y) || !gt.valid(x, y)) continue;
            const double g = gt.at(x, y);
            if (!(g > 0.0))
                throw std::invalid_argument("depth_errors: ground truth must be positive on valid pixels");
            const double p = pred_aligned.at(x, y);
            sum_rel += std::abs(p - g) / g;
            if (p > 0.0 && std::max(p / g, g / p) < 1.25) ++n_delta;
            ++n;
        }
    if (n == 0) throw std::invalid_argument("depth_errors: no jointly valid pixels");
    return {sum_rel / static_cast<double>(n),
            static_cast<double>(n_delta) / static_cast<double>(n)};
}

double chamfer_l1(const PointCloud& a, const PointCloud& b) {
    check_cloud(a, "chamfer_l1");
    check_cloud(b, "chamfer_l1");
    const KdTree3 tree_a(a.points);
    const KdTree3 tree_b(b.points);
    double sum_ab = 0.0;
    for (const auto& p : a.points) sum_ab += std::sqrt(tree_b.nearest_dist2(p));
    double sum_ba = 0.0;
    for (const auto& p : b.points) sum_ba += std::sqrt(tree_a.nearest_dist2(p));
    return 0.5 * (sum_ab / static_cast<double>(a.size()) + sum_ba / static_cast<double>(b.size()));
}

double fscore(const PointCloud& a, const PointCloud& b, double tau) {
    check_cloud(a, "fscore");
    check_cloud(b, "fscore");
    if (!(tau > 0.0)) throw std::invalid_argument("fscore: tau must be positive");
    const double tau2 = tau * tau;
    const KdTree3 tree_a(a.points);
    const KdTree3 tree_b(b.points);
    std::size_t hit_a = 0;
    for (const auto& p : a.points)
        if (tree_b.nearest_dist2(p) <= tau2) ++hit_a;
    std::size_t hit_b = 0;
    for (const auto& p : b.points)
        if (tree_a.nearest_dist2(p) <= tau2) ++hit_b;
    const double precision = static_cast<double>(hit_a) / static_cast<double>(a.size());
    const double recall = static_cast<double>(hit_b) / static_cast<double>(b.size());
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

}  // namespace incalib
