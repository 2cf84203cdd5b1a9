// Copyright Contributors to the incalib Project
// SPDX-License-Identifier: Apache-2.0

#include "incalib/solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <thread>

#include "incalib/errors.hpp"
#include "incalib/rng.hpp"

namespace incalib {

namespace {

constexpr int kMaxSampleAttempts = 32;
constexpr std::int64_t kMaxScorePixels = 65536;

// Splits [0, n) into contiguous chunks, one worker thread per chunk. Workers
// must only write to disjoint output slots; merging stays single-threaded so
// results do not depend on scheduling.
template <class Fn>
void run_chunked(std::int64_t n, Fn&& fn) {
    unsigned hw = std::thread::hardware_concurrency();
    unsigned nt = std::min<unsigned>(hw ? hw : 1, 8);
    if (n < 2 || nt <= 1) {
        fn(std::int64_t{0}, n);
        return;
    }
    nt = static_cast<unsigned>(std::min<std::int64_t>(nt, n));
    const std::int64_t chunk = (n + nt - 1) / nt;
    std::vector<std::thread> workers;
    workers.reserve(nt);
    for (unsigned t = 0; t < nt; ++t) {
        const std::int64_t begin = t * chunk;
        const std::int64_t end = std::min<std::int64_t>(n, begin + chunk);
        if (begin >= end) break;
        workers.emplace_back([&fn, begin, end] { fn(begin, end); });
    }
    for (auto& w : workers) w.join();
}

// Structure-of-arrays view of the pixels a candidate is scored against.
// Observed rays are unit-normalized once so the inlier test needs no
// square root per pixel.
struct ScoreSet {
    std::vector<double> xs, ys;
    std::vector<double> ox, oy, oz;

    std::size_t size() const noexcept { return xs.size(); }
};

int score_stride(ImageGeometry g) {
    const std::int64_t n = g.pixel_count();
    if (n <= kMaxScorePixels) return 1;
    int s = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n) / kMaxScorePixels)));
    auto count = [&](int stride) {
        return static_cast<std::int64_t>((g.width + stride - 1) / stride) *
               ((g.height + stride - 1) / stride);
    };
    while (count(s) > kMaxScorePixels) ++s;
    return s;
}

ScoreSet build_score_set(const IncidentMap& m) {
    const ImageGeometry g = m.geometry();
    const int stride = score_stride(g);
    ScoreSet s;
    const std::size_t reserve =
        static_cast<std::size_t>((g.width + stride - 1) / stride) *
        ((g.height + stride - 1) / stride);
    s.xs.reserve(reserve);
    s.ys.reserve(reserve);
    s.ox.reserve(reserve);
    s.oy.reserve(reserve);
    s.oz.reserve(reserve);
    for (int y = 0; y < g.height; y += stride)
        for (int x = 0; x < g.width; x += stride) {
            const double vx = m.vx(x, y);
            const double vy = m.vy(x, y);
            if (!std::isfinite(vx) || !std::isfinite(vy))
                throw std::invalid_argument("ransac_calibrate: map contains non-finite values");
            const double inv_norm = 1.0 / std::sqrt(vx * vx + vy * vy + 1.0);
            s.xs.push_back(x);
            s.ys.push_back(y);
            s.ox.push_back(vx * inv_norm);
            s.oy.push_back(vy * inv_norm);
            s.oz.push_back(inv_norm);
        }
    return s;
}

// Counts pixels whose observed ray lies within the angular threshold of the
// candidate's resynthesized ray. Equivalent to angular_residual < acos(c),
// rewritten as dot > 0 && dot^2 > c^2 |model|^2 to stay free of sqrt/acos.
std::int64_t count_inliers(const ScoreSet& s, const Intrinsics& k, double cos2_thresh) {
    const double ifx = 1.0 / k.fx;
    const double ify = 1.0 / k.fy;
    const double bx = k.bx;
    const double by = k.by;
    const std::size_t n = s.size();
    std::int64_t count = 0;
    const double* xs = s.xs.data();
    const double* ys = s.ys.data();
    const double* ox = s.ox.data();
    const double* oy = s.oy.data();
    const double* oz = s.oz.data();
    for (std::size_t i = 0; i < n; ++i) {
        const double mx = (xs[i] - bx) * ifx;
        const double my = (ys[i] - by) * ify;
        const double n2 = mx * mx + my * my + 1.0;
        const double dot = ox[i] * mx + oy[i] * my + oz[i];
        count += (dot > 0.0) & (dot * dot > cos2_thresh * n2);
    }
    return count;
}

std::optional<Intrinsics> sample_candidate(const IncidentMap& m, CounterRng& rng) {
    const std::uint64_t w = static_cast<std::uint64_t>(m.width());
    const std::uint64_t n = static_cast<std::uint64_t>(m.geometry().pixel_count());
    for (int attempt = 0; attempt < kMaxSampleAttempts; ++attempt) {
        const std::uint64_t i1 = rng.next_below(n);
        const std::uint64_t i2 = rng.next_below(n);
        const int x1 = static_cast<int>(i1 % w), y1 = static_cast<int>(i1 / w);
        const int x2 = static_cast<int>(i2 % w), y2 = static_cast<int>(i2 / w);
        Intrinsics k;
        const MinimalSolveStatus st =
            try_minimal_solve(PixelCoord{static_cast<double>(x1), static_cast<double>(y1)},
                              m.ray(x1, y1),
                              PixelCoord{static_cast<double>(x2), static_cast<double>(y2)},
                              m.ray(x2, y2), k);
        if (st == MinimalSolveStatus::ok) return k;
        if (st == MinimalSolveStatus::invalid_solution) return std::nullopt;
        // degenerate: resample within the trial
    }
    return std::nullopt;
}

std::vector<std::uint8_t> inlier_mask_full(const IncidentMap& m, const Intrinsics& k,
                                           double cos2_thresh) {
    const ImageGeometry g = m.geometry();
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(g.pixel_count()), 0);
    const double ifx = 1.0 / k.fx;
    const double ify = 1.0 / k.fy;
    run_chunked(g.height, [&](std::int64_t y0, std::int64_t y1) {
        for (std::int64_t y = y0; y < y1; ++y) {
            const double my = (static_cast<double>(y) - k.by) * ify;
            for (int x = 0; x < g.width; ++x) {
                const double vx = m.vx(x, static_cast<int>(y));
                const double vy = m.vy(x, static_cast<int>(y));
                const double inv_norm2 = 1.0 / (vx * vx + vy * vy + 1.0);
                const double mx = (x - k.bx) * ifx;
                const double n2 = mx * mx + my * my + 1.0;
                const double dot = vx * mx + vy * my + 1.0;
                // same test as count_inliers with the observed norm folded in
                mask[static_cast<std::size_t>(y) * g.width + x] =
                    (dot > 0.0) & (dot * dot * inv_norm2 > cos2_thresh * n2);
            }
        }
    });
    return mask;
}

double median_inplace(std::vector<double>& v) {
    const std::size_t n = v.size();
    const std::size_t mid = n / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double m = v[mid];
    if (n % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + mid));
    return m;
}

double clamp_cos(double c) { return std::clamp(c, -1.0, 1.0); }

// Median of acos(c_i) without taking acos everywhere: angles sorted
// ascending correspond to cosines sorted descending.
double median_angle_from_cos(std::vector<double>& c) {
    const std::size_t n = c.size();
    const std::size_t mid = n / 2;
    std::nth_element(c.begin(), c.begin() + mid, c.end(), std::greater<>());
    const double upper = std::acos(clamp_cos(c[mid]));
    if (n % 2 == 1) return upper;
    const double lower = std::acos(clamp_cos(*std::min_element(c.begin(), c.begin() + mid)));
    return 0.5 * (lower + upper);
}

// Residual statistics of a model against the score set, in radians.
std::pair<double, double> score_statistics(const ScoreSet& s, const Intrinsics& k,
                                           double threshold) {
    std::vector<double> residuals(s.size());
    const double ifx = 1.0 / k.fx;
    const double ify = 1.0 / k.fy;
    std::int64_t inliers = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double mx = (s.xs[i] - k.bx) * ifx;
        const double my = (s.ys[i] - k.by) * ify;
        const double inv_norm = 1.0 / std::sqrt(mx * mx + my * my + 1.0);
        const double c = (s.ox[i] * mx + s.oy[i] * my + s.oz[i]) * inv_norm;
        residuals[i] = std::acos(clamp_cos(c));
        inliers += residuals[i] < threshold;
    }
    const double ratio = static_cast<double>(inliers) / static_cast<double>(s.size());
    return {ratio, median_inplace(residuals)};
}

}  // namespace

void SolverConfig::validate() const {
    if (iterations < 1) throw std::invalid_argument("SolverConfig: iterations must be >= 1");
    if (!(inlier_threshold > 0.0) || !(inlier_threshold < std::numbers::pi / 2))
        throw std::invalid_argument("SolverConfig: inlier_threshold must lie in (0, pi/2)");
    if (!(min_inlier_ratio > 0.0) || min_inlier_ratio > 1.0)
        throw std::invalid_argument("SolverConfig: min_inlier_ratio must lie in (0, 1]");
}

void FocalGrid::validate() const {
    if (candidates.empty()) throw std::invalid_argument("FocalGrid: no candidates");
    double prev = 0.0;
    for (double f : candidates) {
        if (!(f > prev) || !std::isfinite(f))
            throw std::invalid_argument("FocalGrid: candidates must be positive and strictly increasing");
        prev = f;
    }
}

FocalGrid FocalGrid::log_spaced(double f_min, double f_max, int count) {
    if (!(f_min > 0.0) || !(f_max > f_min))
        throw std::invalid_argument("FocalGrid: need 0 < f_min < f_max");
    if (count < 2) throw std::invalid_argument("FocalGrid: need at least 2 candidates");
    FocalGrid grid;
    grid.candidates.resize(count);
    const double log_ratio = std::log(f_max / f_min);
    for (int i = 0; i < count; ++i)
        grid.candidates[i] = f_min * std::exp(log_ratio * i / (count - 1));
    return grid;
}

FocalGrid FocalGrid::default_for_width(int width) {
    if (width < 2) throw std::invalid_argument("FocalGrid: width must be >= 2");
    constexpr double kDeg = std::numbers::pi / 180.0;
    const double half_w = width / 2.0;
    const double f_min = half_w / std::tan(140.0 / 2.0 * kDeg);
    const double f_max = half_w / std::tan(15.0 / 2.0 * kDeg);
    return log_spaced(f_min, f_max, 512);
}

MinimalSolveStatus try_minimal_solve(const PixelCoord& p1, const Eigen::Vector3d& v1,
                                     const PixelCoord& p2, const Eigen::Vector3d& v2,
                                     Intrinsics& out) noexcept {
    if (p1.x == p2.x || p1.y == p2.y || v1.x() == v2.x() || v1.y() == v2.y())
        return MinimalSolveStatus::degenerate_sample;
    const double fx = (p1.x - p2.x) / (v1.x() - v2.x());
    const double fy = (p1.y - p2.y) / (v1.y() - v2.y());
    if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy))
        return MinimalSolveStatus::invalid_solution;
    const double bx = 0.5 * ((p1.x - v1.x() * fx) + (p2.x - v2.x() * fx));
    const double by = 0.5 * ((p1.y - v1.y() * fy) + (p2.y - v2.y() * fy));
    if (!std::isfinite(bx) || !std::isfinite(by)) return MinimalSolveStatus::invalid_solution;
    out = Intrinsics{fx, fy, bx, by};
    return MinimalSolveStatus::ok;
}

Intrinsics minimal_solve(const PixelCoord& p1, const Eigen::Vector3d& v1,
                         const PixelCoord& p2, const Eigen::Vector3d& v2) {
    Intrinsics k;
    switch (try_minimal_solve(p1, v1, p2, v2, k)) {
        case MinimalSolveStatus::ok:
            return k;
        case MinimalSolveStatus::degenerate_sample:
            throw DegenerateSample("minimal_solve: coincident pixel coordinates or ray components");
        case MinimalSolveStatus::invalid_solution:
        default:
            throw InvalidSolution("minimal_solve: non-positive or non-finite focal length");
    }
}

double angular_residual(const Eigen::Vector3d& v_obs, const Eigen::Vector3d& v_model) {
    if (!v_obs.allFinite() || !v_model.allFinite())
        throw std::invalid_argument("angular_residual: non-finite ray");
    const double n1 = v_obs.norm();
    const double n2 = v_model.norm();
    if (n1 == 0.0 || n2 == 0.0)
        throw std::invalid_argument("angular_residual: zero-length ray");
    return std::acos(clamp_cos(v_obs.dot(v_model) / (n1 * n2)));
}

CalibrationEstimate ransac_calibrate(const IncidentMap& m, const SolverConfig& cfg) {
    cfg.validate();
    m.geometry().validate();

    const ScoreSet score = build_score_set(m);
    const double cos_thresh = std::cos(cfg.inlier_threshold);
    const double cos2_thresh = cos_thresh * cos_thresh;

    // Per-trial results, written to disjoint slots so parallel and serial
    // runs agree bit-for-bit.
    const int trials = cfg.iterations;
    std::vector<std::int64_t> counts(trials, -1);
    std::vector<Intrinsics> candidates(trials);
    run_chunked(trials, [&](std::int64_t t0, std::int64_t t1) {
        for (std::int64_t t = t0; t < t1; ++t) {
            CounterRng rng(cfg.seed, static_cast<std::uint64_t>(t));
            const auto k = sample_candidate(m, rng);
            if (!k) continue;
            candidates[t] = *k;
            counts[t] = count_inliers(score, *k, cos2_thresh);
        }
    });

    std::int64_t best_count = -1;
    int best_trial = -1;
    for (int t = 0; t < trials; ++t)
        if (counts[t] > best_count) {
            best_count = counts[t];
            best_trial = t;
        }
    if (best_trial < 0)
        throw NoConsensus("ransac_calibrate: every trial sample was degenerate");
    const double best_ratio = static_cast<double>(best_count) / static_cast<double>(score.size());
    if (best_ratio < cfg.min_inlier_ratio)
        throw NoConsensus("ransac_calibrate: best inlier ratio " + std::to_string(best_ratio) +
                          " below minimum " + std::to_string(cfg.min_inlier_ratio));

    Intrinsics k = candidates[best_trial];
    const auto mask = inlier_mask_full(m, k, cos2_thresh);
    try {
        k = refine_least_squares(m, k, mask);
    } catch (const Error&) {
        // pathological inlier set; keep the unrefined consensus candidate
    }

    const auto [ratio, median] = score_statistics(score, k, cfg.inlier_threshold);
    return CalibrationEstimate{k, ratio, median};
}

CalibrationEstimate enumerate_focal(const IncidentMap& m, ImageGeometry g, const FocalGrid& grid) {
    grid.validate();
    g.validate();
    if (g != m.geometry())
        throw std::invalid_argument("enumerate_focal: geometry does not match the map");

    const std::int64_t n = g.pixel_count();
    std::vector<double> xs(n), ys(n), ox(n), oy(n), oz(n);
    std::size_t i = 0;
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x, ++i) {
            const double vx = m.vx(x, y);
            const double vy = m.vy(x, y);
            if (!std::isfinite(vx) || !std::isfinite(vy))
                throw std::invalid_argument("enumerate_focal: map contains non-finite values");
            const double inv_norm = 1.0 / std::sqrt(vx * vx + vy * vy + 1.0);
            xs[i] = x;
            ys[i] = y;
            ox[i] = vx * inv_norm;
            oy[i] = vy * inv_norm;
            oz[i] = inv_norm;
        }

    const double bx = g.width / 2.0;
    const double by = g.height / 2.0;
    const int n_cand = static_cast<int>(grid.candidates.size());
    std::vector<double> medians(n_cand);
    run_chunked(n_cand, [&](std::int64_t c0, std::int64_t c1) {
        std::vector<double> cosines(static_cast<std::size_t>(n));
        for (std::int64_t c = c0; c < c1; ++c) {
            const double inv_f = 1.0 / grid.candidates[c];
            for (std::int64_t j = 0; j < n; ++j) {
                const double mx = (xs[j] - bx) * inv_f;
                const double my = (ys[j] - by) * inv_f;
                const double dot = ox[j] * mx + oy[j] * my + oz[j];
                cosines[j] = dot / std::sqrt(mx * mx + my * my + 1.0);
            }
            medians[c] = median_angle_from_cos(cosines);
        }
    });

    int best = 0;
    for (int c = 1; c < n_cand; ++c)
        if (medians[c] < medians[best]) best = c;  // ties keep the smaller focal

    const double f = grid.candidates[best];
    const Intrinsics k{f, f, bx, by};

    // Inlier ratio at the default threshold, over all pixels.
    const SolverConfig defaults{};
    const double cos_thresh = std::cos(defaults.inlier_threshold);
    const double cos2_thresh = cos_thresh * cos_thresh;
    const double inv_f = 1.0 / f;
    std::int64_t inliers = 0;
    for (std::int64_t j = 0; j < n; ++j) {
        const double mx = (xs[j] - bx) * inv_f;
        const double my = (ys[j] - by) * inv_f;
        const double n2 = mx * mx + my * my + 1.0;
        const double dot = ox[j] * mx + oy[j] * my + oz[j];
        inliers += (dot > 0.0) & (dot * dot > cos2_thresh * n2);
    }
    return CalibrationEstimate{k, static_cast<double>(inliers) / static_cast<double>(n),
                               medians[best]};
}

Intrinsics refine_least_squares(const IncidentMap& m, const Intrinsics& k0,
                                const std::vector<std::uint8_t>& inlier_mask) {
    k0.validate();
    const ImageGeometry g = m.geometry();
    if (inlier_mask.size() != static_cast<std::size_t>(g.pixel_count()))
        throw std::invalid_argument("refine_least_squares: mask size does not match the map");

    std::int64_t n = 0;
    double sum_x = 0.0, sum_y = 0.0, sum_vx = 0.0, sum_vy = 0.0;
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x) {
            if (!inlier_mask[static_cast<std::size_t>(y) * g.width + x]) continue;
            sum_x += x;
            sum_y += y;
            sum_vx += m.vx(x, y);
            sum_vy += m.vy(x, y);
            ++n;
        }
    if (n < 2) throw RankDeficient("refine_least_squares: fewer than 2 inliers");
    const double mean_x = sum_x / static_cast<double>(n);
    const double mean_y = sum_y / static_cast<double>(n);
    const double mean_vx = sum_vx / static_cast<double>(n);
    const double mean_vy = sum_vy / static_cast<double>(n);

    double sxx = 0.0, sxy = 0.0, syy_ = 0.0, syx = 0.0;
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x) {
            if (!inlier_mask[static_cast<std::size_t>(y) * g.width + x]) continue;
            const double dvx = m.vx(x, y) - mean_vx;
            const double dvy = m.vy(x, y) - mean_vy;
            sxx += dvx * dvx;
            sxy += dvx * (x - mean_x);
            syy_ += dvy * dvy;
            syx += dvy * (y - mean_y);
        }
    if (sxx == 0.0 || syy_ == 0.0)
        throw RankDeficient("refine_least_squares: inliers do not span both axes");

    const double fx = sxy / sxx;
    const double fy = syx / syy_;
    if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy))
        throw InvalidSolution("refine_least_squares: non-positive focal length");
    return Intrinsics{fx, fy, mean_x - fx * mean_vx, mean_y - fy * mean_vy};
}

CalibrationEstimate calibrate(const IncidentMap& m, const SolverConfig& cfg) {
    if (cfg.assume_centered)
        return enumerate_focal(m, m.geometry(), FocalGrid::default_for_width(m.width()));
    return ransac_calibrate(m, cfg);
}

}  // namespace incalib
