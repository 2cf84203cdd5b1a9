// Copyright Contributors to the incalib Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "incalib/geometry.hpp"
#include "incalib/metrics.hpp"

namespace incalib {

/// DDPM cumulative noise-retention schedule: alpha_bar[t-1] holds
/// the product of (1 - beta_s) for s <= t; alpha_bar_at(0) is defined as 1.
class NoiseSchedule {
  public:
    NoiseSchedule() = default;
    explicit NoiseSchedule(std::vector<double> alpha_bar);

    int steps() const noexcept { return static_cast<int>(alpha_bar_.size()); }
    double alpha_bar_at(int t) const;

    std::span<const double> alpha_bar() const noexcept { return alpha_bar_; }

  private:
    std::vector<double> alpha_bar_;
};

/// Multi-channel real-valued field, standing in for the latent tensors of
/// the generation pipeline. Channel-interleaved row-major doubles.
class LatentField {
  public:
    LatentField() = default;
    LatentField(ImageGeometry g, int channels, double fill = 0.0);

    const ImageGeometry& geometry() const noexcept { return geom_; }
    int width() const noexcept { return geom_.width; }
    int height() const noexcept { return geom_.height; }
    int channels() const noexcept { return channels_; }

    double at(int x, int y, int c) const noexcept { return data_[index(x, y, c)]; }
    void set(int x, int y, int c, double v) noexcept { data_[index(x, y, c)] = v; }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }
    std::size_t element_count() const noexcept { return data_.size(); }

    bool same_shape(const LatentField& o) const noexcept {
        return geom_ == o.geom_ && channels_ == o.channels_;
    }

    friend bool operator==(const LatentField&, const LatentField&) = default;

  private:
    std::size_t index(int x, int y, int c) const noexcept {
        return (static_cast<std::size_t>(y) * geom_.width + x) * channels_ + c;
    }

    ImageGeometry geom_{};
    int channels_ = 0;
    std::vector<double> data_;
};

/// Pluggable denoiser: maps (z_t, t, condition) to the predicted noise,
/// same shape as z_t. Must be deterministic for fixed inputs.
using Denoiser = std::function<LatentField(const LatentField& z_t, int t,
                                           const LatentField& condition)>;

struct EnsembleResult {
    LatentField mean;    // per-pixel aggregate (median when requested)
    LatentField stddev;  // per-pixel sample standard deviation
    int size = 0;
};

enum class EnsembleReduce { mean, median };

/// Linear beta ramp between the endpoints, accumulated into alpha_bar.
NoiseSchedule build_schedule(int steps, double beta_start, double beta_end);

/// Default configuration: 1000 steps, beta from 0.00085 to 0.012.
NoiseSchedule default_schedule();

/// z_t = sqrt(alpha_bar_t) z0 + sqrt(1 - alpha_bar_t) eps.
LatentField forward_diffuse(const LatentField& z0, int t, const LatentField& eps,
                            const NoiseSchedule& sched);

/// Sum of white-noise pyramids: level l is drawn at geometry g / 2^l
/// (clamped at 1x1), bilinearly upsampled and weighted by decay^l; the sum
/// is rescaled to unit sample variance.
LatentField sample_multires_noise(ImageGeometry g, int channels, int levels, double decay,
                                  std::mt19937_64& rng);

/// Deterministic reverse update from t to t_next < t:
/// z0_hat = (z_t - sqrt(1-a_t) eps_hat) / sqrt(a_t), then re-noised at t_next.
/// t_next = 0 returns z0_hat itself.
LatentField reverse_to(const LatentField& z_t, int t, int t_next, const LatentField& eps_hat,
                       const NoiseSchedule& sched);

/// Single deterministic reverse step t -> t-1.
LatentField reverse_step(const LatentField& z_t, int t, const LatentField& eps_hat,
                         const NoiseSchedule& sched);

/// Test double: returns the exact noise consistent with the known clean
/// field, eps = (z_t - sqrt(a_t) z0) / sqrt(1 - a_t). Throws when queried at
/// a step with alpha_bar == 1 (zero noise scale).
Denoiser oracle_denoiser(LatentField z0, NoiseSchedule sched);

/// Eq.-4-style loss: mean squared difference over the first
/// `first_block_channels` channels plus mean squared difference over the
/// remaining channels. Pass channels() to treat the field as one block.
double noise_loss(const LatentField& eps_pred, const LatentField& eps_true,
                  int first_block_channels = 2);

/// Full generation pass: start from multi-resolution noise of the requested
/// channel count at the condition's geometry, then run `steps` reverse
/// updates along an evenly strided schedule from T down to 0.
LatentField generate(const Denoiser& den, const LatentField& condition, int target_channels,
                     const NoiseSchedule& sched, int steps, std::uint64_t seed);

/// K independent generations (member seeds derived from (seed, index)),
/// aggregated per pixel. stddev uses the K-1 denominator and is 0 for K = 1.
EnsembleResult ensemble_generate(const Denoiser& den, const LatentField& condition,
                                 int target_channels, int ensemble_size,
                                 const NoiseSchedule& sched, int steps, std::uint64_t seed,
                                 EnsembleReduce reduce = EnsembleReduce::mean);

/// Replicates the single depth channel into three channels.
LatentField depth_tri_encode(const DepthMap& d);

/// Collapses a 3-channel field back to one depth channel by averaging.
DepthMap depth_tri_decode(const LatentField& f);

/// Raster-space adapters between incident maps and 2-channel fields.
LatentField latent_from_incident_map(const IncidentMap& m);
IncidentMap incident_map_from_latent(const LatentField& f);

}  // namespace incalib
