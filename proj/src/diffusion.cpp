// Copyright Contributors to the incalib Project
// SPDX-License-Identifier: Apache-2.0

#include "incalib/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "incalib/errors.hpp"
#include "incalib/rng.hpp"

namespace incalib {

namespace {

void check_same_shape(const LatentField& a, const LatentField& b, const char* what) {
    if (!a.same_shape(b)) throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

void check_step(int t, const NoiseSchedule& sched, const char* what) {
    if (t < 1 || t > sched.steps())
        throw std::invalid_argument(std::string(what) + ": step out of range");
}

}  // namespace

NoiseSchedule::NoiseSchedule(std::vector<double> alpha_bar) : alpha_bar_(std::move(alpha_bar)) {
    if (alpha_bar_.empty()) throw std::invalid_argument("NoiseSchedule: empty schedule");
    double prev = 1.0 + 1e-15;  // allow alpha_bar_1 == 1 for beta = 0
    for (double a : alpha_bar_) {
        if (!(a > 0.0) || a > 1.0 || !(a < prev))
            throw std::invalid_argument("NoiseSchedule: alpha_bar must be strictly decreasing in (0, 1]");
        prev = a;
    }
}

double NoiseSchedule::alpha_bar_at(int t) const {
    if (t == 0) return 1.0;
    if (t < 1 || t > steps()) throw std::invalid_argument("NoiseSchedule: step out of range");
    return alpha_bar_[static_cast<std::size_t>(t - 1)];
}

LatentField::LatentField(ImageGeometry g, int channels, double fill)
    : geom_(g), channels_(channels) {
    g.validate();
    if (channels < 1) throw std::invalid_argument("LatentField: channels must be >= 1");
    data_.assign(static_cast<std::size_t>(g.pixel_count()) * channels, fill);
}

NoiseSchedule build_schedule(int steps, double beta_start, double beta_end) {
    if (steps < 1) throw std::invalid_argument("build_schedule: steps must be >= 1");
    if (!(beta_start >= 0.0) || !(beta_end >= beta_start) || !(beta_end < 1.0))
        throw std::invalid_argument("build_schedule: need 0 <= beta_start <= beta_end < 1");
    std::vector<double> alpha_bar(steps);
    double acc = 1.0;
    for (int t = 1; t <= steps; ++t) {
        const double beta =
            steps == 1 ? beta_start
                       : beta_start + (beta_end - beta_start) * (t - 1) / (steps - 1);
        acc *= 1.0 - beta;
        alpha_bar[t - 1] = acc;
    }
    // beta = 0 everywhere keeps alpha_bar at exactly 1; the NoiseSchedule
    // invariant tolerates that only for a single step.
    if (beta_start == 0.0 && beta_end == 0.0 && steps > 1)
        throw std::invalid_argument("build_schedule: all-zero beta is only valid for a single step");
    return NoiseSchedule(std::move(alpha_bar));
}

NoiseSchedule default_schedule() { return build_schedule(1000, 0.00085, 0.012); }

LatentField forward_diffuse(const LatentField& z0, int t, const LatentField& eps,
                            const NoiseSchedule& sched) {
    check_same_shape(z0, eps, "forward_diffuse");
    check_step(t, sched, "forward_diffuse");
    const double a = sched.alpha_bar_at(t);
    const double c0 = std::sqrt(a);
    const double c1 = std::sqrt(1.0 - a);
    LatentField out = z0;
    auto dst = out.data();
    auto noise = eps.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = c0 * dst[i] + c1 * noise[i];
    return out;
}

LatentField sample_multires_noise(ImageGeometry g, int channels, int levels, double decay,
                                  std::mt19937_64& rng) {
    g.validate();
    if (channels < 1) throw std::invalid_argument("sample_multires_noise: channels must be >= 1");
    if (levels < 1) throw std::invalid_argument("sample_multires_noise: levels must be >= 1");
    if (!(decay > 0.0) || decay > 1.0)
        throw std::invalid_argument("sample_multires_noise: decay must lie in (0, 1]");

    std::normal_distribution<double> normal(0.0, 1.0);
    LatentField out(g, channels, 0.0);
    double weight = 1.0;
    for (int level = 0; level < levels; ++level, weight *= decay) {
        const int cw = std::max(1, g.width >> level);
        const int ch = std::max(1, g.height >> level);
        LatentField coarse(ImageGeometry{std::max(2, cw), std::max(2, ch)}, channels);
        // draw on the true cw x ch grid; the container is padded to the 2x2
        // minimum but only [0, cw) x [0, ch) is ever sampled
        for (int y = 0; y < ch; ++y)
            for (int x = 0; x < cw; ++x)
                for (int c = 0; c < channels; ++c) coarse.set(x, y, c, normal(rng));

        const double sx = static_cast<double>(cw) / g.width;
        const double sy = static_cast<double>(ch) / g.height;
        for (int y = 0; y < g.height; ++y) {
            const double v = (y + 0.5) * sy - 0.5;
            const int y0 = std::clamp(static_cast<int>(std::floor(v)), 0, ch - 1);
            const int y1 = std::min(y0 + 1, ch - 1);
            const double fy = std::clamp(v - y0, 0.0, 1.0);
            for (int x = 0; x < g.width; ++x) {
                const double u = (x + 0.5) * sx - 0.5;
                const int x0 = std::clamp(static_cast<int>(std::floor(u)), 0, cw - 1);
                const int x1 = std::min(x0 + 1, cw - 1);
                const double fx = std::clamp(u - x0, 0.0, 1.0);
                for (int c = 0; c < channels; ++c) {
                    const double top = (1.0 - fx) * coarse.at(x0, y0, c) + fx * coarse.at(x1, y0, c);
                    const double bot = (1.0 - fx) * coarse.at(x0, y1, c) + fx * coarse.at(x1, y1, c);
                    out.set(x, y, c, out.at(x, y, c) + weight * ((1.0 - fy) * top + fy * bot));
                }
            }
        }
    }

    // rescale to unit sample variance
    auto data = out.data();
    double sum = 0.0, sum2 = 0.0;
    for (double v : data) {
        sum += v;
        sum2 += v * v;
    }
    const double n = static_cast<double>(data.size());
    const double var = sum2 / n - (sum / n) * (sum / n);
    if (var > 0.0) {
        const double inv_std = 1.0 / std::sqrt(var);
        for (double& v : data) v *= inv_std;
    }
    return out;
}

LatentField reverse_to(const LatentField& z_t, int t, int t_next, const LatentField& eps_hat,
                       const NoiseSchedule& sched) {
    check_same_shape(z_t, eps_hat, "reverse_to");
    check_step(t, sched, "reverse_to");
    if (t_next < 0 || t_next >= t)
        throw std::invalid_argument("reverse_to: need 0 <= t_next < t");
    const double a_t = sched.alpha_bar_at(t);
    if (a_t == 0.0) throw std::invalid_argument("reverse_to: alpha_bar is zero at t");
    const double a_n = sched.alpha_bar_at(t_next);
    const double inv_sqrt_at = 1.0 / std::sqrt(a_t);
    const double noise_t = std::sqrt(1.0 - a_t);
    const double c0 = std::sqrt(a_n);
    const double c1 = std::sqrt(1.0 - a_n);
    LatentField out = z_t;
    auto dst = out.data();
    auto eps = eps_hat.data();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        const double z0_hat = (dst[i] - noise_t * eps[i]) * inv_sqrt_at;
        dst[i] = c0 * z0_hat + c1 * eps[i];
    }
    return out;
}

LatentField reverse_step(const LatentField& z_t, int t, const LatentField& eps_hat,
                         const NoiseSchedule& sched) {
    return reverse_to(z_t, t, t - 1, eps_hat, sched);
}

Denoiser oracle_denoiser(LatentField z0, NoiseSchedule sched) {
    return [z0 = std::move(z0), sched = std::move(sched)](const LatentField& z_t, int t,
                                                          const LatentField&) {
        check_same_shape(z_t, z0, "oracle_denoiser");
        check_step(t, sched, "oracle_denoiser");
        const double a = sched.alpha_bar_at(t);
        if (a == 1.0)
            throw std::invalid_argument("oracle_denoiser: zero noise scale at alpha_bar == 1");
        const double c0 = std::sqrt(a);
        const double inv_c1 = 1.0 / std::sqrt(1.0 - a);
        LatentField eps = z_t;
        auto dst = eps.data();
        auto clean = z0.data();
        for (std::size_t i = 0; i < dst.size(); ++i)
            dst[i] = (dst[i] - c0 * clean[i]) * inv_c1;
        return eps;
    };
}

double noise_loss(const LatentField& eps_pred, const LatentField& eps_true,
                  int first_block_channels) {
    check_same_shape(eps_pred, eps_true, "noise_loss");
    if (first_block_channels < 0 || first_block_channels > eps_pred.channels())
        throw std::invalid_argument("noise_loss: block split outside the channel range");
    const int channels = eps_pred.channels();
    double sum_a = 0.0, sum_b = 0.0;
    std::size_t n_a = 0, n_b = 0;
    auto pa = eps_pred.data();
    auto pb = eps_true.data();
    for (std::size_t i = 0; i < pa.size(); ++i) {
        const double d = pa[i] - pb[i];
        if (static_cast<int>(i % channels) < first_block_channels) {
            sum_a += d * d;
            ++n_a;
        } else {
            sum_b += d * d;
            ++n_b;
        }
    }
    double loss = 0.0;
    if (n_a > 0) loss += sum_a / static_cast<double>(n_a);
    if (n_b > 0) loss += sum_b / static_cast<double>(n_b);
    return loss;
}

LatentField generate(const Denoiser& den, const LatentField& condition, int target_channels,
                     const NoiseSchedule& sched, int steps, std::uint64_t seed) {
    if (steps < 1 || steps > sched.steps())
        throw std::invalid_argument("generate: steps must lie in [1, T]");
    const int T = sched.steps();

    std::mt19937_64 rng(seed);
    LatentField z = sample_multires_noise(condition.geometry(), target_channels, 4, 0.5, rng);

    // evenly strided timesteps T = t_0 > t_1 > ... > t_{steps-1} >= 1, then 0
    std::vector<int> timesteps(steps);
    for (int i = 0; i < steps; ++i)
        timesteps[i] = std::max(1, static_cast<int>(std::llround(
                                       static_cast<double>(T) * (steps - i) / steps)));
    for (int i = 0; i < steps; ++i) {
        const int t = timesteps[i];
        const int t_next = (i + 1 < steps) ? timesteps[i + 1] : 0;
        const LatentField eps_hat = den(z, t, condition);
        z = reverse_to(z, t, t_next, eps_hat, sched);
    }
    return z;
}

EnsembleResult ensemble_generate(const Denoiser& den, const LatentField& condition,
                                 int target_channels, int ensemble_size,
                                 const NoiseSchedule& sched, int steps, std::uint64_t seed,
                                 EnsembleReduce reduce) {
    if (ensemble_size < 1)
        throw std::invalid_argument("ensemble_generate: ensemble size must be >= 1");

    std::vector<LatentField> members;
    members.reserve(ensemble_size);
    for (int k = 0; k < ensemble_size; ++k)
        members.push_back(generate(den, condition, target_channels, sched, steps,
                                   derive_seed(seed, static_cast<std::uint64_t>(k))));

    EnsembleResult result;
    result.size = ensemble_size;
    result.mean = LatentField(condition.geometry(), target_channels, 0.0);
    result.stddev = LatentField(condition.geometry(), target_channels, 0.0);
    const std::size_t n = result.mean.element_count();
    auto mean = result.mean.data();
    auto sd = result.stddev.data();

    if (reduce == EnsembleReduce::mean) {
        for (const auto& m : members) {
            auto src = m.data();
            for (std::size_t i = 0; i < n; ++i) mean[i] += src[i];
        }
        for (std::size_t i = 0; i < n; ++i) mean[i] /= ensemble_size;
    } else {
        std::vector<double> vals(ensemble_size);
        for (std::size_t i = 0; i < n; ++i) {
            for (int k = 0; k < ensemble_size; ++k) vals[k] = members[k].data()[i];
            std::nth_element(vals.begin(), vals.begin() + ensemble_size / 2, vals.end());
            double med = vals[ensemble_size / 2];
            if (ensemble_size % 2 == 0)
                med = 0.5 * (med + *std::max_element(vals.begin(), vals.begin() + ensemble_size / 2));
            mean[i] = med;
        }
    }

    if (ensemble_size > 1) {
        // deviations are taken against the arithmetic mean in both modes
        std::vector<double> avg(n, 0.0);
        for (const auto& m : members) {
            auto src = m.data();
            for (std::size_t i = 0; i < n; ++i) avg[i] += src[i];
        }
        for (std::size_t i = 0; i < n; ++i) avg[i] /= ensemble_size;
        for (const auto& m : members) {
            auto src = m.data();
            for (std::size_t i = 0; i < n; ++i) {
                const double d = src[i] - avg[i];
                sd[i] += d * d;
            }
        }
        for (std::size_t i = 0; i < n; ++i)
            sd[i] = std::sqrt(sd[i] / (ensemble_size - 1));
    }
    return result;
}

LatentField depth_tri_encode(const DepthMap& d) {
    d.geometry().validate();
    LatentField out(d.geometry(), 3);
    for (int y = 0; y < d.height(); ++y)
        for (int x = 0; x < d.width(); ++x) {
            const double v = d.at(x, y);
            out.set(x, y, 0, v);
            out.set(x, y, 1, v);
            out.set(x, y, 2, v);
        }
    return out;
}

DepthMap depth_tri_decode(const LatentField& f) {
    if (f.channels() != 3)
        throw std::invalid_argument("depth_tri_decode: expected a 3-channel field");
    DepthMap out(f.geometry());
    for (int y = 0; y < f.height(); ++y)
        for (int x = 0; x < f.width(); ++x)
            out.set(x, y, static_cast<float>(
                              (f.at(x, y, 0) + f.at(x, y, 1) + f.at(x, y, 2)) / 3.0));
    return out;
}

LatentField latent_from_incident_map(const IncidentMap& m) {
    LatentField out(m.geometry(), 2);
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x) {
            out.set(x, y, 0, m.vx(x, y));
            out.set(x, y, 1, m.vy(x, y));
        }
    return out;
}

IncidentMap incident_map_from_latent(const LatentField& f) {
    if (f.channels() != 2)
        throw std::invalid_argument("incident_map_from_latent: expected a 2-channel field");
    IncidentMap out(f.geometry());
    for (int y = 0; y < f.height(); ++y)
        for (int x = 0; x < f.width(); ++x)
            out.set(x, y, static_cast<float>(f.at(x, y, 0)), static_cast<float>(f.at(x, y, 1)));
    return out;
}

}  // namespace incalib
