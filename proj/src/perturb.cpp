// Copyright Contributors to the incalib Project
// SPDX-License-Identifier: Apache-2.0

#include "incalib/perturb.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace incalib {

namespace {

constexpr double kConeHalfAngleCos = 0.5;  // 60 degrees off the optical axis

Eigen::Vector3d random_unit_vector(std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::Vector3d v;
    do {
        v = {normal(rng), normal(rng), normal(rng)};
    } while (v.squaredNorm() < 1e-12);
    return v.normalized();
}

// Uniform direction inside the cone around +z with the given minimum cosine.
Eigen::Vector3d random_cone_ray(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double z = kConeHalfAngleCos + (1.0 - kConeHalfAngleCos) * unit(rng);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = 2.0 * std::numbers::pi * unit(rng);
    return {r * std::cos(phi), r * std::sin(phi), z};
}

}  // namespace

IncidentMap perturb_incident_map(const IncidentMap& m, double angle_sigma, double outlier_frac,
                                 std::uint64_t seed) {
    m.geometry().validate();
    if (!(angle_sigma >= 0.0))
        throw std::invalid_argument("perturb_incident_map: angle_sigma must be >= 0");
    if (outlier_frac < 0.0 || outlier_frac > 1.0)
        throw std::invalid_argument("perturb_incident_map: outlier_frac must lie in [0, 1]");

    if (angle_sigma == 0.0 && outlier_frac == 0.0) return m;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> angle_dist(0.0, angle_sigma > 0.0 ? angle_sigma : 1.0);

    IncidentMap out(m.geometry());
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x) {
            if (outlier_frac > 0.0 && unit(rng) < outlier_frac) {
                const Eigen::Vector3d dir = random_cone_ray(rng);
                out.set(x, y, static_cast<float>(dir.x() / dir.z()),
                        static_cast<float>(dir.y() / dir.z()));
                continue;
            }
            if (angle_sigma == 0.0) {
                out.set(x, y, m.vx(x, y), m.vy(x, y));
                continue;
            }
            const Eigen::Vector3d v = m.ray(x, y);
            Eigen::Vector3d rotated;
            // extreme draws can push a ray past the z = 0 horizon where the
            // canonical form is undefined; redraw the rotation when it does
            do {
                const double angle = angle_dist(rng);
                const Eigen::Vector3d axis = random_unit_vector(rng);
                rotated = Eigen::AngleAxisd(angle, axis) * v;
            } while (!(rotated.z() > 1e-9));
            out.set(x, y, static_cast<float>(rotated.x() / rotated.z()),
                    static_cast<float>(rotated.y() / rotated.z()));
        }
    return out;
}

}  // namespace incalib
