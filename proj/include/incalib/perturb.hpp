// Copyright Contributors to the incalib Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "incalib/geometry.hpp"

namespace incalib {

/// Synthetic degradation for robustness studies. Each ray is rotated by a
/// random angle ~ Gaussian(0, angle_sigma) about a random axis; a Bernoulli
/// fraction `outlier_frac` of pixels is instead replaced by a random ray
/// within 60 degrees of the optical axis. Deterministic per seed;
/// angle_sigma == 0 with outlier_frac == 0 returns the input bit-exactly.
IncidentMap perturb_incident_map(const IncidentMap& m, double angle_sigma, double outlier_frac,
                                 std::uint64_t seed);

}  // namespace incalib
