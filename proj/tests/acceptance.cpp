// Copyright Contributors to the incalib Project
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one checked criterion per section, one PASS/FAIL line
// per criterion on stdout, nonzero exit if anything fails. Tolerances are
// pinned here, in code.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "incalib/diffusion.hpp"
#include "incalib/errors.hpp"
#include "incalib/geometry.hpp"
#include "incalib/metrics.hpp"
#include "incalib/perturb.hpp"
#include "incalib/rasterio.hpp"
#include "incalib/recon.hpp"
#include "incalib/rng.hpp"
#include "incalib/solver.hpp"

using namespace incalib;

namespace {

struct CheckFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& what) {
    if (!ok) throw CheckFailure(what);
}

double rel_err(double a, double b) { return std::abs(a - b) / std::abs(b); }

double elapsed_s(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

ImageGeometry fixture_geometry(const Intrinsics& k) {
    return {static_cast<int>(std::lround(2.0 * k.bx)), static_cast<int>(std::lround(2.0 * k.by))};
}

// ---------------------------------------------------------------------------
// 1. Noiseless round trip over all fixtures and 100 random intrinsics.

void criterion_noiseless_round_trip(std::string& detail) {
    const auto start = std::chrono::steady_clock::now();
    auto check_round_trip = [](const Intrinsics& k, ImageGeometry g, std::uint64_t seed) {
        SolverConfig cfg;
        cfg.seed = seed;
        const auto est = ransac_calibrate(synthesize_incident_map(k, g), cfg);
        const auto err = calib_error(k, est.intrinsics, g);
        require(err.e_f < 1e-6, "e_f " + std::to_string(err.e_f) + " >= 1e-6");
        require(err.e_b < 1e-6, "e_b " + std::to_string(err.e_b) + " >= 1e-6");
    };

    for (const auto& name : fixture_names()) {
        const auto& entry = fixture_intrinsics(name);
        check_round_trip(entry.intrinsics, fixture_geometry(entry.intrinsics), 1);
    }

    std::mt19937_64 rng(1234);
    std::uniform_real_distribution<double> focal(200.0, 4000.0);
    std::uniform_real_distribution<double> unit(0.05, 0.95);
    const ImageGeometry frames[] = {{320, 240}, {640, 480}, {201, 151}, {97, 73}};
    for (int i = 0; i < 100; ++i) {
        const ImageGeometry g = frames[i % 4];
        const Intrinsics k{focal(rng), focal(rng), unit(rng) * g.width, unit(rng) * g.height};
        check_round_trip(k, g, static_cast<std::uint64_t>(i));
    }

    const double secs = elapsed_s(start);
    require(secs < 60.0, "runtime " + std::to_string(secs) + "s exceeds 60s");
    std::ostringstream ss;
    ss << "13 fixtures + 100 random intrinsics, e_f,e_b < 1e-6, " << secs << "s";
    detail = ss.str();
}

// ---------------------------------------------------------------------------
// 2. Minimal-solver exactness on 1000 seeded samples.

void criterion_minimal_solver(std::string& detail) {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> focal(200.0, 4000.0);
    std::uniform_real_distribution<double> px(0.0, 640.0);
    std::uniform_real_distribution<double> py(0.0, 480.0);
    for (int i = 0; i < 1000; ++i) {
        const Intrinsics k{focal(rng), focal(rng), 32.0 + 0.9 * px(rng), 24.0 + 0.9 * py(rng)};
        PixelCoord p1{px(rng), py(rng)}, p2{px(rng), py(rng)};
        while (std::abs(p1.x - p2.x) < 1e-6 || std::abs(p1.y - p2.y) < 1e-6) {
            p2 = {px(rng), py(rng)};
        }
        const Intrinsics r = minimal_solve(p1, incident_vector(k, p1), p2, incident_vector(k, p2));
        require(rel_err(r.fx, k.fx) < 1e-6, "fx error at sample " + std::to_string(i));
        require(rel_err(r.fy, k.fy) < 1e-6, "fy error at sample " + std::to_string(i));
        require(rel_err(r.bx, k.bx) < 1e-6, "bx error at sample " + std::to_string(i));
        require(rel_err(r.by, k.by) < 1e-6, "by error at sample " + std::to_string(i));
    }
    detail = "1000 two-point inversions within 1e-6 relative";
}

// ---------------------------------------------------------------------------
// 3. Robustness under 0.01 rad noise and 20% outliers.

void criterion_robustness(std::string& detail) {
    const auto start = std::chrono::steady_clock::now();
    const Intrinsics k{300.0, 300.0, 128.37, 127.81};
    const auto clean = synthesize_incident_map(k, {256, 256});
    std::vector<double> efs, ebs;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto noisy = perturb_incident_map(clean, 0.01, 0.2, seed);
        SolverConfig cfg;
        cfg.seed = seed + 1000;
        const auto est = ransac_calibrate(noisy, cfg);
        const auto err = calib_error(k, est.intrinsics, {256, 256});
        efs.push_back(err.e_f);
        ebs.push_back(err.e_b);
    }
    auto median = [](std::vector<double> v) {
        std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
        return v[v.size() / 2];
    };
    const double mef = median(efs);
    const double meb = median(ebs);
    require(mef < 0.05, "median e_f " + std::to_string(mef) + " >= 0.05");
    require(meb < 0.05, "median e_b " + std::to_string(meb) + " >= 0.05");
    const double secs = elapsed_s(start);
    require(secs < 120.0, "runtime " + std::to_string(secs) + "s exceeds 120s");
    std::ostringstream ss;
    ss << "median e_f " << mef << ", median e_b " << meb << " over 20 seeds, " << secs << "s";
    detail = ss.str();
}

// ---------------------------------------------------------------------------
// 4. Asm-mode focal enumeration within half the local grid spacing.

void criterion_asm_mode(std::string& detail) {
    std::ostringstream ss;
    for (const std::string name : {"waymo", "scannet"}) {
        const auto& entry = fixture_intrinsics(name);
        const double f = 0.5 * (entry.intrinsics.fx + entry.intrinsics.fy);
        const ImageGeometry g = fixture_geometry(entry.intrinsics);
        const Intrinsics centered{f, f, g.width / 2.0, g.height / 2.0};
        const auto m = synthesize_incident_map(centered, g);
        const FocalGrid grid = FocalGrid::default_for_width(g.width);
        const auto est = enumerate_focal(m, g, grid);
        const double f_hat = est.intrinsics.fx;

        const auto it = std::lower_bound(grid.candidates.begin(), grid.candidates.end(), f_hat);
        const std::size_t i = static_cast<std::size_t>(it - grid.candidates.begin());
        double spacing = 0.0;
        if (i + 1 < grid.candidates.size())
            spacing = std::max(spacing, grid.candidates[i + 1] - grid.candidates[i]);
        if (i > 0) spacing = std::max(spacing, grid.candidates[i] - grid.candidates[i - 1]);
        const double err = std::abs(f_hat - f);
        require(err <= 0.5 * spacing * (1.0 + 1e-9),
                name + ": |f_hat - f| = " + std::to_string(err) + " exceeds half spacing " +
                    std::to_string(0.5 * spacing));
        ss << name << " |df|=" << err << " <= " << 0.5 * spacing << "; ";
    }
    detail = ss.str();
}

// ---------------------------------------------------------------------------
// 5. Scheduler round trip with the oracle denoiser.

void criterion_scheduler(std::string& detail) {
    const ImageGeometry g{24, 18};
    std::mt19937_64 rng(9);
    std::normal_distribution<double> normal(0.0, 1.0);
    LatentField z0(g, 4);
    for (double& v : z0.data()) v = normal(rng);

    const NoiseSchedule sched = default_schedule();
    const Denoiser oracle = oracle_denoiser(z0, sched);
    const LatentField cond(g, 1);

    auto rms = [&](const LatentField& a) {
        double sum = 0.0;
        for (std::size_t i = 0; i < a.data().size(); ++i) {
            const double d = a.data()[i] - z0.data()[i];
            sum += d * d;
        }
        return std::sqrt(sum / static_cast<double>(a.data().size()));
    };

    const double rms_full = rms(generate(oracle, cond, 4, sched, 1000, 42));
    require(rms_full < 1e-4, "full chain RMS " + std::to_string(rms_full) + " >= 1e-4");
    const double rms_strided = rms(generate(oracle, cond, 4, sched, 10, 42));
    require(rms_strided < 1e-3, "strided chain RMS " + std::to_string(rms_strided) + " >= 1e-3");
    std::ostringstream ss;
    ss << "T=1000 RMS " << rms_full << " < 1e-4, 10-step RMS " << rms_strided << " < 1e-3";
    detail = ss.str();
}

// ---------------------------------------------------------------------------
// 6. Ensemble concentration close to the 1/sqrt(K) law.

void criterion_ensemble(std::string& detail) {
    const ImageGeometry g{128, 128};
    std::mt19937_64 rng(10);
    std::normal_distribution<double> normal(0.0, 1.0);
    LatentField z0(g, 1);
    for (double& v : z0.data()) v = normal(rng);

    const NoiseSchedule sched = default_schedule();
    // single-step generation returns z0 plus the unit-variance start noise
    const double a_T = sched.alpha_bar_at(sched.steps());
    const Denoiser den = [&z0, &sched, a_T](const LatentField& z_t, int t, const LatentField&) {
        const double a = sched.alpha_bar_at(t);
        const double inv = 1.0 / std::sqrt(1.0 - a);
        LatentField eps = z_t;
        for (std::size_t i = 0; i < eps.data().size(); ++i)
            eps.data()[i] =
                (z_t.data()[i] * (1.0 - std::sqrt(a_T)) - std::sqrt(a) * z0.data()[i]) * inv;
        return eps;
    };
    const LatentField cond(g, 1);

    auto rms = [&](const LatentField& a) {
        double sum = 0.0;
        for (std::size_t i = 0; i < a.data().size(); ++i) {
            const double d = a.data()[i] - z0.data()[i];
            sum += d * d;
        }
        return std::sqrt(sum / static_cast<double>(a.data().size()));
    };

    const double rms1 = rms(ensemble_generate(den, cond, 1, 1, sched, 1, 500).mean);
    const double rms10 = rms(ensemble_generate(den, cond, 1, 10, sched, 1, 501).mean);
    const double factor = rms1 / rms10;
    require(factor >= 2.5 && factor <= 3.8,
            "K=10 improvement factor " + std::to_string(factor) + " outside [2.5, 3.8]");
    std::ostringstream ss;
    ss << "RMS(K=1)/RMS(K=10) = " << factor << " (theory 3.16)";
    detail = ss.str();
}

// ---------------------------------------------------------------------------
// 7. Spatial-index metrics agree exactly with the brute-force oracle.

double brute_chamfer(const PointCloud& a, const PointCloud& b) {
    auto directed = [](const PointCloud& from, const PointCloud& to) {
        double sum = 0.0;
        for (const auto& p : from.points) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& q : to.points) {
                const double dx = p.x() - q.x();
                const double dy = p.y() - q.y();
                const double dz = p.z() - q.z();
                const double d2 = dx * dx + dy * dy + dz * dz;
                if (d2 < best) best = d2;
            }
            sum += std::sqrt(best);
        }
        return sum / static_cast<double>(from.size());
    };
    return 0.5 * (directed(a, b) + directed(b, a));
}

double brute_fscore(const PointCloud& a, const PointCloud& b, double tau) {
    auto hits = [tau](const PointCloud& from, const PointCloud& to) {
        std::size_t count = 0;
        for (const auto& p : from.points) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& q : to.points) {
                const double dx = p.x() - q.x();
                const double dy = p.y() - q.y();
                const double dz = p.z() - q.z();
                const double d2 = dx * dx + dy * dy + dz * dz;
                if (d2 < best) best = d2;
            }
            if (best <= tau * tau) ++count;
        }
        return static_cast<double>(count) / static_cast<double>(from.size());
    };
    const double precision = hits(a, b);
    const double recall = hits(b, a);
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

void criterion_metric_oracles(std::string& detail) {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<std::size_t> size(1, 1000);
    std::uniform_real_distribution<double> coord(0.0, 1.0);
    auto random_cloud = [&](std::size_t n, double extent) {
        PointCloud c;
        c.points.reserve(n);
        for (std::size_t i = 0; i < n; ++i)
            c.points.emplace_back(coord(rng) * extent, coord(rng) * extent, coord(rng) * extent);
        return c;
    };
    for (int pair = 0; pair < 50; ++pair) {
        const PointCloud a = random_cloud(size(rng), pair % 5 ? 1.0 : 0.15);
        const PointCloud b = random_cloud(size(rng), pair % 7 ? 1.0 : 0.15);
        require(chamfer_l1(a, b) == brute_chamfer(a, b),
                "chamfer mismatch on pair " + std::to_string(pair));
        require(fscore(a, b, 0.05) == brute_fscore(a, b, 0.05),
                "fscore mismatch on pair " + std::to_string(pair));
    }
    const PointCloud self = random_cloud(400, 1.0);
    require(chamfer_l1(self, self) == 0.0, "chamfer of identical clouds is not 0");
    require(fscore(self, self, 0.05) == 1.0, "fscore of identical clouds is not 1");
    detail = "50 cloud pairs, kd-tree == brute force bitwise; identity cases exact";
}

// ---------------------------------------------------------------------------
// 8. Calibration-error arithmetic.

void criterion_calib_error(std::string& detail) {
    const ImageGeometry g{640, 480};
    const Intrinsics gt{1000.0, 1000.0, 320.0, 240.0};
    const auto ef = calib_error(gt, Intrinsics{1100.0, 1050.0, 320.0, 240.0}, g);
    require(ef.e_f == 0.1, "e_f != 0.1 for a 10% focal error");
    const auto eb = calib_error(gt, Intrinsics{1000.0, 1000.0, 320.0, 252.0}, g);
    require(eb.e_b == 0.05, "e_b != 0.05 for a 12-pixel offset at h=480");
    require(calib_error(gt, gt, g).e_f == 0.0 && calib_error(gt, gt, g).e_b == 0.0,
            "identity case nonzero");
    detail = "e_f = 0.1 and e_b = 0.05 hand cases exact";
}

// ---------------------------------------------------------------------------
// 9. Reconstruction consistency.

void criterion_reconstruction(std::string& detail) {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> focal(200.0, 4000.0);
    std::uniform_real_distribution<double> depth(0.1, 10.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 10; ++i) {
        const Intrinsics k{focal(rng), focal(rng), 32.0 * unit(rng) + 16.0,
                           24.0 * unit(rng) + 12.0};
        DepthMap d(ImageGeometry{64, 48});
        for (int y = 0; y < 48; ++y)
            for (int x = 0; x < 64; ++x)
                d.set(x, y, unit(rng) < 0.05 ? std::numeric_limits<float>::quiet_NaN()
                                             : static_cast<float>(depth(rng)));
        bool any = false;
        for (int y = 0; y < 48 && !any; ++y)
            for (int x = 0; x < 64 && !any; ++x) any = d.valid(x, y);
        if (!any) d.set(0, 0, 1.0f);

        const PointCloud cloud = unproject(d, k);
        const ReprojectionResult r = reproject(cloud, k);
        std::size_t idx = 0;
        for (int y = 0; y < 48; ++y)
            for (int x = 0; x < 64; ++x) {
                if (!d.valid(x, y)) continue;
                require(std::abs(r.pixels[idx].x - x) < 1e-9, "pixel x deviates beyond 1e-9");
                require(std::abs(r.pixels[idx].y - y) < 1e-9, "pixel y deviates beyond 1e-9");
                require(std::abs(r.depths[idx] - d.at(x, y)) < 1e-9, "depth deviates beyond 1e-9");
                ++idx;
            }
    }

    // constant depth -> exact plane
    DepthMap plane(ImageGeometry{80, 60}, 2.0f);
    const PointCloud cloud = unproject(plane, Intrinsics{889.0, 889.0, 512.0, 384.0});
    for (const auto& p : cloud.points)
        require(p.z() == 2.0, "constant-depth cloud is not an exact plane");
    detail = "reproject(unproject) identity to 1e-9 on 10 random maps; planes exact";
}

// ---------------------------------------------------------------------------
// 10. Crop and resize invariance.

void criterion_invariance(std::string& detail) {
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> focal(200.0, 4000.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> width(64, 2048);
    std::uniform_real_distribution<double> scale(0.25, 4.0);
    std::uniform_real_distribution<double> coord(-200.0, 900.0);

    for (int i = 0; i < 500; ++i) {
        const int w = width(rng), h = width(rng);
        const Intrinsics k{focal(rng), focal(rng), (0.25 + 0.5 * unit(rng)) * w,
                           (0.25 + 0.5 * unit(rng)) * h};

        // Bit-exact crop invariance. Integer offsets bounded by ~1.5x the
        // principal point keep the translated center exactly representable
        // (it stays within the center's own binade), which covers every crop
        // the augmentation path can produce.
        const PixelCoord o{std::floor(unit(rng) * std::min<double>(w - 16, 1.5 * k.bx)),
                           std::floor(unit(rng) * std::min<double>(h - 16, 1.5 * k.by))};
        const Intrinsics kc = crop_intrinsics(k, o);
        const double x = o.x + std::floor(unit(rng) * (w - o.x));
        const double y = o.y + std::floor(unit(rng) * (h - o.y));
        const Eigen::Vector3d a = incident_vector(k, {x, y});
        const Eigen::Vector3d b = incident_vector(kc, {x - o.x, y - o.y});
        require(a.x() == b.x() && a.y() == b.y(), "crop invariance not exact");

        // arbitrary in-frame integer offsets: representation-limited, still
        // orders of magnitude inside the 1e-9 budget
        const PixelCoord of{std::floor(unit(rng) * (w - 16)), std::floor(unit(rng) * (h - 16))};
        const Intrinsics kf = crop_intrinsics(k, of);
        const Eigen::Vector3d af = incident_vector(k, {x, y});
        const Eigen::Vector3d bf = incident_vector(kf, {x - of.x, y - of.y});
        const double ulp_bound = 0x1.0p-48;
        require(std::abs(af.x() - bf.x()) <= ulp_bound * std::max(1.0, std::abs(af.x())),
                "crop invariance x beyond the representation bound");
        require(std::abs(af.y() - bf.y()) <= ulp_bound * std::max(1.0, std::abs(af.y())),
                "crop invariance y beyond the representation bound");

        // resize invariance within 1e-9 relative
        const double s = scale(rng);
        const auto [ks, gs] = resize_intrinsics(k, {640, 480}, s);
        const PixelCoord p{coord(rng), coord(rng)};
        const Eigen::Vector3d u = incident_vector(k, p);
        const Eigen::Vector3d v = incident_vector(ks, {s * p.x, s * p.y});
        require(std::abs(v.x() - u.x()) <= 1e-9 * std::max(1.0, std::abs(u.x())),
                "resize invariance x beyond 1e-9");
        require(std::abs(v.y() - u.y()) <= 1e-9 * std::max(1.0, std::abs(u.y())),
                "resize invariance y beyond 1e-9");
    }

    // raster-level crop equals the cropped-intrinsics synthesis bit-exactly
    const Intrinsics k{1165.72, 1165.74, 649.09, 484.77};
    const auto m = synthesize_incident_map(k, {324, 242});
    const auto sub = crop_map(m, 40, 30, 200, 150);
    const auto direct = synthesize_incident_map(crop_intrinsics(k, {40.0, 30.0}), {200, 150});
    require(sub == direct, "raster crop differs from cropped-intrinsics synthesis");

    detail = "500 random crop (exact in-binade, <=2^-48 in-frame) and resize (1e-9) cases; "
             "raster crop bit-exact";
}

// ---------------------------------------------------------------------------
// 11. Serialization round trips and header rejection.

void criterion_serialization(std::string& detail) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "incalib_acceptance";
    fs::create_directories(dir);

    // IMAP
    std::mt19937_64 rng(15);
    std::normal_distribution<float> val(0.0f, 1.0f);
    IncidentMap m(ImageGeometry{33, 21});
    for (int y = 0; y < 21; ++y)
        for (int x = 0; x < 33; ++x) m.set(x, y, val(rng), val(rng));
    const auto imap = (dir / "a.imap").string();
    write_map(imap, m);
    require(read_incident_map(imap) == m, "IMAP round trip not bit-exact");

    // DMAP
    DepthMap d(ImageGeometry{19, 27});
    for (int y = 0; y < 27; ++y)
        for (int x = 0; x < 19; ++x) d.set(x, y, std::abs(val(rng)) + 0.1f);
    const auto dmap = (dir / "a.dmap").string();
    write_map(dmap, d);
    require(read_depth_map(dmap) == d, "DMAP round trip not bit-exact");

    // JSON
    const Intrinsics k{1266.24, 1266.42, 816.27, 491.51};
    const auto [k2, g2] = parse_intrinsics_json(intrinsics_json(k, {1600, 900}));
    require(k2.fx == k.fx && k2.fy == k.fy && k2.bx == k.bx && k2.by == k.by &&
                g2 == ImageGeometry{1600, 900},
            "intrinsics JSON round trip not exact");

    // PLY
    PointCloud cloud;
    for (int i = 0; i < 101; ++i)
        cloud.points.emplace_back(val(rng) * 1e3, val(rng) * 1e-4, val(rng));
    const auto ply = (dir / "a.ply").string();
    write_ply(ply, cloud);
    const PointCloud back = read_ply(ply);
    require(back.size() == cloud.size(), "PLY round trip changed the point count");
    for (std::size_t i = 0; i < cloud.size(); ++i)
        require(back.points[i] == cloud.points[i], "PLY round trip not bit-exact");

    // distinct header rejections
    auto corrupt = [&](int byte_index, char value, auto expected_probe) {
        std::ifstream in(dmap, std::ios::binary);
        std::vector<char> bytes{std::istreambuf_iterator<char>(in),
                                std::istreambuf_iterator<char>()};
        bytes[static_cast<std::size_t>(byte_index)] = value;
        const auto bad_path = (dir / "bad.dmap").string();
        std::ofstream out(bad_path, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.close();
        expected_probe(bad_path);
    };
    corrupt(0, 'X', [](const std::string& p) {
        try {
            read_depth_map(p);
            require(false, "bad magic accepted");
        } catch (const BadMagic&) {
        }
    });
    corrupt(4, 9, [](const std::string& p) {
        try {
            read_depth_map(p);
            require(false, "bad version accepted");
        } catch (const VersionMismatch&) {
        }
    });
    corrupt(20, 3, [](const std::string& p) {
        try {
            read_depth_map(p);
            require(false, "bad payload size accepted");
        } catch (const SizeMismatch&) {
        }
    });
    {
        std::ifstream in(dmap, std::ios::binary);
        std::vector<char> bytes{std::istreambuf_iterator<char>(in),
                                std::istreambuf_iterator<char>()};
        bytes.resize(bytes.size() - 3);
        const auto bad_path = (dir / "trunc.dmap").string();
        std::ofstream out(bad_path, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.close();
        try {
            read_depth_map(bad_path);
            require(false, "truncated payload accepted");
        } catch (const Truncated&) {
        }
    }

    std::error_code ec;
    fs::remove_all(dir, ec);
    detail = "IMAP/DMAP/JSON/PLY bit-exact; BadMagic/VersionMismatch/SizeMismatch/Truncated distinct";
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<void(std::string&)> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "noiseless round trip", criterion_noiseless_round_trip},
        {2, "minimal-solver exactness", criterion_minimal_solver},
        {3, "robustness law", criterion_robustness},
        {4, "asm-mode focal enumeration", criterion_asm_mode},
        {5, "scheduler round trip", criterion_scheduler},
        {6, "ensemble concentration", criterion_ensemble},
        {7, "metric oracles", criterion_metric_oracles},
        {8, "calibration-error arithmetic", criterion_calib_error},
        {9, "reconstruction consistency", criterion_reconstruction},
        {10, "invariance laws", criterion_invariance},
        {11, "serialization", criterion_serialization},
    };

    const auto suite_start = std::chrono::steady_clock::now();
    int failures = 0;
    for (const auto& c : criteria) {
        std::string detail;
        try {
            c.run(detail);
            std::printf("[PASS] criterion %2d (%s): %s\n", c.id, c.name, detail.c_str());
        } catch (const std::exception& e) {
            ++failures;
            std::printf("[FAIL] criterion %2d (%s): %s\n", c.id, c.name, e.what());
        }
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed in %.1fs\n", static_cast<int>(criteria.size()) - failures,
                criteria.size(), elapsed_s(suite_start));
    return failures == 0 ? 0 : 1;
}
