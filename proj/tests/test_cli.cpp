// Copyright Contributors to the incalib Project
// SPDX-License-Identifier: Apache-2.0
//
// Drives the installed binary end to end through a temp directory.

#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "incalib/rasterio.hpp"
#include "incalib/recon.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
};

RunResult run_cli(const std::string& args, const fs::path& stderr_file) {
    const std::string cmd =
        std::string(INCALIB_CLI_PATH) + " " + args + " 2>" + stderr_file.string();
    RunResult r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buf;
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
    const int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("incalib_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("synth writes a readable map and prints its intrinsics") {
    TempDir tmp;
    const auto map_path = tmp.path / "m.imap";
    const auto err = tmp.path / "err.txt";
    const auto r = run_cli("synth --fixture scannet --size 1296x968 --out " + map_path.string(), err);
    REQUIRE(r.exit_code == 0);

    const json j = json::parse(r.out);
    CHECK(j["fx"].get<double>() == 1165.72);
    CHECK(j["width"].get<int>() == 1296);

    const auto m = incalib::read_incident_map(map_path.string());
    CHECK(m.geometry() == incalib::ImageGeometry{1296, 968});
    // center pixel rays point almost straight down the axis
    CHECK(std::abs(m.vx(648, 484)) < 2e-3f);
    CHECK(std::abs(m.vy(648, 484)) < 2e-3f);

    // identical invocations produce identical bytes
    const auto map2 = tmp.path / "m2.imap";
    run_cli("synth --fixture scannet --size 1296x968 --out " + map2.string(), err);
    CHECK(slurp(map_path) == slurp(map2));
}

TEST_CASE("synth rejects unknown fixtures and names the known ones") {
    TempDir tmp;
    const auto err = tmp.path / "err.txt";
    const auto r = run_cli("synth --fixture nosuch --size 64x64 --out " +
                               (tmp.path / "x.imap").string(),
                           err);
    CHECK(r.exit_code != 0);
    const std::string diag = slurp(err);
    CHECK(diag.find("nosuch") != std::string::npos);
    CHECK(diag.find("waymo") != std::string::npos);
}

TEST_CASE("synth requires exactly one intrinsics source") {
    TempDir tmp;
    const auto err = tmp.path / "err.txt";
    const auto r =
        run_cli("synth --size 64x64 --out " + (tmp.path / "x.imap").string(), err);
    CHECK(r.exit_code != 0);
}

TEST_CASE("perturb with zero noise copies the payload bit-exactly") {
    TempDir tmp;
    const auto err = tmp.path / "err.txt";
    const auto a = tmp.path / "a.imap";
    const auto b = tmp.path / "b.imap";
    run_cli("synth --fixture nyu --size 160x120 --out " + a.string(), err);
    const auto r = run_cli("perturb --in " + a.string() + " --out " + b.string() +
                               " --angle-noise 0 --outlier-frac 0 --seed 9",
                           err);
    REQUIRE(r.exit_code == 0);
    CHECK(slurp(a) == slurp(b));

    // a fixed seed reproduces the degraded map exactly
    const auto c = tmp.path / "c.imap";
    const auto d = tmp.path / "d.imap";
    run_cli("perturb --in " + a.string() + " --out " + c.string() +
                " --angle-noise 0.01 --outlier-frac 0.3 --seed 5",
            err);
    run_cli("perturb --in " + a.string() + " --out " + d.string() +
                " --angle-noise 0.01 --outlier-frac 0.3 --seed 5",
            err);
    CHECK(slurp(c) == slurp(d));
    CHECK(slurp(c) != slurp(a));
}

TEST_CASE("calibrate recovers the fixture and scores against ground truth") {
    TempDir tmp;
    const auto err = tmp.path / "err.txt";
    const auto map_path = tmp.path / "m.imap";
    run_cli("synth --fixture scannet --size 648x484 --out " + map_path.string(), err);

    const auto gt_path = tmp.path / "gt.json";
    {
        std::ofstream f(gt_path);
        f << incalib::intrinsics_json(incalib::fixture_intrinsics("scannet").intrinsics,
                                      {648, 484});
    }
    const auto r = run_cli("calibrate --in " + map_path.string() + " --gt " + gt_path.string() +
                               " --seed 3",
                           err);
    REQUIRE(r.exit_code == 0);
    const json j = json::parse(r.out);
    CHECK(j["mode"] == "ransac");
    CHECK(j["e_f"].get<double>() < 1e-6);
    CHECK(j["e_b"].get<double>() < 1e-6);
    CHECK(j["inlier_ratio"].get<double>() == 1.0);
}

TEST_CASE("calibrate --asm pins the principal point to the image center") {
    TempDir tmp;
    const auto err = tmp.path / "err.txt";
    const auto k_path = tmp.path / "k.json";
    {
        std::ofstream f(k_path);
        f << R"({"fx":500.0,"fy":500.0,"bx":128.0,"by":96.0,"width":256,"height":192})";
    }
    const auto map_path = tmp.path / "m.imap";
    run_cli("synth --intrinsics-json " + k_path.string() + " --out " + map_path.string(), err);
    const auto r = run_cli("calibrate --in " + map_path.string() + " --asm", err);
    REQUIRE(r.exit_code == 0);
    const json j = json::parse(r.out);
    CHECK(j["mode"] == "asm");
    CHECK(j["intrinsics"]["bx"].get<double>() == 128.0);
    CHECK(j["intrinsics"]["by"].get<double>() == 96.0);
    CHECK(j["intrinsics"]["fx"] == j["intrinsics"]["fy"]);
}

TEST_CASE("calibrate reports no consensus with a nonzero exit") {
    TempDir tmp;
    const auto err = tmp.path / "err.txt";
    // constant map: every sample is degenerate
    incalib::IncidentMap m(incalib::ImageGeometry{16, 16});
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) m.set(x, y, 0.25f, -0.125f);
    const auto map_path = tmp.path / "const.imap";
    incalib::write_map(map_path.string(), m);
    const auto r = run_cli("calibrate --in " + map_path.string(), err);
    CHECK(r.exit_code != 0);
    CHECK(slurp(err).find("degenerate") != std::string::npos);
}

TEST_CASE("reconstruct unprojects a constant-depth plane") {
    TempDir tmp;
    const auto err = tmp.path / "err.txt";
    incalib::DepthMap d(incalib::ImageGeometry{64, 48}, 2.0f);
    const auto depth_path = tmp.path / "d.dmap";
    incalib::write_map(depth_path.string(), d);

    const auto k_path = tmp.path / "k.json";
    {
        std::ofstream f(k_path);
        f << incalib::intrinsics_json(incalib::fixture_intrinsics("hypersim").intrinsics,
                                      {64, 48});
    }
    const auto ply_path = tmp.path / "cloud.ply";
    const auto r = run_cli("reconstruct --depth " + depth_path.string() + " --intrinsics " +
                               k_path.string() + " --out " + ply_path.string(),
                           err);
    REQUIRE(r.exit_code == 0);
    const json j = json::parse(r.out);
    CHECK(j["points"].get<int>() == 64 * 48);

    const auto cloud = incalib::read_ply(ply_path.string());
    REQUIRE(cloud.size() == 64 * 48);
    for (const auto& p : cloud.points) CHECK(p.z() == 2.0);

    // geometry mismatch is rejected
    const auto bad_k = tmp.path / "bad.json";
    {
        std::ofstream f(bad_k);
        f << incalib::intrinsics_json(incalib::fixture_intrinsics("hypersim").intrinsics,
                                      {32, 24});
    }
    const auto r2 = run_cli("reconstruct --depth " + depth_path.string() + " --intrinsics " +
                                bad_k.string() + " --out " + ply_path.string(),
                            err);
    CHECK(r2.exit_code != 0);
}

TEST_CASE("reconstruct of a ramp depth matches the analytic cloud") {
    TempDir tmp;
    const auto err = tmp.path / "err.txt";
    const incalib::Intrinsics k{400.0, 420.0, 24.0, 18.0};
    const incalib::ImageGeometry g{48, 36};

    incalib::DepthMap ramp(g);
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x)
            ramp.set(x, y, 1.0f + 0.05f * x + 0.02f * y);
    const auto depth_path = tmp.path / "ramp.dmap";
    incalib::write_map(depth_path.string(), ramp);

    const auto k_path = tmp.path / "k.json";
    {
        std::ofstream f(k_path);
        f << incalib::intrinsics_json(k, g);
    }
    const auto ply_path = tmp.path / "ramp.ply";
    const auto r = run_cli("reconstruct --depth " + depth_path.string() + " --intrinsics " +
                               k_path.string() + " --out " + ply_path.string(),
                           err);
    REQUIRE(r.exit_code == 0);

    // the analytically constructed cloud from the same unprojection rule
    incalib::PointCloud expect;
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x) {
            const double d = ramp.at(x, y);
            expect.points.emplace_back(d * (x - k.bx) / k.fx, d * (y - k.by) / k.fy, d);
        }
    const auto cloud = incalib::read_ply(ply_path.string());
    CHECK(incalib::chamfer_l1(cloud, expect) == 0.0);

    // reprojecting the PLY lands back on the pixel grid
    const auto back = incalib::reproject(cloud, k);
    std::size_t i = 0;
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x, ++i) {
            CHECK(std::abs(back.pixels[i].x - x) < 1e-9);
            CHECK(std::abs(back.pixels[i].y - y) < 1e-9);
        }
}

TEST_CASE("reconstruct --from-imap calibrates first") {
    TempDir tmp;
    const auto err = tmp.path / "err.txt";
    const auto map_path = tmp.path / "m.imap";
    run_cli("synth --fixture nyu --size 651x507 --out " + map_path.string(), err);

    incalib::DepthMap d(incalib::ImageGeometry{651, 507}, 3.0f);
    const auto depth_path = tmp.path / "d.dmap";
    incalib::write_map(depth_path.string(), d);

    const auto ply_path = tmp.path / "cloud.ply";
    const auto r = run_cli("reconstruct --depth " + depth_path.string() + " --from-imap " +
                               map_path.string() + " --out " + ply_path.string(),
                           err);
    REQUIRE(r.exit_code == 0);
    const json j = json::parse(r.out);
    CHECK(j["calibration"]["intrinsics"]["fx"].get<double>() ==
          doctest::Approx(518.85).epsilon(1e-4));
    // shift warning lands on stderr
    CHECK(slurp(err).find("shift") != std::string::npos);
}

TEST_CASE("benchmark writes a self-consistent report and CSV twin") {
    TempDir tmp;
    const auto err = tmp.path / "err.txt";
    const auto report_path = tmp.path / "report.json";
    const auto r = run_cli(
        "benchmark --fixtures scannet,nyu --noise-grid 0:0,0.005:0.1 --trials 2 --seed 11 "
        "--size 96x96 --out " +
            report_path.string(),
        err);
    REQUIRE(r.exit_code == 0);

    const json report = json::parse(slurp(report_path));
    REQUIRE(report["trials"].size() == 2 * 2 * 2);
    REQUIRE(report["aggregates"].size() == 2 * 2);

    // zero-noise rows are numerically clean
    for (const auto& row : report["trials"]) {
        REQUIRE(row["error"].is_null());
        if (row["sigma"].get<double>() == 0.0 && row["outlier_frac"].get<double>() == 0.0) {
            CHECK(row["e_f"].get<double>() < 1e-6);
            CHECK(row["e_b"].get<double>() < 1e-6);
        }
    }

    // aggregates equal recomputation from the rows
    for (const auto& agg : report["aggregates"]) {
        std::vector<double> efs;
        for (const auto& row : report["trials"])
            if (row["fixture"] == agg["fixture"] && row["sigma"] == agg["sigma"] &&
                row["outlier_frac"] == agg["outlier_frac"] && row["error"].is_null())
                efs.push_back(row["e_f"].get<double>());
        REQUIRE(!efs.empty());
        std::sort(efs.begin(), efs.end());
        const double med = efs.size() % 2 ? efs[efs.size() / 2]
                                          : 0.5 * (efs[efs.size() / 2 - 1] + efs[efs.size() / 2]);
        CHECK(agg["median_e_f"].get<double>() == doctest::Approx(med).epsilon(1e-12));
    }

    // CSV twin exists with one line per trial plus the header
    const std::string csv = slurp(tmp.path / "report.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 8);

    // identical seed reproduces everything except the timing fields
    const auto report2_path = tmp.path / "report2.json";
    run_cli(
        "benchmark --fixtures scannet,nyu --noise-grid 0:0,0.005:0.1 --trials 2 --seed 11 "
        "--size 96x96 --out " +
            report2_path.string(),
        err);
    json a = json::parse(slurp(report_path));
    json b = json::parse(slurp(report2_path));
    for (auto& row : a["trials"]) row.erase("runtime_ms");
    for (auto& row : b["trials"]) row.erase("runtime_ms");
    CHECK(a == b);
}

TEST_SUITE_END();
