// Copyright Contributors to the incalib Project
// SPDX-License-Identifier: Apache-2.0
//
// incalib command-line tool: incident-map synthesis, degradation,
// calibration, reconstruction and the benchmark harness. Machine-readable
// JSON goes to stdout, diagnostics to stderr, and every command is
// deterministic given its full flag set.

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "incalib/errors.hpp"
#include "incalib/geometry.hpp"
#include "incalib/metrics.hpp"
#include "incalib/perturb.hpp"
#include "incalib/rasterio.hpp"
#include "incalib/recon.hpp"
#include "incalib/rng.hpp"
#include "incalib/solver.hpp"

namespace {

using incalib::ImageGeometry;
using incalib::Intrinsics;
using nlohmann::json;

ImageGeometry parse_size(const std::string& text) {
    const auto sep = text.find('x');
    if (sep == std::string::npos)
        throw incalib::ParseError("size must be given as WxH, e.g. 640x480");
    try {
        ImageGeometry g{std::stoi(text.substr(0, sep)), std::stoi(text.substr(sep + 1))};
        g.validate();
        return g;
    } catch (const std::invalid_argument& e) {
        throw incalib::ParseError(std::string("bad size '") + text + "': " + e.what());
    }
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw incalib::IoError("cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

json intrinsics_to_json(const Intrinsics& k, ImageGeometry g) {
    return json::parse(incalib::intrinsics_json(k, g));
}

json estimate_to_json(const incalib::CalibrationEstimate& est, ImageGeometry g,
                      const std::string& mode) {
    json out;
    out["intrinsics"] = intrinsics_to_json(est.intrinsics, g);
    out["inlier_ratio"] = est.inlier_ratio;
    out["median_residual"] = est.median_residual;
    out["mode"] = mode;
    return out;
}

// --- synth ---

struct SynthArgs {
    std::string fixture;
    std::string intrinsics_path;
    std::string size;
    std::string out;
};

int run_synth(const SynthArgs& a) {
    Intrinsics k;
    ImageGeometry g{};
    if (!a.fixture.empty()) {
        k = incalib::fixture_intrinsics(a.fixture).intrinsics;
        if (a.size.empty())
            throw incalib::ParseError("--size is required with --fixture");
        g = parse_size(a.size);
    } else {
        std::tie(k, g) = incalib::parse_intrinsics_json(read_text_file(a.intrinsics_path));
        if (!a.size.empty()) g = parse_size(a.size);
    }
    incalib::write_map(a.out, incalib::synthesize_incident_map(k, g));
    std::cout << incalib::intrinsics_json(k, g) << "\n";
    return 0;
}

// --- perturb ---

struct PerturbArgs {
    std::string in;
    std::string out;
    double angle_noise = 0.0;
    double outlier_frac = 0.0;
    std::uint64_t seed = 0;
};

int run_perturb(const PerturbArgs& a) {
    const auto m = incalib::read_incident_map(a.in);
    incalib::write_map(a.out, incalib::perturb_incident_map(m, a.angle_noise, a.outlier_frac, a.seed));
    json out;
    out["angle_noise"] = a.angle_noise;
    out["outlier_frac"] = a.outlier_frac;
    out["seed"] = a.seed;
    std::cout << out.dump() << "\n";
    return 0;
}

// --- calibrate ---

struct CalibrateArgs {
    std::string in;
    bool use_asm = false;
    int iters = incalib::SolverConfig{}.iterations;
    double threshold = incalib::SolverConfig{}.inlier_threshold;
    double min_inlier_ratio = incalib::SolverConfig{}.min_inlier_ratio;
    std::uint64_t seed = 0;
    std::string gt_path;
};

int run_calibrate(const CalibrateArgs& a) {
    const auto m = incalib::read_incident_map(a.in);
    incalib::SolverConfig cfg;
    cfg.iterations = a.iters;
    cfg.inlier_threshold = a.threshold;
    cfg.min_inlier_ratio = a.min_inlier_ratio;
    cfg.seed = a.seed;
    cfg.assume_centered = a.use_asm;
    const auto est = incalib::calibrate(m, cfg);
    json out = estimate_to_json(est, m.geometry(), a.use_asm ? "asm" : "ransac");
    if (!a.gt_path.empty()) {
        const auto [gt, gt_geom] = incalib::parse_intrinsics_json(read_text_file(a.gt_path));
        (void)gt_geom;  // errors are normalized by the map actually calibrated
        const auto err = incalib::calib_error(gt, est.intrinsics, m.geometry());
        out["e_f"] = err.e_f;
        out["e_b"] = err.e_b;
    }
    std::cout << out.dump() << "\n";
    return 0;
}

// --- reconstruct ---

struct ReconstructArgs {
    std::string depth;
    std::string intrinsics_path;
    std::string from_imap;
    bool use_asm = false;
    std::string ref_depth;
    std::string align_mode = "affine";
    std::string out;
};

int run_reconstruct(const ReconstructArgs& a) {
    auto d = incalib::read_depth_map(a.depth);
    Intrinsics k;
    json out;
    if (!a.from_imap.empty()) {
        const auto m = incalib::read_incident_map(a.from_imap);
        if (m.geometry() != d.geometry())
            throw incalib::ParseError("incident map and depth map geometries differ");
        incalib::SolverConfig cfg;
        cfg.assume_centered = a.use_asm;
        const auto est = incalib::calibrate(m, cfg);
        k = est.intrinsics;
        out["calibration"] = estimate_to_json(est, m.geometry(), a.use_asm ? "asm" : "ransac");
    } else {
        ImageGeometry g{};
        std::tie(k, g) = incalib::parse_intrinsics_json(read_text_file(a.intrinsics_path));
        if (g != d.geometry())
            throw incalib::ParseError("intrinsics geometry does not match the depth map");
    }

    if (!a.ref_depth.empty()) {
        const auto ref = incalib::read_depth_map(a.ref_depth);
        if (a.align_mode != "affine" && a.align_mode != "scale")
            throw incalib::ParseError("--align-mode must be 'affine' or 'scale'");
        const auto fit = a.align_mode == "scale" ? incalib::align_scale(d, ref)
                                                 : incalib::align_affine(d, ref);
        for (int y = 0; y < d.height(); ++y)
            for (int x = 0; x < d.width(); ++x)
                if (d.valid(x, y))
                    d.set(x, y, static_cast<float>(fit.scale * d.at(x, y) + fit.shift));
        out["affine_alignment"] = {{"scale", fit.scale}, {"shift", fit.shift}};
    } else {
        std::cerr << "note: no reference depth given; affine shift is unrecovered and the "
                     "cloud may be distorted accordingly\n";
    }

    const auto cloud = incalib::unproject(d, k);
    incalib::write_ply(a.out, cloud);
    out["points"] = cloud.size();
    out["intrinsics"] = intrinsics_to_json(k, d.geometry());
    std::cout << out.dump() << "\n";
    return 0;
}

// --- benchmark ---

struct BenchmarkArgs {
    std::string fixtures;
    std::string noise_grid = "0:0";
    int trials = 5;
    std::uint64_t seed = 0;
    std::string out;
    std::string size;
};

struct NoiseSetting {
    double sigma = 0.0;
    double frac = 0.0;
};

std::vector<NoiseSetting> parse_noise_grid(const std::string& spec) {
    std::vector<NoiseSetting> settings;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto sep = item.find(':');
        if (sep == std::string::npos)
            throw incalib::ParseError("noise grid entries must look like sigma:frac");
        try {
            settings.push_back({std::stod(item.substr(0, sep)), std::stod(item.substr(sep + 1))});
        } catch (const std::exception&) {
            throw incalib::ParseError("bad noise grid entry '" + item + "'");
        }
    }
    if (settings.empty()) throw incalib::ParseError("noise grid is empty");
    return settings;
}

double median_of(std::vector<double> v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + mid));
    return m;
}

int run_benchmark(const BenchmarkArgs& a) {
    std::vector<std::string> fixtures;
    if (a.fixtures.empty()) {
        fixtures = incalib::fixture_names();
    } else {
        std::stringstream ss(a.fixtures);
        std::string name;
        while (std::getline(ss, name, ',')) fixtures.push_back(name);
    }
    const auto settings = parse_noise_grid(a.noise_grid);
    if (a.trials < 1) throw incalib::ParseError("--trials must be >= 1");

    json trials_json = json::array();
    json aggregates = json::array();
    std::ofstream csv;
    std::filesystem::path csv_path(a.out);
    csv_path.replace_extension(".csv");
    csv.open(csv_path, std::ios::binary);
    if (!csv) throw incalib::IoError("cannot open " + csv_path.string());
    csv << "fixture,sigma,outlier_frac,trial,seed,e_f,e_b,runtime_ms,error\n";

    int error_count = 0;
    std::uint64_t global_index = 0;
    for (const auto& name : fixtures) {
        const auto& fixture = incalib::fixture_intrinsics(name);
        ImageGeometry g;
        if (!a.size.empty()) {
            g = parse_size(a.size);
        } else {
            g = ImageGeometry{static_cast<int>(std::lround(2.0 * fixture.intrinsics.bx)),
                              static_cast<int>(std::lround(2.0 * fixture.intrinsics.by))};
        }
        const auto clean = incalib::synthesize_incident_map(fixture.intrinsics, g);

        for (const auto& setting : settings) {
            std::vector<double> efs, ebs;
            int cell_errors = 0;
            for (int trial = 0; trial < a.trials; ++trial, ++global_index) {
                const std::uint64_t perturb_seed = incalib::derive_seed(a.seed, 2 * global_index);
                const std::uint64_t solver_seed = incalib::derive_seed(a.seed, 2 * global_index + 1);
                json row;
                row["fixture"] = name;
                row["sigma"] = setting.sigma;
                row["outlier_frac"] = setting.frac;
                row["trial"] = trial;
                row["seed"] = perturb_seed;
                const auto start = std::chrono::steady_clock::now();
                std::string error;
                double e_f = 0.0, e_b = 0.0;
                try {
                    const auto noisy =
                        incalib::perturb_incident_map(clean, setting.sigma, setting.frac, perturb_seed);
                    incalib::SolverConfig cfg;
                    cfg.seed = solver_seed;
                    const auto est = incalib::ransac_calibrate(noisy, cfg);
                    const auto err = incalib::calib_error(fixture.intrinsics, est.intrinsics, g);
                    e_f = err.e_f;
                    e_b = err.e_b;
                } catch (const std::exception& e) {
                    error = e.what();
                }
                const double runtime_ms =
                    std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                              start)
                        .count();
                row["runtime_ms"] = runtime_ms;
                csv << name << ',' << setting.sigma << ',' << setting.frac << ',' << trial << ','
                    << perturb_seed << ',';
                if (error.empty()) {
                    row["e_f"] = e_f;
                    row["e_b"] = e_b;
                    row["error"] = nullptr;
                    efs.push_back(e_f);
                    ebs.push_back(e_b);
                    csv << e_f << ',' << e_b << ',' << runtime_ms << ",\n";
                } else {
                    row["e_f"] = nullptr;
                    row["e_b"] = nullptr;
                    row["error"] = error;
                    ++cell_errors;
                    ++error_count;
                    std::string sanitized = error;
                    std::replace(sanitized.begin(), sanitized.end(), ',', ';');
                    csv << ",," << runtime_ms << ',' << sanitized << "\n";
                }
                trials_json.push_back(std::move(row));
            }
            json agg;
            agg["fixture"] = name;
            agg["sigma"] = setting.sigma;
            agg["outlier_frac"] = setting.frac;
            agg["trials"] = a.trials;
            agg["errors"] = cell_errors;
            if (!efs.empty()) {
                agg["median_e_f"] = median_of(efs);
                agg["median_e_b"] = median_of(ebs);
            } else {
                agg["median_e_f"] = nullptr;
                agg["median_e_b"] = nullptr;
            }
            aggregates.push_back(std::move(agg));
        }
    }

    json report;
    report["seed"] = a.seed;
    report["trials"] = std::move(trials_json);
    report["aggregates"] = std::move(aggregates);
    std::ofstream out(a.out, std::ios::binary);
    if (!out) throw incalib::IoError("cannot open " + a.out);
    out << report.dump(2) << "\n";

    std::cout << json{{"report", a.out},
                      {"csv", csv_path.string()},
                      {"rows", report["trials"].size()},
                      {"errors", error_count}}
                     .dump()
              << "\n";
    return error_count == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"incident-map camera calibration toolkit"};
    app.require_subcommand(1);

    SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "synthesize an incident map from intrinsics");
    auto* fixture_opt = synth_cmd->add_option("--fixture", synth.fixture, "embedded dataset fixture name");
    auto* ijson_opt =
        synth_cmd->add_option("--intrinsics-json", synth.intrinsics_path, "intrinsics JSON file");
    fixture_opt->excludes(ijson_opt);
    ijson_opt->excludes(fixture_opt);
    synth_cmd->add_option("--size", synth.size, "map geometry as WxH");
    synth_cmd->add_option("--out", synth.out, "output IMAP path")->required();

    PerturbArgs perturb;
    auto* perturb_cmd = app.add_subcommand("perturb", "degrade an incident map with noise and outliers");
    perturb_cmd->add_option("--in", perturb.in, "input IMAP path")->required();
    perturb_cmd->add_option("--out", perturb.out, "output IMAP path")->required();
    perturb_cmd->add_option("--angle-noise", perturb.angle_noise, "ray rotation sigma, radians");
    perturb_cmd->add_option("--outlier-frac", perturb.outlier_frac, "fraction of pixels replaced");
    perturb_cmd->add_option("--seed", perturb.seed, "random seed");

    CalibrateArgs calib;
    auto* calib_cmd = app.add_subcommand("calibrate", "recover intrinsics from an incident map");
    calib_cmd->add_option("--in", calib.in, "input IMAP path")->required();
    calib_cmd->add_flag("--asm", calib.use_asm, "assume a centered principal point, enumerate fx = fy");
    calib_cmd->add_option("--iters", calib.iters, "RANSAC iterations");
    calib_cmd->add_option("--threshold", calib.threshold, "inlier threshold, radians");
    calib_cmd->add_option("--min-inlier-ratio", calib.min_inlier_ratio, "consensus floor");
    calib_cmd->add_option("--seed", calib.seed, "random seed");
    calib_cmd->add_option("--gt", calib.gt_path, "ground-truth intrinsics JSON for e_f / e_b");

    ReconstructArgs recon;
    auto* recon_cmd = app.add_subcommand("reconstruct", "unproject a depth map into a PLY cloud");
    recon_cmd->add_option("--depth", recon.depth, "input DMAP path")->required();
    auto* k_opt = recon_cmd->add_option("--intrinsics", recon.intrinsics_path, "intrinsics JSON file");
    auto* imap_opt =
        recon_cmd->add_option("--from-imap", recon.from_imap, "calibrate this IMAP first");
    k_opt->excludes(imap_opt);
    imap_opt->excludes(k_opt);
    recon_cmd->add_flag("--asm", recon.use_asm, "use the centered 1-DoF mode with --from-imap");
    recon_cmd->add_option("--ref-depth", recon.ref_depth,
                          "reference DMAP for scale/shift alignment");
    recon_cmd->add_option("--align-mode", recon.align_mode,
                          "'affine' (scale+shift) or 'scale' (scale only)");
    recon_cmd->add_option("--out", recon.out, "output PLY path")->required();

    BenchmarkArgs bench;
    auto* bench_cmd = app.add_subcommand("benchmark", "synth/perturb/calibrate/score trial grid");
    bench_cmd->add_option("--fixtures", bench.fixtures, "comma-separated fixture names (default all)");
    bench_cmd->add_option("--noise-grid", bench.noise_grid,
                          "comma-separated sigma:frac pairs, e.g. 0.002:0,0.01:0.2");
    bench_cmd->add_option("--trials", bench.trials, "trials per (fixture, setting) cell");
    bench_cmd->add_option("--seed", bench.seed, "master seed");
    bench_cmd->add_option("--out", bench.out, "report JSON path (CSV twin written alongside)")
        ->required();
    bench_cmd->add_option("--size", bench.size, "override map geometry as WxH");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth_cmd->parsed()) {
            if (synth.fixture.empty() == synth.intrinsics_path.empty())
                throw incalib::ParseError("exactly one of --fixture / --intrinsics-json is required");
            return run_synth(synth);
        }
        if (perturb_cmd->parsed()) return run_perturb(perturb);
        if (calib_cmd->parsed()) return run_calibrate(calib);
        if (recon_cmd->parsed()) {
            if (recon.intrinsics_path.empty() == recon.from_imap.empty())
                throw incalib::ParseError("exactly one of --intrinsics / --from-imap is required");
            return run_reconstruct(recon);
        }
        if (bench_cmd->parsed()) return run_benchmark(bench);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
