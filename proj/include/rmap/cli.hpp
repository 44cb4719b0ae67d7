#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "rmap/eval.hpp"
#include "rmap/inference.hpp"
#include "rmap/io.hpp"
#include "rmap/radiomap.hpp"
#include "rmap/sim.hpp"

namespace rmap::cli {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitDataError = 3;
inline constexpr int kExitNumericError = 4;

// Flat experiment configuration. File values are overridden by CLI flags;
// unknown keys in the file are rejected.
struct RunConfig {
    // scene / simulation
    std::string scene = "lshape";       // "rect" | "lshape"
    double scene_extent_m = 14.0;       // outer extent
    double scene_arm_m = 7.0;           // L arm width (lshape only)
    int n_aps = 4;
    int n_ant = 8;
    int n_subcarriers = 1024;
    double bandwidth_hz = 50e6;
    double carrier_freq_hz = 1.272e9;
    double delta_s = 0.2;
    int t_steps = 500;
    double v_max_mps = 4.0;
    double noise_std = 2e-4;
    int n_scatterers = 8;
    double scatterer_reflectivity = 100.0;
    bool los_enabled = true;
    double los_clearance_m = 0.5;
    bool random_phase = true;
    std::uint64_t seed = 1;

    // graph / features / inference
    double grid_spacing_m = 0.5;
    double sigma_m = 0.0;  // 0 -> d_max / 2
    bool eta_auto = false;
    double eta = 3000.0;
    std::vector<double> eta_candidates = default_eta_candidates();
    int beam_width = 64;
    bool prune_enabled = false;
    int max_iters = 20;
    double rel_tol = 1e-6;
    int subcarrier_stride = 4;
    double dict_resolution_deg = 1.0;
    double dict_fov_deg = 180.0;
    int n_signal = 1;
    double eps_h = 1e-9;
    double eps_d = 1e-9;
    double gamma_min = 1e-6;
    double sigma_theta_floor = 1e-4;
    double sigma_s_floor = 1e-6;
    double sigma0_sq = 1e-4;
    int threads = 0;

    // radio map
    double bandwidth_h_m = 0.0;  // 0 -> grid spacing
    double eps_w = 1e-9;
    double coverage_threshold = 0.05;

    // evaluation
    double eps_e = 1e-9;

    void validate() const {
        if (scene != "rect" && scene != "lshape")
            throw ConfigError("config: scene must be 'rect' or 'lshape'");
        if (!(scene_extent_m > 0) || !(scene_arm_m > 0) || n_aps < 1 || n_ant < 1 ||
            n_subcarriers < 1 || !(bandwidth_hz > 0) || !(carrier_freq_hz > 0) ||
            !(delta_s > 0) || t_steps < 1 || !(v_max_mps >= 0) || !(noise_std >= 0) ||
            n_scatterers < 0)
            throw ConfigError("config: invalid scene/simulation values");
        if (!(grid_spacing_m > 0) || !(eta >= 0) || beam_width < 1 || max_iters < 0 ||
            !(rel_tol >= 0) || subcarrier_stride < 1 || !(dict_resolution_deg > 0) ||
            !(dict_fov_deg > 0) || n_signal < 1)
            throw ConfigError("config: invalid inference values");
        if (!(eps_h > 0) || !(eps_d > 0) || !(gamma_min > 0) || !(sigma_theta_floor > 0) ||
            !(sigma_s_floor > 0) || !(sigma0_sq > 0) || !(eps_w > 0) || !(eps_e > 0))
            throw ConfigError("config: epsilons and floors must be positive");
        if (!(bandwidth_h_m >= 0) || !(coverage_threshold >= 0))
            throw ConfigError("config: invalid map values");
        for (double c : eta_candidates)
            if (!(c >= 0)) throw ConfigError("config: eta candidates must be >= 0");
    }

    json to_json() const {
        json j;
        j["scene"] = scene;
        j["scene_extent_m"] = scene_extent_m;
        j["scene_arm_m"] = scene_arm_m;
        j["n_aps"] = n_aps;
        j["n_ant"] = n_ant;
        j["n_subcarriers"] = n_subcarriers;
        j["bandwidth_hz"] = bandwidth_hz;
        j["carrier_freq_hz"] = carrier_freq_hz;
        j["delta_s"] = delta_s;
        j["t_steps"] = t_steps;
        j["v_max_mps"] = v_max_mps;
        j["noise_std"] = noise_std;
        j["n_scatterers"] = n_scatterers;
        j["scatterer_reflectivity"] = scatterer_reflectivity;
        j["los_enabled"] = los_enabled;
        j["los_clearance_m"] = los_clearance_m;
        j["random_phase"] = random_phase;
        j["seed"] = seed;
        j["grid_spacing_m"] = grid_spacing_m;
        j["sigma_m"] = sigma_m;
        j["eta"] = eta_auto ? json("auto") : json(eta);
        j["eta_candidates"] = eta_candidates;
        j["beam_width"] = beam_width;
        j["prune_enabled"] = prune_enabled;
        j["max_iters"] = max_iters;
        j["rel_tol"] = rel_tol;
        j["subcarrier_stride"] = subcarrier_stride;
        j["dict_resolution_deg"] = dict_resolution_deg;
        j["dict_fov_deg"] = dict_fov_deg;
        j["n_signal"] = n_signal;
        j["eps_h"] = eps_h;
        j["eps_d"] = eps_d;
        j["gamma_min"] = gamma_min;
        j["sigma_theta_floor"] = sigma_theta_floor;
        j["sigma_s_floor"] = sigma_s_floor;
        j["sigma0_sq"] = sigma0_sq;
        j["threads"] = threads;
        j["bandwidth_h_m"] = bandwidth_h_m;
        j["eps_w"] = eps_w;
        j["coverage_threshold"] = coverage_threshold;
        j["eps_e"] = eps_e;
        return j;
    }
};

inline void apply_json(RunConfig& cfg, const json& j) {
    static const std::set<std::string> known = {
        "scene",          "scene_extent_m",   "scene_arm_m",      "n_aps",
        "n_ant",          "n_subcarriers",    "bandwidth_hz",     "carrier_freq_hz",
        "delta_s",        "t_steps",          "v_max_mps",        "noise_std",
        "n_scatterers",   "scatterer_reflectivity", "los_enabled", "los_clearance_m",
        "random_phase",   "seed",             "grid_spacing_m",   "sigma_m",
        "eta",            "eta_candidates",   "beam_width",       "prune_enabled",
        "max_iters",      "rel_tol",          "subcarrier_stride", "dict_resolution_deg",
        "dict_fov_deg",   "n_signal",         "eps_h",            "eps_d",
        "gamma_min",      "sigma_theta_floor", "sigma_s_floor",   "sigma0_sq",
        "threads",        "bandwidth_h_m",    "eps_w",            "coverage_threshold",
        "eps_e"};
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) throw ConfigError("config: unknown key '" + key + "'");
        try {
            if (key == "scene") cfg.scene = value.get<std::string>();
            else if (key == "scene_extent_m") cfg.scene_extent_m = value.get<double>();
            else if (key == "scene_arm_m") cfg.scene_arm_m = value.get<double>();
            else if (key == "n_aps") cfg.n_aps = value.get<int>();
            else if (key == "n_ant") cfg.n_ant = value.get<int>();
            else if (key == "n_subcarriers") cfg.n_subcarriers = value.get<int>();
            else if (key == "bandwidth_hz") cfg.bandwidth_hz = value.get<double>();
            else if (key == "carrier_freq_hz") cfg.carrier_freq_hz = value.get<double>();
            else if (key == "delta_s") cfg.delta_s = value.get<double>();
            else if (key == "t_steps") cfg.t_steps = value.get<int>();
            else if (key == "v_max_mps") cfg.v_max_mps = value.get<double>();
            else if (key == "noise_std") cfg.noise_std = value.get<double>();
            else if (key == "n_scatterers") cfg.n_scatterers = value.get<int>();
            else if (key == "scatterer_reflectivity") cfg.scatterer_reflectivity = value.get<double>();
            else if (key == "los_enabled") cfg.los_enabled = value.get<bool>();
            else if (key == "los_clearance_m") cfg.los_clearance_m = value.get<double>();
            else if (key == "random_phase") cfg.random_phase = value.get<bool>();
            else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
            else if (key == "grid_spacing_m") cfg.grid_spacing_m = value.get<double>();
            else if (key == "sigma_m") cfg.sigma_m = value.get<double>();
            else if (key == "eta") {
                if (value.is_string()) {
                    if (value.get<std::string>() != "auto")
                        throw ConfigError("config: eta must be a number or 'auto'");
                    cfg.eta_auto = true;
                } else {
                    cfg.eta_auto = false;
                    cfg.eta = value.get<double>();
                }
            } else if (key == "eta_candidates") {
                cfg.eta_candidates = value.get<std::vector<double>>();
            }
            else if (key == "beam_width") cfg.beam_width = value.get<int>();
            else if (key == "prune_enabled") cfg.prune_enabled = value.get<bool>();
            else if (key == "max_iters") cfg.max_iters = value.get<int>();
            else if (key == "rel_tol") cfg.rel_tol = value.get<double>();
            else if (key == "subcarrier_stride") cfg.subcarrier_stride = value.get<int>();
            else if (key == "dict_resolution_deg") cfg.dict_resolution_deg = value.get<double>();
            else if (key == "dict_fov_deg") cfg.dict_fov_deg = value.get<double>();
            else if (key == "n_signal") cfg.n_signal = value.get<int>();
            else if (key == "eps_h") cfg.eps_h = value.get<double>();
            else if (key == "eps_d") cfg.eps_d = value.get<double>();
            else if (key == "gamma_min") cfg.gamma_min = value.get<double>();
            else if (key == "sigma_theta_floor") cfg.sigma_theta_floor = value.get<double>();
            else if (key == "sigma_s_floor") cfg.sigma_s_floor = value.get<double>();
            else if (key == "sigma0_sq") cfg.sigma0_sq = value.get<double>();
            else if (key == "threads") cfg.threads = value.get<int>();
            else if (key == "bandwidth_h_m") cfg.bandwidth_h_m = value.get<double>();
            else if (key == "eps_w") cfg.eps_w = value.get<double>();
            else if (key == "coverage_threshold") cfg.coverage_threshold = value.get<double>();
            else if (key == "eps_e") cfg.eps_e = value.get<double>();
        } catch (const json::exception& e) {
            throw ConfigError("config: bad value for '" + key + "': " + e.what());
        }
    }
}

inline RunConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config: parse error in " + path.string() + ": " + e.what());
    }
    RunConfig cfg;
    apply_json(cfg, j);
    return cfg;
}

inline std::string config_hash(const json& j) {
    // FNV-1a over the canonical dump
    const std::string s = j.dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

inline Scene build_scene(const RunConfig& cfg) {
    const double lambda = kSpeedOfLight / cfg.carrier_freq_hz;
    Scene scene =
        cfg.scene == "rect"
            ? make_rect_scene(cfg.scene_extent_m, cfg.scene_extent_m, cfg.n_aps, cfg.n_ant, lambda,
                              cfg.n_scatterers, cfg.scatterer_reflectivity, cfg.seed + 77)
            : make_lshape_scene(cfg.scene_extent_m, cfg.scene_arm_m, cfg.n_aps, cfg.n_ant, lambda,
                                cfg.n_scatterers, cfg.scatterer_reflectivity, cfg.seed + 77);
    scene.los_enabled = cfg.los_enabled;
    scene.los_clearance_m = cfg.los_clearance_m;
    return scene;
}

inline FeatureConfig feature_config(const RunConfig& cfg) {
    FeatureConfig fc;
    fc.eps_h = cfg.eps_h;
    fc.subcarrier_stride = cfg.subcarrier_stride;
    fc.n_signal = cfg.n_signal;
    fc.dict_resolution_rad = cfg.dict_resolution_deg * M_PI / 180.0;
    fc.dict_fov_rad = cfg.dict_fov_deg * M_PI / 180.0;
    return fc;
}

inline InferenceConfig inference_config(const RunConfig& cfg) {
    InferenceConfig ic;
    ic.eta = cfg.eta;
    ic.beam_width = cfg.beam_width;
    ic.prune_enabled = cfg.prune_enabled;
    ic.max_iters = cfg.max_iters;
    ic.rel_tol = cfg.rel_tol;
    ic.sigma_theta_floor = cfg.sigma_theta_floor;
    ic.sigma_s_floor = cfg.sigma_s_floor;
    ic.sigma0_sq = cfg.sigma0_sq;
    return ic;
}

inline SpatialGraph graph_for_dataset(const io::Dataset& ds, const RunConfig& cfg) {
    const double d_max = ds.v_max_mps * ds.config.sample_interval_s;
    return build_graph(ds.region, cfg.grid_spacing_m, d_max, cfg.sigma_m);
}

inline PropagationParams apply_param_constants(PropagationParams p, const RunConfig& cfg) {
    p.eps_d = cfg.eps_d;
    p.gamma_min = cfg.gamma_min;
    return p;
}

// simulate: synthesize a dataset directory with meta.json, per-AP CSI
// binaries, groundtruth.csv, and a manifest.
inline int cmd_simulate(const RunConfig& cfg, const fs::path& out_dir) {
    cfg.validate();
    const Scene scene = build_scene(cfg);
    const OfdmConfig ofdm = OfdmConfig::make(cfg.carrier_freq_hz, cfg.bandwidth_hz,
                                             cfg.n_subcarriers, cfg.delta_s);
    const GroundTruthDataset ds =
        gen_dataset(scene, ofdm, cfg.t_steps, cfg.v_max_mps, cfg.noise_std, cfg.seed,
                    cfg.random_phase);
    io::write_dataset(out_dir, ds);

    json manifest;
    manifest["seed"] = cfg.seed;
    manifest["config"] = cfg.to_json();
    manifest["config_hash"] = config_hash(cfg.to_json());
    std::ofstream mf(out_dir / "manifest.json");
    mf << manifest.dump(2) << "\n";
    if (!mf) throw DataError("cannot write manifest.json");

    std::cout << "simulated T=" << ds.t_steps() << " Q=" << ds.n_aps() << " into " << out_dir
              << "\n";
    return kExitOk;
}

// infer: trajectory recovery. Never touches groundtruth.csv.
inline int cmd_infer(const fs::path& dataset_dir, const RunConfig& cfg, const fs::path& out_dir) {
    cfg.validate();
    io::Dataset ds = io::read_dataset(dataset_dir);
    const SpatialGraph graph = graph_for_dataset(ds, cfg);
    const FeatureConfig fc = feature_config(cfg);
    const auto dicts = make_dictionaries(ds.aps, ds.config.wavelength_m(), fc);
    const ObservationSequence obs = build_observations(ds.csi, dicts, fc, cfg.threads);
    const std::vector<Vec2> aps = ap_positions(ds.aps);

    fs::create_directories(out_dir);
    OptimizeResult result;
    double chosen_eta = cfg.eta;
    if (cfg.eta_auto) {
        const EtaSelection sel = select_eta(cfg.eta_candidates, obs, graph, aps,
                                            inference_config(cfg), cfg.threads);
        chosen_eta = sel.eta;
        result = sel.result;
        io::write_eta_diagnostics_csv(out_dir / "eta_diagnostics.csv", sel.diagnostics);
    } else {
        result = alternate_optimize(obs, graph, aps, inference_config(cfg), cfg.threads);
    }

    io::write_trajectory_csv(out_dir / "trajectory.csv", result.trajectory);
    io::write_params_json(out_dir / "params.json", apply_param_constants(result.params, cfg),
                          chosen_eta);
    io::write_trace_csv(out_dir / "objective_trace.csv", result.trace);
    io::write_graph_csv(out_dir / "graph_nodes.csv", out_dir / "graph_edges.csv", graph);

    json manifest;
    manifest["config"] = cfg.to_json();
    manifest["config_hash"] = config_hash(cfg.to_json());
    manifest["eta"] = chosen_eta;
    manifest["iterations"] = result.iterations;
    manifest["converged"] = result.converged;
    manifest["objective"] = result.objective;
    manifest["fit_warning"] = result.fit_warning;
    std::ofstream mf(out_dir / "infer_manifest.json");
    mf << manifest.dump(2) << "\n";

    std::cout << "inferred trajectory (eta=" << chosen_eta << ", objective=" << result.objective
              << ", iterations=" << result.iterations << ") into " << out_dir << "\n";
    return kExitOk;
}

// map: kernel-smoothed radio maps from the inferred trajectory.
inline int cmd_map(const fs::path& dataset_dir, const fs::path& infer_dir, const RunConfig& cfg,
                   const fs::path& out_dir) {
    cfg.validate();
    io::Dataset ds = io::read_dataset(dataset_dir);
    const SpatialGraph graph = graph_for_dataset(ds, cfg);
    const fs::path traj_path = infer_dir / "trajectory.csv";
    if (!fs::exists(traj_path))
        throw DataError("missing inference output: " + traj_path.string());
    const Trajectory traj = io::read_trajectory_csv(traj_path, graph);
    if (traj.t_steps() != ds.t_steps())
        throw DataError("trajectory length does not match dataset T");

    const FeatureConfig fc = feature_config(cfg);
    const auto dicts = make_dictionaries(ds.aps, ds.config.wavelength_m(), fc);
    ObservationSequence obs = build_observations(ds.csi, dicts, fc, cfg.threads);

    std::vector<BeamCodebook> codebooks;
    for (const auto& ap : ds.aps) codebooks.push_back(dft_codebook(ap.n_ant()));
    const double h = cfg.bandwidth_h_m > 0 ? cfg.bandwidth_h_m : cfg.grid_spacing_m;
    const RadioMap map = build_radiomap(traj, obs, ds.csi, dicts, fc, graph, h, cfg.eps_w,
                                        codebooks, cfg.coverage_threshold, cfg.threads);
    io::write_radiomap(out_dir, map, ds.region, cfg.grid_spacing_m);

    std::cout << "built radio maps for " << map.n_covered() << "/" << graph.n_nodes()
              << " nodes into " << out_dir << "\n";
    return kExitOk;
}

namespace detail_eval {

// Channel maps as written by write_radiomap, re-read for metric computation.
struct StoredMaps {
    std::vector<int> covered_nodes;
    std::vector<std::vector<Eigen::MatrixXcd>> channel;  // [q][k]
    std::vector<std::vector<Eigen::VectorXd>> beam_gain; // [q][k]
    std::vector<std::vector<int>> best_beam;             // [q][k]
};

inline StoredMaps read_maps(const fs::path& map_dir, int n_aps) {
    StoredMaps sm;
    std::ifstream metaf(map_dir / "maps_meta.json");
    if (!metaf) throw DataError("missing maps_meta.json in " + map_dir.string());
    json meta;
    metaf >> meta;

    const auto rows = io::read_csv(map_dir / "covered_nodes.csv");
    for (std::size_t i = 1; i < rows.size(); ++i)
        sm.covered_nodes.push_back(std::stoi(rows[i][1]));
    const int n_cov = static_cast<int>(sm.covered_nodes.size());

    sm.channel.resize(n_aps);
    sm.beam_gain.resize(n_aps);
    sm.best_beam.resize(n_aps);
    for (int q = 0; q < n_aps; ++q) {
        const std::string tag = "_ap" + std::to_string(q);
        const auto shape = meta.at("shapes").at("channel" + tag);
        const int rows_c = shape[0].get<int>();
        const int cols_c = shape[1].get<int>();
        std::ifstream bin(map_dir / ("channel_map" + tag + ".bin"), std::ios::binary);
        if (!bin) throw DataError("missing channel_map" + tag + ".bin");
        sm.channel[q].resize(n_cov);
        for (int k = 0; k < n_cov; ++k) {
            Eigen::MatrixXcd m(rows_c, cols_c);
            for (int r = 0; r < rows_c; ++r)
                for (int c = 0; c < cols_c; ++c) {
                    float re = 0.0f, im = 0.0f;
                    bin.read(reinterpret_cast<char*>(&re), sizeof(float));
                    bin.read(reinterpret_cast<char*>(&im), sizeof(float));
                    m(r, c) = std::complex<double>(re, im);
                }
            if (!bin) throw DataError("truncated channel_map" + tag + ".bin");
            sm.channel[q][k] = std::move(m);
        }

        const auto beam_rows = io::read_csv(map_dir / ("beam_map" + tag + ".csv"));
        sm.beam_gain[q].resize(n_cov);
        sm.best_beam[q].resize(n_cov);
        for (int k = 0; k < n_cov; ++k) {
            const auto& row = beam_rows.at(k + 1);
            sm.best_beam[q][k] = std::stoi(row.at(3));
            const int n_beams = static_cast<int>(row.size()) - 4;
            Eigen::VectorXd g(n_beams);
            for (int b = 0; b < n_beams; ++b) g(b) = std::stod(row.at(4 + b));
            sm.beam_gain[q][k] = g;
        }
    }
    return sm;
}

}  // namespace detail_eval

// eval: the four metrics against ground truth. Fails when groundtruth.csv is
// absent (evaluation requires ground truth).
inline int cmd_eval(const fs::path& dataset_dir, const fs::path& infer_dir,
                    const fs::path& map_dir, const RunConfig& cfg, const fs::path& out_path) {
    cfg.validate();
    io::Dataset ds = io::read_dataset(dataset_dir);
    if (!ds.groundtruth)
        throw DataError("evaluation requires ground truth: groundtruth.csv not found in " +
                        dataset_dir.string());
    const std::vector<Vec2>& truth = *ds.groundtruth;
    const SpatialGraph graph = graph_for_dataset(ds, cfg);
    const Trajectory traj = io::read_trajectory_csv(infer_dir / "trajectory.csv", graph);
    if (traj.t_steps() != static_cast<int>(truth.size()))
        throw DataError("trajectory/groundtruth length mismatch");

    MetricsReport report;
    report.e_loc_m = e_loc(traj.coordinates, truth);

    const int n_aps = ds.n_aps();
    const detail_eval::StoredMaps maps = detail_eval::read_maps(map_dir, n_aps);
    if (maps.covered_nodes.empty()) throw DataError("radio map has no covered nodes");

    // nearest covered node to each true position
    std::vector<int> node_row(truth.size());
    for (std::size_t t = 0; t < truth.size(); ++t) {
        int best = 0;
        double best_d = std::numeric_limits<double>::max();
        for (std::size_t k = 0; k < maps.covered_nodes.size(); ++k) {
            const double d = (graph.nodes[maps.covered_nodes[k]] - truth[t]).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(k);
            }
        }
        node_row[t] = best;
    }

    const FeatureConfig fc = feature_config(cfg);
    const auto dicts = make_dictionaries(ds.aps, ds.config.wavelength_m(), fc);
    const int t_steps = ds.t_steps();
    report.per_ap_e_beam_pct.resize(n_aps);
    report.per_ap_e_rmse_pct.resize(n_aps);
    report.per_ap_e_cd.resize(n_aps);

    for (int q = 0; q < n_aps; ++q) {
        const BeamCodebook cb = dft_codebook(ds.aps[q].n_ant());
        std::vector<double> ref_gain(t_steps), est_gain(t_steps);
        std::vector<Eigen::MatrixXcd> ref_csi(t_steps), est_csi(t_steps);
        std::vector<int> ap_of(t_steps, q);
        for (int t = 0; t < t_steps; ++t) {
            const Eigen::MatrixXcd href = phase_normalize(ds.csi[q][t]).entries;
            const int k = node_row[t];
            ref_csi[t] = href;
            est_csi[t] = maps.channel[q][k];
            const Eigen::VectorXd gains = beam_gain_map(href, cb);
            ref_gain[t] = gains(best_beam(gains));
            est_gain[t] = maps.beam_gain[q][k](maps.best_beam[q][k]);
        }
        report.per_ap_e_beam_pct[q] = e_beam(ref_gain, est_gain, cfg.eps_e);
        report.per_ap_e_rmse_pct[q] = e_rmse(ref_csi, est_csi);
        report.per_ap_e_cd[q] = e_cd(ref_csi, est_csi, ap_of, dicts, fc);
        report.e_beam_pct += report.per_ap_e_beam_pct[q] / n_aps;
        report.e_rmse_pct += report.per_ap_e_rmse_pct[q] / n_aps;
        report.e_cd += report.per_ap_e_cd[q] / n_aps;
    }

    io::write_metrics_json(out_path, report, cfg.to_json());
    std::cout << "E_loc=" << report.e_loc_m << " m, E_Beam=" << report.e_beam_pct
              << "%, E_RMSE=" << report.e_rmse_pct << "%, E_CD=" << report.e_cd << " -> "
              << out_path << "\n";
    return kExitOk;
}

// Maps library exceptions onto the documented exit codes.
template <typename Fn>
int guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitDataError;
    } catch (const NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumericError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumericError;
    }
}

}  // namespace rmap::cli
