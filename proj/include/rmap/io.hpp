#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rmap/errors.hpp"
#include "rmap/eval.hpp"
#include "rmap/inference.hpp"
#include "rmap/radiomap.hpp"
#include "rmap/sim.hpp"

namespace rmap::io {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// dataset directory format
//   meta.json          OFDM config, AP geometries, polygon, T, Q, seed
//   csi_ap<q>.bin      float32 little-endian interleaved (re, im),
//                      layout [T][N_ant][N_sub]
//   groundtruth.csv    optional, columns t,x,y
// ---------------------------------------------------------------------------

struct Dataset {
    std::vector<std::vector<CsiMatrix>> csi;  // [q][t]
    OfdmConfig config;
    std::vector<ArrayGeometry> aps;
    Polygon region;
    double v_max_mps = 0.0;
    double noise_std = 0.0;
    std::uint64_t seed = 0;
    bool random_phase = false;
    std::optional<std::vector<Vec2>> groundtruth;

    int t_steps() const { return csi.empty() ? 0 : static_cast<int>(csi[0].size()); }
    int n_aps() const { return static_cast<int>(csi.size()); }
};

inline json geometry_to_json(const ArrayGeometry& g) {
    json j;
    j["position"] = {g.ap_position.x(), g.ap_position.y()};
    j["orientation_rad"] = g.orientation_rad;
    j["rotation"] = {{g.rotation(0, 0), g.rotation(0, 1)}, {g.rotation(1, 0), g.rotation(1, 1)}};
    json elems = json::array();
    for (const auto& e : g.element_positions) elems.push_back({e.x(), e.y()});
    j["elements"] = elems;
    return j;
}

inline ArrayGeometry geometry_from_json(const json& j) {
    ArrayGeometry g;
    g.ap_position = Vec2(j.at("position")[0].get<double>(), j.at("position")[1].get<double>());
    g.orientation_rad = j.at("orientation_rad").get<double>();
    const auto& r = j.at("rotation");
    g.rotation << r[0][0].get<double>(), r[0][1].get<double>(), r[1][0].get<double>(),
        r[1][1].get<double>();
    for (const auto& e : j.at("elements"))
        g.element_positions.emplace_back(e[0].get<double>(), e[1].get<double>());
    return g;
}

inline void write_csi_bin(const fs::path& path, const std::vector<CsiMatrix>& seq) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    for (const CsiMatrix& h : seq) {
        for (int a = 0; a < h.n_ant(); ++a)
            for (int s = 0; s < h.n_sub(); ++s) {
                const float re = static_cast<float>(h.entries(a, s).real());
                const float im = static_cast<float>(h.entries(a, s).imag());
                out.write(reinterpret_cast<const char*>(&re), sizeof(float));
                out.write(reinterpret_cast<const char*>(&im), sizeof(float));
            }
    }
    if (!out) throw DataError("write failed: " + path.string());
}

inline std::vector<CsiMatrix> read_csi_bin(const fs::path& path, int t_steps, int n_ant,
                                           int n_sub, int ap_index) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open: " + path.string());
    std::vector<CsiMatrix> seq;
    seq.reserve(t_steps);
    for (int t = 0; t < t_steps; ++t) {
        CsiMatrix h;
        h.ap_index = ap_index;
        h.time_index = t;
        h.entries.resize(n_ant, n_sub);
        for (int a = 0; a < n_ant; ++a)
            for (int s = 0; s < n_sub; ++s) {
                float re = 0.0f, im = 0.0f;
                in.read(reinterpret_cast<char*>(&re), sizeof(float));
                in.read(reinterpret_cast<char*>(&im), sizeof(float));
                h.entries(a, s) = std::complex<double>(re, im);
            }
        if (!in) throw DataError("truncated CSI file: " + path.string());
        seq.push_back(std::move(h));
    }
    return seq;
}

inline std::vector<Vec2> read_positions_csv(const fs::path& path);

inline void write_dataset(const fs::path& dir, const GroundTruthDataset& ds,
                          bool with_groundtruth = true) {
    fs::create_directories(dir);
    json meta;
    meta["format"] = "rmap-dataset-v1";
    meta["seed"] = ds.seed;
    meta["T"] = ds.t_steps();
    meta["Q"] = ds.n_aps();
    meta["v_max_mps"] = ds.v_max_mps;
    meta["noise_std"] = ds.noise_std;
    meta["random_phase"] = ds.random_phase;
    meta["ofdm"] = {{"carrier_freq_hz", ds.config.carrier_freq_hz},
                    {"bandwidth_hz", ds.config.bandwidth_hz},
                    {"n_subcarriers", ds.config.n_subcarriers},
                    {"subcarrier_spacing_hz", ds.config.subcarrier_spacing_hz},
                    {"sample_interval_s", ds.config.sample_interval_s}};
    json aps = json::array();
    for (const auto& ap : ds.scene.aps) aps.push_back(geometry_to_json(ap));
    meta["aps"] = aps;
    json poly = json::array();
    for (const auto& v : ds.scene.walkable_region.vertices()) poly.push_back({v.x(), v.y()});
    meta["polygon"] = poly;

    std::ofstream mf(dir / "meta.json");
    mf << meta.dump(2) << "\n";
    if (!mf) throw DataError("cannot write meta.json in " + dir.string());

    for (int q = 0; q < ds.n_aps(); ++q)
        write_csi_bin(dir / ("csi_ap" + std::to_string(q) + ".bin"), ds.csi[q]);

    if (with_groundtruth) {
        std::ofstream gt(dir / "groundtruth.csv");
        gt << "t,x,y\n";
        gt << std::setprecision(17);
        for (int t = 0; t < ds.t_steps(); ++t)
            gt << t << "," << ds.positions[t].x() << "," << ds.positions[t].y() << "\n";
        if (!gt) throw DataError("cannot write groundtruth.csv in " + dir.string());
    }
}

inline Dataset read_dataset(const fs::path& dir) {
    const fs::path meta_path = dir / "meta.json";
    std::ifstream mf(meta_path);
    if (!mf) throw DataError("missing meta.json in dataset directory " + dir.string());
    json meta;
    try {
        mf >> meta;
    } catch (const json::exception& e) {
        throw DataError("malformed meta.json: " + std::string(e.what()));
    }

    Dataset ds;
    try {
        const auto& ofdm = meta.at("ofdm");
        ds.config = OfdmConfig::make(
            ofdm.at("carrier_freq_hz").get<double>(), ofdm.at("bandwidth_hz").get<double>(),
            ofdm.at("n_subcarriers").get<int>(), ofdm.at("sample_interval_s").get<double>());
        ds.seed = meta.at("seed").get<std::uint64_t>();
        ds.v_max_mps = meta.at("v_max_mps").get<double>();
        ds.noise_std = meta.value("noise_std", 0.0);
        ds.random_phase = meta.value("random_phase", false);
        for (const auto& j : meta.at("aps")) ds.aps.push_back(geometry_from_json(j));
        std::vector<Vec2> verts;
        for (const auto& v : meta.at("polygon")) verts.emplace_back(v[0].get<double>(), v[1].get<double>());
        ds.region = Polygon(std::move(verts));

        const int t_steps = meta.at("T").get<int>();
        const int n_aps = meta.at("Q").get<int>();
        for (int q = 0; q < n_aps; ++q) {
            const fs::path bin = dir / ("csi_ap" + std::to_string(q) + ".bin");
            ds.csi.push_back(read_csi_bin(bin, t_steps, static_cast<int>(ds.aps[q].n_ant()),
                                          ds.config.n_subcarriers, q));
        }
    } catch (const json::exception& e) {
        throw DataError("meta.json missing fields: " + std::string(e.what()));
    }

    const fs::path gt = dir / "groundtruth.csv";
    if (fs::exists(gt)) ds.groundtruth = read_positions_csv(gt);
    return ds;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open: " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

inline std::vector<Vec2> read_positions_csv(const fs::path& path) {
    const auto rows = read_csv(path);
    std::vector<Vec2> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {  // skip header
        if (rows[i].size() < 3) throw DataError("bad row in " + path.string());
        out.emplace_back(std::stod(rows[i][1]), std::stod(rows[i][2]));
    }
    return out;
}

inline void write_trajectory_csv(const fs::path& path, const Trajectory& traj) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << "t,node_index,x,y\n" << std::setprecision(17);
    for (int t = 0; t < traj.t_steps(); ++t)
        out << t << "," << traj.node_indices[t] << "," << traj.coordinates[t].x() << ","
            << traj.coordinates[t].y() << "\n";
}

inline Trajectory read_trajectory_csv(const fs::path& path, const SpatialGraph& graph) {
    const auto rows = read_csv(path);
    Trajectory traj;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() < 4) throw DataError("bad row in " + path.string());
        traj.node_indices.push_back(std::stoi(rows[i][1]));
        traj.coordinates.emplace_back(std::stod(rows[i][2]), std::stod(rows[i][3]));
    }
    for (int idx : traj.node_indices)
        if (idx < 0 || idx >= graph.n_nodes())
            throw DataError("trajectory node index out of range in " + path.string());
    return traj;
}

inline void write_trace_csv(const fs::path& path, const std::vector<double>& trace) {
    std::ofstream out(path);
    out << "iter,objective\n" << std::setprecision(17);
    for (std::size_t i = 0; i < trace.size(); ++i) out << i << "," << trace[i] << "\n";
    if (!out) throw DataError("cannot write " + path.string());
}

inline void write_graph_csv(const fs::path& nodes_path, const fs::path& edges_path,
                            const SpatialGraph& graph) {
    std::ofstream nf(nodes_path);
    nf << "node_index,x,y\n" << std::setprecision(17);
    for (int i = 0; i < graph.n_nodes(); ++i)
        nf << i << "," << graph.nodes[i].x() << "," << graph.nodes[i].y() << "\n";
    std::ofstream ef(edges_path);
    ef << "i,j,transition_prob\n" << std::setprecision(17);
    for (int i = 0; i < graph.n_nodes(); ++i)
        for (std::size_t k = 0; k < graph.edges[i].size(); ++k)
            ef << i << "," << graph.edges[i][k] << "," << graph.transitions[i][k] << "\n";
    if (!nf || !ef) throw DataError("cannot write graph CSVs");
}

inline void write_eta_diagnostics_csv(const fs::path& path,
                                      const std::vector<EtaCandidateDiagnostics>& diags) {
    std::ofstream out(path);
    out << "eta,score,normalized_objective,mean_padp_residual,objective,iterations,converged,"
           "failed,fail_reason\n"
        << std::setprecision(17);
    for (const auto& d : diags)
        out << d.eta << "," << d.score << "," << d.normalized_objective << ","
            << d.mean_padp_residual << "," << d.objective << "," << d.iterations << ","
            << (d.converged ? 1 : 0) << "," << (d.failed ? 1 : 0) << "," << d.fail_reason << "\n";
    if (!out) throw DataError("cannot write " + path.string());
}

// ---------------------------------------------------------------------------
// params.json / metrics.json
// ---------------------------------------------------------------------------

inline void write_params_json(const fs::path& path, const PropagationParams& params, double eta) {
    json j;
    j["eta"] = eta;
    j["sigma_theta_sq"] = params.sigma_theta_sq;
    j["d0"] = params.d0;
    j["eps_d"] = params.eps_d;
    j["gamma_min"] = params.gamma_min;
    json aps = json::array();
    for (const auto& a : params.ap)
        aps.push_back({{"beta_db", a.beta_db},
                       {"alpha", a.alpha},
                       {"sigma_s_sq", a.sigma_s_sq},
                       {"gamma1", a.gamma1},
                       {"gamma2", a.gamma2},
                       {"sigma0_sq", a.sigma0_sq}});
    j["aps"] = aps;
    std::ofstream out(path);
    out << j.dump(2) << "\n";
    if (!out) throw DataError("cannot write " + path.string());
}

inline PropagationParams read_params_json(const fs::path& path, double* eta_out = nullptr) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open: " + path.string());
    json j;
    in >> j;
    PropagationParams p;
    p.sigma_theta_sq = j.at("sigma_theta_sq").get<double>();
    p.d0 = j.at("d0").get<double>();
    p.eps_d = j.at("eps_d").get<double>();
    p.gamma_min = j.at("gamma_min").get<double>();
    for (const auto& a : j.at("aps")) {
        ApParams ap;
        ap.beta_db = a.at("beta_db").get<double>();
        ap.alpha = a.at("alpha").get<double>();
        ap.sigma_s_sq = a.at("sigma_s_sq").get<double>();
        ap.gamma1 = a.at("gamma1").get<double>();
        ap.gamma2 = a.at("gamma2").get<double>();
        ap.sigma0_sq = a.at("sigma0_sq").get<double>();
        p.ap.push_back(ap);
    }
    if (eta_out) *eta_out = j.at("eta").get<double>();
    return p;
}

inline void write_metrics_json(const fs::path& path, const MetricsReport& m, const json& config_echo) {
    json j;
    j["e_loc_m"] = m.e_loc_m;
    j["e_beam_pct"] = m.e_beam_pct;
    j["e_rmse_pct"] = m.e_rmse_pct;
    j["e_cd"] = m.e_cd;
    j["per_ap"] = {{"e_beam_pct", m.per_ap_e_beam_pct},
                   {"e_rmse_pct", m.per_ap_e_rmse_pct},
                   {"e_cd", m.per_ap_e_cd}};
    j["config"] = config_echo;
    std::ofstream out(path);
    out << j.dump(2) << "\n";
    if (!out) throw DataError("cannot write " + path.string());
}

// ---------------------------------------------------------------------------
// radio map exports: per-AP CSVs, channel/PADP binaries, PGM heatmaps
// ---------------------------------------------------------------------------

// Maps node coordinates back onto the build_nodes() grid for rasterization.
struct GridIndexer {
    Vec2 lo;
    double spacing = 0.0;
    int nx = 0;
    int ny = 0;

    GridIndexer(const Polygon& region, double spacing_m) : spacing(spacing_m) {
        Vec2 hi;
        region.bounding_box(lo, hi);
        nx = static_cast<int>(std::floor((hi.x() - lo.x()) / spacing_m + 1e-12));
        ny = static_cast<int>(std::floor((hi.y() - lo.y()) / spacing_m + 1e-12));
    }

    int x_index(const Vec2& p) const {
        return static_cast<int>(std::round((p.x() - lo.x()) / spacing - 0.5));
    }
    int y_index(const Vec2& p) const {
        return static_cast<int>(std::round((p.y() - lo.y()) / spacing - 0.5));
    }
};

// 8-bit binary PGM with min-max scaling; uncovered cells are 0. Row 0 of the
// image is the northernmost (max-y) grid row. Returns {min, max} used.
inline std::pair<double, double> write_pgm_heatmap(const fs::path& path, const GridIndexer& grid,
                                                   const std::vector<Vec2>& coords,
                                                   const std::vector<double>& values) {
    if (coords.size() != values.size()) throw DataError("write_pgm_heatmap: length mismatch");
    double vmin = std::numeric_limits<double>::max();
    double vmax = -vmin;
    for (double v : values) {
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
    }
    if (values.empty()) vmin = vmax = 0.0;
    const double span = vmax > vmin ? vmax - vmin : 1.0;

    std::vector<std::uint8_t> img(static_cast<std::size_t>(grid.nx) * grid.ny, 0);
    for (std::size_t i = 0; i < coords.size(); ++i) {
        const int ix = grid.x_index(coords[i]);
        const int iy = grid.y_index(coords[i]);
        if (ix < 0 || ix >= grid.nx || iy < 0 || iy >= grid.ny) continue;
        const int row = grid.ny - 1 - iy;
        const double scaled = 1.0 + 254.0 * (values[i] - vmin) / span;
        img[static_cast<std::size_t>(row) * grid.nx + ix] = static_cast<std::uint8_t>(scaled);
    }
    std::ofstream out(path, std::ios::binary);
    out << "P5\n" << grid.nx << " " << grid.ny << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data()), static_cast<std::streamsize>(img.size()));
    if (!out) throw DataError("cannot write " + path.string());
    return {vmin, vmax};
}

inline void write_radiomap(const fs::path& dir, const RadioMap& map, const Polygon& region,
                           double grid_spacing) {
    fs::create_directories(dir);
    const GridIndexer grid(region, grid_spacing);
    json sidecar;
    sidecar["grid"] = {{"origin", {grid.lo.x(), grid.lo.y()}},
                       {"spacing_m", grid.spacing},
                       {"nx", grid.nx},
                       {"ny", grid.ny}};
    sidecar["bandwidth_m"] = map.bandwidth_m;
    sidecar["coverage_threshold"] = map.coverage_threshold;

    std::vector<Vec2> cov_coords;
    for (int idx : map.covered_nodes) cov_coords.push_back(map.node_coords[idx]);

    for (int q = 0; q < map.n_aps(); ++q) {
        const std::string tag = "_ap" + std::to_string(q);

        {
            std::ofstream out(dir / ("rss_map" + tag + ".csv"));
            out << "node_index,x,y,rss_db\n" << std::setprecision(17);
            for (int k = 0; k < map.n_covered(); ++k)
                out << map.covered_nodes[k] << "," << cov_coords[k].x() << "," << cov_coords[k].y()
                    << "," << map.rss_map[q][k] << "\n";
        }
        {
            std::ofstream out(dir / ("beam_map" + tag + ".csv"));
            out << "node_index,x,y,best_beam";
            const int n_beams = map.n_covered() ? static_cast<int>(map.beam_gain[q][0].size()) : 0;
            for (int b = 0; b < n_beams; ++b) out << ",gain_" << b;
            out << "\n" << std::setprecision(17);
            for (int k = 0; k < map.n_covered(); ++k) {
                out << map.covered_nodes[k] << "," << cov_coords[k].x() << "," << cov_coords[k].y()
                    << "," << map.best_beam_map[q][k];
                for (int b = 0; b < map.beam_gain[q][k].size(); ++b)
                    out << "," << map.beam_gain[q][k](b);
                out << "\n";
            }
        }
        {
            // PADP power per covered node (Frobenius norm); full profiles in the .bin
            std::ofstream out(dir / ("padp_map" + tag + ".csv"));
            out << "node_index,x,y,padp_norm\n" << std::setprecision(17);
            for (int k = 0; k < map.n_covered(); ++k)
                out << map.covered_nodes[k] << "," << cov_coords[k].x() << "," << cov_coords[k].y()
                    << "," << map.padp_map[q][k].norm() << "\n";
        }
        {
            std::ofstream out(dir / ("padp_map" + tag + ".bin"), std::ios::binary);
            for (int k = 0; k < map.n_covered(); ++k) {
                const Eigen::MatrixXd& p = map.padp_map[q][k];
                for (int r = 0; r < p.rows(); ++r)
                    for (int c = 0; c < p.cols(); ++c) {
                        const float v = static_cast<float>(p(r, c));
                        out.write(reinterpret_cast<const char*>(&v), sizeof(float));
                    }
            }
        }
        {
            std::ofstream out(dir / ("channel_map" + tag + ".bin"), std::ios::binary);
            for (int k = 0; k < map.n_covered(); ++k) {
                const Eigen::MatrixXcd& hmat = map.channel_map[q][k];
                for (int r = 0; r < hmat.rows(); ++r)
                    for (int c = 0; c < hmat.cols(); ++c) {
                        const float re = static_cast<float>(hmat(r, c).real());
                        const float im = static_cast<float>(hmat(r, c).imag());
                        out.write(reinterpret_cast<const char*>(&re), sizeof(float));
                        out.write(reinterpret_cast<const char*>(&im), sizeof(float));
                    }
            }
        }

        const auto rss_range =
            write_pgm_heatmap(dir / ("rss_map" + tag + ".pgm"), grid, cov_coords, map.rss_map[q]);
        std::vector<double> best_gain(map.n_covered());
        for (int k = 0; k < map.n_covered(); ++k)
            best_gain[k] = map.beam_gain[q][k](map.best_beam_map[q][k]);
        const auto beam_range = write_pgm_heatmap(dir / ("beam_gain" + tag + ".pgm"), grid,
                                                  cov_coords, best_gain);
        sidecar["maps"]["rss_map" + tag] = {{"min", rss_range.first}, {"max", rss_range.second}};
        sidecar["maps"]["beam_gain" + tag] = {{"min", beam_range.first},
                                              {"max", beam_range.second}};
        if (map.n_covered()) {
            sidecar["shapes"]["padp" + tag] = {map.padp_map[q][0].rows(),
                                               map.padp_map[q][0].cols()};
            sidecar["shapes"]["channel" + tag] = {map.channel_map[q][0].rows(),
                                                  map.channel_map[q][0].cols()};
        }
    }

    {
        std::ofstream out(dir / "covered_nodes.csv");
        out << "row,node_index,x,y\n" << std::setprecision(17);
        for (int k = 0; k < map.n_covered(); ++k)
            out << k << "," << map.covered_nodes[k] << "," << cov_coords[k].x() << ","
                << cov_coords[k].y() << "\n";
    }
    std::ofstream sf(dir / "maps_meta.json");
    sf << sidecar.dump(2) << "\n";
    if (!sf) throw DataError("cannot write maps_meta.json");
}

}  // namespace rmap::io
