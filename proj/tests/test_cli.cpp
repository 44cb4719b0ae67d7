#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "rmap/cli.hpp"

using namespace rmap;
namespace fs = std::filesystem;
using Catch::Approx;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("rmap_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

cli::RunConfig tiny_config() {
    cli::RunConfig cfg;
    cfg.scene = "rect";
    cfg.scene_extent_m = 5.0;
    cfg.n_aps = 2;
    cfg.n_ant = 4;
    cfg.n_subcarriers = 16;
    cfg.delta_s = 0.5;
    cfg.t_steps = 20;
    cfg.v_max_mps = 1.2;
    cfg.noise_std = 1e-4;
    cfg.n_scatterers = 2;
    cfg.scatterer_reflectivity = 50.0;
    cfg.seed = 77;
    cfg.grid_spacing_m = 0.5;
    cfg.eta = 100.0;
    cfg.eta_auto = false;
    cfg.max_iters = 4;
    cfg.subcarrier_stride = 1;
    cfg.dict_resolution_deg = 3.0;
    return cfg;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("config file parsing") {
    const fs::path dir = fresh_dir("config");

    SECTION("unknown keys are rejected") {
        std::ofstream(dir / "bad.json") << R"({"grid_spacing_m": 0.5, "not_a_key": 1})";
        REQUIRE_THROWS_AS(cli::load_config(dir / "bad.json"), ConfigError);
    }
    SECTION("eta accepts a number or 'auto'") {
        std::ofstream(dir / "auto.json") << R"({"eta": "auto"})";
        REQUIRE(cli::load_config(dir / "auto.json").eta_auto);
        std::ofstream(dir / "num.json") << R"({"eta": 250.0})";
        const auto cfg = cli::load_config(dir / "num.json");
        REQUIRE_FALSE(cfg.eta_auto);
        REQUIRE(cfg.eta == 250.0);
        std::ofstream(dir / "badeta.json") << R"({"eta": "sometimes"})";
        REQUIRE_THROWS_AS(cli::load_config(dir / "badeta.json"), ConfigError);
    }
    SECTION("malformed JSON is a config error") {
        std::ofstream(dir / "broken.json") << "{ not json";
        REQUIRE_THROWS_AS(cli::load_config(dir / "broken.json"), ConfigError);
    }
    SECTION("invalid values fail validation") {
        cli::RunConfig cfg = tiny_config();
        cfg.grid_spacing_m = -1.0;
        REQUIRE_THROWS_AS(cfg.validate(), ConfigError);
        cfg = tiny_config();
        cfg.scene = "dodecahedron";
        REQUIRE_THROWS_AS(cfg.validate(), ConfigError);
    }
}

TEST_CASE("cmd_simulate writes the documented dataset layout") {
    const fs::path out = fresh_dir("simulate");
    const cli::RunConfig cfg = tiny_config();
    REQUIRE(cli::cmd_simulate(cfg, out) == cli::kExitOk);
    REQUIRE(fs::exists(out / "meta.json"));
    REQUIRE(fs::exists(out / "csi_ap0.bin"));
    REQUIRE(fs::exists(out / "csi_ap1.bin"));
    REQUIRE(fs::exists(out / "groundtruth.csv"));
    REQUIRE(fs::exists(out / "manifest.json"));

    // T rows (plus header) in groundtruth.csv
    const auto rows = io::read_csv(out / "groundtruth.csv");
    REQUIRE(static_cast<int>(rows.size()) == cfg.t_steps + 1);

    // binary size = T * n_ant * n_sub * 2 floats
    const auto size = fs::file_size(out / "csi_ap0.bin");
    REQUIRE(size == static_cast<std::uintmax_t>(cfg.t_steps) * cfg.n_ant * cfg.n_subcarriers * 8);

    // determinism: identical bytes on a rerun
    const fs::path out2 = fresh_dir("simulate2");
    REQUIRE(cli::cmd_simulate(cfg, out2) == cli::kExitOk);
    REQUIRE(slurp(out / "csi_ap0.bin") == slurp(out2 / "csi_ap0.bin"));
    REQUIRE(slurp(out / "groundtruth.csv") == slurp(out2 / "groundtruth.csv"));
}

TEST_CASE("infer / map / eval round trip with the documented artifacts") {
    const fs::path ds_dir = fresh_dir("pipe_ds");
    const fs::path inf_dir = fresh_dir("pipe_inf");
    const fs::path map_dir = fresh_dir("pipe_map");
    cli::RunConfig cfg = tiny_config();
    REQUIRE(cli::cmd_simulate(cfg, ds_dir) == cli::kExitOk);
    REQUIRE(cli::cmd_infer(ds_dir, cfg, inf_dir) == cli::kExitOk);
    REQUIRE(fs::exists(inf_dir / "trajectory.csv"));
    REQUIRE(fs::exists(inf_dir / "params.json"));
    REQUIRE(fs::exists(inf_dir / "objective_trace.csv"));

    const auto traj_rows = io::read_csv(inf_dir / "trajectory.csv");
    REQUIRE(static_cast<int>(traj_rows.size()) == cfg.t_steps + 1);

    // rerun determinism
    const fs::path inf_dir2 = fresh_dir("pipe_inf2");
    REQUIRE(cli::cmd_infer(ds_dir, cfg, inf_dir2) == cli::kExitOk);
    REQUIRE(slurp(inf_dir / "trajectory.csv") == slurp(inf_dir2 / "trajectory.csv"));

    REQUIRE(cli::cmd_map(ds_dir, inf_dir, cfg, map_dir) == cli::kExitOk);
    for (int q = 0; q < cfg.n_aps; ++q) {
        REQUIRE(fs::exists(map_dir / ("rss_map_ap" + std::to_string(q) + ".csv")));
        REQUIRE(fs::exists(map_dir / ("beam_map_ap" + std::to_string(q) + ".csv")));
        REQUIRE(fs::exists(map_dir / ("padp_map_ap" + std::to_string(q) + ".bin")));
        REQUIRE(fs::exists(map_dir / ("channel_map_ap" + std::to_string(q) + ".bin")));
        REQUIRE(fs::exists(map_dir / ("rss_map_ap" + std::to_string(q) + ".pgm")));
    }

    // PGM header: P5 with the grid dimensions
    {
        std::ifstream pgm(map_dir / "rss_map_ap0.pgm", std::ios::binary);
        std::string magic;
        int w = 0, hgt = 0, maxval = 0;
        pgm >> magic >> w >> hgt >> maxval;
        REQUIRE(magic == "P5");
        REQUIRE(w == 10);  // 5 m / 0.5 m
        REQUIRE(hgt == 10);
        REQUIRE(maxval == 255);
    }

    // map CSV values equal the library RadioMap fields
    {
        io::Dataset ds = io::read_dataset(ds_dir);
        const SpatialGraph graph = cli::graph_for_dataset(ds, cfg);
        const Trajectory traj = io::read_trajectory_csv(inf_dir / "trajectory.csv", graph);
        const FeatureConfig fc = cli::feature_config(cfg);
        const auto dicts = make_dictionaries(ds.aps, ds.config.wavelength_m(), fc);
        const auto obs = build_observations(ds.csi, dicts, fc);
        std::vector<BeamCodebook> cbs;
        for (const auto& ap : ds.aps) cbs.push_back(dft_codebook(ap.n_ant()));
        const RadioMap map = build_radiomap(traj, obs, ds.csi, dicts, fc, graph,
                                            cfg.grid_spacing_m, cfg.eps_w, cbs,
                                            cfg.coverage_threshold);
        const auto rss_rows = io::read_csv(map_dir / "rss_map_ap0.csv");
        REQUIRE(static_cast<int>(rss_rows.size()) == map.n_covered() + 1);
        for (int k = 0; k < map.n_covered(); ++k) {
            REQUIRE(std::stoi(rss_rows[k + 1][0]) == map.covered_nodes[k]);
            REQUIRE(std::stod(rss_rows[k + 1][3]) == Approx(map.rss_map[0][k]).epsilon(1e-12));
        }
    }

    const fs::path metrics = fresh_dir("pipe_metrics") / "metrics.json";
    REQUIRE(cli::cmd_eval(ds_dir, inf_dir, map_dir, cfg, metrics) == cli::kExitOk);
    std::ifstream mf(metrics);
    nlohmann::json mj;
    mf >> mj;
    REQUIRE(mj.contains("e_loc_m"));
    REQUIRE(mj.contains("e_beam_pct"));
    REQUIRE(mj.contains("e_rmse_pct"));
    REQUIRE(mj.contains("e_cd"));
    REQUIRE(mj.contains("per_ap"));
    REQUIRE(mj.contains("config"));
    REQUIRE(mj["e_loc_m"].get<double>() >= 0.0);
}

TEST_CASE("eta=0 with max_iters=0 is the plain initialization decode") {
    const fs::path ds_dir = fresh_dir("init_ds");
    const fs::path inf_dir = fresh_dir("init_inf");
    cli::RunConfig cfg = tiny_config();
    cfg.eta = 0.0;
    cfg.max_iters = 0;
    REQUIRE(cli::cmd_simulate(cfg, ds_dir) == cli::kExitOk);
    REQUIRE(cli::cmd_infer(ds_dir, cfg, inf_dir) == cli::kExitOk);

    io::Dataset ds = io::read_dataset(ds_dir);
    const SpatialGraph graph = cli::graph_for_dataset(ds, cfg);
    const FeatureConfig fc = cli::feature_config(cfg);
    const auto dicts = make_dictionaries(ds.aps, ds.config.wavelength_m(), fc);
    const auto obs = build_observations(ds.csi, dicts, fc);
    const OptimizeResult direct =
        alternate_optimize(obs, graph, ap_positions(ds.aps), cli::inference_config(cfg));

    const Trajectory from_cli = io::read_trajectory_csv(inf_dir / "trajectory.csv", graph);
    REQUIRE(from_cli.node_indices == direct.trajectory.node_indices);
}

TEST_CASE("annotation-free guarantee and eval's ground-truth requirement") {
    const fs::path ds_dir = fresh_dir("af_ds");
    const fs::path inf_dir = fresh_dir("af_inf");
    const fs::path map_dir = fresh_dir("af_map");
    cli::RunConfig cfg = tiny_config();
    REQUIRE(cli::cmd_simulate(cfg, ds_dir) == cli::kExitOk);
    fs::remove(ds_dir / "groundtruth.csv");

    REQUIRE(cli::cmd_infer(ds_dir, cfg, inf_dir) == cli::kExitOk);
    REQUIRE(cli::cmd_map(ds_dir, inf_dir, cfg, map_dir) == cli::kExitOk);

    const int code = cli::guarded([&] {
        return cli::cmd_eval(ds_dir, inf_dir, map_dir, cfg, map_dir / "metrics.json");
    });
    REQUIRE(code == cli::kExitDataError);
}

TEST_CASE("eval is exact when the estimate equals the truth") {
    const fs::path ds_dir = fresh_dir("exact_ds");
    const fs::path inf_dir = fresh_dir("exact_inf");
    const fs::path map_dir = fresh_dir("exact_map");
    cli::RunConfig cfg = tiny_config();
    REQUIRE(cli::cmd_simulate(cfg, ds_dir) == cli::kExitOk);

    // inject the ground truth as the inferred trajectory
    io::Dataset ds = io::read_dataset(ds_dir);
    const SpatialGraph graph = cli::graph_for_dataset(ds, cfg);
    Trajectory truth_traj;
    for (const Vec2& p : *ds.groundtruth) {
        truth_traj.node_indices.push_back(graph.nearest_node(p));
        truth_traj.coordinates.push_back(p);
    }
    fs::create_directories(inf_dir);
    io::write_trajectory_csv(inf_dir / "trajectory.csv", truth_traj);

    REQUIRE(cli::cmd_map(ds_dir, inf_dir, cfg, map_dir) == cli::kExitOk);
    const fs::path metrics = inf_dir / "metrics.json";
    REQUIRE(cli::cmd_eval(ds_dir, inf_dir, map_dir, cfg, metrics) == cli::kExitOk);
    std::ifstream mf(metrics);
    nlohmann::json mj;
    mf >> mj;
    REQUIRE(mj["e_loc_m"].get<double>() == 0.0);
}

TEST_CASE("exit codes for bad inputs") {
    cli::RunConfig cfg = tiny_config();

    SECTION("missing dataset directory is a data error") {
        const int code = cli::guarded(
            [&] { return cli::cmd_infer("/nonexistent/dataset", cfg, fresh_dir("x1")); });
        REQUIRE(code == cli::kExitDataError);
    }
    SECTION("invalid config is a config error") {
        cli::RunConfig bad = cfg;
        bad.beam_width = 0;
        const int code =
            cli::guarded([&] { return cli::cmd_simulate(bad, fresh_dir("x2")); });
        REQUIRE(code == cli::kExitConfigError);
    }
    SECTION("missing inference outputs are a data error") {
        const fs::path ds_dir = fresh_dir("x3_ds");
        REQUIRE(cli::cmd_simulate(cfg, ds_dir) == cli::kExitOk);
        const int code = cli::guarded(
            [&] { return cli::cmd_map(ds_dir, fresh_dir("x3_empty"), cfg, fresh_dir("x3_map")); });
        REQUIRE(code == cli::kExitDataError);
    }
}

TEST_CASE("cmd_infer with eta=auto records the selection diagnostics") {
    const fs::path ds_dir = fresh_dir("auto_ds");
    const fs::path inf_dir = fresh_dir("auto_inf");
    cli::RunConfig cfg = tiny_config();
    cfg.eta_auto = true;
    cfg.eta_candidates = {0.0, 100.0};
    REQUIRE(cli::cmd_simulate(cfg, ds_dir) == cli::kExitOk);
    REQUIRE(cli::cmd_infer(ds_dir, cfg, inf_dir) == cli::kExitOk);
    REQUIRE(fs::exists(inf_dir / "eta_diagnostics.csv"));
    const auto rows = io::read_csv(inf_dir / "eta_diagnostics.csv");
    REQUIRE(rows.size() == 3);  // header + 2 candidates

    double chosen = -1.0;
    io::read_params_json(inf_dir / "params.json", &chosen);
    REQUIRE((chosen == 0.0 || chosen == 100.0));
}

#ifdef RADIOMAP_BIN
TEST_CASE("command-line binary exit codes") {
    const fs::path dir = fresh_dir("bin");
    const std::string bin = RADIOMAP_BIN;
    auto run = [](const std::string& cmd) {
        const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
        return WEXITSTATUS(status);
    };
    REQUIRE(run(bin + " --help") == 0);
    REQUIRE(run(bin + " infer /nonexistent --out " + (dir / "o").string()) == 3);
    REQUIRE(run(bin + " simulate") == 2);  // missing required --out
    std::ofstream(dir / "cfg.json") << R"({"mystery_key": 1})";
    REQUIRE(run(bin + " simulate --config " + (dir / "cfg.json").string() + " --out " +
                (dir / "ds").string()) == 2);

    std::ofstream(dir / "ok.json") << R"({"scene":"rect","scene_extent_m":5.0,"n_aps":2,
        "n_ant":4,"n_subcarriers":16,"delta_s":0.5,"t_steps":10,"v_max_mps":1.2,
        "noise_std":1e-4,"n_scatterers":2,"seed":3,"eta":50.0,"max_iters":2,
        "subcarrier_stride":1,"dict_resolution_deg":5.0})";
    REQUIRE(run(bin + " simulate --config " + (dir / "ok.json").string() + " --out " +
                (dir / "ds").string()) == 0);
    REQUIRE(run(bin + " infer " + (dir / "ds").string() + " --config " +
                (dir / "ok.json").string() + " --out " + (dir / "inf").string()) == 0);
    REQUIRE(run(bin + " map " + (dir / "ds").string() + " " + (dir / "inf").string() +
                " --config " + (dir / "ok.json").string() + " --out " +
                (dir / "map").string()) == 0);
    REQUIRE(run(bin + " eval " + (dir / "ds").string() + " " + (dir / "inf").string() + " " +
                (dir / "map").string() + " --config " + (dir / "ok.json").string() + " --out " +
                (dir / "metrics.json").string()) == 0);
}
#endif
