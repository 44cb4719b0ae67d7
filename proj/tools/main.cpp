// Command-line front end: simulate | infer | map | eval.
//
// Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.

#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>

#include "rmap/cli.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::string eta;
    int beam_width = -1;
    double grid_spacing = -1.0;
    double bandwidth_h = -1.0;
    long long seed = -1;
    int threads = -1;
    std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_out_required = true) {
    cmd->add_option("--config", f.config_path, "JSON config file with flat keys");
    cmd->add_option("--eta", f.eta, "regularization weight (number or 'auto')");
    cmd->add_option("--beam-width", f.beam_width, "pruned decoding beam width");
    cmd->add_option("--grid-spacing", f.grid_spacing, "spatial grid spacing [m]");
    cmd->add_option("--bandwidth-h", f.bandwidth_h, "radio map kernel bandwidth [m]");
    cmd->add_option("--seed", f.seed, "simulation seed");
    cmd->add_option("--threads", f.threads, "worker thread cap (0 = hardware)");
    auto* out = cmd->add_option("--out", f.out, "output directory or file");
    if (with_out_required) out->required();
}

rmap::cli::RunConfig resolve_config(const CommonFlags& f) {
    rmap::cli::RunConfig cfg;
    if (!f.config_path.empty()) cfg = rmap::cli::load_config(f.config_path);
    if (!f.eta.empty()) {
        if (f.eta == "auto") {
            cfg.eta_auto = true;
        } else {
            try {
                cfg.eta = std::stod(f.eta);
                cfg.eta_auto = false;
            } catch (const std::exception&) {
                throw rmap::ConfigError("--eta must be a number or 'auto'");
            }
        }
    }
    if (f.beam_width >= 0) cfg.beam_width = f.beam_width;
    if (f.grid_spacing >= 0) cfg.grid_spacing_m = f.grid_spacing;
    if (f.bandwidth_h >= 0) cfg.bandwidth_h_m = f.bandwidth_h;
    if (f.seed >= 0) cfg.seed = static_cast<std::uint64_t>(f.seed);
    if (f.threads >= 0) cfg.threads = f.threads;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"annotation-free indoor radio mapping from MIMO-OFDM CSI"};
    app.require_subcommand(1);

    CommonFlags sim_f, inf_f, map_f, eval_f;
    std::string inf_dataset, map_dataset, map_infer, eval_dataset, eval_infer, eval_map;

    auto* sim = app.add_subcommand("simulate", "synthesize a CSI dataset with ground truth");
    add_common(sim, sim_f);

    auto* inf = app.add_subcommand("infer", "recover the latent trajectory from a dataset");
    inf->add_option("dataset", inf_dataset, "dataset directory")->required();
    add_common(inf, inf_f);

    auto* mp = app.add_subcommand("map", "build radio maps from an inferred trajectory");
    mp->add_option("dataset", map_dataset, "dataset directory")->required();
    mp->add_option("infer_dir", map_infer, "inference output directory")->required();
    add_common(mp, map_f);

    auto* ev = app.add_subcommand("eval", "compute metrics against ground truth");
    ev->add_option("dataset", eval_dataset, "dataset directory (with groundtruth.csv)")->required();
    ev->add_option("infer_dir", eval_infer, "inference output directory")->required();
    ev->add_option("map_dir", eval_map, "radio map output directory")->required();
    add_common(ev, eval_f);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : rmap::cli::kExitConfigError;
    }

    return rmap::cli::guarded([&]() -> int {
        if (sim->parsed()) return rmap::cli::cmd_simulate(resolve_config(sim_f), sim_f.out);
        if (inf->parsed())
            return rmap::cli::cmd_infer(inf_dataset, resolve_config(inf_f), inf_f.out);
        if (mp->parsed())
            return rmap::cli::cmd_map(map_dataset, map_infer, resolve_config(map_f), map_f.out);
        if (ev->parsed())
            return rmap::cli::cmd_eval(eval_dataset, eval_infer, eval_map, resolve_config(eval_f),
                                       eval_f.out);
        return rmap::cli::kExitConfigError;
    });
}
