// End-to-end walkthrough of the library API: synthesize a scene, extract
// features, recover the trajectory, build radio maps, and score the result
// against the known ground truth.

#include <cstdio>

#include "rmap/eval.hpp"
#include "rmap/inference.hpp"
#include "rmap/radiomap.hpp"
#include "rmap/sim.hpp"

using namespace rmap;

int main() {
    // L-shaped hall with four 8-element ULAs and a handful of scatterers
    const OfdmConfig ofdm = OfdmConfig::make(1.272e9, 50e6, 128, 0.5);
    const Scene scene = make_lshape_scene(14.0, 7.0, 4, 8, ofdm.wavelength_m(), 6, 40.0, 119);
    const GroundTruthDataset ds = gen_dataset(scene, ofdm, 300, 1.5, 2e-4, 42, true);
    std::printf("scene: %d APs, T=%d, %zu scatterers\n", scene.n_aps(), ds.t_steps(),
                scene.scatterers.size());

    // CSI -> RSS, MUSIC bearings, PADP step distances
    FeatureConfig fc;
    const auto dicts = make_dictionaries(scene.aps, ofdm.wavelength_m(), fc);
    const ObservationSequence obs = build_observations(ds.csi, dicts, fc);

    // walkable-region graph and the alternating optimizer
    const SpatialGraph graph =
        build_graph(scene.walkable_region, 0.5, ds.v_max_mps * ofdm.sample_interval_s);
    const auto aps = ap_positions(scene.aps);
    std::printf("graph: %d nodes\n", graph.n_nodes());

    InferenceConfig icfg;
    icfg.prune_enabled = false;
    const EtaSelection sel = select_eta(default_eta_candidates(), obs, graph, aps, icfg);
    std::printf("selected eta=%g (annotation-free)\n", sel.eta);
    for (const auto& d : sel.diagnostics)
        std::printf("  eta=%-7g score=%10.4f iters=%d\n", d.eta, d.score, d.iterations);

    const double err = e_loc(sel.result.trajectory.coordinates, ds.positions);
    std::printf("E_loc = %.3f m over %d steps\n", err, ds.t_steps());

    // radio maps from the recovered trajectory
    std::vector<BeamCodebook> codebooks;
    for (const auto& ap : scene.aps) codebooks.push_back(dft_codebook(ap.n_ant()));
    const RadioMap map = build_radiomap(sel.result.trajectory, obs, ds.csi, dicts, fc, graph,
                                        0.5, 1e-9, codebooks);
    std::printf("radio map covers %d/%d nodes\n", map.n_covered(), graph.n_nodes());
    return 0;
}
