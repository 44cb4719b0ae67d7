#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "rmap/features.hpp"
#include "rmap/geometry.hpp"
#include "rmap/ofdm.hpp"

namespace rmap {

// One resolvable propagation path: complex gain, absolute delay, and the
// azimuth of the path at the AP array (global frame).
struct PathComponent {
    std::complex<double> gain;
    double delay_s = 0.0;
    double direction_rad = 0.0;
};

struct Scatterer {
    Vec2 position = Vec2::Zero();
    std::complex<double> reflectivity{1.0, 0.0};
};

// Synthetic indoor scene: AP arrays, the walkable polygon, point scatterers,
// and the line-of-sight policy. A LoS path exists iff the AP-to-user segment
// stays within the polygon dilated by los_clearance_m.
struct Scene {
    std::vector<ArrayGeometry> aps;
    Polygon walkable_region;
    std::vector<Scatterer> scatterers;
    bool los_enabled = true;
    double los_clearance_m = 0.5;

    int n_aps() const { return static_cast<int>(aps.size()); }

    void validate() const {
        if (aps.empty()) throw ConfigError("Scene: needs at least one AP");
        walkable_region.validate();
        for (const auto& ap : aps) ap.validate();
    }
};

namespace detail {

inline bool point_near_region(const Polygon& region, const Vec2& p, double margin) {
    return region.contains(p) || region.boundary_distance(p) <= margin;
}

// Dense sampling along the segment; step capped at max(0.05 m, margin/2).
inline bool segment_near_region(const Polygon& region, const Vec2& a, const Vec2& b,
                                double margin) {
    const double len = (b - a).norm();
    const double step = std::max(0.05, 0.5 * std::max(margin, 1e-3));
    const int n = std::max(1, static_cast<int>(std::ceil(len / step)));
    for (int i = 0; i <= n; ++i) {
        const double t = static_cast<double>(i) / n;
        if (!point_near_region(region, Vec2(a + t * (b - a)), margin)) return false;
    }
    return true;
}

}  // namespace detail

// Enumerates the multipath components between AP `ap_index` and `user_pos`:
// the LoS path (when enabled and unblocked) plus one single-bounce path per
// scatterer. Amplitudes follow lambda/(4 pi d) per segment, scaled by the
// scatterer reflectivity; phases carry the carrier rotation exp(-j 2 pi d / lambda).
inline std::vector<PathComponent> propagation_paths(const Scene& scene, const Vec2& user_pos,
                                                    int ap_index, const OfdmConfig& cfg) {
    if (ap_index < 0 || ap_index >= scene.n_aps())
        throw DataError("propagation_paths: ap_index out of range");
    const ArrayGeometry& ap = scene.aps[ap_index];
    const double lambda = cfg.wavelength_m();
    const double ref = lambda / (4.0 * M_PI);
    std::vector<PathComponent> paths;

    if (scene.los_enabled &&
        detail::segment_near_region(scene.walkable_region, ap.ap_position, user_pos,
                                    scene.los_clearance_m)) {
        const double d = std::max((user_pos - ap.ap_position).norm(), 1e-6);
        PathComponent p;
        const double phase = -2.0 * M_PI * d / lambda;
        p.gain = (ref / d) * std::complex<double>(std::cos(phase), std::sin(phase));
        p.delay_s = d / kSpeedOfLight;
        p.direction_rad = std::atan2(user_pos.y() - ap.ap_position.y(),
                                     user_pos.x() - ap.ap_position.x());
        paths.push_back(p);
    }

    for (const Scatterer& s : scene.scatterers) {
        const double d1 = std::max((s.position - ap.ap_position).norm(), 1e-6);
        const double d2 = std::max((user_pos - s.position).norm(), 1e-6);
        PathComponent p;
        const double phase = -2.0 * M_PI * (d1 + d2) / lambda;
        p.gain = (ref / d1) * (ref / d2) * s.reflectivity *
                 std::complex<double>(std::cos(phase), std::sin(phase));
        p.delay_s = (d1 + d2) / kSpeedOfLight;
        p.direction_rad =
            std::atan2(s.position.y() - ap.ap_position.y(), s.position.x() - ap.ap_position.x());
        paths.push_back(p);
    }
    return paths;
}

// H = sum_l kappa_l e^{-j 2 pi m df tau_l} a(theta_l) + noise, with
// independent circular complex Gaussian noise of per-entry std `noise_std`.
inline CsiMatrix synth_channel(const Scene& scene, const Vec2& user_pos, int ap_index,
                               const OfdmConfig& cfg, double noise_std, std::mt19937_64& rng) {
    const auto paths = propagation_paths(scene, user_pos, ap_index, cfg);
    const ArrayGeometry& ap = scene.aps[ap_index];
    CsiMatrix h;
    h.ap_index = ap_index;
    h.entries = Eigen::MatrixXcd::Zero(ap.n_ant(), cfg.n_subcarriers);

    for (const PathComponent& p : paths) {
        const Eigen::VectorXcd a = steering_vector(ap, cfg.wavelength_m(), p.direction_rad);
        Eigen::RowVectorXcd f(cfg.n_subcarriers);
        for (int m = 0; m < cfg.n_subcarriers; ++m) {
            const double ang = -2.0 * M_PI * m * cfg.subcarrier_spacing_hz * p.delay_s;
            f(m) = std::complex<double>(std::cos(ang), std::sin(ang));
        }
        h.entries.noalias() += p.gain * (a * f);
    }

    if (noise_std > 0.0) {
        std::normal_distribution<double> gauss(0.0, noise_std / std::sqrt(2.0));
        for (int r = 0; r < h.entries.rows(); ++r)
            for (int c = 0; c < h.entries.cols(); ++c) {
                const double re = gauss(rng);
                const double im = gauss(rng);
                h.entries(r, c) += std::complex<double>(re, im);
            }
    }
    return h;
}

// Bounded random walk: wrapped-Gaussian turn per step, speed drawn uniformly
// below v_max, and rejection of any step whose segment leaves the region.
// Every displacement is <= v_max * delta_s and every point stays inside.
inline std::vector<Vec2> gen_trajectory(const Polygon& region, double v_max, double delta_s,
                                        int t_steps, std::mt19937_64& rng,
                                        double turn_std_rad = 0.45) {
    if (t_steps < 1) throw ConfigError("gen_trajectory: T must be >= 1");
    Vec2 lo, hi;
    region.bounding_box(lo, hi);
    std::uniform_real_distribution<double> ux(lo.x(), hi.x());
    std::uniform_real_distribution<double> uy(lo.y(), hi.y());

    Vec2 pos;
    bool placed = false;
    for (int tries = 0; tries < 100000; ++tries) {
        pos = Vec2(ux(rng), uy(rng));
        if (region.contains(pos)) {
            placed = true;
            break;
        }
    }
    if (!placed) throw DataError("gen_trajectory: could not place a starting point in the region");

    std::vector<Vec2> traj;
    traj.reserve(t_steps);
    traj.push_back(pos);

    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::uniform_real_distribution<double> uang(-M_PI, M_PI);
    std::normal_distribution<double> turn(0.0, turn_std_rad);
    double heading = uang(rng);
    const double step_max = v_max * delta_s;

    for (int t = 1; t < t_steps; ++t) {
        Vec2 next = pos;  // standing still is always feasible
        for (int tries = 0; tries < 64; ++tries) {
            const double cand_heading = tries < 16 ? heading + turn(rng) : uang(rng);
            const double speed = step_max * (0.15 + 0.85 * u01(rng));
            const Vec2 cand = pos + speed * Vec2(std::cos(cand_heading), std::sin(cand_heading));
            if (region.segment_inside(pos, cand)) {
                next = cand;
                heading = cand_heading;
                break;
            }
        }
        pos = next;
        traj.push_back(pos);
    }
    return traj;
}

// Full synthetic ground-truth bundle: per-AP CSI sequences, the true
// trajectory, and the generating configuration.
struct GroundTruthDataset {
    std::vector<std::vector<CsiMatrix>> csi;  // [q][t]
    std::vector<Vec2> positions;              // [t]
    OfdmConfig config;
    Scene scene;
    double v_max_mps = 0.0;
    double noise_std = 0.0;
    std::uint64_t seed = 0;
    bool random_phase = false;

    int t_steps() const { return static_cast<int>(positions.size()); }
    int n_aps() const { return static_cast<int>(csi.size()); }
};

// Deterministic given the seed. When random_phase is set, a common random
// phase offset is applied to all APs at each time step, mimicking an
// unsynchronized snapshot-level phase.
inline GroundTruthDataset gen_dataset(const Scene& scene, const OfdmConfig& cfg, int t_steps,
                                      double v_max, double noise_std, std::uint64_t seed,
                                      bool random_phase = false) {
    scene.validate();
    cfg.validate();
    std::mt19937_64 rng(seed);
    GroundTruthDataset ds;
    ds.config = cfg;
    ds.scene = scene;
    ds.v_max_mps = v_max;
    ds.noise_std = noise_std;
    ds.seed = seed;
    ds.random_phase = random_phase;
    ds.positions = gen_trajectory(scene.walkable_region, v_max, cfg.sample_interval_s, t_steps, rng);
    ds.csi.assign(scene.n_aps(), {});
    for (auto& seq : ds.csi) seq.reserve(t_steps);

    std::uniform_real_distribution<double> uphase(0.0, 2.0 * M_PI);
    for (int t = 0; t < t_steps; ++t) {
        for (int q = 0; q < scene.n_aps(); ++q) {
            CsiMatrix h = synth_channel(scene, ds.positions[t], q, cfg, noise_std, rng);
            h.time_index = t;
            ds.csi[q].push_back(std::move(h));
        }
        if (random_phase) {
            const double phi = uphase(rng);
            const std::complex<double> rot(std::cos(phi), std::sin(phi));
            for (int q = 0; q < scene.n_aps(); ++q) ds.csi[q][t].entries *= rot;
        }
    }
    return ds;
}

// Rectangular scene with APs tucked into the corners facing the centroid and
// seeded random scatterers.
inline Scene make_rect_scene(double width, double height, int n_aps, int n_ant,
                             double wavelength_m, int n_scatterers, double reflectivity_mag,
                             std::uint64_t seed) {
    Scene scene;
    scene.walkable_region = make_rectangle(width, height);
    const Vec2 centroid(0.5 * width, 0.5 * height);
    const double inset = 0.4;
    const std::vector<Vec2> corners = {{inset, inset},
                                       {width - inset, inset},
                                       {width - inset, height - inset},
                                       {inset, height - inset}};
    for (int q = 0; q < n_aps; ++q) {
        const Vec2 p = corners[q % corners.size()];
        const double orient = std::atan2(centroid.y() - p.y(), centroid.x() - p.x());
        scene.aps.push_back(make_ula(p, orient, n_ant, 0.5 * wavelength_m));
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(0.1 * width, 0.9 * width);
    std::uniform_real_distribution<double> uy(0.1 * height, 0.9 * height);
    std::uniform_real_distribution<double> uphase(0.0, 2.0 * M_PI);
    for (int s = 0; s < n_scatterers; ++s) {
        Scatterer sc;
        sc.position = Vec2(ux(rng), uy(rng));
        const double phi = uphase(rng);
        sc.reflectivity = reflectivity_mag * std::complex<double>(std::cos(phi), std::sin(phi));
        scene.scatterers.push_back(sc);
    }
    return scene;
}

// L-shaped scene (outer square minus top-right quadrant), APs near four of
// the corners facing into the region.
inline Scene make_lshape_scene(double outer, double arm, int n_aps, int n_ant,
                               double wavelength_m, int n_scatterers, double reflectivity_mag,
                               std::uint64_t seed) {
    Scene scene;
    scene.walkable_region = make_lshape(outer, arm);
    const double inset = 0.4;
    const std::vector<Vec2> spots = {{inset, inset},
                                     {outer - inset, inset},
                                     {inset, outer - inset},
                                     {arm - inset, arm - inset}};
    const Vec2 anchor(0.45 * arm, 0.45 * arm);
    for (int q = 0; q < n_aps; ++q) {
        const Vec2 p = spots[q % spots.size()];
        const double orient = std::atan2(anchor.y() - p.y(), anchor.x() - p.x());
        scene.aps.push_back(make_ula(p, orient, n_ant, 0.5 * wavelength_m));
    }
    std::mt19937_64 rng(seed);
    Vec2 lo, hi;
    scene.walkable_region.bounding_box(lo, hi);
    std::uniform_real_distribution<double> ux(lo.x() + 0.5, hi.x() - 0.5);
    std::uniform_real_distribution<double> uy(lo.y() + 0.5, hi.y() - 0.5);
    std::uniform_real_distribution<double> uphase(0.0, 2.0 * M_PI);
    int placed = 0;
    int guard = 0;
    while (placed < n_scatterers && guard++ < 100000) {
        const Vec2 p(ux(rng), uy(rng));
        if (!scene.walkable_region.contains(p)) continue;
        Scatterer sc;
        sc.position = p;
        const double phi = uphase(rng);
        sc.reflectivity = reflectivity_mag * std::complex<double>(std::cos(phi), std::sin(phi));
        scene.scatterers.push_back(sc);
        ++placed;
    }
    return scene;
}

}  // namespace rmap
