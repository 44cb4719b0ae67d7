#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "rmap/detail/parallel.hpp"
#include "rmap/errors.hpp"
#include "rmap/features.hpp"
#include "rmap/graph.hpp"
#include "rmap/inference.hpp"

namespace rmap {

// Unit-norm combining vectors w_b of length N_ant.
struct BeamCodebook {
    std::vector<Eigen::VectorXcd> beams;

    int n_beams() const { return static_cast<int>(beams.size()); }

    void validate() const {
        if (beams.empty()) throw ConfigError("BeamCodebook: needs at least one beam");
        for (const auto& w : beams)
            if (std::abs(w.norm() - 1.0) > 1e-9)
                throw ConfigError("BeamCodebook: beams must have unit norm");
    }
};

// Orthonormal DFT codebook with B_c = n_ant beams.
inline BeamCodebook dft_codebook(int n_ant) {
    if (n_ant < 1) throw ConfigError("dft_codebook: n_ant must be >= 1");
    BeamCodebook cb;
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_ant));
    for (int b = 0; b < n_ant; ++b) {
        Eigen::VectorXcd w(n_ant);
        for (int n = 0; n < n_ant; ++n) {
            const double ang = -2.0 * M_PI * static_cast<double>(b) * n / n_ant;
            w(n) = scale * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        cb.beams.push_back(std::move(w));
    }
    return cb;
}

// Gaussian kernel weights omega_t(p) = exp(-||p - x_t||^2 / (2 h^2)).
inline Eigen::VectorXd kernel_weights(const Vec2& p, const Trajectory& traj, double h) {
    if (!(h > 0)) throw ConfigError("kernel_weights: bandwidth must be positive");
    Eigen::VectorXd w(traj.t_steps());
    const double inv = 1.0 / (2.0 * h * h);
    for (int t = 0; t < traj.t_steps(); ++t)
        w(t) = std::exp(-(p - traj.coordinates[t]).squaredNorm() * inv);
    return w;
}

// Weighted average sum_t w_t v_t / (sum_t w_t + eps_w); element-wise for
// matrix payloads.
inline double smooth_map(const std::vector<double>& values, const Eigen::VectorXd& weights,
                         double eps_w) {
    if (static_cast<Eigen::Index>(values.size()) != weights.size())
        throw DataError("smooth_map: length mismatch");
    double num = 0.0;
    for (std::size_t t = 0; t < values.size(); ++t) num += weights(t) * values[t];
    return num / (weights.sum() + eps_w);
}

template <typename Mat>
Mat smooth_map(const std::vector<Mat>& values, const Eigen::VectorXd& weights, double eps_w) {
    if (static_cast<Eigen::Index>(values.size()) != weights.size() || values.empty())
        throw DataError("smooth_map: length mismatch or empty payload");
    Mat num = Mat::Zero(values[0].rows(), values[0].cols());
    for (std::size_t t = 0; t < values.size(); ++t) {
        if (values[t].rows() != num.rows() || values[t].cols() != num.cols())
            throw DataError("smooth_map: payload shape mismatch");
        num += weights(static_cast<Eigen::Index>(t)) * values[t];
    }
    return num / (weights.sum() + eps_w);
}

// Predicted beam gains (1/N_sub) sum_m |w_b^H h^(m)|^2.
inline Eigen::VectorXd beam_gain_map(const Eigen::MatrixXcd& channel, const BeamCodebook& cb) {
    Eigen::VectorXd gains(cb.n_beams());
    for (int b = 0; b < cb.n_beams(); ++b) {
        if (cb.beams[b].size() != channel.rows())
            throw DataError("beam_gain_map: beam/channel antenna mismatch");
        gains(b) = (cb.beams[b].adjoint() * channel).squaredNorm() /
                   static_cast<double>(channel.cols());
    }
    return gains;
}

// Argmax with ties toward the smallest index.
inline int best_beam(const Eigen::VectorXd& gains) {
    if (gains.size() == 0) throw DataError("best_beam: empty gain vector");
    int arg = 0;
    for (int b = 1; b < gains.size(); ++b)
        if (gains(b) > gains(arg)) arg = b;
    return arg;
}

// Kernel-smoothed maps over graph nodes, stored densely over the covered
// subset (coverage = total kernel weight above threshold).
struct RadioMap {
    std::vector<Vec2> node_coords;
    std::vector<char> coverage_mask;  // per node
    std::vector<int> covered_nodes;   // indices into node_coords
    double bandwidth_m = 0.0;
    double coverage_threshold = 0.0;

    // [q][k] where k indexes covered_nodes
    std::vector<std::vector<double>> rss_map;
    std::vector<std::vector<Eigen::MatrixXd>> padp_map;
    std::vector<std::vector<Eigen::MatrixXcd>> channel_map;
    std::vector<std::vector<Eigen::VectorXd>> beam_gain;
    std::vector<std::vector<int>> best_beam_map;

    int n_aps() const { return static_cast<int>(rss_map.size()); }
    int n_covered() const { return static_cast<int>(covered_nodes.size()); }
};

// Builds all four map families from the recovered trajectory. Channel maps
// average phase-normalized CSI. PADP profiles are taken from obs.padp when
// retained there, otherwise recomputed from the raw CSI with the given
// dictionaries and feature settings.
inline RadioMap build_radiomap(const Trajectory& traj, const ObservationSequence& obs,
                               const std::vector<std::vector<CsiMatrix>>& csi,
                               const std::vector<AngularDictionary>& dicts,
                               const FeatureConfig& fc, const SpatialGraph& graph, double h,
                               double eps_w, const std::vector<BeamCodebook>& codebooks,
                               double coverage_threshold = 0.05, int n_threads = 0) {
    const int t_steps = traj.t_steps();
    const int n_aps = static_cast<int>(csi.size());
    if (t_steps != obs.t_steps() || (n_aps && t_steps != static_cast<int>(csi[0].size())))
        throw DataError("build_radiomap: trajectory/observation length mismatch");
    if (static_cast<int>(codebooks.size()) != n_aps)
        throw DataError("build_radiomap: one codebook per AP required");
    for (const auto& cb : codebooks) cb.validate();

    RadioMap map;
    map.node_coords = graph.nodes;
    map.bandwidth_m = h;
    map.coverage_threshold = coverage_threshold;
    const int n = graph.n_nodes();
    map.coverage_mask.assign(n, 0);

    std::vector<Eigen::VectorXd> weights(n);
    for (int i = 0; i < n; ++i) {
        weights[i] = kernel_weights(graph.nodes[i], traj, h);
        if (weights[i].sum() >= coverage_threshold) {
            map.coverage_mask[i] = 1;
            map.covered_nodes.push_back(i);
        }
    }

    const int n_cov = map.n_covered();
    map.rss_map.assign(n_aps, std::vector<double>(n_cov, 0.0));
    map.padp_map.assign(n_aps, std::vector<Eigen::MatrixXd>(n_cov));
    map.channel_map.assign(n_aps, std::vector<Eigen::MatrixXcd>(n_cov));
    map.beam_gain.assign(n_aps, std::vector<Eigen::VectorXd>(n_cov));
    map.best_beam_map.assign(n_aps, std::vector<int>(n_cov, 0));

    // Weighted sums accumulate in a single pass over t so only one profile
    // per AP is materialized at a time.
    const bool have_padp = !obs.padp.empty();
    const int n_sub = n_aps ? csi[0][0].n_sub() : 1;
    const int n_dec = (n_sub + fc.subcarrier_stride - 1) / fc.subcarrier_stride;
    const DelayTransform delay(n_dec);

    std::vector<double> weight_sums(n_cov, 0.0);
    for (int k = 0; k < n_cov; ++k) weight_sums[k] = weights[map.covered_nodes[k]].sum();

    for (int q = 0; q < n_aps; ++q) {
        const int n_ant = csi[q][0].n_ant();
        for (int k = 0; k < n_cov; ++k) {
            map.padp_map[q][k] =
                Eigen::MatrixXd::Zero(have_padp ? obs.padp[0][q].entries.rows() : dicts[q].n_angles(),
                                      have_padp ? obs.padp[0][q].entries.cols() : n_dec);
            map.channel_map[q][k] = Eigen::MatrixXcd::Zero(n_ant, n_sub);
        }
        for (int t = 0; t < t_steps; ++t) {
            const Eigen::MatrixXcd tilde = phase_normalize(csi[q][t]).entries;
            Eigen::MatrixXd profile;
            if (have_padp) {
                profile = obs.padp[t][q].entries;
            } else {
                const CsiMatrix dec = decimate_subcarriers(csi[q][t], fc.subcarrier_stride);
                profile = padp(normalize_csi(dec, fc.eps_h), dicts[q], delay).entries;
            }
            detail::parallel_for(
                static_cast<std::size_t>(n_cov),
                [&](std::size_t k) {
                    const double w = weights[map.covered_nodes[k]](t);
                    map.rss_map[q][k] += w * obs.rss_db[t][q];
                    map.padp_map[q][k] += w * profile;
                    map.channel_map[q][k] += w * tilde;
                },
                n_threads);
        }
        detail::parallel_for(
            static_cast<std::size_t>(n_cov),
            [&](std::size_t k) {
                const double denom = weight_sums[k] + eps_w;
                map.rss_map[q][k] /= denom;
                map.padp_map[q][k] /= denom;
                map.channel_map[q][k] /= denom;
                map.beam_gain[q][k] = beam_gain_map(map.channel_map[q][k], codebooks[q]);
                map.best_beam_map[q][k] = best_beam(map.beam_gain[q][k]);
            },
            n_threads);
    }
    return map;
}

}  // namespace rmap
