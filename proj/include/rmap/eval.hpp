#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "rmap/errors.hpp"
#include "rmap/features.hpp"
#include "rmap/inference.hpp"

namespace rmap {

// Mean Euclidean distance between estimated and true positions, in meters.
inline double e_loc(const std::vector<Vec2>& est, const std::vector<Vec2>& truth) {
    if (est.size() != truth.size() || est.empty())
        throw DataError("e_loc: length mismatch or empty input");
    double acc = 0.0;
    for (std::size_t t = 0; t < est.size(); ++t) acc += (est[t] - truth[t]).norm();
    return acc / static_cast<double>(est.size());
}

// Relative beam gain error, mean |(e - e_hat) / (e + eps_e)| * 100.
inline double e_beam(const std::vector<double>& ref_gains, const std::vector<double>& est_gains,
                     double eps_e = 1e-9) {
    if (ref_gains.size() != est_gains.size() || ref_gains.empty())
        throw DataError("e_beam: shape mismatch or empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < ref_gains.size(); ++i)
        acc += std::abs((ref_gains[i] - est_gains[i]) / (ref_gains[i] + eps_e));
    return acc / static_cast<double>(ref_gains.size()) * 100.0;
}

// Channel reconstruction error, mean ||H - H_hat||_F / sqrt(N_ant N_sub) * 100.
inline double e_rmse(const std::vector<Eigen::MatrixXcd>& ref,
                     const std::vector<Eigen::MatrixXcd>& est) {
    if (ref.size() != est.size() || ref.empty())
        throw DataError("e_rmse: shape mismatch or empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        if (ref[i].rows() != est[i].rows() || ref[i].cols() != est[i].cols())
            throw DataError("e_rmse: matrix shape mismatch");
        const double cells = static_cast<double>(ref[i].rows()) * ref[i].cols();
        acc += (ref[i] - est[i]).norm() / std::sqrt(cells);
    }
    return acc / static_cast<double>(ref.size()) * 100.0;
}

// PADP-domain channel distance deviation: mean Eq-(5)-style distance between
// the profiles of the reference and estimated channels. Each pair must share
// an AP so the matching dictionary applies; `ap_of` maps pair index -> AP.
inline double e_cd(const std::vector<Eigen::MatrixXcd>& ref,
                   const std::vector<Eigen::MatrixXcd>& est, const std::vector<int>& ap_of,
                   const std::vector<AngularDictionary>& dicts, const FeatureConfig& fc) {
    if (ref.size() != est.size() || ref.size() != ap_of.size() || ref.empty())
        throw DataError("e_cd: shape mismatch or empty input");
    const int n_sub = static_cast<int>(ref[0].cols());
    const int n_dec = (n_sub + fc.subcarrier_stride - 1) / fc.subcarrier_stride;
    const DelayTransform delay(n_dec);
    double acc = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        const auto& dict = dicts.at(ap_of[i]);
        const CsiMatrix hr{ref[i], ap_of[i], 0};
        const CsiMatrix he{est[i], ap_of[i], 0};
        const PadpMatrix pr =
            padp(normalize_csi(decimate_subcarriers(hr, fc.subcarrier_stride), fc.eps_h), dict,
                 delay);
        const PadpMatrix pe =
            padp(normalize_csi(decimate_subcarriers(he, fc.subcarrier_stride), fc.eps_h), dict,
                 delay);
        acc += padp_distance(pr, pe);
    }
    return acc / static_cast<double>(ref.size());
}

struct MetricsReport {
    double e_loc_m = 0.0;
    double e_beam_pct = 0.0;
    double e_rmse_pct = 0.0;
    double e_cd = 0.0;
    std::vector<double> per_ap_e_beam_pct;
    std::vector<double> per_ap_e_rmse_pct;
    std::vector<double> per_ap_e_cd;
};

struct EtaCandidateDiagnostics {
    double eta = 0.0;
    double score = -std::numeric_limits<double>::infinity();
    double normalized_objective = 0.0;  // (emission + transition) / T
    double mean_padp_residual = 0.0;    // standardized (g - g1 d)^2 / (g2 d + s0^2)
    double objective = 0.0;             // full Eq-(12) value at this eta
    int iterations = 0;
    bool converged = false;
    bool failed = false;
    std::string fail_reason;
};

struct EtaSelection {
    double eta = 0.0;
    OptimizeResult result;  // the winning candidate's run
    std::vector<EtaCandidateDiagnostics> diagnostics;
};

inline std::vector<double> default_eta_candidates() {
    return {0.0, 100.0, 300.0, 1000.0, 3000.0, 10000.0};
}

// Annotation-free regularization weight selection. For each candidate eta the
// full optimizer runs; the score is the per-step unregularized objective
// (emission + transition, eta-comparable across candidates) minus the mean
// standardized PADP residual. Highest score wins, ties to the smallest eta.
// Ground-truth positions are never consulted. Failed candidates are excluded
// with a recorded reason.
inline EtaSelection select_eta(const std::vector<double>& candidates,
                               const ObservationSequence& obs, const SpatialGraph& graph,
                               const std::vector<Vec2>& aps, const InferenceConfig& base_cfg,
                               int n_threads = 0, double lambda_c = 1.0) {
    if (candidates.empty()) throw ConfigError("select_eta: empty candidate list");
    EtaSelection sel;
    bool have_best = false;
    double best_score = -std::numeric_limits<double>::infinity();
    for (double eta : candidates) {
        EtaCandidateDiagnostics diag;
        diag.eta = eta;
        try {
            InferenceConfig cfg = base_cfg;
            cfg.eta = eta;
            OptimizeResult res = alternate_optimize(obs, graph, aps, cfg, n_threads);
            const ObjectiveBreakdown b =
                objective_breakdown(res.trajectory, res.params, obs, graph, aps, eta);
            const int t_steps = obs.t_steps();
            diag.normalized_objective = (b.emission_sum + b.transition_sum) / t_steps;

            double resid = 0.0;
            int count = 0;
            for (int t = 1; t < t_steps; ++t) {
                const double d =
                    (res.trajectory.coordinates[t] - res.trajectory.coordinates[t - 1]).norm();
                for (int q = 0; q < obs.n_aps(); ++q) {
                    const ApParams& a = res.params.ap[q];
                    const double r = obs.padp_step_dist[t][q] - a.gamma1 * d;
                    resid += r * r / (a.gamma2 * d + a.sigma0_sq);
                    ++count;
                }
            }
            diag.mean_padp_residual = count > 0 ? resid / count : 0.0;
            diag.score = diag.normalized_objective - lambda_c * diag.mean_padp_residual;
            diag.objective = res.objective;
            diag.iterations = res.iterations;
            diag.converged = res.converged;

            if (!have_best || diag.score > best_score ||
                (diag.score == best_score && eta < sel.eta)) {
                sel.eta = eta;
                sel.result = std::move(res);
                best_score = diag.score;
                have_best = true;
            }
        } catch (const Error& e) {
            diag.failed = true;
            diag.fail_reason = e.what();
        }
        sel.diagnostics.push_back(std::move(diag));
    }
    if (!have_best) throw NumericError("select_eta: every candidate failed");
    return sel;
}

}  // namespace rmap
