#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "rmap/detail/parallel.hpp"
#include "rmap/errors.hpp"
#include "rmap/features.hpp"
#include "rmap/graph.hpp"

namespace rmap {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Per-AP propagation parameters: log-distance path loss (beta, alpha,
// sigma_s^2) and the PADP continuity surrogate (gamma1, gamma2, sigma0^2).
struct ApParams {
    double beta_db = 0.0;
    double alpha = 20.0;
    double sigma_s_sq = 1.0;
    double gamma1 = 0.0;
    double gamma2 = 1.0;
    double sigma0_sq = 1e-4;
};

struct PropagationParams {
    std::vector<ApParams> ap;
    double sigma_theta_sq = 0.07;  // shared angular variance
    double d0 = 0.1;               // path-loss distance offset
    double eps_d = 1e-9;           // stabilizer in the gamma updates
    double gamma_min = 1e-6;       // lower bound on gamma2

    int n_aps() const { return static_cast<int>(ap.size()); }

    void validate() const {
        if (!(sigma_theta_sq > 0) || !(d0 > 0) || !(gamma_min > 0))
            throw ConfigError("PropagationParams: positivity violated");
        for (const auto& a : ap)
            if (!(a.sigma_s_sq > 0) || !(a.gamma2 >= gamma_min) || !(a.sigma0_sq > 0))
                throw ConfigError("PropagationParams: per-AP positivity violated");
    }
};

// Per-step features feeding inference. padp_step_dist[t][q] holds
// g_{t,t-1,q} for t >= 1 (row 0 is zero). padp may be left empty when the
// profiles are not retained.
struct ObservationSequence {
    std::vector<std::vector<double>> rss_db;          // [t][q]
    std::vector<std::vector<double>> bearing_rad;     // [t][q]
    std::vector<std::vector<PadpMatrix>> padp;        // [t][q], optional
    std::vector<std::vector<double>> padp_step_dist;  // [t][q]

    int t_steps() const { return static_cast<int>(rss_db.size()); }
    int n_aps() const { return rss_db.empty() ? 0 : static_cast<int>(rss_db[0].size()); }
};

struct Trajectory {
    std::vector<int> node_indices;
    std::vector<Vec2> coordinates;

    int t_steps() const { return static_cast<int>(node_indices.size()); }
};

struct InferenceConfig {
    double eta = 3000.0;
    int beam_width = 64;
    bool prune_enabled = false;
    int max_iters = 20;
    double rel_tol = 1e-6;
    double sigma_theta_floor = 1e-4;
    double sigma_s_floor = 1e-6;
    double sigma0_sq = 1e-4;

    void validate() const {
        if (!(eta >= 0)) throw ConfigError("InferenceConfig: eta must be >= 0");
        if (beam_width < 1) throw ConfigError("InferenceConfig: beam_width must be >= 1");
        if (max_iters < 0) throw ConfigError("InferenceConfig: max_iters must be >= 0");
    }
};

// Geometric bearing from o to x, in (-pi, pi].
inline double bearing(const Vec2& x, const Vec2& o) {
    if ((x - o).squaredNorm() == 0.0)
        throw DataError("bearing: undefined for coincident points");
    double a = std::atan2(x.y() - o.y(), x.x() - o.x());
    if (a <= -M_PI) a = M_PI;
    return a;
}

// Maps an angle difference into (-pi, pi].
inline double wrap_angle(double delta_rad) {
    double r = std::remainder(delta_rad, 2.0 * M_PI);
    if (r <= -M_PI) r = M_PI;
    return r;
}

// Local emission log-likelihood of a candidate position: Gaussian RSS
// residual under the log-distance model plus wrapped-Gaussian bearing
// residual, summed over APs. Log-normalizers are included so values stay
// comparable when variances are refit.
inline double emission_loglik(const Vec2& node, const std::vector<double>& rss_t,
                              const std::vector<double>& bearing_t,
                              const PropagationParams& params, const std::vector<Vec2>& aps) {
    double ll = 0.0;
    for (std::size_t q = 0; q < aps.size(); ++q) {
        const ApParams& a = params.ap[q];
        const double d = (node - aps[q]).norm();
        if (d == 0.0) throw DataError("emission_loglik: node coincides with an AP position");
        const double pred = a.beta_db - a.alpha * std::log10(d + params.d0);
        const double res_r = rss_t[q] - pred;
        ll += -res_r * res_r / (2.0 * a.sigma_s_sq) - 0.5 * std::log(2.0 * M_PI * a.sigma_s_sq);
        const double res_th = wrap_angle(bearing_t[q] - bearing(node, aps[q]));
        ll += -res_th * res_th / (2.0 * params.sigma_theta_sq) -
              0.5 * std::log(2.0 * M_PI * params.sigma_theta_sq);
    }
    return ll;
}

// PADP pairwise energy (g - gamma1 d)^2 / (2 (gamma2 d + sigma0^2))
// + log(gamma2 d + sigma0^2) / 2.
inline double padp_pair_energy(double g, double d, double gamma1, double gamma2,
                               double sigma0_sq) {
    const double var = gamma2 * d + sigma0_sq;
    const double res = g - gamma1 * d;
    return res * res / (2.0 * var) + 0.5 * std::log(var);
}

struct DecodeResult {
    Trajectory trajectory;
    double score = 0.0;
};

namespace detail {

// Candidate set per time step under pruning: the beam_width highest-emission
// nodes, deterministic under ties (higher score first, then smaller index).
inline std::vector<int> top_emission_nodes(const std::vector<double>& em, int beam_width) {
    std::vector<int> idx(em.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        if (em[a] != em[b]) return em[a] > em[b];
        return a < b;
    });
    if (static_cast<int>(idx.size()) > beam_width) idx.resize(beam_width);
    std::sort(idx.begin(), idx.end());
    return idx;
}

struct InEdge {
    int pred;
    double log_p;
    int len_id;
};

}  // namespace detail

// Viterbi-type recursion maximizing
//   sum_t l_t(x_t) + sum_t log P(x_t | x_{t-1}) - eta sum_t sum_q psi_{t,q}.
// Without pruning this is exact over graph-feasible trajectories; with
// pruning the search is restricted to the per-step candidate sets. Ties are
// broken toward the smallest predecessor index.
//
// `emission` is any callable double(int t, int node).
template <typename EmissionFn>
DecodeResult viterbi_decode(const SpatialGraph& graph, EmissionFn&& emission,
                            const ObservationSequence& obs, const PropagationParams& params,
                            const InferenceConfig& cfg) {
    cfg.validate();
    const int t_steps = obs.t_steps();
    const int n = graph.n_nodes();
    const int n_aps = obs.n_aps();
    if (t_steps < 1) throw DataError("viterbi_decode: empty observation sequence");
    if (cfg.eta > 0 && params.n_aps() != n_aps)
        throw DataError("viterbi_decode: params/observation AP count mismatch");

    // distinct edge lengths so psi is evaluated once per (t, length)
    std::map<double, int> len_ids;
    for (int i = 0; i < n; ++i)
        for (int j : graph.edges[i]) len_ids.emplace(graph.edge_length(i, j), 0);
    std::vector<double> lengths;
    lengths.reserve(len_ids.size());
    for (auto& [len, id] : len_ids) {
        id = static_cast<int>(lengths.size());
        lengths.push_back(len);
    }

    // reverse adjacency with transition log-probs P(x | x'), sorted by
    // ascending predecessor (drives the tie-break)
    std::vector<std::vector<detail::InEdge>> in_edges(n);
    for (int i = 0; i < n; ++i) {
        const auto& row = graph.edges[i];
        for (std::size_t k = 0; k < row.size(); ++k) {
            const int j = row[k];
            in_edges[j].push_back({i, graph.log_transitions[i][k],
                                   len_ids.at(graph.edge_length(i, j))});
        }
    }

    std::vector<double> em_row(n);
    auto eval_row = [&](int t) {
        for (int i = 0; i < n; ++i) em_row[i] = emission(t, i);
    };

    std::vector<double> omega_prev(n, kNegInf), omega_cur(n, kNegInf);
    std::vector<std::vector<int>> backptr(t_steps, std::vector<int>(n, -1));

    eval_row(0);
    std::vector<int> cand_prev;
    if (cfg.prune_enabled)
        cand_prev = detail::top_emission_nodes(em_row, cfg.beam_width);
    else {
        cand_prev.resize(n);
        std::iota(cand_prev.begin(), cand_prev.end(), 0);
    }
    for (int i : cand_prev) omega_prev[i] = em_row[i];

    std::vector<double> psi_by_len(lengths.size(), 0.0);
    for (int t = 1; t < t_steps; ++t) {
        eval_row(t);
        std::vector<int> cand;
        if (cfg.prune_enabled)
            cand = detail::top_emission_nodes(em_row, cfg.beam_width);
        else
            cand = cand_prev;  // all nodes

        if (cfg.eta > 0) {
            for (std::size_t l = 0; l < lengths.size(); ++l) {
                double s = 0.0;
                for (int q = 0; q < n_aps; ++q) {
                    const ApParams& a = params.ap[q];
                    s += padp_pair_energy(obs.padp_step_dist[t][q], lengths[l], a.gamma1,
                                          a.gamma2, a.sigma0_sq);
                }
                psi_by_len[l] = s;
            }
        }

        std::fill(omega_cur.begin(), omega_cur.end(), kNegInf);
        bool any = false;
        for (int x : cand) {
            double best = kNegInf;
            int arg = -1;
            for (const detail::InEdge& e : in_edges[x]) {
                if (omega_prev[e.pred] == kNegInf) continue;
                const double w =
                    cfg.eta > 0 ? e.log_p - cfg.eta * psi_by_len[e.len_id] : e.log_p;
                const double score = omega_prev[e.pred] + w;
                if (score > best) {
                    best = score;
                    arg = e.pred;
                }
            }
            if (arg < 0) continue;
            omega_cur[x] = em_row[x] + best;
            backptr[t][x] = arg;
            any = true;
        }
        if (!any)
            throw DecodeError("viterbi_decode: no feasible predecessor for candidate set at t=" +
                              std::to_string(t) + " (widen beam_width)");
        omega_prev.swap(omega_cur);
        cand_prev = std::move(cand);
    }

    int arg_end = -1;
    double best_end = kNegInf;
    for (int i = 0; i < n; ++i) {
        if (omega_prev[i] > best_end) {
            best_end = omega_prev[i];
            arg_end = i;
        }
    }
    if (arg_end < 0) throw DecodeError("viterbi_decode: no feasible terminal state");

    DecodeResult out;
    out.score = best_end;
    out.trajectory.node_indices.resize(t_steps);
    out.trajectory.node_indices[t_steps - 1] = arg_end;
    for (int t = t_steps - 1; t >= 1; --t)
        out.trajectory.node_indices[t - 1] = backptr[t][out.trajectory.node_indices[t]];
    out.trajectory.coordinates.reserve(t_steps);
    for (int idx : out.trajectory.node_indices) out.trajectory.coordinates.push_back(graph.nodes[idx]);
    return out;
}

struct PathlossFit {
    double beta_db = 0.0;
    double alpha = 0.0;
    double sigma_s_sq = 0.0;
};

// Ordinary least squares for r = beta - alpha log10(d + d0); the variance is
// the mean squared residual.
inline PathlossFit fit_pathloss(const std::vector<Vec2>& traj_coords,
                                const std::vector<double>& rss_seq, const Vec2& ap_pos,
                                double d0) {
    const std::size_t t_steps = traj_coords.size();
    if (t_steps != rss_seq.size() || t_steps == 0)
        throw DataError("fit_pathloss: length mismatch or empty input");
    std::vector<double> u(t_steps);
    double u_mean = 0.0, r_mean = 0.0;
    for (std::size_t t = 0; t < t_steps; ++t) {
        u[t] = std::log10((traj_coords[t] - ap_pos).norm() + d0);
        u_mean += u[t];
        r_mean += rss_seq[t];
    }
    u_mean /= static_cast<double>(t_steps);
    r_mean /= static_cast<double>(t_steps);
    double s_uu = 0.0, s_ur = 0.0;
    for (std::size_t t = 0; t < t_steps; ++t) {
        s_uu += (u[t] - u_mean) * (u[t] - u_mean);
        s_ur += (u[t] - u_mean) * (rss_seq[t] - r_mean);
    }
    if (s_uu <= 1e-12)
        throw FitError("fit_pathloss: singular normal equations (all positions equidistant)");
    PathlossFit fit;
    fit.alpha = -s_ur / s_uu;
    fit.beta_db = r_mean + fit.alpha * u_mean;
    double ss = 0.0;
    for (std::size_t t = 0; t < t_steps; ++t) {
        const double res = rss_seq[t] - fit.beta_db + fit.alpha * u[t];
        ss += res * res;
    }
    fit.sigma_s_sq = ss / static_cast<double>(t_steps);
    return fit;
}

// Mean squared wrapped bearing residual over all (t, q), floored.
inline double fit_angle_var(const std::vector<Vec2>& traj_coords,
                            const std::vector<std::vector<double>>& bearings,
                            const std::vector<Vec2>& aps, double floor_value) {
    const std::size_t t_steps = traj_coords.size();
    if (t_steps == 0 || aps.empty()) throw DataError("fit_angle_var: empty input");
    double acc = 0.0;
    for (std::size_t t = 0; t < t_steps; ++t)
        for (std::size_t q = 0; q < aps.size(); ++q) {
            const double res = wrap_angle(bearings[t][q] - bearing(traj_coords[t], aps[q]));
            acc += res * res;
        }
    return std::max(floor_value, acc / (static_cast<double>(t_steps) * aps.size()));
}

struct PadpFit {
    double gamma1 = 0.0;
    double gamma2 = 0.0;
};

// Moment updates for the continuity surrogate:
//   gamma1 = sum g d / (sum d^2 + eps_d)
//   gamma2 = max(gamma_min, sum (g - gamma1 d)^2 / (sum d + eps_d)).
inline std::vector<PadpFit> fit_padp_params(const std::vector<Vec2>& traj_coords,
                                            const std::vector<std::vector<double>>& g_seq,
                                            double eps_d, double gamma_min) {
    const std::size_t t_steps = traj_coords.size();
    if (t_steps != g_seq.size() || t_steps == 0)
        throw DataError("fit_padp_params: length mismatch or empty input");
    const std::size_t n_aps = g_seq[0].size();
    std::vector<double> dist(t_steps, 0.0);
    for (std::size_t t = 1; t < t_steps; ++t)
        dist[t] = (traj_coords[t] - traj_coords[t - 1]).norm();

    std::vector<PadpFit> fits(n_aps);
    for (std::size_t q = 0; q < n_aps; ++q) {
        double num = 0.0, den_sq = 0.0, den_lin = 0.0;
        for (std::size_t t = 1; t < t_steps; ++t) {
            num += g_seq[t][q] * dist[t];
            den_sq += dist[t] * dist[t];
            den_lin += dist[t];
        }
        fits[q].gamma1 = num / (den_sq + eps_d);
        double ss = 0.0;
        for (std::size_t t = 1; t < t_steps; ++t) {
            const double res = g_seq[t][q] - fits[q].gamma1 * dist[t];
            ss += res * res;
        }
        fits[q].gamma2 = std::max(gamma_min, ss / (den_lin + eps_d));
    }
    return fits;
}

struct ObjectiveBreakdown {
    double emission_sum = 0.0;
    double transition_sum = 0.0;
    double energy_sum = 0.0;
    double total = 0.0;
    bool feasible = true;
    std::string diagnostic;
};

// Eq-by-term evaluation of the regularized objective for a fixed trajectory.
inline ObjectiveBreakdown objective_breakdown(const Trajectory& traj,
                                              const PropagationParams& params,
                                              const ObservationSequence& obs,
                                              const SpatialGraph& graph,
                                              const std::vector<Vec2>& aps, double eta) {
    ObjectiveBreakdown b;
    const int t_steps = traj.t_steps();
    for (int t = 0; t < t_steps; ++t)
        b.emission_sum +=
            emission_loglik(traj.coordinates[t], obs.rss_db[t], obs.bearing_rad[t], params, aps);
    for (int t = 1; t < t_steps; ++t) {
        const double lp = graph.log_transition(traj.node_indices[t - 1], traj.node_indices[t]);
        if (lp == kNegInf) {
            b.feasible = false;
            b.diagnostic = "infeasible transition at t=" + std::to_string(t);
            b.total = kNegInf;
            return b;
        }
        b.transition_sum += lp;
    }
    for (int t = 1; t < t_steps; ++t) {
        const double d = (traj.coordinates[t] - traj.coordinates[t - 1]).norm();
        for (int q = 0; q < obs.n_aps(); ++q) {
            const ApParams& a = params.ap[q];
            b.energy_sum +=
                padp_pair_energy(obs.padp_step_dist[t][q], d, a.gamma1, a.gamma2, a.sigma0_sq);
        }
    }
    b.total = b.emission_sum + b.transition_sum - eta * b.energy_sum;
    return b;
}

inline double objective(const Trajectory& traj, const PropagationParams& params,
                        const ObservationSequence& obs, const SpatialGraph& graph,
                        const std::vector<Vec2>& aps, double eta,
                        std::string* diagnostic = nullptr) {
    const ObjectiveBreakdown b = objective_breakdown(traj, params, obs, graph, aps, eta);
    if (diagnostic && !b.feasible) *diagnostic = b.diagnostic;
    return b.total;
}

struct OptimizeResult {
    Trajectory trajectory;
    PropagationParams params;
    std::vector<double> trace;  // full objective after each decode
    int iterations = 0;
    bool converged = false;
    bool fit_warning = false;
    double objective = kNegInf;
};

namespace detail {

inline PropagationParams initial_params(const ObservationSequence& obs, const SpatialGraph& graph,
                                        const std::vector<Vec2>& aps,
                                        const InferenceConfig& cfg) {
    PropagationParams p;
    p.sigma_theta_sq = 0.07;  // ~15 degrees
    p.ap.resize(aps.size());
    const int t_steps = obs.t_steps();
    for (std::size_t q = 0; q < aps.size(); ++q) {
        double mean_d = 0.0;
        for (const Vec2& node : graph.nodes) mean_d += (node - aps[q]).norm();
        mean_d /= std::max(1, graph.n_nodes());
        double r_mean = 0.0;
        for (int t = 0; t < t_steps; ++t) r_mean += obs.rss_db[t][q];
        r_mean /= std::max(1, t_steps);
        double r_var = 0.0;
        for (int t = 0; t < t_steps; ++t) {
            const double dv = obs.rss_db[t][q] - r_mean;
            r_var += dv * dv;
        }
        r_var /= std::max(1, t_steps);
        ApParams a;
        a.alpha = 20.0;  // free-space prior
        a.beta_db = r_mean + a.alpha * std::log10(mean_d + p.d0);
        a.sigma_s_sq = std::max(r_var, 1.0);
        a.gamma1 = 0.0;
        a.gamma2 = 1.0;
        a.sigma0_sq = cfg.sigma0_sq;
        p.ap[q] = a;
    }
    return p;
}

}  // namespace detail

// Alternating optimization: eta = 0 initialization decode, then repeated
// closed-form parameter updates followed by a regularized decode, stopping on
// relative objective change or the iteration cap. Returns the best-objective
// iterate. A singular path-loss fit keeps the previous values for that AP and
// raises fit_warning.
template <typename EmissionTableFn>
OptimizeResult alternate_optimize_impl(const ObservationSequence& obs, const SpatialGraph& graph,
                                       const std::vector<Vec2>& aps, const InferenceConfig& cfg,
                                       EmissionTableFn&& make_emission) {
    cfg.validate();
    const int t_steps = obs.t_steps();
    if (t_steps < 1) throw DataError("alternate_optimize: empty observation sequence");

    OptimizeResult out;
    PropagationParams params = detail::initial_params(obs, graph, aps, cfg);

    InferenceConfig cfg0 = cfg;
    cfg0.eta = 0.0;
    std::function<double(int, int)> emission = make_emission(params);
    DecodeResult cur = viterbi_decode(graph, emission, obs, params, cfg0);
    double j_full = objective(cur.trajectory, params, obs, graph, aps, cfg.eta);
    out.trace.push_back(j_full);
    out.trajectory = cur.trajectory;
    out.params = params;
    out.objective = j_full;

    double j_prev = j_full;
    for (int k = 1; k <= cfg.max_iters; ++k) {
        out.iterations = k;
        for (std::size_t q = 0; q < aps.size(); ++q) {
            std::vector<double> rss_q(t_steps);
            for (int t = 0; t < t_steps; ++t) rss_q[t] = obs.rss_db[t][q];
            try {
                const PathlossFit fit =
                    fit_pathloss(cur.trajectory.coordinates, rss_q, aps[q], params.d0);
                params.ap[q].beta_db = fit.beta_db;
                params.ap[q].alpha = fit.alpha;
                params.ap[q].sigma_s_sq = std::max(fit.sigma_s_sq, cfg.sigma_s_floor);
            } catch (const FitError&) {
                out.fit_warning = true;  // keep previous values
            }
        }
        params.sigma_theta_sq = fit_angle_var(cur.trajectory.coordinates, obs.bearing_rad, aps,
                                              cfg.sigma_theta_floor);
        if (t_steps >= 2) {
            const auto padp_fits =
                fit_padp_params(cur.trajectory.coordinates, obs.padp_step_dist, params.eps_d,
                                params.gamma_min);
            for (std::size_t q = 0; q < aps.size(); ++q) {
                params.ap[q].gamma1 = padp_fits[q].gamma1;
                params.ap[q].gamma2 = padp_fits[q].gamma2;
            }
        }

        emission = make_emission(params);
        cur = viterbi_decode(graph, emission, obs, params, cfg);
        out.trace.push_back(cur.score);
        if (cur.score > out.objective) {
            out.objective = cur.score;
            out.trajectory = cur.trajectory;
            out.params = params;
        }
        if (std::abs(cur.score - j_prev) <= cfg.rel_tol * std::max(1.0, std::abs(j_prev))) {
            out.converged = true;
            break;
        }
        j_prev = cur.score;
    }
    return out;
}

// Knobs for turning raw CSI into observations.
struct FeatureConfig {
    double eps_h = 1e-9;
    int subcarrier_stride = 1;               // decimation before PADP/covariance
    int n_signal = 1;                        // MUSIC signal-subspace dimension
    double dict_resolution_rad = M_PI / 180.0;
    double dict_fov_rad = M_PI;              // centered on the AP boresight
    bool keep_padp = false;

    void validate() const {
        if (!(eps_h > 0) || subcarrier_stride < 1 || n_signal < 1 ||
            !(dict_resolution_rad > 0) || !(dict_fov_rad > 0))
            throw ConfigError("FeatureConfig: invalid field values");
    }
};

inline std::vector<AngularDictionary> make_dictionaries(const std::vector<ArrayGeometry>& aps,
                                                        double wavelength_m,
                                                        const FeatureConfig& fc) {
    std::vector<AngularDictionary> dicts;
    dicts.reserve(aps.size());
    for (const auto& ap : aps)
        dicts.push_back(make_dictionary(ap, wavelength_m, fc.dict_fov_rad, fc.dict_resolution_rad));
    return dicts;
}

// Extracts RSS, MUSIC bearing, PADP step distances (and optionally the PADP
// matrices) from per-AP CSI sequences csi[q][t]. RSS uses the full matrix;
// PADP and the spatial covariance see the decimated one.
inline ObservationSequence build_observations(const std::vector<std::vector<CsiMatrix>>& csi,
                                              const std::vector<AngularDictionary>& dicts,
                                              const FeatureConfig& fc, int n_threads = 0) {
    fc.validate();
    const int n_aps = static_cast<int>(csi.size());
    if (n_aps == 0 || csi[0].empty()) throw DataError("build_observations: empty CSI");
    if (static_cast<int>(dicts.size()) != n_aps)
        throw DataError("build_observations: one dictionary per AP required");
    const int t_steps = static_cast<int>(csi[0].size());
    const int n_sub = csi[0][0].n_sub();
    const int n_dec = (n_sub + fc.subcarrier_stride - 1) / fc.subcarrier_stride;
    const DelayTransform delay(n_dec);

    ObservationSequence obs;
    obs.rss_db.assign(t_steps, std::vector<double>(n_aps, 0.0));
    obs.bearing_rad.assign(t_steps, std::vector<double>(n_aps, 0.0));
    obs.padp_step_dist.assign(t_steps, std::vector<double>(n_aps, 0.0));
    if (fc.keep_padp) obs.padp.assign(t_steps, std::vector<PadpMatrix>(n_aps));

    std::vector<PadpMatrix> prev(n_aps), curr(n_aps);
    for (int t = 0; t < t_steps; ++t) {
        detail::parallel_for(
            static_cast<std::size_t>(n_aps),
            [&, t](std::size_t q) {
                const CsiMatrix& h = csi[q][t];
                obs.rss_db[t][q] = rss(h, fc.eps_h);
                const CsiMatrix dec = decimate_subcarriers(h, fc.subcarrier_stride);
                const CsiMatrix norm = normalize_csi(dec, fc.eps_h);
                curr[q] = padp(norm, dicts[q], delay);
                const Eigen::MatrixXcd cov = spatial_covariance(dec);
                obs.bearing_rad[t][q] = music_bearing(cov, dicts[q], fc.n_signal).angle_rad;
                if (t > 0) obs.padp_step_dist[t][q] = padp_distance(curr[q], prev[q]);
                if (fc.keep_padp) obs.padp[t][q] = curr[q];
            },
            n_threads);
        prev.swap(curr);
    }
    return obs;
}

// Standard entry point: emissions are dense per-step tables recomputed for
// each parameter iterate.
inline OptimizeResult alternate_optimize(const ObservationSequence& obs, const SpatialGraph& graph,
                                         const std::vector<Vec2>& aps, const InferenceConfig& cfg,
                                         int n_threads = 0) {
    const int t_steps = obs.t_steps();
    const int n = graph.n_nodes();
    auto make_emission = [&, n_threads](const PropagationParams& params) {
        auto table = std::make_shared<std::vector<double>>(
            static_cast<std::size_t>(t_steps) * n);
        detail::parallel_for(
            static_cast<std::size_t>(t_steps),
            [&, table](std::size_t t) {
                for (int i = 0; i < n; ++i)
                    (*table)[t * n + i] = emission_loglik(graph.nodes[i], obs.rss_db[t],
                                                          obs.bearing_rad[t], params, aps);
            },
            n_threads);
        return [table, n](int t, int i) { return (*table)[static_cast<std::size_t>(t) * n + i]; };
    };
    return alternate_optimize_impl(obs, graph, aps, cfg, make_emission);
}

}  // namespace rmap
