#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>
#include <vector>

#include "rmap/detail/fft.hpp"
#include "rmap/errors.hpp"
#include "rmap/ofdm.hpp"

namespace rmap {

// One CSI observation: complex N_ant x N_sub frequency response of one AP at
// one time step.
struct CsiMatrix {
    Eigen::MatrixXcd entries;
    int ap_index = 0;
    int time_index = 0;

    int n_ant() const { return static_cast<int>(entries.rows()); }
    int n_sub() const { return static_cast<int>(entries.cols()); }
};

// Nonnegative angle x delay power profile.
struct PadpMatrix {
    Eigen::MatrixXd entries;
};

// Steering vectors evaluated on a sorted azimuth grid covering the AP's
// angular search region.
struct AngularDictionary {
    std::vector<double> grid_angles_rad;
    Eigen::MatrixXcd steering_columns;  // N_ant x N_a

    int n_angles() const { return static_cast<int>(grid_angles_rad.size()); }
    int n_ant() const { return static_cast<int>(steering_columns.rows()); }
};

inline AngularDictionary make_dictionary(const ArrayGeometry& geom, double wavelength_m,
                                         double fov_rad, double resolution_rad) {
    if (!(resolution_rad > 0) || !(fov_rad > 0))
        throw ConfigError("make_dictionary: fov and resolution must be positive");
    AngularDictionary d;
    const int half = static_cast<int>(std::round(0.5 * fov_rad / resolution_rad));
    const int n = 2 * half + 1;
    if (n < 2) throw ConfigError("make_dictionary: grid needs at least 2 angles");
    d.grid_angles_rad.reserve(n);
    d.steering_columns.resize(geom.n_ant(), n);
    for (int i = 0; i < n; ++i) {
        const double ang = geom.orientation_rad + (i - half) * resolution_rad;
        d.grid_angles_rad.push_back(ang);
        d.steering_columns.col(i) = steering_vector(geom, wavelength_m, ang);
    }
    return d;
}

// Unitary DFT of size n, F(k,m) = exp(-j 2 pi k m / n) / sqrt(n). The adjoint
// application H * F^H is done by row-wise FFT rather than a dense product.
struct DelayTransform {
    int n = 0;

    explicit DelayTransform(int n_sub) : n(n_sub) {
        if (n_sub <= 0) throw ConfigError("DelayTransform: size must be positive");
    }

    Eigen::MatrixXcd matrix() const {
        Eigen::MatrixXcd f(n, n);
        const double scale = 1.0 / std::sqrt(static_cast<double>(n));
        for (int k = 0; k < n; ++k)
            for (int m = 0; m < n; ++m) {
                const double ang = -2.0 * M_PI * static_cast<double>(k) * static_cast<double>(m) /
                                   static_cast<double>(n);
                f(k, m) = scale * std::complex<double>(std::cos(ang), std::sin(ang));
            }
        return f;
    }

    // Returns X * F^H for an arbitrary complex matrix with n columns.
    Eigen::MatrixXcd apply_adjoint(const Eigen::MatrixXcd& x) const {
        if (x.cols() != n) throw DataError("DelayTransform: column count mismatch");
        Eigen::MatrixXcd out(x.rows(), n);
        const double scale = 1.0 / std::sqrt(static_cast<double>(n));
        std::vector<std::complex<double>> buf(n);
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
            for (int m = 0; m < n; ++m) buf[m] = x(r, m);
            detail::dft(buf, +1);
            for (int k = 0; k < n; ++k) out(r, k) = scale * buf[k];
        }
        return out;
    }
};

// H / (||H||_F + eps_h); suppresses global power variation.
inline CsiMatrix normalize_csi(const CsiMatrix& h, double eps_h) {
    if (!(eps_h > 0)) throw ConfigError("normalize_csi: eps_h must be positive");
    CsiMatrix out = h;
    out.entries /= h.entries.norm() + eps_h;
    return out;
}

// Power-angle-delay profile |A^H Hbar F^H|, element-wise magnitude.
inline PadpMatrix padp(const CsiMatrix& h_norm, const AngularDictionary& dict,
                       const DelayTransform& f) {
    if (h_norm.n_ant() != dict.n_ant()) throw DataError("padp: antenna count mismatch");
    if (h_norm.n_sub() != f.n) throw DataError("padp: subcarrier count mismatch");
    const Eigen::MatrixXcd proj = dict.steering_columns.adjoint() * h_norm.entries;
    return PadpMatrix{f.apply_adjoint(proj).cwiseAbs()};
}

// ||P_i - P_j||_F / sqrt(N_a N_sub).
inline double padp_distance(const PadpMatrix& pi, const PadpMatrix& pj) {
    if (pi.entries.rows() != pj.entries.rows() || pi.entries.cols() != pj.entries.cols())
        throw DataError("padp_distance: shape mismatch");
    const double cells = static_cast<double>(pi.entries.rows()) * pi.entries.cols();
    return (pi.entries - pj.entries).norm() / std::sqrt(cells);
}

// Effective received signal strength 10 log10(||H||_F^2 + eps_h), in dB.
inline double rss(const CsiMatrix& h, double eps_h) {
    if (!(eps_h > 0)) throw ConfigError("rss: eps_h must be positive");
    return 10.0 * std::log10(h.entries.squaredNorm() + eps_h);
}

// Sample spatial covariance V = H H^H / N_sub (Hermitian PSD).
inline Eigen::MatrixXcd spatial_covariance(const CsiMatrix& h) {
    if (h.n_sub() < 1) throw DataError("spatial_covariance: empty CSI");
    Eigen::MatrixXcd v = h.entries * h.entries.adjoint() / static_cast<double>(h.n_sub());
    // symmetrize away round-off
    v = 0.5 * (v + v.adjoint().eval());
    return v;
}

struct MusicResult {
    double angle_rad = 0.0;
    int index = 0;
    Eigen::VectorXd spectrum;
};

// Dominant-bearing MUSIC scan: the noise subspace spans the N_ant - n_signal
// smallest-eigenvalue eigenvectors of V and the spectrum is
// 1 / (a^H U U^H a) over the dictionary. Ties go to the smallest grid index.
inline MusicResult music_bearing(const Eigen::MatrixXcd& v, const AngularDictionary& dict,
                                 int n_signal) {
    const int n_ant = dict.n_ant();
    if (v.rows() != n_ant || v.cols() != n_ant)
        throw DataError("music_bearing: covariance must be square of size N_ant");
    if (n_signal < 1 || n_signal >= n_ant)
        throw ConfigError("music_bearing: need 1 <= n_signal < N_ant");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(v);
    if (eig.info() != Eigen::Success) throw NumericError("music_bearing: eigendecomposition failed");
    // eigenvalues ascending; noise subspace = first N_ant - n_signal columns
    const Eigen::MatrixXcd u = eig.eigenvectors().leftCols(n_ant - n_signal);

    MusicResult res;
    res.spectrum.resize(dict.n_angles());
    double best = -1.0;
    for (int i = 0; i < dict.n_angles(); ++i) {
        const Eigen::VectorXcd proj = u.adjoint() * dict.steering_columns.col(i);
        const double denom = std::max(proj.squaredNorm(), 1e-300);
        res.spectrum(i) = 1.0 / denom;
        if (res.spectrum(i) > best) {
            best = res.spectrum(i);
            res.index = i;
        }
    }
    res.angle_rad = dict.grid_angles_rad[res.index];
    return res;
}

// Removes the global phase by rotating the largest-magnitude entry onto the
// real nonnegative axis. A zero matrix is returned unchanged.
inline CsiMatrix phase_normalize(const CsiMatrix& h) {
    Eigen::Index r = 0, c = 0;
    const double mx = h.entries.cwiseAbs().maxCoeff(&r, &c);
    CsiMatrix out = h;
    if (mx == 0.0) return out;
    const std::complex<double> ref = h.entries(r, c);
    out.entries *= std::conj(ref) / std::abs(ref);
    return out;
}

// Stride-k column subsampling, keeping columns 0, k, 2k, ...
inline CsiMatrix decimate_subcarriers(const CsiMatrix& h, int stride) {
    if (stride <= 0) throw ConfigError("decimate_subcarriers: stride must be positive");
    if (stride == 1) return h;
    const int kept = (h.n_sub() + stride - 1) / stride;
    CsiMatrix out;
    out.ap_index = h.ap_index;
    out.time_index = h.time_index;
    out.entries.resize(h.n_ant(), kept);
    for (int i = 0; i < kept; ++i) out.entries.col(i) = h.entries.col(i * stride);
    return out;
}

}  // namespace rmap
