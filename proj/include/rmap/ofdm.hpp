#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <vector>

#include "rmap/errors.hpp"
#include "rmap/geometry.hpp"

namespace rmap {

inline constexpr double kSpeedOfLight = 299792458.0;

// OFDM sounding parameters: carrier f_c, bandwidth B, N_sub subcarriers with
// spacing B/N_sub, and the CSI sampling interval delta.
struct OfdmConfig {
    double carrier_freq_hz = 0.0;
    double bandwidth_hz = 0.0;
    int n_subcarriers = 0;
    double subcarrier_spacing_hz = 0.0;
    double sample_interval_s = 0.0;

    double wavelength_m() const { return kSpeedOfLight / carrier_freq_hz; }

    static OfdmConfig make(double carrier_freq_hz, double bandwidth_hz, int n_subcarriers,
                           double sample_interval_s) {
        OfdmConfig c;
        c.carrier_freq_hz = carrier_freq_hz;
        c.bandwidth_hz = bandwidth_hz;
        c.n_subcarriers = n_subcarriers;
        c.subcarrier_spacing_hz = bandwidth_hz / n_subcarriers;
        c.sample_interval_s = sample_interval_s;
        return c;
    }

    void validate() const {
        if (!(carrier_freq_hz > 0) || !(bandwidth_hz > 0) || n_subcarriers <= 0 ||
            !(subcarrier_spacing_hz > 0) || !(sample_interval_s > 0))
            throw ConfigError("OfdmConfig: all fields must be positive");
        const double prod = subcarrier_spacing_hz * n_subcarriers;
        if (std::abs(prod - bandwidth_hz) > 1e-9 * bandwidth_hz)
            throw ConfigError("OfdmConfig: spacing * n_subcarriers must equal bandwidth");
    }
};

// Antenna array of one AP: local element coordinates, the local-to-global
// rotation, the boresight azimuth, and the AP position in the global frame.
struct ArrayGeometry {
    std::vector<Vec2> element_positions;
    Eigen::Matrix2d rotation = Eigen::Matrix2d::Identity();
    double orientation_rad = 0.0;
    Vec2 ap_position = Vec2::Zero();

    int n_ant() const { return static_cast<int>(element_positions.size()); }

    void validate() const {
        if (element_positions.empty()) throw ConfigError("ArrayGeometry: needs at least 1 element");
        const Eigen::Matrix2d err = rotation * rotation.transpose() - Eigen::Matrix2d::Identity();
        if (err.cwiseAbs().maxCoeff() > 1e-9)
            throw ConfigError("ArrayGeometry: rotation must be orthonormal");
    }
};

// Array response for a plane wave from azimuth `direction_rad`:
// element n carries phase exp(-j (2 pi / lambda) u(theta)^T R r_n)
// with u(theta) = [cos theta, sin theta]^T. Every entry has unit magnitude.
inline Eigen::VectorXcd steering_vector(const ArrayGeometry& geom, double wavelength_m,
                                        double direction_rad) {
    const Vec2 u(std::cos(direction_rad), std::sin(direction_rad));
    const double k = 2.0 * M_PI / wavelength_m;
    Eigen::VectorXcd a(geom.n_ant());
    for (int n = 0; n < geom.n_ant(); ++n) {
        const double phase = -k * u.dot(geom.rotation * geom.element_positions[n]);
        a(n) = std::complex<double>(std::cos(phase), std::sin(phase));
    }
    return a;
}

inline std::vector<Vec2> ap_positions(const std::vector<ArrayGeometry>& aps) {
    std::vector<Vec2> out;
    out.reserve(aps.size());
    for (const auto& ap : aps) out.push_back(ap.ap_position);
    return out;
}

// Uniform linear array along the local y axis, so the broadside points at
// `orientation_rad` in the global frame and the phase of element n reduces to
// -(2 pi / lambda) n spacing sin(theta - orientation).
inline ArrayGeometry make_ula(const Vec2& ap_position, double orientation_rad, int n_ant,
                              double element_spacing_m) {
    ArrayGeometry g;
    g.ap_position = ap_position;
    g.orientation_rad = orientation_rad;
    g.rotation = Eigen::Rotation2Dd(orientation_rad).toRotationMatrix();
    g.element_positions.reserve(n_ant);
    for (int n = 0; n < n_ant; ++n) g.element_positions.emplace_back(0.0, n * element_spacing_m);
    return g;
}

}  // namespace rmap
