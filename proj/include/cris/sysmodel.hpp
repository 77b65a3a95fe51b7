// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

// Physical setup: surface geometry, isotropic correlation models, path loss,
// BS array steering and the direct-channel correlation matrix.

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "errors.hpp"
#include "linalg.hpp"
#include "specfun.hpp"

namespace cris {

inline constexpr double speed_of_light = 299'792'458.0;

inline double wavelength_from_carrier(double carrier_hz) {
    if (!(carrier_hz > 0.0))
        throw DomainError("carrier frequency must be positive");
    return speed_of_light / carrier_hz;
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

struct SurfaceGeometry {
    double width_m = 1.0;
    double height_m = 1.0;

    static SurfaceGeometry from_area(double area_m2, double aspect = 1.0) {
        if (!(area_m2 > 0.0) || !(aspect > 0.0))
            throw DegenerateGeometry("surface area and aspect ratio must be positive");
        return {std::sqrt(area_m2 * aspect), std::sqrt(area_m2 / aspect)};
    }

    void validate() const {
        if (!(width_m > 0.0) || !(height_m > 0.0))
            throw DegenerateGeometry("surface width and height must be positive");
    }
    double area() const { return width_m * height_m; }
    double diagonal() const { return std::hypot(width_m, height_m); }

    /// Same rectangle with the longer side as width.
    SurfaceGeometry canonical() const {
        return width_m >= height_m ? *this : SurfaceGeometry{height_m, width_m};
    }
};

enum class CorrelationKind { Sinc, Jakes };

inline std::string to_string(CorrelationKind k) { return k == CorrelationKind::Sinc ? "sinc" : "jakes"; }

inline CorrelationKind correlation_kind_from_string(const std::string& s) {
    if (s == "sinc" || s == "Sinc" || s == "S")
        return CorrelationKind::Sinc;
    if (s == "jakes" || s == "Jakes" || s == "J")
        return CorrelationKind::Jakes;
    throw DomainError("unknown correlation model '" + s + "'");
}

/// Isotropic correlation rho(r) with separation measured in wavelengths:
/// Sinc  -> sinc_norm(2 kappa r / lambda),
/// Jakes -> J0(2 pi kappa r / lambda).
/// kappa = 0 is perfect correlation.
struct IsotropicCorrelation {
    CorrelationKind kind = CorrelationKind::Jakes;
    double kappa = 1.0;
    double wavelength_m = speed_of_light / 5.8e9;

    void validate() const {
        if (!(kappa >= 0.0))
            throw DomainError("correlation scaling kappa must be nonnegative");
        if (!(wavelength_m > 0.0))
            throw DomainError("wavelength must be positive");
    }

    double operator()(double r_m) const {
        const double r = std::abs(r_m) / wavelength_m;
        if (kind == CorrelationKind::Sinc)
            return specfun::sinc_norm(2.0 * kappa * r);
        return specfun::bessel_j0(2.0 * std::numbers::pi * kappa * r);
    }

    /// Distance over which rho completes one oscillation; infinite for kappa = 0.
    double length_scale_m() const {
        return kappa > 0.0 ? wavelength_m / kappa : std::numeric_limits<double>::infinity();
    }
};

inline double correlation_at(const IsotropicCorrelation& model, double r_m) { return model(r_m); }

struct LinkBudget {
    double c0 = 1e-3; // gain at the reference distance (-30 dB)
    double d0_m = 1.0;
    double alpha_d = 6.0;
    double alpha_rb = 1.7;
    double alpha_ur = 1.7;
    double d_rb_m = 5.0;
    double d_x_m = 30.0;
    double d_y_m = 1.0;

    void validate() const {
        if (!(c0 > 0.0) || !(d0_m > 0.0))
            throw DomainError("path-loss reference gain and distance must be positive");
        if (alpha_d < 0.0 || alpha_rb < 0.0 || alpha_ur < 0.0)
            throw DomainError("path-loss exponents must be nonnegative");
        if (d_rb_m < 0.0 || d_x_m < 0.0 || d_y_m < 0.0)
            throw DegenerateGeometry("layout distances must be nonnegative");
    }
};

struct LinkDistances {
    double d_d_m;
    double d_ur_m;
    double d_rb_m;
};

/// BS and RIS on a baseline d_rb apart; the UE sits d_x along it from the BS and d_y off it.
inline LinkDistances derive_link_distances(const LinkBudget& link) {
    link.validate();
    const LinkDistances out{std::hypot(link.d_x_m, link.d_y_m), std::hypot(link.d_rb_m - link.d_x_m, link.d_y_m),
                            link.d_rb_m};
    if (!(out.d_d_m > 0.0))
        throw DegenerateGeometry("UE coincides with the BS (d_d = 0)");
    if (!(out.d_ur_m > 0.0))
        throw DegenerateGeometry("UE coincides with the RIS (d_ur = 0)");
    return out;
}

/// beta = c0 (d / d0)^-alpha
inline double path_loss_gain(double c0, double d0_m, double d_m, double alpha) {
    if (!(d_m > 0.0))
        throw DegenerateGeometry("link distance must be positive");
    return c0 * std::pow(d_m / d0_m, -alpha);
}

struct LinkGains {
    double beta_d;
    double beta_rb;
    double beta_ur;
};

struct BsArrayConfig {
    int m_x = 8;
    int m_z = 4;
    double spacing_wavelengths = 0.5;
    double theta_a_rad = std::numbers::pi / 2.0;
    double phi_a_rad = std::numbers::pi / 4.0;

    int antennas() const { return m_x * m_z; }

    void validate() const {
        if (m_x < 1 || m_z < 1)
            throw DomainError("array must have at least one antenna per row and column");
        if (!(spacing_wavelengths > 0.0))
            throw DomainError("antenna spacing must be positive");
        if (!(theta_a_rad >= 0.0 && theta_a_rad <= std::numbers::pi))
            throw DomainError("elevation angle must lie in [0, pi]");
        if (!(phi_a_rad > -std::numbers::pi && phi_a_rad <= std::numbers::pi))
            throw DomainError("azimuth angle must lie in (-pi, pi]");
    }
};

/// Vertical URA steering vector; element p * m_z + q has phase
/// 2 pi d_b (p sin(theta) cos(phi) + q cos(theta)).
inline Eigen::VectorXcd steering_vector(const BsArrayConfig& array) {
    array.validate();
    Eigen::VectorXcd a(array.antennas());
    const double u = std::sin(array.theta_a_rad) * std::cos(array.phi_a_rad);
    const double v = std::cos(array.theta_a_rad);
    for (int p = 0; p < array.m_x; ++p)
        for (int q = 0; q < array.m_z; ++q) {
            const double phase = 2.0 * std::numbers::pi * array.spacing_wavelengths * (p * u + q * v);
            a(p * array.m_z + q) = std::polar(1.0, phase);
        }
    return a;
}

/// Raw (unrepaired) correlation between BS antennas on the d_b-spaced planar grid.
inline Eigen::MatrixXd bs_correlation_raw(const BsArrayConfig& array, const IsotropicCorrelation& model) {
    array.validate();
    model.validate();
    const int m = array.antennas();
    Eigen::MatrixXd r(m, m);
    const double pitch = array.spacing_wavelengths * model.wavelength_m;
    for (int i = 0; i < m; ++i) {
        r(i, i) = 1.0;
        for (int j = 0; j < i; ++j) {
            const double dp = double(i / array.m_z - j / array.m_z);
            const double dq = double(i % array.m_z - j % array.m_z);
            r(i, j) = r(j, i) = model(pitch * std::hypot(dp, dq));
        }
    }
    return r;
}

inline linalg::RepairedCorrelation bs_correlation(const BsArrayConfig& array, const IsotropicCorrelation& model) {
    return linalg::repair_correlation(bs_correlation_raw(array, model));
}

inline Eigen::MatrixXd bs_correlation_matrix(const BsArrayConfig& array, const IsotropicCorrelation& model) {
    return bs_correlation(array, model).matrix;
}

struct SystemConfig {
    SurfaceGeometry geometry = SurfaceGeometry::from_area(0.4);
    IsotropicCorrelation correlation{};
    IsotropicCorrelation bs_correlation{};
    LinkBudget link{};
    BsArrayConfig array{};
    double transmit_snr = 1e12; // Es / sigma^2

    void validate() const {
        geometry.validate();
        correlation.validate();
        bs_correlation.validate();
        link.validate();
        array.validate();
        if (!(transmit_snr > 0.0))
            throw DomainError("transmit SNR must be positive");
    }

    /// Use one correlation family and kappa for both the surface and the BS array.
    SystemConfig& with_correlation(CorrelationKind kind, double kappa) {
        correlation.kind = bs_correlation.kind = kind;
        correlation.kappa = bs_correlation.kappa = kappa;
        return *this;
    }
};

inline LinkGains derive_gains(const SystemConfig& cfg) {
    const auto d = derive_link_distances(cfg.link);
    const auto& l = cfg.link;
    return {path_loss_gain(l.c0, l.d0_m, d.d_d_m, l.alpha_d), path_loss_gain(l.c0, l.d0_m, d.d_rb_m, l.alpha_rb),
            path_loss_gain(l.c0, l.d0_m, d.d_ur_m, l.alpha_ur)};
}

/// Everything the closed forms and the simulator need about the direct link
/// and the BS side, evaluated once per configuration.
struct DerivedSystem {
    LinkGains gains{};
    double transmit_snr = 1.0;
    int antennas = 1;
    Eigen::VectorXcd steering;
    Eigen::MatrixXd r_d;        // repaired, unit diagonal
    Eigen::MatrixXd r_d_factor; // r_d_factor * r_d_factor^T == r_d
    double a_r_a = 1.0;         // a^H R a
    double a_r2_a = 1.0;        // a^H R^2 a
    double tr_r = 1.0;
    double tr_r2 = 1.0;

    /// Recompute the quadratic forms and traces from steering and r_d.
    void refresh_statistics() {
        antennas = static_cast<int>(steering.size());
        const Eigen::VectorXcd ra = r_d.cast<std::complex<double>>() * steering;
        a_r_a = steering.dot(ra).real();
        a_r2_a = ra.squaredNorm();
        tr_r = r_d.trace();
        tr_r2 = (r_d * r_d).trace();
    }

    /// Single antenna, unit gains, R = [[1]]; used as a hand-checkable reference.
    static DerivedSystem scalar(double transmit_snr, LinkGains gains) {
        DerivedSystem s;
        s.gains = gains;
        s.transmit_snr = transmit_snr;
        s.steering = Eigen::VectorXcd::Ones(1);
        s.r_d = Eigen::MatrixXd::Ones(1, 1);
        s.r_d_factor = Eigen::MatrixXd::Ones(1, 1);
        s.refresh_statistics();
        return s;
    }
};

inline DerivedSystem derive_system(const SystemConfig& cfg) {
    cfg.validate();
    DerivedSystem s;
    s.gains = derive_gains(cfg);
    s.transmit_snr = cfg.transmit_snr;
    s.steering = steering_vector(cfg.array);
    auto repaired = bs_correlation(cfg.array, cfg.bs_correlation);
    s.r_d = std::move(repaired.matrix);
    s.r_d_factor = std::move(repaired.factor);
    s.refresh_statistics();
    return s;
}

} // namespace cris
