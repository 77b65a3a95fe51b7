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

// Closed-form and quadrature statistics of the optimally configured surface:
// moments of the aggregate amplitude Y, SNR mean and second moment, the gamma
// outage approximation, the spectral-efficiency bound and channel hardening.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "errors.hpp"
#include "quadrature.hpp"
#include "specfun.hpp"
#include "sysmodel.hpp"

namespace cris {

/// m_k = E[Y^k] of Y = integral of |h_ur| over the surface.
struct YMoments {
    double m1 = 0.0;
    double m2 = 0.0;
    double m3 = 0.0;
    double m4 = 0.0;
};

struct SnrMoments {
    double mu1 = 0.0; // E[SNR]
    double mu2 = 0.0; // E[SNR^2]

    double variance() const { return mu2 - mu1 * mu1; }
};

/// Method-of-moments gamma distribution with shape alpha_g and rate beta_g.
struct GammaFit {
    double alpha_g = 1.0;
    double beta_g = 1.0;

    double mean() const { return alpha_g / beta_g; }
    double variance() const { return alpha_g / (beta_g * beta_g); }
};

struct QuadratureSpec {
    double rel_tol = 1e-8;
    /// Absolute floor, in units of beta_ur (W H)^2.
    double abs_tol = 1e-14;
    /// Gauss-Legendre nodes per panel in each dimension of the 4-D rule.
    std::size_t nodes_4d = 8;
    /// 4-D panels per correlation length scale (lambda / kappa).
    double panels_per_length = 1.0;
    std::size_t max_intervals = 5000;
    double max_evaluations_4d = 4e9;

    void validate() const {
        if (!(rel_tol > 0.0 && rel_tol < 1.0))
            throw QuadratureFailure("relative tolerance must lie in (0, 1), got " + std::to_string(rel_tol));
        if (!(abs_tol > 0.0 && abs_tol < 1.0))
            throw QuadratureFailure("absolute tolerance must lie in (0, 1), got " + std::to_string(abs_tol));
        if (nodes_4d < 8)
            throw QuadratureFailure("4-D rule needs at least 8 nodes per panel");
        if (!(panels_per_length > 0.0))
            throw QuadratureFailure("panels_per_length must be positive");
    }
};

/// E[Y] = (1/2) sqrt(pi beta_ur) W H
inline double moment_m1(const SurfaceGeometry& geom, double beta_ur) {
    geom.validate();
    if (!(beta_ur > 0.0))
        throw DomainError("beta_ur must be positive");
    return 0.5 * std::sqrt(std::numbers::pi * beta_ur) * geom.width_m * geom.height_m;
}

namespace detail {

// f_s(r) W^2 H^2 / (4 r) for W >= H, on each of the three support pieces.
inline double rect_distance_bracket(double w, double h, double r) {
    if (r < h)
        return 0.5 * std::numbers::pi * w * h - (w + h) * r + 0.5 * r * r;
    const double sh = std::sqrt(std::max(r * r - h * h, 0.0));
    const double asin_h = std::asin(std::min(h / r, 1.0));
    if (r < w)
        return w * h * asin_h - w * r + w * sh - 0.5 * h * h;
    const double sw = std::sqrt(std::max(r * r - w * w, 0.0));
    const double acos_w = std::acos(std::min(w / r, 1.0));
    return w * h * (asin_h - acos_w) - 0.5 * (w * w + h * h) + w * sh - 0.5 * r * r + h * sw;
}

template <class Model>
double squared_correlation(const Model& model, double r) {
    const double rho = model(r);
    return std::clamp(rho * rho, 0.0, 1.0);
}

template <class Model>
double length_scale_of(const Model& model) {
    if constexpr (requires { model.length_scale_m(); })
        return model.length_scale_m();
    else
        return std::numeric_limits<double>::infinity();
}

} // namespace detail

/// Density of the distance between two independent uniform points in the
/// rectangle. Orientation does not matter; zero outside [0, diagonal].
inline double rect_distance_pdf(const SurfaceGeometry& geom, double r) {
    geom.validate();
    const auto c = geom.canonical();
    const double w = c.width_m;
    const double h = c.height_m;
    if (r < 0.0 || r > c.diagonal())
        return 0.0;
    return 4.0 * r / (w * w * h * h) * detail::rect_distance_bracket(w, h, r);
}

/// Support breakpoints {0, H, W, diagonal} of the canonical rectangle; the density
/// has derivative kinks at the interior ones. W == H collapses the middle piece.
inline std::vector<double> rect_distance_breakpoints(const SurfaceGeometry& geom) {
    const auto c = geom.canonical();
    std::vector<double> pts{0.0, c.height_m};
    if (c.width_m > c.height_m)
        pts.push_back(c.width_m);
    pts.push_back(c.diagonal());
    return pts;
}

/// Piecewise adaptive integral of f(r) f_s(r) over the support.
template <class F>
quad::Result integrate_against_distance_pdf(const SurfaceGeometry& geom, F&& f, double rel_tol, double abs_tol,
                                            std::size_t max_intervals) {
    const auto pts = rect_distance_breakpoints(geom);
    quad::Result total;
    total.converged = true;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        auto piece = quad::integrate([&](double r) { return f(r) * rect_distance_pdf(geom, r); }, pts[k], pts[k + 1],
                                     rel_tol, abs_tol / double(pts.size() - 1), max_intervals);
        total.value += piece.value;
        total.error += piece.error;
        total.evaluations += piece.evaluations;
        total.converged = total.converged && piece.converged;
    }
    total.converged = total.converged && total.error <= std::max(abs_tol, rel_tol * std::abs(total.value));
    return total;
}

/// E[Y^2] for isotropic correlation as a single integral over the point-separation
/// density: W^2 H^2 * integral of g(r) f_s(r), g(r) = (pi beta_ur / 4) 2F1(-1/2,-1/2;1;|rho(r)|^2).
/// Model is any callable r_m -> rho.
template <class Model>
double moment_m2_iso(const SurfaceGeometry& geom, const Model& model, double beta_ur, const QuadratureSpec& quad = {}) {
    quad.validate();
    geom.validate();
    if (!(beta_ur > 0.0))
        throw DomainError("beta_ur must be positive");
    const auto canon = geom.canonical();
    const auto res = integrate_against_distance_pdf(
        canon, [&](double r) { return specfun::gauss_2f1_half(detail::squared_correlation(model, r)); }, quad.rel_tol,
        quad.abs_tol, quad.max_intervals);
    if (!res.converged)
        throw QuadratureFailure("m2 integral did not converge: estimate " + std::to_string(res.value) + " +- " +
                                std::to_string(res.error));
    const double area = canon.area();
    return 0.25 * std::numbers::pi * beta_ur * area * area * res.value;
}

/// E[Y^2] from the full four-fold integral over both points, by a tensor-product
/// composite Gauss-Legendre rule. Validation oracle for moment_m2_iso; the cost
/// grows with the fourth power of the surface size in correlation lengths.
template <class Model>
double moment_m2_quad4(const SurfaceGeometry& geom, const Model& model, double beta_ur, const QuadratureSpec& quad = {}) {
    quad.validate();
    geom.validate();
    if (!(beta_ur > 0.0))
        throw DomainError("beta_ur must be positive");
    const double scale = detail::length_scale_of(model);
    auto panels_for = [&](double side) {
        if (!std::isfinite(scale))
            return std::size_t{1};
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(side / scale * quad.panels_per_length)));
    };
    const auto rx = quad::composite_gauss_legendre(0.0, geom.width_m, panels_for(geom.width_m), quad.nodes_4d);
    const auto ry = quad::composite_gauss_legendre(0.0, geom.height_m, panels_for(geom.height_m), quad.nodes_4d);

    // The integrand depends on the two points only through (x - x')^2 + (y - y')^2,
    // so each unordered node pair is visited once with doubled weight.
    struct Pair {
        double d2, w;
    };
    auto pairs_of = [](const quad::Rule& rule) {
        std::vector<Pair> out;
        const std::size_t n = rule.nodes.size();
        out.reserve(n * (n + 1) / 2);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) {
                const double d = rule.nodes[i] - rule.nodes[j];
                out.push_back({d * d, rule.weights[i] * rule.weights[j] * (i == j ? 1.0 : 2.0)});
            }
        return out;
    };
    const auto px = pairs_of(rx);
    const auto py = pairs_of(ry);
    const double evaluations = double(px.size()) * double(py.size());
    if (evaluations > quad.max_evaluations_4d)
        throw QuadratureFailure("4-D rule needs " + std::to_string(evaluations) + " evaluations, budget is " +
                                std::to_string(quad.max_evaluations_4d));
    double total = 0.0;
    for (const auto& a : px) {
        double row = 0.0;
        for (const auto& b : py)
            row += b.w * specfun::gauss_2f1_half(detail::squared_correlation(model, std::sqrt(a.d2 + b.d2)));
        total += a.w * row;
    }
    return 0.25 * std::numbers::pi * beta_ur * total;
}

/// Third and fourth moments of a gamma variable with the given first two moments.
inline YMoments moments_m3_m4(double m1, double m2) {
    if (!(m1 > 0.0))
        throw DomainError("m1 must be positive");
    if (m2 < m1 * m1)
        throw DomainError("m2 < m1^2 implies negative variance");
    const double a = 2.0 * m2 - m1 * m1;
    return {m1, m2, a * m2 / m1, (3.0 * m2 - 2.0 * m1 * m1) * a * m2 / (m1 * m1)};
}

/// mu1 = g (M beta_d + M beta_rb m2 + m1 sqrt(pi beta_rb beta_d a^H R_d a))
inline double mean_snr(const DerivedSystem& sys, double m1, double m2) {
    const auto& g = sys.gains;
    const double m = sys.antennas;
    return sys.transmit_snr * (m * g.beta_d + m * g.beta_rb * m2 +
                               m1 * std::sqrt(std::numbers::pi * g.beta_rb * g.beta_d * sys.a_r_a));
}

inline double mean_snr(const SystemConfig& cfg, double m1, double m2) { return mean_snr(derive_system(cfg), m1, m2); }

/// E[SNR^2], expanding the square of the optimal SNR with Y independent of h_d.
inline double second_moment_snr(const DerivedSystem& sys, const YMoments& y) {
    const auto& g = sys.gains;
    const double m = sys.antennas;
    const double pi = std::numbers::pi;
    const double direct = g.beta_d * g.beta_d * (sys.tr_r2 + sys.tr_r * sys.tr_r);
    const double cross_m2 = 2.0 * m * m * g.beta_d * g.beta_rb * y.m2;
    const double cross_m1 = y.m1 * std::sqrt(pi * g.beta_rb * g.beta_d * g.beta_d * g.beta_d * sys.a_r_a) *
                            (2.0 * m + (sys.a_r_a > 0.0 ? sys.a_r2_a / sys.a_r_a : 0.0));
    const double surface = m * m * g.beta_rb * g.beta_rb * y.m4;
    const double cross_m3 = 2.0 * m * y.m3 * std::sqrt(pi * g.beta_d * g.beta_rb * g.beta_rb * g.beta_rb * sys.a_r_a);
    const double aligned = 4.0 * g.beta_d * g.beta_rb * y.m2 * sys.a_r_a;
    const double gamma2 = sys.transmit_snr * sys.transmit_snr;
    return gamma2 * (direct + cross_m2 + cross_m1 + surface + cross_m3 + aligned);
}

inline double second_moment_snr(const SystemConfig& cfg, const YMoments& y) {
    return second_moment_snr(derive_system(cfg), y);
}

inline GammaFit gamma_fit(double mu1, double mu2) {
    const double var = mu2 - mu1 * mu1;
    if (!(var > 0.0))
        throw NonPositiveVariance("gamma fit needs mu2 > mu1^2 (variance " + std::to_string(var) + ")");
    return {mu1 * mu1 / var, mu1 / var};
}

inline GammaFit gamma_fit(const SnrMoments& s) { return gamma_fit(s.mu1, s.mu2); }

/// P(SNR <= x) under the gamma approximation.
inline double outage_probability(const GammaFit& fit, double x) {
    return specfun::reg_lower_gamma(fit.alpha_g, fit.beta_g * x);
}

/// Jensen bound on the mean spectral efficiency, bits/s/Hz.
inline double se_bound(double mu1) { return std::log2(1.0 + mu1); }

/// Second-order Taylor term of E[log2(1 + SNR)] left out of the Jensen bound.
inline double dominant_error_term(double mu1, double mu2) {
    const double d = 1.0 + mu1;
    return (mu2 - mu1 * mu1) / (2.0 * std::numbers::ln2 * d * d);
}

/// Squared coefficient of variation of the channel gain, (mu2 - mu1^2) / mu1^2.
inline double cv_squared(double mu1, double mu2) {
    if (!(mu1 > 0.0))
        throw DomainError("cv_squared needs mu1 > 0");
    return (mu2 - mu1 * mu1) / (mu1 * mu1);
}

/// Full analytic chain for one configuration.
struct AnalyticResult {
    LinkGains gains{};
    YMoments y{};
    SnrMoments snr{};

    GammaFit fit() const { return gamma_fit(snr); }
    double seb() const { return se_bound(snr.mu1); }
    double det() const { return dominant_error_term(snr.mu1, snr.mu2); }
    double cv2() const { return cv_squared(snr.mu1, snr.mu2); }
};

inline AnalyticResult analyze(const SystemConfig& cfg, const DerivedSystem& sys, const QuadratureSpec& quad = {}) {
    AnalyticResult out;
    out.gains = sys.gains;
    const double m1 = moment_m1(cfg.geometry, sys.gains.beta_ur);
    const double m2 = std::max(moment_m2_iso(cfg.geometry, cfg.correlation, sys.gains.beta_ur, quad), m1 * m1);
    out.y = moments_m3_m4(m1, m2);
    out.snr.mu1 = mean_snr(sys, out.y.m1, out.y.m2);
    out.snr.mu2 = second_moment_snr(sys, out.y);
    return out;
}

inline AnalyticResult analyze(const SystemConfig& cfg, const QuadratureSpec& quad = {}) {
    return analyze(cfg, derive_system(cfg), quad);
}

} // namespace cris
