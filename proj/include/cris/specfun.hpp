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

// Special-function kernels used by the correlation models and the moment engine:
// normalized sinc, Bessel J0, the Gauss hypergeometric 2F1(-1/2,-1/2;1;z) and the
// regularized lower incomplete gamma function.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>

#include "errors.hpp"

namespace cris::specfun {

struct EvalTolerance {
    double abs_tol = 1e-12;
    double rel_tol = 1e-10;
    std::size_t max_terms = 1'000'000;

    void validate() const {
        if (!(abs_tol > 0.0) || !(rel_tol > 0.0) || max_terms < 1)
            throw DomainError("EvalTolerance: abs_tol, rel_tol must be > 0 and max_terms >= 1");
    }
};

/// sin(pi x) / (pi x), equal to 1 at x = 0.
inline double sinc_norm(double x) {
    const double px = std::numbers::pi * x;
    if (std::abs(px) < 1e-4) {
        // Taylor series, error below x^6 terms
        const double p2 = px * px;
        return 1.0 - p2 / 6.0 + p2 * p2 / 120.0;
    }
    return std::sin(px) / px;
}

namespace detail {

inline double j0_series(double x) {
    const double q = 0.25 * x * x;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 200; ++k) {
        term *= -q / (double(k) * double(k));
        sum += term;
        if (std::abs(term) < 1e-17 * (1.0 + std::abs(sum)))
            break;
    }
    return sum;
}

// Hankel expansion J0(x) = sqrt(2/(pi x)) (P cos chi - Q sin chi), chi = x - pi/4.
// Summed up to the smallest term of the asymptotic series.
inline double j0_asymptotic(double x) {
    double p = 1.0;
    double q = 0.0;
    double a = 1.0; // a_k / x^k
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 1; k < 200; ++k) {
        const double f = (2.0 * k - 1.0);
        a *= f * f / (8.0 * k * x);
        if (a > prev)
            break;
        prev = a;
        // P = 1 - a2 + a4 - ..., Q = -a1 + a3 - ...
        switch (k % 4) {
        case 1: q -= a; break;
        case 2: p -= a; break;
        case 3: q += a; break;
        case 0: p += a; break;
        }
        if (a < 1e-17)
            break;
    }
    const double chi = x - 0.25 * std::numbers::pi;
    return std::sqrt(2.0 / (std::numbers::pi * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

} // namespace detail

/// Bessel function of the first kind, order zero. Even in x.
inline double bessel_j0(double x) {
    x = std::abs(x);
    if (x <= 12.0)
        return detail::j0_series(x);
    return detail::j0_asymptotic(x);
}

/// 2F1(-1/2, -1/2; 1; z) for z in [0, 1].
///
/// Power series below z = 1/2. Above, the equivalent elliptic form
/// (2/pi) [2 E(z) - (1 - z) K(z)] (parameter convention m = z) evaluated by the
/// arithmetic-geometric mean, which stays quadratically convergent up to z = 1 where
/// the plain series only decays like k^-3.
inline double gauss_2f1_half(double z, const EvalTolerance& tol = {}) {
    if (!(z >= 0.0 && z <= 1.0))
        throw DomainError("gauss_2f1_half: argument must lie in [0, 1], got " + std::to_string(z));
    constexpr double endpoint = 4.0 / std::numbers::pi;
    if (1.0 - z < 1e-12)
        return endpoint;
    if (z <= 0.5) {
        double term = 1.0;
        double sum = 1.0;
        for (std::size_t k = 0; k < tol.max_terms; ++k) {
            const double c = (double(k) - 0.5) / (double(k) + 1.0);
            term *= c * c * z;
            sum += term;
            if (std::abs(term) <= 1e-3 * std::min(tol.abs_tol, tol.rel_tol * sum))
                break;
        }
        return sum;
    }
    // AGM: a_0 = 1, b_0 = sqrt(1 - z), c_0^2 = z.
    // K = pi / (2 a_N),  E = K (1 - sum_n 2^(n-1) c_n^2).
    double a = 1.0;
    double b = std::sqrt(1.0 - z);
    double weighted = z; // sum_n 2^n c_n^2
    double pow2 = 1.0;
    for (int n = 0; n < 64; ++n) {
        const double c = 0.5 * (a - b);
        const double an = 0.5 * (a + b);
        b = std::sqrt(a * b);
        a = an;
        pow2 *= 2.0;
        weighted += pow2 * c * c;
        if (std::abs(c) < 1e-17 * a)
            break;
    }
    const double k = 0.5 * std::numbers::pi / a;
    // 2E - (1-z)K = K (1 + z - sum_n 2^n c_n^2)
    return (2.0 / std::numbers::pi) * k * (1.0 + z - weighted);
}

namespace detail {

// log(1 + t) - t without cancellation for small t.
inline double log1pmx(double t) {
    if (std::abs(t) > 0.25)
        return std::log1p(t) - t;
    double term = t;
    double sum = 0.0;
    for (int k = 2; k < 200; ++k) {
        term *= -t;
        const double add = term / k;
        sum += add;
        if (std::abs(add) < 1e-17 * std::abs(sum))
            break;
    }
    return sum;
}

// log(x^a e^-x / Gamma(a)). For large a the naive difference of O(a) terms loses
// about log10(a) digits, so use Stirling's series around x = a instead.
inline double log_gamma_prefactor(double a, double x) {
    if (a < 20.0)
        return a * std::log(x) - x - std::lgamma(a);
    const double ia = 1.0 / a;
    const double ia2 = ia * ia;
    // log Gamma(a) - [(a - 1/2) log a - a + log(2 pi)/2]
    const double stirling = ia * (1.0 / 12.0 - ia2 * (1.0 / 360.0 - ia2 * (1.0 / 1260.0 - ia2 / 1680.0)));
    return a * log1pmx((x - a) / a) + 0.5 * std::log(a) - 0.5 * std::log(2.0 * std::numbers::pi) - stirling;
}

} // namespace detail

/// Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a).
inline double reg_lower_gamma(double a, double x, const EvalTolerance& tol = {}) {
    if (!(a > 0.0))
        throw DomainError("reg_lower_gamma: shape must be positive, got " + std::to_string(a));
    if (!(x >= 0.0))
        throw DomainError("reg_lower_gamma: argument must be nonnegative, got " + std::to_string(x));
    if (x == 0.0)
        return 0.0;
    if (std::isinf(x))
        return 1.0;
    const double log_prefactor = detail::log_gamma_prefactor(a, x);
    const double eps = std::min(tol.rel_tol, 1e-15);

    if (x < a + 1.0) {
        // P = x^a e^-x / Gamma(a+1) * sum_n x^n / ((a+1)...(a+n))
        double ap = a;
        double del = 1.0 / a;
        double sum = del;
        for (std::size_t n = 0; n < tol.max_terms; ++n) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::abs(del) < std::abs(sum) * eps)
                break;
        }
        return std::clamp(sum * std::exp(log_prefactor), 0.0, 1.0);
    }

    // Q(a, x) by the Legendre continued fraction, modified Lentz.
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (std::size_t i = 1; i < tol.max_terms; ++i) {
        const double an = -double(i) * (double(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny)
            d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny)
            c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < eps)
            break;
    }
    return std::clamp(1.0 - std::exp(log_prefactor) * h, 0.0, 1.0);
}

} // namespace cris::specfun
