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

// Monte Carlo oracle: the continuous surface is discretized on a cell-centred
// grid, the correlated Rayleigh field and the direct channel are sampled, and the
// SNR of the optimal phase design is evaluated per replicate.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "linalg.hpp"
#include "rng.hpp"
#include "specfun.hpp"
#include "sysmodel.hpp"

namespace cris {

struct GridSpec {
    int nx = 32;
    int ny = 32;

    void validate() const {
        if (nx < 2 || ny < 2)
            throw DomainError("grid needs at least 2 points per side");
    }
    int points() const { return nx * ny; }
    double cell_area(const SurfaceGeometry& geom) const { return geom.area() / (double(nx) * double(ny)); }

    /// Spread a budget of nx * ny points over the rectangle so cells stay close to square.
    static GridSpec adapted(const SurfaceGeometry& geom, int total_points) {
        const double ratio = geom.width_m / geom.height_m;
        int nx = std::max(2, static_cast<int>(std::lround(std::sqrt(double(total_points) * ratio))));
        int ny = std::max(2, static_cast<int>(std::lround(double(total_points) / double(nx))));
        nx = std::max(2, static_cast<int>(std::lround(double(total_points) / double(ny))));
        return {nx, ny};
    }
};

/// Cell centres; point index ix * ny + iy, columns (x, y).
inline Eigen::MatrixX2d grid_points(const SurfaceGeometry& geom, const GridSpec& grid) {
    grid.validate();
    Eigen::MatrixX2d p(grid.points(), 2);
    const double dx = geom.width_m / grid.nx;
    const double dy = geom.height_m / grid.ny;
    for (int ix = 0; ix < grid.nx; ++ix)
        for (int iy = 0; iy < grid.ny; ++iy) {
            p(ix * grid.ny + iy, 0) = (ix + 0.5) * dx;
            p(ix * grid.ny + iy, 1) = (iy + 0.5) * dy;
        }
    return p;
}

namespace detail {

// rho at every grid offset (|dix|, |diy|); the covariance is a function of these only.
template <class Model>
Eigen::MatrixXd offset_correlation(const SurfaceGeometry& geom, const GridSpec& grid, const Model& model) {
    const double dx = geom.width_m / grid.nx;
    const double dy = geom.height_m / grid.ny;
    Eigen::MatrixXd t(grid.nx, grid.ny);
    for (int a = 0; a < grid.nx; ++a)
        for (int b = 0; b < grid.ny; ++b)
            t(a, b) = model(std::hypot(a * dx, b * dy));
    return t;
}

} // namespace detail

/// Factorized covariance of the field on the grid: factor * factor^T = beta_ur * Sigma.
struct FieldSampler {
    SurfaceGeometry geometry;
    GridSpec grid;
    double beta_ur = 0.0;
    double cell_area = 0.0;
    Eigen::MatrixXd factor; // points x rank
    double clipped_mass = 0.0;

    int points() const { return static_cast<int>(factor.rows()); }
    int rank() const { return static_cast<int>(factor.cols()); }
};

struct SamplerOptions {
    /// Eigenvalues below this fraction of the point count are dropped as numerical noise.
    double rank_floor = 1e-13;
    double max_clipped_mass = 1e-6;
};

/// Sigma_ij = rho(|p_i - p_j|). Factorized by eigendecomposition, which also acts as
/// the PSD repair: eigenvalues at or below the noise floor are dropped and rows are
/// rescaled so the diagonal of the product is exactly beta_ur.
template <class Model>
FieldSampler build_surface_covariance(const SurfaceGeometry& geom, const GridSpec& grid, const Model& model,
                                      double beta_ur, const SamplerOptions& opt = {}) {
    geom.validate();
    grid.validate();
    if (!(beta_ur > 0.0))
        throw DomainError("beta_ur must be positive");
    const int n = grid.points();
    const auto table = detail::offset_correlation(geom, grid, model);
    Eigen::MatrixXd sigma(n, n);
    for (int i = 0; i < n; ++i) {
        const int ix = i / grid.ny;
        const int iy = i % grid.ny;
        for (int j = i; j < n; ++j)
            sigma(j, i) = table(std::abs(j / grid.ny - ix), std::abs(j % grid.ny - iy));
    }
    const auto eig = linalg::symmetric_eigen(sigma, opt.rank_floor * n);
    FieldSampler s;
    s.geometry = geom;
    s.grid = grid;
    s.beta_ur = beta_ur;
    s.cell_area = grid.cell_area(geom);
    const double kept = eig.values.sum();
    s.clipped_mass = std::abs(double(n) - kept) / double(n);
    if (s.clipped_mass > opt.max_clipped_mass || eig.values.size() == 0)
        throw CovarianceRepairFailure("surface covariance repair removed " + std::to_string(s.clipped_mass) +
                                      " of the eigenvalue mass");
    s.factor = eig.vectors * eig.values.cwiseSqrt().asDiagonal();
    const double root_beta = std::sqrt(beta_ur);
    for (Eigen::Index i = 0; i < s.factor.rows(); ++i)
        s.factor.row(i) *= root_beta / s.factor.row(i).norm();
    return s;
}

/// Fill z with i.i.d. CN(0, 1) entries (real and imaginary parts of variance 1/2).
template <class Derived>
void fill_circular_normal(rng::Engine& eng, Eigen::MatrixBase<Derived>& re, Eigen::MatrixBase<Derived>& im) {
    std::normal_distribution<double> normal(0.0, std::numbers::sqrt2 / 2.0);
    for (Eigen::Index k = 0; k < re.size(); ++k) {
        re(k) = normal(eng);
        im(k) = normal(eng);
    }
}

/// One realization of h_ur on the grid.
inline Eigen::VectorXcd sample_field(const FieldSampler& sampler, rng::Engine& eng) {
    Eigen::VectorXd re(sampler.rank());
    Eigen::VectorXd im(sampler.rank());
    fill_circular_normal(eng, re, im);
    Eigen::VectorXcd h(sampler.points());
    h.real() = sampler.factor * re;
    h.imag() = sampler.factor * im;
    return h;
}

/// Riemann sum of |h_ur| over the cells.
inline double compute_Y(const Eigen::VectorXcd& field, double cell_area) { return cell_area * field.cwiseAbs().sum(); }

inline double compute_Y(const Eigen::VectorXcd& field, const FieldSampler& sampler) {
    if (field.size() != sampler.points())
        throw DomainError("field size does not match the grid");
    return compute_Y(field, sampler.cell_area);
}

/// h_d ~ CN(0, beta_d R_d).
inline Eigen::VectorXcd sample_direct_channel(const Eigen::MatrixXd& r_d_factor, double beta_d, rng::Engine& eng) {
    Eigen::VectorXd re(r_d_factor.cols());
    Eigen::VectorXd im(r_d_factor.cols());
    fill_circular_normal(eng, re, im);
    const double s = std::sqrt(beta_d);
    Eigen::VectorXcd h(r_d_factor.rows());
    h.real() = s * (r_d_factor * re);
    h.imag() = s * (r_d_factor * im);
    return h;
}

inline Eigen::VectorXcd sample_direct_channel(const DerivedSystem& sys, rng::Engine& eng) {
    return sample_direct_channel(sys.r_d_factor, sys.gains.beta_d, eng);
}

struct PhaseProfile {
    std::complex<double> omega{1.0, 0.0};
    Eigen::VectorXcd phases; // Phi at each grid point
    bool degenerate = false; // a^H h_d == 0, omega forced to 1
};

/// Phi(x, y) = omega exp(-j arg h_ur(x, y)), omega = a^H h_d / |a^H h_d|, with the
/// surface steering a_r taken as 1 (it cancels between the two RIS hops).
inline PhaseProfile optimal_phase_profile(const Eigen::VectorXcd& field, const Eigen::VectorXcd& h_d,
                                          const Eigen::VectorXcd& a_b) {
    PhaseProfile p;
    const std::complex<double> proj = a_b.dot(h_d); // a^H h_d
    if (std::abs(proj) > 0.0)
        p.omega = proj / std::abs(proj);
    else
        p.degenerate = true;
    p.phases.resize(field.size());
    for (Eigen::Index i = 0; i < field.size(); ++i) {
        const double mag = std::abs(field(i));
        p.phases(i) = mag > 0.0 ? p.omega * std::conj(field(i)) / mag : p.omega;
    }
    return p;
}

/// Effective channel h_d + sqrt(beta_rb) a_b * sum_cells Phi h_ur dA for any profile.
inline Eigen::VectorXcd effective_channel(const Eigen::VectorXcd& field, double cell_area,
                                          const Eigen::VectorXcd& phases, const Eigen::VectorXcd& h_d,
                                          const Eigen::VectorXcd& a_b, double beta_rb) {
    const std::complex<double> surface = cell_area * phases.cwiseProduct(field).sum();
    return h_d + std::sqrt(beta_rb) * surface * a_b;
}

inline double snr_for_profile(const DerivedSystem& sys, const Eigen::VectorXcd& field, double cell_area,
                              const Eigen::VectorXcd& phases, const Eigen::VectorXcd& h_d) {
    return sys.transmit_snr *
           effective_channel(field, cell_area, phases, h_d, sys.steering, sys.gains.beta_rb).squaredNorm();
}

/// g (h_d^H h_d + M beta_rb Y^2 + 2 sqrt(beta_rb) Y |a^H h_d|)
inline double optimal_snr_sample(const DerivedSystem& sys, const Eigen::VectorXcd& h_d, double y) {
    const double proj = std::abs(sys.steering.dot(h_d));
    const double brb = sys.gains.beta_rb;
    return sys.transmit_snr * (h_d.squaredNorm() + sys.antennas * brb * y * y + 2.0 * std::sqrt(brb) * y * proj);
}

/// Same SNR written as g || h_d + sqrt(beta_rb) a_b Y omega ||^2.
inline double optimal_snr_norm_form(const DerivedSystem& sys, const Eigen::VectorXcd& h_d, double y) {
    const std::complex<double> proj = sys.steering.dot(h_d);
    const std::complex<double> omega = std::abs(proj) > 0.0 ? proj / std::abs(proj) : std::complex<double>(1.0);
    return sys.transmit_snr * (h_d + std::sqrt(sys.gains.beta_rb) * y * omega * sys.steering).squaredNorm();
}

struct Summary {
    double mean = 0.0;
    double variance = 0.0; // unbiased
    double std_error = 0.0;
};

inline Summary summarize(std::span<const double> x) {
    Summary s;
    const std::size_t n = x.size();
    if (n == 0)
        return s;
    double sum = 0.0;
    for (double v : x)
        sum += v;
    s.mean = sum / double(n);
    if (n > 1) {
        double ss = 0.0;
        for (double v : x)
            ss += (v - s.mean) * (v - s.mean);
        s.variance = ss / double(n - 1);
        s.std_error = std::sqrt(s.variance / double(n));
    }
    return s;
}

struct ReplicateBatch {
    std::size_t n = 0;
    std::uint64_t seed = 0;
    std::vector<double> y_samples;
    std::vector<double> snr_samples; // linear
    std::vector<double> se_samples;  // log2(1 + SNR)
    std::vector<double> direct_gain_samples; // h_d^H h_d
    Summary y;
    Summary snr;
    Summary se;

    void refresh_summaries() {
        y = summarize(y_samples);
        snr = summarize(snr_samples);
        se = summarize(se_samples);
    }

    /// Sample variance over squared mean of the channel gain ||h||^2 = SNR / g.
    double cv_squared() const { return snr.variance / (snr.mean * snr.mean); }
};

struct RunOptions {
    unsigned workers = 0; // 0: hardware concurrency
    int chunk = 64;       // replicates per matrix product; fixed so results do not depend on workers
};

/// n independent replicates. Replicate i draws its field and then its direct channel
/// from the substream (seed, i); output is a pure function of (seed, sys, sampler, n).
inline ReplicateBatch run_replicates(const DerivedSystem& sys, const FieldSampler& sampler, std::size_t n,
                                     std::uint64_t seed, const RunOptions& opt = {}) {
    if (n < 1)
        throw DomainError("replicate count must be at least 1");
    ReplicateBatch batch;
    batch.n = n;
    batch.seed = seed;
    batch.y_samples.assign(n, 0.0);
    batch.snr_samples.assign(n, 0.0);
    batch.se_samples.assign(n, 0.0);
    batch.direct_gain_samples.assign(n, 0.0);

    const std::size_t chunk = static_cast<std::size_t>(std::max(1, opt.chunk));
    const std::size_t chunks = (n + chunk - 1) / chunk;
    const int rank = sampler.rank();
    const int m = sys.antennas;
    std::atomic<std::size_t> next{0};

    auto worker = [&]() {
        Eigen::MatrixXd zre(rank, chunk), zim(rank, chunk);
        Eigen::MatrixXd hre, him;
        std::vector<Eigen::VectorXcd> h_d(chunk, Eigen::VectorXcd(m));
        for (std::size_t c = next++; c < chunks; c = next++) {
            const std::size_t first = c * chunk;
            const std::size_t count = std::min(chunk, n - first);
            for (std::size_t b = 0; b < count; ++b) {
                auto eng = rng::substream(seed, first + b);
                auto re = zre.col(b);
                auto im = zim.col(b);
                fill_circular_normal(eng, re, im);
                h_d[b] = sample_direct_channel(sys, eng);
            }
            hre.noalias() = sampler.factor * zre.leftCols(count);
            him.noalias() = sampler.factor * zim.leftCols(count);
            for (std::size_t b = 0; b < count; ++b) {
                const double y = sampler.cell_area * (hre.col(b).cwiseAbs2() + him.col(b).cwiseAbs2()).cwiseSqrt().sum();
                const double snr = optimal_snr_sample(sys, h_d[b], y);
                batch.y_samples[first + b] = y;
                batch.snr_samples[first + b] = snr;
                batch.se_samples[first + b] = std::log2(1.0 + snr);
                batch.direct_gain_samples[first + b] = h_d[b].squaredNorm();
            }
        }
    };

    unsigned workers = opt.workers ? opt.workers : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, chunks));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back(worker);
    }
    batch.refresh_summaries();
    return batch;
}

/// Convenience: derive the system, build the sampler for its surface, run.
inline ReplicateBatch run_replicates(const SystemConfig& cfg, const GridSpec& grid, std::size_t n, std::uint64_t seed,
                                     const RunOptions& opt = {}) {
    const auto sys = derive_system(cfg);
    const auto sampler = build_surface_covariance(cfg.geometry, grid, cfg.correlation, sys.gains.beta_ur);
    return run_replicates(sys, sampler, n, seed, opt);
}

/// Exact E[Y_N^2] of the grid Riemann sum: cell^2 * sum_ij (pi beta / 4) 2F1(|rho_ij|^2).
/// Converges to the continuous E[Y^2] as the grid is refined.
template <class Model>
double grid_moment_m2(const SurfaceGeometry& geom, const GridSpec& grid, const Model& model, double beta_ur) {
    grid.validate();
    const auto table = detail::offset_correlation(geom, grid, model);
    double total = 0.0;
    for (int a = 0; a < grid.nx; ++a) {
        const double ca = (a == 0 ? 1.0 : 2.0) * (grid.nx - a);
        double row = 0.0;
        for (int b = 0; b < grid.ny; ++b) {
            const double cb = (b == 0 ? 1.0 : 2.0) * (grid.ny - b);
            const double rho = table(a, b);
            row += cb * specfun::gauss_2f1_half(std::clamp(rho * rho, 0.0, 1.0));
        }
        total += ca * row;
    }
    const double cell = grid.cell_area(geom);
    return 0.25 * std::numbers::pi * beta_ur * cell * cell * total;
}

/// Right-continuous empirical distribution function of a sample.
class EmpiricalCdf {
public:
    explicit EmpiricalCdf(std::vector<double> samples) : sorted_(std::move(samples)) {
        if (sorted_.empty())
            throw DomainError("empirical CDF of an empty sample");
        std::sort(sorted_.begin(), sorted_.end());
    }

    double operator()(double x) const {
        const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
        return double(it - sorted_.begin()) / double(sorted_.size());
    }

    /// Smallest sample value v with F(v) >= p.
    double quantile(double p) const {
        const double pos = std::ceil(std::clamp(p, 0.0, 1.0) * double(sorted_.size()));
        const std::size_t idx = pos < 1.0 ? 0 : static_cast<std::size_t>(pos) - 1;
        return sorted_[std::min(idx, sorted_.size() - 1)];
    }

    /// sup_x |F_n(x) - F(x)| for a continuous reference CDF F.
    double ks_distance(const std::function<double(double)>& cdf) const {
        const double n = double(sorted_.size());
        double sup = 0.0;
        for (std::size_t i = 0; i < sorted_.size(); ++i) {
            const double f = cdf(sorted_[i]);
            sup = std::max({sup, std::abs(double(i + 1) / n - f), std::abs(f - double(i) / n)});
        }
        return sup;
    }

    std::size_t size() const { return sorted_.size(); }
    const std::vector<double>& sorted() const { return sorted_; }

private:
    std::vector<double> sorted_;
};

inline EmpiricalCdf empirical_cdf(const ReplicateBatch& batch) { return EmpiricalCdf(batch.snr_samples); }

} // namespace cris
