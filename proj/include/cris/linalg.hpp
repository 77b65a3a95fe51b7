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

// Symmetric eigendecomposition and PSD repair of correlation matrices.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <lapacke.h>

#include "errors.hpp"

namespace cris::linalg {

struct EigenPairs {
    Eigen::VectorXd values;  // ascending
    Eigen::MatrixXd vectors; // column k pairs with values(k)
};

/// Eigenpairs of a symmetric matrix. With a finite `lower`, only eigenvalues
/// in (lower, +inf) and their vectors are computed, which is cheap for
/// numerically low-rank covariances.
///
/// The reduction to tridiagonal form and the back-transformation run in Eigen;
/// only the tridiagonal MRRR solver (dstemr) comes from LAPACK. Some optimized
/// BLAS builds return wrong level-3 results on recent CPUs, and the full LAPACK
/// drivers route their back-transformation through dgemm. The residual check
/// below turns any remaining backend fault into an error instead of a bad factor.
inline EigenPairs symmetric_eigen(const Eigen::MatrixXd& a,
                                  double lower = -std::numeric_limits<double>::infinity()) {
    const lapack_int n = static_cast<lapack_int>(a.rows());
    EigenPairs out;
    if (n == 0)
        return out;
    Eigen::Tridiagonalization<Eigen::MatrixXd> tri(a);
    Eigen::VectorXd d = tri.diagonal();
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e.head(n - 1) = tri.subDiagonal();
    Eigen::VectorXd w(n);
    Eigen::MatrixXd z(n, n);
    std::vector<lapack_int> support(2 * static_cast<std::size_t>(n));
    lapack_int found = 0;
    lapack_int tryrac = 1;
    const bool ranged = std::isfinite(lower);
    // Gerschgorin bound on the spectrum; an infinite upper limit overflows inside dstemr.
    double upper = 0.0;
    for (lapack_int i = 0; i < n; ++i)
        upper = std::max(upper, std::abs(d(i)) + std::abs(e(i)) + (i > 0 ? std::abs(e(i - 1)) : 0.0));
    upper = 2.0 * upper + 1.0;
    if (ranged && lower >= upper)
        return out;
    const lapack_int info = LAPACKE_dstemr(LAPACK_COL_MAJOR, 'V', ranged ? 'V' : 'A', n, d.data(), e.data(), lower,
                                           upper, 0, 0, &found, w.data(), z.data(), n, n, support.data(), &tryrac);
    if (info != 0)
        throw CovarianceRepairFailure("dstemr failed with info = " + std::to_string(info));
    out.values = w.head(found);
    out.vectors = z.leftCols(found);
    out.vectors.applyOnTheLeft(tri.matrixQ());

    if (found > 0) {
        // Only the lower triangle of a is meaningful, matching what the tridiagonalization reads.
        const Eigen::MatrixXd lower_part = a.triangularView<Eigen::Lower>();
        const double scale = std::max(lower_part.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
        const double residual =
            (a.selfadjointView<Eigen::Lower>() * out.vectors - out.vectors * out.values.asDiagonal())
                .cwiseAbs()
                .maxCoeff() /
            scale;
        if (!(residual < 1e-8))
            throw CovarianceRepairFailure("eigendecomposition residual " + std::to_string(residual) +
                                          " exceeds 1e-8 relative");
    }
    return out;
}

struct RepairedCorrelation {
    Eigen::MatrixXd matrix; // unit diagonal, PSD
    Eigen::MatrixXd factor; // factor * factor^T == matrix
    double clipped_mass = 0.0;
    double min_eigenvalue = 0.0;
};

/// Clamp negative eigenvalues to zero, reconstruct, and rescale symmetrically so
/// the diagonal is exactly one again. Rejects matrices whose most negative
/// eigenvalue is below -1e-6 times the largest (a model bug, not roundoff).
inline RepairedCorrelation repair_correlation(const Eigen::MatrixXd& corr) {
    RepairedCorrelation out;
    const auto eig = symmetric_eigen(corr);
    const double top = eig.values.maxCoeff();
    out.min_eigenvalue = eig.values.minCoeff();
    if (out.min_eigenvalue < -1e-6 * std::max(top, 0.0))
        throw CovarianceRepairFailure("correlation matrix has eigenvalue " + std::to_string(out.min_eigenvalue) +
                                      " against largest " + std::to_string(top));
    double clipped = 0.0;
    double total = 0.0;
    Eigen::VectorXd root(eig.values.size());
    for (Eigen::Index k = 0; k < eig.values.size(); ++k) {
        total += std::abs(eig.values(k));
        if (eig.values(k) < 0.0) {
            clipped += -eig.values(k);
            root(k) = 0.0;
        } else {
            root(k) = std::sqrt(eig.values(k));
        }
    }
    out.clipped_mass = total > 0.0 ? clipped / total : 0.0;
    out.factor = eig.vectors * root.asDiagonal();
    for (Eigen::Index i = 0; i < out.factor.rows(); ++i) {
        const double norm = out.factor.row(i).norm();
        if (norm > 0.0)
            out.factor.row(i) /= norm;
    }
    out.matrix = out.factor * out.factor.transpose();
    out.matrix.diagonal().setOnes();
    return out;
}

} // namespace cris::linalg
