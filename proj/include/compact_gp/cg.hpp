/*
 * Copyright 2026 The compact-gp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cmath>
#include <cstddef>
#include <optional>

#include <Eigen/Core>

#include "compact_gp/errors.hpp"
#include "compact_gp/sparse.hpp"

namespace cgp {

enum class Preconditioner { None, Jacobi };

struct CgOptions {
    double tolerance = 1e-10;  // on ‖Ax − b‖ / ‖b‖
    Index max_iterations = 0;  // 0 means 10·n
    Preconditioner preconditioner = Preconditioner::None;
};

struct CgStats {
    Index iterations = 0;
    double final_residual_norm = 0.0;  // relative, ‖r‖ / ‖b‖
    bool converged = false;
};

template <typename Scalar>
struct CgResult {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x;
    CgStats stats;
};

/// Conjugate gradient for a symmetric positive definite operator given as
/// `apply(x, out)` computing out = A·x. `diagonal` is required for Jacobi
/// preconditioning. Throws BreakdownDetected when pᵀAp ≤ 0.
template <typename Scalar, typename Apply>
CgResult<Scalar> conjugate_gradient(Apply&& apply, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& b,
                                    const CgOptions& opts = {},
                                    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>* diagonal = nullptr) {
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    const Eigen::Index n = b.size();
    if (!(opts.tolerance > 0.0)) throw InvalidArgument("CG tolerance must be positive");
    const bool jacobi = opts.preconditioner == Preconditioner::Jacobi;
    if (jacobi && (diagonal == nullptr || diagonal->size() != n)) {
        throw DimensionMismatch("Jacobi preconditioning needs the operator diagonal");
    }
    const Index max_iter = opts.max_iterations > 0 ? opts.max_iterations : 10 * static_cast<Index>(n);

    CgResult<Scalar> result;
    result.x = Vector::Zero(n);
    const Scalar b_norm = b.norm();
    if (b_norm == Scalar(0)) {
        result.stats.converged = true;
        return result;
    }

    Vector r = b;
    Vector z = jacobi ? Vector(r.cwiseQuotient(*diagonal)) : r;
    Vector p = z;
    Vector ap(n);
    Scalar rz = r.dot(z);
    Scalar rel = Scalar(1);

    for (Index it = 1; it <= max_iter; ++it) {
        apply(p, ap);
        const Scalar curvature = p.dot(ap);
        if (!(curvature > Scalar(0))) {
            throw BreakdownDetected("CG breakdown: p'Ap = " + std::to_string(static_cast<double>(curvature)) +
                                    " at iteration " + std::to_string(it));
        }
        const Scalar alpha = rz / curvature;
        result.x.noalias() += alpha * p;
        r.noalias() -= alpha * ap;
        rel = r.norm() / b_norm;
        result.stats.iterations = it;
        if (rel <= opts.tolerance) {
            result.stats.converged = true;
            break;
        }
        if (jacobi) z = r.cwiseQuotient(*diagonal);
        else z = r;
        const Scalar rz_next = r.dot(z);
        p = z + (rz_next / rz) * p;
        rz = rz_next;
    }
    result.stats.final_residual_norm = static_cast<double>(rel);
    return result;
}

/// CG on an assembled sparse kernel matrix.
template <typename Scalar>
CgResult<Scalar> conjugate_gradient(const SparseKernelMatrix<Scalar>& m,
                                    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& b, const CgOptions& opts = {}) {
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    if (b.size() != m.rows()) throw DimensionMismatch("CG: right-hand side length does not match matrix");
    std::optional<Vector> diag;
    if (opts.preconditioner == Preconditioner::Jacobi) diag = m.diagonal();
    auto apply = [&m](const Vector& x, Vector& out) {
        spmv<Scalar>(m, std::span<const Scalar>(x.data(), static_cast<std::size_t>(x.size())),
                     std::span<Scalar>(out.data(), static_cast<std::size_t>(out.size())));
    };
    return conjugate_gradient<Scalar>(apply, b, opts, diag ? &*diag : nullptr);
}

}  // namespace cgp
