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

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "compact_gp/errors.hpp"
#include "compact_gp/kernels.hpp"
#include "compact_gp/parallel.hpp"

namespace cgp {

using Index = std::int64_t;

/// CSR structure of a symmetric matrix. Column indices are sorted within each
/// row, the pattern is structurally symmetric and every diagonal entry is present.
struct SparsityPattern {
    Index n = 0;
    std::vector<Index> row_offsets;  // n + 1
    std::vector<Index> col_indices;  // nnz

    Index nnz() const { return static_cast<Index>(col_indices.size()); }
    bool contains(Index i, Index j) const;
    /// Position of (i, j) in col_indices, or -1.
    Index find(Index i, Index j) const;

    friend bool operator==(const SparsityPattern&, const SparsityPattern&) = default;
};

/// Pairs with |x_i − x_j| < cutoff, built with a sliding window in O(N + nnz).
/// Throws UnsortedInput or DuplicatePoints unless points are strictly increasing.
SparsityPattern sparsity_pattern_sorted(std::span<const double> points, double cutoff);

/// Pairs with max_k |x_ik − x_jk| < cutoff, by brute force. Rows of `points` are the inputs.
SparsityPattern sparsity_pattern_generic(const Eigen::MatrixXd& points, double cutoff);

/// Symmetric kernel matrix in CSR form with both halves stored.
/// `values` already include `noise` on the diagonal.
template <typename Scalar = double>
struct SparseKernelMatrix {
    std::shared_ptr<const SparsityPattern> pattern;
    std::vector<Scalar> values;
    Scalar noise{};

    Index rows() const { return pattern->n; }
    Index nnz() const { return pattern->nnz(); }

    Scalar coeff(Index i, Index j) const {
        const Index k = pattern->find(i, j);
        return k < 0 ? Scalar{} : values[static_cast<std::size_t>(k)];
    }

    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> diagonal() const {
        Eigen::Matrix<Scalar, Eigen::Dynamic, 1> d(rows());
        for (Index i = 0; i < rows(); ++i) d[i] = coeff(i, i);
        return d;
    }

    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> to_dense() const {
        Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out =
            Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(rows(), rows());
        const auto& p = *pattern;
        for (Index i = 0; i < p.n; ++i)
            for (Index k = p.row_offsets[i]; k < p.row_offsets[i + 1]; ++k)
                out(i, p.col_indices[k]) = values[static_cast<std::size_t>(k)];
        return out;
    }
};

/// out = M·v, one multiply-add per stored entry. Rows are split across workers.
template <typename Scalar>
void spmv(const SparseKernelMatrix<Scalar>& m, std::span<const Scalar> v, std::span<Scalar> out) {
    const auto n = static_cast<std::size_t>(m.rows());
    if (v.size() != n || out.size() != n) throw DimensionMismatch("spmv: vector length does not match matrix");
    const auto& p = *m.pattern;
    parallel_for(
        0, n,
        [&](std::size_t i) {
            Scalar acc{};
            for (Index k = p.row_offsets[i]; k < p.row_offsets[i + 1]; ++k)
                acc += m.values[static_cast<std::size_t>(k)] * v[static_cast<std::size_t>(p.col_indices[k])];
            out[i] = acc;
        },
        4096);
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> spmv(const SparseKernelMatrix<Scalar>& m,
                                               const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& v) {
    if (v.size() != m.rows()) throw DimensionMismatch("spmv: vector length does not match matrix");
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(m.rows());
    spmv<Scalar>(m, std::span<const Scalar>(v.data(), static_cast<std::size_t>(v.size())),
                 std::span<Scalar>(out.data(), static_cast<std::size_t>(out.size())));
    return out;
}

/// values(i, j) = K(x_i − x_j) (tensor product for d > 1) plus `noise` on the
/// diagonal. Throws PatternTooSmall if a pair inside the kernel support is
/// missing from the pattern (checked exhaustively for n ≤ 2048, otherwise on
/// 1000 random pairs).
SparseKernelMatrix<double> assemble(const Kernel& kernel, const Eigen::MatrixXd& points,
                                    std::shared_ptr<const SparsityPattern> pattern, double noise);

/// Pattern suited to the kernel support: sliding window for sorted 1-D inputs,
/// brute force otherwise.
SparsityPattern pattern_for(const Eigen::MatrixXd& points, double radius);

}  // namespace cgp
