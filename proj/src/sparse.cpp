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

#include "compact_gp/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace cgp {

bool SparsityPattern::contains(Index i, Index j) const { return find(i, j) >= 0; }

Index SparsityPattern::find(Index i, Index j) const {
    if (i < 0 || i >= n || j < 0 || j >= n) return -1;
    const auto begin = col_indices.begin() + row_offsets[i];
    const auto end = col_indices.begin() + row_offsets[i + 1];
    const auto it = std::lower_bound(begin, end, j);
    if (it == end || *it != j) return -1;
    return static_cast<Index>(it - col_indices.begin());
}

SparsityPattern sparsity_pattern_sorted(std::span<const double> points, double cutoff) {
    if (!(cutoff > 0.0)) throw InvalidArgument("cutoff must be positive");
    const auto n = static_cast<Index>(points.size());
    for (Index i = 1; i < n; ++i) {
        if (points[i] == points[i - 1]) throw DuplicatePoints("duplicate input at index " + std::to_string(i));
        if (points[i] < points[i - 1]) throw UnsortedInput("inputs not sorted ascending at index " + std::to_string(i));
    }
    SparsityPattern p;
    p.n = n;
    p.row_offsets.reserve(static_cast<std::size_t>(n) + 1);
    p.row_offsets.push_back(0);
    Index lo = 0;
    Index hi = 0;
    for (Index i = 0; i < n; ++i) {
        while (points[i] - points[lo] >= cutoff) ++lo;
        if (hi < i + 1) hi = i + 1;
        while (hi < n && points[hi] - points[i] < cutoff) ++hi;
        for (Index j = lo; j < hi; ++j) p.col_indices.push_back(j);
        p.row_offsets.push_back(p.nnz());
    }
    return p;
}

SparsityPattern sparsity_pattern_generic(const Eigen::MatrixXd& points, double cutoff) {
    if (!(cutoff > 0.0)) throw InvalidArgument("cutoff must be positive");
    SparsityPattern p;
    p.n = points.rows();
    p.row_offsets.push_back(0);
    for (Index i = 0; i < p.n; ++i) {
        for (Index j = 0; j < p.n; ++j) {
            if (i == j || (points.row(i) - points.row(j)).cwiseAbs().maxCoeff() < cutoff) p.col_indices.push_back(j);
        }
        p.row_offsets.push_back(p.nnz());
    }
    return p;
}

SparsityPattern pattern_for(const Eigen::MatrixXd& points, double radius) {
    if (points.cols() == 1) {
        const std::span<const double> xs(points.data(), static_cast<std::size_t>(points.rows()));
        if (std::is_sorted(xs.begin(), xs.end())) return sparsity_pattern_sorted(xs, radius);
    }
    return sparsity_pattern_generic(points, radius);
}

namespace {

double pair_value(const Kernel& kernel, const Eigen::MatrixXd& points, Index i, Index j, std::vector<double>& buf) {
    const auto d = points.cols();
    buf.resize(static_cast<std::size_t>(d));
    for (Eigen::Index k = 0; k < d; ++k) buf[static_cast<std::size_t>(k)] = points(i, k) - points(j, k);
    return tensor_product_eval(kernel, buf);
}

void check_pair(const SparsityPattern& p, const Eigen::MatrixXd& points, double radius, Index i, Index j) {
    if ((points.row(i) - points.row(j)).cwiseAbs().maxCoeff() < radius && !p.contains(i, j)) {
        throw PatternTooSmall("pattern misses pair (" + std::to_string(i) + ", " + std::to_string(j) +
                              ") inside the kernel support");
    }
}

}  // namespace

SparseKernelMatrix<double> assemble(const Kernel& kernel, const Eigen::MatrixXd& points,
                                    std::shared_ptr<const SparsityPattern> pattern, double noise) {
    if (!pattern || pattern->n != points.rows()) throw DimensionMismatch("pattern size does not match inputs");
    const SparsityPattern& p = *pattern;
    const double radius = support_radius(kernel);

    if (p.n <= 2048) {
        for (Index i = 0; i < p.n; ++i)
            for (Index j = 0; j < p.n; ++j) check_pair(p, points, radius, i, j);
    } else {
        std::mt19937_64 rng(0x5eed);
        std::uniform_int_distribution<Index> pick(0, p.n - 1);
        for (int s = 0; s < 1000; ++s) {
            const Index i = pick(rng);
            // half the probes look at close neighbours where misses are likely
            const Index j = s % 2 == 0 ? pick(rng) : std::clamp<Index>(i + (s % 7) - 3, 0, p.n - 1);
            check_pair(p, points, radius, i, j);
        }
    }

    SparseKernelMatrix<double> m;
    m.pattern = std::move(pattern);
    m.noise = noise;
    m.values.resize(static_cast<std::size_t>(p.nnz()));
    parallel_for(
        0, static_cast<std::size_t>(p.n),
        [&](std::size_t row) {
            const auto i = static_cast<Index>(row);
            std::vector<double> buf;
            for (Index k = p.row_offsets[i]; k < p.row_offsets[i + 1]; ++k) {
                const Index j = p.col_indices[k];
                double v = pair_value(kernel, points, i, j, buf);
                if (i == j) v += noise;
                m.values[static_cast<std::size_t>(k)] = v;
            }
        },
        1024);
    return m;
}

}  // namespace cgp
