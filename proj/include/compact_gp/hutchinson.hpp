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
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "compact_gp/errors.hpp"
#include "compact_gp/parallel.hpp"

namespace cgp {

struct TraceEstimate {
    double estimate = 0.0;
    double standard_error = 0.0;
};

/// Mean and standard error of several traces estimated from shared probes.
struct TraceEstimates {
    Eigen::VectorXd estimate;
    Eigen::VectorXd standard_error;
};

/// Standard Gaussian probe for a given (seed, probe index); independent of
/// scheduling order.
inline Eigen::VectorXd gaussian_probe(Eigen::Index n, std::uint64_t seed, std::uint64_t probe) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(probe), static_cast<std::uint32_t>(probe >> 32)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal;
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) b[i] = normal(rng);
    return b;
}

/// For each probe b, w = solve(b) and `contribute(w, b)` returns a vector of
/// per-trace samples ⟨w, ∂_k K b⟩. Probes run concurrently.
template <typename Solve, typename Contribute>
TraceEstimates hutchinson_traces(Solve&& solve, Contribute&& contribute, Eigen::Index n, Eigen::Index outputs,
                                 int probes, std::uint64_t seed) {
    if (probes < 1) throw InvalidArgument("Hutchinson estimator needs at least one probe");
    Eigen::MatrixXd samples(outputs, probes);
    parallel_for(
        0, static_cast<std::size_t>(probes),
        [&](std::size_t k) {
            const Eigen::VectorXd b = gaussian_probe(n, seed, k);
            const Eigen::VectorXd w = solve(b);
            samples.col(static_cast<Eigen::Index>(k)) = contribute(w, b);
        },
        1);
    TraceEstimates out;
    out.estimate = samples.rowwise().mean();
    if (probes == 1) {
        out.standard_error = Eigen::VectorXd::Constant(outputs, std::numeric_limits<double>::infinity());
    } else {
        const Eigen::MatrixXd centered = samples.colwise() - out.estimate;
        out.standard_error = (centered.rowwise().squaredNorm() / (probes - 1.0) / probes).cwiseSqrt();
    }
    return out;
}

/// Estimate of tr(K⁻¹ ∂K) as the mean of ⟨K⁻¹b, ∂K b⟩ over Gaussian probes.
/// `solve(b)` returns K⁻¹b; `apply_dk(b)` returns ∂K·b.
template <typename Solve, typename ApplyDK>
TraceEstimate hutchinson_trace(Solve&& solve, ApplyDK&& apply_dk, Eigen::Index n, int probes, std::uint64_t seed) {
    const TraceEstimates est = hutchinson_traces(
        solve,
        [&](const Eigen::VectorXd& w, const Eigen::VectorXd& b) {
            return Eigen::VectorXd::Constant(1, w.dot(apply_dk(b)));
        },
        n, 1, probes, seed);
    return {est.estimate[0], est.standard_error[0]};
}

}  // namespace cgp
