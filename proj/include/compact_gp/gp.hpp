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
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "compact_gp/cg.hpp"
#include "compact_gp/kernels.hpp"
#include "compact_gp/sparse.hpp"

namespace cgp {

/// Largest n handled with dense O(n²) storage.
inline constexpr Index kDefaultDenseLimit = 8192;

/// Training inputs (one row per point) and outputs. The mean function is zero.
struct GPDataset {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;

    GPDataset() = default;
    /// Throws DimensionMismatch / InvalidArgument on unequal lengths or non-finite values.
    GPDataset(Eigen::MatrixXd x, Eigen::VectorXd y);

    Index size() const { return y.size(); }
    Index dim() const { return x.cols(); }
    /// True for 1-D inputs in strictly increasing order.
    bool sorted() const;
};

/// Column vector of 1-D inputs as an n×1 matrix.
inline Eigen::MatrixXd as_points(const Eigen::VectorXd& x) { return x; }

/// Dense cross-covariance K(a_i − b_j), tensor-product over coordinates.
Eigen::MatrixXd cross_covariance(const Kernel& kernel, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Lower Cholesky factor; throws NotPositiveDefinite with the failing pivot.
Eigen::LLT<Eigen::MatrixXd> checked_cholesky(const Eigen::MatrixXd& K);

/// −log p(y) = ½ yᵀK⁻¹y + ½ log|2πK| with K = Gram + noise·I, by dense Cholesky.
double nll_dense(const Kernel& kernel, const GPDataset& data, double noise, Index dense_limit = kDefaultDenseLimit);

/// Same quantity with the quadratic term from CG and the log-determinant from
/// a sparse Cholesky factorization of the assembled matrix.
double nll_sparse(const Kernel& kernel, const GPDataset& data, double noise, const CgOptions& cg = {});

/// Same, for an already assembled matrix (noise included).
double nll_sparse(const SparseKernelMatrix<double>& K, const Eigen::VectorXd& y, const CgOptions& cg = {});

enum class InferenceMode { Dense, Sparse };

struct PosteriorOptions {
    InferenceMode mode = InferenceMode::Dense;
    bool mean_only = false;
    CgOptions cg;
    Index dense_limit = kDefaultDenseLimit;
};

struct PosteriorResult {
    Eigen::VectorXd mean;
    Eigen::VectorXd variance;  // latent, excludes observation noise
    CgStats mean_solve;        // sparse mode
    Index variance_cg_iterations = 0;
    Index nnz = 0;
};

/// GP posterior at `query`. Sparse mode needs a compactly supported kernel and
/// solves with CG; variances take one CG solve per query point. Throws
/// CgNotConverged when a solve fails.
PosteriorResult posterior(const Kernel& kernel, const GPDataset& train, const Eigen::MatrixXd& query, double noise,
                          const PosteriorOptions& opts = {});

struct GradientOptions {
    InferenceMode mode = InferenceMode::Dense;
    int probes = 32;  // Hutchinson probes, sparse mode
    std::uint64_t seed = 0;
    CgOptions cg;
    Index dense_limit = kDefaultDenseLimit;
};

/// dNLL/dA (M×M symmetric, treating each A_ij as independent) and dNLL/dσ_n².
struct NllGradient {
    Eigen::MatrixXd dA;
    double dnoise = 0.0;
    Eigen::MatrixXd dA_stderr;  // Hutchinson standard error; zero in dense mode
    double dnoise_stderr = 0.0;
    double nll = 0.0;  // NLL at the same parameters (dense mode only; NaN otherwise)
    Index cg_iterations = 0;
};

/// Precomputed sparsity pattern and Φ(|Δ|/c) for every stored pair of a 1-D
/// input set, so that K and ∂K/∂A can be rebuilt cheaply for new A or noise.
class CompactGramCache {
public:
    CompactGramCache(const PhiMatrix& phi, double cutoff, const Eigen::MatrixXd& x);

    const std::shared_ptr<const SparsityPattern>& pattern() const { return pattern_; }
    int order() const { return order_; }
    double cutoff() const { return cutoff_; }

    /// Φ_ij for pair k, packed upper triangle (M(M+1)/2 values).
    const double* phi_of(Index k) const { return phi_.data() + k * packed_; }
    Index packed_size() const { return packed_; }

    SparseKernelMatrix<double> assemble(const Eigen::MatrixXd& A, double noise) const;

    /// Σ_pq W_pq Φ(Δ_pq) over stored pairs, returned as a symmetric M×M matrix,
    /// with W given through `weight(p, q)`.
    template <typename Weight>
    Eigen::MatrixXd contract(Weight&& weight) const {
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(packed_);
        const SparsityPattern& p = *pattern_;
        for (Index i = 0; i < p.n; ++i) {
            for (Index k = p.row_offsets[i]; k < p.row_offsets[i + 1]; ++k) {
                const double w = weight(i, p.col_indices[k]);
                if (w == 0.0) continue;
                acc += w * Eigen::Map<const Eigen::VectorXd>(phi_of(k), packed_);
            }
        }
        return unpack(acc);
    }

    Eigen::MatrixXd unpack(const Eigen::VectorXd& packed) const;

private:
    int order_;
    double cutoff_;
    Index packed_;
    std::shared_ptr<const SparsityPattern> pattern_;
    std::vector<double> phi_;
};

/// NLL gradient with respect to the compact-kernel parameters. Dense mode uses
/// the exact trace; sparse mode uses CG for K⁻¹y and Hutchinson for the trace.
/// Requires 1-D inputs.
NllGradient nll_grad_A(const CompactKernel& kernel, const GPDataset& data, double noise,
                       const GradientOptions& opts = {});

/// Same, reusing a precomputed pattern cache (which fixes Φ and the cutoff).
NllGradient nll_grad_A(const CompactGramCache& cache, const Eigen::MatrixXd& A, const GPDataset& data, double noise,
                       const GradientOptions& opts = {});

/// y = L z + σ_n z′ with L the Cholesky factor of the noiseless Gram matrix
/// (jitter 1e-10·K(0)) and z, z′ standard Gaussian from `seed`.
Eigen::VectorXd sample_gp(const Kernel& kernel, const Eigen::MatrixXd& points, double noise, std::uint64_t seed,
                          Index dense_limit = kDefaultDenseLimit);

struct Metrics {
    double rmse = 0.0;
    double mean_test_nll = 0.0;
};

/// RMSE and mean Gaussian NLL using predictive variance + noise.
Metrics metrics(const Eigen::VectorXd& mean, const Eigen::VectorXd& truth, const Eigen::VectorXd& variance,
                double noise = 0.0);

}  // namespace cgp
