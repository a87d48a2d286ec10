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

#include "compact_gp/gp.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "compact_gp/hutchinson.hpp"
#include "compact_gp/parallel.hpp"

namespace cgp {

GPDataset::GPDataset(Eigen::MatrixXd x_, Eigen::VectorXd y_) : x(std::move(x_)), y(std::move(y_)) {
    if (x.rows() != y.size()) throw DimensionMismatch("dataset inputs and outputs differ in length");
    if (x.cols() < 1 && x.rows() > 0) throw DimensionMismatch("dataset inputs need at least one coordinate");
    if (!x.allFinite() || !y.allFinite()) throw InvalidArgument("dataset contains non-finite values");
}

bool GPDataset::sorted() const {
    if (x.cols() != 1) return false;
    for (Index i = 1; i < x.rows(); ++i)
        if (!(x(i, 0) > x(i - 1, 0))) return false;
    return true;
}

namespace {

double lag_zero(const Kernel& kernel, Index dim) {
    std::vector<double> zero(static_cast<std::size_t>(std::max<Index>(dim, 1)), 0.0);
    return tensor_product_eval(kernel, zero);
}

double pair_kernel(const Kernel& kernel, const Eigen::MatrixXd& a, Index i, const Eigen::MatrixXd& b, Index j,
                   std::vector<double>& buf) {
    if (a.cols() == 1) return evaluate(kernel, a(i, 0) - b(j, 0));
    buf.resize(static_cast<std::size_t>(a.cols()));
    for (Eigen::Index k = 0; k < a.cols(); ++k) buf[static_cast<std::size_t>(k)] = a(i, k) - b(j, k);
    return tensor_product_eval(kernel, buf);
}

void require_dense(Index n, Index limit, const char* what) {
    if (n > limit) {
        throw InvalidArgument(std::string(what) + ": n = " + std::to_string(n) + " exceeds the dense limit " +
                              std::to_string(limit));
    }
}

Eigen::MatrixXd gram_with_noise(const Kernel& kernel, const Eigen::MatrixXd& x, double noise) {
    Eigen::MatrixXd K = cross_covariance(kernel, x, x);
    K.diagonal().array() += noise;
    return K;
}

CgResult<double> solve_or_throw(const SparseKernelMatrix<double>& m, const Eigen::VectorXd& b, const CgOptions& cg) {
    CgResult<double> res = conjugate_gradient(m, b, cg);
    if (!res.stats.converged) {
        throw CgNotConverged("CG did not converge (relative residual " +
                                 std::to_string(res.stats.final_residual_norm) + " after " +
                                 std::to_string(res.stats.iterations) + " iterations)",
                             static_cast<std::size_t>(res.stats.iterations), res.stats.final_residual_norm);
    }
    return res;
}

Eigen::SparseMatrix<double> to_eigen_sparse(const SparseKernelMatrix<double>& m) {
    const SparsityPattern& p = *m.pattern;
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(p.nnz()));
    for (Index i = 0; i < p.n; ++i)
        for (Index k = p.row_offsets[i]; k < p.row_offsets[i + 1]; ++k)
            triplets.emplace_back(i, p.col_indices[k], m.values[static_cast<std::size_t>(k)]);
    Eigen::SparseMatrix<double> out(p.n, p.n);
    out.setFromTriplets(triplets.begin(), triplets.end());
    return out;
}

// Training indices j with |x_j − q| < radius, for sorted 1-D training inputs.
std::pair<Index, Index> window(const Eigen::MatrixXd& x, double q, double radius) {
    const double* begin = x.data();
    const double* end = begin + x.rows();
    const double* lo = std::upper_bound(begin, end, q - radius);
    const double* hi = std::lower_bound(begin, end, q + radius);
    return {lo - begin, std::max(lo, hi) - begin};
}

}  // namespace

Eigen::MatrixXd cross_covariance(const Kernel& kernel, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.cols() != b.cols()) throw DimensionMismatch("cross_covariance: input dimensions differ");
    Eigen::MatrixXd K(a.rows(), b.rows());
    parallel_for(
        0, static_cast<std::size_t>(a.rows()),
        [&](std::size_t row) {
            std::vector<double> buf;
            const auto i = static_cast<Index>(row);
            for (Index j = 0; j < b.rows(); ++j) K(i, j) = pair_kernel(kernel, a, i, b, j, buf);
        },
        16);
    return K;
}

Eigen::LLT<Eigen::MatrixXd> checked_cholesky(const Eigen::MatrixXd& K) {
    Eigen::LLT<Eigen::MatrixXd> llt(K);
    if (llt.info() == Eigen::Success) return llt;
    // locate the failing pivot with an unblocked factorization
    Eigen::MatrixXd L = K;
    const Index n = K.rows();
    for (Index j = 0; j < n; ++j) {
        double d = L(j, j) - L.row(j).head(j).squaredNorm();
        if (!(d > 0.0)) throw NotPositiveDefinite("kernel matrix is not positive definite", j);
        d = std::sqrt(d);
        L(j, j) = d;
        for (Index i = j + 1; i < n; ++i) L(i, j) = (L(i, j) - L.row(i).head(j).dot(L.row(j).head(j))) / d;
    }
    throw NotPositiveDefinite("kernel matrix is numerically not positive definite", n - 1);
}

double nll_dense(const Kernel& kernel, const GPDataset& data, double noise, Index dense_limit) {
    const Index n = data.size();
    require_dense(n, dense_limit, "nll_dense");
    const auto llt = checked_cholesky(gram_with_noise(kernel, data.x, noise));
    const Eigen::VectorXd alpha = llt.solve(data.y);
    const double half_logdet = llt.matrixLLT().diagonal().array().log().sum();
    return 0.5 * data.y.dot(alpha) + half_logdet + 0.5 * n * std::log(2.0 * std::numbers::pi);
}

double nll_sparse(const SparseKernelMatrix<double>& K, const Eigen::VectorXd& y, const CgOptions& cg) {
    if (K.rows() != y.size()) throw DimensionMismatch("nll_sparse: matrix and outputs differ in size");
    const auto alpha = solve_or_throw(K, y, cg);
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> chol(to_eigen_sparse(K));
    if (chol.info() != Eigen::Success) throw NotPositiveDefinite("sparse Cholesky failed", -1);
    const double half_logdet = chol.matrixL().nestedExpression().diagonal().array().log().sum();
    return 0.5 * y.dot(alpha.x) + half_logdet + 0.5 * y.size() * std::log(2.0 * std::numbers::pi);
}

double nll_sparse(const Kernel& kernel, const GPDataset& data, double noise, const CgOptions& cg) {
    const double radius = support_radius(kernel);
    if (!std::isfinite(radius)) throw InvalidArgument("sparse NLL requires a compactly supported kernel");
    auto pattern = std::make_shared<const SparsityPattern>(pattern_for(data.x, radius));
    return nll_sparse(assemble(kernel, data.x, pattern, noise), data.y, cg);
}

PosteriorResult posterior(const Kernel& kernel, const GPDataset& train, const Eigen::MatrixXd& query, double noise,
                          const PosteriorOptions& opts) {
    if (query.cols() != train.dim()) throw DimensionMismatch("query dimension differs from training inputs");
    const Index n = train.size();
    const Index q = query.rows();
    const double k0 = lag_zero(kernel, train.dim());
    PosteriorResult out;
    out.mean = Eigen::VectorXd::Zero(q);
    out.variance = Eigen::VectorXd::Constant(q, k0);

    if (opts.mode == InferenceMode::Dense) {
        require_dense(n, opts.dense_limit, "dense posterior");
        const auto llt = checked_cholesky(gram_with_noise(kernel, train.x, noise));
        const Eigen::VectorXd alpha = llt.solve(train.y);
        const Eigen::MatrixXd cross = cross_covariance(kernel, query, train.x);
        out.mean = cross * alpha;
        if (!opts.mean_only) {
            const Eigen::MatrixXd v = llt.matrixL().solve(cross.transpose());
            out.variance = Eigen::VectorXd::Constant(q, k0) - v.colwise().squaredNorm().transpose();
        }
    } else {
        const double radius = support_radius(kernel);
        if (!std::isfinite(radius)) throw InvalidArgument("sparse inference requires a compactly supported kernel");
        auto pattern = std::make_shared<const SparsityPattern>(pattern_for(train.x, radius));
        const SparseKernelMatrix<double> K = assemble(kernel, train.x, pattern, noise);
        out.nnz = K.nnz();
        const auto alpha = solve_or_throw(K, train.y, opts.cg);
        out.mean_solve = alpha.stats;

        const bool sorted = train.sorted();
        std::atomic<Index> variance_iters{0};
        parallel_for(
            0, static_cast<std::size_t>(q),
            [&](std::size_t row) {
                const auto i = static_cast<Index>(row);
                std::vector<double> buf;
                Index lo = 0;
                Index hi = n;
                if (sorted) std::tie(lo, hi) = window(train.x, query(i, 0), radius);
                Eigen::VectorXd k_row = Eigen::VectorXd::Zero(n);
                bool any = false;
                double mean = 0.0;
                for (Index j = lo; j < hi; ++j) {
                    const double v = pair_kernel(kernel, query, i, train.x, j, buf);
                    if (v == 0.0) continue;
                    k_row[j] = v;
                    mean += v * alpha.x[j];
                    any = true;
                }
                out.mean[i] = mean;
                if (opts.mean_only || !any) return;
                const auto w = solve_or_throw(K, k_row, opts.cg);
                variance_iters += w.stats.iterations;
                out.variance[i] = k0 - k_row.dot(w.x);
            },
            8);
        out.variance_cg_iterations = variance_iters.load();
    }
    if (opts.mean_only) {
        out.variance = Eigen::VectorXd::Constant(q, std::numeric_limits<double>::quiet_NaN());
    } else {
        for (Index i = 0; i < q; ++i)
            if (out.variance[i] < 0.0 && out.variance[i] >= -1e-8 * k0) out.variance[i] = 0.0;
    }
    return out;
}

CompactGramCache::CompactGramCache(const PhiMatrix& phi, double cutoff, const Eigen::MatrixXd& x)
    : order_(phi.order()), cutoff_(cutoff), packed_(static_cast<Index>(phi.order()) * (phi.order() + 1) / 2) {
    if (x.cols() != 1) throw DimensionMismatch("compact Gram cache supports 1-D inputs only");
    if (!(cutoff > 0.0)) throw InvalidArgument("cutoff must be positive");
    pattern_ = std::make_shared<const SparsityPattern>(pattern_for(x, cutoff));
    const SparsityPattern& p = *pattern_;
    phi_.resize(static_cast<std::size_t>(p.nnz() * packed_));
    parallel_for(
        0, static_cast<std::size_t>(p.n),
        [&](std::size_t row) {
            const auto i = static_cast<Index>(row);
            Eigen::MatrixXd value;
            for (Index k = p.row_offsets[i]; k < p.row_offsets[i + 1]; ++k) {
                phi.evaluate(std::abs(x(i, 0) - x(p.col_indices[k], 0)) / cutoff, value);
                double* dst = phi_.data() + k * packed_;
                for (int a = 0; a < order_; ++a)
                    for (int b = a; b < order_; ++b) *dst++ = value(a, b);
            }
        },
        1024);
}

Eigen::MatrixXd CompactGramCache::unpack(const Eigen::VectorXd& packed) const {
    Eigen::MatrixXd out(order_, order_);
    Index k = 0;
    for (int a = 0; a < order_; ++a) {
        for (int b = a; b < order_; ++b, ++k) {
            out(a, b) = packed[k];
            out(b, a) = packed[k];
        }
    }
    return out;
}

SparseKernelMatrix<double> CompactGramCache::assemble(const Eigen::MatrixXd& A, double noise) const {
    Eigen::VectorXd w(packed_);
    Index k = 0;
    for (int a = 0; a < order_; ++a)
        for (int b = a; b < order_; ++b, ++k) w[k] = a == b ? A(a, a) : A(a, b) + A(b, a);
    SparseKernelMatrix<double> m;
    m.pattern = pattern_;
    m.noise = noise;
    const SparsityPattern& p = *pattern_;
    m.values.resize(static_cast<std::size_t>(p.nnz()));
    for (Index i = 0; i < p.n; ++i) {
        for (Index e = p.row_offsets[i]; e < p.row_offsets[i + 1]; ++e) {
            double v = w.dot(Eigen::Map<const Eigen::VectorXd>(phi_of(e), packed_));
            if (p.col_indices[e] == i) v += noise;
            m.values[static_cast<std::size_t>(e)] = v;
        }
    }
    return m;
}

NllGradient nll_grad_A(const CompactGramCache& cache, const Eigen::MatrixXd& A, const GPDataset& data, double noise,
                       const GradientOptions& opts) {
    const Index n = data.size();
    if (cache.pattern()->n != n) throw DimensionMismatch("gradient cache was built for a different dataset");
    const SparseKernelMatrix<double> K = cache.assemble(A, noise);
    NllGradient g;
    g.dA_stderr = Eigen::MatrixXd::Zero(cache.order(), cache.order());

    if (opts.mode == InferenceMode::Dense) {
        require_dense(n, opts.dense_limit, "dense gradient");
        const auto llt = checked_cholesky(K.to_dense());
        const Eigen::VectorXd alpha = llt.solve(data.y);
        const Eigen::MatrixXd Kinv = llt.solve(Eigen::MatrixXd::Identity(n, n));
        g.dA = 0.5 * cache.contract([&](Index p, Index q) { return Kinv(p, q) - alpha[p] * alpha[q]; });
        g.dnoise = 0.5 * (Kinv.trace() - alpha.squaredNorm());
        g.nll = 0.5 * data.y.dot(alpha) + llt.matrixLLT().diagonal().array().log().sum() +
                0.5 * n * std::log(2.0 * std::numbers::pi);
        return g;
    }

    const auto alpha = solve_or_throw(K, data.y, opts.cg);
    std::atomic<Index> iterations{alpha.stats.iterations};
    const Eigen::MatrixXd quad = cache.contract([&](Index p, Index q) { return alpha.x[p] * alpha.x[q]; });

    const Index packed = cache.packed_size();
    const SparsityPattern& pat = *cache.pattern();
    const TraceEstimates traces = hutchinson_traces(
        [&](const Eigen::VectorXd& b) {
            auto w = solve_or_throw(K, b, opts.cg);
            iterations += w.stats.iterations;
            return w.x;
        },
        [&](const Eigen::VectorXd& w, const Eigen::VectorXd& b) {
            Eigen::VectorXd sample = Eigen::VectorXd::Zero(packed + 1);
            for (Index i = 0; i < pat.n; ++i) {
                for (Index k = pat.row_offsets[i]; k < pat.row_offsets[i + 1]; ++k) {
                    sample.head(packed) +=
                        (w[i] * b[pat.col_indices[k]]) * Eigen::Map<const Eigen::VectorXd>(cache.phi_of(k), packed);
                }
            }
            sample[packed] = w.dot(b);
            return sample;
        },
        n, packed + 1, opts.probes, opts.seed);

    g.dA = 0.5 * (cache.unpack(traces.estimate.head(packed)) - quad);
    g.dA_stderr = 0.5 * cache.unpack(traces.standard_error.head(packed));
    g.dnoise = 0.5 * (traces.estimate[packed] - alpha.x.squaredNorm());
    g.dnoise_stderr = 0.5 * traces.standard_error[packed];
    g.nll = std::numeric_limits<double>::quiet_NaN();
    g.cg_iterations = iterations.load();
    return g;
}

NllGradient nll_grad_A(const CompactKernel& kernel, const GPDataset& data, double noise, const GradientOptions& opts) {
    const CompactGramCache cache(kernel.phi(), kernel.cutoff(), data.x);
    return nll_grad_A(cache, kernel.A(), data, noise, opts);
}

Eigen::VectorXd sample_gp(const Kernel& kernel, const Eigen::MatrixXd& points, double noise, std::uint64_t seed,
                          Index dense_limit) {
    const Index n = points.rows();
    require_dense(n, dense_limit, "sample_gp");
    if (!(noise >= 0.0)) throw InvalidArgument("noise variance must be non-negative");
    const double k0 = lag_zero(kernel, points.cols());
    Eigen::MatrixXd K = cross_covariance(kernel, points, points);
    K.diagonal().array() += 1e-10 * k0;
    const auto llt = checked_cholesky(K);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Eigen::VectorXd z(n);
    Eigen::VectorXd z_noise(n);
    for (Index i = 0; i < n; ++i) z[i] = normal(rng);
    for (Index i = 0; i < n; ++i) z_noise[i] = normal(rng);
    return llt.matrixL() * z + std::sqrt(noise) * z_noise;
}

Metrics metrics(const Eigen::VectorXd& mean, const Eigen::VectorXd& truth, const Eigen::VectorXd& variance,
                double noise) {
    if (mean.size() != truth.size() || mean.size() != variance.size()) {
        throw DimensionMismatch("metrics: inputs differ in length");
    }
    if (mean.size() == 0) throw DimensionMismatch("metrics: empty inputs");
    Metrics m;
    const Eigen::ArrayXd err = (mean - truth).array();
    m.rmse = std::sqrt(err.square().mean());
    const Eigen::ArrayXd v = variance.array() + noise;
    if ((v <= 0.0).any()) throw InvalidArgument("metrics: predictive variance must be positive");
    m.mean_test_nll = (0.5 * (2.0 * std::numbers::pi * v).log() + err.square() / (2.0 * v)).mean();
    return m;
}

}  // namespace cgp
