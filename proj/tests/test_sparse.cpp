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

#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>

#include <Eigen/Dense>

#include "compact_gp/cg.hpp"
#include "compact_gp/errors.hpp"
#include "compact_gp/hutchinson.hpp"
#include "compact_gp/sparse.hpp"
#include "oracles.hpp"

using namespace cgp;

namespace {

std::set<std::pair<long, long>> as_set(const SparsityPattern& p) {
    std::set<std::pair<long, long>> out;
    for (Index i = 0; i < p.n; ++i)
        for (Index k = p.row_offsets[i]; k < p.row_offsets[i + 1]; ++k) out.insert({i, p.col_indices[k]});
    return out;
}

void check_structure(const SparsityPattern& p) {
    CHECK(p.row_offsets.size() == static_cast<std::size_t>(p.n + 1));
    for (Index i = 0; i < p.n; ++i) {
        CHECK(p.contains(i, i));
        for (Index k = p.row_offsets[i] + 1; k < p.row_offsets[i + 1]; ++k)
            CHECK(p.col_indices[k - 1] < p.col_indices[k]);
        for (Index k = p.row_offsets[i]; k < p.row_offsets[i + 1]; ++k) CHECK(p.contains(p.col_indices[k], i));
    }
}

CompactKernel test_kernel(int m, double cutoff, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return CompactKernel(compute_phi(make_basis(BasisFamily::Fourier, m)), oracle::random_psd(m, rng), cutoff);
}

// Scalar that counts the arithmetic done on it.
struct Counted {
    double v = 0.0;
    static inline std::atomic<long> multiplies{0};
    static inline std::atomic<long> adds{0};

    friend Counted operator*(Counted a, Counted b) {
        ++multiplies;
        return {a.v * b.v};
    }
    Counted& operator+=(Counted o) {
        ++adds;
        v += o.v;
        return *this;
    }
};

}  // namespace

TEST_CASE("sorted patterns") {
    const std::vector<double> pts{0, 1, 2, 3};
    const SparsityPattern diag = sparsity_pattern_sorted(pts, 0.5);
    CHECK(diag.nnz() == 4);
    const SparsityPattern band = sparsity_pattern_sorted(pts, 1.5);
    CHECK(band.nnz() == 10);
    CHECK(as_set(band) == oracle::brute_pattern(Eigen::Map<const Eigen::VectorXd>(pts.data(), 4), 1.5));
    CHECK(sparsity_pattern_sorted(pts, std::numeric_limits<double>::infinity()).nnz() == 16);
    // boundary pairs are excluded
    CHECK(sparsity_pattern_sorted(pts, 1.0).nnz() == 4);

    const std::vector<double> unsorted{0, 2, 1};
    CHECK_THROWS_AS(sparsity_pattern_sorted(unsorted, 1.0), UnsortedInput);
    const std::vector<double> dup{0, 1, 1, 2};
    CHECK_THROWS_AS(sparsity_pattern_sorted(dup, 1.0), DuplicatePoints);
    CHECK_THROWS_AS(sparsity_pattern_sorted(pts, 0.0), InvalidArgument);
    CHECK(sparsity_pattern_sorted({}, 1.0).nnz() == 0);
}

TEST_CASE("patterns match the brute force oracle") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 60);
        const int d = trial % 2 ? 1 : 2;
        std::uniform_real_distribution<double> unif(0.0, 20.0);
        Eigen::MatrixXd x(n, d);
        for (auto& v : x.reshaped()) v = unif(rng);
        const double c = 0.2 + unif(rng) / 4.0;
        const auto ref = oracle::brute_pattern(x, c);
        const SparsityPattern generic = sparsity_pattern_generic(x, c);
        CHECK(as_set(generic) == ref);
        check_structure(generic);
        if (d == 1) {
            std::vector<double> s(x.data(), x.data() + n);
            std::sort(s.begin(), s.end());
            s.erase(std::unique(s.begin(), s.end()), s.end());
            const Eigen::Map<const Eigen::VectorXd> sx(s.data(), static_cast<Eigen::Index>(s.size()));
            const SparsityPattern sorted = sparsity_pattern_sorted(s, c);
            CHECK(as_set(sorted) == oracle::brute_pattern(sx, c));
            CHECK(sorted == sparsity_pattern_generic(sx, c));
            check_structure(sorted);
        }
    }
    Eigen::MatrixXd two(2, 2);
    two << 0, 0, 1.0, 0.3;
    CHECK(sparsity_pattern_generic(two, 1.0).nnz() == 2);
    CHECK(sparsity_pattern_generic(two, 1.0000001).nnz() == 4);
}

TEST_CASE("assembly") {
    const CompactKernel k = test_kernel(3, 2.0, 1);
    Eigen::MatrixXd one(1, 1);
    one << 0.3;
    auto p1 = std::make_shared<const SparsityPattern>(pattern_for(one, 2.0));
    const auto m1 = assemble(k, one, p1, 0.1);
    CHECK(m1.to_dense()(0, 0) == doctest::Approx(k(0.0) + 0.1));

    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> unif(0.0, 6.0);
    Eigen::MatrixXd x(150, 1);
    for (auto& v : x.reshaped()) v = unif(rng);
    auto dense_pattern = std::make_shared<const SparsityPattern>(sparsity_pattern_generic(x, 1e9));
    const auto dense = assemble(k, x, dense_pattern, 0.01);
    for (Index i = 0; i < 150; ++i)
        for (Index j = 0; j < 150; ++j)
            CHECK(dense.coeff(i, j) == k(x(i, 0) - x(j, 0)) + (i == j ? 0.01 : 0.0));

    auto tight = std::make_shared<const SparsityPattern>(pattern_for(x, 2.0));
    const auto m = assemble(k, x, tight, 0.01);
    CHECK(m.to_dense().isApprox(dense.to_dense(), 1e-15));
    const Eigen::MatrixXd md = m.to_dense();
    CHECK((md - md.transpose()).cwiseAbs().maxCoeff() == 0.0);

    auto small = std::make_shared<const SparsityPattern>(pattern_for(x, 1.0));
    CHECK_THROWS_AS(assemble(k, x, small, 0.01), PatternTooSmall);

    Eigen::MatrixXd far(5, 1);
    far << 0, 3, 6, 9, 12;
    auto pf = std::make_shared<const SparsityPattern>(pattern_for(far, 2.0));
    const Eigen::MatrixXd fd = assemble(k, far, pf, 0.0).to_dense();
    CHECK(fd.isApprox(Eigen::MatrixXd(k(0.0) * Eigen::MatrixXd::Identity(5, 5))));

    // 2-D tensor product
    Eigen::MatrixXd x2(60, 2);
    for (auto& v : x2.reshaped()) v = unif(rng);
    auto p2 = std::make_shared<const SparsityPattern>(pattern_for(x2, 2.0));
    const auto m2 = assemble(k, x2, p2, 0.0);
    for (Index i = 0; i < 60; ++i)
        for (Index j = 0; j < 60; ++j)
            CHECK(m2.coeff(i, j) == doctest::Approx(k(x2(i, 0) - x2(j, 0)) * k(x2(i, 1) - x2(j, 1))));
}

TEST_CASE("sparse matrix vector products") {
    const CompactKernel k = test_kernel(2, 1.5, 8);
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> unif(0.0, 10.0);
    Eigen::MatrixXd x(200, 1);
    for (auto& v : x.reshaped()) v = unif(rng);
    auto p = std::make_shared<const SparsityPattern>(pattern_for(x, 1.5));
    const auto m = assemble(k, x, p, 0.2);
    Eigen::VectorXd v(200);
    for (auto& e : v) e = unif(rng) - 5.0;
    const Eigen::VectorXd ref = m.to_dense() * v;
    CHECK((spmv(m, v) - ref).norm() <= 1e-13 * ref.norm());
    CHECK(spmv(m, Eigen::VectorXd::Zero(200).eval()).isZero(0.0));
    CHECK_THROWS_AS(spmv(m, Eigen::VectorXd::Zero(3).eval()), DimensionMismatch);

    SparseKernelMatrix<double> eye;
    eye.pattern = std::make_shared<const SparsityPattern>(sparsity_pattern_generic(x, 1e-12));
    eye.values.assign(200, 1.0);
    CHECK(spmv(eye, v) == v);

    SparseKernelMatrix<Counted> counted;
    counted.pattern = p;
    for (double val : m.values) counted.values.push_back({val});
    std::vector<Counted> cv(200), out(200);
    for (int i = 0; i < 200; ++i) cv[i].v = v[i];
    Counted::multiplies = 0;
    Counted::adds = 0;
    spmv<Counted>(counted, cv, out);
    CHECK(Counted::multiplies.load() == m.nnz());
    CHECK(Counted::adds.load() == m.nnz());
    for (int i = 0; i < 200; ++i) CHECK(out[i].v == doctest::Approx(ref[i]));
}

TEST_CASE("conjugate gradient") {
    const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(10, -1, 2);
    auto identity = [](const Eigen::VectorXd& x, Eigen::VectorXd& out) { out = x; };
    const auto r1 = conjugate_gradient<double>(identity, b);
    CHECK(r1.stats.iterations == 1);
    CHECK(r1.stats.converged);
    CHECK(r1.x.isApprox(b));

    const Eigen::VectorXd d = Eigen::VectorXd::LinSpaced(10, 1, 50);
    auto diag = [&](const Eigen::VectorXd& x, Eigen::VectorXd& out) { out = d.cwiseProduct(x); };
    CgOptions jac;
    jac.preconditioner = Preconditioner::Jacobi;
    const auto r2 = conjugate_gradient<double>(diag, b, jac, &d);
    CHECK(r2.stats.iterations == 1);
    CHECK(r2.x.isApprox(b.cwiseQuotient(d)));
    CHECK_THROWS_AS(conjugate_gradient<double>(diag, b, jac), DimensionMismatch);

    std::mt19937_64 rng(21);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd G(64, 64);
    for (auto& v : G.reshaped()) v = normal(rng);
    const Eigen::MatrixXd A = G * G.transpose() + Eigen::MatrixXd::Identity(64, 64);
    Eigen::VectorXd rhs(64);
    for (auto& v : rhs) v = normal(rng);
    auto apply = [&](const Eigen::VectorXd& x, Eigen::VectorXd& out) { out.noalias() = A * x; };
    const auto r3 = conjugate_gradient<double>(apply, rhs);
    const Eigen::VectorXd exact = A.llt().solve(rhs);
    CHECK((r3.x - exact).norm() <= 1e-8 * exact.norm());
    CHECK(r3.stats.final_residual_norm <= 1e-10);

    CgOptions one;
    one.max_iterations = 1;
    const auto r4 = conjugate_gradient<double>(apply, rhs, one);
    CHECK_FALSE(r4.stats.converged);
    CHECK(r4.stats.final_residual_norm > 0.0);

    auto indefinite = [](const Eigen::VectorXd& x, Eigen::VectorXd& out) { out = -x; };
    CHECK_THROWS_AS(conjugate_gradient<double>(indefinite, b), BreakdownDetected);
    CHECK(conjugate_gradient<double>(apply, Eigen::VectorXd::Zero(64).eval()).x.isZero(0.0));
    CgOptions bad;
    bad.tolerance = 0.0;
    CHECK_THROWS_AS(conjugate_gradient<double>(apply, rhs, bad), InvalidArgument);
}

TEST_CASE("CG against Cholesky on compact kernel matrices") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 6; ++trial) {
        const int n = 64 << (trial % 4);
        const CompactKernel k = test_kernel(1 + trial % 4, 1.0 + trial, 100 + trial);
        std::uniform_real_distribution<double> unif(0.0, n / 8.0);
        Eigen::MatrixXd x(n, 1);
        for (auto& v : x.reshaped()) v = unif(rng);
        std::sort(x.data(), x.data() + n);
        auto p = std::make_shared<const SparsityPattern>(pattern_for(x, k.cutoff()));
        const auto m = assemble(k, x, p, 1e-6 * k(0.0));
        std::normal_distribution<double> normal;
        Eigen::VectorXd b(n);
        for (auto& v : b) v = normal(rng);
        const auto sol = conjugate_gradient(m, b);
        const Eigen::VectorXd exact = m.to_dense().llt().solve(b);
        INFO("trial " << trial << " iterations " << sol.stats.iterations);
        CHECK(sol.stats.converged);
        CHECK((sol.x - exact).norm() <= 1e-6 * exact.norm());
    }
}

TEST_CASE("Hutchinson trace estimates") {
    auto id = [](const Eigen::VectorXd& b) { return b; };
    const auto zero = hutchinson_trace(id, [](const Eigen::VectorXd& b) { return Eigen::VectorXd::Zero(b.size()).eval(); },
                                       32, 8, 1);
    CHECK(zero.estimate == 0.0);

    const auto unit = hutchinson_trace(id, id, 128, 4096, 3);
    CHECK(std::abs(unit.estimate - 128.0) <= 3.0 * unit.standard_error);
    CHECK(std::isinf(hutchinson_trace(id, id, 4, 1, 0).standard_error));
    CHECK_THROWS_AS(hutchinson_trace(id, id, 4, 0, 0), InvalidArgument);

    std::mt19937_64 rng(17);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd G(64, 64), H(64, 64);
    for (auto& v : G.reshaped()) v = normal(rng);
    for (auto& v : H.reshaped()) v = normal(rng);
    const Eigen::MatrixXd K = G * G.transpose() / 64.0 + Eigen::MatrixXd::Identity(64, 64);
    const Eigen::MatrixXd dK = H + H.transpose();
    const Eigen::LLT<Eigen::MatrixXd> llt(K);
    const double exact = llt.solve(dK).trace();
    auto solve = [&](const Eigen::VectorXd& b) { return Eigen::VectorXd(llt.solve(b)); };
    auto apply = [&](const Eigen::VectorXd& b) { return Eigen::VectorXd(dK * b); };
    const auto est = hutchinson_trace(solve, apply, 64, 2000, 5);
    CHECK(std::abs(est.estimate - exact) <= 3.0 * est.standard_error);

    double sum = 0.0, var = 0.0;
    const int seeds = 50;
    for (int s = 0; s < seeds; ++s) {
        const auto e = hutchinson_trace(solve, apply, 64, 16, 1000 + s);
        sum += e.estimate;
        var += e.standard_error * e.standard_error;
    }
    const double pooled = std::sqrt(var) / seeds;
    CHECK(std::abs(sum / seeds - exact) < 4.0 * pooled);
}

TEST_CASE("Hutchinson results do not depend on the worker count") {
    auto id = [](const Eigen::VectorXd& b) { return b; };
    auto sq = [](const Eigen::VectorXd& b) { return Eigen::VectorXd(b.cwiseProduct(b)); };
    ::setenv("COMPACT_GP_THREADS", "1", 1);
    const auto serial = hutchinson_trace(id, sq, 50, 37, 9);
    ::setenv("COMPACT_GP_THREADS", "4", 1);
    const auto threaded = hutchinson_trace(id, sq, 50, 37, 9);
    ::unsetenv("COMPACT_GP_THREADS");
    CHECK(serial.estimate == threaded.estimate);
    CHECK(serial.standard_error == threaded.standard_error);
    CHECK(gaussian_probe(10, 9, 3) == gaussian_probe(10, 9, 3));
    CHECK(gaussian_probe(10, 9, 3) != gaussian_probe(10, 9, 4));
}
