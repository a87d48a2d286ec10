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

#include <functional>
#include <vector>

#include <Eigen/Core>

#include "compact_gp/errors.hpp"
#include "compact_gp/kernels.hpp"
#include "compact_gp/phi.hpp"

namespace cgp {

/// Composite Gauss–Legendre rule on [0, c].
struct QuadratureSpec {
    int panels = 64;
    int nodes_per_panel = 32;

    /// Throws InvalidArgument unless panels ≥ 1 and nodes_per_panel ∈ [2, 128].
    void validate() const;
    QuadratureSpec refined() const { return {2 * panels, nodes_per_panel}; }
};

using TargetFunction = std::function<double(double)>;

/// R is stored unfolded as an M²×M² matrix with row index i*M+j and column
/// index k*M+l, so R(i*M+j, k*M+l) = 2∫₀ᶜ Φ_ij(t/c) Φ_kl(t/c) dt.
Eigen::MatrixXd compute_R(const PhiMatrix& phi, double cutoff, const QuadratureSpec& q = {});

/// B_ij = 2∫₀ᶜ K(t) Φ_ij(t/c) dt.
Eigen::MatrixXd compute_B(const PhiMatrix& phi, const TargetFunction& target, double cutoff,
                          const QuadratureSpec& q = {});
Eigen::MatrixXd compute_B(const PhiMatrix& phi, const TargetKernel& target, double cutoff,
                          const QuadratureSpec& q = {});

/// (2∫₀ᶜ (tr(AΦ(t/c)) − K(t))² dt)^{1/2}: the L2([−c, c]) norm of the residual.
double l2_error(const Eigen::MatrixXd& A, const PhiMatrix& phi, const TargetFunction& target, double cutoff,
                const QuadratureSpec& q = {});
double l2_error(const Eigen::MatrixXd& A, const PhiMatrix& phi, const TargetKernel& target, double cutoff,
                const QuadratureSpec& q = {});

struct ApproxProblem {
    PhiMatrix phi;
    TargetFunction target;
    double cutoff = 1.0;
    QuadratureSpec quadrature;
    Eigen::MatrixXd R;     // M²×M², see compute_R
    Eigen::MatrixXd B;     // M×M
    Eigen::MatrixXd Phi0;  // Φ(0)
    double K0 = 0.0;       // target at lag zero

    int order() const { return phi.order(); }
    double R_at(int i, int j, int k, int l) const { return R(i * order() + j, k * order() + l); }

    /// (1/2) Σ R_ijkl A_ij A_kl − Σ B_ij A_ij.
    double objective(const Eigen::MatrixXd& A) const;
};

ApproxProblem make_approx_problem(const PhiMatrix& phi, TargetFunction target, double cutoff,
                                  const QuadratureSpec& q = {});
ApproxProblem make_approx_problem(const PhiMatrix& phi, const TargetKernel& target, double cutoff,
                                  const QuadratureSpec& q = {});

/// Nearest PSD matrix in Frobenius norm: negative eigenvalues clamped to zero.
/// Throws EigenFailure if the eigendecomposition does not converge.
Eigen::MatrixXd project_psd(const Eigen::MatrixXd& S);

struct ApproxOptions {
    bool peak_matching = true;
    int max_iterations = 100000;
    double tolerance = 1e-8;
    double rho = 1.0;
    int rebalance_interval = 50;
    int snapshot_interval = 50;
    bool polish = true;
};

struct ApproxResult {
    Eigen::MatrixXd A;
    double l2_error = 0.0;
    /// Square of l2_error; this is the quantity usually quoted as the
    /// approximation error of a fitted compact kernel.
    double l2_error_squared = 0.0;
    double objective = 0.0;
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    /// Best feasible objective seen at each snapshot; non-increasing.
    std::vector<double> objective_trace;
};

class MaxIterationsExceeded : public Error {
public:
    MaxIterationsExceeded(const std::string& what, ApproxResult best) : Error(what), best_(std::move(best)) {}
    const ApproxResult& best() const noexcept { return best_; }

private:
    ApproxResult best_;
};

/// Minimizes (1/2)ΣR A A − ΣB A over PSD A with tr(AΦ(0)) = K(0) (when
/// peak matching is on) by ADMM: an equality-constrained quadratic step
/// alternating with projection onto the PSD cone.
ApproxResult solve_compact_approx(const ApproxProblem& problem, const ApproxOptions& opts = {});

/// Peak-matched starting point K(0)·Φ(0)⁻¹/M.
Eigen::MatrixXd feasible_baseline(const ApproxProblem& problem);

}  // namespace cgp
