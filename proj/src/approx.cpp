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

#include "compact_gp/approx.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

#include "compact_gp/parallel.hpp"
#include "compact_gp/quadrature.hpp"

namespace cgp {

void QuadratureSpec::validate() const {
    if (panels < 1) throw InvalidArgument("quadrature needs at least one panel");
    if (nodes_per_panel < 2 || nodes_per_panel > 128) throw InvalidArgument("nodes_per_panel must be in [2, 128]");
}

namespace {

void check_cutoff(double cutoff) {
    if (!(cutoff > 0.0) || !std::isfinite(cutoff)) throw InvalidArgument("cutoff must be positive and finite");
}

// Row k holds vec(Φ(t_k/c)) for the composite nodes t_k on [0, c].
struct SampledPhi {
    CompositeRule rule;
    Eigen::MatrixXd values;  // nodes × M²
};

SampledPhi sample_phi(const PhiMatrix& phi, double cutoff, const QuadratureSpec& q) {
    q.validate();
    check_cutoff(cutoff);
    SampledPhi s;
    s.rule = composite_rule(0.0, cutoff, q.panels, q.nodes_per_panel);
    const int m = phi.order();
    const auto n = s.rule.nodes.size();
    s.values.resize(n, static_cast<Eigen::Index>(m) * m);
    parallel_for(0, static_cast<std::size_t>(n), [&](std::size_t k) {
        Eigen::MatrixXd value;
        phi.evaluate(s.rule.nodes[static_cast<Eigen::Index>(k)] / cutoff, value);
        s.values.row(static_cast<Eigen::Index>(k)) = Eigen::Map<const Eigen::RowVectorXd>(value.data(), value.size());
    });
    return s;
}

double frob_inner(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return a.cwiseProduct(b).sum(); }

}  // namespace

Eigen::MatrixXd compute_R(const PhiMatrix& phi, double cutoff, const QuadratureSpec& q) {
    const SampledPhi s = sample_phi(phi, cutoff, q);
    const auto dim = s.values.cols();
    const Eigen::MatrixXd weighted = s.rule.weights.cwiseSqrt().asDiagonal() * s.values;
    // symmetric rank-k update fills only the lower half; mirror it so that
    // R(ij, kl) == R(kl, ij) holds bit-for-bit
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(dim, dim);
    R.selfadjointView<Eigen::Lower>().rankUpdate(weighted.transpose(), 2.0);
    R.triangularView<Eigen::StrictlyUpper>() = R.transpose();
    return R;
}

Eigen::MatrixXd compute_B(const PhiMatrix& phi, const TargetFunction& target, double cutoff,
                          const QuadratureSpec& q) {
    const SampledPhi s = sample_phi(phi, cutoff, q);
    Eigen::VectorXd wk(s.rule.nodes.size());
    for (Eigen::Index k = 0; k < wk.size(); ++k) wk[k] = 2.0 * s.rule.weights[k] * target(s.rule.nodes[k]);
    const Eigen::VectorXd b = s.values.transpose() * wk;
    const int m = phi.order();
    Eigen::MatrixXd B = Eigen::Map<const Eigen::MatrixXd>(b.data(), m, m);
    return 0.5 * (B + B.transpose());
}

Eigen::MatrixXd compute_B(const PhiMatrix& phi, const TargetKernel& target, double cutoff,
                          const QuadratureSpec& q) {
    return compute_B(phi, TargetFunction([&target](double t) { return target(t); }), cutoff, q);
}

double l2_error(const Eigen::MatrixXd& A, const PhiMatrix& phi, const TargetFunction& target, double cutoff,
                const QuadratureSpec& q) {
    q.validate();
    check_cutoff(cutoff);
    const Eigen::MatrixXd sym = 0.5 * (A + A.transpose());
    const double integral = integrate_composite(
        [&](double t) {
            const double r = phi.contract(sym, t / cutoff) - target(t);
            return r * r;
        },
        0.0, cutoff, q.panels, q.nodes_per_panel);
    return std::sqrt(2.0 * integral);
}

double l2_error(const Eigen::MatrixXd& A, const PhiMatrix& phi, const TargetKernel& target, double cutoff,
                const QuadratureSpec& q) {
    return l2_error(A, phi, TargetFunction([&target](double t) { return target(t); }), cutoff, q);
}

double ApproxProblem::objective(const Eigen::MatrixXd& A) const {
    const Eigen::Map<const Eigen::VectorXd> a(A.data(), A.size());
    return 0.5 * a.dot(R * a) - frob_inner(B, A);
}

ApproxProblem make_approx_problem(const PhiMatrix& phi, TargetFunction target, double cutoff,
                                  const QuadratureSpec& q) {
    ApproxProblem p{phi, std::move(target), cutoff, q, {}, {}, {}, 0.0};
    p.R = compute_R(phi, cutoff, q);
    p.B = compute_B(phi, p.target, cutoff, q);
    p.Phi0 = phi(0.0);
    p.K0 = p.target(0.0);
    return p;
}

ApproxProblem make_approx_problem(const PhiMatrix& phi, const TargetKernel& target, double cutoff,
                                  const QuadratureSpec& q) {
    return make_approx_problem(phi, TargetFunction([target](double t) { return target(t); }), cutoff, q);
}

Eigen::MatrixXd project_psd(const Eigen::MatrixXd& S) {
    const Eigen::MatrixXd sym = 0.5 * (S + S.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    if (eig.info() != Eigen::Success) throw EigenFailure("eigendecomposition did not converge");
    const Eigen::VectorXd clamped = eig.eigenvalues().cwiseMax(0.0);
    Eigen::MatrixXd out = eig.eigenvectors() * clamped.asDiagonal() * eig.eigenvectors().transpose();
    return 0.5 * (out + out.transpose());
}

Eigen::MatrixXd feasible_baseline(const ApproxProblem& problem) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(problem.Phi0);
    const Eigen::VectorXd& ev = eig.eigenvalues();
    const double thresh = 1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
    int rank = 0;
    for (Eigen::Index k = 0; k < ev.size(); ++k) {
        if (ev[k] > thresh) {
            inv[k] = 1.0 / ev[k];
            ++rank;
        }
    }
    if (rank == 0) return Eigen::MatrixXd::Zero(problem.order(), problem.order());
    return problem.K0 / rank * (eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose());
}

namespace {

class AdmmSolver {
public:
    AdmmSolver(const ApproxProblem& problem, const ApproxOptions& opts)
        : p_(problem), opts_(opts), m_(problem.order()), dim_(static_cast<Eigen::Index>(m_) * m_) {
        b_ = Eigen::Map<const Eigen::VectorXd>(p_.B.data(), dim_);
        phi0_ = Eigen::Map<const Eigen::VectorXd>(p_.Phi0.data(), dim_);
    }

    ApproxResult run();

private:
    void factor(double rho);
    Eigen::VectorXd quadratic_step(const Eigen::VectorXd& z, const Eigen::VectorXd& u, double rho) const;
    // Maps a PSD matrix onto the feasible set; false if impossible.
    bool make_feasible(Eigen::MatrixXd& A) const;
    void offer(const Eigen::MatrixXd& candidate);
    bool polish(const Eigen::MatrixXd& Z);

    const ApproxProblem& p_;
    const ApproxOptions& opts_;
    int m_;
    Eigen::Index dim_;
    Eigen::VectorXd b_;
    Eigen::VectorXd phi0_;
    Eigen::PartialPivLU<Eigen::MatrixXd> kkt_;
    Eigen::LLT<Eigen::MatrixXd> unconstrained_;

    Eigen::MatrixXd best_;
    double best_objective_ = std::numeric_limits<double>::infinity();
};

void AdmmSolver::factor(double rho) {
    Eigen::MatrixXd H = p_.R;
    H.diagonal().array() += rho;
    if (opts_.peak_matching) {
        Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(dim_ + 1, dim_ + 1);
        kkt.topLeftCorner(dim_, dim_) = H;
        kkt.topRightCorner(dim_, 1) = phi0_;
        kkt.bottomLeftCorner(1, dim_) = phi0_.transpose();
        kkt_.compute(kkt);
    } else {
        unconstrained_.compute(H);
    }
}

Eigen::VectorXd AdmmSolver::quadratic_step(const Eigen::VectorXd& z, const Eigen::VectorXd& u, double rho) const {
    const Eigen::VectorXd rhs = b_ + rho * (z - u);
    if (!opts_.peak_matching) return unconstrained_.solve(rhs);
    Eigen::VectorXd full(dim_ + 1);
    full.head(dim_) = rhs;
    full[dim_] = p_.K0;
    return kkt_.solve(full).head(dim_);
}

bool AdmmSolver::make_feasible(Eigen::MatrixXd& A) const {
    if (!opts_.peak_matching) return true;
    const double t = frob_inner(A, p_.Phi0);
    if (!(t > 0.0)) return false;
    A *= p_.K0 / t;
    return true;
}

void AdmmSolver::offer(const Eigen::MatrixXd& candidate) {
    Eigen::MatrixXd A = candidate;
    if (!make_feasible(A)) return;
    const double obj = p_.objective(A);
    if (obj < best_objective_) {
        best_objective_ = obj;
        best_ = A;
    }
}

// Re-solves the equality-constrained quadratic restricted to the range of
// the current PSD iterate. Exact when the active rank is identified.
bool AdmmSolver::polish(const Eigen::MatrixXd& Z) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Z);
    if (eig.info() != Eigen::Success) return false;
    const Eigen::VectorXd& ev = eig.eigenvalues();
    const double top = ev.maxCoeff();
    if (!(top > 0.0)) return false;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index k = 0; k < ev.size(); ++k)
        if (ev[k] > 1e-7 * top) keep.push_back(k);
    const auto r = static_cast<Eigen::Index>(keep.size());
    Eigen::MatrixXd V(m_, r);
    for (Eigen::Index c = 0; c < r; ++c) V.col(c) = eig.eigenvectors().col(keep[c]);

    // basis of symmetric r×r matrices pushed through S ↦ V S Vᵀ
    const Eigen::Index nsym = r * (r + 1) / 2;
    Eigen::MatrixXd E(dim_, nsym);
    Eigen::Index col = 0;
    for (Eigen::Index i = 0; i < r; ++i) {
        for (Eigen::Index j = i; j < r; ++j, ++col) {
            Eigen::MatrixXd piece = V.col(i) * V.col(j).transpose();
            if (i != j) piece += V.col(j) * V.col(i).transpose();
            E.col(col) = Eigen::Map<const Eigen::VectorXd>(piece.data(), dim_);
        }
    }
    const Eigen::MatrixXd Q = E.transpose() * p_.R * E;
    const Eigen::VectorXd q = E.transpose() * b_;
    Eigen::VectorXd s;
    if (opts_.peak_matching) {
        Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(nsym + 1, nsym + 1);
        kkt.topLeftCorner(nsym, nsym) = Q;
        const Eigen::VectorXd g = E.transpose() * phi0_;
        kkt.topRightCorner(nsym, 1) = g;
        kkt.bottomLeftCorner(1, nsym) = g.transpose();
        Eigen::VectorXd rhs(nsym + 1);
        rhs.head(nsym) = q;
        rhs[nsym] = p_.K0;
        s = kkt.completeOrthogonalDecomposition().solve(rhs).head(nsym);
    } else {
        s = Q.completeOrthogonalDecomposition().solve(q);
    }
    const Eigen::VectorXd a = E * s;
    const Eigen::MatrixXd A = Eigen::Map<const Eigen::MatrixXd>(a.data(), m_, m_);
    const Eigen::MatrixXd sym = 0.5 * (A + A.transpose());
    const double min_eig =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    if (min_eig < -1e-9 * std::max(1.0, sym.trace())) return false;
    offer(project_psd(sym));
    return true;
}

ApproxResult AdmmSolver::run() {
    ApproxResult result;
    double rho = opts_.rho;
    factor(rho);

    Eigen::MatrixXd Z = opts_.peak_matching ? feasible_baseline(p_) : Eigen::MatrixXd::Zero(m_, m_);
    offer(Z);
    result.objective_trace.push_back(best_objective_);

    Eigen::VectorXd z = Eigen::Map<const Eigen::VectorXd>(Z.data(), dim_);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(dim_);
    bool converged = false;
    int it = 0;
    double primal = std::numeric_limits<double>::infinity();
    double dual = std::numeric_limits<double>::infinity();
    const double b_norm = b_.norm();

    for (it = 1; it <= opts_.max_iterations; ++it) {
        const Eigen::VectorXd a = quadratic_step(z, u, rho);
        const Eigen::VectorXd z_old = z;
        const Eigen::VectorXd shifted = a + u;
        Z = project_psd(Eigen::Map<const Eigen::MatrixXd>(shifted.data(), m_, m_));
        z = Eigen::Map<const Eigen::VectorXd>(Z.data(), dim_);
        u += a - z;

        const double r_abs = (a - z).norm();
        const double s_abs = rho * (z - z_old).norm();
        primal = r_abs / std::max({a.norm(), z.norm(), std::numeric_limits<double>::min()});
        dual = s_abs / std::max({rho * u.norm(), b_norm, std::numeric_limits<double>::min()});

        if (it % opts_.snapshot_interval == 0) {
            offer(Z);
            result.objective_trace.push_back(best_objective_);
        }
        if (primal < opts_.tolerance && dual < opts_.tolerance) {
            converged = true;
            break;
        }
        if (opts_.rebalance_interval > 0 && it % opts_.rebalance_interval == 0) {
            double scale = 1.0;
            if (r_abs > 10.0 * s_abs) scale = 2.0;
            else if (s_abs > 10.0 * r_abs) scale = 0.5;
            if (scale != 1.0) {
                rho *= scale;
                u /= scale;
                factor(rho);
            }
        }
    }
    if (!converged) it = opts_.max_iterations;

    offer(Z);
    if (opts_.polish) polish(Z);
    result.objective_trace.push_back(best_objective_);

    result.A = best_;
    result.objective = best_objective_;
    result.iterations = it;
    result.primal_residual = primal;
    result.dual_residual = dual;
    result.l2_error = l2_error(result.A, p_.phi, p_.target, p_.cutoff, p_.quadrature);
    result.l2_error_squared = result.l2_error * result.l2_error;

    if (!converged) {
        throw MaxIterationsExceeded("ADMM did not converge in " + std::to_string(opts_.max_iterations) +
                                        " iterations",
                                    std::move(result));
    }
    return result;
}

}  // namespace

ApproxResult solve_compact_approx(const ApproxProblem& problem, const ApproxOptions& opts) {
    const int m = problem.order();
    if (problem.R.rows() != m * m || problem.R.cols() != m * m || problem.B.rows() != m || problem.B.cols() != m) {
        throw DimensionMismatch("approximation problem tensors do not match the basis order");
    }
    if (opts.max_iterations < 1 || !(opts.tolerance > 0.0) || !(opts.rho > 0.0) || opts.snapshot_interval < 1) {
        throw InvalidArgument("invalid solver options");
    }

    if (opts.peak_matching) {
        const bool phi0_zero = problem.Phi0.cwiseAbs().maxCoeff() == 0.0;
        if ((phi0_zero && problem.K0 != 0.0) || problem.K0 < 0.0) {
            throw InfeasibleConstraint("peak-matching constraint tr(A Phi(0)) = K(0) has no PSD solution");
        }
        if (problem.K0 == 0.0) {
            // PSD A with tr(AΦ(0)) = 0 and Φ(0) positive definite forces A = 0
            ApproxResult zero;
            zero.A = Eigen::MatrixXd::Zero(m, m);
            zero.objective = 0.0;
            zero.objective_trace = {0.0};
            zero.l2_error = l2_error(zero.A, problem.phi, problem.target, problem.cutoff, problem.quadrature);
            zero.l2_error_squared = zero.l2_error * zero.l2_error;
            return zero;
        }
    }
    AdmmSolver solver(problem, opts);
    return solver.run();
}

}  // namespace cgp
