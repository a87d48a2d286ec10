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

#include <variant>
#include <vector>

#include <Eigen/Core>

#include "compact_gp/basis.hpp"

namespace cgp {

/// Φ_ij as a polynomial in τ = |t| on [0, 1]; coefficients in ascending degree.
struct PolynomialEntry {
    std::vector<double> coefficients;

    int degree() const;
};

/// Φ_mn(τ) = cos(sπτ)(1−τ)sinc(d(1−τ)) with s = m+n, d = n−m (zero-based m, n).
struct FourierEntry {
    int sum = 0;
    int diff = 0;
};

using PhiEntry = std::variant<PolynomialEntry, FourierEntry>;

/// Matrix-valued correlation function Φ(τ) of a basis. Only the upper
/// triangle is stored; entry(i, j) and entry(j, i) return the same record.
class PhiMatrix {
public:
    PhiMatrix(BasisSpec basis, std::vector<PhiEntry> upper);

    const BasisSpec& basis() const { return basis_; }
    int order() const { return basis_.order; }
    const PhiEntry& entry(int i, int j) const;

    /// Φ(τ) for τ ≥ 0; the zero matrix for τ ≥ 1.
    Eigen::MatrixXd operator()(double tau) const;

    /// Writes Φ(τ) into `out` (resized to M×M).
    void evaluate(double tau, Eigen::MatrixXd& out) const;

    /// tr(A Φ(τ)) for symmetric A, without forming Φ(τ).
    double contract(const Eigen::MatrixXd& A, double tau) const;

    /// Single entry Φ_ij(τ).
    double evaluate_entry(int i, int j, double tau) const;

private:
    static int packed_index(int i, int j, int order);

    BasisSpec basis_;
    std::vector<PhiEntry> upper_;
};

/// Closed-form Φ for the basis. Polynomial entries come from exact rational
/// integration of the symmetrized correlation integral.
PhiMatrix compute_phi(const BasisSpec& basis);

/// Φ(τ); throws InvalidArgument for τ < 0.
Eigen::MatrixXd phi_eval(const PhiMatrix& phi, double tau);

/// Quadrature evaluation of
///   (1/2) ∫_{-1}^{1-2τ} [φ_i*(x) φ_j(x+2τ) + φ_j(x) φ_i*(x+2τ)] dx
/// to absolute tolerance 1e-12. Independent of the closed forms; used as an oracle.
double phi_numeric_oracle(const BasisSpec& basis, int i, int j, double tau);

/// Numerical rank of the M(M+1)/2 distinct entry functions sampled on a
/// uniform grid of `grid_size` points in [0, 1).
int rank_dimension(const PhiMatrix& phi, int grid_size = 512, double tol = 1e-10);

}  // namespace cgp
