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

#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <variant>

#include <Eigen/Core>

#include "compact_gp/phi.hpp"

namespace cgp {

/// K_A(t) = tr(A Φ(|t|/c)), supported on [-c, c].
class CompactKernel {
public:
    /// Symmetrizes A and checks that it is PSD (min eigenvalue ≥ −1e-10·max(1, tr A))
    /// and that c > 0. Throws InvalidArgument otherwise.
    CompactKernel(PhiMatrix phi, const Eigen::MatrixXd& A, double cutoff);

    const PhiMatrix& phi() const { return phi_; }
    const BasisSpec& basis() const { return phi_.basis(); }
    const Eigen::MatrixXd& A() const { return A_; }
    double cutoff() const { return cutoff_; }
    int order() const { return phi_.order(); }

    double operator()(double t) const;

    /// ∇_A K_A(t) = Φ(|t|/c).
    Eigen::MatrixXd grad_A(double t) const;

    double value_at_zero() const { return (*this)(0.0); }

private:
    PhiMatrix phi_;
    Eigen::MatrixXd A_;
    double cutoff_;
};

enum class TargetFamily { SE, OU, Matern52, Sinc, Wendland1, Wendland2, Wendland3, Wendland4 };

/// Classical stationary kernels, σ²·f(|t|/ℓ).
struct TargetKernel {
    TargetFamily family = TargetFamily::SE;
    double amplitude = 1.0;
    double lengthscale = 1.0;

    TargetKernel() = default;
    /// Throws InvalidArgument unless amplitude and lengthscale are positive.
    TargetKernel(TargetFamily family, double amplitude, double lengthscale);

    double operator()(double t) const;

    bool is_compact() const;
    /// Support radius ℓ for the Wendland family, +∞ otherwise.
    double support() const;
};

std::string to_string(TargetFamily family);
/// "se", "ou", "matern52" (or "matern"), "sinc", "wendland1".."wendland4".
TargetFamily parse_target_family(std::string_view name);

double target_eval(const TargetKernel& k, double t);
double kernel_eval(const CompactKernel& k, double t);
Eigen::MatrixXd kernel_grad_A(const CompactKernel& k, double t);

using Kernel = std::variant<CompactKernel, TargetKernel>;

double evaluate(const Kernel& k, double t);

/// Distance beyond which the kernel is exactly zero (+∞ if not compact).
double support_radius(const Kernel& k);

inline double value_at_zero(const Kernel& k) { return evaluate(k, 0.0); }

/// Π_j K(x_j). Zero as soon as one coordinate leaves the support.
/// Throws DimensionMismatch for an empty vector.
double tensor_product_eval(const Kernel& k, std::span<const double> x);

}  // namespace cgp
