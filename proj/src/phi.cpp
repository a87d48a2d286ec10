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

#include "compact_gp/phi.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/SVD>
#include <boost/multiprecision/cpp_int.hpp>

#include "compact_gp/errors.hpp"
#include "compact_gp/quadrature.hpp"
#include "compact_gp/sinc.hpp"

namespace cgp {

namespace {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

BigInt binomial(int n, int k) {
    BigInt r = 1;
    for (int i = 1; i <= k; ++i) {
        r *= n - k + i;
        r /= i;
    }
    return r;
}

BigInt signed_power(int base, int exponent) {
    BigInt r = 1;
    for (int i = 0; i < exponent; ++i) r *= base;
    return r;
}

// ∫_{-1}^{1-2τ} x^i (x+2τ)^j dx as exact coefficients in τ.
std::vector<Rational> one_sided_correlation(int i, int j, int max_degree) {
    std::vector<Rational> coef(max_degree + 1, Rational(0));
    for (int k = 0; k <= j; ++k) {
        const int p = i + k;
        // binomial term of (x+2τ)^j: C(j,k) 2^{j-k} τ^{j-k} x^k, then ∫ x^p dx
        const Rational base = Rational(binomial(j, k) * signed_power(2, j - k)) / Rational(p + 1);
        // (1-2τ)^{p+1} expanded in τ
        for (int m = 0; m <= p + 1; ++m) {
            coef[j - k + m] += base * Rational(binomial(p + 1, m) * signed_power(-2, m));
        }
        // lower limit: (-1)^{p+1}
        coef[j - k] -= base * Rational(signed_power(-1, p + 1));
    }
    return coef;
}

PolynomialEntry polynomial_entry(int i, int j, int order) {
    const int max_degree = 2 * order;
    const auto a = one_sided_correlation(i, j, max_degree);
    const auto b = one_sided_correlation(j, i, max_degree);
    PolynomialEntry entry;
    entry.coefficients.resize(max_degree + 1);
    for (int k = 0; k <= max_degree; ++k) {
        const Rational sym = (a[k] + b[k]) / 2;
        entry.coefficients[k] = sym.convert_to<double>();
    }
    while (entry.coefficients.size() > 1 && entry.coefficients.back() == 0.0) entry.coefficients.pop_back();
    return entry;
}

double evaluate_polynomial(const std::vector<double>& coef, double tau) {
    double acc = 0.0;
    for (auto it = coef.rbegin(); it != coef.rend(); ++it) acc = acc * tau + *it;
    return acc;
}

double evaluate_fourier(const FourierEntry& e, double tau) {
    const double u = 1.0 - tau;
    return std::cos(e.sum * std::numbers::pi * tau) * u * sinc(e.diff * u);
}

}  // namespace

int PolynomialEntry::degree() const {
    for (int k = static_cast<int>(coefficients.size()) - 1; k >= 0; --k)
        if (coefficients[k] != 0.0) return k;
    return 0;
}

PhiMatrix::PhiMatrix(BasisSpec basis, std::vector<PhiEntry> upper)
    : basis_(basis), upper_(std::move(upper)) {
    const auto m = static_cast<std::size_t>(basis_.order);
    if (upper_.size() != m * (m + 1) / 2) throw DimensionMismatch("PhiMatrix needs M(M+1)/2 entries");
}

int PhiMatrix::packed_index(int i, int j, int order) {
    if (i > j) std::swap(i, j);
    // row-major upper triangle
    return i * order - i * (i - 1) / 2 + (j - i);
}

const PhiEntry& PhiMatrix::entry(int i, int j) const {
    if (i < 0 || j < 0 || i >= order() || j >= order()) throw DimensionMismatch("Phi index out of range");
    return upper_[packed_index(i, j, order())];
}

double PhiMatrix::evaluate_entry(int i, int j, double tau) const {
    if (tau >= 1.0) return 0.0;
    return std::visit(
        [tau](const auto& e) -> double {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, PolynomialEntry>) {
                return evaluate_polynomial(e.coefficients, tau);
            } else {
                return evaluate_fourier(e, tau);
            }
        },
        entry(i, j));
}

void PhiMatrix::evaluate(double tau, Eigen::MatrixXd& out) const {
    const int m = order();
    out.setZero(m, m);
    if (tau >= 1.0) return;
    std::size_t k = 0;
    for (int i = 0; i < m; ++i) {
        for (int j = i; j < m; ++j, ++k) {
            const PhiEntry& e = upper_[k];
            const double v = std::holds_alternative<FourierEntry>(e)
                                 ? evaluate_fourier(std::get<FourierEntry>(e), tau)
                                 : evaluate_polynomial(std::get<PolynomialEntry>(e).coefficients, tau);
            out(i, j) = v;
            out(j, i) = v;
        }
    }
}

double PhiMatrix::contract(const Eigen::MatrixXd& A, double tau) const {
    if (tau >= 1.0) return 0.0;
    const int m = order();
    double acc = 0.0;
    std::size_t k = 0;
    for (int i = 0; i < m; ++i) {
        for (int j = i; j < m; ++j, ++k) {
            const PhiEntry& e = upper_[k];
            const double v = std::holds_alternative<FourierEntry>(e)
                                 ? evaluate_fourier(std::get<FourierEntry>(e), tau)
                                 : evaluate_polynomial(std::get<PolynomialEntry>(e).coefficients, tau);
            acc += (i == j ? A(i, i) : A(i, j) + A(j, i)) * v;
        }
    }
    return acc;
}

Eigen::MatrixXd PhiMatrix::operator()(double tau) const {
    Eigen::MatrixXd out;
    evaluate(tau, out);
    return out;
}

PhiMatrix compute_phi(const BasisSpec& basis) {
    const BasisSpec checked = make_basis(basis.family, basis.order);
    const int m = checked.order;
    std::vector<PhiEntry> upper;
    upper.reserve(static_cast<std::size_t>(m) * (m + 1) / 2);
    for (int i = 0; i < m; ++i) {
        for (int j = i; j < m; ++j) {
            if (checked.family == BasisFamily::Fourier) {
                upper.emplace_back(FourierEntry{i + j, j - i});
            } else {
                upper.emplace_back(polynomial_entry(i, j, m));
            }
        }
    }
    return PhiMatrix(checked, std::move(upper));
}

Eigen::MatrixXd phi_eval(const PhiMatrix& phi, double tau) {
    if (!(tau >= 0.0)) throw InvalidArgument("phi_eval requires tau >= 0");
    return phi(tau);
}

double phi_numeric_oracle(const BasisSpec& basis, int i, int j, double tau) {
    if (i < 0 || j < 0 || i >= basis.order || j >= basis.order) throw DimensionMismatch("basis index out of range");
    if (tau < 0.0 || tau > 1.0) throw InvalidArgument("oracle requires tau in [0, 1]");
    const double shift = 2.0 * tau;
    const double upper = 1.0 - 2.0 * tau;

    if (basis.family == BasisFamily::Polynomial) {
        auto integrand = [=](double x) {
            return 0.5 * (std::pow(x, i) * std::pow(x + shift, j) + std::pow(x, j) * std::pow(x + shift, i));
        };
        return integrate_adaptive(integrand, -1.0, upper);
    }

    // φ_k(x) = e^{iπkx}/√2, zero-based k
    auto phi_k = [](int k, double x) {
        return std::polar(1.0 / std::numbers::sqrt2, std::numbers::pi * k * x);
    };
    auto integrand = [&](double x) {
        const std::complex<double> v =
            std::conj(phi_k(i, x)) * phi_k(j, x + shift) + phi_k(j, x) * std::conj(phi_k(i, x + shift));
        return 0.5 * v.real();
    };
    return integrate_adaptive(integrand, -1.0, upper);
}

int rank_dimension(const PhiMatrix& phi, int grid_size, double tol) {
    const int m = phi.order();
    const int functions = m * (m + 1) / 2;
    if (grid_size < functions) throw InvalidArgument("rank grid must have at least M(M+1)/2 points");
    if (!(tol > 0.0)) throw InvalidArgument("rank tolerance must be positive");

    Eigen::MatrixXd samples(grid_size, functions);
    Eigen::MatrixXd value;
    for (int g = 0; g < grid_size; ++g) {
        phi.evaluate(static_cast<double>(g) / grid_size, value);
        int col = 0;
        for (int i = 0; i < m; ++i)
            for (int j = i; j < m; ++j) samples(g, col++) = value(i, j);
    }
    const Eigen::VectorXd sv = Eigen::BDCSVD<Eigen::MatrixXd>(samples).singularValues();
    if (sv.size() == 0 || sv[0] == 0.0) return 0;
    int rank = 0;
    for (Eigen::Index k = 0; k < sv.size(); ++k)
        if (sv[k] > tol * sv[0]) ++rank;
    return rank;
}

}  // namespace cgp
