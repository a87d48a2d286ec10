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

// Acceptance checks, one per criterion. Usage: acceptance [N ...]; with no
// arguments every criterion runs. Prints one PASS/FAIL line per criterion and
// exits non-zero if any failed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cli.hpp"
#include "compact_gp/approx.hpp"
#include "compact_gp/fit.hpp"
#include "compact_gp/gp.hpp"
#include "compact_gp/kernel_io.hpp"
#include "compact_gp/phi.hpp"
#include "oracles.hpp"

using namespace cgp;

namespace {

struct Verdict {
    bool pass = true;
    std::ostringstream detail;
    std::vector<std::string> failures;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            failures.push_back(what);
        }
    }
};

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

Eigen::MatrixXd sorted_uniform(int n, double lo, double hi, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(lo, hi);
    Eigen::MatrixXd x(n, 1);
    for (auto& v : x.reshaped()) v = unif(rng);
    std::sort(x.data(), x.data() + n);
    return x;
}

Eigen::VectorXd normals(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    Eigen::VectorXd v(n);
    for (auto& e : v) e = normal(rng);
    return v;
}

CompactKernel approximate(TargetFamily family, BasisFamily basis, int order, double cutoff,
                          ApproxResult* out = nullptr) {
    const PhiMatrix phi = compute_phi(make_basis(basis, order));
    const ApproxResult r = solve_compact_approx(make_approx_problem(phi, TargetKernel(family, 1.0, 1.0), cutoff));
    if (out) *out = r;
    return CompactKernel(phi, r.A, cutoff);
}

// ---- 1: closed-form Φ against quadrature ------------------------------------

void phi_correctness(Verdict& v) {
    double worst = 0.0;
    for (const auto& [family, max_order] : {std::pair{BasisFamily::Fourier, 8}, std::pair{BasisFamily::Polynomial, 6}}) {
        for (int m = 1; m <= max_order; ++m) {
            const PhiMatrix phi = compute_phi(make_basis(family, m));
            for (int g = 0; g <= 100; ++g) {
                const double tau = g / 100.0;
                const Eigen::MatrixXd closed = phi_eval(phi, tau);
                for (int i = 0; i < m; ++i)
                    for (int j = i; j < m; ++j)
                        worst = std::max(worst, std::abs(closed(i, j) - oracle::phi_entry(family == BasisFamily::Fourier,
                                                                                            i, j, tau)));
            }
        }
    }
    v.detail << "max abs error " << sci(worst) << " (bound 1e-8); ";
    v.require(worst <= 1e-8, "closed form deviates from quadrature");
}

// ---- 2: Gram matrices are PSD ------------------------------------------------

void gram_psd(Verdict& v) {
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> order(1, 6);
    std::uniform_real_distribution<double> cutoff(0.5, 20.0);
    double worst = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < 100; ++trial) {
        const int m = order(rng);
        const BasisFamily family = trial % 2 ? BasisFamily::Polynomial : BasisFamily::Fourier;
        const CompactKernel k(compute_phi(make_basis(family, m)), oracle::random_psd(m, rng), cutoff(rng));
        const Eigen::MatrixXd x = sorted_uniform(200, 0.0, 100.0, rng);
        const Eigen::MatrixXd K = cross_covariance(k, x, x);
        const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(K, Eigen::EigenvaluesOnly).eigenvalues()[0];
        const double scaled = min_eig / (200.0 * k(0.0));
        worst = std::min(worst, scaled);
        v.require(scaled >= -1e-8, "trial " + std::to_string(trial) + " min eigenvalue " + sci(min_eig));
    }
    v.detail << "worst min-eig/(N K(0)) " << sci(worst) << " over 100 matrices; ";
}

// ---- 3: approximation errors for the four targets -----------------------------

void approx_errors(Verdict& v) {
    struct Row {
        TargetFamily target;
        const char* name;
        double fourier_bound;
        double poly_bound;
    };
    const Row rows[] = {{TargetFamily::SE, "SE", 7.3e-5, 2.9e-3},
                        {TargetFamily::OU, "OU", 6.1e-3, 3.3e-4},
                        {TargetFamily::Matern52, "Matern", 1.1e-4, 5.1e-3},
                        {TargetFamily::Sinc, "sinc", 4.0e-2, 0.8}};
    for (const Row& r : rows) {
        ApproxResult f, p;
        approximate(r.target, BasisFamily::Fourier, 5, 5.0, &f);
        approximate(r.target, BasisFamily::Polynomial, 5, 5.0, &p);
        const double ef = f.l2_error_squared, ep = p.l2_error_squared;
        v.detail << r.name << " F " << sci(ef) << " P " << sci(ep) << "; ";
        v.require(ef <= r.fourier_bound, std::string(r.name) + " Fourier above " + sci(r.fourier_bound));
        v.require(ep <= r.poly_bound, std::string(r.name) + " polynomial above " + sci(r.poly_bound));
        if (r.target == TargetFamily::OU) v.require(ep < ef, "OU ordering");
        else v.require(ef < ep, std::string(r.name) + " ordering");
    }
}

// ---- 4: dimension of the Φ entry span -----------------------------------------

void phi_rank(Verdict& v) {
    v.detail << "Fourier ranks";
    for (int m = 1; m <= 8; ++m) {
        const int r = rank_dimension(compute_phi(make_basis(BasisFamily::Fourier, m)));
        v.detail << ' ' << r;
        v.require(r == m * (m + 1) / 2, "Fourier M=" + std::to_string(m) + " rank " + std::to_string(r) +
                                             " expected " + std::to_string(m * (m + 1) / 2));
    }
    v.detail << "; polynomial ranks";
    for (int m = 1; m <= 8; ++m) {
        const int r = rank_dimension(compute_phi(make_basis(BasisFamily::Polynomial, m)));
        v.detail << ' ' << r;
        v.require(r <= 2 * m - 1, "polynomial M=" + std::to_string(m) + " rank above 2M-1");
        if (m == 2) v.require(r == 2, "polynomial M=2 rank " + std::to_string(r));
    }
    v.detail << "; ";
}

// ---- 5: sparse and dense posteriors agree -------------------------------------

void inference_equivalence(Verdict& v) {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> order(1, 6);
    std::uniform_real_distribution<double> cutoff(1.0, 8.0);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const int m = order(rng);
        const double c = cutoff(rng);
        const BasisFamily family = trial % 2 ? BasisFamily::Polynomial : BasisFamily::Fourier;
        const CompactKernel k(compute_phi(make_basis(family, m)), oracle::random_psd(m, rng), c);
        const Eigen::MatrixXd x = sorted_uniform(512, 0.0, 512.0 * c / 8.0, rng);
        const GPDataset data(x, normals(512, rng));
        const Eigen::MatrixXd q = sorted_uniform(64, -c, 512.0 * c / 8.0 + c, rng);
        const double noise = 0.01 * k(0.0);
        PosteriorOptions dense, sparse;
        sparse.mode = InferenceMode::Sparse;
        const PosteriorResult d = posterior(k, data, q, noise, dense);
        const PosteriorResult s = posterior(k, data, q, noise, sparse);
        const double em = (d.mean - s.mean).norm() / d.mean.norm();
        const double ev = (d.variance - s.variance).norm() / d.variance.norm();
        worst = std::max({worst, em, ev});
        v.require(em <= 1e-6 && ev <= 1e-6, "problem " + std::to_string(trial) + " mean " + sci(em) + " var " + sci(ev));
    }
    v.detail << "worst relative difference " << sci(worst) << " over 20 problems; ";
}

// ---- 6: gradients --------------------------------------------------------------

void gradient_suite(Verdict& v) {
    const PhiMatrix phi = compute_phi(make_basis(BasisFamily::Fourier, 3));
    double worst_fd = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        std::mt19937_64 rng(600 + seed);
        std::normal_distribution<double> normal;
        Eigen::MatrixXd L = Eigen::MatrixXd::Zero(3, 3);
        for (int j = 0; j < 3; ++j)
            for (int i = j; i < 3; ++i) L(i, j) = 0.5 * normal(rng) + (i == j ? 1.0 : 0.0);
        const GPDataset data(sorted_uniform(64, 0.0, 12.0, rng), normals(64, rng));
        const double cutoff = 2.5;
        const double log_noise = std::log(0.05);
        auto nll_at = [&](const Eigen::MatrixXd& Lx, double ln) {
            return nll_dense(CompactKernel(phi, Lx * Lx.transpose(), cutoff), data, std::exp(ln));
        };
        const NllGradient g = nll_grad_A(CompactKernel(phi, L * L.transpose(), cutoff), data, std::exp(log_noise));
        const Eigen::MatrixXd dL = (g.dA + g.dA.transpose()) * L;
        const double h = 1e-5;
        auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j <= i; ++j) {
                Eigen::MatrixXd Lp = L, Lm = L;
                Lp(i, j) += h;
                Lm(i, j) -= h;
                worst_fd = std::max(worst_fd, rel(dL(i, j), (nll_at(Lp, log_noise) - nll_at(Lm, log_noise)) / (2 * h)));
            }
        const double fd = (nll_at(L, log_noise + h) - nll_at(L, log_noise - h)) / (2 * h);
        worst_fd = std::max(worst_fd, rel(g.dnoise * std::exp(log_noise), fd));
    }
    v.detail << "worst finite-difference error " << sci(worst_fd) << "; ";
    v.require(worst_fd <= 1e-4, "dense gradient disagrees with finite differences");

    std::mt19937_64 rng(66);
    Eigen::MatrixXd L(3, 3);
    L << 1.0, 0.0, 0.0, 0.3, 0.8, 0.0, -0.2, 0.1, 0.6;
    const CompactKernel k(phi, L * L.transpose(), 2.5);
    const GPDataset data(sorted_uniform(256, 0.0, 50.0, rng), normals(256, rng));
    const NllGradient exact = nll_grad_A(k, data, 0.05);
    GradientOptions opts;
    opts.mode = InferenceMode::Sparse;
    opts.probes = 16;
    const int seeds = 50;
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(3, 3), var = Eigen::MatrixXd::Zero(3, 3);
    double mean_noise = 0.0, var_noise = 0.0;
    for (int s = 0; s < seeds; ++s) {
        opts.seed = 7000 + s;
        const NllGradient g = nll_grad_A(k, data, 0.05, opts);
        mean += g.dA / seeds;
        var += g.dA_stderr.cwiseAbs2();
        mean_noise += g.dnoise / seeds;
        var_noise += g.dnoise_stderr * g.dnoise_stderr;
    }
    const Eigen::MatrixXd pooled = var.cwiseSqrt() / seeds;
    double worst_z = std::abs(mean_noise - exact.dnoise) / (std::sqrt(var_noise) / seeds);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) worst_z = std::max(worst_z, std::abs(mean(i, j) - exact.dA(i, j)) / pooled(i, j));
    v.detail << "stochastic gradient worst deviation " << sci(worst_z) << " pooled SE; ";
    v.require(worst_z <= 4.0, "stochastic gradient mean outside 4 pooled standard errors");
}

// ---- 7: model mismatch ------------------------------------------------------------

void model_mismatch(Verdict& v) {
    const std::pair<TargetFamily, const char*> targets[] = {
        {TargetFamily::SE, "SE"}, {TargetFamily::OU, "OU"}, {TargetFamily::Matern52, "Matern"}, {TargetFamily::Sinc, "sinc"}};
    const double noise = 0.01;
    const int seeds = 3;
    std::map<std::string, double> ratio;
    for (const auto& [family, name] : targets) {
        const TargetKernel exact(family, 1.0, 1.0);
        const CompactKernel compact = approximate(family, BasisFamily::Fourier, 5, 5.0);
        double sum = 0.0;
        for (int seed = 0; seed < seeds; ++seed) {
            std::mt19937_64 rng(700 + seed);
            const Eigen::MatrixXd x = sorted_uniform(2048, 0.0, 512.0, rng);
            const Eigen::VectorXd y = sample_gp(exact, x, noise, 70 + seed);
            Eigen::MatrixXd xtr(1024, 1), xte(1024, 1);
            Eigen::VectorXd ytr(1024), yte(1024);
            for (int i = 0; i < 1024; ++i) {
                xtr(i, 0) = x(2 * i, 0);
                ytr[i] = y[2 * i];
                xte(i, 0) = x(2 * i + 1, 0);
                yte[i] = y[2 * i + 1];
            }
            const GPDataset train(xtr, ytr);
            PosteriorOptions opts;
            opts.mean_only = true;
            const double r_exact = metrics(posterior(exact, train, xte, noise, opts).mean, yte,
                                           Eigen::VectorXd::Ones(1024)).rmse;
            const double r_compact = metrics(posterior(compact, train, xte, noise, opts).mean, yte,
                                             Eigen::VectorXd::Ones(1024)).rmse;
            sum += r_compact / r_exact;
        }
        ratio[name] = sum / seeds;
        v.detail << name << " " << sci(ratio[name]) << "; ";
    }
    for (const char* name : {"SE", "OU", "Matern"}) {
        v.require(ratio[name] >= 0.9 && ratio[name] <= 1.3, std::string(name) + " ratio outside [0.9, 1.3]");
        v.require(ratio["sinc"] > ratio[name], std::string("sinc ratio not above ") + name);
    }
}

// ---- 8: scaling ----------------------------------------------------------------------

double slope(const std::vector<double>& x, const std::vector<double>& y, double* r2 = nullptr) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
        syy += y[i] * y[i];
    }
    const double cov = sxy - sx * sy / n, vx = sxx - sx * sx / n, vy = syy - sy * sy / n;
    if (r2) *r2 = cov * cov / (vx * vy);
    return cov / vx;
}

void scaling(Verdict& v) {
    const auto dir = std::filesystem::temp_directory_path() / ("cgp_accept_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(dir);
    const CompactKernel kernel = approximate(TargetFamily::SE, BasisFamily::Fourier, 5, 5.0);
    write_json_file(dir / "k.json", kernel_to_json(kernel, 1e-6));
    std::ostringstream out, err;
    std::vector<std::string> args{"bench", "--kernel", (dir / "k.json").string(), "--n"};
    for (int n = 1024; n <= 32768; n *= 2) args.push_back(std::to_string(n));
    args.insert(args.end(), {"--repetitions", "2", "--dense-limit", "8192", "--out", (dir / "bench.csv").string()});
    const int code = cli::run(args, out, err);
    std::filesystem::remove_all(dir);
    if (code != 0) {
        v.require(false, "bench exited with " + std::to_string(code) + ": " + err.str());
        return;
    }
    std::vector<double> n_all, nnz, log_n, log_sparse, dense_ratio;
    std::map<long, double> sparse_time;
    std::istringstream csv(out.str());
    std::string line;
    std::getline(csv, line);
    while (std::getline(csv, line)) {
        std::vector<std::string> f;
        std::stringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
        if (f.size() != 6) continue;
        const long n = std::stol(f[0]);
        const double seconds = std::stod(f[2]);
        if (f[1] == "sparse") {
            n_all.push_back(static_cast<double>(n));
            nnz.push_back(std::stod(f[3]));
            log_n.push_back(std::log(static_cast<double>(n)));
            log_sparse.push_back(std::log(seconds));
            sparse_time[n] = seconds;
        } else {
            dense_ratio.push_back(seconds / sparse_time.at(n));
        }
    }
    double r2 = 0.0;
    slope(n_all, nnz, &r2);
    const double s = slope(log_n, log_sparse);
    v.detail << "nnz R^2 " << r2 << ", sparse log-log slope " << s << ", dense/sparse ratios";
    for (double r : dense_ratio) v.detail << ' ' << sci(r);
    v.detail << "; ";
    v.require(n_all.size() == 6, "missing sparse rows");
    v.require(dense_ratio.size() == 4, "missing dense rows");
    v.require(r2 >= 0.99, "nnz not linear in N");
    v.require(s <= 1.5, "sparse time grows faster than N^1.5");
    v.require(std::is_sorted(dense_ratio.begin(), dense_ratio.end()), "dense/sparse ratio not increasing");
}

// ---- 9: maximum likelihood on well-specified data ----------------------------------

void mle_sanity(Verdict& v) {
    const PhiMatrix phi = compute_phi(make_basis(BasisFamily::Fourier, 3));
    Eigen::Matrix3d A;
    A << 1.0, 0.2, -0.1, 0.2, 0.6, 0.1, -0.1, 0.1, 0.3;
    const double cutoff = 4.0, noise = 0.05;
    const CompactKernel truth(phi, A, cutoff);
    double worst = -1e300;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        std::mt19937_64 rng(900 + seed);
        const Eigen::MatrixXd x = sorted_uniform(1024, 0.0, 512.0, rng);
        const GPDataset data(x, sample_gp(truth, x, noise, 90 + seed));
        const double reference = nll_dense(truth, data, noise) / 1024.0;
        FitConfig cfg;
        cfg.cutoffs = {cutoff};
        cfg.mode = InferenceMode::Sparse;
        cfg.seed = seed;
        const FitReport fit = fit_mle(data, make_basis(BasisFamily::Fourier, 3), cfg);
        const double gap = fit.nll - reference;
        worst = std::max(worst, gap);
        v.detail << "seed " << seed << " gap " << sci(gap) << "; ";
        v.require(gap <= 0.05, "seed " + std::to_string(seed) + " per-point NLL gap above 0.05");
    }
    v.detail << "worst " << sci(worst) << "; ";
}

}  // namespace

int main(int argc, char** argv) {
    const std::map<int, std::pair<const char*, std::function<void(Verdict&)>>> criteria{
        {1, {"closed-form correlation matrices", phi_correctness}},
        {2, {"positive semidefinite Gram matrices", gram_psd}},
        {3, {"approximation errors at order 5, cutoff 5", approx_errors}},
        {4, {"rank of the correlation entries", phi_rank}},
        {5, {"sparse vs dense inference", inference_equivalence}},
        {6, {"likelihood gradients", gradient_suite}},
        {7, {"model mismatch", model_mismatch}},
        {8, {"scaling", scaling}},
        {9, {"maximum likelihood sanity", mle_sanity}},
    };
    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) selected.push_back(std::stoi(argv[i]));
    if (selected.empty())
        for (const auto& [id, _] : criteria) selected.push_back(id);

    bool all = true;
    for (int id : selected) {
        const auto it = criteria.find(id);
        if (it == criteria.end()) {
            std::cerr << "unknown criterion " << id << '\n';
            return 2;
        }
        Verdict v;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            it->second.second(v);
        } catch (const std::exception& e) {
            v.require(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << it->second.first << "): "
                  << v.detail.str() << "time " << sci(secs) << " s";
        for (const auto& f : v.failures) std::cout << "\n    failed: " << f;
        std::cout << std::endl;
        all = all && v.pass;
    }
    return all ? 0 : 1;
}
