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

#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>

#include <CLI11.hpp>
#include <Eigen/Cholesky>
#include <json.hpp>

#include "compact_gp/approx.hpp"
#include "compact_gp/fit.hpp"
#include "compact_gp/gp.hpp"
#include "compact_gp/kernel_io.hpp"
#include "compact_gp/phi.hpp"
#include "csv_io.hpp"

namespace cgp::cli {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

/// Run record written next to the main output as <out>.manifest.json.
class Manifest {
public:
    Manifest(std::string command, const CLI::App& sub, std::uint64_t seed) {
        doc_["command"] = std::move(command);
        doc_["version"] = COMPACT_GP_VERSION;
        doc_["seed"] = seed;
        json config = json::object();
        for (const CLI::Option* opt : sub.get_options()) {
            if (opt->get_name() == "--help" || opt->get_name() == "-h") continue;
            const std::string key = opt->get_lnames().empty() ? opt->get_name() : opt->get_lnames().front();
            if (opt->get_expected_max() == 0) {
                config[key] = opt->count() > 0;
            } else if (opt->count() > 0) {
                const auto& r = opt->results();
                config[key] = r.size() == 1 ? json(r.front()) : json(r);
            } else if (!opt->get_default_str().empty()) {
                config[key] = opt->get_default_str();
            } else {
                config[key] = nullptr;
            }
        }
        doc_["config"] = config;
        doc_["timings"] = json::object();
        doc_["outputs"] = json::array();
    }

    template <typename F>
    auto timed(const std::string& phase, F&& f) {
        const auto t0 = Clock::now();
        if constexpr (std::is_void_v<decltype(f())>) {
            f();
            doc_["timings"][phase] = seconds_since(t0);
        } else {
            auto r = f();
            doc_["timings"][phase] = seconds_since(t0);
            return r;
        }
    }

    json& operator[](const std::string& key) { return doc_[key]; }
    void output(const fs::path& p) { doc_["outputs"].push_back(p.string()); }
    void write(const fs::path& path) const { write_json_file(path, doc_); }

private:
    json doc_;
};

fs::path with_suffix(const fs::path& out, const std::string& suffix) {
    fs::path p = out;
    p.replace_extension();
    p += suffix;
    return p;
}

fs::path manifest_path(const fs::path& out) { return with_suffix(out, ".manifest.json"); }

struct Data {
    Eigen::VectorXd x;
    Eigen::VectorXd y;
};

Data read_xy(const fs::path& path) {
    const Table t = read_csv(path, {"x", "y"});
    Data d;
    d.x = Eigen::Map<const Eigen::VectorXd>(t.columns[0].data(), static_cast<Eigen::Index>(t.rows()));
    d.y = Eigen::Map<const Eigen::VectorXd>(t.columns[1].data(), static_cast<Eigen::Index>(t.rows()));
    return d;
}

Eigen::VectorXd read_x(const fs::path& path) {
    const Table t = read_csv(path, {"x"});
    return Eigen::Map<const Eigen::VectorXd>(t.columns[0].data(), static_cast<Eigen::Index>(t.rows()));
}

void require_sorted(const Eigen::VectorXd& x, const std::string& what) {
    for (Eigen::Index i = 1; i < x.size(); ++i) {
        if (x[i] == x[i - 1]) throw DuplicatePoints(what + ": duplicate x at row " + std::to_string(i + 1));
        if (x[i] < x[i - 1])
            throw UnsortedInput(what + ": x not sorted ascending at row " + std::to_string(i + 1) +
                                " (sparse mode needs sorted inputs)");
    }
}

std::pair<Data, Data> interleave(const Data& d) {
    Data train, test;
    const Eigen::Index n = d.x.size();
    train.x.resize((n + 1) / 2);
    train.y.resize((n + 1) / 2);
    test.x.resize(n / 2);
    test.y.resize(n / 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        Data& dst = i % 2 == 0 ? train : test;
        dst.x[i / 2] = d.x[i];
        dst.y[i / 2] = d.y[i];
    }
    return {train, test};
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const MaxIterationsExceeded*>(&e) || dynamic_cast<const InfeasibleConstraint*>(&e) ||
        dynamic_cast<const EigenFailure*>(&e) || dynamic_cast<const CgNotConverged*>(&e) ||
        dynamic_cast<const BreakdownDetected*>(&e) || dynamic_cast<const NotPositiveDefinite*>(&e) ||
        dynamic_cast<const AllCutoffsFailed*>(&e) || dynamic_cast<const QuadratureNonConvergence*>(&e)) {
        return kExitSolver;
    }
    return kExitUsage;
}

// ---- approx ---------------------------------------------------------------

struct ApproxArgs {
    std::string target;
    double amplitude = 1.0;
    double lengthscale = 1.0;
    std::string basis = "fourier";
    int order = 5;
    double cutoff = 5.0;
    std::optional<double> noise;
    bool no_peak_matching = false;
    int panels = 64;
    int nodes = 32;
    int max_iterations = 100000;
    double tolerance = 1e-8;
    std::string out = "kernel.json";
};

void add_approx(CLI::App& app, ApproxArgs& a, std::function<int()>& action, std::ostream& out) {
    auto* sub = app.add_subcommand("approx", "Fit a compact kernel to a classical kernel");
    sub->add_option("--target", a.target, "se | ou | matern52 | sinc | wendland1..4")->required();
    sub->add_option("--amplitude", a.amplitude, "target variance")->capture_default_str();
    sub->add_option("--lengthscale", a.lengthscale, "target lengthscale")->capture_default_str();
    sub->add_option("--basis", a.basis, "fourier | polynomial")->capture_default_str();
    sub->add_option("--order", a.order, "number of basis functions")->capture_default_str();
    sub->add_option("--cutoff", a.cutoff, "support radius c")->capture_default_str();
    sub->add_option("--noise", a.noise, "noise variance stored with the kernel (default 1e-6*K(0))");
    sub->add_flag("--no-peak-matching", a.no_peak_matching, "drop the constraint K_A(0) = K(0)");
    sub->add_option("--panels", a.panels, "quadrature panels on [0, c]")->capture_default_str();
    sub->add_option("--nodes", a.nodes, "Gauss-Legendre nodes per panel")->capture_default_str();
    sub->add_option("--max-iter", a.max_iterations, "ADMM iteration cap")->capture_default_str();
    sub->add_option("--tol", a.tolerance, "relative residual tolerance")->capture_default_str();
    sub->add_option("--out", a.out, "kernel JSON path")->capture_default_str();
    sub->callback([&a, &action, &out, sub] {
        action = [&a, &out, sub] {
            Manifest manifest("approx", *sub, 0);
            const TargetKernel target(parse_target_family(a.target), a.amplitude, a.lengthscale);
            const PhiMatrix phi = compute_phi(make_basis(parse_basis_family(a.basis), a.order));
            QuadratureSpec q;
            q.panels = a.panels;
            q.nodes_per_panel = a.nodes;
            q.validate();
            const ApproxProblem problem =
                manifest.timed("quadrature", [&] { return make_approx_problem(phi, target, a.cutoff, q); });
            ApproxOptions opts;
            opts.peak_matching = !a.no_peak_matching;
            opts.max_iterations = a.max_iterations;
            opts.tolerance = a.tolerance;
            const ApproxResult result = manifest.timed("solve", [&] { return solve_compact_approx(problem, opts); });

            const CompactKernel kernel(phi, result.A, a.cutoff);
            const double noise = a.noise.value_or(1e-6 * target(0.0));
            const fs::path out_path = a.out;
            const fs::path sidecar = with_suffix(out_path, ".error.json");
            const fs::path curve = with_suffix(out_path, ".curve.csv");
            const fs::path mpath = manifest_path(out_path);

            json kdoc = kernel_to_json(kernel, noise);
            write_json_file(out_path, kdoc);
            json side{{"l2_error", result.l2_error},
                      {"l2_error_squared", result.l2_error_squared},
                      {"iterations", result.iterations},
                      {"residuals", {result.primal_residual, result.dual_residual}},
                      {"objective", result.objective},
                      {"target", a.target},
                      {"peak_matching", opts.peak_matching},
                      {"manifest", mpath.string()}};
            write_json_file(sidecar, side);

            const int points = 1001;
            Eigen::VectorXd t(points), kt(points), ka(points);
            for (int k = 0; k < points; ++k) {
                t[k] = -1.2 * a.cutoff + 2.4 * a.cutoff * k / (points - 1);
                kt[k] = target(t[k]);
                ka[k] = kernel(t[k]);
            }
            write_text_atomic(curve, to_csv({"t", "target", "compact"}, {&t, &kt, &ka}));

            for (const auto& p : {out_path, sidecar, curve}) manifest.output(p);
            manifest["result"] = side;
            manifest.write(mpath);
            out << "l2_error " << format_double(result.l2_error) << "\nl2_error_squared "
                << format_double(result.l2_error_squared) << "\niterations " << result.iterations << '\n';
            return kExitOk;
        };
    });
}

// ---- sample ---------------------------------------------------------------

struct KernelSource {
    std::string kernel_path;
    std::string target;
    double amplitude = 1.0;
    double lengthscale = 1.0;
    std::optional<double> noise;
};

void add_kernel_source(CLI::App* sub, KernelSource& k) {
    auto* kopt = sub->add_option("--kernel", k.kernel_path, "compact kernel JSON");
    auto* topt = sub->add_option("--target", k.target, "classical kernel instead of --kernel");
    kopt->excludes(topt);
    sub->add_option("--amplitude", k.amplitude, "target variance")->capture_default_str();
    sub->add_option("--lengthscale", k.lengthscale, "target lengthscale")->capture_default_str();
    sub->add_option("--noise", k.noise, "noise variance (default: from the kernel file, else 1e-6*K(0))");
}

std::pair<Kernel, double> load_kernel(const KernelSource& k) {
    if (!k.kernel_path.empty()) {
        KernelModel m = read_kernel_file(k.kernel_path);
        return {Kernel(m.kernel), k.noise.value_or(m.noise)};
    }
    if (k.target.empty()) throw InvalidArgument("one of --kernel or --target is required");
    const TargetKernel t(parse_target_family(k.target), k.amplitude, k.lengthscale);
    return {Kernel(t), k.noise.value_or(1e-6 * t(0.0))};
}

struct SampleArgs {
    KernelSource kernel;
    Index n = 0;
    std::string spacing = "even";
    double x_min = 0.0;
    std::optional<double> x_max;
    std::uint64_t seed = 0;
    std::string out = "data.csv";
};

void add_sample(CLI::App& app, SampleArgs& a, std::function<int()>& action, std::ostream& out) {
    auto* sub = app.add_subcommand("sample", "Draw a GP sample at generated inputs");
    add_kernel_source(sub, a.kernel);
    sub->add_option("--n", a.n, "number of points")->required()->check(CLI::PositiveNumber);
    sub->add_option("--spacing", a.spacing, "even | uniform")
        ->capture_default_str()
        ->check(CLI::IsMember({"even", "uniform"}));
    sub->add_option("--x-min", a.x_min, "left end of the input range")->capture_default_str();
    sub->add_option("--x-max", a.x_max, "right end of the input range (default x-min + n - 1)");
    sub->add_option("--seed", a.seed, "random seed")->capture_default_str();
    sub->add_option("--out", a.out, "output CSV")->capture_default_str();
    sub->callback([&a, &action, &out, sub] {
        action = [&a, &out, sub] {
            Manifest manifest("sample", *sub, a.seed);
            const auto [kernel, noise] = load_kernel(a.kernel);
            if (a.n > kDefaultDenseLimit)
                throw InvalidArgument("--n exceeds the dense limit " + std::to_string(kDefaultDenseLimit));
            const double hi = a.x_max.value_or(a.x_min + static_cast<double>(a.n - 1));
            if (!(hi >= a.x_min) || (a.n > 1 && !(hi > a.x_min))) throw InvalidArgument("--x-max must exceed --x-min");
            Eigen::VectorXd x(a.n);
            if (a.spacing == "even") {
                for (Index i = 0; i < a.n; ++i) x[i] = a.n == 1 ? a.x_min : a.x_min + (hi - a.x_min) * i / (a.n - 1.0);
            } else {
                std::mt19937_64 rng(a.seed ^ 0x9e3779b97f4a7c15ULL);
                std::uniform_real_distribution<double> unif(a.x_min, hi);
                for (Index i = 0; i < a.n; ++i) x[i] = unif(rng);
                std::sort(x.data(), x.data() + x.size());
            }
            const Eigen::VectorXd y =
                manifest.timed("sample", [&] { return sample_gp(kernel, as_points(x), noise, a.seed); });
            const fs::path out_path = a.out;
            write_text_atomic(out_path, to_csv({"x", "y"}, {&x, &y}));
            manifest.output(out_path);
            manifest["noise"] = noise;
            manifest.write(manifest_path(out_path));
            out << "wrote " << a.n << " rows to " << out_path.string() << '\n';
            return kExitOk;
        };
    });
}

// ---- fit ------------------------------------------------------------------

struct FitArgs {
    std::string data;
    std::string basis = "fourier";
    int order = 3;
    std::vector<double> cutoffs;
    std::string out = "fit.json";
    std::string kernel_out;
    bool sparse = false;
    std::string split = "none";
    double learning_rate = 0.05;
    int epochs = 300;
    double tolerance = 1e-6;
    int probes = 16;
    std::optional<double> noise;
    bool fixed_noise = false;
    std::uint64_t seed = 0;
};

void add_fit(CLI::App& app, FitArgs& a, std::function<int()>& action, std::ostream& out) {
    auto* sub = app.add_subcommand("fit", "Maximum-likelihood fit of a compact kernel to x,y data");
    sub->add_option("--data", a.data, "CSV with header x,y")->required();
    sub->add_option("--basis", a.basis, "fourier | polynomial")->capture_default_str();
    sub->add_option("--order", a.order, "number of basis functions")->capture_default_str();
    sub->add_option("--cutoffs", a.cutoffs, "candidate cutoffs")->required()->expected(1, -1);
    sub->add_option("--out", a.out, "report JSON")->capture_default_str();
    sub->add_option("--kernel-out", a.kernel_out, "fitted kernel JSON (default <out>.kernel.json)");
    sub->add_flag("--sparse", a.sparse, "sparse CG / Hutchinson gradients");
    sub->add_option("--split", a.split, "none | interleave (even rows train, odd rows test)")
        ->capture_default_str()
        ->check(CLI::IsMember({"none", "interleave"}));
    sub->add_option("--lr", a.learning_rate, "Adam step size")->capture_default_str();
    sub->add_option("--epochs", a.epochs, "maximum epochs")->capture_default_str();
    sub->add_option("--tol", a.tolerance, "stop when per-point NLL changes less than this")->capture_default_str();
    sub->add_option("--probes", a.probes, "Hutchinson probes (sparse)")->capture_default_str();
    sub->add_option("--noise", a.noise, "initial noise variance (default 0.01*var(y))");
    sub->add_flag("--fixed-noise", a.fixed_noise, "keep the noise variance fixed");
    sub->add_option("--seed", a.seed, "random seed")->capture_default_str();
    sub->callback([&a, &action, &out, sub] {
        action = [&a, &out, sub] {
            Manifest manifest("fit", *sub, a.seed);
            const Data all = manifest.timed("read", [&] { return read_xy(a.data); });
            Data train = all, test;
            if (a.split == "interleave") std::tie(train, test) = interleave(all);
            if (a.sparse) require_sorted(train.x, a.data);

            FitConfig cfg;
            cfg.learning_rate = a.learning_rate;
            cfg.max_epochs = a.epochs;
            cfg.tolerance = a.tolerance;
            cfg.probes = a.probes;
            cfg.cutoffs = a.cutoffs;
            cfg.noise = a.noise;
            cfg.learn_noise = !a.fixed_noise;
            cfg.seed = a.seed;
            cfg.mode = a.sparse ? InferenceMode::Sparse : InferenceMode::Dense;
            cfg.validate();

            const GPDataset data(as_points(train.x), train.y);
            const BasisSpec basis = make_basis(parse_basis_family(a.basis), a.order);
            const FitReport report = manifest.timed("fit", [&] { return fit_mle(data, basis, cfg); });

            const fs::path out_path = a.out;
            const fs::path kpath = a.kernel_out.empty() ? with_suffix(out_path, ".kernel.json") : fs::path(a.kernel_out);
            const fs::path mpath = manifest_path(out_path);
            json doc = fit_report_to_json(report);
            doc["train_points"] = train.x.size();
            if (test.x.size() > 0) {
                PosteriorOptions popts;
                popts.mode = cfg.mode;
                const PosteriorResult post = manifest.timed(
                    "predict", [&] { return posterior(*report.kernel, data, as_points(test.x), report.noise, popts); });
                const Metrics m = metrics(post.mean, test.y, post.variance, report.noise);
                doc["test"] = {{"points", test.x.size()}, {"rmse", m.rmse}, {"mean_nll", m.mean_test_nll}};
            }
            doc["manifest"] = mpath.string();
            write_json_file(out_path, doc);
            write_json_file(kpath, kernel_to_json(*report.kernel, report.noise));
            manifest.output(out_path);
            manifest.output(kpath);
            manifest["cg_iterations"] = report.cg_iterations;
            manifest.write(mpath);
            out << "cutoff " << format_double(report.cutoff) << "\nnll_per_point " << format_double(report.nll)
                << "\nnoise " << format_double(report.noise) << '\n';
            if (doc.contains("test")) out << "test_rmse " << format_double(doc["test"]["rmse"].get<double>()) << '\n';
            return kExitOk;
        };
    });
}

// ---- predict --------------------------------------------------------------

struct PredictArgs {
    std::string kernel;
    std::string train;
    std::string query;
    std::string mode = "dense";
    bool mean_only = false;
    std::optional<double> noise;
    std::string out = "predictions.csv";
};

void add_predict(CLI::App& app, PredictArgs& a, std::function<int()>& action, std::ostream& out) {
    auto* sub = app.add_subcommand("predict", "GP posterior mean and variance at query points");
    sub->add_option("--kernel", a.kernel, "compact kernel JSON")->required();
    sub->add_option("--train", a.train, "training CSV x,y")->required();
    sub->add_option("--query", a.query, "query CSV with an x column")->required();
    sub->add_option("--mode", a.mode, "dense | sparse")->capture_default_str()->check(CLI::IsMember({"dense", "sparse"}));
    sub->add_flag("--mean-only", a.mean_only, "skip variances");
    sub->add_option("--noise", a.noise, "override the kernel file noise");
    sub->add_option("--out", a.out, "output CSV x,mean,variance")->capture_default_str();
    sub->callback([&a, &action, &out, sub] {
        action = [&a, &out, sub] {
            Manifest manifest("predict", *sub, 0);
            const KernelModel model = read_kernel_file(a.kernel);
            const double noise = a.noise.value_or(model.noise);
            const Data train = read_xy(a.train);
            const Eigen::VectorXd q = read_x(a.query);
            PosteriorOptions opts;
            opts.mode = a.mode == "sparse" ? InferenceMode::Sparse : InferenceMode::Dense;
            opts.mean_only = a.mean_only;
            if (opts.mode == InferenceMode::Sparse) require_sorted(train.x, a.train);
            const GPDataset data(as_points(train.x), train.y);
            const PosteriorResult post =
                manifest.timed("posterior", [&] { return posterior(model.kernel, data, as_points(q), noise, opts); });
            // predictive variance of a new observation
            const Eigen::VectorXd variance = (post.variance.array() + noise).matrix();
            const fs::path out_path = a.out;
            write_text_atomic(out_path, to_csv({"x", "mean", "variance"}, {&q, &post.mean, &variance}));
            manifest.output(out_path);
            manifest["noise"] = noise;
            if (opts.mode == InferenceMode::Sparse) {
                manifest["cg"] = {{"mean_iterations", post.mean_solve.iterations},
                                  {"mean_residual", post.mean_solve.final_residual_norm},
                                  {"variance_iterations", post.variance_cg_iterations},
                                  {"nnz", post.nnz}};
            }
            manifest.write(manifest_path(out_path));
            out << "wrote " << q.size() << " predictions to " << out_path.string() << '\n';
            return kExitOk;
        };
    });
}

// ---- bench ----------------------------------------------------------------

struct BenchArgs {
    std::string kernel;
    std::vector<Index> sizes;
    int repetitions = 3;
    std::optional<double> spacing;
    Index dense_limit = kDefaultDenseLimit;
    bool strict = false;
    std::uint64_t seed = 0;
    std::string out = "bench.csv";
};

template <typename F>
std::vector<double> time_runs(int repetitions, F&& f) {
    f();  // warm-up, discarded
    std::vector<double> t;
    for (int r = 0; r < repetitions; ++r) {
        const auto t0 = Clock::now();
        f();
        t.push_back(seconds_since(t0));
    }
    return t;
}

void add_bench(CLI::App& app, BenchArgs& a, std::function<int()>& action, std::ostream& out) {
    auto* sub = app.add_subcommand("bench", "Dense vs sparse posterior-mean timing");
    sub->add_option("--kernel", a.kernel, "compact kernel JSON")->required();
    sub->add_option("--n", a.sizes, "problem sizes, ascending")->required()->expected(1, -1);
    sub->add_option("--repetitions", a.repetitions, "timed runs per cell (minimum reported)")->capture_default_str();
    sub->add_option("--spacing", a.spacing, "distance between inputs (default cutoff/5)");
    sub->add_option("--dense-limit", a.dense_limit, "largest N run densely")->capture_default_str();
    sub->add_flag("--strict", a.strict, "exit 1 when dense rows had to be omitted");
    sub->add_option("--seed", a.seed, "seed for the synthetic outputs")->capture_default_str();
    sub->add_option("--out", a.out, "timing CSV")->capture_default_str();
    sub->callback([&a, &action, &out, sub] {
        action = [&a, &out, sub] {
            if (a.repetitions < 1) throw InvalidArgument("--repetitions must be at least 1");
            for (std::size_t k = 0; k < a.sizes.size(); ++k) {
                if (a.sizes[k] < 1) throw InvalidArgument("--n values must be positive");
                if (k > 0 && a.sizes[k] <= a.sizes[k - 1]) throw InvalidArgument("--n values must be ascending");
            }
            Manifest manifest("bench", *sub, a.seed);
            const KernelModel model = read_kernel_file(a.kernel);
            const Kernel kernel(model.kernel);
            const double noise = model.noise > 0.0 ? model.noise : 1e-6 * model.kernel.value_at_zero();
            const double h = a.spacing.value_or(model.kernel.cutoff() / 5.0);
            if (!(h > 0.0)) throw InvalidArgument("--spacing must be positive");

            std::vector<std::string> lines{"N,mode,seconds,nnz,cg_iters,predicted_cost"};
            json raw = json::array();
            json omitted = json::array();
            for (const Index n : a.sizes) {
                Eigen::VectorXd x(n);
                for (Index i = 0; i < n; ++i) x[i] = h * static_cast<double>(i);
                std::mt19937_64 rng(a.seed + static_cast<std::uint64_t>(n));
                std::normal_distribution<double> normal;
                Eigen::VectorXd y(n);
                for (Index i = 0; i < n; ++i) y[i] = normal(rng);

                // pattern construction and kernel formation are not timed
                auto pattern = std::make_shared<const SparsityPattern>(pattern_for(as_points(x), model.kernel.cutoff()));
                const SparseKernelMatrix<double> K = assemble(kernel, as_points(x), pattern, noise);
                Index iters = 0;
                Eigen::VectorXd mean(n);
                const auto sparse_times = time_runs(a.repetitions, [&] {
                    const auto res = conjugate_gradient(K, y);
                    if (!res.stats.converged) throw CgNotConverged("bench CG did not converge", res.stats.iterations,
                                                                   res.stats.final_residual_norm);
                    iters = res.stats.iterations;
                    spmv<double>(K, std::span<const double>(res.x.data(), n), std::span<double>(mean.data(), n));
                });
                const double sparse_best = *std::min_element(sparse_times.begin(), sparse_times.end());
                const double nnz = static_cast<double>(K.nnz());
                lines.push_back(std::to_string(n) + ",sparse," + format_double(sparse_best) + "," +
                                std::to_string(K.nnz()) + "," + std::to_string(iters) + "," +
                                format_double(nnz * static_cast<double>(iters) / static_cast<double>(n)));
                raw.push_back({{"N", n}, {"mode", "sparse"}, {"seconds", sparse_times}});

                if (n > a.dense_limit) {
                    omitted.push_back(n);
                    continue;
                }
                const Eigen::MatrixXd Kd = K.to_dense();
                const auto dense_times = time_runs(a.repetitions, [&] {
                    const Eigen::LLT<Eigen::MatrixXd> llt(Kd);
                    if (llt.info() != Eigen::Success) throw NotPositiveDefinite("bench dense Cholesky failed", -1);
                    mean.noalias() = Kd * llt.solve(y);
                });
                const double dense_best = *std::min_element(dense_times.begin(), dense_times.end());
                lines.push_back(std::to_string(n) + ",dense," + format_double(dense_best) + "," +
                                std::to_string(n * n) + ",0," + format_double(static_cast<double>(n) * n));
                raw.push_back({{"N", n}, {"mode", "dense"}, {"seconds", dense_times}});
            }

            std::string csv;
            for (const auto& l : lines) csv += l + '\n';
            const fs::path out_path = a.out;
            write_text_atomic(out_path, csv);
            manifest.output(out_path);
            manifest["raw_seconds"] = raw;
            manifest["spacing"] = h;
            manifest["noise"] = noise;
            manifest["timed_work"] = "posterior mean at the training inputs: solve K a = y, then K a";
            manifest["predicted_cost"] = "sparse: nnz*cg_iters/N; dense: N^2";
            manifest["dense_omitted"] = omitted;
            manifest.write(manifest_path(out_path));
            out << csv;
            if (!omitted.empty()) {
                out << "dense rows omitted for N > " << a.dense_limit << '\n';
                if (a.strict) return kExitUsage;
            }
            return kExitOk;
        };
    });
}

// ---- rank -----------------------------------------------------------------

struct RankArgs {
    std::string basis;
    int order = 0;
    int grid = 512;
    double tol = 1e-10;
};

void add_rank(CLI::App& app, RankArgs& a, std::function<int()>& action, std::ostream& out) {
    auto* sub = app.add_subcommand("rank", "Numerical dimension of the span of the Phi entries");
    sub->add_option("--basis", a.basis, "fourier | polynomial")->required();
    sub->add_option("--order", a.order, "number of basis functions")->required();
    sub->add_option("--grid", a.grid, "tau grid size")->capture_default_str();
    sub->add_option("--tol", a.tol, "relative singular value threshold")->capture_default_str();
    sub->callback([&a, &action, &out] {
        action = [&a, &out] {
            const PhiMatrix phi = compute_phi(make_basis(parse_basis_family(a.basis), a.order));
            out << rank_dimension(phi, a.grid, a.tol) << '\n';
            return kExitOk;
        };
    });
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Gaussian processes with compactly supported kernels", "compact-gp"};
    app.set_version_flag("--version", std::string(COMPACT_GP_VERSION));
    app.require_subcommand(1);

    std::function<int()> action;
    ApproxArgs approx;
    SampleArgs sample;
    FitArgs fit;
    PredictArgs predict;
    BenchArgs bench;
    RankArgs rank;
    add_approx(app, approx, action, out);
    add_sample(app, sample, action, out);
    add_fit(app, fit, action, out);
    add_predict(app, predict, action, out);
    add_bench(app, bench, action, out);
    add_rank(app, rank, action, out);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }
    if (!action) return kExitUsage;
    try {
        return action();
    } catch (const CsvError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
}

}  // namespace cgp::cli
