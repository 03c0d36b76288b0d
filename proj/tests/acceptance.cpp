// SPDX-License-Identifier: Apache-2.0
//
// End-to-end acceptance gate. Runs seven checks over the library and the
// command-line tool (path passed as argv[1]) and prints one PASS/FAIL line
// per check. Exit status is the number of failed checks.

#include <chrono>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tlda/tlda.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using tlda::Complex;
using tlda::DenseTensor;
using tlda::TransformKind;

namespace {

std::string g_cli;
const fs::path g_work = "acceptance_work";

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

/// Collects failure descriptions; empty means the check passed.
struct Outcome {
    std::vector<std::string> problems;
    void expect(bool ok, const std::string& what) {
        if (!ok && problems.size() < 8) problems.push_back(what);
        if (!ok && problems.size() == 8) problems.push_back("...");
    }
};

int run_cli(const std::string& env_prefix, const std::string& args) {
    const std::string log = (g_work / "cli.log").string();
    const std::string cmd = env_prefix + "'" + g_cli + "' " + args + " >> '" + log + "' 2>&1";
    return std::system(cmd.c_str());
}

std::string read_file(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) return "<unreadable:" + path.string() + ">";
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

bool same_file_bytes(const fs::path& a, const fs::path& b) {
    return read_file(a) == read_file(b);
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(3);
    os << v;
    return os.str();
}

const std::vector<TransformKind> kKinds{TransformKind::Dft, TransformKind::Dct,
                                        TransformKind::Haar, TransformKind::Identity};

// --- check 1: algebra laws on randomized shapes ----------------------------

void check_algebra(Outcome& out, std::string& note) {
    Timer timer;
    std::mt19937_64 gen(4242);
    std::uint64_t tensor_seed = 10000;
    std::size_t shapes = 0, inverse_checked = 0;

    for (TransformKind kind : kKinds) {
        for (int rep = 0; rep < 52; ++rep) {
            ++shapes;
            std::uniform_int_distribution<std::size_t> order_d(3, 5), dim_d(1, 4), sq_d(2, 4);
            const std::size_t order = order_d(gen);
            std::vector<std::size_t> trailing(order - 2);
            for (auto& d : trailing) {
                d = dim_d(gen);
                if (kind == TransformKind::Haar && d % 2 == 1) ++d;  // keep extents even
            }
            const std::size_t m1 = dim_d(gen), m2 = dim_d(gen), m3 = dim_d(gen),
                              m4 = dim_d(gen), q = sq_d(gen);
            auto with_trailing = [&](std::size_t r, std::size_t c) {
                std::vector<std::size_t> d{r, c};
                d.insert(d.end(), trailing.begin(), trailing.end());
                return d;
            };
            const std::string tag = "kind=" + std::string(tlda::to_string(kind)) +
                                    " rep=" + std::to_string(rep);

            DenseTensor a = oracle::random_tensor(with_trailing(m1, m2), tensor_seed++);
            auto spec = tlda::make_spec(kind, a.dims());

            // Transform round trip.
            DenseTensor rt = tlda::from_transform_domain(tlda::to_transform_domain(a, spec));
            out.expect(oracle::rel_frob_diff(rt, a) <= 1e-10, tag + ": transform round trip");

            // Identity elements on both sides.
            DenseTensor il = tlda::tl_identity(
                m1, trailing, tlda::make_spec(kind, with_trailing(m1, m1)));
            DenseTensor ir = tlda::tl_identity(
                m2, trailing, tlda::make_spec(kind, with_trailing(m2, m2)));
            out.expect(oracle::rel_frob_diff(tlda::tl_product(il, a, spec), a) <= 1e-10,
                       tag + ": left identity");
            out.expect(oracle::rel_frob_diff(tlda::tl_product(a, ir, spec), a) <= 1e-10,
                       tag + ": right identity");

            // Transpose involution.
            out.expect(oracle::rel_frob_diff(
                           tlda::tl_transpose(tlda::tl_transpose(a, spec), spec), a) <= 1e-10,
                       tag + ": transpose involution");

            // Associativity.
            DenseTensor b = oracle::random_tensor(with_trailing(m2, m3), tensor_seed++);
            DenseTensor c = oracle::random_tensor(with_trailing(m3, m4), tensor_seed++);
            DenseTensor left = tlda::tl_product(tlda::tl_product(a, b, spec), c, spec);
            DenseTensor right = tlda::tl_product(a, tlda::tl_product(b, c, spec), spec);
            out.expect(oracle::rel_frob_diff(left, right) <= 1e-9, tag + ": associativity");

            // Inverse and eigendecomposition on a square tensor, gated on the
            // slices being comfortably invertible (random slices very rarely
            // fail the gate, so both laws still run on the bulk of shapes).
            DenseTensor s = oracle::random_tensor(with_trailing(q, q), tensor_seed++);
            auto sq_spec = tlda::make_spec(kind, s.dims());
            auto cond = tlda::slice_condition_numbers(s, sq_spec, 1e6);
            bool well = true;
            for (const auto& sc : cond.slices) well = well && !sc.ill;
            if (!well) continue;
            ++inverse_checked;

            DenseTensor id = tlda::tl_identity(q, trailing, sq_spec);
            DenseTensor prod = tlda::tl_product(s, tlda::tl_inverse(s, sq_spec), sq_spec);
            out.expect(oracle::rel_frob_diff(prod, id) <= 1e-8, tag + ": inverse law");

            auto f = tlda::t_eig(s, sq_spec);
            auto recon = tlda::tl_product(
                tlda::tl_product(f.q, f.s, sq_spec), tlda::tl_inverse(f.q, sq_spec), sq_spec);
            out.expect(oracle::rel_diff_vs_real(recon, s) <= 1e-8,
                       tag + ": eigendecomposition reconstruction");
        }
    }
    out.expect(shapes >= 200, "fewer than 200 shapes exercised");
    out.expect(inverse_checked >= 150,
               "conditioning gate left fewer than 150 shapes for inverse/eig laws");
    const double t = timer.elapsed();
    out.expect(t < 60.0, "runtime " + fmt(t) + "s exceeds 60s");
    note = std::to_string(shapes) + " shapes, inverse/eig on " +
           std::to_string(inverse_checked) + ", " + fmt(t) + "s";
}

// --- check 2: identity-transform fits equal the matrix route ---------------

void check_degenerate_equivalence(Outcome& out, std::string& note) {
    Timer timer;
    for (std::uint64_t seed = 200; seed < 220; ++seed) {
        tlda::SynthSpec sspec;
        sspec.classes = 3;
        sspec.per_class = 10;
        sspec.sample_dims = {5, 1};
        sspec.sep = 4.0;
        sspec.sigma = 1.0;
        sspec.seed = seed;
        auto ds = tlda::synthesize(sspec);

        tlda::CvOptions options;
        options.folds = 5;
        options.p = 2;
        options.seed = 11;
        options.transform = TransformKind::Identity;
        options.method = tlda::Method::Homlda;
        auto tensor_cv = tlda::kfold_cv(ds, options);
        options.method = tlda::Method::MatrixLda;
        auto matrix_cv = tlda::kfold_cv(ds, options);

        bool equal = tensor_cv.folds.size() == matrix_cv.folds.size();
        for (std::size_t i = 0; equal && i < tensor_cv.folds.size(); ++i)
            equal = tensor_cv.folds[i].test_indices == matrix_cv.folds[i].test_indices &&
                    tensor_cv.folds[i].predictions == matrix_cv.folds[i].predictions;
        out.expect(equal, "seed " + std::to_string(seed) + ": decisions differ");
    }

    // Same comparison end to end through the tool.
    const std::string d = (g_work / "c2").string();
    out.expect(run_cli("", "synth --classes 3 --per-class 10 --dims 5,1 --sep 4 --sigma 1"
                           " --seed 777 --out '" + d + "'") == 0, "synth run failed");
    const std::string shared = "cv --data '" + d + ".tnsr' --labels '" + d +
                               ".labels.csv' --p 2 --folds 5 --seed 11 ";
    out.expect(run_cli("", shared + "--method homlda --transform identity --metrics-out '" +
                           d + "_tensor.csv'") == 0, "tensor cv run failed");
    out.expect(run_cli("", shared + "--method matrix-lda --metrics-out '" + d +
                           "_matrix.csv'") == 0, "matrix cv run failed");
    out.expect(same_file_bytes(d + "_tensor.csv", d + "_matrix.csv"),
               "tool metrics differ between the two routes");

    const double t = timer.elapsed();
    out.expect(t < 30.0, "runtime " + fmt(t) + "s exceeds 30s");
    note = "20 seeded datasets + tool comparison, " + fmt(t) + "s";
}

// --- check 3: scatter decomposition, positivity, rank bound ----------------

void check_scatters(Outcome& out, std::string& note) {
    std::uint64_t seed = 300;
    std::size_t slices_checked = 0;
    for (TransformKind kind : kKinds) {
        for (const auto& sample_dims :
             std::vector<std::vector<std::size_t>>{{4, 3}, {3, 2, 2}}) {
            tlda::SynthSpec sspec;
            sspec.classes = 3;
            sspec.per_class = 6;
            sspec.sample_dims = sample_dims;
            sspec.sep = 2.0;
            sspec.sigma = 1.0;
            sspec.seed = seed++;
            auto ds = tlda::synthesize(sspec);
            auto spec = tlda::make_spec(kind, ds.data.dims());
            const std::string tag = std::string(tlda::to_string(kind)) + "/order-" +
                                    std::to_string(ds.data.order());

            DenseTensor w = tlda::within_class_scatter(ds, spec);
            DenseTensor b = tlda::between_class_scatter(ds, spec);
            DenseTensor total = tlda::total_scatter(ds, spec);
            out.expect(oracle::rel_frob_diff(total, w + b) <= 1e-9,
                       tag + ": total != within + between");

            auto sc = tlda::detail::scatters_of(ds, spec);
            const std::size_t count = tlda::frontal_count(sc.w.dims());
            for (std::size_t s = 0; s < count; ++s) {
                ++slices_checked;
                Eigen::MatrixXcd ws = tlda::frontal(sc.w, s);
                out.expect((ws - ws.adjoint()).cwiseAbs().maxCoeff() == 0.0,
                           tag + ": within slice not Hermitian");
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(ws);
                const double max_eig = es.eigenvalues().maxCoeff();
                out.expect(es.eigenvalues().minCoeff() >=
                               -1e-10 * std::max(max_eig, 1.0),
                           tag + ": within slice not positive semidefinite");

                Eigen::FullPivLU<Eigen::MatrixXcd> lu(ws);
                out.expect(lu.isInvertible(), tag + ": within slice singular");
                if (!lu.isInvertible()) continue;
                Eigen::MatrixXcd g = lu.solve(tlda::frontal(sc.b, s));
                Eigen::ComplexEigenSolver<Eigen::MatrixXcd> ges(g, false);
                const double top = ges.eigenvalues().cwiseAbs().maxCoeff();
                std::size_t significant = 0;
                for (Eigen::Index i = 0; i < ges.eigenvalues().size(); ++i)
                    if (std::abs(ges.eigenvalues()(i)) > 1e-8 * top) ++significant;
                out.expect(significant <= sspec.classes - 1,
                           tag + ": more than classes-1 significant eigenvalues");
            }
        }
    }
    note = "8 datasets, " + std::to_string(slices_checked) + " slices";
}

// --- check 4: robust fit is a pass-through on well-conditioned data --------

void check_passthrough(Outcome& out, std::string& note) {
    std::size_t accepted = 0;
    std::uint64_t seed = 400;
    const std::size_t folds = 5;
    const std::uint64_t partition_seed = 13;

    while (accepted < 5 && seed < 420) {
        tlda::SynthSpec sspec;
        sspec.classes = 3;
        sspec.per_class = 8;
        sspec.sample_dims = {4, 2};
        sspec.sep = 3.0;
        sspec.sigma = 1.0;
        sspec.seed = seed++;
        auto ds = tlda::synthesize(sspec);

        // Accept only datasets whose every training split keeps every slice
        // comfortably conditioned, so the repair never has anything to do.
        auto fold_test = tlda::stratified_folds(ds.labels, folds, partition_seed);
        bool well = true;
        for (const auto& test : fold_test) {
            std::vector<char> in_test(ds.labels.size(), 0);
            for (std::size_t j : test) in_test[j] = 1;
            std::vector<std::size_t> train;
            for (std::size_t j = 0; j < ds.labels.size(); ++j)
                if (!in_test[j]) train.push_back(j);
            auto train_ds = tlda::subset_dataset(ds, train);
            auto cond = tlda::within_scatter_conditioning(
                train_ds, tlda::make_spec(TransformKind::Dft, train_ds.data.dims()));
            for (const auto& c : cond) well = well && !c.ill;
        }
        if (!well) continue;
        ++accepted;

        tlda::CvOptions options;
        options.folds = folds;
        options.seed = partition_seed;
        options.transform = TransformKind::Dft;
        options.method = tlda::Method::Homlda;
        auto plain = tlda::kfold_cv(ds, options);
        options.method = tlda::Method::Rhomlda;
        auto robust = tlda::kfold_cv(ds, options);

        bool equal = plain.folds.size() == robust.folds.size();
        for (std::size_t i = 0; equal && i < plain.folds.size(); ++i)
            equal = plain.folds[i].accuracy == robust.folds[i].accuracy &&
                    plain.folds[i].predictions == robust.folds[i].predictions;
        out.expect(equal,
                   "seed " + std::to_string(seed - 1) + ": robust and plain fits disagree");
    }
    out.expect(accepted == 5, "found only " + std::to_string(accepted) +
                                  " fully well-conditioned datasets in 20 attempts");
    note = std::to_string(accepted) + " datasets, exact decision equality";
}

// --- check 5: robust fit succeeds where the plain fit must reject ----------

void check_repair(Outcome& out, std::string& note) {
    Timer timer;
    tlda::SynthSpec sspec;
    sspec.classes = 2;
    sspec.per_class = 30;
    sspec.sample_dims = {4, 3};
    sspec.sep = 10.0;
    sspec.sigma = 1.0;
    sspec.seed = 500;
    sspec.force_singular = true;
    auto ds = tlda::synthesize(sspec);
    auto spec = tlda::make_spec(TransformKind::Dft, ds.data.dims());

    bool threw = false;
    try {
        tlda::homlda_fit(ds, 1, spec);
    } catch (const tlda::SingularSliceError&) {
        threw = true;
    }
    out.expect(threw, "plain fit accepted a singular within-class scatter");

    tlda::CvOptions options;
    options.folds = 5;
    options.method = tlda::Method::Rhomlda;
    options.transform = TransformKind::Dft;
    options.p = 1;
    options.seed = 17;
    auto cv = tlda::kfold_cv(ds, options);
    out.expect(cv.mean_accuracy >= 0.95,
               "robust mean accuracy " + fmt(cv.mean_accuracy) + " below 0.95");

    auto cond = tlda::within_scatter_conditioning(ds, spec);
    std::size_t rebuilt = 0;
    for (const auto& c : cond)
        if (c.ill) {
            ++rebuilt;
            out.expect(c.kappa_post < 1e5, "rebuilt slice still at kappa " + fmt(c.kappa_post));
        }
    out.expect(rebuilt > 0, "duplicated feature row left no slice to rebuild");

    const double t = timer.elapsed();
    out.expect(t < 30.0, "runtime " + fmt(t) + "s exceeds 30s");
    note = std::to_string(rebuilt) + " slices rebuilt, mean accuracy " +
           fmt(cv.mean_accuracy) + ", " + fmt(t) + "s";
}

// --- check 6: thresholds are persisted and drive the repair ----------------

void check_thresholds(Outcome& out, std::string& note) {
    tlda::RobustParams defaults;
    out.expect(defaults.kappa_threshold == 1e5, "default condition threshold is not 1e5");
    out.expect(defaults.energy == 0.98, "default energy fraction is not 0.98");
    out.expect(defaults.lambda_floor_ratio == 1e-12, "default spectrum floor is not 1e-12");

    // The fitted defaults surface in the tool's model metadata.
    const std::string d = (g_work / "c6").string();
    out.expect(run_cli("", "synth --classes 2 --per-class 8 --dims 4,2 --sep 3 --sigma 1"
                           " --seed 601 --out '" + d + "'") == 0, "synth run failed");
    out.expect(run_cli("", "train --data '" + d + ".tnsr' --labels '" + d +
                           ".labels.csv' --method rhomlda --transform dft --p 1"
                           " --model-out '" + d + ".model'") == 0, "train run failed");
    try {
        nlohmann::json meta = nlohmann::json::parse(read_file(d + ".model.meta"));
        out.expect(meta.at("kappa_threshold").get<double>() == 1e5,
                   "metadata condition threshold is not 1e5");
        out.expect(meta.at("energy").get<double>() == 0.98, "metadata energy is not 0.98");
        out.expect(meta.at("lambda_floor_ratio").get<double>() == 1e-12,
                   "metadata spectrum floor is not 1e-12");
    } catch (const std::exception& e) {
        out.expect(false, std::string("model metadata unreadable: ") + e.what());
    }

    // A dataset whose every transform-domain scatter slice is ill conditioned
    // yet positive definite: one feature row carries almost no variance.
    tlda::SynthSpec sspec;
    sspec.classes = 2;
    sspec.per_class = 15;
    sspec.sample_dims = {2, 4};
    sspec.sep = 2.0;
    sspec.sigma = 1.0;
    sspec.seed = 600;
    auto ds = tlda::synthesize(sspec);
    for (std::size_t j = 0; j < ds.labels.size(); ++j)
        for (std::size_t t = 0; t < 4; ++t) ds.data(0, j, t) *= 1e-3;
    auto spec = tlda::make_spec(TransformKind::Dft, ds.data.dims());
    auto td = tlda::to_transform_domain(tlda::pad_for_transform(ds.data, spec), spec);
    auto sc = tlda::detail::scatters_transform_domain(td.values, ds.class_samples);

    auto base = tlda::detail::robust_scatter_transform_domain(sc.w, spec, defaults);
    for (const auto& c : base.conditioning)
        out.expect(c.ill, "expected every slice of the skewed dataset to be ill conditioned");

    // Keeping the full spectral energy must leave the scatter untouched.
    tlda::RobustParams keep_all = defaults;
    keep_all.energy = 1.0;
    auto kept = tlda::detail::robust_scatter_transform_domain(sc.w, spec, keep_all);
    out.expect(std::memcmp(kept.w.data(), sc.w.data(), sc.w.size() * sizeof(Complex)) == 0,
               "energy 1.0 modified the scatter");
    for (const auto& c : kept.conditioning)
        out.expect(c.kappa_post == c.kappa_pre, "energy 1.0 changed a condition number");

    // An unreachable threshold must rebuild every slice without making any
    // condition number worse.
    tlda::RobustParams rebuild_all = defaults;
    rebuild_all.kappa_threshold = 1.0;
    auto rebuilt = tlda::detail::robust_scatter_transform_domain(sc.w, spec, rebuild_all);
    const std::size_t count = tlda::frontal_count(sc.w.dims());
    for (std::size_t s = 0; s < count; ++s) {
        const auto& c = rebuilt.conditioning[s];
        out.expect(c.ill, "threshold 1.0 left a slice unflagged");
        out.expect((tlda::frontal(rebuilt.w, s) - tlda::frontal(sc.w, s))
                           .cwiseAbs()
                           .maxCoeff() > 0.0,
                   "threshold 1.0 left a slice unmodified");
        out.expect(std::isfinite(c.kappa_post) && c.kappa_post <= c.kappa_pre,
                   "rebuild worsened a condition number");
    }
    note = "defaults, metadata, energy=1.0 pass-through, threshold=1.0 rebuild";
}

// --- check 7: byte-identical outputs across runs and thread counts ---------

void check_determinism(Outcome& out, std::string& note) {
    const std::vector<std::string> envs{"TLDA_THREADS=1 ", "TLDA_THREADS=3 ",
                                        "env -u TLDA_THREADS ", "TLDA_THREADS=1 "};
    std::vector<fs::path> dirs;
    for (std::size_t r = 0; r < envs.size(); ++r) {
        const fs::path dir = g_work / ("run" + std::to_string(r));
        fs::create_directories(dir);
        dirs.push_back(dir);
        const std::string d = (dir / "data").string();
        const std::string dataset = "--data '" + d + ".tnsr' --labels '" + d + ".labels.csv'";
        bool ok = run_cli(envs[r], "synth --classes 3 --per-class 8 --dims 4,3 --sep 3"
                                   " --sigma 1 --seed 700 --out '" + d + "'") == 0;
        ok = ok && run_cli(envs[r], "cv " + dataset + " --method rhomlda --transform dft"
                                    " --folds 5 --seed 19 --metrics-out '" +
                                    (dir / "metrics.csv").string() + "'") == 0;
        ok = ok && run_cli(envs[r], "train " + dataset + " --method rhomlda --transform dft"
                                    " --model-out '" + (dir / "model.tnsr").string() + "'") == 0;
        ok = ok && run_cli(envs[r], "condition-report " + dataset + " --transform dft --out '" +
                                    (dir / "cond.csv").string() + "'") == 0;
        out.expect(ok, "pipeline run " + std::to_string(r) + " failed");
    }
    const std::vector<std::string> files{"data.tnsr",  "data.labels.csv", "metrics.csv",
                                         "model.tnsr", "model.tnsr.train", "model.tnsr.meta",
                                         "cond.csv"};
    for (std::size_t r = 1; r < dirs.size(); ++r)
        for (const auto& f : files)
            out.expect(same_file_bytes(dirs[0] / f, dirs[r] / f),
                       f + " differs between run 0 and run " + std::to_string(r));
    note = std::to_string(envs.size()) + " pipeline runs x " + std::to_string(files.size()) +
           " files";
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: " << argv[0] << " <path-to-cli-binary>\n";
        return 64;
    }
    g_cli = argv[1];
    std::error_code ec;
    fs::remove_all(g_work, ec);
    fs::create_directories(g_work);

    struct Check {
        const char* name;
        void (*fn)(Outcome&, std::string&);
    };
    const std::vector<Check> checks{
        {"algebra laws on randomized shapes", check_algebra},
        {"identity-transform fit equals the matrix route", check_degenerate_equivalence},
        {"scatter decomposition, positivity, rank bound", check_scatters},
        {"robust fit passes through on well-conditioned data", check_passthrough},
        {"robust fit repairs singular data the plain fit rejects", check_repair},
        {"thresholds persisted and honored", check_thresholds},
        {"byte-identical outputs across runs and thread counts", check_determinism},
    };

    int failures = 0;
    for (std::size_t i = 0; i < checks.size(); ++i) {
        Outcome out;
        std::string note;
        try {
            checks[i].fn(out, note);
        } catch (const std::exception& e) {
            out.expect(false, std::string("unexpected exception: ") + e.what());
        }
        const bool ok = out.problems.empty();
        std::cout << (ok ? "PASS" : "FAIL") << " criterion-" << i + 1 << ": " << checks[i].name;
        if (ok && !note.empty()) std::cout << " (" << note << ")";
        std::cout << "\n";
        for (const auto& p : out.problems) std::cout << "       - " << p << "\n";
        if (!ok) ++failures;
    }
    return failures;
}
