// SPDX-License-Identifier: Apache-2.0
//
// Batch front end: synthesize datasets, fit/apply discriminant subspaces,
// cross-validate, and report transform-domain conditioning.
// Exit codes: 0 success, 1 usage, 2 data or numeric failure.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tlda/tlda.hpp"

namespace {

std::vector<std::size_t> parse_dims(const std::string& s) {
    std::vector<std::size_t> dims;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const std::size_t comma = std::min(s.find(',', pos), s.size());
        const std::string part = s.substr(pos, comma - pos);
        std::size_t value = 0;
        const auto res = std::from_chars(part.data(), part.data() + part.size(), value);
        if (res.ec != std::errc() || res.ptr != part.data() + part.size() || value == 0)
            throw tlda::ParameterError("bad --dims entry '" + part +
                                       "' (expected positive integers like 8,4,3)");
        dims.push_back(value);
        pos = comma + 1;
        if (comma == s.size()) break;
    }
    if (dims.empty()) throw tlda::ParameterError("--dims is empty");
    return dims;
}

tlda::LabeledTensorDataset load_dataset(const std::string& data_path,
                                        const std::string& labels_path) {
    return tlda::make_dataset(tlda::read_tensor(data_path), tlda::read_labels(labels_path));
}

/// matrix-lda consumes samples as columns; higher-order input is flattened.
tlda::DenseTensor maybe_vectorize(const tlda::DiscriminantModel& model,
                                  const tlda::DenseTensor& data) {
    if (model.method == tlda::Method::MatrixLda && data.order() > 2)
        return tlda::detail::vectorize_samples(data);
    return data;
}

std::size_t auto_rank(std::size_t p, std::size_t classes) {
    if (p != 0) return p;
    if (classes < 2) throw tlda::ParameterError("need at least 2 classes");
    return classes - 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"transform-domain tensor discriminant analysis"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a labeled Gaussian-blob dataset");
    tlda::SynthSpec synth_spec;
    std::string synth_dims = "8,4";
    std::string synth_out;
    synth->add_option("--classes", synth_spec.classes, "number of classes")->capture_default_str();
    synth->add_option("--per-class", synth_spec.per_class, "samples per class")->capture_default_str();
    synth->add_option("--dims", synth_dims, "sample shape, comma separated (d1,d2,...)")
        ->capture_default_str();
    synth->add_option("--sep", synth_spec.sep, "distance between adjacent class means")
        ->capture_default_str();
    synth->add_option("--sigma", synth_spec.sigma, "entrywise noise level")->capture_default_str();
    synth->add_option("--seed", synth_spec.seed, "random seed")->capture_default_str();
    synth->add_option("--out", synth_out, "output prefix (writes PREFIX.tnsr, PREFIX.labels.csv)")
        ->required();
    synth->add_flag("--force-singular", synth_spec.force_singular,
                    "duplicate feature row 0 into row 1, making within-class scatter singular");

    // shared fit options
    std::string data_path, labels_path, model_path, out_path, metrics_path;
    std::string method_str = "homlda", transform_str = "dft";
    std::size_t rank = 0;
    tlda::RobustParams params;
    std::size_t folds = 5;
    std::uint64_t seed = 0;

    auto add_fit_options = [&](CLI::App* sub) {
        sub->add_option("--data", data_path, "input tensor (TNSR)")->required();
        sub->add_option("--labels", labels_path, "label manifest (index,label CSV)")->required();
        sub->add_option("--method", method_str, "homlda|rhomlda|matrix-lda")->capture_default_str();
        sub->add_option("--transform", transform_str, "dft|dct|dwt|identity")->capture_default_str();
        sub->add_option("--p", rank, "projection rank (0 = classes-1)")->capture_default_str();
        sub->add_option("--kappa-threshold", params.kappa_threshold,
                        "slice condition threshold")->capture_default_str();
        sub->add_option("--energy", params.energy, "spectral energy kept on rebuild")
            ->capture_default_str();
    };

    auto* train = app.add_subcommand("train", "fit a discriminant subspace");
    add_fit_options(train);
    train->add_option("--model-out", model_path, "output model path")->required();

    auto* evaluate = app.add_subcommand("evaluate", "classify labeled data with a fitted model");
    evaluate->add_option("--model", model_path, "model path")->required();
    evaluate->add_option("--data", data_path, "input tensor (TNSR)")->required();
    evaluate->add_option("--labels", labels_path, "label manifest")->required();
    evaluate->add_option("--metrics-out", metrics_path, "metrics CSV path")->required();

    auto* cv = app.add_subcommand("cv", "stratified k-fold cross-validation");
    add_fit_options(cv);
    cv->add_option("--folds", folds, "fold count")->capture_default_str();
    cv->add_option("--seed", seed, "partition seed")->capture_default_str();
    cv->add_option("--metrics-out", metrics_path, "metrics CSV path")->required();

    auto* project = app.add_subcommand("project", "project data into a fitted subspace");
    project->add_option("--model", model_path, "model path")->required();
    project->add_option("--data", data_path, "input tensor (TNSR)")->required();
    project->add_option("--out", out_path, "output tensor path")->required();

    auto* condition = app.add_subcommand("condition-report",
                                         "per-slice conditioning of the within-class scatter");
    condition->add_option("--data", data_path, "input tensor (TNSR)")->required();
    condition->add_option("--labels", labels_path, "label manifest")->required();
    condition->add_option("--transform", transform_str, "dft|dct|dwt|identity")
        ->capture_default_str();
    condition->add_option("--kappa-threshold", params.kappa_threshold,
                          "slice condition threshold")->capture_default_str();
    condition->add_option("--energy", params.energy, "spectral energy kept on rebuild")
        ->capture_default_str();
    condition->add_option("--out", out_path, "report CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed()) {
            synth_spec.sample_dims = parse_dims(synth_dims);
            auto ds = tlda::synthesize(synth_spec);
            tlda::write_tensor(synth_out + ".tnsr", ds.data);
            tlda::write_labels(synth_out + ".labels.csv", ds.labels);
            std::cout << "wrote " << synth_out << ".tnsr (";
            for (std::size_t k = 0; k < ds.data.dims().size(); ++k)
                std::cout << (k ? "x" : "") << ds.data.dims()[k];
            std::cout << ") and " << synth_out << ".labels.csv (" << ds.labels.size()
                      << " samples, " << ds.class_ids.size() << " classes)\n";
        } else if (train->parsed()) {
            auto ds = load_dataset(data_path, labels_path);
            const auto method = tlda::parse_method(method_str);
            const auto kind = tlda::parse_transform_kind(transform_str);
            const std::size_t p = auto_rank(rank, ds.class_ids.size());
            tlda::DiscriminantModel model;
            if (method == tlda::Method::MatrixLda) {
                tlda::DenseTensor vec = ds.data.order() > 2
                                            ? tlda::detail::vectorize_samples(ds.data)
                                            : ds.data;
                Eigen::Map<const Eigen::MatrixXd> xm(
                    vec.data(), static_cast<Eigen::Index>(vec.dims()[0]),
                    static_cast<Eigen::Index>(vec.dims()[1]));
                model = tlda::matrix_lda_fit(xm, ds.labels, p);
            } else if (method == tlda::Method::Homlda) {
                model = tlda::homlda_fit(ds, p, tlda::make_spec(kind, ds.data.dims()),
                                         params.kappa_threshold);
            } else {
                model = tlda::rhomlda_fit(ds, p, tlda::make_spec(kind, ds.data.dims()), params);
            }
            tlda::save_model(model_path, model);
            std::size_t ill = 0;
            for (const auto& c : model.conditioning) ill += c.ill ? 1 : 0;
            std::cout << "fitted " << tlda::to_string(model.method) << " (transform "
                      << tlda::to_string(model.spec.kind) << ", p=" << model.p << ") on "
                      << ds.labels.size() << " samples, " << ds.class_ids.size()
                      << " classes; " << ill << "/" << model.conditioning.size()
                      << " transform-domain slices flagged ill\n"
                      << "wrote " << model_path << " (+.train, +.meta)\n";
        } else if (evaluate->parsed()) {
            auto model = tlda::load_model(model_path);
            auto data = tlda::read_tensor(data_path);
            auto labels = tlda::read_labels(labels_path);
            auto report = tlda::evaluate_model(model, maybe_vectorize(model, data), labels);
            tlda::write_text(metrics_path, tlda::eval_csv(report));
            std::cout << "accuracy " << tlda::format_double(report.accuracy) << " on "
                      << labels.size() << " samples; wrote " << metrics_path << "\n";
        } else if (cv->parsed()) {
            auto ds = load_dataset(data_path, labels_path);
            tlda::CvOptions options;
            options.folds = folds;
            options.method = tlda::parse_method(method_str);
            options.transform = tlda::parse_transform_kind(transform_str);
            options.p = rank;
            options.params = params;
            options.seed = seed;
            auto report = tlda::kfold_cv(ds, options);
            tlda::write_text(metrics_path, tlda::metrics_csv(report));
            double seconds = 0.0;
            for (std::size_t i = 0; i < report.folds.size(); ++i) {
                std::cout << "fold " << i + 1 << ": accuracy "
                          << tlda::format_double(report.folds[i].accuracy) << "\n";
                seconds += report.folds[i].seconds;
            }
            std::cout << "mean " << tlda::format_double(report.mean_accuracy) << ", std "
                      << tlda::format_double(report.std_accuracy) << " ("
                      << tlda::format_double(seconds) << "s); wrote " << metrics_path << "\n";
        } else if (project->parsed()) {
            auto model = tlda::load_model(model_path);
            auto data = tlda::read_tensor(data_path);
            auto proj = tlda::project(model, maybe_vectorize(model, data));
            tlda::write_tensor(out_path, proj);
            std::cout << "wrote " << out_path << " (";
            for (std::size_t k = 0; k < proj.dims().size(); ++k)
                std::cout << (k ? "x" : "") << proj.dims()[k];
            std::cout << ")\n";
        } else if (condition->parsed()) {
            auto ds = load_dataset(data_path, labels_path);
            const auto kind = tlda::parse_transform_kind(transform_str);
            auto slices = tlda::within_scatter_conditioning(
                ds, tlda::make_spec(kind, ds.data.dims()), params);
            tlda::write_text(out_path, tlda::condition_csv(slices));
            std::size_t ill = 0;
            for (const auto& s : slices) ill += s.ill ? 1 : 0;
            std::cout << ill << "/" << slices.size() << " slices at or above kappa "
                      << tlda::format_double(params.kappa_threshold) << "; wrote " << out_path
                      << "\n";
        }
    } catch (const tlda::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
