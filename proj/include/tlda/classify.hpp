// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "tlda/robust.hpp"

namespace tlda {

namespace detail {

/// Unbiased draw from [0, n) by rejection; fixed consumption pattern keeps
/// shuffles reproducible across platforms.
inline std::size_t uniform_below(std::mt19937_64& gen, std::size_t n) {
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - max % n;
    std::uint64_t x = gen();
    while (x >= limit) x = gen();
    return static_cast<std::size_t>(x % n);
}

template <typename T>
void fisher_yates(std::vector<T>& v, std::mt19937_64& gen) {
    for (std::size_t i = v.size(); i > 1; --i)
        std::swap(v[i - 1], v[uniform_below(gen, i)]);
}

/// Columns of the result are the samples flattened in storage order
/// (mode 1 fastest, then modes 3..n).
inline DenseTensor vectorize_samples(const DenseTensor& data) {
    const auto& dims = data.dims();
    const std::size_t m1 = dims[0], l = dims[1];
    const std::size_t trailing = frontal_count(dims);
    DenseTensor out({m1 * trailing, l});
    for (std::size_t t = 0; t < trailing; ++t)
        for (std::size_t j = 0; j < l; ++j)
            for (std::size_t p = 0; p < m1; ++p)
                out.data()[(p + m1 * t) + m1 * trailing * j] =
                    data.data()[p + m1 * (j + l * t)];
    return out;
}

}  // namespace detail

/// Nearest neighbor over projected samples: squared distances accumulate over
/// all slices in a fixed order; ties resolve to the lowest training index.
inline std::vector<std::string> nn_classify(const DiscriminantModel& model,
                                            const DenseTensor& x) {
    DenseTensor proj = project(model, x);
    const auto& pd = proj.dims();
    const auto& td = model.train_projections.dims();
    const std::size_t p = pd[0], q = pd[1], l = td[1];
    if (l == 0) throw EmptyClassError("model has no training projections");
    const std::size_t trailing = frontal_count(pd);

    std::vector<std::string> labels(q);
    parallel_for(q, [&](std::size_t j) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_i = 0;
        for (std::size_t i = 0; i < l; ++i) {
            double d = 0.0;
            for (std::size_t t = 0; t < trailing; ++t)
                for (std::size_t r = 0; r < p; ++r) {
                    const double diff = proj.data()[r + p * (j + q * t)] -
                                        model.train_projections.data()[r + p * (i + l * t)];
                    d += diff * diff;
                }
            if (d < best) {
                best = d;
                best_i = i;
            }
        }
        labels[j] = model.train_labels[best_i];
    });
    return labels;
}

struct EvalReport {
    double accuracy = 0.0;
    std::vector<std::string> class_ids;                 // rows/cols of confusion
    std::vector<double> per_class_accuracy;
    std::vector<std::vector<std::size_t>> confusion;    // [true][predicted]
    std::vector<std::string> predictions;
};

inline EvalReport evaluate_model(const DiscriminantModel& model, const DenseTensor& x,
                                 const std::vector<std::string>& labels) {
    if (x.dims()[1] != labels.size())
        throw DimensionError("evaluate: sample/label count mismatch");
    EvalReport report;
    report.predictions = nn_classify(model, x);

    std::vector<std::string> ids = model.class_ids;
    for (const auto& lab : labels) ids.push_back(lab);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    report.class_ids = ids;

    auto id_of = [&](const std::string& s) {
        return static_cast<std::size_t>(
            std::lower_bound(ids.begin(), ids.end(), s) - ids.begin());
    };
    report.confusion.assign(ids.size(), std::vector<std::size_t>(ids.size(), 0));
    std::size_t correct = 0;
    for (std::size_t j = 0; j < labels.size(); ++j) {
        report.confusion[id_of(labels[j])][id_of(report.predictions[j])]++;
        if (labels[j] == report.predictions[j]) ++correct;
    }
    report.accuracy = labels.empty() ? 0.0 : static_cast<double>(correct) /
                                                 static_cast<double>(labels.size());
    report.per_class_accuracy.assign(ids.size(), 0.0);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        std::size_t row = 0;
        for (std::size_t k = 0; k < ids.size(); ++k) row += report.confusion[i][k];
        report.per_class_accuracy[i] =
            row == 0 ? 0.0 : static_cast<double>(report.confusion[i][i]) /
                                 static_cast<double>(row);
    }
    return report;
}

/// Seeded stratified partition: each class is shuffled once and dealt
/// round-robin, so per-class counts differ by at most one across folds.
inline std::vector<std::vector<std::size_t>> stratified_folds(
    const std::vector<std::string>& labels, std::size_t folds, std::uint64_t seed) {
    if (folds < 2) throw ParameterError("cross-validation needs at least 2 folds");
    std::map<std::string, std::vector<std::size_t>> by_class;
    for (std::size_t j = 0; j < labels.size(); ++j) by_class[labels[j]].push_back(j);
    for (const auto& [id, idx] : by_class)
        if (idx.size() < folds)
            throw StratificationError("class '" + id + "' has " + std::to_string(idx.size()) +
                                      " samples, fewer than " + std::to_string(folds) +
                                      " folds");
    std::mt19937_64 gen(seed);
    std::vector<std::vector<std::size_t>> fold_test(folds);
    for (auto& [id, idx] : by_class) {
        detail::fisher_yates(idx, gen);
        for (std::size_t t = 0; t < idx.size(); ++t) fold_test[t % folds].push_back(idx[t]);
    }
    for (auto& f : fold_test) std::sort(f.begin(), f.end());
    return fold_test;
}

struct FoldResult {
    std::vector<std::size_t> test_indices;
    std::vector<std::string> predictions;
    double accuracy = 0.0;
    double seconds = 0.0;  // wall time, excluded from serialized metrics
};

struct CvReport {
    std::vector<FoldResult> folds;
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;  // population standard deviation
    std::vector<std::string> class_ids;
};

struct CvOptions {
    std::size_t folds = 5;
    Method method = Method::Homlda;
    TransformKind transform = TransformKind::Dft;
    std::size_t p = 0;  // 0 = classes - 1
    RobustParams params;
    std::uint64_t seed = 0;
};

/// Stratified k-fold cross-validation with nearest-neighbor classification in
/// the fitted subspace. The partition depends only on labels, fold count and
/// seed, so different methods see identical folds.
inline CvReport kfold_cv(const LabeledTensorDataset& ds, const CvOptions& options) {
    const auto fold_test = stratified_folds(ds.labels, options.folds, options.seed);
    const std::size_t l = ds.labels.size();
    const std::size_t p =
        options.p == 0 ? ds.class_ids.size() - 1 : options.p;

    CvReport report;
    report.class_ids = ds.class_ids;
    for (const auto& test : fold_test) {
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<char> in_test(l, 0);
        for (std::size_t j : test) in_test[j] = 1;
        std::vector<std::size_t> train;
        train.reserve(l - test.size());
        for (std::size_t j = 0; j < l; ++j)
            if (!in_test[j]) train.push_back(j);

        auto train_ds = subset_dataset(ds, train);
        auto test_ds = subset_dataset(ds, test);

        DiscriminantModel model;
        switch (options.method) {
            case Method::Homlda:
                model = homlda_fit(train_ds, p, make_spec(options.transform, train_ds.data.dims()),
                                   options.params.kappa_threshold);
                break;
            case Method::Rhomlda:
                model = rhomlda_fit(train_ds, p, make_spec(options.transform, train_ds.data.dims()),
                                    options.params);
                break;
            case Method::MatrixLda: {
                DenseTensor vec = detail::vectorize_samples(train_ds.data);
                Eigen::Map<const Eigen::MatrixXd> xm(vec.data(),
                                                     static_cast<Eigen::Index>(vec.dims()[0]),
                                                     static_cast<Eigen::Index>(vec.dims()[1]));
                model = matrix_lda_fit(xm, train_ds.labels, p);
                break;
            }
        }

        FoldResult fr;
        fr.test_indices = test;
        if (options.method == Method::MatrixLda)
            fr.predictions = nn_classify(model, detail::vectorize_samples(test_ds.data));
        else
            fr.predictions = nn_classify(model, test_ds.data);
        std::size_t correct = 0;
        for (std::size_t j = 0; j < test.size(); ++j)
            if (fr.predictions[j] == ds.labels[test[j]]) ++correct;
        fr.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
        fr.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report.folds.push_back(std::move(fr));
    }

    double mean = 0.0;
    for (const auto& f : report.folds) mean += f.accuracy;
    mean /= static_cast<double>(report.folds.size());
    double var = 0.0;
    for (const auto& f : report.folds) var += (f.accuracy - mean) * (f.accuracy - mean);
    var /= static_cast<double>(report.folds.size());
    report.mean_accuracy = mean;
    report.std_accuracy = std::sqrt(var);
    return report;
}

}  // namespace tlda
