// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "tlda/tl_algebra.hpp"

namespace tlda {

enum class Method { Homlda, Rhomlda, MatrixLda };

inline const char* to_string(Method m) {
    switch (m) {
        case Method::Homlda: return "homlda";
        case Method::Rhomlda: return "rhomlda";
        case Method::MatrixLda: return "matrix-lda";
    }
    return "?";
}

inline Method parse_method(const std::string& s) {
    if (s == "homlda") return Method::Homlda;
    if (s == "rhomlda") return Method::Rhomlda;
    if (s == "matrix-lda") return Method::MatrixLda;
    throw ParameterError("unknown method '" + s + "' (expected homlda|rhomlda|matrix-lda)");
}

/// Samples stacked as lateral slices: data is m1 x l x m3 x ... x mn with
/// sample j in lateral slice j; labels[j] names its class.
struct LabeledTensorDataset {
    DenseTensor data;
    std::vector<std::string> labels;
    std::vector<std::string> class_ids;                    // sorted, unique
    std::vector<std::vector<std::size_t>> class_samples;   // ascending per class
};

inline LabeledTensorDataset make_dataset(DenseTensor data, std::vector<std::string> labels) {
    if (data.order() < 2)
        throw DimensionError("dataset tensor must have order >= 2");
    if (data.dims()[1] != labels.size())
        throw DimensionError("dataset has " + std::to_string(data.dims()[1]) +
                             " lateral slices but " + std::to_string(labels.size()) + " labels");
    if (labels.empty()) throw EmptyClassError("dataset has no samples");
    LabeledTensorDataset ds;
    ds.data = std::move(data);
    ds.labels = std::move(labels);
    std::map<std::string, std::vector<std::size_t>> by_class;
    for (std::size_t j = 0; j < ds.labels.size(); ++j) by_class[ds.labels[j]].push_back(j);
    for (auto& [id, idx] : by_class) {
        ds.class_ids.push_back(id);
        ds.class_samples.push_back(std::move(idx));
    }
    return ds;
}

/// Restriction of a dataset to the given sample indices (ascending order of
/// the list as passed).
inline LabeledTensorDataset subset_dataset(const LabeledTensorDataset& ds,
                                           const std::vector<std::size_t>& indices) {
    const auto& dims = ds.data.dims();
    const std::size_t m1 = dims[0], l = dims[1];
    std::vector<std::size_t> out_dims = dims;
    out_dims[1] = indices.size();
    DenseTensor data(out_dims);
    const std::size_t trailing = frontal_count(dims);
    for (std::size_t t = 0; t < trailing; ++t)
        for (std::size_t jj = 0; jj < indices.size(); ++jj) {
            const std::size_t j = indices[jj];
            if (j >= l) throw DimensionError("subset index out of range");
            for (std::size_t p = 0; p < m1; ++p)
                data.data()[p + m1 * (jj + indices.size() * t)] =
                    ds.data.data()[p + m1 * (j + l * t)];
        }
    std::vector<std::string> labels;
    labels.reserve(indices.size());
    for (std::size_t j : indices) labels.push_back(ds.labels[j]);
    return make_dataset(std::move(data), std::move(labels));
}

namespace detail {

/// Mean of values[j] over an index set, taken in ascending order. When every
/// addend is identical the shared value is returned as-is, so means of
/// constant collections are exact (noise-free classes center to exact zero).
template <typename Scalar, typename Get>
Scalar exact_mean(const std::vector<std::size_t>& idx, Get&& get) {
    Scalar first = get(idx[0]);
    Scalar acc = first;
    bool all_eq = true;
    for (std::size_t t = 1; t < idx.size(); ++t) {
        Scalar v = get(idx[t]);
        if (v != first) all_eq = false;
        acc += v;
    }
    if (all_eq) return first;
    return acc / static_cast<double>(idx.size());
}

}  // namespace detail

/// Per-class and global means over lateral slices; each mean keeps the
/// singleton mode-2.
struct ClassMeans {
    std::vector<std::string> class_ids;
    std::vector<DenseTensor> per_class;
    DenseTensor global;
};

inline ClassMeans class_means(const LabeledTensorDataset& ds) {
    for (std::size_t i = 0; i < ds.class_ids.size(); ++i)
        if (ds.class_samples[i].empty())
            throw EmptyClassError("class '" + ds.class_ids[i] + "' has no samples");
    if (ds.class_ids.empty()) throw EmptyClassError("dataset has no classes");

    const auto& dims = ds.data.dims();
    const std::size_t m1 = dims[0], l = dims[1];
    const std::size_t trailing = frontal_count(dims);
    std::vector<std::size_t> mean_dims = dims;
    mean_dims[1] = 1;

    ClassMeans out;
    out.class_ids = ds.class_ids;
    std::vector<std::size_t> all(l);
    for (std::size_t j = 0; j < l; ++j) all[j] = j;

    auto mean_of = [&](const std::vector<std::size_t>& idx) {
        DenseTensor m(mean_dims);
        for (std::size_t t = 0; t < trailing; ++t)
            for (std::size_t p = 0; p < m1; ++p)
                m.data()[p + m1 * t] = detail::exact_mean<double>(
                    idx, [&](std::size_t j) { return ds.data.data()[p + m1 * (j + l * t)]; });
        return m;
    };
    for (const auto& idx : ds.class_samples) out.per_class.push_back(mean_of(idx));
    out.global = mean_of(all);
    return out;
}

namespace detail {

struct TdScatters {
    ComplexTensor w;  // within-class, m1 x m1 x trailing, slices bitwise Hermitian
    ComplexTensor b;  // between-class, same shape
};

/// Scatter accumulation in the transform domain: each sample is transformed
/// once (it already is, as a column of data) and the per-slice sums run over
/// rank updates of centered columns. Slices come out Hermitian by
/// construction.
inline TdScatters scatters_transform_domain(
    const ComplexTensor& data, const std::vector<std::vector<std::size_t>>& class_samples) {
    const auto& dims = data.dims();
    const std::size_t m1 = dims[0], l = dims[1];
    const std::size_t c = class_samples.size();
    for (const auto& idx : class_samples)
        if (idx.empty()) throw EmptyClassError("scatter accumulation over an empty class");

    std::vector<std::size_t> class_of(l, c);
    for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j : class_samples[i]) class_of[j] = i;

    std::vector<std::size_t> all(l);
    for (std::size_t j = 0; j < l; ++j) all[j] = j;

    std::vector<std::size_t> sq_dims = dims;
    sq_dims[1] = m1;
    TdScatters out{ComplexTensor(sq_dims), ComplexTensor(sq_dims)};

    parallel_for(frontal_count(dims), [&](std::size_t s) {
        auto a = frontal(data, s);

        Eigen::MatrixXcd mu(m1, c);
        for (std::size_t i = 0; i < c; ++i)
            for (std::size_t p = 0; p < m1; ++p)
                mu(p, i) = exact_mean<Complex>(
                    class_samples[i], [&](std::size_t j) { return a(p, j); });
        Eigen::VectorXcd g(m1);
        for (std::size_t p = 0; p < m1; ++p)
            g(p) = exact_mean<Complex>(all, [&](std::size_t j) { return a(p, j); });

        Eigen::MatrixXcd centered(m1, l);
        for (std::size_t j = 0; j < l; ++j)
            centered.col(j) = a.col(j) - mu.col(class_of[j]);

        Eigen::MatrixXcd w = Eigen::MatrixXcd::Zero(m1, m1);
        w.selfadjointView<Eigen::Lower>().rankUpdate(centered);
        frontal(out.w, s) = w.selfadjointView<Eigen::Lower>();

        Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(m1, m1);
        for (std::size_t i = 0; i < c; ++i) {
            Eigen::VectorXcd d = mu.col(i) - g;
            b.selfadjointView<Eigen::Lower>().rankUpdate(
                d, static_cast<double>(class_samples[i].size()));
        }
        frontal(out.b, s) = b.selfadjointView<Eigen::Lower>();
    });
    return out;
}

inline TdScatters scatters_of(const LabeledTensorDataset& ds, const TransformSpec& spec) {
    auto td = to_transform_domain(pad_for_transform(ds.data, spec), spec);
    return scatters_transform_domain(td.values, ds.class_samples);
}

/// Self-adjoint decomposition of every (bitwise Hermitian) frontal slice;
/// eigenvalues ascending as the solver reports them. Exact DFT conjugate
/// pairs share one decomposition (equal spectra, conjugated vectors).
struct HermitianSliceEigs {
    std::vector<std::vector<double>> values;
    std::vector<Eigen::MatrixXcd> vectors;
};

inline HermitianSliceEigs hermitian_slice_eigs(const ComplexTensor& w, const TransformSpec& spec) {
    const auto& dims = w.dims();
    const std::size_t count = frontal_count(dims);
    const std::size_t m = dims[0];

    std::vector<std::size_t> pair(count);
    for (std::size_t s = 0; s < count; ++s) pair[s] = s;
    if (spec.kind == TransformKind::Dft) {
        auto candidate = mirror_map(spec, dims);
        if (mirror_pairs_exact(w, candidate)) pair = std::move(candidate);
    }

    HermitianSliceEigs out;
    out.values.assign(count, {});
    out.vectors.assign(count, {});
    parallel_for(count, [&](std::size_t s) {
        if (pair[s] < s) return;
        Eigen::MatrixXcd mat = frontal(w, s);
        if (!bitwise_hermitian(mat)) mat = ((mat + mat.adjoint()) * 0.5).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(mat);
        if (es.info() != Eigen::Success)
            throw NonDiagonalizableError(
                "self-adjoint eigensolver failed on slice " +
                    format_multi_index(frontal_multi_index(dims, s)),
                frontal_multi_index(dims, s));
        out.values[s].assign(es.eigenvalues().data(), es.eigenvalues().data() + m);
        out.vectors[s] = es.eigenvectors();
    });
    for (std::size_t s = 0; s < count; ++s) {
        if (pair[s] >= s) continue;
        out.values[s] = out.values[pair[s]];
        out.vectors[s] = out.vectors[pair[s]].conjugate();
    }
    return out;
}

}  // namespace detail

/// Within-class scatter: sum over samples of the centered outer products, in
/// the transform domain, returned spatially.
inline DenseTensor within_class_scatter(const LabeledTensorDataset& ds, const TransformSpec& spec) {
    auto sc = detail::scatters_of(ds, spec);
    return from_transform_domain(TransformedTensor{std::move(sc.w), spec});
}

/// Between-class scatter: class-size-weighted outer products of class-mean
/// deviations from the global mean.
inline DenseTensor between_class_scatter(const LabeledTensorDataset& ds, const TransformSpec& spec) {
    auto sc = detail::scatters_of(ds, spec);
    return from_transform_domain(TransformedTensor{std::move(sc.b), spec});
}

/// Total scatter: every sample centered on the global mean — the same
/// accumulation with all samples in one class.
inline DenseTensor total_scatter(const LabeledTensorDataset& ds, const TransformSpec& spec) {
    auto td = to_transform_domain(pad_for_transform(ds.data, spec), spec);
    std::vector<std::size_t> all(ds.labels.size());
    for (std::size_t j = 0; j < all.size(); ++j) all[j] = j;
    auto sc = detail::scatters_transform_domain(td.values, {all});
    return from_transform_domain(TransformedTensor{std::move(sc.w), spec});
}

struct ModelSliceConditioning {
    std::vector<std::size_t> index;  // 1-based over modes 3..n
    double kappa_pre = 0.0;
    double kappa_post = 0.0;
    bool ill = false;
};

/// A fitted discriminant subspace. u holds the leading eigenslices
/// (m1 x p x trailing, padded shape); train_projections the projected
/// training set (p x l x trailing).
struct DiscriminantModel {
    Method method = Method::Homlda;
    TransformSpec spec;
    std::size_t p = 0;
    DenseTensor u;
    DenseTensor train_projections;
    std::vector<std::string> train_labels;
    std::vector<std::string> class_ids;
    std::vector<ModelSliceConditioning> conditioning;
    double kappa_threshold = 1e5;
    double energy = 0.98;
    double lambda_floor_ratio = 1e-12;
};

/// Projects samples into the fitted subspace: slicewise adjoint(u) * x in the
/// transform domain. x may arrive unpadded; the padding is reapplied here.
inline DenseTensor project(const DiscriminantModel& model, const DenseTensor& x) {
    DenseTensor xp = pad_for_transform(x, model.spec);
    const auto& xd = xp.dims();
    const auto& ud = model.u.dims();
    if (xd.size() != ud.size() || xd[0] != ud[0])
        throw DimensionError("project: samples have mode-1 extent " + std::to_string(xd[0]) +
                             ", model expects " + std::to_string(ud[0]));
    for (std::size_t k = 2; k < xd.size(); ++k)
        if (xd[k] != ud[k])
            throw DimensionError("project: mode " + std::to_string(k + 1) +
                                 " extent differs from the model's");
    auto xt = to_transform_domain(xp, model.spec);
    auto ut = to_transform_domain(model.u, model.spec);
    std::vector<std::size_t> out_dims = xd;
    out_dims[0] = model.p;
    ComplexTensor proj(out_dims);
    parallel_for(frontal_count(xd), [&](std::size_t s) {
        frontal(proj, s).noalias() = frontal(ut.values, s).adjoint() * frontal(xt.values, s);
    });
    return from_transform_domain(TransformedTensor{std::move(proj), model.spec});
}

namespace detail {

inline void validate_rank(std::size_t p, std::size_t c) {
    if (c < 2)
        throw ParameterError("discriminant analysis needs at least 2 classes, got " +
                             std::to_string(c));
    if (p < 1 || p > c - 1)
        throw ParameterError("projection rank " + std::to_string(p) +
                             " outside 1.." + std::to_string(c - 1) +
                             " (at most classes-1 directions carry between-class variance)");
}

/// Shared tail of the tensor fits: eigendecompose inverse(w_eff) * b
/// facewise, keep the p leading eigenslices, project the training data.
inline DiscriminantModel finish_fit(const LabeledTensorDataset& ds, const DenseTensor& padded,
                                    const ComplexTensor& w_eff, const ComplexTensor& b,
                                    std::size_t p, const TransformSpec& spec, Method method,
                                    std::vector<ModelSliceConditioning> conditioning) {
    const auto& dims = w_eff.dims();
    ComplexTensor g(dims);
    parallel_for(frontal_count(dims), [&](std::size_t s) {
        Eigen::MatrixXcd ws = frontal(w_eff, s);
        frontal(g, s) = ws.partialPivLu().solve(Eigen::MatrixXcd(frontal(b, s)));
    });
    // Only the leading eigenvectors are consumed; the eigenvector-condition
    // guard would reject harmless degeneracy in the discarded null directions.
    auto fe = facewise_eig(g, spec, false, false);

    std::vector<std::size_t> u_dims = dims;
    u_dims[1] = p;
    ComplexTensor up(u_dims);
    for (std::size_t s = 0; s < frontal_count(dims); ++s)
        frontal(up, s) = frontal(fe.q, s).leftCols(static_cast<Eigen::Index>(p));

    DiscriminantModel model;
    model.method = method;
    model.spec = spec;
    model.p = p;
    model.u = from_transform_domain(TransformedTensor{std::move(up), spec});
    model.train_labels = ds.labels;
    model.class_ids = ds.class_ids;
    model.conditioning = std::move(conditioning);
    model.train_projections = project(model, padded);
    return model;
}

}  // namespace detail

/// Supervised subspace fit: scatter tensors in the transform domain, then the
/// p leading eigenslices of inverse(W) * B. Singular within-class slices are
/// rejected; the robust variant handles those.
inline DiscriminantModel homlda_fit(const LabeledTensorDataset& ds, std::size_t p,
                                    const TransformSpec& spec, double kappa_threshold = 1e5) {
    detail::validate_rank(p, ds.class_ids.size());
    DenseTensor padded = pad_for_transform(ds.data, spec);
    auto td = to_transform_domain(padded, spec);
    auto sc = detail::scatters_transform_domain(td.values, ds.class_samples);
    auto eigs = detail::hermitian_slice_eigs(sc.w, spec);

    const auto& dims = sc.w.dims();
    const std::size_t m1 = dims[0];
    std::vector<ModelSliceConditioning> cond(frontal_count(dims));
    for (std::size_t s = 0; s < cond.size(); ++s) {
        const auto& v = eigs.values[s];
        double max_abs = 0.0;
        for (double l : v) max_abs = std::max(max_abs, std::abs(l));
        const double tiny = max_abs * static_cast<double>(m1) *
                            std::numeric_limits<double>::epsilon();
        const double min_val = v.empty() ? 0.0 : *std::min_element(v.begin(), v.end());
        if (max_abs == 0.0 || !(min_val > tiny))
            throw SingularSliceError(
                "within-class scatter slice " +
                    detail::format_multi_index(frontal_multi_index(dims, s)) +
                    " is singular to machine precision; consider method rhomlda",
                frontal_multi_index(dims, s));
        cond[s].index = frontal_multi_index(dims, s);
        cond[s].kappa_pre = detail::kappa_from_real_eigs(v);
        cond[s].kappa_post = cond[s].kappa_pre;
        cond[s].ill = !(cond[s].kappa_pre < kappa_threshold);
    }
    auto model = detail::finish_fit(ds, padded, sc.w, sc.b, p, spec, Method::Homlda,
                                    std::move(cond));
    model.kappa_threshold = kappa_threshold;
    return model;
}

/// Classic vectorized LDA on columns of x (one sample per column); kept as an
/// independent route for cross-checking the degenerate tensor case.
inline DiscriminantModel matrix_lda_fit(const Eigen::MatrixXd& x,
                                        const std::vector<std::string>& labels, std::size_t p) {
    if (static_cast<std::size_t>(x.cols()) != labels.size())
        throw DimensionError("matrix_lda_fit: sample/label count mismatch");
    if (labels.empty()) throw EmptyClassError("matrix_lda_fit: no samples");
    std::map<std::string, std::vector<Eigen::Index>> by_class;
    for (std::size_t j = 0; j < labels.size(); ++j)
        by_class[labels[j]].push_back(static_cast<Eigen::Index>(j));
    detail::validate_rank(p, by_class.size());

    const Eigen::Index m = x.rows();
    Eigen::VectorXd g = Eigen::VectorXd::Zero(m);
    for (Eigen::Index j = 0; j < x.cols(); ++j) g += x.col(j);
    g /= static_cast<double>(x.cols());

    Eigen::MatrixXd sw = Eigen::MatrixXd::Zero(m, m);
    Eigen::MatrixXd sb = Eigen::MatrixXd::Zero(m, m);
    for (const auto& [id, idx] : by_class) {
        Eigen::VectorXd mu = Eigen::VectorXd::Zero(m);
        for (Eigen::Index j : idx) mu += x.col(j);
        mu /= static_cast<double>(idx.size());
        for (Eigen::Index j : idx) {
            Eigen::VectorXd d = x.col(j) - mu;
            sw.noalias() += d * d.transpose();
        }
        Eigen::VectorXd d = mu - g;
        sb.noalias() += static_cast<double>(idx.size()) * (d * d.transpose());
    }

    Eigen::FullPivLU<Eigen::MatrixXd> lu(sw);
    if (!lu.isInvertible())
        throw SingularSliceError("within-class scatter matrix is singular to machine precision",
                                 {});
    Eigen::MatrixXd gmat = lu.solve(sb);
    Eigen::EigenSolver<Eigen::MatrixXd> es(gmat, true);
    if (es.info() != Eigen::Success)
        throw NonDiagonalizableError("eigensolver did not converge on the discriminant matrix",
                                     {});
    std::vector<Complex> vals(es.eigenvalues().data(), es.eigenvalues().data() + m);
    const auto perm = detail::eig_sort_order(vals);

    Eigen::MatrixXd u(m, static_cast<Eigen::Index>(p));
    for (std::size_t i = 0; i < p; ++i) {
        Eigen::VectorXcd col = es.eigenvectors().col(perm[i]);
        detail::normalize_eigenvector(col);
        if (col.imag().cwiseAbs().maxCoeff() > 1e-8)
            throw NonRealResultError("leading discriminant direction " + std::to_string(i + 1) +
                                     " is not real");
        u.col(static_cast<Eigen::Index>(i)) = col.real();
    }

    DiscriminantModel model;
    model.method = Method::MatrixLda;
    model.spec = make_spec(TransformKind::Identity,
                           {static_cast<std::size_t>(m), static_cast<std::size_t>(p)});
    model.p = p;
    std::vector<double> u_data(u.data(), u.data() + u.size());
    model.u = DenseTensor({static_cast<std::size_t>(m), p}, std::move(u_data));
    model.train_labels = labels;
    for (const auto& [id, idx] : by_class) model.class_ids.push_back(id);
    ModelSliceConditioning c;
    c.kappa_pre = detail::kappa_frobenius(sw.cast<Complex>());
    c.kappa_post = c.kappa_pre;
    c.ill = !(c.kappa_pre < model.kappa_threshold);
    model.conditioning.push_back(c);
    std::vector<double> x_data(x.data(), x.data() + x.size());
    model.train_projections = project(
        model, DenseTensor({static_cast<std::size_t>(m), labels.size()}, std::move(x_data)));
    return model;
}

}  // namespace tlda
