// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "tlda/discriminant.hpp"

namespace tlda {

struct RobustParams {
    double kappa_threshold = 1e5;
    double energy = 0.98;
    double lambda_floor_ratio = 1e-12;
};

namespace detail {

inline void validate_params(const RobustParams& p) {
    if (!(p.kappa_threshold > 0.0))
        throw ParameterError("kappa_threshold must be positive");
    if (!(p.energy > 0.0) || p.energy > 1.0)
        throw ParameterError("energy must lie in (0, 1]");
    if (!(p.lambda_floor_ratio > 0.0) || p.lambda_floor_ratio >= 1.0)
        throw ParameterError("lambda_floor_ratio must lie in (0, 1)");
}

}  // namespace detail

/// Spectrum repair for an ill-conditioned Hermitian slice. lambdas must be
/// non-increasing. The first k values that reach the energy fraction are
/// kept; the discarded tail is replaced by its own mean, floored at
/// lambda_floor_ratio times the leading eigenvalue and capped at the last
/// kept value so the list stays non-increasing. Reaching the energy with the
/// full list returns it unchanged, so reapplication is a no-op.
inline std::pair<std::size_t, std::vector<double>> reestimate_eigs(
    const std::vector<double>& lambdas, const RobustParams& params) {
    detail::validate_params(params);
    if (lambdas.empty()) throw ZeroSpectrumError("empty eigenvalue list");
    for (std::size_t i = 1; i < lambdas.size(); ++i)
        if (lambdas[i] > lambdas[i - 1])
            throw ParameterError("eigenvalue list must be non-increasing");
    if (!(lambdas[0] > 0.0))
        throw ZeroSpectrumError("eigenvalue list carries no positive energy");

    const std::size_t p = lambdas.size();
    double total = 0.0;
    for (double l : lambdas) total += std::max(l, 0.0);
    std::size_t k = p;
    double prefix = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
        prefix += std::max(lambdas[i], 0.0);
        if (prefix / total >= params.energy) {
            k = i + 1;
            break;
        }
    }
    if (k == p) return {p, lambdas};

    double tail_min = lambdas[k], tail_max = lambdas[k], tail_sum = 0.0;
    for (std::size_t i = k; i < p; ++i) {
        tail_min = std::min(tail_min, lambdas[i]);
        tail_max = std::max(tail_max, lambdas[i]);
        tail_sum += lambdas[i];
    }
    // Mean of an all-equal tail is that value exactly, keeping reapplication
    // bitwise stable.
    const double tail_mean =
        tail_min == tail_max ? tail_min : tail_sum / static_cast<double>(p - k);
    double x = std::max(tail_mean, params.lambda_floor_ratio * lambdas[0]);
    x = std::min(x, lambdas[k - 1]);

    std::vector<double> corrected(lambdas.begin(), lambdas.begin() + static_cast<long>(k));
    corrected.resize(p, x);
    return {k, corrected};
}

namespace detail {

struct RobustScatterResult {
    ComplexTensor w;  // repaired within-class scatter, transform domain
    std::vector<ModelSliceConditioning> conditioning;
};

/// Slicewise repair of a transform-domain within-class scatter: slices with
/// kappa below the threshold pass through bitwise; the rest are rebuilt from
/// their re-estimated spectra. If the re-estimated spectrum still implies
/// kappa at or above the threshold, the tail is raised further (never above
/// the last kept eigenvalue) before rebuilding.
inline RobustScatterResult robust_scatter_transform_domain(const ComplexTensor& w,
                                                           const TransformSpec& spec,
                                                           const RobustParams& params) {
    validate_params(params);
    const auto& dims = w.dims();
    const std::size_t count = frontal_count(dims);
    const std::size_t m = dims[0];

    std::vector<std::size_t> pair(count);
    for (std::size_t s = 0; s < count; ++s) pair[s] = s;
    if (spec.kind == TransformKind::Dft) {
        auto candidate = mirror_map(spec, dims);
        if (mirror_pairs_exact(w, candidate)) pair = std::move(candidate);
    }

    RobustScatterResult out;
    out.w = w;
    out.conditioning.assign(count, {});
    std::vector<char> rebuilt_flag(count, 0);

    auto eigs = hermitian_slice_eigs(w, spec);
    parallel_for(count, [&](std::size_t s) {
        auto& cond = out.conditioning[s];
        cond.index = frontal_multi_index(dims, s);
        std::vector<double> desc(eigs.values[s].rbegin(), eigs.values[s].rend());
        cond.kappa_pre = kappa_from_real_eigs(desc);
        cond.ill = !(cond.kappa_pre < params.kappa_threshold);
        cond.kappa_post = cond.kappa_pre;
        if (!cond.ill) return;               // pass through bitwise
        if (pair[s] < s) return;             // rebuilt via its conjugate partner

        auto [k, corrected] = reestimate_eigs(desc, params);
        if (k == desc.size()) {
            // Spectrum kept in full: rebuilding would only add rounding noise.
            return;
        }
        double post = kappa_from_real_eigs(corrected);
        if (!(post < params.kappa_threshold)) {
            // Raise the tail until the Frobenius condition bound
            // sqrt(m)*l1 * sqrt(m)/x < threshold holds, or the tail meets the
            // last kept eigenvalue.
            double x = 2.0 * static_cast<double>(m) * corrected[0] / params.kappa_threshold;
            x = std::min(std::max(x, corrected[k]), corrected[k - 1]);
            for (std::size_t i = k; i < corrected.size(); ++i) corrected[i] = x;
            post = kappa_from_real_eigs(corrected);
        }
        cond.kappa_post = post;
        rebuilt_flag[s] = 1;

        Eigen::VectorXd ascending(static_cast<Eigen::Index>(m));
        for (std::size_t i = 0; i < m; ++i)
            ascending(static_cast<Eigen::Index>(i)) = corrected[m - 1 - i];
        const Eigen::MatrixXcd& v = eigs.vectors[s];
        Eigen::MatrixXcd rebuilt = v * ascending.asDiagonal() * v.adjoint();
        frontal(out.w, s) = ((rebuilt + rebuilt.adjoint()) * 0.5).eval();
    });

    // Conjugate partners of rebuilt slices mirror the rebuild exactly.
    for (std::size_t s = 0; s < count; ++s) {
        if (pair[s] >= s) continue;
        out.conditioning[s].kappa_post = out.conditioning[pair[s]].kappa_post;
        if (rebuilt_flag[pair[s]]) {
            rebuilt_flag[s] = 1;
            frontal(out.w, s) = frontal(out.w, pair[s]).conjugate();
        }
    }
    return out;
}

}  // namespace detail

/// Repairs an ill-conditioned within-class scatter tensor slicewise; slices
/// already below the condition threshold are untouched in the transform
/// domain.
inline DenseTensor robust_within_scatter(const DenseTensor& w, const TransformSpec& spec,
                                         const RobustParams& params = {}) {
    if (w.dims()[0] != w.dims()[1])
        throw DimensionError("robust_within_scatter needs square slices");
    auto td = to_transform_domain(pad_for_transform(w, spec), spec);
    auto res = detail::robust_scatter_transform_domain(td.values, spec, params);
    return from_transform_domain(TransformedTensor{std::move(res.w), spec});
}

/// Slicewise conditioning of a dataset's within-class scatter, before and
/// after the robust repair, without fitting a subspace.
inline std::vector<ModelSliceConditioning> within_scatter_conditioning(
    const LabeledTensorDataset& ds, const TransformSpec& spec, const RobustParams& params = {}) {
    auto td = to_transform_domain(pad_for_transform(ds.data, spec), spec);
    auto sc = detail::scatters_transform_domain(td.values, ds.class_samples);
    return detail::robust_scatter_transform_domain(sc.w, spec, params).conditioning;
}

/// Robust variant of the subspace fit: identical to the plain fit wherever
/// the within-class slices are well conditioned, with ill slices rebuilt from
/// re-estimated spectra before inversion.
inline DiscriminantModel rhomlda_fit(const LabeledTensorDataset& ds, std::size_t p,
                                     const TransformSpec& spec, const RobustParams& params = {}) {
    detail::validate_params(params);
    detail::validate_rank(p, ds.class_ids.size());
    DenseTensor padded = pad_for_transform(ds.data, spec);
    auto td = to_transform_domain(padded, spec);
    auto sc = detail::scatters_transform_domain(td.values, ds.class_samples);
    auto res = detail::robust_scatter_transform_domain(sc.w, spec, params);
    auto model = detail::finish_fit(ds, padded, res.w, sc.b, p, spec, Method::Rhomlda,
                                    std::move(res.conditioning));
    model.kappa_threshold = params.kappa_threshold;
    model.energy = params.energy;
    model.lambda_floor_ratio = params.lambda_floor_ratio;
    return model;
}

}  // namespace tlda
