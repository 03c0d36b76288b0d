// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <type_traits>
#include <vector>

#include "tlda/transforms.hpp"

namespace tlda {

namespace detail {

/// Real operands come back as real tensors (with the imaginary residual
/// checked); complex operands keep their complex spatial values.
template <typename Scalar>
using SpatialResult = std::conditional_t<std::is_same_v<Scalar, Complex>, ComplexTensor,
                                         DenseTensor>;

template <typename Scalar>
SpatialResult<Scalar> back_to_spatial(TransformedTensor&& t) {
    if constexpr (std::is_same_v<Scalar, Complex>)
        return from_transform_domain_complex(t);
    else
        return from_transform_domain(t);
}

/// Linear index of the conjugate-mirror partner of frontal slice s: every
/// transformed trailing mode t maps to (m - t) mod m, the others stay put.
/// Meaningful for the DFT, where row f and row m-f of the transform matrix
/// are exact conjugates.
inline std::vector<std::size_t> mirror_map(const TransformSpec& spec,
                                           const std::vector<std::size_t>& dims) {
    const std::size_t count = frontal_count(dims);
    std::vector<std::size_t> pair(count);
    std::vector<bool> transformed(dims.size() + 1, false);
    for (std::size_t m : spec.transformed_modes) transformed[m] = true;
    for (std::size_t s = 0; s < count; ++s) {
        std::size_t rest = s, mirrored = 0, stride = 1;
        for (std::size_t k = 2; k < dims.size(); ++k) {
            const std::size_t t = rest % dims[k];
            rest /= dims[k];
            const std::size_t tm = transformed[k + 1] && t != 0 ? dims[k] - t : t;
            mirrored += stride * tm;
            stride *= dims[k];
        }
        pair[s] = mirrored;
    }
    return pair;
}

/// True when the partner slice equals the conjugate of slice s entrywise
/// (value comparison) for every pair, which the transform chain guarantees
/// for real input under the symmetric-root DFT.
inline bool mirror_pairs_exact(const ComplexTensor& t, const std::vector<std::size_t>& pair) {
    const std::size_t m1 = t.dims()[0], m2 = t.dims()[1];
    const std::size_t elems = m1 * m2;
    for (std::size_t s = 0; s < pair.size(); ++s) {
        if (pair[s] <= s) continue;
        const Complex* a = t.data() + s * elems;
        const Complex* b = t.data() + pair[s] * elems;
        for (std::size_t i = 0; i < elems; ++i)
            if (a[i].real() != b[i].real() || a[i].imag() != -b[i].imag()) return false;
    }
    return true;
}

inline bool bitwise_hermitian(const Eigen::MatrixXcd& m) {
    if (m.rows() != m.cols()) return false;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        if (m(j, j).imag() != 0.0) return false;
        for (Eigen::Index i = j + 1; i < m.rows(); ++i)
            if (m(i, j).real() != m(j, i).real() || m(i, j).imag() != -m(j, i).imag())
                return false;
    }
    return true;
}

/// Sorted eigenvalue order: descending modulus, ties by descending real part,
/// remaining ties keep the solver's order.
inline std::vector<std::size_t> eig_sort_order(const std::vector<Complex>& v) {
    std::vector<std::size_t> perm(v.size());
    std::iota(perm.begin(), perm.end(), std::size_t(0));
    std::stable_sort(perm.begin(), perm.end(), [&](std::size_t i, std::size_t j) {
        const double ai = std::abs(v[i]), aj = std::abs(v[j]);
        if (ai != aj) return ai > aj;
        const double ri = v[i].real(), rj = v[j].real();
        if (ri != rj) return ri > rj;
        return false;
    });
    return perm;
}

/// Unit 2-norm and the first component of magnitude > 1e-12 rotated to the
/// positive real axis; makes eigenvectors reproducible across solvers.
inline void normalize_eigenvector(Eigen::Ref<Eigen::VectorXcd> col) {
    const double n = col.norm();
    if (n > 0.0) col /= n;
    for (Eigen::Index i = 0; i < col.size(); ++i) {
        const double a = std::abs(col(i));
        if (a > 1e-12) {
            col *= std::conj(col(i)) / a;
            return;
        }
    }
}

struct FacewiseEig {
    ComplexTensor q;                            // m x m x trailing
    std::vector<std::vector<Complex>> values;   // per slice, sorted
};

/// Eigendecomposition of every frontal slice of a transform-domain tensor.
/// Bitwise-Hermitian slices go to the self-adjoint solver; for exact DFT
/// conjugate pairs only one partner is decomposed and the other mirrored.
/// hermitize averages each slice with its own adjoint first (a no-op on
/// bitwise-Hermitian input). vcond_guard rejects slices whose eigenvector
/// matrix is conditioned worse than 1e10; callers that only consume a few
/// leading eigenvectors can turn it off.
inline FacewiseEig facewise_eig(const ComplexTensor& t, const TransformSpec& spec,
                                bool hermitize = false, bool vcond_guard = true) {
    const auto& dims = t.dims();
    if (dims[0] != dims[1])
        throw DimensionError("facewise eigendecomposition needs square slices, got " +
                             std::to_string(dims[0]) + "x" + std::to_string(dims[1]));
    const std::size_t m = dims[0];
    const std::size_t count = frontal_count(dims);

    std::vector<std::size_t> pair(count);
    std::iota(pair.begin(), pair.end(), std::size_t(0));
    if (spec.kind == TransformKind::Dft) {
        auto candidate = mirror_map(spec, dims);
        if (mirror_pairs_exact(t, candidate)) pair = std::move(candidate);
    }

    FacewiseEig out;
    out.q = ComplexTensor(dims);
    out.values.assign(count, {});

    parallel_for(count, [&](std::size_t s) {
        if (pair[s] < s) return;  // mirrored afterwards
        Eigen::MatrixXcd mat = frontal(t, s);
        if (hermitize) mat = ((mat + mat.adjoint()) * 0.5).eval();

        std::vector<Complex> vals(m);
        Eigen::MatrixXcd vecs;
        if (bitwise_hermitian(mat)) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(mat);
            if (es.info() != Eigen::Success)
                throw NonDiagonalizableError(
                    "self-adjoint eigensolver failed on slice " +
                        format_multi_index(frontal_multi_index(dims, s)),
                    frontal_multi_index(dims, s));
            for (std::size_t i = 0; i < m; ++i) vals[i] = Complex(es.eigenvalues()(i));
            vecs = es.eigenvectors();
        } else {
            Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(mat, true);
            if (es.info() != Eigen::Success)
                throw NonDiagonalizableError(
                    "eigensolver did not converge on slice " +
                        format_multi_index(frontal_multi_index(dims, s)),
                    frontal_multi_index(dims, s));
            if (vcond_guard) {
                Eigen::JacobiSVD<Eigen::MatrixXcd> svd(es.eigenvectors());
                const double smax = svd.singularValues()(0);
                const double smin = svd.singularValues()(svd.singularValues().size() - 1);
                if (!(smin > 0.0) || smax / smin >= 1e10)
                    throw NonDiagonalizableError(
                        "slice " + format_multi_index(frontal_multi_index(dims, s)) +
                            " is defective or nearly so (eigenvector condition >= 1e10)",
                        frontal_multi_index(dims, s));
            }
            for (std::size_t i = 0; i < m; ++i) vals[i] = es.eigenvalues()(i);
            vecs = es.eigenvectors();
        }

        const auto perm = eig_sort_order(vals);
        auto q_slice = frontal(out.q, s);
        std::vector<Complex> sorted(m);
        for (std::size_t i = 0; i < m; ++i) {
            sorted[i] = vals[perm[i]];
            q_slice.col(i) = vecs.col(perm[i]);
            normalize_eigenvector(q_slice.col(i));
        }
        out.values[s] = std::move(sorted);
    });

    // Conjugate mirrors inherit the partner's decomposition exactly.
    for (std::size_t s = 0; s < count; ++s) {
        if (pair[s] >= s || pair[s] == s) continue;
        const std::size_t src = pair[s];
        auto q_src = frontal(out.q, src);
        frontal(out.q, s) = q_src.conjugate();
        out.values[s].resize(m);
        for (std::size_t i = 0; i < m; ++i) out.values[s][i] = std::conj(out.values[src][i]);
    }
    return out;
}

/// kappa = ||M||_F * ||M^-1||_F from a real spectrum of a Hermitian slice;
/// infinity when any eigenvalue vanishes.
inline double kappa_from_real_eigs(const std::vector<double>& eigs) {
    double max_abs = 0.0;
    for (double l : eigs) max_abs = std::max(max_abs, std::abs(l));
    if (max_abs == 0.0) return std::numeric_limits<double>::infinity();
    double sq = 0.0, inv_sq = 0.0;
    for (double l : eigs) {
        if (l == 0.0) return std::numeric_limits<double>::infinity();
        sq += l * l;
        inv_sq += 1.0 / (l * l);
    }
    return std::sqrt(sq) * std::sqrt(inv_sq);
}

/// kappa = ||M||_F * ||M^-1||_F for a general slice; infinity when singular.
inline double kappa_frobenius(const Eigen::MatrixXcd& m) {
    if (bitwise_hermitian(m)) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m, Eigen::EigenvaluesOnly);
        std::vector<double> eigs(es.eigenvalues().data(),
                                 es.eigenvalues().data() + es.eigenvalues().size());
        return kappa_from_real_eigs(eigs);
    }
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(m);
    if (!lu.isInvertible()) return std::numeric_limits<double>::infinity();
    return m.norm() * lu.inverse().norm();
}

}  // namespace detail

/// Product in the transform domain: facewise slice products of the
/// transformed operands, brought back to the spatial domain.
template <typename Scalar>
detail::SpatialResult<Scalar> tl_product(const Tensor<Scalar>& a, const Tensor<Scalar>& b,
                                         const TransformSpec& spec) {
    const auto& da = a.dims();
    const auto& db = b.dims();
    if (da.size() != db.size())
        throw DimensionError("tl_product: operand orders differ");
    if (da[1] != db[0])
        throw DimensionError("tl_product: mode-2 extent of the left operand (" +
                             std::to_string(da[1]) + ") must match mode-1 extent of the right (" +
                             std::to_string(db[0]) + ")");
    for (std::size_t k = 2; k < da.size(); ++k)
        if (da[k] != db[k])
            throw DimensionError("tl_product: mode " + std::to_string(k + 1) + " extents differ");
    auto ta = to_transform_domain(a, spec);
    auto tb = to_transform_domain(b, spec);
    ComplexTensor c = facewise_product(ta.values, tb.values);
    return detail::back_to_spatial<Scalar>(TransformedTensor{std::move(c), spec});
}

/// Identity element for the product: every transform-domain slice is the
/// m x m identity.
inline DenseTensor tl_identity(std::size_t m, const std::vector<std::size_t>& trailing_dims,
                               const TransformSpec& spec) {
    std::vector<std::size_t> dims{m, m};
    dims.insert(dims.end(), trailing_dims.begin(), trailing_dims.end());
    ComplexTensor v(dims);
    const std::size_t count = frontal_count(dims);
    for (std::size_t s = 0; s < count; ++s) frontal(v, s).setIdentity();
    return from_transform_domain(TransformedTensor{std::move(v), spec});
}

enum class TransposeMode { Conjugate, Plain };

/// Transpose in the transform domain; slices are conjugate-transposed by
/// default (Plain skips the conjugation, for comparison experiments).
template <typename Scalar>
detail::SpatialResult<Scalar> tl_transpose(const Tensor<Scalar>& a, const TransformSpec& spec,
                                           TransposeMode mode = TransposeMode::Conjugate) {
    auto ta = to_transform_domain(a, spec);
    const auto& dims = ta.values.dims();
    std::vector<std::size_t> out_dims = dims;
    std::swap(out_dims[0], out_dims[1]);
    ComplexTensor out(out_dims);
    parallel_for(frontal_count(dims), [&](std::size_t s) {
        if (mode == TransposeMode::Conjugate)
            frontal(out, s) = frontal(ta.values, s).adjoint();
        else
            frontal(out, s) = frontal(ta.values, s).transpose();
    });
    return detail::back_to_spatial<Scalar>(TransformedTensor{std::move(out), spec});
}

/// Inverse under the product: slicewise matrix inverses in the transform
/// domain. A slice singular to machine precision is reported by its 1-based
/// multi-index over modes 3..n.
template <typename Scalar>
detail::SpatialResult<Scalar> tl_inverse(const Tensor<Scalar>& a, const TransformSpec& spec) {
    if (a.dims()[0] != a.dims()[1])
        throw DimensionError("tl_inverse needs square slices, got " +
                             std::to_string(a.dims()[0]) + "x" + std::to_string(a.dims()[1]));
    auto ta = to_transform_domain(a, spec);
    const auto& dims = ta.values.dims();
    ComplexTensor out(dims);
    parallel_for(frontal_count(dims), [&](std::size_t s) {
        Eigen::FullPivLU<Eigen::MatrixXcd> lu(frontal(ta.values, s));
        if (!lu.isInvertible())
            throw SingularSliceError(
                "transform-domain slice " + detail::format_multi_index(frontal_multi_index(dims, s)) +
                    " is singular to machine precision",
                frontal_multi_index(dims, s));
        frontal(out, s) = lu.inverse();
    });
    return detail::back_to_spatial<Scalar>(TransformedTensor{std::move(out), spec});
}

/// Eigendecomposition under the product: a = q * s * inverse(q) with s
/// facewise diagonal. slice_eigs holds each slice's sorted spectrum
/// (descending modulus, ties by descending real part). q and s are complex
/// tensors: the eigenpairs of a real tensor's slices are complex in general,
/// so only the reconstructed product is (numerically) real again.
struct TEigFactors {
    ComplexTensor q;
    ComplexTensor s;
    TransformSpec spec;
    std::vector<std::vector<Complex>> slice_eigs;
};

template <typename Scalar>
TEigFactors t_eig(const Tensor<Scalar>& a, const TransformSpec& spec) {
    if (a.dims()[0] != a.dims()[1])
        throw DimensionError("t_eig needs square slices, got " + std::to_string(a.dims()[0]) +
                             "x" + std::to_string(a.dims()[1]));
    auto ta = to_transform_domain(a, spec);
    auto fe = detail::facewise_eig(ta.values, spec, false);

    const auto& dims = ta.values.dims();
    ComplexTensor diag(dims);
    const std::size_t m = dims[0];
    for (std::size_t s = 0; s < frontal_count(dims); ++s) {
        auto d = frontal(diag, s);
        for (std::size_t i = 0; i < m; ++i) d(i, i) = fe.values[s][i];
    }

    TEigFactors out;
    out.q = from_transform_domain_complex(TransformedTensor{std::move(fe.q), spec});
    out.s = from_transform_domain_complex(TransformedTensor{std::move(diag), spec});
    out.spec = spec;
    out.slice_eigs = std::move(fe.values);
    return out;
}

/// Conditioning of every transform-domain slice: kappa = ||M||_F * ||M^-1||_F,
/// infinity for singular slices; ill when kappa >= threshold.
struct SliceCondition {
    std::vector<std::size_t> index;  // 1-based over modes 3..n
    double kappa = 0.0;
    bool ill = false;
};

struct ConditionReport {
    std::vector<SliceCondition> slices;
    double threshold = 1e5;
};

template <typename Scalar>
ConditionReport slice_condition_numbers(const Tensor<Scalar>& a, const TransformSpec& spec,
                                        double threshold = 1e5) {
    if (!(threshold > 0.0))
        throw ParameterError("condition threshold must be positive");
    if (a.dims()[0] != a.dims()[1])
        throw DimensionError("slice_condition_numbers needs square slices");
    auto ta = to_transform_domain(a, spec);
    const auto& dims = ta.values.dims();
    const std::size_t count = frontal_count(dims);
    ConditionReport report;
    report.threshold = threshold;
    report.slices.resize(count);
    parallel_for(count, [&](std::size_t s) {
        auto& entry = report.slices[s];
        entry.index = frontal_multi_index(dims, s);
        entry.kappa = detail::kappa_frobenius(frontal(ta.values, s));
        entry.ill = !(entry.kappa < threshold);
    });
    return report;
}

}  // namespace tlda
