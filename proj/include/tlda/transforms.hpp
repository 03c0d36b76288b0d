// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "tlda/tensor.hpp"

namespace tlda {

enum class TransformKind { Dft, Dct, Haar, Identity };

inline const char* to_string(TransformKind k) {
    switch (k) {
        case TransformKind::Dft: return "dft";
        case TransformKind::Dct: return "dct";
        case TransformKind::Haar: return "dwt";
        case TransformKind::Identity: return "identity";
    }
    return "?";
}

inline TransformKind parse_transform_kind(const std::string& s) {
    if (s == "dft") return TransformKind::Dft;
    if (s == "dct") return TransformKind::Dct;
    if (s == "dwt" || s == "haar") return TransformKind::Haar;
    if (s == "identity") return TransformKind::Identity;
    throw ParameterError("unknown transform '" + s + "' (expected dft|dct|dwt|identity)");
}

struct TransformMatrixPair {
    Eigen::MatrixXcd forward;
    Eigen::MatrixXcd inverse;
};

/// Unitary/orthonormal transform of one mode of extent m.
inline TransformMatrixPair make_transform(TransformKind kind, std::size_t m) {
    if (m == 0) throw ParameterError("transform length must be positive");
    TransformMatrixPair t;
    const auto mm = static_cast<Eigen::Index>(m);
    switch (kind) {
        case TransformKind::Identity: {
            t.forward = Eigen::MatrixXcd::Identity(mm, mm);
            t.inverse = t.forward;
            return t;
        }
        case TransformKind::Dft: {
            // Root table with exact conjugate symmetry: w[m-k] == conj(w[k])
            // bitwise, so row m-f of the matrix is the exact conjugate of row
            // f. That exactness is what lets downstream code mirror work
            // across conjugate slice pairs.
            std::vector<Complex> w(m);
            for (std::size_t k = 0; k <= m / 2; ++k)
                w[k] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) /
                                           static_cast<double>(m));
            if (m % 2 == 0) w[m / 2] = Complex(-1.0, 0.0);
            for (std::size_t k = m / 2 + 1; k < m; ++k) w[k] = std::conj(w[m - k]);
            const double scale = 1.0 / std::sqrt(static_cast<double>(m));
            t.forward.resize(mm, mm);
            for (std::size_t f = 0; f < m; ++f)
                for (std::size_t j = 0; j < m; ++j)
                    t.forward(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(j)) =
                        w[(f * j) % m] * scale;
            t.inverse = t.forward.adjoint();
            return t;
        }
        case TransformKind::Dct: {
            // Orthonormal DCT-II.
            t.forward.resize(mm, mm);
            for (std::size_t k = 0; k < m; ++k) {
                const double s = std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(m));
                for (std::size_t j = 0; j < m; ++j)
                    t.forward(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) =
                        s * std::cos(std::numbers::pi * (2.0 * static_cast<double>(j) + 1.0) *
                                     static_cast<double>(k) / (2.0 * static_cast<double>(m)));
            }
            t.inverse = t.forward.adjoint();
            return t;
        }
        case TransformKind::Haar: {
            if (m % 2 != 0)
                throw ParameterError("single-level Haar needs an even length, got " +
                                     std::to_string(m) + "; pad the mode first");
            const double r = 1.0 / std::sqrt(2.0);
            t.forward = Eigen::MatrixXcd::Zero(mm, mm);
            for (std::size_t k = 0; k < m / 2; ++k) {
                t.forward(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(2 * k)) = r;
                t.forward(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(2 * k + 1)) = r;
                t.forward(static_cast<Eigen::Index>(m / 2 + k), static_cast<Eigen::Index>(2 * k)) = r;
                t.forward(static_cast<Eigen::Index>(m / 2 + k), static_cast<Eigen::Index>(2 * k + 1)) = -r;
            }
            t.inverse = t.forward.adjoint();
            return t;
        }
    }
    throw ParameterError("unknown transform kind");
}

/// Which modes get transformed and how; by convention modes 3..n.
/// padded_dims differs from original_dims only for Haar, where each
/// transformed mode of odd extent grows by one zero hyperslice.
struct TransformSpec {
    TransformKind kind = TransformKind::Identity;
    std::vector<std::size_t> transformed_modes;  // 1-based, ascending
    std::vector<std::size_t> original_dims;
    std::vector<std::size_t> padded_dims;
};

inline TransformSpec make_spec(TransformKind kind, const std::vector<std::size_t>& dims,
                               std::vector<std::size_t> modes) {
    if (dims.size() < 2)
        throw DimensionError("transform spec needs a tensor of order >= 2");
    std::sort(modes.begin(), modes.end());
    for (std::size_t i = 0; i < modes.size(); ++i) {
        if (modes[i] < 1 || modes[i] > dims.size())
            throw ModeIndexError("transformed mode " + std::to_string(modes[i]) +
                                 " outside 1.." + std::to_string(dims.size()));
        if (i > 0 && modes[i] == modes[i - 1])
            throw ModeIndexError("transformed mode " + std::to_string(modes[i]) + " repeated");
    }
    TransformSpec spec;
    spec.kind = kind;
    spec.transformed_modes = std::move(modes);
    spec.original_dims = dims;
    spec.padded_dims = dims;
    if (kind == TransformKind::Haar)
        for (std::size_t m : spec.transformed_modes)
            if (spec.padded_dims[m - 1] % 2 != 0) spec.padded_dims[m - 1] += 1;
    return spec;
}

inline TransformSpec make_spec(TransformKind kind, const std::vector<std::size_t>& dims) {
    std::vector<std::size_t> modes;
    for (std::size_t m = 3; m <= dims.size(); ++m) modes.push_back(m);
    return make_spec(kind, dims, std::move(modes));
}

namespace detail {

/// True when dims agree with ref on every transformed mode.
inline bool transformed_modes_match(const TransformSpec& spec,
                                    const std::vector<std::size_t>& dims,
                                    const std::vector<std::size_t>& ref) {
    for (std::size_t m : spec.transformed_modes)
        if (dims[m - 1] != ref[m - 1]) return false;
    return true;
}

/// Copies src into dst at the low corner; dst extents must dominate src's.
template <typename Scalar>
void copy_block(const Tensor<Scalar>& src, Tensor<Scalar>& dst) {
    const auto& sd = src.dims();
    const auto& dd = dst.dims();
    const std::size_t n = sd.size();
    std::vector<std::size_t> idx(n, 0);
    for (std::size_t off = 0; off < src.size(); ++off) {
        std::size_t doff = 0, stride = 1;
        for (std::size_t k = 0; k < n; ++k) {
            doff += stride * idx[k];
            stride *= dd[k];
        }
        dst.data()[doff] = src.data()[off];
        for (std::size_t k = 0; k < n; ++k) {
            if (++idx[k] < sd[k]) break;
            idx[k] = 0;
        }
    }
}

}  // namespace detail

/// Extends each transformed mode of odd extent by one zero hyperslice so the
/// Haar transform applies; for the other kinds (and already-padded input) the
/// tensor comes back unchanged.
template <typename Scalar>
Tensor<Scalar> pad_for_transform(const Tensor<Scalar>& a, const TransformSpec& spec) {
    const auto& dims = a.dims();
    if (dims.size() != spec.original_dims.size())
        throw DimensionError("pad_for_transform: tensor order " + std::to_string(dims.size()) +
                             " does not match spec order " +
                             std::to_string(spec.original_dims.size()));
    if (detail::transformed_modes_match(spec, dims, spec.padded_dims)) return a;
    if (!detail::transformed_modes_match(spec, dims, spec.original_dims))
        throw DimensionError("pad_for_transform: transformed-mode extents match neither the "
                             "original nor the padded shape of the spec");
    std::vector<std::size_t> out_dims = dims;
    for (std::size_t m : spec.transformed_modes) out_dims[m - 1] = spec.padded_dims[m - 1];
    Tensor<Scalar> out(out_dims);
    detail::copy_block(a, out);
    return out;
}

/// Truncates each transformed mode back to its original extent.
template <typename Scalar>
Tensor<Scalar> unpad_after_transform(const Tensor<Scalar>& a, const TransformSpec& spec) {
    const auto& dims = a.dims();
    if (detail::transformed_modes_match(spec, dims, spec.original_dims)) return a;
    if (!detail::transformed_modes_match(spec, dims, spec.padded_dims))
        throw DimensionError("unpad_after_transform: tensor does not have the padded shape");
    std::vector<std::size_t> out_dims = dims;
    for (std::size_t m : spec.transformed_modes) out_dims[m - 1] = spec.original_dims[m - 1];
    Tensor<Scalar> out(out_dims);
    std::vector<std::size_t> idx(out_dims.size(), 0);
    for (std::size_t off = 0; off < out.size(); ++off) {
        out.data()[off] = a.at(idx);
        for (std::size_t k = 0; k < out_dims.size(); ++k) {
            if (++idx[k] < out_dims[k]) break;
            idx[k] = 0;
        }
    }
    return out;
}

/// A tensor carried in the transform domain together with the spec that put
/// it there.
struct TransformedTensor {
    ComplexTensor values;
    TransformSpec spec;
};

/// Applies the per-mode forward transforms (modes ascending). Padding must
/// already have happened: odd Haar extents are rejected, never padded here.
template <typename Scalar>
TransformedTensor to_transform_domain(const Tensor<Scalar>& a, const TransformSpec& spec) {
    const auto& dims = a.dims();
    if (dims.size() != spec.padded_dims.size())
        throw DimensionError("to_transform_domain: tensor order does not match spec");
    if (!detail::transformed_modes_match(spec, dims, spec.padded_dims))
        throw DimensionError("to_transform_domain: transformed-mode extents do not match the "
                             "spec's padded shape; apply pad_for_transform first");
    ComplexTensor v = to_complex(a);
    for (std::size_t m : spec.transformed_modes) {
        const auto t = make_transform(spec.kind, v.dims()[m - 1]);
        v = mode_product(v, t.forward, m);
    }
    return TransformedTensor{std::move(v), spec};
}

/// Inverse transforms (modes descending), keeping complex values. For
/// quantities that are genuinely complex in the spatial domain, such as the
/// eigenvector and eigenvalue factors of a real tensor.
inline ComplexTensor from_transform_domain_complex(const TransformedTensor& t) {
    if (t.values.dims().size() != t.spec.padded_dims.size())
        throw DimensionError("from_transform_domain: tensor order does not match spec");
    if (!detail::transformed_modes_match(t.spec, t.values.dims(), t.spec.padded_dims))
        throw DimensionError("from_transform_domain: transformed-mode extents do not match "
                             "the spec's padded shape");
    ComplexTensor v = t.values;
    for (auto it = t.spec.transformed_modes.rbegin(); it != t.spec.transformed_modes.rend(); ++it) {
        const auto tr = make_transform(t.spec.kind, v.dims()[*it - 1]);
        v = mode_product(v, tr.inverse, *it);
    }
    return v;
}

/// Inverse transforms (modes descending) and drops the imaginary part after
/// checking it is negligible: max |imag| <= 1e-8 * ||input||_F.
inline DenseTensor from_transform_domain(const TransformedTensor& t,
                                         bool truncate_padding = false) {
    const double tol = 1e-8 * frobenius_norm(t.values);
    ComplexTensor v = from_transform_domain_complex(t);
    double max_imag = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
        max_imag = std::max(max_imag, std::abs(v.data()[i].imag()));
    if (max_imag > tol)
        throw NonRealResultError("inverse transform left an imaginary residual of " +
                                 std::to_string(max_imag) + " (tolerance " +
                                 std::to_string(tol) + ")");
    std::vector<double> real(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) real[i] = v.data()[i].real();
    DenseTensor out(v.dims(), std::move(real));
    if (truncate_padding) out = unpad_after_transform(out, t.spec);
    return out;
}

}  // namespace tlda
