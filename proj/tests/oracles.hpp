// SPDX-License-Identifier: Apache-2.0
//
// Independent reference implementations used to cross-check the library:
// straightforward loop nests over explicit multi-indices, no shared code with
// the implementations under test beyond the container itself.
#pragma once

#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "tlda/tensor.hpp"
#include "tlda/transforms.hpp"

namespace oracle {

using tlda::Complex;
using tlda::ComplexTensor;
using tlda::DenseTensor;

/// All 0-based multi-indices of a shape, in storage order (mode 1 fastest).
inline std::vector<std::vector<std::size_t>> multi_indices(const std::vector<std::size_t>& dims) {
    std::vector<std::vector<std::size_t>> out;
    std::size_t total = 1;
    for (std::size_t d : dims) total *= d;
    std::vector<std::size_t> idx(dims.size(), 0);
    for (std::size_t i = 0; i < total; ++i) {
        out.push_back(idx);
        for (std::size_t k = 0; k < dims.size(); ++k) {
            if (++idx[k] < dims[k]) break;
            idx[k] = 0;
        }
    }
    return out;
}

/// Column position of a multi-index in the mode-k unfolding: remaining modes
/// ascending, earliest fastest.
inline std::size_t unfold_col(const std::vector<std::size_t>& dims,
                              const std::vector<std::size_t>& idx, std::size_t mode) {
    std::size_t col = 0, stride = 1;
    for (std::size_t k = 0; k < dims.size(); ++k) {
        if (k == mode - 1) continue;
        col += stride * idx[k];
        stride *= dims[k];
    }
    return col;
}

template <typename Scalar>
tlda::Matrix<Scalar> naive_unfold(const tlda::Tensor<Scalar>& a, std::size_t mode) {
    const auto& dims = a.dims();
    std::size_t cols = 1;
    for (std::size_t k = 0; k < dims.size(); ++k)
        if (k != mode - 1) cols *= dims[k];
    tlda::Matrix<Scalar> m(dims[mode - 1], cols);
    for (const auto& idx : multi_indices(dims))
        m(static_cast<Eigen::Index>(idx[mode - 1]),
          static_cast<Eigen::Index>(unfold_col(dims, idx, mode))) = a.at(idx);
    return m;
}

template <typename Scalar, typename ScalarU>
auto naive_mode_product(const tlda::Tensor<Scalar>& a,
                        const tlda::Matrix<ScalarU>& u, std::size_t mode) {
    using Out = decltype(Scalar() * ScalarU());
    std::vector<std::size_t> out_dims = a.dims();
    out_dims[mode - 1] = static_cast<std::size_t>(u.rows());
    tlda::Tensor<Out> out(out_dims);
    for (const auto& idx : multi_indices(out_dims)) {
        Out acc{};
        std::vector<std::size_t> src = idx;
        for (std::size_t j = 0; j < a.dims()[mode - 1]; ++j) {
            src[mode - 1] = j;
            acc += Out(u(static_cast<Eigen::Index>(idx[mode - 1]),
                         static_cast<Eigen::Index>(j))) *
                   Out(a.at(src));
        }
        out.at(idx) = acc;
    }
    return out;
}

template <typename Scalar>
tlda::Tensor<Scalar> naive_facewise(const tlda::Tensor<Scalar>& a,
                                    const tlda::Tensor<Scalar>& b) {
    std::vector<std::size_t> dims = a.dims();
    dims[1] = b.dims()[1];
    tlda::Tensor<Scalar> c(dims);
    for (const auto& idx : multi_indices(dims)) {
        Scalar acc{};
        auto ia = idx;
        auto ib = idx;
        for (std::size_t j = 0; j < a.dims()[1]; ++j) {
            ia[1] = j;
            ib[0] = j;
            ib[1] = idx[1];
            ia[0] = idx[0];
            acc += a.at(ia) * b.at(ib);
        }
        c.at(idx) = acc;
    }
    return c;
}

/// Transform matrices straight from their defining formulas.
inline Eigen::MatrixXcd transform_matrix(tlda::TransformKind kind, std::size_t m) {
    const auto mm = static_cast<Eigen::Index>(m);
    Eigen::MatrixXcd t(mm, mm);
    switch (kind) {
        case tlda::TransformKind::Identity:
            return Eigen::MatrixXcd::Identity(mm, mm);
        case tlda::TransformKind::Dft:
            for (std::size_t f = 0; f < m; ++f)
                for (std::size_t j = 0; j < m; ++j)
                    t(f, j) = std::polar(1.0 / std::sqrt(double(m)),
                                         -2.0 * std::numbers::pi * double(f) * double(j) / double(m));
            return t;
        case tlda::TransformKind::Dct:
            for (std::size_t f = 0; f < m; ++f)
                for (std::size_t j = 0; j < m; ++j)
                    t(f, j) = std::sqrt((f == 0 ? 1.0 : 2.0) / double(m)) *
                              std::cos(std::numbers::pi * (2.0 * j + 1.0) * f / (2.0 * m));
            return t;
        case tlda::TransformKind::Haar: {
            t.setZero();
            const double r = std::sqrt(0.5);
            for (std::size_t k = 0; k < m / 2; ++k) {
                t(k, 2 * k) = r;
                t(k, 2 * k + 1) = r;
                t(m / 2 + k, 2 * k) = r;
                t(m / 2 + k, 2 * k + 1) = -r;
            }
            return t;
        }
    }
    return t;
}

/// The product algorithm spelled out: transform every operand mode by mode,
/// multiply matching frontal slices, inverse transform mode by mode.
inline DenseTensor naive_tl_product(const DenseTensor& a, const DenseTensor& b,
                                    const tlda::TransformSpec& spec) {
    ComplexTensor ta = tlda::to_complex(a);
    ComplexTensor tb = tlda::to_complex(b);
    for (std::size_t mode : spec.transformed_modes) {
        ta = naive_mode_product(ta, Eigen::MatrixXcd(transform_matrix(spec.kind, ta.dims()[mode - 1])),
                                mode);
        tb = naive_mode_product(tb, Eigen::MatrixXcd(transform_matrix(spec.kind, tb.dims()[mode - 1])),
                                mode);
    }
    ComplexTensor tc = naive_facewise(ta, tb);
    for (auto it = spec.transformed_modes.rbegin(); it != spec.transformed_modes.rend(); ++it) {
        Eigen::MatrixXcd inv = transform_matrix(spec.kind, tc.dims()[*it - 1]).adjoint();
        tc = naive_mode_product(tc, inv, *it);
    }
    std::vector<double> real(tc.size());
    for (std::size_t i = 0; i < tc.size(); ++i) real[i] = tc.data()[i].real();
    return DenseTensor(tc.dims(), std::move(real));
}

/// Direct O(m^2) DFT of one fiber.
inline std::vector<Complex> dft_fiber(const std::vector<Complex>& x) {
    const std::size_t m = x.size();
    std::vector<Complex> out(m);
    for (std::size_t f = 0; f < m; ++f) {
        Complex acc{};
        for (std::size_t j = 0; j < m; ++j)
            acc += x[j] * std::polar(1.0, -2.0 * std::numbers::pi * double(f) * double(j) / double(m));
        out[f] = acc / std::sqrt(double(m));
    }
    return out;
}

inline double max_abs_diff(const DenseTensor& a, const DenseTensor& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

inline double rel_frob_diff(const DenseTensor& a, const DenseTensor& b) {
    DenseTensor d = a;
    d -= b;
    const double ref = std::max(tlda::frobenius_norm(a), tlda::frobenius_norm(b));
    return ref == 0.0 ? tlda::frobenius_norm(d) : tlda::frobenius_norm(d) / ref;
}

inline DenseTensor real_part(const tlda::ComplexTensor& a) {
    std::vector<double> values(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) values[i] = a.data()[i].real();
    return DenseTensor(a.dims(), std::move(values));
}

inline double max_abs_imag(const tlda::ComplexTensor& a) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i].imag()));
    return m;
}

/// Relative distance between a complex result and the real tensor it should
/// reduce to: Frobenius norm of (a - b) over the norm of b.
inline double rel_diff_vs_real(const tlda::ComplexTensor& a, const DenseTensor& b) {
    double num = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const tlda::Complex d = a.data()[i] - tlda::Complex(b.data()[i]);
        num += std::norm(d);
    }
    const double ref = tlda::frobenius_norm(b);
    return ref == 0.0 ? std::sqrt(num) : std::sqrt(num) / ref;
}

/// Deterministic test-data generators.
inline DenseTensor random_tensor(const std::vector<std::size_t>& dims, std::uint64_t seed,
                                 double scale = 1.0) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(-scale, scale);
    DenseTensor t(dims);
    for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = u(gen);
    return t;
}

inline std::vector<std::size_t> random_dims(std::mt19937_64& gen, std::size_t order_min,
                                            std::size_t order_max, std::size_t dim_max) {
    std::uniform_int_distribution<std::size_t> od(order_min, order_max);
    std::uniform_int_distribution<std::size_t> dd(1, dim_max);
    std::vector<std::size_t> dims(od(gen));
    for (auto& d : dims) d = dd(gen);
    return dims;
}

}  // namespace oracle
