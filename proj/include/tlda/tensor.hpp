// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tlda/errors.hpp"
#include "tlda/parallel.hpp"

namespace tlda {

using Complex = std::complex<double>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

namespace detail {

inline std::size_t checked_product(const std::vector<std::size_t>& dims) {
    std::size_t n = 1;
    for (std::size_t d : dims) {
        if (d != 0 && n > static_cast<std::size_t>(-1) / d)
            throw DimensionError("tensor size overflows std::size_t");
        n *= d;
    }
    return n;
}

inline double abs_sq(double x) { return x * x; }
inline double abs_sq(const Complex& x) { return std::norm(x); }

}  // namespace detail

/// Dense order-n tensor (n >= 2). Entries are stored mode-1-fastest
/// (generalized column-major): (i1,...,in) lives at linear offset
/// i1 + m1*(i2 + m2*(i3 + ...)). Element indices are 0-based; modes are
/// numbered from 1 as in the usual multilinear convention.
template <typename Scalar>
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
        validate_dims();
        data_.assign(detail::checked_product(dims_), Scalar(0));
    }

    Tensor(std::vector<std::size_t> dims, std::vector<Scalar> data)
        : dims_(std::move(dims)), data_(std::move(data)) {
        validate_dims();
        if (data_.size() != detail::checked_product(dims_))
            throw DimensionError("tensor data has " + std::to_string(data_.size()) +
                                 " entries, dims require " +
                                 std::to_string(detail::checked_product(dims_)));
    }

    std::size_t order() const noexcept { return dims_.size(); }
    const std::vector<std::size_t>& dims() const noexcept { return dims_; }
    std::size_t size() const noexcept { return data_.size(); }

    /// Extent of a 1-based mode.
    std::size_t dim(std::size_t mode) const {
        if (mode < 1 || mode > dims_.size())
            throw ModeIndexError("mode " + std::to_string(mode) + " outside 1.." +
                                 std::to_string(dims_.size()));
        return dims_[mode - 1];
    }

    Scalar* data() noexcept { return data_.data(); }
    const Scalar* data() const noexcept { return data_.data(); }
    std::vector<Scalar>& storage() noexcept { return data_; }
    const std::vector<Scalar>& storage() const noexcept { return data_; }

    template <typename... Ix>
    Scalar& operator()(Ix... ix) {
        return data_[offset_of({static_cast<std::size_t>(ix)...})];
    }
    template <typename... Ix>
    const Scalar& operator()(Ix... ix) const {
        return data_[offset_of({static_cast<std::size_t>(ix)...})];
    }

    Scalar& at(const std::vector<std::size_t>& idx) { return data_[offset_of(idx)]; }
    const Scalar& at(const std::vector<std::size_t>& idx) const {
        return data_[offset_of(idx)];
    }

    /// Linear offset of a full 0-based multi-index, bounds-checked.
    std::size_t offset_of(const std::vector<std::size_t>& idx) const {
        if (idx.size() != dims_.size())
            throw DimensionError("index has " + std::to_string(idx.size()) +
                                 " components, tensor order is " +
                                 std::to_string(dims_.size()));
        std::size_t off = 0, stride = 1;
        for (std::size_t k = 0; k < dims_.size(); ++k) {
            if (idx[k] >= dims_[k])
                throw DimensionError("index " + std::to_string(idx[k]) +
                                     " out of range for mode " + std::to_string(k + 1) +
                                     " of extent " + std::to_string(dims_[k]));
            off += stride * idx[k];
            stride *= dims_[k];
        }
        return off;
    }

    Tensor& operator+=(const Tensor& o) {
        require_same_dims(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    Tensor& operator-=(const Tensor& o) {
        require_same_dims(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    Tensor& operator*=(Scalar s) {
        for (auto& v : data_) v *= s;
        return *this;
    }
    friend Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
    friend Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
    friend Tensor operator*(Tensor a, Scalar s) { return a *= s; }
    friend Tensor operator*(Scalar s, Tensor a) { return a *= s; }

private:
    void validate_dims() const {
        if (dims_.size() < 2)
            throw DimensionError("tensor order must be at least 2, got " +
                                 std::to_string(dims_.size()));
    }
    void require_same_dims(const Tensor& o) const {
        if (dims_ != o.dims_)
            throw DimensionError("elementwise op on tensors of different shapes");
    }

    std::vector<std::size_t> dims_;
    std::vector<Scalar> data_;
};

using DenseTensor = Tensor<double>;
using ComplexTensor = Tensor<Complex>;

/// Product of the extents of modes 3..n: the number of frontal slices.
inline std::size_t frontal_count(const std::vector<std::size_t>& dims) {
    std::size_t n = 1;
    for (std::size_t k = 2; k < dims.size(); ++k) n *= dims[k];
    return n;
}

template <typename Scalar>
std::size_t frontal_count(const Tensor<Scalar>& a) {
    return frontal_count(a.dims());
}

/// Frontal slices are contiguous m1 x m2 column-major blocks.
template <typename Scalar>
Eigen::Map<Matrix<Scalar>> frontal(Tensor<Scalar>& a, std::size_t s) {
    const std::size_t m1 = a.dims()[0], m2 = a.dims()[1];
    return Eigen::Map<Matrix<Scalar>>(a.data() + s * m1 * m2, m1, m2);
}

template <typename Scalar>
Eigen::Map<const Matrix<Scalar>> frontal(const Tensor<Scalar>& a, std::size_t s) {
    const std::size_t m1 = a.dims()[0], m2 = a.dims()[1];
    return Eigen::Map<const Matrix<Scalar>>(a.data() + s * m1 * m2, m1, m2);
}

/// 1-based multi-index over modes 3..n of the frontal slice with linear
/// position s; modes enumerate mode-3-fastest.
inline std::vector<std::size_t> frontal_multi_index(
    const std::vector<std::size_t>& dims, std::size_t s) {
    std::vector<std::size_t> idx;
    for (std::size_t k = 2; k < dims.size(); ++k) {
        idx.push_back(s % dims[k] + 1);
        s /= dims[k];
    }
    return idx;
}

/// Mode-k unfolding: rows index mode k, columns enumerate the remaining modes
/// in ascending order with the earliest remaining mode fastest.
template <typename Scalar>
Matrix<Scalar> unfold(const Tensor<Scalar>& a, std::size_t mode) {
    const auto& dims = a.dims();
    if (mode < 1 || mode > dims.size())
        throw ModeIndexError("unfold mode " + std::to_string(mode) + " outside 1.." +
                             std::to_string(dims.size()));
    const std::size_t k = mode - 1;
    std::size_t inner = 1, outer = 1;
    for (std::size_t i = 0; i < k; ++i) inner *= dims[i];
    for (std::size_t i = k + 1; i < dims.size(); ++i) outer *= dims[i];
    const std::size_t mk = dims[k];

    Matrix<Scalar> m(mk, inner * outer);
    const Scalar* src = a.data();
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t r = 0; r < mk; ++r)
            for (std::size_t p = 0; p < inner; ++p)
                m(r, p + inner * o) = src[p + inner * (r + mk * o)];
    return m;
}

/// Inverse of unfold: scatters a mode-k unfolding back into shape dims.
template <typename Scalar>
Tensor<Scalar> fold(const Matrix<Scalar>& m, std::size_t mode,
                    const std::vector<std::size_t>& dims) {
    if (mode < 1 || mode > dims.size())
        throw ModeIndexError("fold mode " + std::to_string(mode) + " outside 1.." +
                             std::to_string(dims.size()));
    const std::size_t k = mode - 1;
    std::size_t inner = 1, outer = 1;
    for (std::size_t i = 0; i < k; ++i) inner *= dims[i];
    for (std::size_t i = k + 1; i < dims.size(); ++i) outer *= dims[i];
    if (static_cast<std::size_t>(m.rows()) != dims[k] ||
        static_cast<std::size_t>(m.cols()) != inner * outer)
        throw DimensionError("fold: matrix is " + std::to_string(m.rows()) + "x" +
                             std::to_string(m.cols()) + ", mode-" + std::to_string(mode) +
                             " unfolding of the target shape is " +
                             std::to_string(dims[k]) + "x" + std::to_string(inner * outer));

    Tensor<Scalar> a(dims);
    Scalar* dst = a.data();
    const std::size_t mk = dims[k];
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t r = 0; r < mk; ++r)
            for (std::size_t p = 0; p < inner; ++p)
                dst[p + inner * (r + mk * o)] = m(r, p + inner * o);
    return a;
}

/// Reinterprets the entries under a new shape with the same element count.
/// The layout rule makes this a pure metadata change.
template <typename Scalar>
Tensor<Scalar> reshape(const Tensor<Scalar>& a, std::vector<std::size_t> dims) {
    if (detail::checked_product(dims) != a.size())
        throw DimensionError("reshape changes element count");
    return Tensor<Scalar>(std::move(dims), a.storage());
}

/// Mode-k product with a matrix u (d x m_k): contracts mode k against the
/// columns of u, i.e. fold(u * unfold(a, k), k) with mode k resized to d.
/// Works on contiguous (inner x m_k) chunks so no unfolding is materialized.
template <typename ScalarA, typename ScalarU>
auto mode_product(const Tensor<ScalarA>& a, const Matrix<ScalarU>& u, std::size_t mode) {
    using Out = decltype(ScalarA() * ScalarU());
    const auto& dims = a.dims();
    if (mode < 1 || mode > dims.size())
        throw ModeIndexError("mode_product mode " + std::to_string(mode) + " outside 1.." +
                             std::to_string(dims.size()));
    const std::size_t k = mode - 1;
    const std::size_t mk = dims[k];
    if (static_cast<std::size_t>(u.cols()) != mk)
        throw DimensionError("mode_product: matrix has " + std::to_string(u.cols()) +
                             " columns, mode " + std::to_string(mode) + " has extent " +
                             std::to_string(mk));
    std::size_t inner = 1, outer = 1;
    for (std::size_t i = 0; i < k; ++i) inner *= dims[i];
    for (std::size_t i = k + 1; i < dims.size(); ++i) outer *= dims[i];

    std::vector<std::size_t> out_dims = dims;
    out_dims[k] = static_cast<std::size_t>(u.rows());
    Tensor<Out> out(out_dims);
    const std::size_t d = out_dims[k];

    const Matrix<Out> ut = u.transpose().template cast<Out>();
    parallel_for(outer, [&, inner, mk, d](std::size_t o) {
        Eigen::Map<const Matrix<ScalarA>> chunk(a.data() + o * inner * mk, inner, mk);
        Eigen::Map<Matrix<Out>> res(out.data() + o * inner * d, inner, d);
        res.noalias() = chunk.template cast<Out>() * ut;
    });
    return out;
}

/// Facewise product: frontal slices of c are the matrix products of the
/// corresponding slices of a (m1 x l x ...) and b (l x m2 x ...).
template <typename Scalar>
Tensor<Scalar> facewise_product(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
    const auto& da = a.dims();
    const auto& db = b.dims();
    if (da.size() != db.size())
        throw DimensionError("facewise_product: operand orders differ (" +
                             std::to_string(da.size()) + " vs " + std::to_string(db.size()) + ")");
    if (da[1] != db[0])
        throw DimensionError("facewise_product: inner extents differ (" +
                             std::to_string(da[1]) + " vs " + std::to_string(db[0]) + ")");
    for (std::size_t k = 2; k < da.size(); ++k)
        if (da[k] != db[k])
            throw DimensionError("facewise_product: mode " + std::to_string(k + 1) +
                                 " extents differ (" + std::to_string(da[k]) + " vs " +
                                 std::to_string(db[k]) + ")");

    std::vector<std::size_t> dc = da;
    dc[1] = db[1];
    Tensor<Scalar> c(dc);
    parallel_for(frontal_count(da), [&](std::size_t s) {
        frontal(c, s).noalias() = frontal(a, s) * frontal(b, s);
    });
    return c;
}

template <typename Scalar>
double frobenius_norm(const Tensor<Scalar>& a) {
    double acc = 0.0;
    const Scalar* p = a.data();
    for (std::size_t i = 0; i < a.size(); ++i) acc += detail::abs_sq(p[i]);
    return std::sqrt(acc);
}

/// Lateral slice j: sample j of a stacked dataset, returned with its
/// singleton mode-2 kept, i.e. shape m1 x 1 x m3 x ... x mn.
template <typename Scalar>
Tensor<Scalar> lateral_slice(const Tensor<Scalar>& a, std::size_t j) {
    const auto& dims = a.dims();
    const std::size_t m1 = dims[0], l = dims[1];
    if (j >= l)
        throw DimensionError("lateral slice " + std::to_string(j) +
                             " out of range for mode-2 extent " + std::to_string(l));
    std::vector<std::size_t> out_dims = dims;
    out_dims[1] = 1;
    Tensor<Scalar> out(out_dims);
    const std::size_t trailing = frontal_count(dims);
    for (std::size_t t = 0; t < trailing; ++t)
        for (std::size_t p = 0; p < m1; ++p)
            out.data()[p + m1 * t] = a.data()[p + m1 * (j + l * t)];
    return out;
}

/// Stacks samples of shape m1 x m2 x ... x mn along a new mode 2, giving
/// m1 x l x m2 x ... x mn. lateral_slice(stack_lateral(S), j) recovers sample
/// j with an inserted singleton mode-2.
template <typename Scalar>
Tensor<Scalar> stack_lateral(const std::vector<Tensor<Scalar>>& samples) {
    if (samples.empty())
        throw DimensionError("stack_lateral: no samples");
    const auto& sd = samples[0].dims();
    for (const auto& s : samples)
        if (s.dims() != sd)
            throw DimensionError("stack_lateral: heterogeneous sample shapes");

    std::vector<std::size_t> out_dims;
    out_dims.push_back(sd[0]);
    out_dims.push_back(samples.size());
    for (std::size_t k = 1; k < sd.size(); ++k) out_dims.push_back(sd[k]);

    Tensor<Scalar> out(out_dims);
    const std::size_t m1 = sd[0], l = samples.size();
    const std::size_t trailing = samples[0].size() / m1;
    for (std::size_t j = 0; j < l; ++j) {
        const Scalar* src = samples[j].data();
        for (std::size_t t = 0; t < trailing; ++t)
            for (std::size_t p = 0; p < m1; ++p)
                out.data()[p + m1 * (j + l * t)] = src[p + m1 * t];
    }
    return out;
}

template <typename Scalar>
ComplexTensor to_complex(const Tensor<Scalar>& a) {
    std::vector<Complex> data(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) data[i] = Complex(a.data()[i]);
    return ComplexTensor(a.dims(), std::move(data));
}

inline ComplexTensor to_complex(const ComplexTensor& a) { return a; }

}  // namespace tlda
