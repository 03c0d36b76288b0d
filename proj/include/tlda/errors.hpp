// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace tlda {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Shape or size mismatch between operands.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Mode index outside 1..order.
class ModeIndexError : public Error {
public:
    using Error::Error;
};

/// Invalid parameter value (projection rank out of range, bad fold count, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// An inverse transform produced a non-negligible imaginary part.
class NonRealResultError : public Error {
public:
    using Error::Error;
};

/// Error tied to one frontal slice of a transform-domain tensor; carries the
/// 1-based multi-index of the offending slice over modes 3..n.
class SliceError : public Error {
public:
    SliceError(const std::string& what, std::vector<std::size_t> index)
        : Error(what), index_(std::move(index)) {}
    const std::vector<std::size_t>& slice_index() const noexcept { return index_; }

private:
    std::vector<std::size_t> index_;
};

/// A transform-domain slice is singular to machine precision.
class SingularSliceError : public SliceError {
public:
    using SliceError::SliceError;
};

/// Eigendecomposition of a transform-domain slice failed or is too
/// ill-conditioned to trust.
class NonDiagonalizableError : public SliceError {
public:
    using SliceError::SliceError;
};

/// Malformed binary tensor file.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Malformed label manifest.
class ManifestError : public Error {
public:
    using Error::Error;
};

/// A class with no samples where at least one is required.
class EmptyClassError : public Error {
public:
    using Error::Error;
};

/// A class has too few samples for the requested fold count.
class StratificationError : public Error {
public:
    using Error::Error;
};

/// An eigenvalue list with no energy (all zero) cannot be re-estimated.
class ZeroSpectrumError : public Error {
public:
    using Error::Error;
};

namespace detail {

/// "2-1-3" style rendering of a 1-based slice multi-index.
inline std::string format_multi_index(const std::vector<std::size_t>& idx) {
    std::string out;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (i) out += '-';
        out += std::to_string(idx[i]);
    }
    return out.empty() ? std::string("1") : out;
}

}  // namespace detail

}  // namespace tlda
