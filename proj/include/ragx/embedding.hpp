#pragma once

#include "ragx/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace ragx {

// Unit-norm embedding, or the all-zero vector reserved for empty text.
using EmbeddingVector = Eigen::VectorXd;

template <typename Derived>
bool is_zero_vector(const Eigen::MatrixBase<Derived>& v) {
    return (v.array() == typename Derived::Scalar(0)).all();
}

// dot(a, b) / (|a| |b|), 0 when either side is the zero vector, clamped to
// [-1, 1]. Exactly symmetric in its arguments.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
    using Scalar = typename DerivedA::Scalar;
    if (a.size() != b.size()) {
        throw Error(ErrorCode::DimensionError, "cosine of vectors with dimensions " + std::to_string(a.size()) +
                                                   " and " + std::to_string(b.size()));
    }
    const Scalar na = a.norm();
    const Scalar nb = b.norm();
    if (na == Scalar(0) || nb == Scalar(0)) return Scalar(0);
    const Scalar c = a.dot(b) / (na * nb);
    return std::clamp(c, Scalar(-1), Scalar(1));
}

// Scales to unit L2 norm; zero stays zero.
template <typename Derived>
typename Derived::PlainObject unit_normalized(const Eigen::MatrixBase<Derived>& v) {
    const auto n = v.norm();
    if (n == 0) return v;
    return v / n;
}

}  // namespace ragx
