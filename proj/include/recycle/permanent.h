// Copyright 2026 The photon-recycling Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <bit>
#include <complex>
#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "recycle/errors.h"

namespace recycle {

inline constexpr int kMaxPermanentSize = 24;

// Ryser's formula in the Nijenhuis-Wilf arrangement: Gray-code walk over
// subsets of the first n-1 columns, 2^(n-1) products of n row sums.
template <typename Derived>
typename Derived::Scalar permanent(const Eigen::MatrixBase<Derived> &a) {
    using Scalar = typename Derived::Scalar;
    const Eigen::Index n = a.rows();
    if (a.cols() != n) {
        throw ArgumentError("permanent: matrix is not square");
    }
    if (n < 1) {
        throw ArgumentError("permanent: empty matrix");
    }
    if (n > kMaxPermanentSize) {
        throw CapacityError("permanent: size " + std::to_string(n) + " exceeds cap " +
                            std::to_string(kMaxPermanentSize));
    }
    if (n == 1) {
        return a(0, 0);
    }
    Scalar x[kMaxPermanentSize];
    for (Eigen::Index i = 0; i < n; i++) {
        Scalar row = Scalar(0);
        for (Eigen::Index j = 0; j < n; j++) {
            row += a(i, j);
        }
        x[i] = a(i, n - 1) - row * typename Eigen::NumTraits<Scalar>::Real(0.5);
    }
    auto prod = [&]() {
        Scalar p = x[0];
        for (Eigen::Index i = 1; i < n; i++) {
            p *= x[i];
        }
        return p;
    };
    Scalar total = prod();
    const std::uint64_t steps = std::uint64_t{1} << (n - 1);
    std::uint64_t gray = 0;
    for (std::uint64_t g = 1; g < steps; g++) {
        int j = std::countr_zero(g);
        gray ^= std::uint64_t{1} << j;
        bool added = (gray >> j) & 1;
        if (added) {
            for (Eigen::Index i = 0; i < n; i++) {
                x[i] += a(i, j);
            }
        } else {
            for (Eigen::Index i = 0; i < n; i++) {
                x[i] -= a(i, j);
            }
        }
        if (g & 1) {
            total -= prod();
        } else {
            total += prod();
        }
    }
    Scalar two = Scalar(2);
    return (n % 2 == 0 ? -two : two) * total;
}

}  // namespace recycle
