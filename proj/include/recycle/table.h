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

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "recycle/errors.h"
#include "recycle/mask.h"

namespace recycle {

inline constexpr std::uint64_t kDefaultTableCap = 50'000'000;

enum class TableKind { exact, estimated };

inline const char *kind_name(TableKind k) {
    return k == TableKind::exact ? "exact" : "estimated";
}

inline std::uint64_t checked_sector_size(int m, int w, std::uint64_t cap = kDefaultTableCap) {
    if (m < 0 || m > kMaxModes || w < 0 || w > m) {
        throw ArgumentError("sector (m=" + std::to_string(m) + ", w=" + std::to_string(w) + ") is invalid");
    }
    std::uint64_t size = binomial(m, w);
    if (size > cap) {
        throw CapacityError("sector C(" + std::to_string(m) + "," + std::to_string(w) + ") = " + std::to_string(size) +
                            " exceeds table cap " + std::to_string(cap));
    }
    return size;
}

// Dense values over every m-bit mask with `photons` set bits, stored in colex
// order. Masks without data read as 0.
struct SectorTable {
    int m = 0;
    int photons = 0;
    std::vector<double> values;

    SectorTable() = default;
    SectorTable(int m_, int photons_, std::uint64_t cap = kDefaultTableCap)
        : m(m_), photons(photons_), values(checked_sector_size(m_, photons_, cap), 0.0) {
    }

    std::size_t size() const {
        return values.size();
    }

    std::size_t index(Mask s) const {
        if (popcount(s) != photons || (s & ~low_bits(m)) != 0) {
            throw ArgumentError("mask " + mask_hex(s) + " is not in sector " + std::to_string(photons) + " of m=" +
                                std::to_string(m));
        }
        return static_cast<std::size_t>(colex_rank(s));
    }

    double at(Mask s) const {
        return values[index(s)];
    }

    double &at(Mask s) {
        return values[index(s)];
    }

    std::vector<Mask> masks() const {
        return all_masks(m, photons);
    }

    double sum() const {
        double t = 0.0;
        for (double v : values) {
            t += v;
        }
        return t;
    }
};

struct ProbabilityTable : SectorTable {
    TableKind kind = TableKind::exact;
    // Mass of the no-collision sector before renormalization; NaN when unknown.
    double raw_mass = std::numeric_limits<double>::quiet_NaN();

    ProbabilityTable() = default;
    ProbabilityTable(int m_, int photons_, TableKind kind_, std::uint64_t cap = kDefaultTableCap)
        : SectorTable(m_, photons_, cap), kind(kind_) {
    }

    double mass() const {
        return sum();
    }
};

inline double p_unif(int m, int n) {
    return 1.0 / binomial_real(m, n);
}

// Population variance of the values.
inline double population_variance(const std::vector<double> &v) {
    if (v.empty()) {
        return 0.0;
    }
    double mean = 0.0;
    for (double x : v) {
        mean += x;
    }
    mean /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) {
        s += (x - mean) * (x - mean);
    }
    return s / static_cast<double>(v.size());
}

}  // namespace recycle
