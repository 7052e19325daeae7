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
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "recycle/errors.h"

namespace recycle {

// Bit i set means mode i holds a photon. Modes are limited to 64.
using Mask = std::uint64_t;

inline constexpr int kMaxModes = 64;

inline int popcount(Mask s) {
    return std::popcount(s);
}

inline Mask low_bits(int m) {
    return m >= 64 ? ~Mask{0} : ((Mask{1} << m) - 1);
}

// Exact binomial coefficient; throws when the value does not fit in 64 bits.
inline std::uint64_t binomial(int n, int k) {
    if (k < 0 || n < 0 || k > n) {
        return 0;
    }
    if (k > n - k) {
        k = n - k;
    }
    unsigned __int128 r = 1;
    for (int i = 1; i <= k; i++) {
        r = r * static_cast<unsigned __int128>(n - k + i) / i;
        if (r > UINT64_MAX) {
            throw CapacityError("binomial(" + std::to_string(n) + "," + std::to_string(k) + ") overflows 64 bits");
        }
    }
    return static_cast<std::uint64_t>(r);
}

inline double binomial_real(int n, int k) {
    if (k < 0 || n < 0 || k > n) {
        return 0.0;
    }
    if (k > n - k) {
        k = n - k;
    }
    double r = 1.0;
    for (int i = 1; i <= k; i++) {
        r = r * static_cast<double>(n - k + i) / i;
    }
    return r;
}

struct OccupationMask {
    Mask bits = 0;
    int m = 0;

    OccupationMask() = default;
    OccupationMask(Mask bits_, int m_) : bits(bits_), m(m_) {
        if (m < 0 || m > kMaxModes) {
            throw ArgumentError("mode count out of range: " + std::to_string(m));
        }
        if ((bits & ~low_bits(m)) != 0) {
            throw ArgumentError("mask has bits at or above mode count");
        }
    }
    int photons() const {
        return popcount(bits);
    }
    bool operator==(const OccupationMask &) const = default;
};

// Next larger integer with the same popcount (Gosper). Ascending order of
// equal-weight masks coincides with colexicographic order.
inline Mask next_same_weight(Mask x) {
    Mask c = x & (~x + 1);
    Mask r = x + c;
    return (((r ^ x) >> 2) / c) | r;
}

// Colex rank among masks of the same popcount.
inline std::uint64_t colex_rank(Mask s) {
    std::uint64_t r = 0;
    int i = 1;
    while (s) {
        int p = std::countr_zero(s);
        r += binomial(p, i);
        s &= s - 1;
        i++;
    }
    return r;
}

inline Mask colex_unrank(std::uint64_t rank, int w, int m) {
    Mask s = 0;
    int hi = m - 1;
    for (int i = w; i >= 1; i--) {
        int p = i - 1;
        while (p + 1 <= hi && binomial(p + 1, i) <= rank) {
            p++;
        }
        rank -= binomial(p, i);
        s |= Mask{1} << p;
        hi = p - 1;
    }
    return s;
}

// Calls f(mask) for every m-bit mask with w set bits, in colex order.
template <typename F>
void for_each_mask(int m, int w, F &&f) {
    if (w < 0 || w > m) {
        return;
    }
    if (w == 0) {
        f(Mask{0});
        return;
    }
    Mask last = low_bits(m) & ~low_bits(m - w);
    Mask s = low_bits(w);
    while (true) {
        f(s);
        if (s == last) {
            break;
        }
        s = next_same_weight(s);
    }
}

inline std::vector<Mask> all_masks(int m, int w) {
    std::vector<Mask> out;
    if (w >= 0 && w <= m) {
        out.reserve(binomial(m, w));
    }
    for_each_mask(m, w, [&](Mask s) { out.push_back(s); });
    return out;
}

// Calls f(sub) for every subset of `pool` holding exactly j bits.
template <typename F>
void for_each_subset(Mask pool, int j, F &&f) {
    int p = popcount(pool);
    if (j < 0 || j > p) {
        return;
    }
    int pos[64];
    int c = 0;
    for (Mask t = pool; t; t &= t - 1) {
        pos[c++] = std::countr_zero(t);
    }
    for_each_mask(p, j, [&](Mask idx) {
        Mask out = 0;
        for (Mask t = idx; t; t &= t - 1) {
            out |= Mask{1} << pos[std::countr_zero(t)];
        }
        f(out);
    });
}

// Every mask reachable from s by losing exactly k photons. Size C(n,k).
inline std::vector<Mask> loss_descendants(Mask s, int k) {
    int n = popcount(s);
    if (k < 0 || k > n) {
        throw ArgumentError("loss_descendants: k=" + std::to_string(k) + " outside [0," + std::to_string(n) + "]");
    }
    std::vector<Mask> out;
    out.reserve(binomial(n, k));
    for_each_subset(s, k, [&](Mask cleared) { out.push_back(s & ~cleared); });
    return out;
}

// Every n-photon mask that could have produced s after k losses.
// Size C(m-n+k,k).
inline std::vector<Mask> fill_ancestors(Mask s, int k, int m) {
    if (m < 0 || m > kMaxModes || (s & ~low_bits(m)) != 0) {
        throw ArgumentError("fill_ancestors: mask does not fit in m modes");
    }
    int w = popcount(s);
    if (k < 1 || w + k > m) {
        throw ArgumentError("fill_ancestors: need 1 <= k <= m - popcount(s), got k=" + std::to_string(k));
    }
    Mask free = low_bits(m) & ~s;
    std::vector<Mask> out;
    out.reserve(binomial(m - w, k));
    for_each_subset(free, k, [&](Mask added) { out.push_back(s | added); });
    return out;
}

inline std::vector<Mask> fill_ancestors(Mask s, int k, int m, int n) {
    if (popcount(s) != n - k) {
        throw ArgumentError("fill_ancestors: popcount(s) != n - k");
    }
    if (n > m) {
        throw ArgumentError("fill_ancestors: n > m");
    }
    return fill_ancestors(s, k, m);
}

inline std::string mask_hex(Mask s) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "0x%llx", static_cast<unsigned long long>(s));
    return buf;
}

inline Mask parse_mask_hex(const std::string &text) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(text, &used, 16);
    } catch (const std::exception &) {
        throw ArgumentError("bad mask literal: " + text);
    }
    if (used != text.size()) {
        throw ArgumentError("bad mask literal: " + text);
    }
    return static_cast<Mask>(v);
}

// Mode indices of set bits, ascending.
inline std::vector<int> mask_modes(Mask s) {
    std::vector<int> out;
    for (; s; s &= s - 1) {
        out.push_back(std::countr_zero(s));
    }
    return out;
}

inline Mask modes_to_mask(const std::vector<int> &modes) {
    Mask s = 0;
    for (int i : modes) {
        s |= Mask{1} << i;
    }
    return s;
}

}  // namespace recycle
