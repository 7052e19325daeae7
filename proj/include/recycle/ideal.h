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

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "recycle/errors.h"
#include "recycle/interferometer.h"
#include "recycle/mask.h"
#include "recycle/permanent.h"
#include "recycle/table.h"

namespace recycle {

struct InputConfig {
    int m = 0;
    int n = 0;
    std::vector<int> occupied_modes;

    static InputConfig first_modes(int m, int n) {
        InputConfig c{m, n, {}};
        for (int i = 0; i < n; i++) {
            c.occupied_modes.push_back(i);
        }
        return c;
    }

    void validate() const {
        if (m < 1 || m > kMaxModes || n < 1 || n > m) {
            throw ArgumentError("input config needs 1 <= n <= m <= 64");
        }
        if (static_cast<int>(occupied_modes.size()) != n) {
            throw ArgumentError("input config lists " + std::to_string(occupied_modes.size()) + " modes for n=" +
                                std::to_string(n));
        }
        std::vector<int> s = occupied_modes;
        std::sort(s.begin(), s.end());
        for (std::size_t i = 0; i < s.size(); i++) {
            if (s[i] < 0 || s[i] >= m || (i > 0 && s[i] == s[i - 1])) {
                throw ArgumentError("input modes must be distinct and < m");
            }
        }
    }

    std::vector<int> sorted_modes() const {
        std::vector<int> s = occupied_modes;
        std::sort(s.begin(), s.end());
        return s;
    }
};

enum class CollisionPolicy { discard_renormalize, reject_if_mass_low };

struct CollisionOptions {
    CollisionPolicy policy = CollisionPolicy::discard_renormalize;
    double mass_floor = 0.5;
};

// |Per(U_{T,S})|^2 for every n-photon no-collision outcome S, unnormalized.
// Rows follow the input modes ascending, columns the output modes ascending.
inline ProbabilityTable no_collision_probabilities(const Interferometer &itf, const InputConfig &cfg) {
    cfg.validate();
    if (itf.dim() != cfg.m) {
        throw ArgumentError("interferometer dimension does not match m");
    }
    const int n = cfg.n;
    std::vector<int> rows = cfg.sorted_modes();
    ProbabilityTable t(cfg.m, n, TableKind::exact);
    Eigen::MatrixXcd minor(n, n);
    std::size_t idx = 0;
    for_each_mask(cfg.m, n, [&](Mask s) {
        int c = 0;
        for (Mask b = s; b; b &= b - 1, c++) {
            int col = std::countr_zero(b);
            for (int r = 0; r < n; r++) {
                minor(r, c) = itf.u(rows[r], col);
            }
        }
        t.values[idx++] = std::norm(permanent(minor));
    });
    t.raw_mass = t.sum();
    return t;
}

inline ProbabilityTable ideal_distribution(const Interferometer &itf, const InputConfig &cfg,
                                           CollisionOptions opts = {}) {
    ProbabilityTable t = no_collision_probabilities(itf, cfg);
    if (opts.policy == CollisionPolicy::reject_if_mass_low && t.raw_mass < opts.mass_floor) {
        throw RegimeError("no-collision assumption violated: sector mass " + std::to_string(t.raw_mass) +
                          " below floor " + std::to_string(opts.mass_floor));
    }
    if (!(t.raw_mass > 0.0)) {
        throw RegimeError("no-collision assumption violated: sector mass is zero");
    }
    for (double &v : t.values) {
        v /= t.raw_mass;
    }
    return t;
}

}  // namespace recycle
