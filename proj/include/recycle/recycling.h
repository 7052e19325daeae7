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
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "recycle/errors.h"
#include "recycle/loss.h"
#include "recycle/mask.h"
#include "recycle/table.h"

namespace recycle {

// C(m-n+k,k): how many n-photon outcomes collapse onto one (n-k)-photon outcome.
inline double ancestor_count(int m, int n, int k) {
    return binomial_real(m - n + k, k);
}

struct RecycledTable : SectorTable {
    int k = 0;
    TableKind kind = TableKind::exact;
    double norm_factor = 1.0;

    RecycledTable() = default;
    RecycledTable(int m_, int n_, int k_, TableKind kind_, std::uint64_t cap = kDefaultTableCap)
        : SectorTable(m_, n_, cap), k(k_), kind(kind_), norm_factor(1.0 / ancestor_count(m_, n_, k_)) {
    }

    double pre_normalization_sum() const {
        return sum() / norm_factor;
    }
};

struct MixingCoefficients {
    double n_k = 0.0;        // C(m-n+k,k) C(n,k)
    double n_prime_k = 0.0;  // (C(m-n+k,k) - 1) C(n,k)
    double signal = 0.0;     // 1 / C(m-n+k,k)
    double mix = 0.0;        // N'_k / N_k
};

inline MixingCoefficients mixing_coefficients(int m, int n, int k) {
    MixingCoefficients c;
    double a = ancestor_count(m, n, k);
    double l = binomial_real(n, k);
    c.n_k = a * l;
    c.n_prime_k = (a - 1.0) * l;
    c.signal = 1.0 / a;
    c.mix = c.n_prime_k / c.n_k;
    return c;
}

inline void check_recycling_k(int n, int k) {
    if (k < 1 || k > n - 1) {
        throw ArgumentError("recycling needs 1 <= k <= n-1, got k=" + std::to_string(k) + " with n=" +
                            std::to_string(n));
    }
}

// Recycled values over all n-photon masks from an (n-k)-photon sector table.
inline RecycledTable recycled_table(const ProbabilityTable &sector, int n, std::uint64_t cap = kDefaultTableCap) {
    const int k = n - sector.photons;
    check_recycling_k(n, k);
    RecycledTable out(sector.m, n, k, sector.kind, cap);
    std::size_t idx = 0;
    for_each_mask(sector.m, n, [&](Mask t) {
        double acc = 0.0;
        for_each_subset(t, k, [&](Mask cleared) { acc += sector.values[colex_rank(t & ~cleared)]; });
        out.values[idx++] = acc * out.norm_factor;
    });
    return out;
}

inline RecycledTable recycled_table(const SampleLedger &ledger, int k, std::uint64_t cap = kDefaultTableCap) {
    check_recycling_k(ledger.n, k);
    checked_sector_size(ledger.m, ledger.n, cap);
    return recycled_table(sector_estimates(ledger, k), ledger.n, cap);
}

inline RecycledTable recycled_table_exact(const ProbabilityTable &ideal, int k,
                                          std::uint64_t cap = kDefaultTableCap) {
    check_recycling_k(ideal.photons, k);
    return recycled_table(lossy_conditional_distribution(ideal, k), ideal.photons, cap);
}

// Single recycled value straight from ledger counts.
inline double recycled_estimate(const SampleLedger &ledger, Mask target, int k) {
    check_recycling_k(ledger.n, k);
    if (popcount(target) != ledger.n) {
        throw ArgumentError("recycled_estimate: target must hold n photons");
    }
    double acc = 0.0;
    for (Mask s : loss_descendants(target, k)) {
        acc += estimate_probability(ledger, s, k);
    }
    return acc / ancestor_count(ledger.m, ledger.n, k);
}

struct InterferenceRecord {
    Mask mask = 0;
    double value = 0.0;
    double signal_coeff = 0.0;
    double mix_coeff = 0.0;
};

// I_{s,k}: average of ideal probabilities of every other n-photon outcome that
// shares a k-loss descendant with the target, with multiplicity.
inline InterferenceRecord interference_term_exact(const ProbabilityTable &ideal, Mask target, int k) {
    if (ideal.kind != TableKind::exact) {
        throw ArgumentError("interference_term_exact needs an exact table");
    }
    const int n = ideal.photons;
    if (k < 1 || k > n) {
        throw ArgumentError("interference_term_exact: k outside [1,n]");
    }
    if (popcount(target) != n) {
        throw ArgumentError("interference_term_exact: target must hold n photons");
    }
    MixingCoefficients c = mixing_coefficients(ideal.m, n, k);
    double acc = 0.0;
    for (Mask s : loss_descendants(target, k)) {
        for (Mask t : fill_ancestors(s, k, ideal.m)) {
            if (t != target) {
                acc += ideal.values[colex_rank(t)];
            }
        }
    }
    return {target, acc / c.n_prime_k, c.signal, c.mix};
}

inline SectorTable interference_table(const ProbabilityTable &ideal, int k) {
    SectorTable out(ideal.m, ideal.photons);
    std::size_t idx = 0;
    for_each_mask(ideal.m, ideal.photons, [&](Mask t) { out.values[idx++] = interference_term_exact(ideal, t, k).value; });
    return out;
}

// D = C(m,n)^{-1} sum |v - p_unif| over every n-photon mask.
inline double abs_avg_deviation(const SectorTable &table) {
    const double pu = p_unif(table.m, table.photons);
    double acc = 0.0;
    for (double v : table.values) {
        acc += std::abs(v - pu);
    }
    return acc / static_cast<double>(table.size());
}

enum class DependencyFormula {
    // (1/(C-1)) (C D_k/D_0 - 1/C), as printed for the estimator.
    literal,
    // Inverse of D_k = (1/C + d (C-1)/C) D_0.
    affine_inverse,
};

struct DependencyResult {
    double d = 0.0;
    bool out_of_range = false;
};

inline DependencyResult dependency_factor(double d_k, double d_0, int m, int n, int k,
                                          DependencyFormula formula = DependencyFormula::literal) {
    if (!(d_0 > 0.0)) {
        throw ArgumentError("dependency factor undefined: D_0 = 0");
    }
    const double c = ancestor_count(m, n, k);
    if (c <= 1.0) {
        throw ArgumentError("dependency factor undefined: C(m-n+k,k) = 1");
    }
    DependencyResult r;
    if (formula == DependencyFormula::literal) {
        r.d = (c * d_k / d_0 - 1.0 / c) / (c - 1.0);
    } else {
        r.d = (c * d_k / d_0 - 1.0) / (c - 1.0);
    }
    r.out_of_range = !(r.d >= 0.0 && r.d <= 1.0);
    return r;
}

struct DeviationStats {
    std::map<int, double> D;
    double p_unif = 0.0;
    std::map<int, DependencyResult> d;
};

// D_0 from the n-photon table and D_k, d_k for each recycled table.
inline DeviationStats deviation_stats(const SectorTable &n_photon, const std::vector<RecycledTable> &recycled,
                                      DependencyFormula formula = DependencyFormula::literal) {
    DeviationStats s;
    s.p_unif = p_unif(n_photon.m, n_photon.photons);
    s.D[0] = abs_avg_deviation(n_photon);
    for (const auto &r : recycled) {
        s.D[r.k] = abs_avg_deviation(r);
        if (s.D[0] > 0.0) {
            s.d[r.k] = dependency_factor(s.D[r.k], s.D[0], r.m, r.photons, r.k, formula);
        }
    }
    return s;
}

inline void write_recycled_table(const RecycledTable &t, const std::string &csv_path, const std::string &json_path) {
    std::ofstream f(csv_path, std::ios::binary);
    if (!f) {
        throw ConfigError("cannot write " + csv_path);
    }
    f.precision(17);
    f << "mask_hex,value\n";
    std::size_t idx = 0;
    for_each_mask(t.m, t.photons, [&](Mask s) { f << mask_hex(s) << "," << t.values[idx++] << "\n"; });
    std::ofstream j(json_path, std::ios::binary);
    if (!j) {
        throw ConfigError("cannot write " + json_path);
    }
    nlohmann::json meta = {{"m", t.m}, {"n", t.photons}, {"k", t.k}, {"kind", kind_name(t.kind)},
                           {"norm_factor", t.norm_factor}};
    j << meta.dump(2) << "\n";
}

}  // namespace recycle
