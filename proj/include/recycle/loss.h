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
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "recycle/errors.h"
#include "recycle/mask.h"
#include "recycle/table.h"

namespace recycle {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline double uniform01(std::mt19937_64 &rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct LossModel {
    double eta = 0.0;

    explicit LossModel(double eta_ = 0.0) : eta(eta_) {
        if (!(eta >= 0.0 && eta <= 1.0)) {
            throw ArgumentError("loss probability must lie in [0,1]");
        }
    }
};

// Probability that exactly k of n photons are lost.
inline std::vector<double> sector_weights(int n, double eta) {
    if (!(eta >= 0.0 && eta <= 1.0)) {
        throw ArgumentError("loss probability must lie in [0,1]");
    }
    std::vector<double> w(n + 1);
    for (int k = 0; k <= n; k++) {
        w[k] = binomial_real(n, k) * std::pow(eta, k) * std::pow(1.0 - eta, n - k);
    }
    return w;
}

// Distribution over (n-k)-photon outcomes conditioned on exactly k losses.
inline ProbabilityTable lossy_conditional_distribution(const ProbabilityTable &ideal, int k) {
    if (ideal.kind != TableKind::exact) {
        throw ArgumentError("lossy_conditional_distribution needs an exact table");
    }
    const int n = ideal.photons;
    if (k < 0 || k > n) {
        throw ArgumentError("lossy_conditional_distribution: k outside [0,n]");
    }
    ProbabilityTable out(ideal.m, n - k, TableKind::exact);
    const double inv = 1.0 / binomial_real(n, k);
    std::size_t idx = 0;
    for_each_mask(ideal.m, n, [&](Mask t) {
        double p = ideal.values[idx++];
        if (p == 0.0) {
            return;
        }
        for_each_subset(t, k, [&](Mask cleared) { out.values[colex_rank(t & ~cleared)] += p * inv; });
    });
    return out;
}

struct SampleLedger {
    int m = 0;
    int n = 0;
    double eta = 0.0;
    std::uint64_t seed = 0;
    int shards = 1;
    std::uint64_t total = 0;
    std::vector<std::uint64_t> totals_per_k;
    // counts[k] maps surviving masks (n-k photons) to shot counts.
    std::vector<std::map<Mask, std::uint64_t>> counts;

    SampleLedger() = default;
    SampleLedger(int m_, int n_) : m(m_), n(n_), totals_per_k(n_ + 1, 0), counts(n_ + 1) {
    }

    std::uint64_t count(int k, Mask s) const {
        auto it = counts[k].find(s);
        return it == counts[k].end() ? 0 : it->second;
    }

    void add(int k, Mask s, std::uint64_t c = 1) {
        counts[k][s] += c;
        totals_per_k[k] += c;
        total += c;
    }

    void check_invariants() const {
        std::uint64_t t = 0;
        for (int k = 0; k <= n; k++) {
            std::uint64_t sk = 0;
            for (const auto &[s, c] : counts[k]) {
                if (popcount(s) != n - k) {
                    throw ArgumentError("ledger mask " + mask_hex(s) + " has wrong popcount for k=" + std::to_string(k));
                }
                sk += c;
            }
            if (sk != totals_per_k[k]) {
                throw ArgumentError("ledger sector total mismatch at k=" + std::to_string(k));
            }
            t += sk;
        }
        if (t != total) {
            throw ArgumentError("ledger total mismatch");
        }
    }

    bool operator==(const SampleLedger &) const = default;
};

// Each shot draws an ideal outcome, then drops every photon independently with
// probability eta. Shard s uses the generator seeded by splitmix64(seed ^ s).
inline SampleLedger draw_samples(const ProbabilityTable &ideal, LossModel loss, std::uint64_t n_tot,
                                 std::uint64_t seed, int shards = 1) {
    if (shards < 1) {
        throw ArgumentError("shards must be >= 1");
    }
    const double mass = ideal.mass();
    if (std::abs(mass - 1.0) > 1e-9) {
        throw ArgumentError("draw_samples needs a normalized ideal table");
    }
    std::vector<double> cdf(ideal.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < ideal.size(); i++) {
        acc += ideal.values[i];
        cdf[i] = acc;
    }
    std::vector<Mask> masks = ideal.masks();
    const int n = ideal.photons;
    const int m = ideal.m;

    std::vector<SampleLedger> parts(shards, SampleLedger(m, n));
    auto run = [&](int s) {
        std::uint64_t shots = n_tot / shards + (static_cast<std::uint64_t>(s) < n_tot % shards ? 1 : 0);
        std::mt19937_64 rng(splitmix64(seed ^ static_cast<std::uint64_t>(s)));
        SampleLedger &part = parts[s];
        for (std::uint64_t i = 0; i < shots; i++) {
            double u = uniform01(rng) * acc;
            std::size_t j = std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
            if (j >= cdf.size()) {
                j = cdf.size() - 1;
            }
            while (ideal.values[j] == 0.0 && j > 0) {
                j--;
            }
            Mask t = masks[j];
            Mask kept = t;
            for (Mask b = t; b; b &= b - 1) {
                if (uniform01(rng) < loss.eta) {
                    kept &= ~(b & (~b + 1));
                }
            }
            part.add(n - popcount(kept), kept);
        }
    };
    if (shards == 1) {
        run(0);
    } else {
        std::vector<std::thread> pool;
        for (int s = 0; s < shards; s++) {
            pool.emplace_back(run, s);
        }
        for (auto &th : pool) {
            th.join();
        }
    }
    SampleLedger out(m, n);
    out.eta = loss.eta;
    out.seed = seed;
    out.shards = shards;
    for (const auto &part : parts) {
        for (int k = 0; k <= n; k++) {
            for (const auto &[s, c] : part.counts[k]) {
                out.add(k, s, c);
            }
        }
    }
    return out;
}

// Relative frequency of mask within sector k. With divide_sample_groups the
// shots are split uniformly at random into C(m,n) groups and only the group
// designated for this mask is used.
inline double estimate_probability(const SampleLedger &ledger, Mask s, int k, bool divide_sample_groups = false) {
    if (k < 0 || k > ledger.n) {
        throw ArgumentError("estimate_probability: k outside [0,n]");
    }
    if (popcount(s) != ledger.n - k) {
        throw ArgumentError("estimate_probability: mask " + mask_hex(s) + " does not have n-k photons");
    }
    std::uint64_t c = ledger.count(k, s);
    std::uint64_t tot = ledger.totals_per_k[k];
    if (tot == 0) {
        throw EstimateUndefined("sector k=" + std::to_string(k) + " has no samples", k);
    }
    if (!divide_sample_groups) {
        return static_cast<double>(c) / static_cast<double>(tot);
    }
    const double g = 1.0 / binomial_real(ledger.m, ledger.n);
    std::mt19937_64 rng(splitmix64(ledger.seed ^ splitmix64(s ^ (static_cast<std::uint64_t>(k) << 58))));
    std::binomial_distribution<std::uint64_t> hit(c, g);
    std::binomial_distribution<std::uint64_t> rest(tot - c, g);
    std::uint64_t sc = c > 0 ? hit(rng) : 0;
    std::uint64_t sr = tot > c ? rest(rng) : 0;
    if (sc + sr == 0) {
        throw EstimateUndefined("sample sub-group for sector k=" + std::to_string(k) + " is empty", k);
    }
    return static_cast<double>(sc) / static_cast<double>(sc + sr);
}

// Every estimate of sector k as a dense table; unobserved masks are 0.
inline ProbabilityTable sector_estimates(const SampleLedger &ledger, int k) {
    if (k < 0 || k > ledger.n) {
        throw ArgumentError("sector_estimates: k outside [0,n]");
    }
    if (ledger.totals_per_k[k] == 0) {
        throw EstimateUndefined("sector k=" + std::to_string(k) + " has no samples", k);
    }
    ProbabilityTable t(ledger.m, ledger.n - k, TableKind::estimated);
    const double tot = static_cast<double>(ledger.totals_per_k[k]);
    for (const auto &[s, c] : ledger.counts[k]) {
        t.values[colex_rank(s)] = static_cast<double>(c) / tot;
    }
    return t;
}

inline nlohmann::json ledger_sidecar(const SampleLedger &l) {
    return {{"m", l.m}, {"n", l.n}, {"eta", l.eta}, {"N_tot", l.total}, {"seed", l.seed}, {"shards", l.shards}};
}

inline void write_ledger(const SampleLedger &l, const std::string &csv_path, const std::string &json_path) {
    std::ofstream f(csv_path, std::ios::binary);
    if (!f) {
        throw ConfigError("cannot write " + csv_path);
    }
    f << "k,mask_hex,count\n";
    for (int k = 0; k <= l.n; k++) {
        for (const auto &[s, c] : l.counts[k]) {
            f << k << "," << mask_hex(s) << "," << c << "\n";
        }
    }
    std::ofstream j(json_path, std::ios::binary);
    if (!j) {
        throw ConfigError("cannot write " + json_path);
    }
    j << ledger_sidecar(l).dump(2) << "\n";
}

inline SampleLedger read_ledger(const std::string &csv_path, const std::string &json_path) {
    std::ifstream j(json_path);
    if (!j) {
        throw ConfigError("cannot read " + json_path);
    }
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(j);
    } catch (const nlohmann::json::exception &e) {
        throw ConfigError(std::string("ledger sidecar parse error: ") + e.what());
    }
    SampleLedger l(meta.at("m").get<int>(), meta.at("n").get<int>());
    l.eta = meta.at("eta").get<double>();
    l.seed = meta.at("seed").get<std::uint64_t>();
    l.shards = meta.at("shards").get<int>();
    std::ifstream f(csv_path);
    if (!f) {
        throw ConfigError("cannot read " + csv_path);
    }
    std::string line;
    std::getline(f, line);
    if (line != "k,mask_hex,count") {
        throw ConfigError("ledger CSV header mismatch");
    }
    while (std::getline(f, line)) {
        if (line.empty()) {
            continue;
        }
        std::stringstream ss(line);
        std::string ks, ms, cs;
        std::getline(ss, ks, ',');
        std::getline(ss, ms, ',');
        std::getline(ss, cs, ',');
        int k = std::stoi(ks);
        if (k < 0 || k > l.n) {
            throw ConfigError("ledger row has k outside [0,n]");
        }
        l.add(k, parse_mask_hex(ms), std::stoull(cs));
    }
    if (l.total != meta.at("N_tot").get<std::uint64_t>()) {
        throw ConfigError("ledger rows do not sum to N_tot");
    }
    l.check_invariants();
    return l;
}

}  // namespace recycle
