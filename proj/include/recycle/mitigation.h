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
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "recycle/errors.h"
#include "recycle/hash.h"
#include "recycle/recycling.h"
#include "recycle/table.h"

namespace recycle {

struct MitigationReport {
    std::string method;
    int m = 0;
    int n = 0;
    std::vector<double> values;
    std::vector<double> normalized;
    double norm_mass = 0.0;
    nlohmann::json params = nlohmann::json::object();
    // alpha_s or Lambda_s for the extrapolation methods, in colex order.
    std::vector<double> per_mask;
    std::string inputs_digest;

    std::vector<Mask> masks() const {
        return all_masks(m, n);
    }
};

inline std::string tables_digest(const std::vector<const SectorTable *> &tables) {
    Sha256 h;
    for (const SectorTable *t : tables) {
        h.update_pod(t->m).update_pod(t->photons).update_vec(t->values);
    }
    return h.hex();
}

// normalized = values / sum(values).
inline MitigationReport normalize_report(MitigationReport r) {
    double mass = 0.0;
    for (double v : r.values) {
        mass += v;
    }
    r.norm_mass = mass;
    if (!(mass > 0.0)) {
        throw NormalizationError("cannot normalize: mitigated values sum to " + std::to_string(mass));
    }
    r.normalized.resize(r.values.size());
    for (std::size_t i = 0; i < r.values.size(); i++) {
        r.normalized[i] = r.values[i] / mass;
    }
    return r;
}

inline MitigationReport start_report(const char *method, const RecycledTable &t) {
    MitigationReport r;
    r.method = method;
    r.m = t.m;
    r.n = t.photons;
    r.values.resize(t.size());
    r.inputs_digest = tables_digest({&t});
    return r;
}

inline void check_table_dims(const RecycledTable &t, int m, int n, int k) {
    if (t.m != m || t.photons != n || t.k != k) {
        throw ArgumentError("recycled table does not match (m,n,k)");
    }
}

inline MitigationReport finish_report(MitigationReport r) {
    double mass = 0.0;
    for (double v : r.values) {
        mass += v;
    }
    r.norm_mass = mass;
    if (mass > 0.0) {
        return normalize_report(std::move(r));
    }
    r.normalized.assign(r.values.size(), 0.0);
    return r;
}

// p_mit = C(m-n+k,k) |p_R - (N'_k/N_k) p_unif|.
inline MitigationReport linear_solve(const RecycledTable &t, int m, int n, int k) {
    check_table_dims(t, m, n, k);
    MixingCoefficients c = mixing_coefficients(m, n, k);
    const double shift = c.mix * p_unif(m, n);
    const double scale = ancestor_count(m, n, k);
    MitigationReport r = start_report("linear_solve", t);
    for (std::size_t i = 0; i < t.size(); i++) {
        r.values[i] = scale * std::abs(t.values[i] - shift);
    }
    r.params = {{"k", k}};
    return finish_report(std::move(r));
}

inline MitigationReport linear_solve_dependency(const RecycledTable &t, double d_k, int m, int n, int k) {
    check_table_dims(t, m, n, k);
    if (!(d_k >= 0.0 && d_k <= 1.0)) {
        throw FallbackRequired("dependency factor " + std::to_string(d_k) +
                               " outside [0,1]; fall back to linear_solve");
    }
    MixingCoefficients c = mixing_coefficients(m, n, k);
    const double pu = p_unif(m, n);
    const double num_shift = c.mix * (d_k - 1.0) * pu;
    // 1/C + (N'_k/N_k) d = (1 + (C-1) d) / C
    const double scale = ancestor_count(m, n, k);
    const double den = 1.0 + (scale - 1.0) * d_k;
    MitigationReport r = start_report("linear_solve_dep", t);
    for (std::size_t i = 0; i < t.size(); i++) {
        r.values[i] = scale * std::abs(t.values[i] + num_shift) / den;
    }
    r.params = {{"k", k}, {"d_k", d_k}};
    return finish_report(std::move(r));
}

inline int default_n_d(int n) {
    return std::min(3, n - 1);
}

// Least-squares slope g for D_k ~ D_0 - g k with the intercept pinned at D_0.
inline double fit_global_gradient(const std::vector<std::pair<int, double>> &series, double d_0) {
    if (series.empty()) {
        throw ArgumentError("fit_global_gradient needs n_d >= 1 points");
    }
    double sxx = 0.0;
    double sxr = 0.0;
    for (const auto &[x, y] : series) {
        sxx += static_cast<double>(x) * x;
        sxr += static_cast<double>(x) * (d_0 - y);
    }
    return sxr / sxx;
}

inline std::vector<std::pair<int, double>> deviation_series(const std::vector<RecycledTable> &tables) {
    std::vector<std::pair<int, double>> out;
    for (const auto &t : tables) {
        out.emplace_back(t.k, abs_avg_deviation(t));
    }
    return out;
}

inline void check_extrapolation_tables(const std::vector<RecycledTable> &tables) {
    if (tables.empty()) {
        throw ArgumentError("extrapolation needs at least one recycled table");
    }
    const int n = tables[0].photons;
    if (static_cast<int>(tables.size()) >= n) {
        throw ArgumentError("extrapolation needs n_d < n");
    }
    for (const auto &t : tables) {
        if (t.m != tables[0].m || t.photons != n || t.size() != tables[0].size()) {
            throw ArgumentError("extrapolation tables must cover the same masks");
        }
    }
}

inline MitigationReport extrapolate_linear(const std::vector<RecycledTable> &tables, double d_0, double pu) {
    check_extrapolation_tables(tables);
    const auto series = deviation_series(tables);
    const double g = fit_global_gradient(series, d_0);
    const std::size_t nd = tables.size();
    double mean_x = 0.0;
    for (const auto &t : tables) {
        mean_x += t.k;
    }
    mean_x /= static_cast<double>(nd);

    MitigationReport r = start_report("extrap_linear", tables[0]);
    std::vector<const SectorTable *> ptrs;
    for (const auto &t : tables) {
        ptrs.push_back(&t);
    }
    r.inputs_digest = tables_digest(ptrs);
    r.per_mask.resize(r.values.size());
    for (std::size_t i = 0; i < r.values.size(); i++) {
        double mean_y = 0.0;
        for (const auto &t : tables) {
            mean_y += std::abs(t.values[i] - pu);
        }
        mean_y /= static_cast<double>(nd);
        double y1 = std::abs(tables[0].values[i] - pu);
        double sign = (pu - y1) < 0.0 ? -1.0 : 1.0;
        double alpha = mean_y - sign * g * mean_x;
        r.per_mask[i] = alpha;
        r.values[i] = std::abs(pu + alpha);
    }
    nlohmann::json d = nlohmann::json::array();
    for (const auto &[k, v] : series) {
        d.push_back({{"k", k}, {"D", v}});
    }
    r.params = {{"g_avg", g}, {"n_d", nd}, {"D_0", d_0}, {"D_k", d}};
    return finish_report(std::move(r));
}

struct ExponentialFit {
    double alpha = 0.0;
    double initial = 0.0;
    double sse = 0.0;
};

// 1-D least squares for D_k ~ D_0 exp(-alpha k), alpha in [0, 20].
inline ExponentialFit fit_exponential_rate(const std::vector<std::pair<int, double>> &series, double d_0,
                                           double tol = 1e-10) {
    if (series.empty()) {
        throw ArgumentError("exponential fit needs n_d >= 1 points");
    }
    if (!(d_0 > 0.0)) {
        throw FitDegenerate("exponential fit needs D_0 > 0; use linear extrapolation");
    }
    for (const auto &[x, y] : series) {
        if (!(y > 0.0)) {
            throw FitDegenerate("exponential fit needs D_k > 0 (k=" + std::to_string(x) +
                                "); use linear extrapolation");
        }
    }
    auto sse = [&](double a) {
        double s = 0.0;
        for (const auto &[x, y] : series) {
            double r = y - d_0 * std::exp(-a * x);
            s += r * r;
        }
        return s;
    };
    constexpr double lo = 0.0;
    constexpr double hi = 20.0;
    double sxx = 0.0;
    double sxl = 0.0;
    for (const auto &[x, y] : series) {
        sxx += static_cast<double>(x) * x;
        sxl += -static_cast<double>(x) * std::log(y / d_0);
    }
    double init = std::clamp(sxl / sxx, lo, hi);

    // Bracket the minimum on a coarse grid that includes the log-linear start,
    // then refine by golden section.
    constexpr int grid = 400;
    double best = init;
    double best_v = sse(init);
    for (int i = 0; i <= grid; i++) {
        double a = lo + (hi - lo) * i / grid;
        double v = sse(a);
        if (v < best_v) {
            best_v = v;
            best = a;
        }
    }
    const double h = (hi - lo) / grid;
    double a = std::max(lo, best - h);
    double b = std::min(hi, best + h);
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = sse(c);
    double fd = sse(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = sse(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = sse(d);
        }
    }
    ExponentialFit f;
    f.alpha = 0.5 * (a + b);
    f.initial = init;
    f.sse = sse(f.alpha);
    if (best_v < f.sse) {
        f.alpha = best;
        f.sse = best_v;
    }
    return f;
}

// Least-squares amplitude for y ~ Lambda exp(-alpha x).
inline double fit_exponential_amplitude(const std::vector<std::pair<int, double>> &points, double alpha) {
    double num = 0.0;
    double den = 0.0;
    for (const auto &[x, y] : points) {
        double e = std::exp(-alpha * x);
        num += y * e;
        den += e * e;
    }
    return num / den;
}

inline MitigationReport extrapolate_exponential(const std::vector<RecycledTable> &tables, double d_0, double pu) {
    check_extrapolation_tables(tables);
    const auto series = deviation_series(tables);
    ExponentialFit fit = fit_exponential_rate(series, d_0);

    MitigationReport r = start_report("extrap_exp", tables[0]);
    std::vector<const SectorTable *> ptrs;
    for (const auto &t : tables) {
        ptrs.push_back(&t);
    }
    r.inputs_digest = tables_digest(ptrs);
    r.per_mask.resize(r.values.size());
    std::vector<std::pair<int, double>> pts(tables.size());
    for (std::size_t i = 0; i < r.values.size(); i++) {
        for (std::size_t j = 0; j < tables.size(); j++) {
            pts[j] = {tables[j].k, std::abs(tables[j].values[i] - pu)};
        }
        double lam = fit_exponential_amplitude(pts, fit.alpha);
        r.per_mask[i] = lam;
        r.values[i] = std::abs(pu + lam);
    }
    nlohmann::json d = nlohmann::json::array();
    for (const auto &[k, v] : series) {
        d.push_back({{"k", k}, {"D", v}});
    }
    r.params = {{"alpha_avg", fit.alpha}, {"alpha_init", fit.initial}, {"n_d", tables.size()}, {"D_0", d_0},
                {"D_k", d}};
    return finish_report(std::move(r));
}

inline void write_report(const MitigationReport &r, const std::string &csv_path, const std::string &json_path) {
    std::ofstream f(csv_path, std::ios::binary);
    if (!f) {
        throw ConfigError("cannot write " + csv_path);
    }
    f.precision(17);
    f << "mask_hex,value,normalized\n";
    std::size_t idx = 0;
    for_each_mask(r.m, r.n, [&](Mask s) {
        f << mask_hex(s) << "," << r.values[idx] << "," << r.normalized[idx] << "\n";
        idx++;
    });
    nlohmann::json params = r.params;
    if (!r.per_mask.empty()) {
        params["per_mask"] = r.per_mask;
    }
    nlohmann::json meta = {{"method", r.method}, {"params", params}, {"norm_mass", r.norm_mass},
                           {"inputs_digest", r.inputs_digest}, {"m", r.m}, {"n", r.n}};
    std::ofstream j(json_path, std::ios::binary);
    if (!j) {
        throw ConfigError("cannot write " + json_path);
    }
    j << meta.dump(2) << "\n";
}

}  // namespace recycle
