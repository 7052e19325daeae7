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
#include <random>
#include <string>
#include <vector>

#include "recycle/errors.h"
#include "recycle/loss.h"
#include "recycle/table.h"

namespace recycle {

// Sector-0 relative frequencies of a ledger.
inline ProbabilityTable postselect_estimates(const SampleLedger &ledger) {
    return sector_estimates(ledger, 0);
}

// Interpolation coefficients a with sum_j a_j x_i^j = b_i, O(n^2)
// (Bjorck-Pereyra: Newton divided differences, then expansion to monomials).
inline std::vector<double> vandermonde_solve(const std::vector<double> &x, std::vector<double> b) {
    const int n = static_cast<int>(x.size()) - 1;
    if (static_cast<int>(b.size()) != n + 1) {
        throw ArgumentError("vandermonde_solve: size mismatch");
    }
    for (int i = 0; i <= n; i++) {
        for (int j = 0; j < i; j++) {
            if (x[i] == x[j]) {
                throw SingularSystem("vandermonde_solve: repeated node");
            }
        }
    }
    for (int k = 0; k < n; k++) {
        for (int i = n; i > k; i--) {
            b[i] = (b[i] - b[i - 1]) / (x[i] - x[i - k - 1]);
        }
    }
    for (int k = n - 1; k >= 0; k--) {
        for (int i = k; i < n; i++) {
            b[i] -= x[k] * b[i + 1];
        }
    }
    return b;
}

// Lagrange basis polynomials at zero: the first row of the inverse Vandermonde.
inline std::vector<double> lagrange_at_zero(const std::vector<double> &x) {
    const std::size_t n = x.size();
    std::vector<double> w(n, 1.0);
    for (std::size_t i = 0; i < n; i++) {
        for (std::size_t j = 0; j < n; j++) {
            if (j != i) {
                if (x[i] == x[j]) {
                    throw SingularSystem("lagrange_at_zero: repeated node");
                }
                w[i] *= -x[j] / (x[i] - x[j]);
            }
        }
    }
    return w;
}

enum class ZneMethod { loss_basis, eta_power_basis, richardson };

inline const char *zne_method_name(ZneMethod m) {
    switch (m) {
        case ZneMethod::loss_basis:
            return "loss_basis";
        case ZneMethod::eta_power_basis:
            return "eta_power_basis";
        default:
            return "richardson";
    }
}

struct ZneConfig {
    int n = 0;
    int c = 0;
    std::vector<double> etas;
    double eps_max = 0.01;
    ZneMethod method = ZneMethod::loss_basis;

    std::size_t grid_size() const {
        return method == ZneMethod::loss_basis ? static_cast<std::size_t>(n - c + 1) : static_cast<std::size_t>(n + 1);
    }

    void validate() const {
        if (n < 1 || c < 0 || c > n) {
            throw ArgumentError("zne config needs 0 <= c <= n, n >= 1");
        }
        if (!(eps_max > 0.0 && eps_max <= 1.0)) {
            throw ArgumentError("eps_max must lie in (0,1]");
        }
        if (etas.size() != grid_size()) {
            throw ArgumentError("zne grid has " + std::to_string(etas.size()) + " points, method " +
                                zne_method_name(method) + " needs " + std::to_string(grid_size()));
        }
        for (std::size_t i = 0; i < etas.size(); i++) {
            if (!(etas[i] >= 0.0 && etas[i] < 1.0)) {
                throw ArgumentError("zne grid values must lie in [0,1)");
            }
            if (i > 0 && etas[i] == etas[i - 1]) {
                throw SingularSystem("zne grid has a repeated loss value");
            }
            if (i > 0 && etas[i] < etas[i - 1]) {
                throw ArgumentError("zne grid must be strictly increasing");
            }
        }
        if (method == ZneMethod::richardson && !(etas[0] > 0.0)) {
            throw ArgumentError("richardson scaling needs eta_0 > 0");
        }
    }
};

inline std::vector<double> equally_spaced(double lo, double hi, std::size_t count) {
    std::vector<double> g(count);
    for (std::size_t i = 0; i < count; i++) {
        g[i] = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
    return g;
}

inline std::vector<double> odds_nodes(const std::vector<double> &etas) {
    std::vector<double> x(etas.size());
    for (std::size_t i = 0; i < etas.size(); i++) {
        x[i] = etas[i] / (1.0 - etas[i]);
    }
    return x;
}

// gamma_i = (-1)^n prod_{j != i} c_j / (c_i - c_j) over n+1 scale factors.
inline std::vector<double> richardson_weights(const std::vector<double> &c) {
    const std::size_t len = c.size();
    const int n = static_cast<int>(len) - 1;
    std::vector<double> g(len, n % 2 == 0 ? 1.0 : -1.0);
    for (std::size_t i = 0; i < len; i++) {
        for (std::size_t j = 0; j < len; j++) {
            if (j != i) {
                if (c[i] == c[j]) {
                    throw SingularSystem("richardson_weights: repeated scale factor");
                }
                g[i] *= c[j] / (c[i] - c[j]);
            }
        }
    }
    return g;
}

// Weights w with estimate = sum_i w_i p_{eta_i}: first row of L^{-1}.
inline std::vector<double> zne_weights(const ZneConfig &cfg) {
    cfg.validate();
    if (cfg.method == ZneMethod::loss_basis) {
        std::vector<double> w = lagrange_at_zero(odds_nodes(cfg.etas));
        for (std::size_t i = 0; i < w.size(); i++) {
            w[i] /= std::pow(1.0 - cfg.etas[i], cfg.n);
        }
        return w;
    }
    if (cfg.method == ZneMethod::eta_power_basis) {
        return lagrange_at_zero(cfg.etas);
    }
    std::vector<double> c(cfg.etas.size());
    for (std::size_t i = 0; i < c.size(); i++) {
        c[i] = cfg.etas[i] / cfg.etas[0];
    }
    return richardson_weights(c);
}

// Zero-loss estimate from values measured on the grid. The loss basis solves
// (D W) a = p as W a = D^{-1} p.
inline double richardson_mitigate(const std::vector<double> &noisy, const ZneConfig &cfg) {
    cfg.validate();
    if (noisy.size() != cfg.etas.size()) {
        throw ArgumentError("richardson_mitigate: one value per grid point required");
    }
    if (cfg.method == ZneMethod::richardson) {
        std::vector<double> g = zne_weights(cfg);
        double s = 0.0;
        for (std::size_t i = 0; i < g.size(); i++) {
            s += g[i] * noisy[i];
        }
        return s;
    }
    if (cfg.method == ZneMethod::loss_basis) {
        std::vector<double> rhs(noisy.size());
        for (std::size_t i = 0; i < rhs.size(); i++) {
            rhs[i] = noisy[i] / std::pow(1.0 - cfg.etas[i], cfg.n);
        }
        return vandermonde_solve(odds_nodes(cfg.etas), rhs)[0];
    }
    return vandermonde_solve(cfg.etas, noisy)[0];
}

// Loss basis matrix L_{ij} = eta_i^j (1-eta_i)^(n-j), j = 0..n-c.
inline std::vector<std::vector<double>> loss_basis_matrix(const ZneConfig &cfg) {
    const std::size_t len = cfg.etas.size();
    std::vector<std::vector<double>> l(len, std::vector<double>(len));
    for (std::size_t i = 0; i < len; i++) {
        for (std::size_t j = 0; j < len; j++) {
            l[i][j] = std::pow(cfg.etas[i], static_cast<double>(j)) * std::pow(1.0 - cfg.etas[i], cfg.n - static_cast<double>(j));
        }
    }
    return l;
}

inline double vandermonde_inverse_norm_bound(const std::vector<double> &x) {
    double best = 0.0;
    for (std::size_t i = 0; i < x.size(); i++) {
        double p = 1.0;
        for (std::size_t j = 0; j < x.size(); j++) {
            if (j != i) {
                p *= (1.0 + x[i]) / std::abs(x[i] - x[j]);
            }
        }
        best = std::max(best, p);
    }
    return best;
}

// Upper bound on the extrapolation error from the inverse-Vandermonde norm.
inline double zne_error_upper_bound(const ZneConfig &cfg) {
    cfg.validate();
    if (cfg.method == ZneMethod::loss_basis) {
        return cfg.eps_max / std::pow(1.0 - cfg.etas.back(), cfg.n) * vandermonde_inverse_norm_bound(odds_nodes(cfg.etas));
    }
    return cfg.eps_max * vandermonde_inverse_norm_bound(cfg.etas);
}

enum class PostselectComparator {
    // eps_max / (1-eta_0)^n
    linear,
    // eps_max / sqrt((1-eta_0)^n)
    sqrt,
};

inline double postselect_error_level(const ZneConfig &cfg, PostselectComparator form) {
    double d = std::pow(1.0 - cfg.etas.front(), cfg.n);
    return form == PostselectComparator::linear ? cfg.eps_max / d : cfg.eps_max / std::sqrt(d);
}

// |sum_i w_i eps_i| for one draw of additive errors.
inline double extrapolation_error(const ZneConfig &cfg, const std::vector<double> &eps) {
    return std::abs(richardson_mitigate(eps, cfg));
}

inline std::uint64_t count_violations(const ZneConfig &cfg, const std::vector<std::vector<double>> &draws,
                                      PostselectComparator form = PostselectComparator::linear) {
    const double level = postselect_error_level(cfg, form);
    std::uint64_t v = 0;
    for (const auto &eps : draws) {
        if (extrapolation_error(cfg, eps) < level) {
            v++;
        }
    }
    return v;
}

// Trial t draws eps_i ~ U[-eps_max, eps_max] from splitmix64(seed ^ t).
inline std::uint64_t violation_experiment(const ZneConfig &cfg, std::uint64_t trials, std::uint64_t seed,
                                          PostselectComparator form = PostselectComparator::linear) {
    cfg.validate();
    if (trials < 1) {
        throw ArgumentError("violation_experiment needs trials >= 1");
    }
    std::vector<std::vector<double>> draws(trials, std::vector<double>(cfg.etas.size()));
    for (std::uint64_t t = 0; t < trials; t++) {
        std::mt19937_64 rng(splitmix64(seed ^ t));
        for (double &e : draws[t]) {
            e = cfg.eps_max * (2.0 * uniform01(rng) - 1.0);
        }
    }
    return count_violations(cfg, draws, form);
}

struct ViolationRow {
    int n_minus_c = 0;
    int n = 0;
    int c = 0;
    std::uint64_t violations = 0;
    std::uint64_t trials = 0;
};

inline int ceil_third(int n) {
    return (n + 2) / 3;
}

// Smallest n with n - ceil(n/3) = d.
inline int photons_for_gap(int d) {
    for (int n = 1;; n++) {
        if (n - ceil_third(n) == d) {
            return n;
        }
    }
}

// Loss-basis sweep over d = n-c with c = ceil(n/3); eta-power sweep over n with
// c = 0. Grids run equally spaced from eta_0 to eta_top.
inline std::vector<ViolationRow> violation_sweep(ZneMethod method, int lo, int hi, double eps_max, double eta_0,
                                                 double eta_top, std::uint64_t trials, std::uint64_t seed,
                                                 PostselectComparator form = PostselectComparator::linear) {
    std::vector<ViolationRow> rows;
    for (int v = lo; v <= hi; v++) {
        ZneConfig cfg;
        cfg.method = method;
        cfg.eps_max = eps_max;
        if (method == ZneMethod::loss_basis) {
            cfg.n = photons_for_gap(v);
            cfg.c = ceil_third(cfg.n);
        } else {
            cfg.n = v;
            cfg.c = 0;
        }
        cfg.etas = equally_spaced(eta_0, eta_top, cfg.grid_size());
        ViolationRow r;
        r.n_minus_c = method == ZneMethod::loss_basis ? v : cfg.n;
        r.n = cfg.n;
        r.c = cfg.c;
        r.trials = trials;
        r.violations = violation_experiment(cfg, trials, seed ^ (static_cast<std::uint64_t>(v) << 40), form);
        rows.push_back(r);
    }
    return rows;
}

}  // namespace recycle
