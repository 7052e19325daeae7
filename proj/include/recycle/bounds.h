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
#include <optional>
#include <string>
#include <vector>

#include "recycle/errors.h"
#include "recycle/mask.h"
#include "recycle/recycling.h"

namespace recycle {

struct BoundValue {
    double value = 0.0;
    bool vacuous = false;
};

enum class ChebyshevVariant { haar, arbitrary, bhatia_davis };

// Failure probability for |I - p_unif| >= eps. Values at or above 1 are
// clamped and flagged vacuous.
inline BoundValue chebyshev_confidence(double eps_bias, int m, int n, ChebyshevVariant variant, double p_upper = 1.0,
                                       double delta = 0.0) {
    if (!(eps_bias > 0.0)) {
        throw ArgumentError("chebyshev_confidence needs eps > 0");
    }
    const double pu = p_unif(m, n);
    const double e2 = eps_bias * eps_bias;
    double v = 0.0;
    switch (variant) {
        case ChebyshevVariant::haar:
            v = n * pu * pu / e2;
            break;
        case ChebyshevVariant::arbitrary:
            v = pu / e2;
            break;
        case ChebyshevVariant::bhatia_davis: {
            double a = pu * p_upper / e2;
            v = a + delta * (1.0 - a);
            break;
        }
    }
    BoundValue b;
    b.vacuous = v >= 1.0 - 1e-15;
    b.value = std::min(v, 1.0);
    return b;
}

// Class-conditional surrogate 4 exp(-2e-6 n) for the largest output probability.
inline double exp_barrier_bound(double n) {
    if (n < 0) {
        throw ArgumentError("exp_barrier_bound needs n >= 0");
    }
    return 4.0 * std::exp(-0.000002 * n);
}

struct RegimeQuery {
    int m = 0;
    int n = 0;
    int k = 1;
    double eta = 0.5;
    double n_tot = 1.0;
    std::optional<double> delta;     // default m^-n
    std::optional<double> eps_bias;  // default m^-2k
    std::optional<double> p_upper;
    // Divide the shots into C(m,n) independent groups, one per probability.
    bool split_groups = false;
    int n_d = 1;

    double delta_or_default() const {
        return delta ? *delta : std::pow(static_cast<double>(m), -static_cast<double>(n));
    }
    double eps_bias_or_default() const {
        return eps_bias ? *eps_bias : std::pow(static_cast<double>(m), -2.0 * k);
    }

    void validate() const {
        if (m < 1 || n < 1 || n > m) {
            throw ArgumentError("regime query needs 1 <= n <= m");
        }
        if (!(eta > 0.0 && eta < 1.0)) {
            throw ArgumentError("regime query needs 0 < eta < 1");
        }
        if (k < 1 || k > n - 1) {
            throw ArgumentError("regime query needs 1 <= k <= n-1");
        }
        double d = delta_or_default();
        if (!(d > 0.0 && d < 1.0)) {
            throw ArgumentError("regime query needs delta in (0,1)");
        }
        if (!(n_tot > 0.0)) {
            throw ArgumentError("regime query needs N_tot > 0");
        }
    }
};

// sqrt(log(2/delta) / 2); with delta = m^-n this is sqrt((log 2 + n log m)/2).
inline double hoeffding_prefactor(double delta) {
    return std::sqrt(std::log(2.0 / delta) / 2.0);
}

enum class EnvelopeKind { postselect, recycled, deviation };

namespace detail {

inline double group_factor(const RegimeQuery &q) {
    return q.split_groups ? binomial_real(q.m, q.n) : 1.0;
}

inline double recycled_envelope(const RegimeQuery &q, int k) {
    const double pref = hoeffding_prefactor(q.delta_or_default());
    const double share = binomial_real(q.n, k) * std::pow(1.0 - q.eta, q.n - k) * std::pow(q.eta, k);
    return pref / ancestor_count(q.m, q.n, k) * std::sqrt(group_factor(q) / (share * q.n_tot));
}

inline double deviation_envelope(const RegimeQuery &q, int k) {
    return std::sqrt(2.0 * recycled_envelope(q, k)) * std::pow(p_unif(q.m, q.n), 0.25);
}

}  // namespace detail

// Hoeffding envelopes with the explicit prefactor in place of the big-O.
inline double statistical_error_envelope(const RegimeQuery &q, EnvelopeKind which) {
    if (!(q.n_tot > 0.0)) {
        throw ArgumentError("statistical_error_envelope needs N_tot > 0");
    }
    switch (which) {
        case EnvelopeKind::postselect:
            return detail::recycled_envelope(q, 0);
        case EnvelopeKind::recycled:
            return detail::recycled_envelope(q, q.k);
        default:
            return detail::deviation_envelope(q, q.k);
    }
}

struct SampleBound {
    double n_max = 0.0;
    bool empty_regime = false;
};

// Largest N_tot for which linear solving beats postselection on one probability.
inline SampleBound linsolve_regime_max_samples(const RegimeQuery &q) {
    const double c = ancestor_count(q.m, q.n, q.k);
    const double pref = hoeffding_prefactor(q.delta_or_default());
    const double eps = q.eps_bias_or_default();
    const double post_share = std::pow(1.0 - q.eta, q.n);
    const double rec_share = binomial_real(q.n, q.k) * std::pow(1.0 - q.eta, q.n - q.k) * std::pow(q.eta, q.k);
    const double bracket = 1.0 / (9.0 * post_share) - 1.0 / rec_share;
    SampleBound b;
    if (!(bracket > 0.0)) {
        b.empty_regime = true;
        return b;
    }
    b.n_max = pref * pref * detail::group_factor(q) / ((c - 1.0) * (c - 1.0) * eps * eps) * bracket;
    return b;
}

inline SampleBound linsolve_regime_max_samples(int m, int n, int k, double eta) {
    RegimeQuery q;
    q.m = m;
    q.n = n;
    q.k = k;
    q.eta = eta;
    return linsolve_regime_max_samples(q);
}

enum class RegimeMethod { linsolve, linsolve_dep, extrap_linear };

struct RegimeCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

// Linear solving: 3 sqrt(stat^2 + ((C-1) eps)^2) against the postselection
// envelope, where stat is the mitigated (C-scaled) recycled envelope. The
// dependency variant doubles the bias term. Linear extrapolation uses
// (n_d+1)/2 (E_D0 + eps) + n E_rec(k=1).
inline RegimeCheck regime_inequality_check(const RegimeQuery &q, RegimeMethod method) {
    q.validate();
    const double c = ancestor_count(q.m, q.n, q.k);
    const double eps = q.eps_bias_or_default();
    const double post = statistical_error_envelope(q, EnvelopeKind::postselect);
    RegimeCheck r;
    r.rhs = post;
    if (method == RegimeMethod::extrap_linear) {
        double dev0 = std::sqrt(2.0 * post) * std::pow(p_unif(q.m, q.n), 0.25);
        r.lhs = (q.n_d + 1) / 2.0 * (dev0 + eps) + q.n * detail::recycled_envelope(q, 1);
    } else {
        double stat = c * detail::recycled_envelope(q, q.k);
        double bias = (method == RegimeMethod::linsolve_dep ? 2.0 : 1.0) * (c - 1.0) * eps;
        r.lhs = 3.0 * std::sqrt(stat * stat + bias * bias);
    }
    r.holds = r.lhs <= r.rhs;
    return r;
}

struct SweepRow {
    std::string param;
    double value = 0.0;
    RegimeCheck check;
};

inline std::vector<SweepRow> regime_sweep(RegimeQuery q, RegimeMethod method, const std::string &axis,
                                          const std::vector<double> &grid) {
    std::vector<SweepRow> rows;
    for (double v : grid) {
        if (axis == "N_tot") {
            q.n_tot = v;
        } else if (axis == "eta") {
            q.eta = v;
        } else if (axis == "n") {
            q.n = static_cast<int>(v);
        } else {
            throw ArgumentError("unknown sweep axis " + axis);
        }
        rows.push_back({axis, v, regime_inequality_check(q, method)});
    }
    return rows;
}

}  // namespace recycle
