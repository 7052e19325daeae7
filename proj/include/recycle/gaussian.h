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
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "recycle/errors.h"
#include "recycle/loss.h"
#include "recycle/permanent.h"

namespace recycle {

inline constexpr int kMaxGaussianSize = 12;

inline double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; i++) {
        f *= i;
    }
    return f;
}

// Fills g with i.i.d. standard complex normal entries (E|g|^2 = 1).
inline void fill_complex_gaussian(Eigen::MatrixXcd &g, std::mt19937_64 &rng) {
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
    for (Eigen::Index j = 0; j < g.cols(); j++) {
        for (Eigen::Index i = 0; i < g.rows(); i++) {
            double re = gauss(rng);
            double im = gauss(rng);
            g(i, j) = {re, im};
        }
    }
}

inline std::vector<double> sample_gaussian_permanent(int n, std::uint64_t count, std::uint64_t seed) {
    if (n < 1) {
        throw ArgumentError("sample_gaussian_permanent needs n >= 1");
    }
    if (n > kMaxGaussianSize) {
        throw CapacityError("sample_gaussian_permanent: n=" + std::to_string(n) + " exceeds cap " +
                            std::to_string(kMaxGaussianSize));
    }
    std::mt19937_64 rng(seed);
    Eigen::MatrixXcd g(n, n);
    std::vector<double> out(count);
    for (auto &v : out) {
        fill_complex_gaussian(g, rng);
        v = std::norm(permanent(g));
    }
    return out;
}

struct PermanentMomentRun {
    int n = 0;
    std::uint64_t trials = 0;
    std::uint64_t seed = 0;
    std::map<int, double> moments;
    std::map<int, double> reference;
};

// Empirical E(|Per|^{2t}) for t = 1..t_max; analytic references for t <= 2.
inline PermanentMomentRun permanent_moments(int n, std::uint64_t trials, std::uint64_t seed, int t_max = 2) {
    if (trials < 1) {
        throw ArgumentError("permanent_moments needs trials >= 1");
    }
    PermanentMomentRun run{n, trials, seed, {}, {}};
    std::vector<double> x = sample_gaussian_permanent(n, trials, seed);
    for (int t = 1; t <= t_max; t++) {
        double s = 0.0;
        for (double v : x) {
            s += std::pow(v, t);
        }
        run.moments[t] = s / static_cast<double>(trials);
    }
    run.reference[1] = factorial(n);
    if (t_max >= 2) {
        run.reference[2] = factorial(n + 1) * factorial(n);
    }
    return run;
}

// beta(r)^n / N^(r/2 - 1) with beta(r) = (r!)^2 / r^r. Rests on an unproven
// moment conjecture for t > 2.
inline double lyapunov_ratio_lower_bound(int n, double big_n, int r) {
    if (r <= 2) {
        throw ArgumentError("lyapunov_ratio_lower_bound needs integer r > 2");
    }
    if (!(big_n >= 1.0)) {
        throw ArgumentError("lyapunov_ratio_lower_bound needs N >= 1");
    }
    double beta = factorial(r) * factorial(r) / std::pow(static_cast<double>(r), r);
    return std::pow(beta, n) / std::pow(big_n, r / 2.0 - 1.0);
}

inline double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

// Kolmogorov-Smirnov distance between the sample and N(0,1).
inline double ks_distance_normal(std::vector<double> z) {
    std::sort(z.begin(), z.end());
    const double t = static_cast<double>(z.size());
    double d = 0.0;
    for (std::size_t i = 0; i < z.size(); i++) {
        double f = normal_cdf(z[i]);
        d = std::max(d, std::max((i + 1) / t - f, f - i / t));
    }
    return d;
}

// Asymptotic 99% critical value of the one-sample KS statistic.
inline double ks_threshold_99(std::uint64_t trials) {
    return 1.6276 / std::sqrt(static_cast<double>(trials));
}

inline double sample_skewness(const std::vector<double> &z) {
    const double t = static_cast<double>(z.size());
    double mean = 0.0;
    for (double v : z) {
        mean += v;
    }
    mean /= t;
    double m2 = 0.0;
    double m3 = 0.0;
    for (double v : z) {
        double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= t;
    m3 /= t;
    return m3 / std::pow(m2, 1.5);
}

struct HistogramBin {
    double left = 0.0;
    double right = 0.0;
    std::uint64_t count = 0;
};

inline std::vector<HistogramBin> histogram(const std::vector<double> &z, double width) {
    std::vector<HistogramBin> bins;
    if (z.empty()) {
        return bins;
    }
    auto [lo_it, hi_it] = std::minmax_element(z.begin(), z.end());
    double lo = std::floor(*lo_it / width) * width;
    std::size_t count = static_cast<std::size_t>(std::floor((*hi_it - lo) / width)) + 1;
    bins.resize(count);
    for (std::size_t i = 0; i < count; i++) {
        bins[i].left = lo + width * i;
        bins[i].right = lo + width * (i + 1);
    }
    for (double v : z) {
        std::size_t i = std::min(count - 1, static_cast<std::size_t>(std::floor((v - lo) / width)));
        bins[i].count++;
    }
    return bins;
}

struct CltProbe {
    int n = 0;
    std::uint64_t big_n = 0;
    std::uint64_t trials = 0;
    std::vector<double> standardized;
    std::vector<HistogramBin> bins;
    double ks = 0.0;
    double ks_threshold = 0.0;
    double skewness = 0.0;

    bool rejects_normality() const {
        return ks > ks_threshold;
    }
};

// S_N / sigma_N with S_N = sum_i (|Per(G_i)|^2 - n!) and sigma_N^2 = N n (n!)^2.
// Trial t uses splitmix64(seed ^ t), so results do not depend on thread count.
inline CltProbe clt_probe(int n, std::uint64_t big_n, std::uint64_t trials, std::uint64_t seed,
                          double bin_width = 0.25, int threads = 0) {
    if (n < 1 || n > 6) {
        throw CapacityError("clt_probe supports 1 <= n <= 6");
    }
    if (big_n < 1 || trials < 1) {
        throw ArgumentError("clt_probe needs N >= 1 and trials >= 1");
    }
    const double mean = factorial(n);
    const double sigma = std::sqrt(static_cast<double>(big_n) * n) * factorial(n);
    CltProbe out;
    out.n = n;
    out.big_n = big_n;
    out.trials = trials;
    out.standardized.resize(trials);
    if (threads <= 0) {
        threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    }
    auto work = [&](int w) {
        Eigen::MatrixXcd g(n, n);
        for (std::uint64_t t = w; t < trials; t += threads) {
            std::mt19937_64 rng(splitmix64(seed ^ t));
            double s = 0.0;
            for (std::uint64_t i = 0; i < big_n; i++) {
                fill_complex_gaussian(g, rng);
                s += std::norm(permanent(g)) - mean;
            }
            out.standardized[t] = s / sigma;
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; w++) {
        pool.emplace_back(work, w);
    }
    for (auto &th : pool) {
        th.join();
    }
    out.bins = histogram(out.standardized, bin_width);
    out.ks = ks_distance_normal(out.standardized);
    out.ks_threshold = ks_threshold_99(trials);
    out.skewness = sample_skewness(out.standardized);
    return out;
}

}  // namespace recycle
