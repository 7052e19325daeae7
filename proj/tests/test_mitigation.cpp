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

#include <gtest/gtest.h>

#include <filesystem>

#include "oracles.h"
#include "recycle/ideal.h"
#include "recycle/mitigation.h"

using namespace recycle;

namespace {

ProbabilityTable haar_ideal(int m, int n, std::uint64_t seed) {
    return ideal_distribution(haar_unitary(m, seed), InputConfig::first_modes(m, n));
}

// Recycled table whose interference terms all equal p_unif.
RecycledTable zero_bias_table(const ProbabilityTable &p, int k) {
    auto c = mixing_coefficients(p.m, p.photons, k);
    RecycledTable t(p.m, p.photons, k, TableKind::exact);
    for (std::size_t i = 0; i < p.size(); i++) {
        t.values[i] = c.signal * p.values[i] + c.mix * p_unif(p.m, p.photons);
    }
    return t;
}

double l1(const std::vector<double> &a, const std::vector<double> &b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); i++) {
        s += std::abs(a[i] - b[i]);
    }
    return s;
}

}  // namespace

TEST(LinearSolve, ZeroBiasRoundTrip) {
    for (int k = 1; k <= 3; k++) {
        auto p = haar_ideal(9, 4, 3);
        auto r = linear_solve(zero_bias_table(p, k), 9, 4, k);
        for (std::size_t i = 0; i < p.size(); i++) {
            EXPECT_NEAR(r.values[i], p.values[i], 1e-15);
        }
        EXPECT_NEAR(r.norm_mass, 1.0, 1e-12);
        EXPECT_EQ(r.method, "linear_solve");
    }
}

TEST(LinearSolve, MixedUniformMapsToZero) {
    const int m = 8, n = 3, k = 1;
    auto c = mixing_coefficients(m, n, k);
    RecycledTable t(m, n, k, TableKind::exact);
    std::fill(t.values.begin(), t.values.end(), c.mix * p_unif(m, n));
    auto r = linear_solve(t, m, n, k);
    for (double v : r.values) {
        EXPECT_NEAR(v, 0.0, 1e-18);
    }
    EXPECT_EQ(r.norm_mass, 0.0);
}

TEST(LinearSolve, DimensionCheck) {
    auto p = haar_ideal(8, 3, 1);
    EXPECT_THROW(linear_solve(zero_bias_table(p, 1), 8, 3, 2), ArgumentError);
}

TEST(LinearSolveDependency, ZeroDependencyIsBitIdentical) {
    auto p = haar_ideal(10, 3, 4);
    auto l = draw_samples(p, LossModel(0.6), 20000, 9);
    for (int k = 1; k <= 2; k++) {
        auto t = recycled_table(l, k);
        auto a = linear_solve(t, 10, 3, k);
        auto b = linear_solve_dependency(t, 0.0, 10, 3, k);
        EXPECT_EQ(a.values, b.values);
        EXPECT_EQ(a.normalized, b.normalized);
    }
}

TEST(LinearSolveDependency, FullDependencyRecoversIdeal) {
    // With I = p(s) the recycled value is p(s) itself.
    auto p = haar_ideal(8, 3, 5);
    RecycledTable t(8, 3, 1, TableKind::exact);
    t.values = p.values;
    auto r = linear_solve_dependency(t, 1.0, 8, 3, 1);
    for (std::size_t i = 0; i < p.size(); i++) {
        EXPECT_NEAR(r.values[i], p.values[i], 1e-15);
    }
}

TEST(LinearSolveDependency, AffineDependencyRecoversIdeal) {
    // I = d p + (1-d) p_unif: the dependency formula inverts exactly.
    const int m = 9, n = 3, k = 2;
    const double d = 0.35;
    auto p = haar_ideal(m, n, 6);
    auto c = mixing_coefficients(m, n, k);
    RecycledTable t(m, n, k, TableKind::exact);
    for (std::size_t i = 0; i < p.size(); i++) {
        double inter = d * p.values[i] + (1 - d) * p_unif(m, n);
        t.values[i] = c.signal * p.values[i] + c.mix * inter;
    }
    auto r = linear_solve_dependency(t, d, m, n, k);
    for (std::size_t i = 0; i < p.size(); i++) {
        EXPECT_NEAR(r.values[i], p.values[i], 1e-15);
    }
}

TEST(LinearSolveDependency, OutOfRangeNeedsFallback) {
    auto t = zero_bias_table(haar_ideal(8, 3, 1), 1);
    EXPECT_THROW(linear_solve_dependency(t, 1.25, 8, 3, 1), FallbackRequired);
    EXPECT_THROW(linear_solve_dependency(t, -0.01, 8, 3, 1), FallbackRequired);
}

TEST(GlobalGradient, NoiselessLine) {
    const double d0 = 0.02, c = 0.0031;
    std::vector<std::pair<int, double>> s;
    for (int k = 1; k <= 5; k++) {
        s.emplace_back(k, d0 - c * k);
    }
    EXPECT_NEAR(fit_global_gradient(s, d0), c, 1e-15);
}

TEST(GlobalGradient, MatchesNormalEquationsOracle) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int nd = 1; nd <= 6; nd++) {
        for (int trial = 0; trial < 20; trial++) {
            double d0 = u(rng);
            std::vector<std::pair<int, double>> s;
            Eigen::MatrixXd a(nd, 1);
            Eigen::VectorXd b(nd);
            for (int k = 1; k <= nd; k++) {
                double y = u(rng);
                s.emplace_back(k, y);
                // y = d0 - g k  <=>  (d0 - y) = g k
                a(k - 1, 0) = k;
                b(k - 1) = d0 - y;
            }
            double want = oracle::normal_equations(a, b)(0);
            EXPECT_NEAR(fit_global_gradient(s, d0), want, 1e-12);
        }
    }
    EXPECT_THROW(fit_global_gradient({}, 1.0), ArgumentError);
}

TEST(ExtrapolateLinear, ExactLineRecoversIntercept) {
    const int m = 8, n = 4, nd = 3;
    const double pu = p_unif(m, n);
    const double g = 0.1 * pu;
    std::vector<RecycledTable> tables;
    std::vector<double> alpha(binomial(m, n));
    for (std::size_t i = 0; i < alpha.size(); i++) {
        // y_1 = alpha - g stays above p_unif so the slope sign is negative.
        alpha[i] = pu * (1.5 + 0.25 * (i % 5));
    }
    double d0 = 0.0;
    for (double a : alpha) {
        d0 += a;
    }
    d0 /= static_cast<double>(alpha.size());
    for (int k = 1; k <= nd; k++) {
        RecycledTable t(m, n, k, TableKind::estimated);
        for (std::size_t i = 0; i < alpha.size(); i++) {
            t.values[i] = pu + (alpha[i] - g * k);
        }
        tables.push_back(t);
    }
    auto r = extrapolate_linear(tables, d0, pu);
    EXPECT_NEAR(r.params["g_avg"].get<double>(), g, 1e-15);
    for (std::size_t i = 0; i < alpha.size(); i++) {
        EXPECT_NEAR(r.per_mask[i], alpha[i], 1e-15);
        EXPECT_NEAR(r.values[i], pu + alpha[i], 1e-15);
    }
}

TEST(ExtrapolateLinear, FlatDataUsesLiteralFormula) {
    const int m = 7, n = 3;
    const double pu = p_unif(m, n);
    const double d0 = 3e-3;
    std::vector<RecycledTable> tables;
    for (int k = 1; k <= 2; k++) {
        RecycledTable t(m, n, k, TableKind::estimated);
        std::fill(t.values.begin(), t.values.end(), pu);
        tables.push_back(t);
    }
    auto r = extrapolate_linear(tables, d0, pu);
    // D_k = 0, so g = d0 (1+2)/(1+4); y_1 = 0 < p_unif gives sign +1.
    double g = d0 * 3.0 / 5.0;
    double alpha = 0.0 - g * 1.5;
    for (double v : r.values) {
        EXPECT_NEAR(v, std::abs(pu + alpha), 1e-18);
    }
}

TEST(ExtrapolateLinear, SignTieResolvesPositive) {
    const int m = 6, n = 3;
    const double pu = p_unif(m, n);
    std::vector<RecycledTable> tables;
    for (int k = 1; k <= 2; k++) {
        RecycledTable t(m, n, k, TableKind::estimated);
        // y_1 = |2 pu - pu| = pu exactly for the first mask.
        std::fill(t.values.begin(), t.values.end(), 2.0 * pu);
        tables.push_back(t);
    }
    double d0 = 2.0 * pu;
    auto r = extrapolate_linear(tables, d0, pu);
    double g = fit_global_gradient({{1, pu}, {2, pu}}, d0);
    EXPECT_NEAR(r.per_mask[0], pu - g * 1.5, 1e-15);
}

TEST(ExtrapolateLinear, NdMustBeBelowN) {
    auto p = haar_ideal(6, 3, 1);
    std::vector<RecycledTable> t{zero_bias_table(p, 1), zero_bias_table(p, 2), zero_bias_table(p, 2)};
    EXPECT_THROW(extrapolate_linear(t, 0.01, p_unif(6, 3)), ArgumentError);
    EXPECT_THROW(extrapolate_linear({}, 0.01, p_unif(6, 3)), ArgumentError);
}

TEST(ExponentialFit, NoiselessRate) {
    const double d0 = 4e-3;
    for (double a : {0.0, 0.05, 0.7, 2.5, 11.0}) {
        std::vector<std::pair<int, double>> s;
        for (int k = 1; k <= 3; k++) {
            s.emplace_back(k, d0 * std::exp(-a * k));
        }
        EXPECT_NEAR(fit_exponential_rate(s, d0).alpha, a, 1e-9) << a;
    }
}

TEST(ExponentialFit, MinimizesResidualOnGrid) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    for (int trial = 0; trial < 50; trial++) {
        const double d0 = 1.0;
        std::vector<std::pair<int, double>> s;
        for (int k = 1; k <= 3; k++) {
            s.emplace_back(k, u(rng));
        }
        auto fit = fit_exponential_rate(s, d0);
        for (int i = 0; i <= 20000; i++) {
            double a = 20.0 * i / 20000;
            double sse = 0.0;
            for (auto [x, y] : s) {
                sse += std::pow(y - d0 * std::exp(-a * x), 2);
            }
            EXPECT_LE(fit.sse, sse + 1e-15);
        }
    }
}

TEST(ExponentialFit, Degenerate) {
    EXPECT_THROW(fit_exponential_rate({{1, 0.0}, {2, 0.1}}, 1.0), FitDegenerate);
    EXPECT_THROW(fit_exponential_rate({{1, 0.2}}, 0.0), FitDegenerate);
}

TEST(ExponentialAmplitude, MatchesClosedFormAndOracle) {
    const double alpha = 0.43, lam = 2.5e-4;
    std::vector<std::pair<int, double>> exact;
    for (int k = 1; k <= 3; k++) {
        exact.emplace_back(k, lam * std::exp(-alpha * k));
    }
    EXPECT_NEAR(fit_exponential_amplitude(exact, alpha), lam, 1e-12);

    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; trial++) {
        std::vector<std::pair<int, double>> pts;
        Eigen::MatrixXd a(4, 1);
        Eigen::VectorXd b(4);
        for (int k = 1; k <= 4; k++) {
            double y = u(rng);
            pts.emplace_back(k, y);
            a(k - 1, 0) = std::exp(-alpha * k);
            b(k - 1) = y;
        }
        EXPECT_NEAR(fit_exponential_amplitude(pts, alpha), oracle::normal_equations(a, b)(0), 1e-12);
    }
}

TEST(ExtrapolateExponential, RecoversAmplitudes) {
    const int m = 8, n = 4;
    const double pu = p_unif(m, n);
    const double alpha = 0.6;
    std::vector<double> lam(binomial(m, n));
    double d0 = 0.0;
    for (std::size_t i = 0; i < lam.size(); i++) {
        lam[i] = pu * (0.5 + 0.1 * (i % 7));
        d0 += lam[i];
    }
    d0 /= static_cast<double>(lam.size());
    std::vector<RecycledTable> tables;
    for (int k = 1; k <= 3; k++) {
        RecycledTable t(m, n, k, TableKind::estimated);
        for (std::size_t i = 0; i < lam.size(); i++) {
            t.values[i] = pu + lam[i] * std::exp(-alpha * k);
        }
        tables.push_back(t);
    }
    auto r = extrapolate_exponential(tables, d0, pu);
    EXPECT_NEAR(r.params["alpha_avg"].get<double>(), alpha, 1e-9);
    for (std::size_t i = 0; i < lam.size(); i++) {
        EXPECT_NEAR(r.per_mask[i], lam[i], 1e-12);
        EXPECT_NEAR(r.values[i], pu + lam[i], 1e-12);
    }
}

TEST(ExtrapolateExponential, NonPositiveDeviationSuggestsLinear) {
    const int m = 6, n = 3;
    std::vector<RecycledTable> tables;
    for (int k = 1; k <= 2; k++) {
        RecycledTable t(m, n, k, TableKind::estimated);
        std::fill(t.values.begin(), t.values.end(), p_unif(m, n));
        tables.push_back(t);
    }
    try {
        extrapolate_exponential(tables, 0.01, p_unif(m, n));
        FAIL();
    } catch (const FitDegenerate &e) {
        EXPECT_NE(std::string(e.what()).find("linear"), std::string::npos);
    }
}

TEST(Normalize, Examples) {
    MitigationReport r;
    r.m = 4;
    r.n = 1;
    r.values = {0.1, 0.2, 0.3, 0.4};
    auto a = normalize_report(r);
    for (std::size_t i = 0; i < 4; i++) {
        EXPECT_NEAR(a.normalized[i], r.values[i], 1e-16);
    }
    r.values = {0.2, 0.4, 0.6, 0.8};
    auto b = normalize_report(r);
    EXPECT_DOUBLE_EQ(b.norm_mass, 2.0);
    for (std::size_t i = 0; i < 4; i++) {
        EXPECT_DOUBLE_EQ(b.normalized[i], r.values[i] / 2.0);
    }
    EXPECT_NEAR(l1(b.normalized, b.values), 1.0, 1e-15);
    r.values = {0, 0, 0, 0};
    EXPECT_THROW(normalize_report(r), NormalizationError);
}

TEST(Normalize, L1IdentityAndChainedInequality) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; trial++) {
        auto p = haar_ideal(7, 3, 900 + trial);
        MitigationReport r;
        r.m = 7;
        r.n = 3;
        double scale = 0.3 + 1.5 * u(rng);
        for (double v : p.values) {
            r.values.push_back(std::abs(scale * v + 0.02 * (u(rng) - 0.5)));
        }
        auto nr = normalize_report(r);
        EXPECT_NEAR(l1(nr.normalized, nr.values), std::abs(1.0 - nr.norm_mass), 1e-12);
        EXPECT_LE(l1(nr.normalized, p.values), 2.0 * l1(nr.values, p.values) + 1e-15);
    }
}

TEST(Methods, PermutationInvariance) {
    const int m = 8, n = 4;
    auto u = haar_unitary(m, 12);
    std::vector<int> perm{3, 7, 1, 0, 6, 2, 5, 4};
    auto v = permute_outputs(u, perm);
    auto pa = ideal_distribution(u, InputConfig::first_modes(m, n));
    auto pb = ideal_distribution(v, InputConfig::first_modes(m, n));
    std::vector<RecycledTable> ta, tb;
    for (int k = 1; k <= 3; k++) {
        ta.push_back(recycled_table_exact(pa, k));
        tb.push_back(recycled_table_exact(pb, k));
    }
    const double pu = p_unif(m, n);
    double d0a = abs_avg_deviation(pa), d0b = abs_avg_deviation(pb);
    EXPECT_NEAR(d0a, d0b, 1e-15);
    std::vector<std::pair<MitigationReport, MitigationReport>> pairs{
        {linear_solve(ta[0], m, n, 1), linear_solve(tb[0], m, n, 1)},
        {linear_solve_dependency(ta[1], 0.3, m, n, 2), linear_solve_dependency(tb[1], 0.3, m, n, 2)},
        {extrapolate_linear(ta, d0a, pu), extrapolate_linear(tb, d0b, pu)},
        {extrapolate_exponential(ta, d0a, pu), extrapolate_exponential(tb, d0b, pu)},
    };
    for (const auto &[a, b] : pairs) {
        std::size_t i = 0;
        for_each_mask(m, n, [&](Mask s) {
            Mask moved = 0;
            for (int j : mask_modes(s)) {
                moved |= Mask{1} << perm[j];
            }
            // The exponential rate comes from a golden-section search, so it
            // only agrees to the search tolerance.
            double tol = a.method == "extrap_exp" ? 1e-7 * pu : 1e-9 * pu;
            EXPECT_NEAR(b.values[colex_rank(moved)], a.values[i], tol) << a.method;
            i++;
        });
    }
}

TEST(Report, ExportFormat) {
    auto p = haar_ideal(6, 3, 2);
    auto r = linear_solve(zero_bias_table(p, 1), 6, 3, 1);
    auto dir = std::filesystem::temp_directory_path() / "recycle_report_export";
    std::filesystem::create_directories(dir);
    write_report(r, (dir / "r.csv").string(), (dir / "r.json").string());
    std::ifstream f(dir / "r.csv");
    std::string line;
    std::getline(f, line);
    EXPECT_EQ(line, "mask_hex,value,normalized");
    auto meta = nlohmann::json::parse(std::ifstream(dir / "r.json"));
    EXPECT_EQ(meta["method"], "linear_solve");
    EXPECT_TRUE(meta.contains("params"));
    EXPECT_TRUE(meta.contains("norm_mass"));
    EXPECT_EQ(meta["inputs_digest"].get<std::string>().size(), 64u);
    std::filesystem::remove_all(dir);
}
