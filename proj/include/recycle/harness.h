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
#include <atomic>
#include <exception>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "recycle/baselines.h"
#include "recycle/errors.h"
#include "recycle/hash.h"
#include "recycle/ideal.h"
#include "recycle/interferometer.h"
#include "recycle/loss.h"
#include "recycle/mitigation.h"
#include "recycle/recycling.h"

namespace recycle {

inline constexpr double kKlFloor = 1e-12;

enum class KlDirection {
    // sum p ln(p / max(q, floor)), p ideal
    ideal_to_candidate,
    // sum q ln(q / max(p, floor)), q candidate
    candidate_to_ideal,
};

inline double kl_divergence(const std::vector<double> &p, const std::vector<double> &q,
                            KlDirection dir = KlDirection::ideal_to_candidate, double floor = kKlFloor) {
    if (p.size() != q.size()) {
        throw ArgumentError("kl_divergence: tables cover different mask sets");
    }
    const std::vector<double> &a = dir == KlDirection::ideal_to_candidate ? p : q;
    const std::vector<double> &b = dir == KlDirection::ideal_to_candidate ? q : p;
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); i++) {
        if (a[i] > 0.0) {
            s += a[i] * std::log(a[i] / std::max(b[i], floor));
        }
    }
    return s;
}

inline double total_variation(const std::vector<double> &p, const std::vector<double> &q) {
    if (p.size() != q.size()) {
        throw ArgumentError("total_variation: tables cover different mask sets");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); i++) {
        s += std::abs(p[i] - q[i]);
    }
    return 0.5 * s;
}

// Weighted sum over the supplied masks; values need not be normalized.
inline double expectation_value(const SectorTable &values, const std::map<Mask, double> &weights) {
    double s = 0.0;
    for (const auto &[mask, w] : weights) {
        s += w * values.at(mask);
    }
    return s;
}

struct MinorFlatness {
    double h_inf = 0.0;
    double spectral_norm = 0.0;
    double ratio = 0.0;
};

// Mean of the row-wise max moduli of a minor against its spectral norm.
inline MinorFlatness minor_flatness(const Interferometer &itf, const std::vector<int> &rows,
                                    const std::vector<int> &cols) {
    const int n = static_cast<int>(rows.size());
    if (n == 0 || cols.size() != rows.size()) {
        throw ArgumentError("minor_flatness needs a nonempty square minor");
    }
    Eigen::MatrixXcd a(n, n);
    for (int i = 0; i < n; i++) {
        for (int j = 0; j < n; j++) {
            a(i, j) = itf.u(rows[i], cols[j]);
        }
    }
    MinorFlatness f;
    for (int i = 0; i < n; i++) {
        f.h_inf += a.row(i).cwiseAbs().maxCoeff();
    }
    f.h_inf /= n;
    f.spectral_norm = Eigen::JacobiSVD<Eigen::MatrixXcd>(a).singularValues()(0);
    f.ratio = f.h_inf / f.spectral_norm;
    return f;
}

inline constexpr int kConfigSchemaVersion = 1;

struct ExperimentConfig {
    int m = 0;
    int n = 0;
    double eta = 0.0;
    std::uint64_t n_tot = 0;
    std::vector<int> k_list{1};
    int n_d = 0;  // 0 means min(3, n-1)
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> methods{"postselect", "linsolve", "linsolve_dep", "extrap_linear", "extrap_exp"};
    // Either a fixed Haar seed, a file, or (neither) one Haar unitary per seed.
    std::optional<std::uint64_t> unitary_seed;
    std::string unitary_file;
    std::string sweep_axis;
    std::vector<double> sweep_grid;
    std::string output_dir;
    KlDirection kl_direction = KlDirection::ideal_to_candidate;
    int shards = 1;
    bool divide_sample_groups = false;
    DependencyFormula dependency_formula = DependencyFormula::literal;
    double zne_eta_top = 0.95;
    // Worker threads for run_experiment; 0 uses every hardware thread.
    int threads = 0;

    int effective_n_d() const {
        return n_d > 0 ? n_d : default_n_d(n);
    }

    void validate() const {
        if (m < 1 || m > kMaxModes || n < 1 || n > m) {
            throw ConfigError("config needs 1 <= n <= m <= 64");
        }
        if (!(eta >= 0.0 && eta <= 1.0)) {
            throw ConfigError("config eta must lie in [0,1]");
        }
        if (seeds.empty()) {
            throw ConfigError("config seeds must be nonempty");
        }
        if (k_list.empty()) {
            throw ConfigError("config k_list must be nonempty");
        }
        for (int k : k_list) {
            if (k < 1 || k > n - 1) {
                throw ConfigError("config k_list entries must lie in [1, n-1]");
            }
        }
        if (effective_n_d() < 1 || effective_n_d() >= n) {
            if (std::any_of(methods.begin(), methods.end(),
                            [](const std::string &s) { return s == "extrap_linear" || s == "extrap_exp"; })) {
                throw ConfigError("config n_d must lie in [1, n-1]");
            }
        }
        static const std::vector<std::string> known{"postselect",    "linsolve",   "linsolve_dep",
                                                    "extrap_linear", "extrap_exp", "richardson"};
        for (const auto &mth : methods) {
            if (std::find(known.begin(), known.end(), mth) == known.end()) {
                throw ConfigError("unknown method " + mth);
            }
        }
        if (!sweep_axis.empty()) {
            if (sweep_axis != "eta" && sweep_axis != "N_tot") {
                throw ConfigError("sweep axis must be eta or N_tot");
            }
            if (sweep_grid.empty()) {
                throw ConfigError("sweep grid must be nonempty");
            }
        }
        if (shards < 1) {
            throw ConfigError("shards must be >= 1");
        }
        if (threads < 0) {
            throw ConfigError("threads must be >= 0");
        }
    }
};

inline ExperimentConfig experiment_config_from_json(const nlohmann::json &j) {
    ExperimentConfig c;
    try {
        int version = j.value("schema_version", kConfigSchemaVersion);
        if (version != kConfigSchemaVersion) {
            throw ConfigError("unsupported config schema_version " + std::to_string(version));
        }
        c.m = j.at("m").get<int>();
        c.n = j.at("n").get<int>();
        c.eta = j.value("eta", 0.0);
        c.n_tot = j.value("N_tot", std::uint64_t{0});
        if (j.contains("k_list")) {
            c.k_list = j.at("k_list").get<std::vector<int>>();
        }
        c.n_d = j.value("n_d", 0);
        if (j.contains("seeds")) {
            c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        } else if (j.contains("seed")) {
            c.seeds = {j.at("seed").get<std::uint64_t>()};
        }
        if (j.contains("methods")) {
            c.methods = j.at("methods").get<std::vector<std::string>>();
        }
        if (j.contains("unitary")) {
            const auto &u = j.at("unitary");
            if (u.contains("haar_seed")) {
                c.unitary_seed = u.at("haar_seed").get<std::uint64_t>();
            }
            if (u.contains("file")) {
                c.unitary_file = u.at("file").get<std::string>();
            }
        }
        if (j.contains("sweep")) {
            c.sweep_axis = j.at("sweep").at("axis").get<std::string>();
            c.sweep_grid = j.at("sweep").at("grid").get<std::vector<double>>();
        }
        c.output_dir = j.value("output_dir", std::string());
        std::string dir = j.value("kl_direction", std::string("ideal_to_candidate"));
        if (dir == "ideal_to_candidate") {
            c.kl_direction = KlDirection::ideal_to_candidate;
        } else if (dir == "candidate_to_ideal") {
            c.kl_direction = KlDirection::candidate_to_ideal;
        } else {
            throw ConfigError("kl_direction must be ideal_to_candidate or candidate_to_ideal");
        }
        c.shards = j.value("shards", 1);
        c.divide_sample_groups = j.value("divide_sample_groups", false);
        std::string dep = j.value("dependency_formula", std::string("literal"));
        if (dep == "literal") {
            c.dependency_formula = DependencyFormula::literal;
        } else if (dep == "affine_inverse") {
            c.dependency_formula = DependencyFormula::affine_inverse;
        } else {
            throw ConfigError("dependency_formula must be literal or affine_inverse");
        }
        c.zne_eta_top = j.value("zne_eta_top", 0.95);
        c.threads = j.value("threads", 0);
    } catch (const nlohmann::json::exception &e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

inline nlohmann::json to_json(const ExperimentConfig &c) {
    nlohmann::json j;
    j["schema_version"] = kConfigSchemaVersion;
    j["m"] = c.m;
    j["n"] = c.n;
    j["eta"] = c.eta;
    j["N_tot"] = c.n_tot;
    j["k_list"] = c.k_list;
    j["n_d"] = c.effective_n_d();
    j["seeds"] = c.seeds;
    j["methods"] = c.methods;
    if (c.unitary_seed) {
        j["unitary"] = {{"haar_seed", *c.unitary_seed}};
    } else if (!c.unitary_file.empty()) {
        j["unitary"] = {{"file", c.unitary_file}};
    } else {
        j["unitary"] = nlohmann::json::object();
    }
    if (!c.sweep_axis.empty()) {
        j["sweep"] = {{"axis", c.sweep_axis}, {"grid", c.sweep_grid}};
    }
    j["output_dir"] = c.output_dir;
    j["kl_direction"] = c.kl_direction == KlDirection::ideal_to_candidate ? "ideal_to_candidate" : "candidate_to_ideal";
    j["shards"] = c.shards;
    j["divide_sample_groups"] = c.divide_sample_groups;
    j["dependency_formula"] = c.dependency_formula == DependencyFormula::literal ? "literal" : "affine_inverse";
    j["zne_eta_top"] = c.zne_eta_top;
    j["threads"] = c.threads;
    return j;
}

inline ExperimentConfig load_experiment_config(const std::string &path) {
    std::ifstream f(path);
    if (!f) {
        throw ConfigError("cannot read config " + path);
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception &e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return experiment_config_from_json(j);
}

struct MethodOutcome {
    std::string method;
    double kl = std::numeric_limits<double>::quiet_NaN();
    double tvd = std::numeric_limits<double>::quiet_NaN();
    bool defined = false;
    bool fallback = false;
    std::string note;
    std::optional<MitigationReport> report;
};

struct SeedRun {
    std::uint64_t seed = 0;
    double eta = 0.0;
    std::uint64_t n_tot = 0;
    double raw_mass = 0.0;
    std::vector<MethodOutcome> outcomes;
};

inline const MethodOutcome *find_outcome(const SeedRun &run, const std::string &method) {
    for (const auto &o : run.outcomes) {
        if (o.method == method) {
            return &o;
        }
    }
    return nullptr;
}

struct Aggregate {
    double mean = std::numeric_limits<double>::quiet_NaN();
    double min = std::numeric_limits<double>::quiet_NaN();
    double max = std::numeric_limits<double>::quiet_NaN();
    int defined = 0;
};

inline Aggregate aggregate(const std::vector<double> &v) {
    Aggregate a;
    double s = 0.0;
    for (double x : v) {
        if (std::isnan(x)) {
            continue;
        }
        if (a.defined == 0) {
            a.min = a.max = x;
        }
        a.min = std::min(a.min, x);
        a.max = std::max(a.max, x);
        s += x;
        a.defined++;
    }
    if (a.defined > 0) {
        a.mean = s / a.defined;
    }
    return a;
}

inline std::uint64_t sample_seed_for(std::uint64_t seed) {
    return splitmix64(seed ^ 0x5a3c0f1e2d4b6987ULL);
}

inline Interferometer experiment_unitary(const ExperimentConfig &cfg, std::uint64_t seed) {
    if (!cfg.unitary_file.empty()) {
        Interferometer u = load_interferometer(cfg.unitary_file);
        if (u.dim() != cfg.m) {
            throw ConfigError("unitary file dimension does not match m");
        }
        return u;
    }
    return haar_unitary(cfg.m, cfg.unitary_seed ? *cfg.unitary_seed : seed);
}

namespace detail {

inline void score(MethodOutcome &o, const ProbabilityTable &ideal, const std::vector<double> &q, KlDirection dir) {
    o.kl = kl_divergence(ideal.values, q, dir);
    o.tvd = total_variation(ideal.values, q);
    o.defined = true;
}

// Zero-loss extrapolation of every n-photon probability from postselected
// frequencies at n+1 loss levels between eta and eta_top, N_tot split evenly.
inline MitigationReport zne_full_distribution(const ProbabilityTable &ideal, const ExperimentConfig &cfg,
                                              double eta, std::uint64_t n_tot, std::uint64_t seed) {
    if (!(cfg.zne_eta_top > eta) || cfg.zne_eta_top >= 1.0) {
        throw ConfigError("richardson needs eta < zne_eta_top < 1");
    }
    ZneConfig z;
    z.n = cfg.n;
    z.c = 0;
    z.method = eta > 0.0 ? ZneMethod::richardson : ZneMethod::eta_power_basis;
    z.etas = equally_spaced(eta, cfg.zne_eta_top, cfg.n + 1);
    std::vector<double> w = zne_weights(z);
    MitigationReport r;
    r.method = "richardson";
    r.m = cfg.m;
    r.n = cfg.n;
    r.values.assign(ideal.size(), 0.0);
    for (std::size_t i = 0; i < z.etas.size(); i++) {
        std::uint64_t shots = n_tot / z.etas.size() + (i < n_tot % z.etas.size() ? 1 : 0);
        SampleLedger l = draw_samples(ideal, LossModel(z.etas[i]), shots, splitmix64(seed ^ (0x77ULL + i)), cfg.shards);
        if (shots == 0) {
            continue;
        }
        for (const auto &[s, c] : l.counts[0]) {
            r.values[colex_rank(s)] += w[i] * static_cast<double>(c) / static_cast<double>(shots);
        }
    }
    for (double &v : r.values) {
        v = std::abs(v);
    }
    r.params = {{"grid", z.etas}, {"weights", w}, {"basis", zne_method_name(z.method)}};
    r.inputs_digest = tables_digest({&ideal});
    return finish_report(std::move(r));
}

}  // namespace detail

struct MethodResult {
    std::string method;
    std::optional<MitigationReport> report;
    bool fallback = false;
    std::string note;
};

// Runs every ledger-based method of cfg (all but richardson) on one ledger.
// Undefined estimates are reported in `note` rather than thrown. When
// artifact_dir is set the recycled tables and reports are written there.
inline std::vector<MethodResult> mitigate_ledger(const SampleLedger &ledger, const ExperimentConfig &cfg,
                                                 const std::string &artifact_dir = "", std::string *stage = nullptr) {
    std::optional<ProbabilityTable> post;
    if (ledger.totals_per_k[0] > 0) {
        post = postselect_estimates(ledger);
    }
    const double pu = p_unif(cfg.m, cfg.n);
    std::map<int, RecycledTable> recycled;
    auto get_recycled = [&](int k) -> const RecycledTable * {
        auto it = recycled.find(k);
        if (it != recycled.end()) {
            return &it->second;
        }
        if (ledger.totals_per_k[k] == 0) {
            return nullptr;
        }
        RecycledTable t;
        if (cfg.divide_sample_groups) {
            ProbabilityTable sector(cfg.m, cfg.n - k, TableKind::estimated);
            std::size_t idx = 0;
            for_each_mask(cfg.m, cfg.n - k, [&](Mask s) { sector.values[idx++] = estimate_probability(ledger, s, k, true); });
            t = recycled_table(sector, cfg.n);
        } else {
            t = recycled_table(ledger, k);
        }
        if (!artifact_dir.empty()) {
            write_recycled_table(t, artifact_dir + "/recycled_k" + std::to_string(k) + ".csv",
                                 artifact_dir + "/recycled_k" + std::to_string(k) + ".json");
        }
        return &recycled.emplace(k, std::move(t)).first->second;
    };

    std::vector<MethodResult> out;
    const int k0 = cfg.k_list.front();
    for (const auto &method : cfg.methods) {
        if (method == "richardson") {
            continue;
        }
        if (stage) {
            *stage = method;
        }
        MethodResult o;
        o.method = method;
        try {
            if (method == "postselect") {
                if (!post) {
                    o.note = "no lossless shots";
                } else {
                    MitigationReport rep;
                    rep.method = "postselect";
                    rep.m = cfg.m;
                    rep.n = cfg.n;
                    rep.values = post->values;
                    rep.inputs_digest = tables_digest({&*post});
                    o.report = finish_report(std::move(rep));
                }
            } else if (method == "linsolve") {
                const RecycledTable *t = get_recycled(k0);
                if (!t) {
                    o.note = "empty sector k=" + std::to_string(k0);
                } else {
                    o.report = linear_solve(*t, cfg.m, cfg.n, k0);
                }
            } else if (method == "linsolve_dep") {
                const RecycledTable *t = get_recycled(k0);
                if (!t || !post) {
                    o.note = "needs lossless shots and sector k=" + std::to_string(k0);
                } else {
                    double d0 = abs_avg_deviation(*post);
                    double dk = abs_avg_deviation(*t);
                    DependencyResult dep{0.0, true};
                    if (d0 > 0.0) {
                        dep = dependency_factor(dk, d0, cfg.m, cfg.n, k0, cfg.dependency_formula);
                    }
                    if (dep.out_of_range) {
                        o.fallback = true;
                        o.note = "d_k=" + std::to_string(dep.d) + " outside [0,1]; used linear_solve";
                        MitigationReport rep = linear_solve(*t, cfg.m, cfg.n, k0);
                        rep.method = "linear_solve_dep";
                        rep.params["fallback"] = true;
                        rep.params["d_k"] = dep.d;
                        o.report = std::move(rep);
                    } else {
                        o.report = linear_solve_dependency(*t, dep.d, cfg.m, cfg.n, k0);
                    }
                }
            } else if (method == "extrap_linear" || method == "extrap_exp") {
                std::vector<RecycledTable> tables;
                bool ok = static_cast<bool>(post);
                for (int k = 1; k <= cfg.effective_n_d() && ok; k++) {
                    const RecycledTable *t = get_recycled(k);
                    if (!t) {
                        ok = false;
                    } else {
                        tables.push_back(*t);
                    }
                }
                if (!ok) {
                    o.note = "needs lossless shots and sectors 1..n_d";
                } else {
                    double d0 = abs_avg_deviation(*post);
                    o.report = method == "extrap_linear" ? extrapolate_linear(tables, d0, pu)
                                                         : extrapolate_exponential(tables, d0, pu);
                }
            }
        } catch (const FitDegenerate &e) {
            o.note = e.what();
        } catch (const EstimateUndefined &e) {
            o.note = e.what();
        }
        if (o.report && !artifact_dir.empty()) {
            write_report(*o.report, artifact_dir + "/report_" + method + ".csv", artifact_dir + "/report_" + method + ".json");
        }
        out.push_back(std::move(o));
    }
    return out;
}

namespace detail {

inline SeedRun run_seed_stages(const ExperimentConfig &cfg, std::uint64_t seed, double eta, std::uint64_t n_tot,
                               bool keep_reports, const std::string &artifact_dir, std::string &stage) {
    SeedRun run;
    run.seed = seed;
    run.eta = eta;
    run.n_tot = n_tot;
    stage = "unitary";
    Interferometer u = experiment_unitary(cfg, seed);
    stage = "ideal";
    ProbabilityTable ideal = ideal_distribution(u, InputConfig::first_modes(cfg.m, cfg.n));
    run.raw_mass = ideal.raw_mass;
    stage = "sampling";
    SampleLedger ledger = draw_samples(ideal, LossModel(eta), n_tot, sample_seed_for(seed), cfg.shards);
    if (!artifact_dir.empty()) {
        write_ledger(ledger, artifact_dir + "/ledger.csv", artifact_dir + "/ledger.json");
    }
    std::vector<MethodResult> results = mitigate_ledger(ledger, cfg, artifact_dir, &stage);
    std::size_t next = 0;
    for (const auto &method : cfg.methods) {
        MethodResult res;
        if (method == "richardson") {
            stage = method;
            res.method = method;
            res.report = zne_full_distribution(ideal, cfg, eta, n_tot, sample_seed_for(seed));
            if (!artifact_dir.empty()) {
                write_report(*res.report, artifact_dir + "/report_richardson.csv",
                             artifact_dir + "/report_richardson.json");
            }
        } else {
            res = std::move(results[next++]);
        }
        MethodOutcome o;
        o.method = method;
        o.fallback = res.fallback;
        o.note = res.note;
        if (res.report) {
            if (res.report->norm_mass > 0.0) {
                score(o, ideal, res.report->normalized, cfg.kl_direction);
            } else {
                o.note = "mitigated values sum to zero";
            }
            if (keep_reports) {
                o.report = std::move(res.report);
            }
        }
        run.outcomes.push_back(std::move(o));
    }
    return run;
}

template <typename E>
[[noreturn]] void rethrow_at(const E &e, std::uint64_t seed, const std::string &stage) {
    throw E("seed " + std::to_string(seed) + ", stage " + stage + ": " + e.what());
}

}  // namespace detail

// One seed: unitary, exact ideal table, samples, recycled tables, every method.
// Errors keep their type and gain the seed and pipeline stage in the message.
inline SeedRun run_seed(const ExperimentConfig &cfg, std::uint64_t seed, double eta, std::uint64_t n_tot,
                        bool keep_reports = false, const std::string &artifact_dir = "") {
    std::string stage;
    try {
        return detail::run_seed_stages(cfg, seed, eta, n_tot, keep_reports, artifact_dir, stage);
    } catch (const RegimeError &e) {
        detail::rethrow_at(e, seed, stage);
    } catch (const CapacityError &e) {
        detail::rethrow_at(e, seed, stage);
    } catch (const ConfigError &e) {
        detail::rethrow_at(e, seed, stage);
    } catch (const ArgumentError &e) {
        detail::rethrow_at(e, seed, stage);
    } catch (const NormalizationError &e) {
        detail::rethrow_at(e, seed, stage);
    }
}

struct MethodSummary {
    std::string method;
    Aggregate kl;
    Aggregate tvd;
    // Seeds where this method's KL is below postselection's.
    int beats_postselect = 0;
};

struct PointSummary {
    double eta = 0.0;
    std::uint64_t n_tot = 0;
    std::vector<SeedRun> runs;
    std::vector<MethodSummary> methods;

    const MethodSummary *method(const std::string &name) const {
        for (const auto &m : methods) {
            if (m.method == name) {
                return &m;
            }
        }
        return nullptr;
    }
};

inline PointSummary summarize(double eta, std::uint64_t n_tot, std::vector<SeedRun> runs,
                              const std::vector<std::string> &methods) {
    PointSummary p;
    p.eta = eta;
    p.n_tot = n_tot;
    for (const auto &name : methods) {
        MethodSummary s;
        s.method = name;
        std::vector<double> kl, tvd;
        for (const auto &r : runs) {
            const MethodOutcome *o = find_outcome(r, name);
            const MethodOutcome *ps = find_outcome(r, "postselect");
            kl.push_back(o ? o->kl : std::numeric_limits<double>::quiet_NaN());
            tvd.push_back(o ? o->tvd : std::numeric_limits<double>::quiet_NaN());
            if (o && o->defined && name != "postselect") {
                // A postselection estimate that does not exist loses by default.
                if (!ps || !ps->defined || o->kl < ps->kl) {
                    s.beats_postselect++;
                }
            }
        }
        s.kl = aggregate(kl);
        s.tvd = aggregate(tvd);
        p.methods.push_back(s);
    }
    p.runs = std::move(runs);
    return p;
}

struct Crossover {
    std::string method;
    std::optional<double> value;
    // "interpolated", "below_grid" (method already ahead at the first point),
    // or "none" (never ahead, or never behind then ahead).
    std::string status = "none";
};

// Where the sign of (KL_method - KL_post) first turns from >= 0 to < 0 along
// the grid. log_axis interpolates in log(x).
inline Crossover find_crossover(const std::string &method, const std::vector<double> &x,
                                const std::vector<double> &diff, bool log_axis, bool method_wins_above) {
    Crossover c;
    c.method = method;
    auto ahead = [&](std::size_t i) { return method_wins_above ? diff[i] < 0.0 : diff[i] > 0.0; };
    if (x.empty()) {
        return c;
    }
    if (ahead(0)) {
        c.status = "below_grid";
        c.value = x[0];
        if (method_wins_above) {
            return c;
        }
    }
    for (std::size_t i = 1; i < x.size(); i++) {
        if (ahead(i) != ahead(i - 1)) {
            double a = log_axis ? std::log(x[i - 1]) : x[i - 1];
            double b = log_axis ? std::log(x[i]) : x[i];
            double t = diff[i - 1] / (diff[i - 1] - diff[i]);
            double v = a + t * (b - a);
            c.value = log_axis ? std::exp(v) : v;
            c.status = "interpolated";
            if (method_wins_above || !ahead(i)) {
                return c;
            }
        }
    }
    return c;
}

struct ComparisonReport {
    ExperimentConfig config;
    std::vector<PointSummary> points;
    std::vector<Crossover> crossovers;
    std::vector<std::string> artifacts;
};

inline nlohmann::json to_json(const ComparisonReport &r) {
    nlohmann::json j;
    j["config"] = to_json(r.config);
    auto num = [](double v) -> nlohmann::json { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
    for (const auto &p : r.points) {
        nlohmann::json pj;
        pj["eta"] = p.eta;
        pj["N_tot"] = p.n_tot;
        for (const auto &m : p.methods) {
            pj["methods"][m.method] = {{"kl_mean", num(m.kl.mean)},   {"kl_min", num(m.kl.min)},
                                       {"kl_max", num(m.kl.max)},     {"tvd_mean", num(m.tvd.mean)},
                                       {"tvd_min", num(m.tvd.min)},   {"tvd_max", num(m.tvd.max)},
                                       {"defined", m.kl.defined},     {"beats_postselect", m.beats_postselect}};
        }
        for (const auto &run : p.runs) {
            nlohmann::json rj;
            rj["seed"] = run.seed;
            rj["raw_mass"] = run.raw_mass;
            for (const auto &o : run.outcomes) {
                rj["methods"][o.method] = {{"kl", num(o.kl)}, {"tvd", num(o.tvd)}, {"fallback", o.fallback}, {"note", o.note}};
            }
            pj["seeds"].push_back(rj);
        }
        j["points"].push_back(pj);
    }
    for (const auto &c : r.crossovers) {
        j["crossovers"][c.method] = {{"value", c.value ? nlohmann::json(*c.value) : nlohmann::json(nullptr)},
                                     {"status", c.status}};
    }
    return j;
}

inline void write_comparison_csv(const ComparisonReport &r, const std::string &path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw ConfigError("cannot write " + path);
    }
    f.precision(17);
    f << "eta,N_tot,method,kl_mean,kl_min,kl_max,tvd_mean,tvd_min,tvd_max,beats_postselect\n";
    for (const auto &p : r.points) {
        for (const auto &m : p.methods) {
            f << p.eta << "," << p.n_tot << "," << m.method << "," << m.kl.mean << "," << m.kl.min << "," << m.kl.max << ","
              << m.tvd.mean << "," << m.tvd.min << "," << m.tvd.max << "," << m.beats_postselect << "\n";
        }
    }
}

struct ManifestEntry {
    std::string path;
    std::string sha256;
};

inline void write_manifest(const std::string &dir, const nlohmann::json &config, const std::vector<std::string> &files) {
    nlohmann::json j;
    j["config_sha256"] = sha256_hex(config.dump());
    j["config"] = config;
    for (const auto &f : files) {
        std::filesystem::path rel = std::filesystem::relative(f, dir);
        j["artifacts"].push_back({{"path", rel.generic_string()}, {"sha256", sha256_file(f)}});
    }
    std::ofstream out(dir + "/manifest.json", std::ios::binary);
    if (!out) {
        throw ConfigError("cannot write manifest in " + dir);
    }
    out << j.dump(2) << "\n";
}

inline std::vector<std::string> list_files(const std::string &dir) {
    std::vector<std::string> out;
    for (const auto &e : std::filesystem::recursive_directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().filename() != "manifest.json") {
            out.push_back(e.path().string());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

// Runs every seed at every sweep point (or the single configured point),
// aggregates metrics, estimates crossovers and, when output_dir is set,
// writes artifacts plus a manifest of content hashes.
inline ComparisonReport run_experiment(const ExperimentConfig &cfg) {
    cfg.validate();
    ComparisonReport rep;
    rep.config = cfg;
    std::vector<std::pair<double, std::uint64_t>> points;
    if (cfg.sweep_axis == "eta") {
        for (double e : cfg.sweep_grid) {
            points.emplace_back(e, cfg.n_tot);
        }
    } else if (cfg.sweep_axis == "N_tot") {
        for (double v : cfg.sweep_grid) {
            points.emplace_back(cfg.eta, static_cast<std::uint64_t>(std::llround(v)));
        }
    } else {
        points.emplace_back(cfg.eta, cfg.n_tot);
    }
    const bool write = !cfg.output_dir.empty();
    if (write) {
        std::filesystem::create_directories(cfg.output_dir);
    }
    // Each (point, seed) job owns its directory and result slot.
    const std::size_t seeds = cfg.seeds.size();
    const std::size_t jobs = points.size() * seeds;
    std::vector<SeedRun> results(jobs);
    std::vector<std::exception_ptr> errors(jobs);
    auto job = [&](std::size_t j) {
        const std::size_t pi = j / seeds;
        const std::uint64_t seed = cfg.seeds[j % seeds];
        try {
            std::string dir;
            if (write) {
                dir = cfg.output_dir + "/point_" + std::to_string(pi) + "/seed_" + std::to_string(seed);
                std::filesystem::create_directories(dir);
            }
            results[j] = run_seed(cfg, seed, points[pi].first, points[pi].second, false, dir);
        } catch (...) {
            errors[j] = std::current_exception();
        }
    };
    const std::size_t workers = std::min<std::size_t>(jobs, cfg.threads > 0 ? cfg.threads : std::max(1u, std::thread::hardware_concurrency()));
    if (workers <= 1) {
        for (std::size_t j = 0; j < jobs; j++) {
            job(j);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; w++) {
            pool.emplace_back([&] {
                for (std::size_t j = next++; j < jobs; j = next++) {
                    job(j);
                }
            });
        }
        for (auto &t : pool) {
            t.join();
        }
    }
    for (const auto &e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    for (std::size_t pi = 0; pi < points.size(); pi++) {
        std::vector<SeedRun> runs(std::make_move_iterator(results.begin() + pi * seeds),
                                  std::make_move_iterator(results.begin() + (pi + 1) * seeds));
        rep.points.push_back(summarize(points[pi].first, points[pi].second, std::move(runs), cfg.methods));
    }
    if (!cfg.sweep_axis.empty()) {
        std::vector<double> x;
        for (const auto &p : rep.points) {
            x.push_back(cfg.sweep_axis == "eta" ? p.eta : static_cast<double>(p.n_tot));
        }
        for (const auto &name : cfg.methods) {
            if (name == "postselect") {
                continue;
            }
            std::vector<double> diff;
            for (const auto &p : rep.points) {
                const MethodSummary *a = p.method(name);
                const MethodSummary *b = p.method("postselect");
                double pk = b ? b->kl.mean : std::numeric_limits<double>::quiet_NaN();
                diff.push_back(std::isnan(pk) ? -1.0 : a->kl.mean - pk);
            }
            // Along eta the method takes the lead as loss grows; along N_tot
            // postselection takes the lead as samples grow.
            rep.crossovers.push_back(cfg.sweep_axis == "eta" ? find_crossover(name, x, diff, false, true)
                                                             : find_crossover(name, x, diff, true, false));
        }
    }
    if (write) {
        std::ofstream(cfg.output_dir + "/comparison.json", std::ios::binary) << to_json(rep).dump(2) << "\n";
        write_comparison_csv(rep, cfg.output_dir + "/comparison.csv");
        rep.artifacts = list_files(cfg.output_dir);
        write_manifest(cfg.output_dir, to_json(cfg), rep.artifacts);
    }
    return rep;
}

struct DeviationRow {
    int unitary = 0;
    std::uint64_t seed = 0;
    int k = 0;
    double mean_abs_dev = 0.0;
    // C(m-n+k,k) * mean_abs_dev
    double scaled = 0.0;
};

// Mean |I_{s,k} - p_unif| over every n-photon mask, per Haar unitary and k.
inline std::vector<DeviationRow> interference_deviation_sweep(int unitary_count, int m, int n,
                                                              const std::vector<int> &k_list, std::uint64_t seed) {
    std::vector<DeviationRow> rows;
    const double pu = p_unif(m, n);
    for (int u = 0; u < unitary_count; u++) {
        std::uint64_t s = splitmix64(seed ^ static_cast<std::uint64_t>(u));
        ProbabilityTable ideal = ideal_distribution(haar_unitary(m, s), InputConfig::first_modes(m, n));
        for (int k : k_list) {
            SectorTable it = interference_table(ideal, k);
            double acc = 0.0;
            for (double v : it.values) {
                acc += std::abs(v - pu);
            }
            DeviationRow r;
            r.unitary = u;
            r.seed = s;
            r.k = k;
            r.mean_abs_dev = acc / static_cast<double>(it.size());
            r.scaled = ancestor_count(m, n, k) * r.mean_abs_dev;
            rows.push_back(r);
        }
    }
    return rows;
}

inline void write_deviation_csv(const std::vector<DeviationRow> &rows, const std::string &path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw ConfigError("cannot write " + path);
    }
    f.precision(17);
    f << "unitary,seed,k,mean_abs_dev,scaled\n";
    for (const auto &r : rows) {
        f << r.unitary << "," << r.seed << "," << r.k << "," << r.mean_abs_dev << "," << r.scaled << "\n";
    }
}

}  // namespace recycle
