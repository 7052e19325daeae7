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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "recycle/baselines.h"
#include "recycle/bounds.h"
#include "recycle/errors.h"
#include "recycle/gaussian.h"
#include "recycle/harness.h"
#include "recycle/ideal.h"
#include "recycle/interferometer.h"
#include "recycle/loss.h"

using namespace recycle;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRegime = 3;

json read_json(const std::string &path) {
    std::ifstream f(path);
    if (!f) {
        throw ConfigError("cannot read config " + path);
    }
    try {
        return json::parse(f);
    } catch (const json::exception &e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
}

void write_json(const fs::path &path, const json &j) {
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw ConfigError("cannot write " + path.string());
    }
    f << j.dump(2) << "\n";
}

std::ofstream open_csv(const fs::path &path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw ConfigError("cannot write " + path.string());
    }
    f.precision(17);
    return f;
}

Interferometer unitary_from(const json &cfg, int m) {
    const json u = cfg.value("unitary", json::object());
    if (u.contains("file")) {
        Interferometer itf = load_interferometer(u.at("file").get<std::string>());
        if (itf.dim() != m) {
            throw ConfigError("unitary file dimension does not match m");
        }
        return itf;
    }
    return haar_unitary(m, u.value("haar_seed", cfg.value("seed", std::uint64_t{0})));
}

ProbabilityTable ideal_from(const json &cfg) {
    const int m = cfg.at("m").get<int>();
    const int n = cfg.at("n").get<int>();
    CollisionOptions opts;
    std::string policy = cfg.value("collision_policy", std::string("discard_renormalize"));
    if (policy == "reject_if_mass_low") {
        opts.policy = CollisionPolicy::reject_if_mass_low;
    } else if (policy != "discard_renormalize") {
        throw ConfigError("collision_policy must be discard_renormalize or reject_if_mass_low");
    }
    opts.mass_floor = cfg.value("mass_floor", 0.5);
    InputConfig in = InputConfig::first_modes(m, n);
    if (cfg.contains("input_modes")) {
        in.occupied_modes = cfg.at("input_modes").get<std::vector<int>>();
    }
    return ideal_distribution(unitary_from(cfg, m), in, opts);
}

void write_table(const SectorTable &t, const fs::path &path) {
    auto f = open_csv(path);
    f << "mask_hex,probability\n";
    std::size_t i = 0;
    for_each_mask(t.m, t.photons, [&](Mask s) { f << mask_hex(s) << "," << t.values[i++] << "\n"; });
}

void cmd_gen_unitary(const json &cfg, const fs::path &out) {
    const int m = cfg.at("m").get<int>();
    Interferometer u = haar_unitary(m, cfg.value("seed", std::uint64_t{0}));
    save_interferometer(u, (out / "unitary.json").string());
}

void cmd_simulate(const json &cfg, const fs::path &out) {
    ProbabilityTable ideal = ideal_from(cfg);
    write_table(ideal, out / "ideal.csv");
    write_json(out / "ideal.json", {{"m", ideal.m}, {"n", ideal.photons}, {"raw_mass", ideal.raw_mass}});
    for (int k : cfg.value("lossy_k", std::vector<int>{})) {
        write_table(lossy_conditional_distribution(ideal, k), out / ("lossy_k" + std::to_string(k) + ".csv"));
    }
}

void cmd_sample(const json &cfg, const fs::path &out) {
    ProbabilityTable ideal = ideal_from(cfg);
    SampleLedger l = draw_samples(ideal, LossModel(cfg.value("eta", 0.0)), cfg.at("N_tot").get<std::uint64_t>(),
                                  cfg.value("seed", std::uint64_t{0}), cfg.value("shards", 1));
    write_ledger(l, (out / "ledger.csv").string(), (out / "ledger.json").string());
}

void cmd_mitigate(const json &cfg, const fs::path &out) {
    fs::path dir = cfg.at("ledger_dir").get<std::string>();
    SampleLedger l = read_ledger((dir / "ledger.csv").string(), (dir / "ledger.json").string());
    json ec = cfg;
    ec["m"] = l.m;
    ec["n"] = l.n;
    ec["seeds"] = {l.seed};
    ec["eta"] = l.eta;
    ExperimentConfig c = experiment_config_from_json(ec);
    json summary;
    for (const auto &r : mitigate_ledger(l, c, out.string())) {
        summary[r.method] = {{"defined", r.report.has_value()}, {"fallback", r.fallback}, {"note", r.note}};
    }
    write_json(out / "mitigation.json", summary);
}

void cmd_compare(const json &cfg, const fs::path &out) {
    ExperimentConfig c = experiment_config_from_json(cfg);
    c.output_dir = out.string();
    ComparisonReport r = run_experiment(c);
    for (const auto &x : r.crossovers) {
        std::cout << x.method << " crossover: " << (x.value ? std::to_string(*x.value) : "-") << " (" << x.status << ")\n";
    }
}

RegimeMethod regime_method(const std::string &s) {
    if (s == "linsolve") {
        return RegimeMethod::linsolve;
    }
    if (s == "linsolve_dep") {
        return RegimeMethod::linsolve_dep;
    }
    if (s == "extrap_linear") {
        return RegimeMethod::extrap_linear;
    }
    throw ConfigError("bound method must be linsolve, linsolve_dep or extrap_linear");
}

void cmd_bound(const json &cfg, const fs::path &out) {
    RegimeQuery q;
    q.m = cfg.at("m").get<int>();
    q.n = cfg.at("n").get<int>();
    q.k = cfg.value("k", 1);
    q.eta = cfg.at("eta").get<double>();
    q.n_tot = cfg.value("N_tot", 1.0);
    if (cfg.contains("delta")) {
        q.delta = cfg.at("delta").get<double>();
    }
    if (cfg.contains("eps_bias")) {
        q.eps_bias = cfg.at("eps_bias").get<double>();
    }
    q.split_groups = cfg.value("split_groups", false);
    q.n_d = cfg.value("n_d", 1);
    RegimeMethod method = regime_method(cfg.value("method", std::string("linsolve")));
    q.validate();
    SampleBound b = linsolve_regime_max_samples(q);
    RegimeCheck chk = regime_inequality_check(q, method);
    write_json(out / "bound.json",
               {{"N_max", b.n_max},
                {"empty_regime", b.empty_regime},
                {"envelopes",
                 {{"postselect", statistical_error_envelope(q, EnvelopeKind::postselect)},
                  {"recycled", statistical_error_envelope(q, EnvelopeKind::recycled)},
                  {"deviation", statistical_error_envelope(q, EnvelopeKind::deviation)}}},
                {"check", {{"lhs", chk.lhs}, {"rhs", chk.rhs}, {"holds", chk.holds}}}});
    std::cout << "N_max = " << b.n_max << (b.empty_regime ? " (empty regime)" : "") << "\n";
    if (cfg.contains("sweep")) {
        auto rows = regime_sweep(q, method, cfg.at("sweep").at("axis").get<std::string>(),
                                 cfg.at("sweep").at("grid").get<std::vector<double>>());
        auto f = open_csv(out / "bound_sweep.csv");
        f << "param,value,lhs,rhs,holds\n";
        for (const auto &r : rows) {
            f << r.param << "," << r.value << "," << r.check.lhs << "," << r.check.rhs << ","
              << (r.check.holds ? "true" : "false") << "\n";
        }
    }
}

void cmd_zne_nogo(const json &cfg, const fs::path &out) {
    std::string basis = cfg.value("basis", std::string("loss_basis"));
    ZneMethod method;
    if (basis == "loss_basis") {
        method = ZneMethod::loss_basis;
    } else if (basis == "eta_power_basis") {
        method = ZneMethod::eta_power_basis;
    } else {
        throw ConfigError("basis must be loss_basis or eta_power_basis");
    }
    std::string cmp = cfg.value("comparator", std::string("linear"));
    if (cmp != "linear" && cmp != "sqrt") {
        throw ConfigError("comparator must be linear or sqrt");
    }
    auto rows = violation_sweep(method, cfg.value("lo", 3), cfg.value("hi", 14), cfg.value("eps_max", 0.01),
                                cfg.value("eta_0", 0.01), cfg.value("eta_top", 0.95),
                                cfg.value("trials", std::uint64_t{3000}), cfg.value("seed", std::uint64_t{0}),
                                cmp == "linear" ? PostselectComparator::linear : PostselectComparator::sqrt);
    auto f = open_csv(out / "zne_sweep.csv");
    f << "n_minus_c,violations,trials\n";
    json j = json::array();
    for (const auto &r : rows) {
        f << r.n_minus_c << "," << r.violations << "," << r.trials << "\n";
        j.push_back({{"n_minus_c", r.n_minus_c}, {"n", r.n}, {"c", r.c}, {"violations", r.violations}, {"trials", r.trials}});
    }
    write_json(out / "zne_sweep.json", {{"basis", basis}, {"comparator", cmp}, {"rows", j}});
}

void cmd_gauss_lab(const json &cfg, const fs::path &out) {
    const int n = cfg.at("n").get<int>();
    const std::uint64_t big_n = cfg.at("N").get<std::uint64_t>();
    const std::uint64_t trials = cfg.value("trials", std::uint64_t{20000});
    const std::uint64_t seed = cfg.value("seed", std::uint64_t{0});
    CltProbe p = clt_probe(n, big_n, trials, seed, cfg.value("bin_width", 0.25), cfg.value("threads", 0));
    auto f = open_csv(out / "histogram.csv");
    f << "bin_left,bin_right,count\n";
    for (const auto &b : p.bins) {
        f << b.left << "," << b.right << "," << b.count << "\n";
    }
    json summary = {{"n", n}, {"N", big_n}, {"trials", trials}, {"ks", p.ks}, {"skewness", p.skewness},
                    {"ks_threshold_99", p.ks_threshold}, {"rejects_normality", p.rejects_normality()}};
    if (cfg.contains("moment_trials")) {
        auto mr = permanent_moments(n, cfg.at("moment_trials").get<std::uint64_t>(), seed, cfg.value("t_max", 2));
        for (const auto &[t, v] : mr.moments) {
            summary["moments"][std::to_string(t)] = v;
        }
        for (const auto &[t, v] : mr.reference) {
            summary["reference"][std::to_string(t)] = v;
        }
    }
    write_json(out / "summary.json", summary);
}

fs::path default_out(const std::string &sub) {
    const char *root = std::getenv("RECYCLE_OUTPUT_ROOT");
    return fs::path(root && *root ? root : "recycle_out") / sub;
}

int run(const std::function<void(const json &, const fs::path &)> &fn, const std::string &sub,
        const std::string &config_path, std::string out_dir) {
    try {
        json cfg = read_json(config_path);
        fs::path out = out_dir.empty() ? default_out(sub) : fs::path(out_dir);
        fs::create_directories(out);
        try {
            fn(cfg, out);
        } catch (const json::exception &e) {
            throw ConfigError(std::string("config: ") + e.what());
        }
        write_manifest(out.string(), cfg, list_files(out.string()));
        std::cout << sub << ": wrote " << out.string() << "\n";
        return 0;
    } catch (const ConfigError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ArgumentError &e) {
        std::cerr << "argument error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const SingularSystem &e) {
        std::cerr << "argument error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const RegimeError &e) {
        std::cerr << "regime error: " << e.what() << "\n";
        return kExitRegime;
    } catch (const CapacityError &e) {
        std::cerr << "capacity error: " << e.what() << "\n";
        return kExitRegime;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Photon-loss simulation and recycling mitigation"};
    app.require_subcommand(1);
    struct Sub {
        const char *name;
        const char *help;
        void (*fn)(const json &, const fs::path &);
    };
    const Sub subs[] = {
        {"gen-unitary", "Draw a Haar-random interferometer", cmd_gen_unitary},
        {"simulate", "Exact ideal and lossy output distributions", cmd_simulate},
        {"sample", "Draw lossy shots into a sample ledger", cmd_sample},
        {"mitigate", "Apply postselection and recycling methods to a ledger", cmd_mitigate},
        {"compare", "Seeded end-to-end comparison against the ideal distribution", cmd_compare},
        {"bound", "Sample-regime bounds and envelopes", cmd_bound},
        {"zne-nogo", "Zero-noise extrapolation violation sweep", cmd_zne_nogo},
        {"gauss-lab", "Gaussian permanent moments and CLT probe", cmd_gauss_lab},
    };
    std::string config, out;
    int code = 0;
    for (const auto &s : subs) {
        CLI::App *sc = app.add_subcommand(s.name, s.help);
        sc->add_option("--config", config, "JSON config file")->required();
        sc->add_option("--out", out, "Output directory (default $RECYCLE_OUTPUT_ROOT/<subcommand>)");
        sc->callback([&code, &config, &out, s] { code = run(s.fn, s.name, config, out); });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        return app.exit(e) == 0 ? 0 : kExitConfig;
    }
    return code;
}
