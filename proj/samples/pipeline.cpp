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

// End-to-end walk through the library on one random interferometer: exact
// output distribution, lossy shots, recycled tables, every mitigation method
// and the KL divergence of each result from the ideal distribution.
//
//   sample_pipeline [m] [n] [eta] [N_tot] [seed]

#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <string>

#include "recycle/bounds.h"
#include "recycle/harness.h"

using namespace recycle;

int main(int argc, char **argv) {
    ExperimentConfig cfg;
    cfg.m = argc > 1 ? std::atoi(argv[1]) : 12;
    cfg.n = argc > 2 ? std::atoi(argv[2]) : 4;
    cfg.eta = argc > 3 ? std::atof(argv[3]) : 0.8;
    cfg.n_tot = argc > 4 ? std::strtoull(argv[4], nullptr, 10) : 100000;
    const std::uint64_t seed = argc > 5 ? std::strtoull(argv[5], nullptr, 10) : 1;
    cfg.seeds = {seed};
    cfg.methods.push_back("richardson");

    try {
        cfg.validate();
        Interferometer u = haar_unitary(cfg.m, seed);
        ProbabilityTable ideal = ideal_distribution(u, InputConfig::first_modes(cfg.m, cfg.n));
        std::cout << "m=" << cfg.m << " n=" << cfg.n << " eta=" << cfg.eta << " N_tot=" << cfg.n_tot << "\n";
        std::cout << "outcomes: " << ideal.size() << ", no-collision mass before renormalizing: " << ideal.raw_mass
                  << "\n";

        SampleLedger ledger = draw_samples(ideal, LossModel(cfg.eta), cfg.n_tot, sample_seed_for(seed));
        std::cout << "shots per number of lost photons:";
        for (auto t : ledger.totals_per_k) {
            std::cout << " " << t;
        }
        std::cout << "\n";

        RecycledTable r1 = recycled_table(ledger, 1);
        std::cout << "recycled k=1 sums: " << r1.pre_normalization_sum() << " before the 1/"
                  << ancestor_count(cfg.m, cfg.n, 1) << " factor, " << r1.sum() << " after\n\n";

        SeedRun run = run_seed(cfg, seed, cfg.eta, cfg.n_tot);
        std::cout << std::left << std::setw(16) << "method" << std::setw(14) << "KL" << "TVD\n";
        for (const auto &o : run.outcomes) {
            std::cout << std::setw(16) << o.method;
            if (o.defined) {
                std::cout << std::setw(14) << o.kl << o.tvd;
            } else {
                std::cout << "undefined: " << o.note;
            }
            if (o.fallback) {
                std::cout << "  (" << o.note << ")";
            }
            std::cout << "\n";
        }

        SampleBound b = linsolve_regime_max_samples(cfg.m, cfg.n, 1, cfg.eta);
        std::cout << "\nlinear-solve advantage regime ends near N_tot = " << b.n_max
                  << (b.empty_regime ? " (empty)" : "") << "\n";
    } catch (const std::exception &e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
    return 0;
}
