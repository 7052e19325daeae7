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

#include <complex>
#include <cstdint>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "recycle/errors.h"

namespace recycle {

struct Interferometer {
    // Row i, column j: amplitude from input mode i to output mode j.
    Eigen::MatrixXcd u;
    std::string provenance = "external";
    std::uint64_t seed = 0;

    int dim() const {
        return static_cast<int>(u.rows());
    }

    double unitarity_error() const {
        Eigen::MatrixXcd d = u * u.adjoint() - Eigen::MatrixXcd::Identity(u.rows(), u.cols());
        return d.cwiseAbs().maxCoeff();
    }
};

// Haar-distributed unitary: QR of a complex Gaussian matrix, with the phases of
// R's diagonal folded back into Q.
inline Interferometer haar_unitary(int m, std::uint64_t seed) {
    if (m < 1) {
        throw ArgumentError("haar_unitary: m must be >= 1");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
    Eigen::MatrixXcd z(m, m);
    for (int j = 0; j < m; j++) {
        for (int i = 0; i < m; i++) {
            double re = gauss(rng);
            double im = gauss(rng);
            z(i, j) = {re, im};
        }
    }
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(z);
    Eigen::MatrixXcd q = qr.householderQ();
    const Eigen::MatrixXcd &r = qr.matrixQR();
    for (int j = 0; j < m; j++) {
        std::complex<double> d = r(j, j);
        double a = std::abs(d);
        q.col(j) *= a > 0 ? d / a : std::complex<double>(1.0);
    }
    Interferometer out;
    out.u = q;
    out.provenance = "haar_seed";
    out.seed = seed;
    return out;
}

inline Interferometer from_matrix(const Eigen::MatrixXcd &u, double tol = 1e-10) {
    if (u.rows() != u.cols() || u.rows() < 1) {
        throw ArgumentError("interferometer matrix must be square and nonempty");
    }
    Interferometer out;
    out.u = u;
    if (out.unitarity_error() >= tol) {
        throw ArgumentError("interferometer matrix is not unitary");
    }
    return out;
}

// Relabels output modes: new output perm[j] receives old output j.
inline Interferometer permute_outputs(const Interferometer &in, const std::vector<int> &perm) {
    Interferometer out = in;
    for (int j = 0; j < in.dim(); j++) {
        out.u.col(perm[j]) = in.u.col(j);
    }
    out.provenance = "external";
    return out;
}

inline nlohmann::json to_json(const Interferometer &itf) {
    nlohmann::json j;
    j["m"] = itf.dim();
    if (itf.provenance == "haar_seed") {
        j["provenance"] = {{"kind", "haar_seed"}, {"seed", itf.seed}};
    } else {
        j["provenance"] = {{"kind", "external"}};
    }
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < itf.dim(); i++) {
        nlohmann::json row = nlohmann::json::array();
        for (int k = 0; k < itf.dim(); k++) {
            row.push_back({itf.u(i, k).real(), itf.u(i, k).imag()});
        }
        rows.push_back(row);
    }
    j["entries"] = rows;
    return j;
}

inline Interferometer interferometer_from_json(const nlohmann::json &j) {
    if (!j.contains("m") || !j.contains("entries")) {
        throw ConfigError("interferometer JSON needs fields m and entries");
    }
    int m = j.at("m").get<int>();
    const auto &rows = j.at("entries");
    if (m < 1 || static_cast<int>(rows.size()) != m) {
        throw ConfigError("interferometer JSON: entries do not match m");
    }
    Eigen::MatrixXcd u(m, m);
    for (int i = 0; i < m; i++) {
        if (static_cast<int>(rows[i].size()) != m) {
            throw ConfigError("interferometer JSON: ragged row " + std::to_string(i));
        }
        for (int k = 0; k < m; k++) {
            u(i, k) = {rows[i][k].at(0).get<double>(), rows[i][k].at(1).get<double>()};
        }
    }
    Interferometer out = from_matrix(u);
    if (j.contains("provenance") && j["provenance"].is_object() &&
        j["provenance"].value("kind", "") == "haar_seed") {
        out.provenance = "haar_seed";
        out.seed = j["provenance"].value("seed", std::uint64_t{0});
    }
    return out;
}

inline void save_interferometer(const Interferometer &itf, const std::string &path) {
    std::ofstream f(path);
    if (!f) {
        throw ConfigError("cannot write " + path);
    }
    f << to_json(itf).dump(2) << "\n";
}

inline Interferometer load_interferometer(const std::string &path) {
    std::ifstream f(path);
    if (!f) {
        throw ConfigError("cannot read " + path);
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception &e) {
        throw ConfigError(std::string("interferometer JSON parse error: ") + e.what());
    }
    return interferometer_from_json(j);
}

}  // namespace recycle
