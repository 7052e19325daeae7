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

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "recycle/errors.h"

namespace recycle {

class Sha256 {
  public:
    Sha256() : ctx_(EVP_MD_CTX_new()) {
        if (ctx_ == nullptr || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) {
            throw std::runtime_error("sha256 init failed");
        }
    }
    ~Sha256() {
        EVP_MD_CTX_free(ctx_);
    }
    Sha256(const Sha256 &) = delete;
    Sha256 &operator=(const Sha256 &) = delete;

    Sha256 &update(const void *data, std::size_t len) {
        EVP_DigestUpdate(ctx_, data, len);
        return *this;
    }
    Sha256 &update(const std::string &s) {
        return update(s.data(), s.size());
    }
    template <typename T>
    Sha256 &update_pod(const T &v) {
        return update(&v, sizeof(T));
    }
    template <typename T>
    Sha256 &update_vec(const std::vector<T> &v) {
        return update(v.data(), v.size() * sizeof(T));
    }

    std::string hex() {
        unsigned char out[EVP_MAX_MD_SIZE];
        unsigned int len = 0;
        EVP_DigestFinal_ex(ctx_, out, &len);
        std::ostringstream ss;
        for (unsigned int i = 0; i < len; i++) {
            ss << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(out[i]);
        }
        return ss.str();
    }

  private:
    EVP_MD_CTX *ctx_;
};

inline std::string sha256_hex(const std::string &bytes) {
    return Sha256().update(bytes).hex();
}

inline std::string sha256_file(const std::string &path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw ConfigError("cannot read " + path);
    }
    Sha256 h;
    char buf[1 << 14];
    while (f) {
        f.read(buf, sizeof(buf));
        h.update(buf, static_cast<std::size_t>(f.gcount()));
    }
    return h.hex();
}

}  // namespace recycle
