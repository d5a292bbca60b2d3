// Copyright 2026 the scratch-ir authors
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except in compliance
// with the License. You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License
// is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
// or implied. See the License for the specific language governing permissions and limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace scratchir {

enum class ErrorCode {
    Config,
    Data,
    Numeric,
    Io,
    State,
};

/// Single exception type for the whole core; `code` maps onto the CLI /
/// C API status values (config=2, data=3, numeric=4).
class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, std::string message) : std::runtime_error(std::move(message)), code_(code) {}
    ErrorCode code() const { return code_; }

  private:
    ErrorCode code_;
};

[[noreturn]] inline void throw_config(const std::string& msg) { throw Error(ErrorCode::Config, msg); }
[[noreturn]] inline void throw_data(const std::string& msg) { throw Error(ErrorCode::Data, msg); }
[[noreturn]] inline void throw_numeric(const std::string& msg) { throw Error(ErrorCode::Numeric, msg); }
[[noreturn]] inline void throw_io(const std::string& msg) { throw Error(ErrorCode::Io, msg); }

/// Deterministic RNG wrapper. std::mt19937_64 output is pinned by the
/// standard; the distributions are not, so sampling is implemented here
/// to make identical seeds produce identical artifacts on any toolchain.
class Rng {
  public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // unbiased integer in [0, n)
    uint64_t uniform_u64(uint64_t n) {
        if (n == 0) {
            throw_numeric("uniform_u64: n must be > 0");
        }
        uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    size_t uniform_index(size_t n) { return static_cast<size_t>(uniform_u64(n)); }

    // uniform in [0, 1) with 53-bit resolution
    double uniform_real() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform_range(double lo, double hi) { return lo + (hi - lo) * uniform_real(); }

    // Box-Muller; one value per call, no cached spare (keeps replay simple)
    double gaussian() {
        double u1 = uniform_real();
        double u2 = uniform_real();
        while (u1 <= 0.0) {
            u1 = uniform_real();
        }
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // N(0, std^2) truncated to |z| <= 2*std, BERT-style init
    double truncated_normal(double std_dev) {
        double z = gaussian();
        while (std::fabs(z) > 2.0) {
            z = gaussian();
        }
        return z * std_dev;
    }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (size_t i = items.size(); i > 1; --i) {
            size_t j = uniform_index(i);
            std::swap(items[i - 1], items[j]);
        }
    }

  private:
    std::mt19937_64 engine_;
};

/// splitmix64; used to derive per-stage seeds from the global pipeline seed.
inline uint64_t mix_seed(uint64_t seed, uint64_t tag) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace scratchir
