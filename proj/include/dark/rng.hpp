// Copyright (c) 2026 dark-engine contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

#include "dark/common.hpp"

namespace dark {

// Deterministic random stream. The engine is std::mt19937_64, whose output
// sequence is fixed by the standard; every distribution below is derived from
// raw engine words by hand so the sampled values are identical on any
// platform and can be checkpointed exactly.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n). Rejection keeps the draw unbiased.
    std::uint64_t uniform_int(std::uint64_t n) {
        DARK_CHECK(n > 0, "uniform_int: empty range");
        if (n == 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        for (;;) {
            const std::uint64_t v = engine_();
            if (v < limit) return v % n;
        }
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Standard normal via Box-Muller, one value per call (no cached state,
    // keeps checkpointed streams trivial to resume).
    double gaussian() {
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    // Beta(a, b) by Johnk's rejection method; exact for the modest shape
    // parameters used here and free of hidden distribution state.
    double beta(double a, double b) {
        DARK_CHECK(a > 0.0 && b > 0.0, "beta: shape parameters must be > 0");
        for (;;) {
            const double x = std::pow(uniform(), 1.0 / a);
            const double y = std::pow(uniform(), 1.0 / b);
            if (x + y <= 1.0 && x + y > 0.0) return x / (x + y);
        }
    }

    // Engine state as text (the standard-mandated mt19937_64 representation).
    std::string state() const {
        std::ostringstream os;
        os << engine_;
        return os.str();
    }

    void restore(const std::string& text) {
        std::istringstream is(text);
        is >> engine_;
        DARK_CHECK(!is.fail(), "Rng::restore: malformed engine state");
    }

    bool operator==(const Rng& other) const { return engine_ == other.engine_; }

private:
    std::mt19937_64 engine_;
};

} // namespace dark
