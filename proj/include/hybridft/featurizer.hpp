#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "hybridft/error.hpp"
#include "hybridft/fft.hpp"

namespace hybridft::train {

// Hashed bag of character n-grams (byte level, orders 1..3) with signed
// hashing, L2-normalized.  Deterministic: fixed FNV-1a constants, no RNG.
struct Featurizer {
    std::size_t dim = 0;

    explicit Featurizer(std::size_t d = 0) : dim(d) {
        if (d != 0 && !num::is_power_of_two(d))
            throw invalid_input_error("featurizer: dim must be a power of two");
    }

    static std::uint64_t fnv1a(std::string_view bytes, std::uint64_t salt) {
        std::uint64_t h = 1469598103934665603ULL ^ (salt * 0x100000001b3ULL);
        for (unsigned char c : bytes) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        return h;
    }

    std::vector<double> features(std::string_view text) const {
        std::vector<double> f(dim, 0.0);
        for (std::size_t n = 1; n <= 3; ++n) {
            if (text.size() < n) break;
            for (std::size_t i = 0; i + n <= text.size(); ++i) {
                const std::uint64_t h = fnv1a(text.substr(i, n), n);
                const std::size_t idx = (h >> 8) & (dim - 1);
                f[idx] += (h & 1) ? 1.0 : -1.0;
            }
        }
        double nrm = 0.0;
        for (double x : f) nrm += x * x;
        if (nrm > 0.0) {
            nrm = std::sqrt(nrm);
            for (double& x : f) x /= nrm;
        }
        return f;
    }
};

}  // namespace hybridft::train
