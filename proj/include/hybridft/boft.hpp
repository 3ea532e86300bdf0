#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hybridft/error.hpp"
#include "hybridft/fft.hpp"
#include "hybridft/matrix.hpp"
#include "hybridft/polar.hpp"
#include "hybridft/rng.hpp"

namespace hybridft::adapt {

using num::Matrix;

inline constexpr std::size_t kDefaultButterflyDepth = 3;

// Product of sparse orthogonal butterfly blocks.  Block i pairs indices at
// distance dim/2^(i+1), following the FFT hierarchy; for depth beyond
// log2(dim) the stride cycle repeats.
struct BoftState {
    std::vector<Matrix> blocks;
    std::vector<std::size_t> strides;
    std::size_t dim = 0;

    std::size_t depth() const { return blocks.size(); }

    // trainable entries live on the butterfly support only: the diagonal and
    // the paired off-diagonal, 2*dim per block
    std::size_t trainable_entries() const { return blocks.size() * 2 * dim; }
};

namespace detail {

inline std::size_t log2_exact(std::size_t n) {
    std::size_t l = 0;
    while ((std::size_t{1} << l) < n) ++l;
    return l;
}

inline bool on_butterfly_support(std::size_t row, std::size_t col, std::size_t stride) {
    return col == row || col == (row ^ stride);
}

// zero everything off the block's stride pattern
inline void mask_to_support(Matrix& m, std::size_t stride) {
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            if (!on_butterfly_support(i, j, stride)) m(i, j) = 0.0;
}

}  // namespace detail

inline std::vector<std::size_t> butterfly_strides(std::size_t dim, std::size_t depth) {
    const std::size_t levels = detail::log2_exact(dim);
    std::vector<std::size_t> strides(depth);
    for (std::size_t i = 0; i < depth; ++i) strides[i] = dim >> (1 + (i % levels));
    return strides;
}

// Near-identity init: identity plus gaussian noise on the support, polar
// projected back onto the orthogonal group.
inline BoftState boft_init(std::size_t dim, std::size_t depth, std::uint64_t seed,
                           double noise_std = 1e-3) {
    if (!num::is_power_of_two(dim))
        throw invalid_input_error("boft_init: dim must be a power of two");
    if (depth < 1) throw invalid_input_error("boft_init: depth must be >= 1");

    Rng rng(seed);
    BoftState s;
    s.dim = dim;
    s.strides = butterfly_strides(dim, depth);
    s.blocks.reserve(depth);
    for (std::size_t b = 0; b < depth; ++b) {
        Matrix block = Matrix::identity(dim);
        if (noise_std > 0.0) {
            for (std::size_t i = 0; i < dim; ++i) {
                block(i, i) += rng.gaussian(noise_std);
                block(i, i ^ s.strides[b]) += rng.gaussian(noise_std);
            }
            block = num::polar_orthogonal_project(block);
            detail::mask_to_support(block, s.strides[b]);
        }
        s.blocks.push_back(std::move(block));
    }
    return s;
}

// Masked gradient step per block, then projection back to the orthogonal
// group; the butterfly support is preserved by both.
inline BoftState boft_step(BoftState s, const std::vector<Matrix>& grads, double eta) {
    if (grads.size() != s.blocks.size())
        throw shape_error("boft_step: expected one gradient per block");
    for (std::size_t b = 0; b < s.blocks.size(); ++b) {
        if (!grads[b].same_shape(s.blocks[b]))
            throw shape_error("boft_step: gradient shape mismatch at block " + std::to_string(b));
        Matrix g = grads[b];
        detail::mask_to_support(g, s.strides[b]);
        Matrix stepped = s.blocks[b] - eta * g;
        stepped = num::polar_orthogonal_project(stepped);
        detail::mask_to_support(stepped, s.strides[b]);
        s.blocks[b] = std::move(stepped);
    }
    return s;
}

// Composed orthogonal transform P = B_0 B_1 ... B_{m-1}.
inline Matrix boft_compose(const BoftState& s) {
    Matrix p = Matrix::identity(s.dim);
    for (const Matrix& b : s.blocks) p = p * b;
    return p;
}

// Dense skew-symmetric generator for the Cayley-parameterized BOFT branch
// used by the hybrid update (the standalone adapter keeps butterfly blocks).
struct SkewGenState {
    Matrix q;               // d_out x d_out, exactly skew-symmetric
    double eta_boft = 1e-3; // Cayley step size

    std::size_t trainable_entries() const {
        return q.rows() * (q.rows() - 1) / 2;
    }
};

inline SkewGenState skew_gen_init(std::size_t dim, double eta_boft) {
    SkewGenState s;
    s.q = Matrix(dim, dim);
    s.eta_boft = eta_boft;
    return s;
}

}  // namespace hybridft::adapt
