#pragma once

#include <stdexcept>
#include <string>

namespace hybridft {

// Shape or dimension disagreement between operands.
struct shape_error : std::invalid_argument {
    explicit shape_error(const std::string& what) : std::invalid_argument(what) {}
};

// Argument outside the operation's domain (non-finite entries, non-skew
// input, zero reflector, ...).
struct invalid_input_error : std::invalid_argument {
    explicit invalid_input_error(const std::string& what) : std::invalid_argument(what) {}
};

// Requested rank exceeds what the operand supports.
struct invalid_rank_error : std::invalid_argument {
    explicit invalid_rank_error(const std::string& what) : std::invalid_argument(what) {}
};

// Matrix is singular or numerically rank-deficient where full rank is required.
struct singularity_error : std::runtime_error {
    explicit singularity_error(const std::string& what) : std::runtime_error(what) {}
};

// A documented call contract was violated (stale cache, non-unitary input, ...).
struct contract_error : std::logic_error {
    explicit contract_error(const std::string& what) : std::logic_error(what) {}
};

// Malformed file, config, or corpus record.
struct data_error : std::runtime_error {
    explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

// Training diverged or an iteration failed to converge.
struct numerical_error : std::runtime_error {
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hybridft
