#pragma once

#include <stdexcept>
#include <string>

namespace radixlab {

enum class errc {
    non_stochastic,
    out_of_range,
    bad_dimension,
    symbol_out_of_range,
    cap_reached,
    invalid_rank,
    not_in_sigma_zero,
    degenerate_t,
    not_linear_family,
    empty_restriction,
    iteration_limit,
    bad_config,
    io_error,
};

class error : public std::runtime_error {
public:
    error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    errc code() const noexcept { return code_; }

private:
    errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& what) { throw error(code, what); }

} // namespace radixlab
