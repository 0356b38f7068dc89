#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "radixlab/error.hpp"

namespace radixlab {

// Which initial law the chain starts from: the global one (mu) or row r of
// the transition matrix (the law of the next symbol after seeing r).
struct init_selector {
    int row = -1; // -1: global

    static init_selector global() { return {}; }
    static init_selector conditional(int r) { return {r}; }
    bool is_global() const { return row < 0; }
};

// A finite-alphabet Markov source: alphabet {0,..,b-1}, initial distribution
// mu and row-stochastic transition matrix P, all entries strictly inside
// (0,1). Construction goes through validate(), which also caches the row
// prefix sums used for sampling/quantile digits and p_max.
class markov_spec {
public:
    static markov_spec validate(int b, std::vector<double> mu,
                                std::vector<std::vector<double>> rows) {
        if (b < 2) raise(errc::bad_dimension, "alphabet size must be >= 2");
        if (static_cast<int>(mu.size()) != b)
            raise(errc::bad_dimension, "mu must have length b");
        if (static_cast<int>(rows.size()) != b)
            raise(errc::bad_dimension, "P must be b x b");
        for (const auto& row : rows)
            if (static_cast<int>(row.size()) != b)
                raise(errc::bad_dimension, "P must be b x b");

        markov_spec s;
        s.b_ = b;
        s.mu_ = std::move(mu);
        s.p_.reserve(static_cast<std::size_t>(b) * b);
        for (auto& row : rows)
            for (double x : row) s.p_.push_back(x);

        check_distribution(s.mu_, "mu");
        for (int r = 0; r < b; ++r)
            check_distribution(std::span(s.p_).subspan(static_cast<std::size_t>(r) * b, b),
                               "P row");

        s.p_max_ = 0;
        for (double x : s.p_) s.p_max_ = std::max(s.p_max_, x);

        s.mu_cum_ = prefix_sums(s.mu_);
        s.p_cum_.resize(static_cast<std::size_t>(b) * (b + 1));
        for (int r = 0; r < b; ++r) {
            auto cum = prefix_sums(s.row(r));
            std::copy(cum.begin(), cum.end(),
                      s.p_cum_.begin() + static_cast<std::size_t>(r) * (b + 1));
        }
        return s;
    }

    int b() const { return b_; }
    double p_max() const { return p_max_; }
    double mu(int r) const { return mu_[static_cast<std::size_t>(r)]; }
    double p(int i, int j) const { return p_[static_cast<std::size_t>(i) * b_ + j]; }

    std::span<const double> mu_row() const { return mu_; }
    std::span<const double> row(int r) const {
        return std::span(p_).subspan(static_cast<std::size_t>(r) * b_, b_);
    }
    // Distribution of the next symbol given the previous one; prev = -1 means
    // the very first symbol under `init`.
    std::span<const double> step_row(init_selector init, int prev) const {
        if (prev >= 0) return row(prev);
        return init.is_global() ? mu_row() : row(init.row);
    }
    // Exclusive prefix sums of a step row: cum(prev)[s] = sum_{k<s} q_k.
    std::span<const double> step_cum(init_selector init, int prev) const {
        if (prev < 0 && !init.is_global()) prev = init.row;
        if (prev < 0) return std::span(mu_cum_);
        return std::span(p_cum_).subspan(static_cast<std::size_t>(prev) * (b_ + 1), b_ + 1);
    }

    bool same_shape(const markov_spec& o) const { return b_ == o.b_; }

private:
    markov_spec() = default;

    static void check_distribution(std::span<const double> v, const char* what) {
        double sum = 0;
        for (double x : v) {
            if (!(x > 0.0) || !(x < 1.0))
                raise(errc::out_of_range, std::string(what) + " entry outside (0,1)");
            sum += x;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            raise(errc::non_stochastic, std::string(what) + " does not sum to 1");
    }

    static std::vector<double> prefix_sums(std::span<const double> v) {
        std::vector<double> cum(v.size() + 1, 0.0);
        for (std::size_t i = 0; i < v.size(); ++i) cum[i + 1] = cum[i] + v[i];
        return cum;
    }

    int b_ = 0;
    double p_max_ = 0;
    std::vector<double> mu_, p_;      // p_ row-major b*b
    std::vector<double> mu_cum_;      // size b+1
    std::vector<double> p_cum_;       // size b*(b+1)
};

// Fundamental probability pi(v) = mu'_{v1} p_{v1 v2} ... under the chosen
// initial law; pi(empty) = 1.
inline double pi(const markov_spec& spec, init_selector init, std::span<const int> word) {
    double prob = 1.0;
    int prev = -1;
    for (int s : word) {
        if (s < 0 || s >= spec.b()) raise(errc::symbol_out_of_range, "symbol outside alphabet");
        prob *= spec.step_row(init, prev)[static_cast<std::size_t>(s)];
        prev = s;
    }
    return prob;
}

} // namespace radixlab
