#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "radixlab/markov.hpp"
#include "radixlab/rng.hpp"

namespace radixlab {

inline constexpr std::int64_t default_cap = 4096;

enum class tail_kind { zeros, max_symbol, sampled };

// A point of Sigma^infty: finitely many explicit symbols followed by a
// symbolic tail. Sampled tails are materialized lazily; symbol i is a pure
// function of (seed, stream key, i, previous symbol), so extending a string
// deeper is deterministic no matter when or in which order it happens.
class tailed_string {
    struct sampled_stream {
        std::shared_ptr<const markov_spec> spec;
        init_selector init;
        std::uint64_t key = 0;
        mutable std::vector<int> symbols; // single-writer memo

        void extend(std::size_t upto) const {
            while (symbols.size() < upto) {
                int prev = symbols.empty() ? -1 : symbols.back();
                auto cum = spec->step_cum(init, prev);
                double u = rng::uniform01(key, symbols.size() + 1);
                int b = spec->b();
                int s = 0;
                while (s + 1 < b && cum[static_cast<std::size_t>(s) + 1] <= u) ++s;
                symbols.push_back(s);
            }
        }
    };

public:
    static tailed_string zeros(int b, std::vector<int> prefix) {
        while (!prefix.empty() && prefix.back() == 0) prefix.pop_back();
        return tailed_string(b, std::move(prefix), tail_kind::zeros, nullptr);
    }

    static tailed_string max_tail(int b, std::vector<int> prefix) {
        while (!prefix.empty() && prefix.back() == b - 1) prefix.pop_back();
        return tailed_string(b, std::move(prefix), tail_kind::max_symbol, nullptr);
    }

    static tailed_string sampled(std::shared_ptr<const markov_spec> spec, init_selector init,
                                 std::uint64_t stream_key) {
        auto st = std::make_shared<sampled_stream>();
        st->spec = std::move(spec);
        st->init = init;
        st->key = stream_key;
        const int b = st->spec->b();
        return tailed_string(b, {}, tail_kind::sampled, std::move(st));
    }

    int alphabet() const { return b_; }
    tail_kind tail() const { return tail_; }
    std::uint64_t stream_key() const { return stream_ ? stream_->key : 0; }
    std::span<const int> prefix() const {
        return tail_ == tail_kind::sampled ? std::span<const int>(stream_->symbols)
                                           : std::span<const int>(prefix_);
    }
    // Length beyond which the string is a constant symbolic tail; sampled
    // strings have no such bound.
    std::size_t resolved_length() const { return prefix().size(); }

    // 1-based symbol access.
    int symbol(std::uint64_t i) const {
        if (tail_ == tail_kind::sampled) {
            stream_->extend(i);
            return stream_->symbols[i - 1];
        }
        if (i <= prefix_.size()) return prefix_[i - 1];
        return tail_ == tail_kind::zeros ? 0 : b_ - 1;
    }

    std::vector<int> first_symbols(std::size_t k) const {
        std::vector<int> out(k);
        for (std::size_t i = 0; i < k; ++i) out[i] = symbol(i + 1);
        return out;
    }

    // Member of Sigma_0^infty: all zeros from some point on, after at least
    // one nonzero symbol.
    bool in_sigma_zero() const {
        return tail_ == tail_kind::zeros && !prefix_.empty();
    }

    // The left-limit companion v-: decrement the last nonzero symbol and
    // continue with (b-1)(b-1)...
    tailed_string left_companion() const {
        if (!in_sigma_zero()) raise(errc::not_in_sigma_zero, "v- requires a Sigma_0 string");
        std::vector<int> pfx = prefix_;
        pfx.back() -= 1;
        return max_tail(b_, std::move(pfx));
    }

    bool same_stream(const tailed_string& o) const {
        return stream_ && o.stream_ && stream_->key == o.stream_->key;
    }

private:
    tailed_string(int b, std::vector<int> prefix, tail_kind tail,
                  std::shared_ptr<sampled_stream> stream)
        : b_(b), tail_(tail), prefix_(std::move(prefix)), stream_(std::move(stream)) {}

    int b_;
    tail_kind tail_;
    std::vector<int> prefix_;
    std::shared_ptr<sampled_stream> stream_;
};

// Independent reproducible strings from the source; string i uses stream key
// derive(seed, i) so runs are identical for identical (spec, init, n, seed).
inline std::vector<tailed_string> sample_strings(const markov_spec& spec, init_selector init,
                                                 std::size_t n, std::uint64_t seed) {
    auto shared = std::make_shared<const markov_spec>(spec);
    std::vector<tailed_string> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(tailed_string::sampled(shared, init, rng::derive(seed, i)));
    return out;
}

// String coincidence j(v,w): length of the longest common prefix. nullopt
// means the strings agree forever. A cap hit with sampled tails still
// unresolved is an error, never a silent tie.
inline std::optional<std::int64_t> coincidence(const tailed_string& v, const tailed_string& w,
                                               std::int64_t cap = default_cap) {
    if (cap < 1) raise(errc::bad_config, "coincidence cap must be >= 1");
    const bool v_symbolic = v.tail() != tail_kind::sampled;
    const bool w_symbolic = w.tail() != tail_kind::sampled;
    if (!v_symbolic && !w_symbolic && v.same_stream(w)) return std::nullopt;

    for (std::int64_t i = 1; i <= cap; ++i) {
        const auto ui = static_cast<std::uint64_t>(i);
        if (v_symbolic && w_symbolic && ui > v.resolved_length() && ui > w.resolved_length()) {
            // Both are constant from here on.
            return v.symbol(ui) == w.symbol(ui) ? std::optional<std::int64_t>{}
                                                : std::optional<std::int64_t>{i - 1};
        }
        if (v.symbol(ui) != w.symbol(ui)) return i - 1;
    }
    raise(errc::cap_reached, "coincidence exceeded cap");
}

// Strict lexicographic order; equality only for symbolically identical
// strings.
inline std::strong_ordering compare_strings(const tailed_string& v, const tailed_string& w,
                                            std::int64_t cap = default_cap) {
    auto j = coincidence(v, w, cap);
    if (!j) return std::strong_ordering::equal;
    const auto next = static_cast<std::uint64_t>(*j) + 1;
    return v.symbol(next) <=> w.symbol(next);
}

} // namespace radixlab
