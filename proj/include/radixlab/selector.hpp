#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "radixlab/strings.hpp"

// Radix Selection and the trie view of its cost. The trie stores, for every
// materialized prefix v, the nontruncated subtree size J(v) = number of input
// strings starting with v; the per-rank bucket-operation counts are path sums
// of the J(v) >= 2 nodes. radix_select is implemented independently as the
// plain list-distribution loop so the two serve as mutual oracles.

namespace radixlab {

class trie {
public:
    struct node {
        std::int64_t count = 0;                  // J(v)
        std::int32_t leaf_string = -1;           // resident string when count == 1
        std::vector<std::pair<int, std::int32_t>> kids; // (symbol, node id), symbol-sorted
    };

    trie(std::span<const tailed_string> strings, std::int64_t cap = default_cap)
        : n_(strings.size()) {
        std::vector<std::int32_t> idx(strings.size());
        std::iota(idx.begin(), idx.end(), 0);
        nodes_.emplace_back();
        build(strings, std::move(idx), 0, 0, cap);
    }

    std::size_t size() const { return n_; }
    const node& at(std::int32_t id) const { return nodes_[static_cast<std::size_t>(id)]; }
    const node& root() const { return nodes_.front(); }
    std::size_t node_count() const { return nodes_.size(); }

    std::int32_t child(std::int32_t id, int symbol) const {
        for (const auto& [s, k] : at(id).kids)
            if (s == symbol) return k;
        return -1;
    }

    template <typename Visitor> // Visitor(node_id, depth)
    void visit(Visitor&& visit) const {
        struct frame {
            std::int32_t id;
            int depth;
        };
        std::vector<frame> stack{{0, 0}};
        while (!stack.empty()) {
            auto [id, depth] = stack.back();
            stack.pop_back();
            visit(id, depth);
            const auto& nd = at(id);
            for (auto it = nd.kids.rbegin(); it != nd.kids.rend(); ++it)
                stack.push_back({it->second, depth + 1});
        }
    }

private:
    void build(std::span<const tailed_string> strings, std::vector<std::int32_t> idx,
               std::int32_t id, int depth, std::int64_t cap) {
        nodes_[static_cast<std::size_t>(id)].count = static_cast<std::int64_t>(idx.size());
        if (idx.size() == 1) {
            nodes_[static_cast<std::size_t>(id)].leaf_string = idx.front();
            return;
        }
        if (idx.empty()) return;
        if (depth >= cap)
            raise(errc::cap_reached, "trie bucketing hit the cap; strings not pairwise distinct?");
        const int b = strings[static_cast<std::size_t>(idx.front())].alphabet();
        std::vector<std::vector<std::int32_t>> buckets(static_cast<std::size_t>(b));
        for (auto i : idx)
            buckets[static_cast<std::size_t>(
                        strings[static_cast<std::size_t>(i)].symbol(
                            static_cast<std::uint64_t>(depth) + 1))]
                .push_back(i);
        idx.clear();
        idx.shrink_to_fit();
        for (int r = 0; r < b; ++r) {
            if (buckets[static_cast<std::size_t>(r)].empty()) continue;
            nodes_.emplace_back();
            const auto kid = static_cast<std::int32_t>(nodes_.size() - 1);
            nodes_[static_cast<std::size_t>(id)].kids.emplace_back(r, kid);
            build(strings, std::move(buckets[static_cast<std::size_t>(r)]), kid, depth + 1, cap);
        }
    }

    std::size_t n_;
    std::vector<node> nodes_;
};

// Z_n(v): walk v's path from the root summing every J >= 2.
inline std::int64_t z_cost(const trie& t, const tailed_string& v) {
    std::int64_t sum = 0, depth = 0;
    std::int32_t id = 0;
    while (id >= 0 && t.at(id).count >= 2) {
        sum += t.at(id).count;
        id = t.child(id, v.symbol(static_cast<std::uint64_t>(++depth)));
    }
    return sum;
}

struct cost_profile {
    std::vector<std::int64_t> y;       // y[l-1] = Y_n(l), leaves in string order
    std::int64_t max_cost = 0;
    std::vector<std::size_t> argmax_ranks; // 1-based ranks attaining max
    double mean_cost = 0;

    // Quantile indexing with the convention Y(n+1) := Y(n).
    std::int64_t at_rank(std::size_t rank) const {
        if (rank < 1) raise(errc::invalid_rank, "rank must be >= 1");
        if (rank > y.size()) rank = y.size();
        return y[rank - 1];
    }
    std::int64_t at_quantile(double t) const {
        const auto n = static_cast<double>(y.size());
        return at_rank(static_cast<std::size_t>(std::floor(t * n)) + 1);
    }
};

// Y_n(l) for every rank in one traversal; in-order leaves are the order
// statistics.
inline cost_profile rank_costs(const trie& t) {
    cost_profile out;
    out.y.reserve(t.size());
    struct frame {
        std::int32_t id;
        std::int64_t pathsum;
    };
    std::vector<frame> stack{{0, 0}};
    while (!stack.empty()) {
        auto [id, pathsum] = stack.back();
        stack.pop_back();
        const auto& nd = t.at(id);
        if (nd.count >= 2) pathsum += nd.count;
        if (nd.count == 1) {
            out.y.push_back(pathsum);
            continue;
        }
        for (auto it = nd.kids.rbegin(); it != nd.kids.rend(); ++it)
            stack.push_back({it->second, pathsum});
    }
    if (!out.y.empty()) {
        out.max_cost = *std::max_element(out.y.begin(), out.y.end());
        double sum = 0;
        for (std::size_t l = 0; l < out.y.size(); ++l) {
            sum += static_cast<double>(out.y[l]);
            if (out.y[l] == out.max_cost) out.argmax_ranks.push_back(l + 1);
        }
        out.mean_cost = sum / static_cast<double>(out.y.size());
    }
    return out;
}

// Total Radix Sorting cost: sum of J(v) over all nodes with J(v) >= 2.
inline std::int64_t radix_sort_cost(const trie& t) {
    std::int64_t sum = 0;
    t.visit([&](std::int32_t id, int) {
        if (t.at(id).count >= 2) sum += t.at(id).count;
    });
    return sum;
}

struct trie_shape {
    int height = 0;     // max k >= 1 with some Lambda_{n,k} > 1
    int fill_level = 0; // max l with Lambda_{n,l}(v) > 1 for all v in Sigma^l
};

inline trie_shape trie_stats(const trie& t, int b) {
    trie_shape s;
    t.visit([&](std::int32_t id, int depth) {
        if (t.at(id).count >= 2 && depth > s.height) s.height = depth;
    });
    if (t.root().count < 2) return s;
    std::vector<std::int32_t> level{0};
    int l = 0;
    while (true) {
        std::vector<std::int32_t> next;
        bool full = true;
        for (auto id : level) {
            if (static_cast<int>(t.at(id).kids.size()) != b) {
                full = false;
                break;
            }
            for (const auto& [sym, kid] : t.at(id).kids) {
                if (t.at(kid).count < 2) {
                    full = false;
                    break;
                }
                next.push_back(kid);
            }
            if (!full) break;
        }
        if (!full) break;
        ++l;
        level = std::move(next);
    }
    s.fill_level = l;
    return s;
}

struct selection {
    std::size_t string_index = 0;
    std::int64_t bucket_ops = 0;
};

// Radix Select as the plain iterative distribution loop: each pass assigns
// every string of the current list to one of b buckets (one bucket operation
// per string), then descends into the bucket holding the sought rank.
inline selection radix_select(std::size_t k, int b, std::span<const tailed_string> strings,
                              std::int64_t cap = default_cap) {
    if (k < 1 || k > strings.size()) raise(errc::invalid_rank, "invalid input");
    std::vector<std::size_t> list(strings.size());
    std::iota(list.begin(), list.end(), 0);
    std::int64_t ops = 0;
    std::uint64_t x = 1;
    while (list.size() > 1) {
        if (static_cast<std::int64_t>(x) > cap)
            raise(errc::cap_reached, "selection exceeded cap; duplicate strings?");
        std::vector<std::vector<std::size_t>> buckets(static_cast<std::size_t>(b));
        for (auto i : list) buckets[static_cast<std::size_t>(strings[i].symbol(x))].push_back(i);
        ops += static_cast<std::int64_t>(list.size());
        std::size_t low = 0, bucket = 0;
        while (low + buckets[bucket].size() < k) {
            low += buckets[bucket].size();
            ++bucket;
        }
        list = std::move(buckets[bucket]);
        k -= low;
        ++x;
    }
    return {list.front(), ops};
}

} // namespace radixlab
