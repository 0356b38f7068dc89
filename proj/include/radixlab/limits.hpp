#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "radixlab/analytic.hpp"
#include "radixlab/markov.hpp"
#include "radixlab/strings.hpp"

// Limit Gaussian fields of the selection cost: the covariance kernel of H
// (the string-indexed field), the quantile-indexed field G of the linear
// family, simulation of both on depth-K prefix-tree grids via the shared
// Gaussian tree, and supremum statistics.

namespace radixlab {

namespace detail {

// Prefix sums along v: A = sum pi(v^(k)), B = sum k pi(v^(k)) for k = 1..len,
// plus the closed geometric continuation for symbolic tails.
struct path_sums {
    double a = 0;       // sum pi
    double b = 0;       // sum k pi
    double prod = 1;    // pi(v^(len))
    int prev = -1;
    std::int64_t len = 0;
};

inline void accumulate_symbol(const markov_spec& spec, init_selector init, path_sums& ps,
                              int sym) {
    ps.prod *= spec.step_row(init, ps.prev)[sym];
    ps.len += 1;
    ps.a += ps.prod;
    ps.b += static_cast<double>(ps.len) * ps.prod;
    ps.prev = sym;
}

// Continue with the constant symbol c forever: adds sum_j pi(len+j) and
// sum_j (len+j) pi(len+j), j >= 1.
inline void close_constant_tail(const markov_spec& spec, init_selector init, path_sums& ps,
                                int c) {
    const double q = spec.step_row(init, ps.prev)[c];
    const double pstar = spec.p(c, c);
    const double t1 = ps.prod * q / (1 - pstar);
    const double tk = ps.prod * q *
                      (static_cast<double>(ps.len) / (1 - pstar) + 1.0 / ((1 - pstar) * (1 - pstar)));
    ps.a += t1;
    ps.b += tk;
    ps.prod = 0;
}

inline path_sums sums_to_depth(const markov_spec& spec, init_selector init,
                               const tailed_string& v, std::int64_t depth) {
    path_sums ps;
    for (std::int64_t k = 1; k <= depth; ++k)
        accumulate_symbol(spec, init, ps, v.symbol(static_cast<std::uint64_t>(k)));
    return ps;
}

// Full sums over the whole string: closed forms for symbolic tails, adaptive
// truncation otherwise. Tail error of sum (2k-1) pi beyond K is below tol.
inline path_sums sums_full(const markov_spec& spec, init_selector init, const tailed_string& v,
                           double tol) {
    path_sums ps;
    if (v.tail() == tail_kind::sampled) {
        const double q = spec.p_max();
        std::int64_t k = 1;
        while (true) {
            double tail_bound = ps.prod * ((2.0 * static_cast<double>(ps.len) - 1) * q / (1 - q) +
                                           2 * q / ((1 - q) * (1 - q)));
            if (tail_bound < tol && ps.len > 0) break;
            if (k > default_cap) raise(errc::cap_reached, "variance sums exceeded cap");
            accumulate_symbol(spec, init, ps, v.symbol(static_cast<std::uint64_t>(k)));
            ++k;
        }
        return ps;
    }
    for (int s : v.prefix()) accumulate_symbol(spec, init, ps, s);
    close_constant_tail(spec, init, ps, v.tail() == tail_kind::zeros ? 0 : spec.b() - 1);
    return ps;
}

} // namespace detail

// Var H(v) = sum_k (2k-1) pi(v^(k)) - (m(v)-1)^2, the j = infinity case of
// the covariance kernel.
inline double var_H(const markov_spec& spec, init_selector init, const tailed_string& v,
                    double tol) {
    auto ps = detail::sums_full(spec, init, v, tol);
    return 2 * ps.b - ps.a - ps.a * ps.a;
}

// E[H(v)H(w)] = Cov(j(v,S1), j(w,S1)); deep symbols beyond the coincidence
// enter only through m(v) and m(w).
inline double cov_H(const markov_spec& spec, init_selector init, const tailed_string& v,
                    const tailed_string& w, double tol, std::int64_t cap = default_cap) {
    auto jj = coincidence(v, w, cap);
    if (!jj) return var_H(spec, init, v, tol);
    const auto j = *jj;
    auto ps = detail::sums_to_depth(spec, init, v, j); // shared prefix sums
    const double mv = m_value(spec, init, v, tol);
    const double mw = m_value(spec, init, w, tol);
    const double jd = static_cast<double>(j);
    return 2 * ps.b - ps.a + jd * ((mv - 1 - ps.a) + (mw - 1 - ps.a)) - (mv - 1) * (mw - 1);
}

// --- linear family: the quantile field G -------------------------------

// Variance of G(t) for the memoryless family with ratio beta; evaluated
// through plain geometric-sum polynomials so the beta -> 1 limit needs no
// special casing.
inline double var_G(double beta, int b, double t) {
    const double sb1 = geom_sum(beta, b - 1);
    const double sb = geom_sum(beta, b);
    const double sb2 = geom_sum(beta, b + 1);
    const double gamma = sb / (beta * sb1);
    const double alpha = (beta - 1) * gamma;
    const double c1 = sb2 / (beta * sb1);
    const double c2 = sb * sb / (beta * sb1 * sb1);
    return c1 * (alpha * t + gamma) - c2;
}

namespace detail {

// Per-level additive term A_r = gamma N_r - alpha sum_{k<r} N_k of the G
// fixed-point equation, for a memoryless row p.
struct g_level_terms {
    std::vector<double> var;                 // Var(A_r)
    std::vector<std::vector<double>> cross;  // E[A_r A_r'], r < r'
};

inline g_level_terms g_terms(std::span<const double> p, double alpha, double gamma) {
    const int b = static_cast<int>(p.size());
    g_level_terms out;
    out.var.resize(static_cast<std::size_t>(b));
    out.cross.assign(static_cast<std::size_t>(b),
                     std::vector<double>(static_cast<std::size_t>(b), 0.0));
    std::vector<double> below(static_cast<std::size_t>(b) + 1, 0.0); // P_{<r}
    for (int r = 0; r < b; ++r) below[r + 1] = below[r] + p[r];
    for (int r = 0; r < b; ++r) {
        const double pr = p[r], pl = below[r];
        out.var[r] = gamma * gamma * pr * (1 - pr) + alpha * alpha * pl * (1 - pl) +
                     2 * alpha * gamma * pr * pl;
        for (int r2 = r + 1; r2 < b; ++r2) {
            const double ps = p[r2], pl2 = below[r2];
            out.cross[r][r2] = -gamma * gamma * pr * ps - alpha * gamma * pr * (1 - pl2) +
                               alpha * gamma * ps * pl + alpha * alpha * pl * (1 - pl2);
        }
    }
    return out;
}

} // namespace detail

// Covariance of the quantile field: descend levels of the common prefix of
// h(s) and h(t), accumulating Var(A) terms, and close with the cross term at
// the split. Works for any alphabet size; for b = 2 it reproduces the closed
// form -pi(w) + sum_k pi(w^(k)) / (1 - p_{w_k}).
inline double cov_G(const markov_spec& spec, double s, double t, double tol = 1e-12) {
    auto rep = classify_linear(spec, 1e-9);
    if (!rep.fully_linear) raise(errc::not_linear_family, "cov_G needs a fully linear source");
    const init_selector init = init_selector::global();
    const int b = spec.b();
    const int K = depth_for_tol(spec, tol) + 8;
    auto hs = h_value(spec, init, s, K).value.first_symbols(static_cast<std::size_t>(K));
    auto ht = h_value(spec, init, t, K).value.first_symbols(static_cast<std::size_t>(K));
    auto terms = detail::g_terms(spec.mu_row(), rep.alpha, rep.gamma);

    double cov = 0, prod = 1;
    for (int k = 0; k < K; ++k) {
        const int a = hs[static_cast<std::size_t>(k)], c = ht[static_cast<std::size_t>(k)];
        if (a != c) {
            cov += prod * terms.cross[std::min(a, c)][std::max(a, c)];
            return cov;
        }
        cov += prod * terms.var[a];
        prod *= spec.mu(a);
        if (prod < tol * (1 - spec.p_max())) break;
    }
    return cov;
}

// --- Gaussian tree simulation -------------------------------------------

// One centered Gaussian b-vector per prefix-tree node with covariance
// diag(p) - p p^T for the node's step row; the first b-1 coordinates come
// from the Cholesky factor of the leading submatrix and the last is minus
// their sum, so sum_r N_r = 0 exactly. Draws are keyed by the node path.
class gaussian_tree {
public:
    gaussian_tree(const markov_spec& spec, init_selector init, int depth, std::uint64_t seed)
        : b_(spec.b()), depth_(depth) {
        // Cholesky factors: index 0 = initial law, 1+r = row r.
        const int m = b_ - 1;
        std::vector<Eigen::MatrixXd> chol(static_cast<std::size_t>(b_) + 1);
        for (int which = 0; which <= b_; ++which) {
            auto p = which == 0 ? spec.step_row(init, -1) : spec.row(which - 1);
            Eigen::MatrixXd omega(m, m);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j)
                    omega(i, j) = (i == j ? p[i] * (1 - p[i]) : -p[i] * p[j]);
            chol[static_cast<std::size_t>(which)] = omega.llt().matrixL();
        }

        levels_.resize(static_cast<std::size_t>(depth));
        std::vector<std::uint64_t> keys{rng::derive(seed, 0x6e6f6465)};
        std::size_t width = 1;
        for (int s = 0; s < depth; ++s) {
            auto& lvl = levels_[static_cast<std::size_t>(s)];
            lvl.resize(width * static_cast<std::size_t>(b_));
            Eigen::VectorXd z(m), n(m);
            for (std::size_t node = 0; node < width; ++node) {
                const int which = s == 0 ? 0 : 1 + static_cast<int>(node % static_cast<std::size_t>(b_));
                for (int i = 0; i < m; ++i)
                    z(i) = rng::normal_quantile(
                        rng::uniform01(keys[node], static_cast<std::uint64_t>(i) + 1));
                n = chol[static_cast<std::size_t>(which)] * z;
                double sum = 0;
                for (int r = 0; r < m; ++r) {
                    lvl[node * static_cast<std::size_t>(b_) + static_cast<std::size_t>(r)] = n(r);
                    sum += n(r);
                }
                lvl[node * static_cast<std::size_t>(b_) + static_cast<std::size_t>(m)] = -sum;
            }
            if (s + 1 < depth) {
                std::vector<std::uint64_t> next(width * static_cast<std::size_t>(b_));
                for (std::size_t node = 0; node < width; ++node)
                    for (int r = 0; r < b_; ++r)
                        next[node * static_cast<std::size_t>(b_) + static_cast<std::size_t>(r)] =
                            rng::derive(keys[node], static_cast<std::uint64_t>(r));
                keys = std::move(next);
            }
            width *= static_cast<std::size_t>(b_);
        }
    }

    // N-vector coordinate r at the depth-s node reached by the given prefix
    // index (digits packed MSB-first in base b).
    double coord(int s, std::size_t node, int r) const {
        return levels_[static_cast<std::size_t>(s)]
                      [node * static_cast<std::size_t>(b_) + static_cast<std::size_t>(r)];
    }

    int b() const { return b_; }
    int depth() const { return depth_; }

private:
    int b_, depth_;
    std::vector<std::vector<double>> levels_;
};

enum class field_kind { string_indexed, quantile_indexed };

struct gaussian_field_sample {
    int b = 2;
    int depth = 0;
    field_kind kind = field_kind::string_indexed;
    std::vector<double> values; // one per depth-K string (lex order) or per grid t
    std::vector<double> t_grid; // quantile fields only
    double residual_std_bound = 0;
    std::uint64_t seed = 0;

    std::vector<int> point_digits(std::size_t idx) const {
        std::vector<int> d(static_cast<std::size_t>(depth));
        for (int k = depth - 1; k >= 0; --k) {
            d[static_cast<std::size_t>(k)] = static_cast<int>(idx % static_cast<std::size_t>(b));
            idx /= static_cast<std::size_t>(b);
        }
        return d;
    }
};

// Truncation bound used for both fields: every discarded term s >= K has
// std at most sqrt(pi(w^(s))) sup m <= p_max^((s-1)/2) / (1 - p_max).
inline double field_residual_bound(const markov_spec& spec, int depth) {
    const double r = std::sqrt(spec.p_max());
    return std::pow(r, depth - 1) / ((1 - spec.p_max()) * (1 - r));
}

// Realize H on the full depth-K prefix tree (strings completed by zeros
// tails) through the series
//   H(w) = sum_{s<K} sqrt(pi(w^(s))) m_{w_{s+1}}(w_{s+2}...) N^{(w_s),w^(s)}_{w_{s+1}}.
inline gaussian_field_sample simulate_H_grid(const markov_spec& spec, init_selector init,
                                             int depth, std::uint64_t seed) {
    if (depth < 1) raise(errc::bad_config, "depth must be >= 1");
    gaussian_tree tree(spec, init, depth, seed);
    const int b = spec.b();
    std::size_t leaves = 1;
    for (int s = 0; s < depth; ++s) leaves *= static_cast<std::size_t>(b);

    gaussian_field_sample out;
    out.b = b;
    out.depth = depth;
    out.kind = field_kind::string_indexed;
    out.seed = seed;
    out.residual_std_bound = field_residual_bound(spec, depth);
    out.values.resize(leaves);

    std::vector<double> m_tail0(static_cast<std::size_t>(b)); // m_r(000...)
    for (int r = 0; r < b; ++r)
        m_tail0[static_cast<std::size_t>(r)] = 1 + spec.p(r, 0) / (1 - spec.p(0, 0));

    std::vector<int> digits(static_cast<std::size_t>(depth));
    std::vector<double> msuf(static_cast<std::size_t>(depth));
    for (std::size_t idx = 0; idx < leaves; ++idx) {
        std::size_t x = idx;
        for (int k = depth - 1; k >= 0; --k) {
            digits[static_cast<std::size_t>(k)] = static_cast<int>(x % static_cast<std::size_t>(b));
            x /= static_cast<std::size_t>(b);
        }
        // msuf[s] = m_{w_{s+1}}(w_{s+2} ... w_K 000...)
        msuf[static_cast<std::size_t>(depth - 1)] =
            m_tail0[static_cast<std::size_t>(digits[static_cast<std::size_t>(depth - 1)])];
        for (int s = depth - 2; s >= 0; --s)
            msuf[static_cast<std::size_t>(s)] =
                1 + spec.p(digits[static_cast<std::size_t>(s)],
                           digits[static_cast<std::size_t>(s) + 1]) *
                        msuf[static_cast<std::size_t>(s) + 1];

        double value = 0, prod = 1;
        int prev = -1;
        std::size_t node = 0;
        for (int s = 0; s < depth; ++s) {
            const int w = digits[static_cast<std::size_t>(s)];
            value += std::sqrt(prod) * msuf[static_cast<std::size_t>(s)] * tree.coord(s, node, w);
            prod *= spec.step_row(init, prev)[w];
            prev = w;
            node = node * static_cast<std::size_t>(b) + static_cast<std::size_t>(w);
        }
        out.values[idx] = value;
    }
    return out;
}

// Realize the quantile field G = H-tilde o h on a t-grid, sharing the
// Gaussian tree draws with simulate_H_grid for the same seed.
inline gaussian_field_sample simulate_G_grid(const markov_spec& spec, init_selector init,
                                             int depth, std::uint64_t seed,
                                             std::span<const double> t_grid) {
    auto rep = classify_linear(spec, 1e-9);
    if (!rep.fully_linear) raise(errc::not_linear_family, "G needs a fully linear source");
    if (depth < 1) raise(errc::bad_config, "depth must be >= 1");
    gaussian_tree tree(spec, init, depth, seed);
    const int b = spec.b();

    gaussian_field_sample out;
    out.b = b;
    out.depth = depth;
    out.kind = field_kind::quantile_indexed;
    out.seed = seed;
    out.residual_std_bound = field_residual_bound(spec, depth);
    out.t_grid.assign(t_grid.begin(), t_grid.end());
    out.values.reserve(t_grid.size());

    for (double t : t_grid) {
        auto digits =
            h_value(spec, init, t, depth).value.first_symbols(static_cast<std::size_t>(depth));
        double value = 0, prod = 1;
        std::size_t node = 0;
        for (int s = 0; s < depth; ++s) {
            const int w = digits[static_cast<std::size_t>(s)];
            double a = rep.gamma * tree.coord(s, node, w);
            for (int k = 0; k < w; ++k) a -= rep.alpha * tree.coord(s, node, k);
            value += std::sqrt(prod) * a;
            prod *= spec.mu(w);
            node = node * static_cast<std::size_t>(b) + static_cast<std::size_t>(w);
        }
        out.values.push_back(value);
    }
    return out;
}

// Transitions allowed when maximizing; grid points must follow the edge
// relation from a start symbol.
struct field_restriction {
    std::vector<int> start;                     // allowed first symbols
    std::vector<std::pair<int, int>> edges;     // allowed (from, to) steps
};

inline double sup_stats(const gaussian_field_sample& field,
                        const field_restriction* restriction = nullptr) {
    if (field.values.empty()) raise(errc::empty_restriction, "empty field");
    if (!restriction) return *std::max_element(field.values.begin(), field.values.end());
    const int b = field.b;
    std::vector<char> start(static_cast<std::size_t>(b), 0);
    std::vector<char> edge(static_cast<std::size_t>(b) * static_cast<std::size_t>(b), 0);
    for (int s : restriction->start) start[static_cast<std::size_t>(s)] = 1;
    for (auto [f, t] : restriction->edges)
        edge[static_cast<std::size_t>(f) * static_cast<std::size_t>(b) +
             static_cast<std::size_t>(t)] = 1;
    bool any = false;
    double best = 0;
    for (std::size_t idx = 0; idx < field.values.size(); ++idx) {
        auto d = field.point_digits(idx);
        if (!start[static_cast<std::size_t>(d[0])]) continue;
        bool ok = true;
        for (std::size_t k = 0; ok && k + 1 < d.size(); ++k)
            ok = edge[static_cast<std::size_t>(d[k]) * static_cast<std::size_t>(b) +
                      static_cast<std::size_t>(d[k + 1])] != 0;
        if (!ok) continue;
        if (!any || field.values[idx] > best) best = field.values[idx];
        any = true;
    }
    if (!any) raise(errc::empty_restriction, "no grid point satisfies the restriction");
    return best;
}

struct sigma_max_result {
    double value = 0;
    tailed_string argmax;
};

// Maximize Var H(v) over the depth-K net completed by zeros and max-symbol
// tails.
inline sigma_max_result sigma_max(const markov_spec& spec, init_selector init, int depth) {
    if (depth < 1) raise(errc::bad_config, "depth must be >= 1");
    const int b = spec.b();
    sigma_max_result best{-std::numeric_limits<double>::infinity(),
                          tailed_string::zeros(b, {})};
    std::vector<int> digits;
    digits.reserve(static_cast<std::size_t>(depth));

    auto close = [&](const detail::path_sums& ps, int tail_sym, tail_kind kind) {
        auto closed = ps;
        detail::close_constant_tail(spec, init, closed, tail_sym);
        const double var = 2 * closed.b - closed.a - closed.a * closed.a;
        if (var > best.value) {
            best.value = var;
            best.argmax = kind == tail_kind::zeros ? tailed_string::zeros(b, digits)
                                                   : tailed_string::max_tail(b, digits);
        }
    };

    std::function<void(const detail::path_sums&, int)> walk =
        [&](const detail::path_sums& ps, int level) {
            if (level == depth) {
                close(ps, 0, tail_kind::zeros);
                close(ps, b - 1, tail_kind::max_symbol);
                return;
            }
            for (int r = 0; r < b; ++r) {
                auto next = ps;
                detail::accumulate_symbol(spec, init, next, r);
                digits.push_back(r);
                walk(next, level + 1);
                digits.pop_back();
            }
        };
    walk(detail::path_sums{}, 0);
    return best;
}

} // namespace radixlab
