#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <queue>
#include <span>
#include <vector>

#include "radixlab/markov.hpp"
#include "radixlab/strings.hpp"

// The deterministic limit objects of the source: the mean profile
// m(w) = sum_{v prefix of w} pi(v), the distribution function
// F(w) = P{S_1 <= w}, the generalized quantile h(t) = sup{v : F(v) <= t},
// plus the linear-family classifier and the Quickselect mean profile.

namespace radixlab {

// Depth K such that any tail mass beyond K is below tol:
// pi(v^(K)) * p_max/(1-p_max) <= p_max^(K-1)/(1-p_max) < tol.
inline int depth_for_tol(const markov_spec& spec, double tol) {
    double q = spec.p_max();
    double k = 1 + std::log(tol * (1 - q)) / std::log(q);
    int K = k > 4 ? static_cast<int>(std::ceil(k)) : 4;
    return K + 2;
}

// P(S_1 < w...) -- the left endpoint of the cylinder of the finite word w.
inline double left_endpoint(const markov_spec& spec, init_selector init,
                            std::span<const int> word) {
    double left = 0.0, prod = 1.0;
    int prev = -1;
    for (int s : word) {
        left += prod * spec.step_cum(init, prev)[s];
        prod *= spec.step_row(init, prev)[s];
        prev = s;
    }
    return left;
}

// m(v) = sum_{k>=0} pi(v^(k)). Symbolic tails close the geometric series
// exactly; sampled tails truncate once the remaining mass bound drops
// below tol.
inline double m_value(const markov_spec& spec, init_selector init, const tailed_string& v,
                      double tol) {
    double sum = 1.0, prod = 1.0;
    int prev = -1;
    if (v.tail() == tail_kind::sampled) {
        // The remaining-mass bound prod * p_max/(1-p_max) is valid once at
        // least one symbol is consumed (the first factor is a mu entry, not
        // bounded by p_max).
        const double tail_factor = spec.p_max() / (1 - spec.p_max());
        std::uint64_t k = 1;
        while (k == 1 || prod * tail_factor >= tol) {
            if (static_cast<std::int64_t>(k) > default_cap)
                raise(errc::cap_reached, "m truncation needs symbols beyond cap");
            int s = v.symbol(k);
            prod *= spec.step_row(init, prev)[s];
            sum += prod;
            prev = s;
            ++k;
        }
        return sum;
    }
    for (int s : v.prefix()) {
        prod *= spec.step_row(init, prev)[s];
        sum += prod;
        prev = s;
    }
    const int c = v.tail() == tail_kind::zeros ? 0 : spec.b() - 1;
    const double q = spec.step_row(init, prev)[c];
    return sum + prod * q / (1 - spec.p(c, c));
}

// m(v-) for v in Sigma_0^infty.
inline double m_left_limit(const markov_spec& spec, init_selector init, const tailed_string& v,
                           double tol) {
    return m_value(spec, init, v.left_companion(), tol);
}

// F(v) = P{S_1 <= v}. Exact for symbolic tails; for sampled tails the
// truncation error is at most pi(v^(K)) < tol.
inline double F_value(const markov_spec& spec, init_selector init, const tailed_string& v,
                      double tol) {
    if (v.tail() == tail_kind::zeros) return left_endpoint(spec, init, v.prefix());
    if (v.tail() == tail_kind::max_symbol)
        return left_endpoint(spec, init, v.prefix()) +
               pi(spec, init, v.prefix());
    double left = 0.0, prod = 1.0;
    int prev = -1;
    std::uint64_t k = 1;
    while (prod >= tol) {
        if (static_cast<std::int64_t>(k) > default_cap)
            raise(errc::cap_reached, "F truncation needs symbols beyond cap");
        int s = v.symbol(k);
        left += prod * spec.step_cum(init, prev)[s];
        prod *= spec.step_row(init, prev)[s];
        prev = s;
        ++k;
    }
    return left;
}

struct h_result {
    tailed_string value;
    // True when the residual resolved exactly, i.e. `value` is h(t) itself
    // rather than a depth-limited approximation.
    bool exact;
};

// Digit-greedy h(t): at each level pick the largest symbol whose bucket left
// endpoint is <= the residual, then renormalize within the bucket. A residual
// of exactly 0 forces the zeros tail (right-continuity of h at F(Sigma_0));
// a residual of exactly 1 forces the max-symbol tail (only reachable at t=1).
inline h_result h_value(const markov_spec& spec, init_selector init, double t, int depth) {
    if (!(t >= 0.0 && t <= 1.0)) raise(errc::bad_config, "h requires t in [0,1]");
    if (depth < 1) raise(errc::bad_config, "h requires depth >= 1");
    const int b = spec.b();
    std::vector<int> digits;
    digits.reserve(static_cast<std::size_t>(depth));
    double res = t;
    int prev = -1;
    for (int level = 0; level < depth; ++level) {
        auto cum = spec.step_cum(init, prev);
        int r = b - 1;
        while (r > 0 && cum[r] > res) --r;
        const double q = spec.step_row(init, prev)[r];
        res = (res - cum[r]) / q;
        if (res < 0) res = 0;
        if (res > 1) res = 1;
        digits.push_back(r);
        prev = r;
        if (res == 0.0) return {tailed_string::zeros(b, std::move(digits)), true};
        if (res == 1.0) return {tailed_string::max_tail(b, std::move(digits)), true};
    }
    return {tailed_string::zeros(b, std::move(digits)), false};
}

// h(t-): differs from h(t) only at exact endpoints, where it is the left
// companion v-.
inline tailed_string h_left_value(const markov_spec& spec, init_selector init, double t,
                                  int depth) {
    auto hr = h_value(spec, init, t, depth);
    if (hr.exact && hr.value.in_sigma_zero()) return hr.value.left_companion();
    return hr.value;
}

struct mh_point {
    double t;
    double mh;
    double mh_left;
};

// The data behind the limit mean curves: t, (m o h)(t) and (m o h)(t-).
inline std::vector<mh_point> mh_profile(const markov_spec& spec, init_selector init,
                                        std::span<const double> grid, double tol) {
    const int depth = depth_for_tol(spec, tol);
    std::vector<mh_point> out;
    out.reserve(grid.size());
    for (double t : grid) {
        auto hr = h_value(spec, init, t, depth);
        double mh = m_value(spec, init, hr.value, tol);
        double mh_left = hr.exact && hr.value.in_sigma_zero()
                             ? m_value(spec, init, hr.value.left_companion(), tol)
                             : mh;
        out.push_back({t, mh, mh_left});
    }
    return out;
}

struct linear_family_report {
    bool transitions_linear = false;
    bool fully_linear = false;
    double beta = std::numeric_limits<double>::quiet_NaN();
    double alpha = std::numeric_limits<double>::quiet_NaN();
    double gamma = std::numeric_limits<double>::quiet_NaN();
};

// Geometric sum 1 + x + ... + x^(m-1); the beta->1 limits of alpha and gamma
// come out of these polynomial forms without cancellation.
inline double geom_sum(double x, int m) {
    double s = 0.0, p = 1.0;
    for (int i = 0; i < m; ++i) {
        s += p;
        p *= x;
    }
    return s;
}

// Memoryless sources with geometric symbol weights p_r ~ beta^r are exactly
// the ones whose m o h is continuous (an affine function alpha*t + gamma).
inline linear_family_report classify_linear(const markov_spec& spec, double tol) {
    linear_family_report rep;
    const int b = spec.b();
    for (int i = 1; i < b; ++i)
        for (int k = 0; k < b; ++k)
            if (std::abs(spec.p(i, k) - spec.p(0, k)) > tol) return rep;
    const double beta = spec.p(0, 1) / spec.p(0, 0);
    for (int k = 0; k + 1 < b; ++k)
        if (std::abs(spec.p(0, k + 1) / spec.p(0, k) - beta) > tol) return rep;
    rep.transitions_linear = true;
    rep.beta = beta;
    rep.gamma = geom_sum(beta, b) / (beta * geom_sum(beta, b - 1));
    rep.alpha = (beta - 1) * rep.gamma;
    rep.fully_linear = true;
    for (int k = 0; k < b; ++k)
        if (std::abs(spec.mu(k) - spec.p(0, k)) > tol) rep.fully_linear = false;
    return rep;
}

namespace detail {

// The Quickselect entropy-like weight: with y+ = y + 1/2, y- = 1/2 - y,
//   H(y) = -(y+ log y+ + y- log y-)          for y < 1/2,
//   H(y) = y- (log y+ - log|y-|)             for y >= 1/2,
// and 0 log 0 = 0. H(0) = log 2, H decreases to -1 as y -> infinity.
inline double quickselect_weight(double y) {
    if (y < 0.5) {
        const double yp = y + 0.5, ym = 0.5 - y;
        const double a = yp > 0 ? yp * std::log(yp) : 0.0;
        const double c = ym > 0 ? ym * std::log(ym) : 0.0;
        return -(a + c);
    }
    const double z = y - 0.5;
    if (z == 0) return 0.0;
    if (y > 1e15) return -1.0;
    return -z * std::log1p(1.0 / z);
}

} // namespace detail

// rho(t) = 2 sum_{v in Sigma*} pi(v) (1 + H(|t - center(v)| / pi(v))).
// Best-first expansion over the prefix tree; every skipped subtree is covered
// by an explicit bound, so the accumulated value is within tol of the series.
// Bounds used: 1 + H(y) <= 1 + log 2 always and 1 + H(y) <= 1/(y + 1/2) for
// y >= 1/2.
inline double quickselect_rho(const markov_spec& spec, double t, double tol) {
    if (!(t >= 0.0 && t <= 1.0)) raise(errc::bad_config, "rho requires t in [0,1]");
    const init_selector init = init_selector::global();
    const double q = spec.p_max();
    const double c1 = 1 + std::numbers::ln2;
    // Uniform bound on the whole subtree below a node containing t, per unit
    // of node mass.
    const double k_inside =
        (4 * c1 + 18) * q / (1 - q) + 6 * std::log2(1 / q) * q / ((1 - q) * (1 - q));

    struct node {
        double ubound, left, mass, term;
        int prev;
    };
    auto term_of = [&](double left, double mass) {
        const double y = std::abs(t - (left + mass / 2)) / mass;
        return mass * (1 + detail::quickselect_weight(y));
    };
    auto subtree_bound = [&](double left, double mass) {
        const double d = std::max({left - t, t - (left + mass), 0.0});
        const double inside = mass * k_inside;
        if (d <= 0) return inside;
        double bnd = 0.0, pj = mass * q;
        for (int j = 0; j < 400 && pj / d > c1; ++j) {
            bnd += mass * c1;
            pj *= q;
            if (bnd >= inside) return inside;
        }
        bnd += mass * (pj / d) / (1 - q);
        return std::min(bnd, inside);
    };
    auto make_node = [&](double left, double mass, int prev) {
        const double term = term_of(left, mass);
        return node{term + subtree_bound(left, mass), left, mass, term, prev};
    };

    auto cmp = [](const node& a, const node& b) { return a.ubound < b.ubound; };
    std::priority_queue<node, std::vector<node>, decltype(cmp)> frontier(cmp);
    frontier.push(make_node(0.0, 1.0, -1));
    double acc = 0.0, frontier_sum = frontier.top().ubound;
    const double target = tol / 2;
    std::size_t pops = 0;
    while (!frontier.empty() && frontier_sum > target) {
        if (++pops > 4'000'000) break; // accept the current certified error
        node v = frontier.top();
        frontier.pop();
        acc += v.term;
        frontier_sum -= v.ubound;
        auto cum = spec.step_cum(init, v.prev);
        auto row = spec.step_row(init, v.prev);
        for (int r = 0; r < spec.b(); ++r) {
            node ch = make_node(v.left + v.mass * cum[r], v.mass * row[r], r);
            frontier_sum += ch.ubound;
            frontier.push(ch);
        }
    }
    return 2 * acc;
}

} // namespace radixlab
