#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "radixlab/analytic.hpp"
#include "radixlab/markov.hpp"
#include "radixlab/rng.hpp"
#include "radixlab/strings.hpp"

// Grand-average limit law (perpetuity moments of Z = m o h(xi)), the
// boundary-rank mixture, and the worst-case fixed point with the structure
// of the maximizing set.

namespace radixlab {

struct perpetuity_moments {
    double ez = 0;
    double ez2 = 0;
    std::vector<double> ezr;  // conditional first moments E[Z_r]
    std::vector<double> ezr2; // conditional second moments E[Z_r^2]
};

// First two moments of the limit Z via the linear systems
//   E[Z_r]   = 1 + sum_k p_rk^2 E[Z_k]
//   E[Z_r^2] = 2 E[Z_r] - 1 + sum_k p_rk^3 E[Z_k^2],
// both strictly diagonally dominant since p_max < 1.
inline perpetuity_moments grand_average_moments(const markov_spec& spec) {
    const int b = spec.b();
    Eigen::MatrixXd a2 = Eigen::MatrixXd::Identity(b, b);
    Eigen::MatrixXd a3 = Eigen::MatrixXd::Identity(b, b);
    for (int r = 0; r < b; ++r)
        for (int k = 0; k < b; ++k) {
            a2(r, k) -= spec.p(r, k) * spec.p(r, k);
            a3(r, k) -= spec.p(r, k) * spec.p(r, k) * spec.p(r, k);
        }
    Eigen::VectorXd first = a2.partialPivLu().solve(Eigen::VectorXd::Ones(b));
    Eigen::VectorXd rhs(b);
    for (int r = 0; r < b; ++r) rhs(r) = 2 * first(r) - 1;
    Eigen::VectorXd second = a3.partialPivLu().solve(rhs);

    perpetuity_moments out;
    out.ezr.assign(first.data(), first.data() + b);
    out.ezr2.assign(second.data(), second.data() + b);
    out.ez = 1;
    out.ez2 = -1;
    for (int k = 0; k < b; ++k) {
        out.ez += spec.mu(k) * spec.mu(k) * first(k);
        out.ez2 += spec.mu(k) * spec.mu(k) * spec.mu(k) * second(k);
    }
    out.ez2 += 2 * out.ez;
    return out;
}

// Pruned DFS oracle for E[Z] = sum_{v in Sigma*} pi(v)^2: descend while the
// subtree mass bound pi(v)^2 p_max^2/(1 - p_max^2) stays above the threshold.
inline double sum_pi_squared(const markov_spec& spec, init_selector init,
                             double threshold = 1e-15) {
    const double q2 = spec.p_max() * spec.p_max();
    const double factor = q2 / (1 - q2);
    std::function<double(double, int)> walk = [&](double prod, int prev) -> double {
        double sum = prod * prod;
        if (prod * prod * factor < threshold) return sum;
        auto row = spec.step_row(init, prev);
        for (int r = 0; r < spec.b(); ++r) sum += walk(prod * row[r], r);
        return sum;
    };
    return walk(1.0, -1);
}

// Same oracle for E[Z^2] = sum_v pi(v)^2 (pi(v) + 2 sum_{w proper prefix} pi(w)).
inline double sum_pi_squared_weighted(const markov_spec& spec, init_selector init,
                                      double threshold = 1e-15) {
    const double q2 = spec.p_max() * spec.p_max();
    const double weight_bound = 1 + 2 / (1 - spec.p_max());
    const double factor = q2 / (1 - q2) * weight_bound;
    std::function<double(double, int, double)> walk = [&](double prod, int prev,
                                                          double prefix_sum) -> double {
        double sum = prod * prod * (prod + 2 * prefix_sum);
        if (prod * prod * factor < threshold) return sum;
        auto row = spec.step_row(init, prev);
        for (int r = 0; r < spec.b(); ++r) sum += walk(prod * row[r], r, prefix_sum + prod);
        return sum;
    };
    return walk(1.0, -1, 0.0);
}

// Monte Carlo draws of m(S_1), the grand-average limit.
inline std::vector<double> grand_average_sample(const markov_spec& spec, init_selector init,
                                                std::size_t reps, std::uint64_t seed,
                                                double tol = 1e-9) {
    auto shared = std::make_shared<const markov_spec>(spec);
    std::vector<double> out;
    out.reserve(reps);
    for (std::size_t rep = 0; rep < reps; ++rep) {
        auto s1 = tailed_string::sampled(shared, init, rng::derive(seed, rep));
        out.push_back(m_value(spec, init, s1, tol));
    }
    return out;
}

struct boundary_mixture_law {
    double weight_right = 0; // mass of the atom m o h(t)
    double atom_right = 0;
    double weight_left = 0;  // mass of the atom m o h(t-)
    double atom_left = 0;
};

// Limit law of Y_n(k)/n when k/n -> t = F(v) with drift sqrt(n)(k/n - t):
// a two-point mixture with Gaussian weights.
inline boundary_mixture_law boundary_mixture(const markov_spec& spec, init_selector init,
                                             const tailed_string& v, double drift,
                                             double tol = 1e-12) {
    if (!v.in_sigma_zero()) raise(errc::not_in_sigma_zero, "boundary point needs a Sigma_0 string");
    const double t = F_value(spec, init, v, tol);
    if (!(t > 0.0 && t < 1.0)) raise(errc::degenerate_t, "t must lie strictly inside (0,1)");
    boundary_mixture_law law;
    law.atom_right = m_value(spec, init, v, tol);
    law.atom_left = m_left_limit(spec, init, v, tol);
    if (std::isinf(drift)) {
        law.weight_right = drift > 0 ? 1.0 : 0.0;
    } else {
        law.weight_right = rng::normal_cdf(drift / std::sqrt(t * (1 - t)));
    }
    law.weight_left = 1 - law.weight_right;
    return law;
}

enum class sigma_max_class { unique, finite, countably_infinite, uncountable };

inline const char* to_string(sigma_max_class c) {
    switch (c) {
        case sigma_max_class::unique: return "Unique";
        case sigma_max_class::finite: return "Finite";
        case sigma_max_class::countably_infinite: return "CountablyInfinite";
        case sigma_max_class::uncountable: return "Uncountable";
    }
    return "?";
}

// An eventually periodic string: preperiod then repeated cycle.
struct periodic_string {
    std::vector<int> preperiod;
    std::vector<int> cycle;
};

struct worst_case_report {
    std::vector<double> m_rows;                // M_r = sup_v m_r(v)
    double m_max = 0;                          // 1 + max_k mu'_k M_k
    std::vector<int> start_set;                // symbols attaining the outer max
    std::vector<std::pair<int, int>> edges;    // argmax transitions, all rows
    sigma_max_class classification = sigma_max_class::unique;
    std::vector<periodic_string> members;      // enumerated when finite
    bool near_tie_warning = false;
    int iterations = 0;
};

// Value iteration on M_r = 1 + max_k p_rk M_k (contraction factor p_max),
// then classify the set of infinite argmax paths by cycle analysis: a node
// with two return edges makes the set uncountable; a cycle with a viable
// exit makes it countably infinite; otherwise the paths can be enumerated.
inline worst_case_report worst_case_solve(const markov_spec& spec, init_selector init,
                                          double tol = 1e-12, double tie_tol = 1e-9) {
    const int b = spec.b();
    worst_case_report rep;
    std::vector<double> m(static_cast<std::size_t>(b), 1.0);
    const int max_iter = 200000;
    int it = 0;
    for (; it < max_iter; ++it) {
        double residual = 0;
        std::vector<double> next(static_cast<std::size_t>(b));
        for (int r = 0; r < b; ++r) {
            double best = 0;
            for (int k = 0; k < b; ++k) best = std::max(best, spec.p(r, k) * m[k]);
            next[r] = 1 + best;
            residual = std::max(residual, std::abs(next[r] - m[r]));
        }
        m = std::move(next);
        if (residual * spec.p_max() / (1 - spec.p_max()) < std::min(tol, tie_tol) / 4) break;
    }
    if (it >= max_iter) raise(errc::iteration_limit, "value iteration did not converge");
    rep.iterations = it + 1;
    rep.m_rows = m;

    auto argmax_set = [&](std::span<const double> weights) {
        double best = 0;
        for (int k = 0; k < b; ++k) best = std::max(best, weights[k] * m[k]);
        std::vector<int> set;
        bool near = false;
        for (int k = 0; k < b; ++k) {
            double val = weights[k] * m[k];
            if (val >= best - tie_tol)
                set.push_back(k);
            else if (val >= best - 100 * tie_tol)
                near = true;
        }
        return std::pair(set, near);
    };

    auto mu_row = spec.step_row(init, -1);
    double top = 0;
    for (int k = 0; k < b; ++k) top = std::max(top, mu_row[k] * m[k]);
    rep.m_max = 1 + top;
    auto [start, near0] = argmax_set(mu_row);
    rep.start_set = start;
    rep.near_tie_warning = near0;

    std::vector<std::vector<int>> out_edges(static_cast<std::size_t>(b));
    for (int r = 0; r < b; ++r) {
        auto [set, near] = argmax_set(spec.row(r));
        out_edges[static_cast<std::size_t>(r)] = set;
        rep.near_tie_warning = rep.near_tie_warning || near;
        for (int k : set) rep.edges.emplace_back(r, k);
    }

    // Reachability over the argmax edge graph.
    std::vector<char> reachable(static_cast<std::size_t>(b), 0);
    {
        std::vector<int> stack = rep.start_set;
        for (int r : stack) reachable[static_cast<std::size_t>(r)] = 1;
        while (!stack.empty()) {
            int r = stack.back();
            stack.pop_back();
            for (int k : out_edges[static_cast<std::size_t>(r)])
                if (!reachable[static_cast<std::size_t>(k)]) {
                    reachable[static_cast<std::size_t>(k)] = 1;
                    stack.push_back(k);
                }
        }
    }
    auto reaches = [&](int from, int target) {
        std::vector<char> seen(static_cast<std::size_t>(b), 0);
        std::vector<int> stack{from};
        seen[static_cast<std::size_t>(from)] = 1;
        while (!stack.empty()) {
            int r = stack.back();
            stack.pop_back();
            if (r == target) return true;
            for (int k : out_edges[static_cast<std::size_t>(r)])
                if (!seen[static_cast<std::size_t>(k)]) {
                    seen[static_cast<std::size_t>(k)] = 1;
                    stack.push_back(k);
                }
        }
        return false;
    };

    bool uncountable = false, countable = false;
    for (int u = 0; u < b && !uncountable; ++u) {
        if (!reachable[static_cast<std::size_t>(u)]) continue;
        int return_edges = 0;
        for (int k : out_edges[static_cast<std::size_t>(u)])
            if (reaches(k, u)) ++return_edges;
        if (return_edges >= 2) uncountable = true;
        const bool on_cycle = return_edges >= 1;
        if (on_cycle && out_edges[static_cast<std::size_t>(u)].size() >= 2) countable = true;
    }
    if (uncountable) {
        rep.classification = sigma_max_class::uncountable;
        return rep;
    }
    if (countable) {
        rep.classification = sigma_max_class::countably_infinite;
        return rep;
    }

    // Enumerate: branching is acyclic here, so paths from each start symbol
    // are finitely many eventually periodic strings.
    std::vector<periodic_string> members;
    std::vector<int> path;
    std::function<void(int)> extend = [&](int u) {
        auto first = std::find(path.begin(), path.end(), u);
        if (first != path.end()) {
            periodic_string ps;
            ps.preperiod.assign(path.begin(), first);
            ps.cycle.assign(first, path.end());
            members.push_back(std::move(ps));
            return;
        }
        path.push_back(u);
        for (int k : out_edges[static_cast<std::size_t>(u)]) extend(k);
        path.pop_back();
    };
    for (int s : rep.start_set) extend(s);
    rep.members = std::move(members);
    rep.classification =
        rep.members.size() == 1 ? sigma_max_class::unique : sigma_max_class::finite;
    return rep;
}

// A follow-the-edges string witnessing m_max (smallest allowed symbol at
// every step).
inline tailed_string worst_case_witness(const worst_case_report& rep, int b, int depth) {
    std::vector<int> digits;
    int cur = rep.start_set.front();
    digits.push_back(cur);
    for (int k = 1; k < depth; ++k) {
        int next = -1;
        for (const auto& [r, s] : rep.edges)
            if (r == cur && (next < 0 || s < next)) next = s;
        digits.push_back(next);
        cur = next;
    }
    return tailed_string::zeros(b, digits);
}

} // namespace radixlab
