#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "radixlab/ensemble.hpp"

using namespace radixlab;
using Catch::Matchers::WithinAbs;

namespace {

markov_spec uniform(int b) {
    std::vector<double> mu(b, 1.0 / b);
    std::vector<std::vector<double>> rows(b, mu);
    return markov_spec::validate(b, mu, rows);
}

markov_spec sym_markov() {
    return markov_spec::validate(2, {0.5, 0.5}, {{0.6, 0.4}, {0.4, 0.6}});
}

markov_spec memoryless(std::vector<double> p) {
    auto mu = p;
    std::vector<std::vector<double>> rows(p.size(), p);
    return markov_spec::validate(static_cast<int>(p.size()), mu, rows);
}

const init_selector g = init_selector::global();

// Known b=2 closed forms for the conditional first moments.
std::pair<double, double> ez_closed2(const markov_spec& s) {
    double p00 = s.p(0, 0), p01 = s.p(0, 1), p10 = s.p(1, 0), p11 = s.p(1, 1);
    double denom = 2 * (p00 + p11) * (1 + p00 * p11) - 2 * (p00 + p11) * (p00 + p11);
    return {(1 + p01 * p01 - p11 * p11) / denom, (1 + p10 * p10 - p00 * p00) / denom};
}

markov_spec random_spec2(std::uint64_t key) {
    double p00 = 0.1 + 0.8 * rng::uniform01(key, 1);
    double p10 = 0.1 + 0.8 * rng::uniform01(key, 2);
    double mu0 = 0.1 + 0.8 * rng::uniform01(key, 3);
    return markov_spec::validate(2, {mu0, 1 - mu0}, {{p00, 1 - p00}, {p10, 1 - p10}});
}

} // namespace

TEST_CASE("perpetuity moments") {
    auto u2 = uniform(2);
    auto mom = grand_average_moments(u2);
    CHECK_THAT(mom.ezr[0], WithinAbs(2.0, 1e-12));
    CHECK_THAT(mom.ezr[1], WithinAbs(2.0, 1e-12));
    CHECK_THAT(mom.ez, WithinAbs(2.0, 1e-9));
    // In the uniform model Z is the constant b/(b-1): zero variance.
    CHECK_THAT(mom.ez2 - mom.ez * mom.ez, WithinAbs(0.0, 1e-9));

    for (std::uint64_t key = 0; key < 20; ++key) {
        auto s = random_spec2(key);
        auto m = grand_average_moments(s);
        auto [z0, z1] = ez_closed2(s);
        CHECK_THAT(m.ezr[0] - z0, WithinAbs(0.0, 1e-12));
        CHECK_THAT(m.ezr[1] - z1, WithinAbs(0.0, 1e-12));
    }

    // DFS oracles.
    for (const auto& s : {sym_markov(), random_spec2(1234), uniform(3)}) {
        auto m = grand_average_moments(s);
        CHECK_THAT(m.ez - sum_pi_squared(s, g), WithinAbs(0.0, 1e-6));
        CHECK_THAT(m.ez2 - sum_pi_squared_weighted(s, g), WithinAbs(0.0, 1e-6));
    }
}

TEST_CASE("grand average sampling") {
    auto u2 = uniform(2);
    for (double x : grand_average_sample(u2, g, 50, 4, 1e-10))
        CHECK_THAT(x, WithinAbs(2.0, 1e-9));

    // Anti-symmetric case: the conditional limit m_0(S_1) under the row-0
    // initial law is an affine image of a uniform variable.
    auto s = sym_markov(); // p00 = p11 = 0.6
    const double p = 0.6;
    const double slope = (1 - 2 * p) / (p * (1 - p));
    const double icpt = 1 / (1 - p);
    auto samples = grand_average_sample(s, init_selector::conditional(0), 4000, 99, 1e-10);
    std::vector<double> xi;
    for (double x : samples) xi.push_back((x - icpt) / slope);
    std::sort(xi.begin(), xi.end());
    double d = 0;
    const auto n = static_cast<double>(xi.size());
    for (std::size_t i = 0; i < xi.size(); ++i) {
        CHECK((xi[i] >= -1e-9 && xi[i] <= 1 + 1e-9));
        d = std::max(d, std::abs(xi[i] - (static_cast<double>(i) + 0.5) / n));
    }
    CHECK(d <= 1.63 / std::sqrt(n)); // KS vs uniform at the 1% level

    // Sample mean matches the moment system.
    auto mom = grand_average_moments(s);
    const std::size_t reps = 30000;
    auto big = grand_average_sample(s, g, reps, 123, 1e-9);
    double mean = 0, var = 0;
    for (double x : big) mean += x;
    mean /= static_cast<double>(reps);
    for (double x : big) var += (x - mean) * (x - mean);
    var /= static_cast<double>(reps - 1);
    CHECK(std::abs(mean - mom.ez) <= 3 * std::sqrt(var / static_cast<double>(reps)));
}

TEST_CASE("boundary mixture") {
    auto s = markov_spec::validate(2, {0.6, 0.4}, {{0.6, 0.4}, {0.4, 0.6}});
    auto v = tailed_string::zeros(2, {1});

    auto law0 = boundary_mixture(s, g, v, 0.0);
    CHECK_THAT(law0.weight_right, WithinAbs(0.5, 1e-12));
    CHECK_THAT(law0.weight_left, WithinAbs(0.5, 1e-12));
    CHECK_THAT(law0.atom_right, WithinAbs(1.8, 1e-12));
    CHECK_THAT(law0.atom_left, WithinAbs(2.2, 1e-12));

    auto lawp = boundary_mixture(s, g, v, std::numeric_limits<double>::infinity());
    CHECK(lawp.weight_right == 1.0);
    auto lawm = boundary_mixture(s, g, v, -std::numeric_limits<double>::infinity());
    CHECK(lawm.weight_right == 0.0);

    // Finite drift weight: Phi(beta / sqrt(t(1-t))) at t = 0.6.
    auto law2 = boundary_mixture(s, g, v, 1.0);
    CHECK_THAT(law2.weight_right, WithinAbs(rng::normal_cdf(1.0 / std::sqrt(0.24)), 1e-12));

    // Uniform: both atoms coincide; the mixture is degenerate.
    auto u = uniform(2);
    auto lawu = boundary_mixture(u, g, v, 0.0);
    CHECK_THAT(lawu.atom_right - lawu.atom_left, WithinAbs(0.0, 1e-12));

    CHECK_THROWS_AS(boundary_mixture(s, g, tailed_string::max_tail(2, {0}), 0.0), error);
}

TEST_CASE("worst case: memoryless and uniform") {
    auto s = memoryless({1.0 / 3, 2.0 / 3});
    auto rep = worst_case_solve(s, g);
    CHECK_THAT(rep.m_max, WithinAbs(3.0, 1e-9));
    CHECK(rep.classification == sigma_max_class::unique);
    CHECK(rep.start_set == std::vector<int>{1});
    REQUIRE(rep.members.size() == 1);
    CHECK(rep.members[0].preperiod.empty());
    CHECK(rep.members[0].cycle == std::vector<int>{1});

    // Bellman residuals.
    for (int r = 0; r < 2; ++r) {
        double best = 0;
        for (int k = 0; k < 2; ++k) best = std::max(best, s.p(r, k) * rep.m_rows[k]);
        CHECK_THAT(rep.m_rows[r] - 1 - best, WithinAbs(0.0, 1e-12));
    }

    // Memoryless consistency on random rows.
    for (std::uint64_t key = 0; key < 10; ++key) {
        double q0 = 0.05 + 0.9 * rng::uniform01(7777 + key, 1);
        auto ms = memoryless({q0, 1 - q0});
        CHECK_THAT(worst_case_solve(ms, g).m_max - 1 / (1 - std::max(q0, 1 - q0)),
                   WithinAbs(0.0, 1e-9));
    }

    auto u = uniform(2);
    auto repu = worst_case_solve(u, g);
    CHECK(repu.classification == sigma_max_class::uncountable);
    CHECK(repu.edges.size() == 4); // complete edge graph
    CHECK_THAT(repu.m_max, WithinAbs(2.0, 1e-9));
    CHECK(repu.start_set == std::vector<int>{0, 1});
}

TEST_CASE("worst case: countable and Cantor-type structures") {
    // b=4 source whose maximizing set is {0^k 1 1 1 ...} united with {000...}.
    auto s3 = markov_spec::validate(
        4, {0.25, 0.25, 0.25, 0.25},
        {{1.0 / 3, 1.0 / 3, 1.0 / 6, 1.0 / 6},
         {2.0 / 9, 1.0 / 3, 2.0 / 9, 2.0 / 9},
         {0.25, 0.25, 0.25, 0.25},
         {0.25, 0.25, 0.25, 0.25}});
    auto rep3 = worst_case_solve(s3, init_selector::conditional(0));
    CHECK(rep3.classification == sigma_max_class::countably_infinite);
    CHECK(rep3.start_set == std::vector<int>{0, 1});
    CHECK_THAT(rep3.m_rows[0], WithinAbs(1.5, 1e-9));
    CHECK_THAT(rep3.m_rows[1], WithinAbs(1.5, 1e-9));
    CHECK_THAT(rep3.m_max, WithinAbs(1.5, 1e-9));
    // Reachable edge set is exactly {(0,0),(0,1),(1,1)}.
    std::vector<std::pair<int, int>> reach3;
    for (auto e : rep3.edges)
        if (e.first <= 1) reach3.push_back(e);
    CHECK(reach3 == std::vector<std::pair<int, int>>{{0, 0}, {0, 1}, {1, 1}});

    // b=3 source with a Cantor-type maximizing set over symbols {0,2}.
    auto s4 = markov_spec::validate(3, {1.0 / 3, 1.0 / 3, 1.0 / 3},
                                    {{0.4, 0.2, 0.4}, {1.0 / 3, 1.0 / 3, 1.0 / 3}, {0.4, 0.2, 0.4}});
    auto rep4 = worst_case_solve(s4, init_selector::conditional(0));
    CHECK(rep4.classification == sigma_max_class::uncountable);
    CHECK(rep4.start_set == std::vector<int>{0, 2});
    CHECK_THAT(rep4.m_max, WithinAbs(5.0 / 3, 1e-9));
    std::vector<std::pair<int, int>> reach4;
    for (auto e : rep4.edges)
        if (e.first != 1) reach4.push_back(e);
    CHECK(reach4 == std::vector<std::pair<int, int>>{{0, 0}, {0, 2}, {2, 0}, {2, 2}});

    // b=4 source built so that exactly two eventually periodic strings attain
    // the maximum: 2311... and 311...
    const double eps = 0.01;
    const double p23 = 1 - eps * (2 * eps + 7) / (2 * eps + 1);
    auto s2 = markov_spec::validate(
        4, {0.25, 0.25, 0.25, 0.25},
        {{eps / 2, eps / 2, 0.5 + eps, 0.5 - 2 * eps},
         {1.0 / 300, 1 - eps, 1.0 / 300, 1.0 / 300},
         {(1 - p23) / 3, (1 - p23) / 3, (1 - p23) / 3, p23},
         {1.0 / 300, 1 - eps, 1.0 / 300, 1.0 / 300}});
    auto rep2 = worst_case_solve(s2, init_selector::conditional(0));
    CHECK(rep2.classification == sigma_max_class::finite);
    REQUIRE(rep2.members.size() == 2);
    CHECK(rep2.members[0].preperiod == std::vector<int>{2, 3});
    CHECK(rep2.members[0].cycle == std::vector<int>{1});
    CHECK(rep2.members[1].preperiod == std::vector<int>{3});
    CHECK(rep2.members[1].cycle == std::vector<int>{1});
}

TEST_CASE("worst case witnesses and upper bound property") {
    for (const auto& s : {sym_markov(), memoryless({1.0 / 3, 2.0 / 3}),
                          markov_spec::validate(2, {0.7, 0.3}, {{0.55, 0.45}, {0.25, 0.75}})}) {
        auto rep = worst_case_solve(s, g);
        // m_max dominates m at random strings.
        auto strs = sample_strings(s, g, 200, 31);
        for (const auto& v : strs) CHECK(m_value(s, g, v, 1e-10) <= rep.m_max + 1e-9);
        // A greedy edge-graph walk attains it.
        auto w = worst_case_witness(rep, s.b(), 200);
        CHECK_THAT(m_value(s, g, w, 1e-12) - rep.m_max, WithinAbs(0.0, 1e-8));
    }
}
