#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "radixlab/ensemble.hpp"
#include "radixlab/io.hpp"
#include "radixlab/limits.hpp"
#include "radixlab/selector.hpp"

// Desk-scale Monte Carlo experiments checking the limit theorems. Every
// engine draws all of its randomness through keyed substreams of the given
// seed and reduces in replication order, so runs are reproducible bit for
// bit.

namespace radixlab {

// Z_n(v) without building the whole trie: Lambda_k(v) is the number of
// strings matching v to depth k, so filter the index list level by level.
inline std::int64_t z_direct(std::span<const tailed_string> strings, const tailed_string& v,
                             std::int64_t cap = default_cap) {
    std::vector<std::uint32_t> alive(strings.size());
    for (std::uint32_t i = 0; i < strings.size(); ++i) alive[i] = i;
    std::int64_t sum = 0, depth = 0;
    while (alive.size() > 1) {
        sum += static_cast<std::int64_t>(alive.size());
        if (++depth > cap) raise(errc::cap_reached, "cost walk exceeded cap");
        const int sym = v.symbol(static_cast<std::uint64_t>(depth));
        std::vector<std::uint32_t> next;
        next.reserve(alive.size());
        for (auto i : alive)
            if (strings[i].symbol(static_cast<std::uint64_t>(depth)) == sym) next.push_back(i);
        alive = std::move(next);
    }
    return sum;
}

// --- replication engines -------------------------------------------------

inline std::vector<double> z_cost_samples(const markov_spec& spec, init_selector init,
                                          const tailed_string& v, std::size_t n, int reps,
                                          std::uint64_t seed) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(reps));
    for (int rep = 0; rep < reps; ++rep) {
        auto strs = sample_strings(spec, init, n, rng::derive(seed, rep));
        out.push_back(static_cast<double>(z_direct(strs, v)));
    }
    return out;
}

// Y_n(I_n) with I_n uniform on ranks: a uniform rank of the order statistics
// is a uniform pick among the strings themselves.
inline std::vector<double> grand_average_costs(const markov_spec& spec, init_selector init,
                                               std::size_t n, int reps, std::uint64_t seed) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(reps));
    for (int rep = 0; rep < reps; ++rep) {
        auto strs = sample_strings(spec, init, n, rng::derive(seed, rep));
        auto pick = static_cast<std::size_t>(rng::derive(rng::derive(seed, 0x9c4), rep) % n);
        out.push_back(static_cast<double>(z_direct(strs, strs[pick])));
    }
    return out;
}

// max_l Y_n(l) per replication (equals max_v Z_n(v)).
inline std::vector<double> max_cost_samples(const markov_spec& spec, init_selector init,
                                            std::size_t n, int reps, std::uint64_t seed) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(reps));
    for (int rep = 0; rep < reps; ++rep) {
        auto strs = sample_strings(spec, init, n, rng::derive(seed, rep));
        out.push_back(static_cast<double>(rank_costs(trie(strs)).max_cost));
    }
    return out;
}

// Y_n(floor(t n)+1) per replication, evaluated by running Radix Select.
inline std::vector<double> quantile_cost_samples(const markov_spec& spec, init_selector init,
                                                 double t, std::size_t n, int reps,
                                                 std::uint64_t seed) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(reps));
    const auto rank = std::min(static_cast<std::size_t>(std::floor(t * static_cast<double>(n))) + 1,
                               n); // Y(n+1) := Y(n)
    for (int rep = 0; rep < reps; ++rep) {
        auto strs = sample_strings(spec, init, n, rng::derive(seed, rep));
        out.push_back(static_cast<double>(radix_select(rank, spec.b(), strs).bucket_ops));
    }
    return out;
}

inline std::vector<double> sup_H_samples(const markov_spec& spec, init_selector init, int depth,
                                         int reps, std::uint64_t seed,
                                         const field_restriction* restriction = nullptr) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(reps));
    for (int rep = 0; rep < reps; ++rep)
        out.push_back(sup_stats(simulate_H_grid(spec, init, depth, rng::derive(seed, rep)),
                                restriction));
    return out;
}

// --- summary statistics ---------------------------------------------------

struct moments {
    double mean = 0, var = 0, stderr_mean = 0;
};

inline moments sample_moments(std::span<const double> xs) {
    moments m;
    const auto n = static_cast<double>(xs.size());
    for (double x : xs) m.mean += x;
    m.mean /= n;
    for (double x : xs) m.var += (x - m.mean) * (x - m.mean);
    m.var = xs.size() > 1 ? m.var / (n - 1) : 0.0;
    m.stderr_mean = std::sqrt(m.var / n);
    return m;
}

// Kolmogorov-Smirnov distance against the standard normal.
inline double ks_normal(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const auto n = static_cast<double>(xs.size());
    double d = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = rng::normal_cdf(xs[i]);
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    }
    return d;
}

// Standardize by sample moments, then KS against N(0,1).
inline double ks_normality(std::span<const double> xs) {
    auto m = sample_moments(xs);
    std::vector<double> std_xs;
    std_xs.reserve(xs.size());
    for (double x : xs) std_xs.push_back((x - m.mean) / std::sqrt(m.var));
    return ks_normal(std::move(std_xs));
}

// --- experiment driver ----------------------------------------------------

struct experiment_config {
    std::string experiment;
    markov_spec spec;
    init_selector init = init_selector::global();
    std::size_t n = 4096;
    int reps = 2000;
    int depth = 12;
    double tol = 1e-9;
    std::uint64_t seed = 42;
    int grid = 512;
    std::string out_dir;
    std::vector<int> target;                       // v prefix for lln / clt-marginal
    tail_kind target_tail = tail_kind::zeros;
    double t0 = 0.5;                               // quantile of interest
    std::size_t n2 = 0;                            // second size for nontight (default 4n)
};

struct experiment_result {
    std::vector<std::string> files;
    std::map<std::string, double> stats;
};

namespace detail {

inline tailed_string target_string(const experiment_config& cfg) {
    return cfg.target_tail == tail_kind::zeros
               ? tailed_string::zeros(cfg.spec.b(), cfg.target)
               : tailed_string::max_tail(cfg.spec.b(), cfg.target);
}

inline std::vector<double> uniform_grid(int points) {
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i)
        grid.push_back(points == 1 ? 0.0 : static_cast<double>(i) / (points - 1));
    return grid;
}

} // namespace detail

inline void emit_manifest(const experiment_config& cfg, const experiment_result& result,
                          double wall_ms) {
    io::json j;
    j["experiment"] = cfg.experiment;
    j["version"] = "radixlab 1.0.0";
    j["config"] = {{"spec", io::spec_to_json(cfg.spec)},
                   {"init", cfg.init.is_global() ? -1 : cfg.init.row},
                   {"n", cfg.n},
                   {"reps", cfg.reps},
                   {"depth", cfg.depth},
                   {"tol", cfg.tol},
                   {"seed", cfg.seed},
                   {"grid", cfg.grid},
                   {"t0", cfg.t0},
                   {"target", cfg.target},
                   {"target_tail", io::tail_name(cfg.target_tail)},
                   {"n2", cfg.n2}};
    j["files"] = result.files;
    io::json stats;
    for (const auto& [k, v] : result.stats) stats[k] = v;
    j["stats"] = stats;
    j["wall_ms"] = wall_ms;
    std::ofstream out(cfg.out_dir + "/manifest.json");
    if (!out) raise(errc::io_error, "cannot write manifest in " + cfg.out_dir);
    out << j.dump(2) << '\n';
}

inline experiment_result run_experiment(const experiment_config& cfg) {
    namespace fs = std::filesystem;
    if (cfg.out_dir.empty()) raise(errc::bad_config, "output directory required");
    if (!fs::exists(cfg.out_dir)) raise(errc::io_error, "output directory missing: " + cfg.out_dir);
    const auto start = std::chrono::steady_clock::now();
    experiment_result res;
    const auto& s = cfg.spec;
    const auto g = cfg.init;

    auto path = [&](const char* name) { return cfg.out_dir + "/" + name; };
    auto record = [&](const char* name) {
        res.files.push_back(name);
        return path(name);
    };

    if (cfg.experiment == "lln") {
        if (cfg.n < 2) raise(errc::bad_config, "trie experiments need n >= 2");
        auto v = detail::target_string(cfg);
        const double mv = m_value(s, g, v, cfg.tol);
        auto prof = mh_profile(s, g, std::vector<double>{cfg.t0}, cfg.tol);
        auto zs = z_cost_samples(s, g, v, cfg.n, cfg.reps, rng::derive(cfg.seed, 1));
        auto ys = quantile_cost_samples(s, g, cfg.t0, cfg.n, cfg.reps, rng::derive(cfg.seed, 2));
        io::csv_writer samples(record("samples.csv"), "rep,zn_over_n,yn_over_n");
        for (int rep = 0; rep < cfg.reps; ++rep)
            samples.row({std::to_string(rep),
                         io::num(zs[static_cast<std::size_t>(rep)] / static_cast<double>(cfg.n)),
                         io::num(ys[static_cast<std::size_t>(rep)] / static_cast<double>(cfg.n))});
        // First replication dumped in full: the instance and its cost profile.
        auto first = sample_strings(s, g, cfg.n, rng::derive(rng::derive(cfg.seed, 1), 0));
        auto profile = rank_costs(trie(first));
        io::dump_instance_jsonl(record("instance.jsonl"), first);
        io::csv_writer costs(record("costs.csv"), "rank,cost");
        for (std::size_t l = 1; l <= profile.y.size(); ++l)
            costs.row({std::to_string(l), std::to_string(profile.y[l - 1])});
        auto mz = sample_moments(zs), my = sample_moments(ys);
        res.stats["m_v"] = mv;
        res.stats["mh_t0"] = prof[0].mh;
        res.stats["zn_mean_over_n"] = mz.mean / static_cast<double>(cfg.n);
        res.stats["yn_mean_over_n"] = my.mean / static_cast<double>(cfg.n);
        res.stats["zn_dev"] = std::abs(mz.mean / static_cast<double>(cfg.n) - mv);
        res.stats["yn_dev"] = std::abs(my.mean / static_cast<double>(cfg.n) - prof[0].mh);
    } else if (cfg.experiment == "clt-marginal") {
        if (cfg.n < 2) raise(errc::bad_config, "trie experiments need n >= 2");
        auto v = detail::target_string(cfg);
        auto w = h_value(s, g, cfg.t0, 12).value; // companion point for the cross term
        const double mv = m_value(s, g, v, cfg.tol);
        const double mw = m_value(s, g, w, cfg.tol);
        const double target_var = cov_H(s, g, v, v, cfg.tol);
        const double target_cross = cov_H(s, g, v, w, cfg.tol);
        const double sqn = std::sqrt(static_cast<double>(cfg.n));
        std::vector<double> xs, xw;
        xs.reserve(static_cast<std::size_t>(cfg.reps));
        xw.reserve(static_cast<std::size_t>(cfg.reps));
        for (int rep = 0; rep < cfg.reps; ++rep) {
            auto strs = sample_strings(s, g, cfg.n, rng::derive(rng::derive(cfg.seed, 1), rep));
            xs.push_back((static_cast<double>(z_direct(strs, v)) -
                          mv * static_cast<double>(cfg.n)) / sqn);
            xw.push_back((static_cast<double>(z_direct(strs, w)) -
                          mw * static_cast<double>(cfg.n)) / sqn);
        }
        io::csv_writer samples(record("samples.csv"), "rep,x,x_companion");
        for (int rep = 0; rep < cfg.reps; ++rep)
            samples.row({std::to_string(rep), io::num(xs[static_cast<std::size_t>(rep)]),
                         io::num(xw[static_cast<std::size_t>(rep)])});
        auto m = sample_moments(xs);
        auto m2 = sample_moments(xw);
        double cross = 0;
        for (int rep = 0; rep < cfg.reps; ++rep)
            cross += (xs[static_cast<std::size_t>(rep)] - m.mean) *
                     (xw[static_cast<std::size_t>(rep)] - m2.mean);
        cross /= static_cast<double>(cfg.reps - 1);
        res.stats["mean"] = m.mean;
        res.stats["var"] = m.var;
        res.stats["cov_target"] = target_var;
        res.stats["var_rel_err"] = std::abs(m.var - target_var) / target_var;
        res.stats["cross_emp"] = cross;
        res.stats["cross_target"] = target_cross;
    } else if (cfg.experiment == "quantile-process") {
        auto rep = classify_linear(s, 1e-9);
        if (!rep.fully_linear) raise(errc::not_linear_family, "quantile process needs the linear family");
        auto grid = detail::uniform_grid(cfg.grid);
        std::vector<std::vector<double>> per_t(grid.size());
        for (int r = 0; r < cfg.reps; ++r) {
            auto strs = sample_strings(s, g, cfg.n, rng::derive(rng::derive(cfg.seed, 1), r));
            auto prof = rank_costs(trie(strs));
            for (std::size_t i = 0; i < grid.size(); ++i)
                per_t[i].push_back(static_cast<double>(prof.at_quantile(grid[i])));
        }
        io::csv_writer out(record("quantiles.csv"), "t,emp_mean_dev,emp_var,var_g");
        double worst = 0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            std::vector<double> xs;
            xs.reserve(per_t[i].size());
            const double center = (rep.alpha * grid[i] + rep.gamma) * static_cast<double>(cfg.n);
            for (double y : per_t[i])
                xs.push_back((y - center) / std::sqrt(static_cast<double>(cfg.n)));
            auto m = sample_moments(xs);
            const double vg = var_G(rep.beta, s.b(), grid[i]);
            worst = std::max(worst, std::abs(m.var - vg) / vg);
            out.row({io::num(grid[i]), io::num(m.mean), io::num(m.var), io::num(vg)});
        }
        res.stats["worst_var_rel_err"] = worst;
    } else if (cfg.experiment == "grand-average") {
        if (cfg.n < 2) raise(errc::bad_config, "trie experiments need n >= 2");
        auto ys = grand_average_costs(s, g, cfg.n, cfg.reps, rng::derive(cfg.seed, 1));
        io::csv_writer samples(record("samples.csv"), "rep,y_over_n");
        for (int rep = 0; rep < cfg.reps; ++rep)
            samples.row({std::to_string(rep),
                         io::num(ys[static_cast<std::size_t>(rep)] / static_cast<double>(cfg.n))});
        auto m = sample_moments(ys);
        auto mom = grand_average_moments(s);
        res.stats["mean_over_n"] = m.mean / static_cast<double>(cfg.n);
        res.stats["var_over_n"] = m.var / static_cast<double>(cfg.n);
        res.stats["ez"] = mom.ez;
        res.stats["ks_normality"] = ks_normality(ys);
    } else if (cfg.experiment == "worst-case") {
        if (cfg.n < 2) raise(errc::bad_config, "trie experiments need n >= 2");
        auto report = worst_case_solve(s, g);
        {
            std::ofstream out(record("worst_case.json"));
            out << io::report_to_json(report).dump(2) << '\n';
        }
        auto maxes = max_cost_samples(s, g, cfg.n, cfg.reps, rng::derive(cfg.seed, 1));
        std::vector<double> emp;
        emp.reserve(maxes.size());
        for (double x : maxes)
            emp.push_back((x - report.m_max * static_cast<double>(cfg.n)) /
                          std::sqrt(static_cast<double>(cfg.n)));
        field_restriction allowed{report.start_set, report.edges};
        auto sups = sup_H_samples(s, g, cfg.depth, cfg.reps, rng::derive(cfg.seed, 2), &allowed);
        io::csv_writer fe(record("emp_samples.csv"), "rep,x");
        for (int rep = 0; rep < cfg.reps; ++rep)
            fe.row({std::to_string(rep), io::num(emp[static_cast<std::size_t>(rep)])});
        io::csv_writer fsim(record("sim_samples.csv"), "rep,sup");
        for (int rep = 0; rep < cfg.reps; ++rep)
            fsim.row({std::to_string(rep), io::num(sups[static_cast<std::size_t>(rep)])});
        auto me = sample_moments(emp), ms = sample_moments(sups);
        res.stats["m_max"] = report.m_max;
        res.stats["emp_mean"] = me.mean;
        res.stats["emp_var"] = me.var;
        res.stats["sim_mean"] = ms.mean;
        res.stats["sim_var"] = ms.var;
        res.stats["sigma_max"] = sigma_max(s, g, cfg.depth).value;
    } else if (cfg.experiment == "nontight") {
        if (cfg.n < 2) raise(errc::bad_config, "trie experiments need n >= 2");
        const int K = depth_for_tol(s, cfg.tol);
        auto hr = h_value(s, g, cfg.t0, K);
        if (!hr.exact || !hr.value.in_sigma_zero())
            raise(errc::bad_config, "t0 must be an exact F(Sigma_0) boundary point");
        auto law = boundary_mixture(s, g, hr.value, 0.0, cfg.tol);
        const std::size_t n2 = cfg.n2 ? cfg.n2 : 4 * cfg.n;
        io::csv_writer samples(record("samples.csv"), "n,rep,y_over_n");
        int which = 0;
        for (std::size_t n : {cfg.n, n2}) {
            auto ys = quantile_cost_samples(s, g, cfg.t0, n, cfg.reps,
                                            rng::derive(cfg.seed, 10 + which));
            double mass_r = 0, mass_l = 0;
            for (int rep = 0; rep < cfg.reps; ++rep) {
                const double y = ys[static_cast<std::size_t>(rep)] / static_cast<double>(n);
                samples.row({std::to_string(n), std::to_string(rep), io::num(y)});
                if (std::abs(y - law.atom_right) <= 0.02) mass_r += 1;
                if (std::abs(y - law.atom_left) <= 0.02) mass_l += 1;
            }
            const std::string tag = which == 0 ? "n1" : "n2";
            res.stats["mass_right_" + tag] = mass_r / cfg.reps;
            res.stats["mass_left_" + tag] = mass_l / cfg.reps;
            ++which;
        }
        res.stats["atom_right"] = law.atom_right;
        res.stats["atom_left"] = law.atom_left;
        res.stats["t0"] = cfg.t0;
    } else if (cfg.experiment == "plot-mh") {
        auto grid = detail::uniform_grid(cfg.grid);
        auto prof = mh_profile(s, g, grid, cfg.tol);
        io::csv_writer out(record("mh.csv"), "t,mh,mh_left");
        for (const auto& pt : prof)
            out.row({io::num(pt.t), io::num(pt.mh), io::num(pt.mh_left)});
        res.stats["points"] = static_cast<double>(prof.size());
    } else if (cfg.experiment == "plot-rho") {
        auto grid = detail::uniform_grid(cfg.grid);
        io::csv_writer out(record("rho.csv"), "t,rho");
        for (double t : grid) out.row({io::num(t), io::num(quickselect_rho(s, t, cfg.tol))});
        res.stats["points"] = static_cast<double>(grid.size());
    } else if (cfg.experiment == "limit-sim") {
        std::ofstream out(record("field.jsonl"));
        if (!out) raise(errc::io_error, "cannot write field dump");
        double sum = 0, sum2 = 0;
        double resid = 0;
        for (int rep = 0; rep < cfg.reps; ++rep) {
            auto f = simulate_H_grid(s, g, cfg.depth, rng::derive(cfg.seed, rep));
            resid = f.residual_std_bound;
            for (std::size_t idx = 0; idx < f.values.size(); ++idx) {
                io::json j;
                std::string point;
                for (int d : f.point_digits(idx)) point += static_cast<char>('0' + d);
                j["rep"] = rep;
                j["point"] = point;
                j["value"] = f.values[idx];
                out << j.dump() << '\n';
            }
            sum += f.values[0];
            sum2 += f.values[0] * f.values[0];
        }
        io::csv_writer summary(record("summary.csv"), "stat,estimate,stderr");
        const double mean = sum / cfg.reps;
        const double var = sum2 / cfg.reps - mean * mean;
        summary.row({"mean_at_zero_string", io::num(mean),
                     io::num(std::sqrt(var / cfg.reps))});
        summary.row({"var_at_zero_string", io::num(var),
                     io::num(var * std::sqrt(2.0 / cfg.reps))});
        summary.row({"residual_std_bound", io::num(resid), io::num(0.0)});
        res.stats["residual_std_bound"] = resid;
    } else {
        raise(errc::bad_config, "unknown experiment: " + cfg.experiment);
    }

    const auto stop = std::chrono::steady_clock::now();
    const double wall_ms =
        std::chrono::duration_cast<std::chrono::microseconds>(stop - start).count() / 1000.0;
    emit_manifest(cfg, res, wall_ms);
    res.files.push_back("manifest.json");
    return res;
}

} // namespace radixlab
