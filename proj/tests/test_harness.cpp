#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "radixlab/experiments.hpp"

using namespace radixlab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / "radixlab_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

markov_spec sym_markov() {
    return markov_spec::validate(2, {0.5, 0.5}, {{0.6, 0.4}, {0.4, 0.6}});
}

experiment_config base_config(const std::string& experiment, const fs::path& dir) {
    experiment_config cfg{.experiment = experiment,
                          .spec = sym_markov(),
                          .out_dir = dir.string()};
    cfg.n = 64;
    cfg.reps = 16;
    cfg.depth = 6;
    cfg.grid = 9;
    return cfg;
}

} // namespace

TEST_CASE("spec json round trip") {
    auto j = io::json::parse(R"({"b":2,"mu":[0.5,0.5],"P":[[0.6,0.4],[0.4,0.6]]})");
    auto s = io::spec_from_json(j);
    CHECK(s.b() == 2);
    CHECK(s.p(0, 0) == 0.6);
    CHECK(io::spec_to_json(s) == j);

    CHECK_THROWS_AS(io::spec_from_json(io::json::parse(R"({"b":2,"mu":[0.5,0.5]})")), error);
    CHECK_THROWS_AS(
        io::spec_from_json(io::json::parse(R"({"b":2,"mu":[0.5,0.5],"P":[[1.0,0.0],[0.4,0.6]]})")),
        error);
}

TEST_CASE("worst case report json") {
    auto rep = worst_case_solve(sym_markov(), init_selector::global());
    auto j = io::report_to_json(rep);
    CHECK(j.at("M").size() == 2);
    CHECK(j.contains("m_max"));
    CHECK(j.at("class").is_string());
    for (const auto& e : j.at("edges")) CHECK(e.size() == 2);
}

TEST_CASE("instance dump") {
    auto dir = fresh_dir("dump");
    auto strs = sample_strings(sym_markov(), init_selector::global(), 4, 7);
    for (auto& s : strs) (void)s.first_symbols(6);
    auto path = (dir / "instance.jsonl").string();
    io::dump_instance_jsonl(path, strs);

    std::ifstream in(path);
    std::string line;
    std::size_t count = 0;
    while (std::getline(in, line)) {
        auto j = io::json::parse(line);
        CHECK(j.at("tail") == "sampled");
        CHECK(j.at("prefix").size() >= 6);
        CHECK(j.at("key").get<std::uint64_t>() == strs[count].stream_key());
        ++count;
    }
    CHECK(count == 4);
}

TEST_CASE("experiment determinism") {
    auto d1 = fresh_dir("det1"), d2 = fresh_dir("det2"), d3 = fresh_dir("det3");
    auto cfg1 = base_config("grand-average", d1);
    auto cfg2 = base_config("grand-average", d2);
    auto cfg3 = base_config("grand-average", d3);
    cfg3.seed = 43;
    run_experiment(cfg1);
    run_experiment(cfg2);
    run_experiment(cfg3);
    CHECK(slurp(d1 / "samples.csv") == slurp(d2 / "samples.csv"));
    CHECK(slurp(d1 / "samples.csv") != slurp(d3 / "samples.csv"));

    // Same schema either way.
    std::istringstream s3(slurp(d3 / "samples.csv"));
    std::string header;
    std::getline(s3, header);
    CHECK(header == "rep,y_over_n");

    auto manifest = io::json::parse(slurp(d1 / "manifest.json"));
    CHECK(manifest.at("experiment") == "grand-average");
    CHECK(manifest.at("config").at("seed") == 42);
    CHECK(manifest.at("config").at("n") == 64);
}

TEST_CASE("plot outputs") {
    auto dir = fresh_dir("mh");
    experiment_config cfg{.experiment = "plot-mh",
                          .spec = markov_spec::validate(
                              2, {0.5, 0.5}, {{0.5, 0.5}, {0.5, 0.5}}),
                          .out_dir = dir.string()};
    cfg.grid = 3;
    run_experiment(cfg);
    CHECK(slurp(dir / "mh.csv") == "t,mh,mh_left\n0,2,2\n0.5,2,2\n1,2,2\n");

    auto dir2 = fresh_dir("rho");
    auto cfg2 = base_config("plot-rho", dir2);
    cfg2.grid = 5;
    cfg2.tol = 1e-5;
    run_experiment(cfg2);
    std::istringstream rho(slurp(dir2 / "rho.csv"));
    std::string header;
    std::getline(rho, header);
    CHECK(header == "t,rho");
    int rows = 0;
    for (std::string line; std::getline(rho, line);) ++rows;
    CHECK(rows == 5);
}

TEST_CASE("experiment validation errors") {
    auto cfg = base_config("grand-average", fresh_dir("val"));
    cfg.n = 1;
    CHECK_THROWS_AS(run_experiment(cfg), error);

    auto cfg2 = base_config("quantile-process", fresh_dir("val2"));
    CHECK_THROWS_AS(run_experiment(cfg2), error); // not a linear family

    auto cfg3 = base_config("grand-average", fresh_dir("val3"));
    cfg3.out_dir = (fs::temp_directory_path() / "radixlab_tests" / "missing_dir").string();
    fs::remove_all(cfg3.out_dir);
    CHECK_THROWS_AS(run_experiment(cfg3), error);

    auto cfg4 = base_config("no-such-experiment", fresh_dir("val4"));
    CHECK_THROWS_AS(run_experiment(cfg4), error);
}

TEST_CASE("lln experiment tracks the limit mean") {
    auto dir = fresh_dir("lln");
    experiment_config cfg{.experiment = "lln",
                          .spec = markov_spec::validate(
                              2, {0.5, 0.5}, {{0.5, 0.5}, {0.5, 0.5}}),
                          .out_dir = dir.string()};
    cfg.n = 1024;
    cfg.reps = 100;
    cfg.target = {0};
    cfg.t0 = 0.25;
    auto res = run_experiment(cfg);
    CHECK(res.stats.at("m_v") == Catch::Approx(2.0));
    CHECK(res.stats.at("zn_dev") < 0.05);
    CHECK(res.stats.at("yn_dev") < 0.05);
    CHECK(fs::exists(dir / "instance.jsonl"));
    std::istringstream costs(slurp(dir / "costs.csv"));
    std::string header;
    std::getline(costs, header);
    CHECK(header == "rank,cost");
}

TEST_CASE("nontight experiment config checks") {
    // t0 must be an exact boundary point; 0.6 is F(1000...) when mu = (0.6, 0.4).
    auto dir = fresh_dir("nt");
    experiment_config cfg{.experiment = "nontight",
                          .spec = markov_spec::validate(
                              2, {0.6, 0.4}, {{0.6, 0.4}, {0.4, 0.6}}),
                          .out_dir = dir.string()};
    cfg.n = 64;
    cfg.n2 = 128;
    cfg.reps = 8;
    cfg.t0 = 0.6;
    auto res = run_experiment(cfg);
    CHECK(res.stats.at("atom_right") == Catch::Approx(1.8).margin(1e-12));
    CHECK(res.stats.at("atom_left") == Catch::Approx(2.2).margin(1e-12));

    cfg.t0 = 0.37; // not a boundary point
    CHECK_THROWS_AS(run_experiment(cfg), error);
}
