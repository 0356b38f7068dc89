#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "radixlab/ensemble.hpp"
#include "radixlab/markov.hpp"
#include "radixlab/strings.hpp"

namespace radixlab::io {

using nlohmann::json;

// {"b":2,"mu":[0.5,0.5],"P":[[0.6,0.4],[0.4,0.6]]}
inline markov_spec spec_from_json(const json& j) {
    if (!j.contains("b") || !j.contains("mu") || !j.contains("P"))
        raise(errc::bad_config, "source spec needs fields b, mu, P");
    return markov_spec::validate(j.at("b").get<int>(), j.at("mu").get<std::vector<double>>(),
                                 j.at("P").get<std::vector<std::vector<double>>>());
}

inline json spec_to_json(const markov_spec& s) {
    json j;
    j["b"] = s.b();
    j["mu"] = std::vector<double>(s.mu_row().begin(), s.mu_row().end());
    std::vector<std::vector<double>> rows;
    for (int r = 0; r < s.b(); ++r) rows.emplace_back(s.row(r).begin(), s.row(r).end());
    j["P"] = rows;
    return j;
}

inline markov_spec load_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(errc::io_error, "cannot open " + path);
    json j;
    in >> j;
    return spec_from_json(j);
}

inline json report_to_json(const worst_case_report& rep) {
    json j;
    j["M"] = rep.m_rows;
    j["m_max"] = rep.m_max;
    j["start"] = rep.start_set;
    std::vector<std::vector<int>> edges;
    for (auto [r, k] : rep.edges) edges.push_back({r, k});
    j["edges"] = edges;
    j["class"] = to_string(rep.classification);
    j["near_tie"] = rep.near_tie_warning;
    if (!rep.members.empty()) {
        json members = json::array();
        for (const auto& m : rep.members)
            members.push_back({{"pre", m.preperiod}, {"cycle", m.cycle}});
        j["members"] = members;
    }
    return j;
}

inline const char* tail_name(tail_kind k) {
    switch (k) {
        case tail_kind::zeros: return "zeros";
        case tail_kind::max_symbol: return "max";
        case tail_kind::sampled: return "sampled";
    }
    return "?";
}

// One string per line: {"prefix":[0,1,1,0],"tail":"sampled","key":17}
inline void dump_instance_jsonl(const std::string& path,
                                std::span<const tailed_string> strings) {
    std::ofstream out(path);
    if (!out) raise(errc::io_error, "cannot write " + path);
    for (const auto& s : strings) {
        json j;
        j["prefix"] = std::vector<int>(s.prefix().begin(), s.prefix().end());
        j["tail"] = tail_name(s.tail());
        if (s.tail() == tail_kind::sampled) j["key"] = s.stream_key();
        out << j.dump() << '\n';
    }
}

// Deterministic shortest-exact float formatting for CSV output.
inline std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

class csv_writer {
public:
    csv_writer(const std::string& path, const std::string& header) : out_(path) {
        if (!out_) raise(errc::io_error, "cannot write " + path);
        out_ << header << '\n';
    }
    void row(std::initializer_list<std::string> cells) {
        bool first = true;
        for (const auto& c : cells) {
            if (!first) out_ << ',';
            out_ << c;
            first = false;
        }
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

} // namespace radixlab::io
