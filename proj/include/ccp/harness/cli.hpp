// SPDX-License-Identifier: Apache-2.0
//
// Batch command line. Exit codes: 0 success, 1 usage, 2 configuration
// error, 3 runtime failure.

#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ccp/harness/experiments.hpp"

namespace ccp::harness {

enum ExitCode : int { kOk = 0, kUsage = 1, kConfigError = 2, kRuntimeError = 3 };

inline std::string experiment_list() {
    std::string s;
    for (const auto& e : experiments()) s += std::string(s.empty() ? "" : ", ") + e.name;
    return s;
}

namespace detail {

inline Overrides split_overrides(const std::vector<std::string>& sets) {
    Overrides out;
    for (const std::string& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like section.key=value: " + s);
        out.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    return out;
}

inline std::string sci(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9e", v);
    return buf;
}

inline void write_result(const ExperimentResult& r, const std::filesystem::path& dir, std::ostream& out) {
    std::filesystem::create_directories(dir);
    const auto csv = dir / (r.name + ".csv");
    const auto json = dir / (r.name + ".json");
    std::ofstream c(csv, std::ios::binary);
    r.write_csv(c);
    std::ofstream j(json, std::ios::binary);
    j << r.summary.dump(2) << '\n';
    if (!c || !j) throw std::runtime_error("cannot write results to " + dir.string());
    out << csv.string() << '\n' << json.string() << '\n';
}

/// Raw reads of one walk trial at the configured seed.
inline ExperimentResult simulate_walk(const ScenarioConfig& c) {
    ExperimentResult r;
    r.name = "reads";
    r.header = {"pose_index", "pose_x_m", "pose_y_m", "pose_z_m", "tag_id", "success", "uplink_snr_db",
                "timestamp_s", "freq_mhz", "hh_re", "hh_im", "vh_re", "vh_im", "hv_re", "hv_im", "vv_re", "vv_im"};
    const Trial t = make_walk_trial(c, c.seed);
    const auto reads = simulate_reads(t, ReaderDesign::ccp(), c);
    std::size_t ok = 0, total = 0;
    for (std::size_t k = 0; k < reads.size(); ++k) {
        const Vec3& p = t.poses[k].position;
        for (const TagRead& tr : reads[k]) {
            ++total;
            ok += tr.success;
            std::vector<std::string> head{std::to_string(k), fixed(p.x()),      fixed(p.y()),
                                          fixed(p.z()),      tr.tag_id,         tr.success ? "1" : "0",
                                          fixed(tr.uplink_snr_db, 3), fixed(tr.timestamp_s, 3)};
            if (tr.channel.hops.empty()) {
                head.resize(r.header.size());
                r.rows.push_back(head);
                continue;
            }
            for (const HopChannel& h : tr.channel.hops) {
                std::vector<std::string> row = head;
                row.push_back(fixed(h.freq_hz / 1e6, 3));
                for (const Complex& v : h.h) {
                    row.push_back(sci(v.real()));
                    row.push_back(sci(v.imag()));
                }
                r.rows.push_back(row);
            }
        }
    }
    r.summary["experiment"] = "simulate";
    r.summary["seed"] = c.seed;
    r.summary["poses"] = t.poses.size();
    r.summary["tags"] = t.env.tags.size();
    r.summary["read_attempts"] = total;
    r.summary["successful_reads"] = ok;
    return r;
}

inline void flatten(const Json& j, const std::string& prefix, std::ostream& out) {
    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it)
            flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    } else if (!j.is_array()) {
        out << prefix << " = " << j.dump() << '\n';
    }
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Backscatter localization simulator"};
    app.require_subcommand(1);
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::vector<std::string> sets;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", seed, "override run.seed");
        sub->add_option("--out", out_dir, "output directory (default: run.output_dir)");
        sub->add_option("--set", sets, "override a field, section.key=value");
    };

    std::string cfg_path, exp_name;
    std::vector<std::string> result_files;
    auto* validate_cmd = app.add_subcommand("validate", "check a configuration file");
    validate_cmd->add_option("config", cfg_path)->required();
    validate_cmd->add_option("--set", sets, "override a field, section.key=value");
    auto* simulate_cmd = app.add_subcommand("simulate", "write raw reads of one trial");
    simulate_cmd->add_option("config", cfg_path)->required();
    add_common(simulate_cmd);
    auto* experiment_cmd = app.add_subcommand("experiment", "run a named experiment (" + experiment_list() + ")");
    experiment_cmd->add_option("name", exp_name)->required();
    experiment_cmd->add_option("config", cfg_path)->required();
    add_common(experiment_cmd);
    auto* report_cmd = app.add_subcommand("report", "summarize JSON result files");
    report_cmd->add_option("results", result_files)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*report_cmd) {
            for (const std::string& f : result_files) {
                std::ifstream in(f);
                if (!in) throw std::runtime_error("cannot read " + f);
                const Json j = Json::parse(in);
                out << "[" << f << "]\n";
                detail::flatten(j, "", out);
            }
            return kOk;
        }
        const ExperimentEntry* entry = nullptr;
        if (*experiment_cmd) {
            entry = find_experiment(exp_name);
            if (!entry) {
                err << "unknown experiment '" << exp_name << "'; available: " << experiment_list() << '\n';
                return kUsage;
            }
        }
        ScenarioConfig cfg = load_config(cfg_path, detail::split_overrides(sets));
        if (seed) cfg.seed = *seed;
        if (*validate_cmd) {
            out << "ok: " << cfg_path << '\n';
            return kOk;
        }
        const std::filesystem::path dir = out_dir.empty() ? cfg.output_dir : out_dir;
        const ExperimentResult r = entry ? entry->run(cfg) : detail::simulate_walk(cfg);
        detail::write_result(r, dir, out);
        return kOk;
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
}

}  // namespace ccp::harness
