#pragma once

#include <json.hpp>
#include <set>
#include <string>
#include <vector>

#include "righthand/errors.hpp"
#include "righthand/fields.hpp"

namespace righthand {

using ordered_json = nlohmann::ordered_json;

// A fully validated experiment description: the subcommand name plus its
// arguments with defaults filled in.  Built either from a JSON config file or
// from command line flags; both funnel through the same validation.
struct ExperimentPlan {
    std::string cmd;
    ordered_json args;
};

namespace detail {

inline void locate(const std::string& text, std::size_t byte, int& line, int& col) {
    line = 1;
    col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
}

inline const std::set<std::string>& allowed_keys(const std::string& cmd) {
    static const std::set<std::string> link = {"cmd", "out", "cache_dir", "curves", "method"};
    static const std::set<std::string> flowlink = {"cmd",     "out",   "cache_dir", "csv",
                                                  "field",   "p",     "q",         "horizon",
                                                  "delta",   "jitter"};
    static const std::set<std::string> lkomega = {"cmd",   "out",   "cache_dir", "field",
                                                  "method", "orbit_seed", "nodes", "S",
                                                  "T",     "n_volume",   "seed"};
    static const std::set<std::string> certify = {"cmd",  "out",  "cache_dir",      "field",
                                                  "orbits", "volume_samples", "tol", "seed"};
    static const std::set<std::string> reconstruct = {"cmd", "out", "cache_dir", "field",
                                                      "samples", "seed"};
    static const std::set<std::string> ulam = {"cmd", "out", "cache_dir", "field",
                                               "res", "tau", "spc",       "seed"};
    static const std::set<std::string> lpmin = {"cmd", "out", "cache_dir", "chain", "maximize"};
    static const std::set<std::string> fibers = {"cmd", "out", "cache_dir", "outdir", "segments"};
    if (cmd == "link") return link;
    if (cmd == "flowlink") return flowlink;
    if (cmd == "lkomega") return lkomega;
    if (cmd == "certify") return certify;
    if (cmd == "reconstruct") return reconstruct;
    if (cmd == "ulam") return ulam;
    if (cmd == "lpmin") return lpmin;
    if (cmd == "fibers") return fibers;
    throw MalformedConfig("unknown cmd \"" + cmd + "\"");
}

inline double as_number(const ordered_json& j, const std::string& key) {
    if (!j.at(key).is_number()) throw MalformedConfig("key \"" + key + "\" must be a number");
    return j.at(key).get<double>();
}

inline long as_integer(const ordered_json& j, const std::string& key) {
    if (!j.at(key).is_number_integer())
        throw MalformedConfig("key \"" + key + "\" must be an integer");
    return j.at(key).get<long>();
}

inline std::string as_string(const ordered_json& j, const std::string& key) {
    if (!j.at(key).is_string()) throw MalformedConfig("key \"" + key + "\" must be a string");
    return j.at(key).get<std::string>();
}

inline std::vector<double> as_point4(const ordered_json& j, const std::string& key) {
    const auto& v = j.at(key);
    if (!v.is_array() || v.size() != 4)
        throw MalformedConfig("key \"" + key + "\" must be an array of 4 numbers");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw MalformedConfig("key \"" + key + "\" must be an array of 4 numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

inline void default_number(ordered_json& args, const std::string& key, double value) {
    if (!args.contains(key)) args[key] = value;
}

inline void default_integer(ordered_json& args, const std::string& key, long value) {
    if (!args.contains(key)) args[key] = value;
}

}  // namespace detail

// Validates a decoded experiment description and fills in defaults.  Unknown
// keys are rejected rather than ignored so that typos fail loudly; range
// checks mirror the library preconditions so bad values are reported before
// any work starts.
inline ExperimentPlan plan_from_json(const ordered_json& root) {
    if (!root.is_object()) throw MalformedConfig("config must be a JSON object");
    if (!root.contains("cmd") || !root.at("cmd").is_string())
        throw MalformedConfig("config must contain a string \"cmd\" key");

    ExperimentPlan plan;
    plan.cmd = root.at("cmd").get<std::string>();
    const auto& allowed = detail::allowed_keys(plan.cmd);
    for (const auto& item : root.items())
        if (!allowed.count(item.key()))
            throw UnknownKey("key \"" + item.key() + "\" is not accepted by cmd \"" + plan.cmd +
                             "\"");
    plan.args = root;

    auto& args = plan.args;
    if (args.contains("out")) detail::as_string(args, "out");
    if (args.contains("cache_dir")) detail::as_string(args, "cache_dir");
    if (args.contains("field")) parse_field(detail::as_string(args, "field"));

    if (plan.cmd == "link") {
        if (!args.contains("curves")) throw MalformedConfig("link requires \"curves\"");
        const auto& curves = args.at("curves");
        if (!curves.is_array() || curves.size() != 2 || !curves[0].is_string() ||
            !curves[1].is_string())
            throw MalformedConfig("\"curves\" must be an array of two file paths");
        if (!args.contains("method")) args["method"] = "both";
        const std::string method = detail::as_string(args, "method");
        if (method != "gauss" && method != "cross" && method != "both")
            throw OutOfRangeParameter("link method must be gauss, cross, or both");
    } else if (plan.cmd == "flowlink") {
        if (!args.contains("field")) throw MalformedConfig("flowlink requires \"field\"");
        if (!args.contains("p") || !args.contains("q"))
            throw MalformedConfig("flowlink requires seed points \"p\" and \"q\"");
        detail::as_point4(args, "p");
        detail::as_point4(args, "q");
        if (!args.contains("horizon")) throw MalformedConfig("flowlink requires \"horizon\"");
        const auto& h = args.at("horizon");
        const auto check_h = [](const ordered_json& e) {
            if (!e.is_number()) throw MalformedConfig("\"horizon\" entries must be numbers");
            if (e.get<double>() < 10.0)
                throw OutOfRangeParameter("horizon must be at least 10");
        };
        if (h.is_array()) {
            if (h.empty()) throw MalformedConfig("\"horizon\" array must not be empty");
            for (const auto& e : h) check_h(e);
        } else {
            check_h(h);
        }
        detail::default_number(args, "delta", 0.2);
        detail::default_number(args, "jitter", 0.1);
        const double delta = detail::as_number(args, "delta");
        if (delta <= 0.0 || delta >= 2.0)
            throw OutOfRangeParameter("delta must lie in (0, 2)");
        if (detail::as_number(args, "jitter") < 0.0)
            throw OutOfRangeParameter("jitter must be nonnegative");
        if (args.contains("csv")) detail::as_string(args, "csv");
    } else if (plan.cmd == "lkomega") {
        if (!args.contains("field")) throw MalformedConfig("lkomega requires \"field\"");
        if (!args.contains("method")) args["method"] = "direct";
        const std::string method = detail::as_string(args, "method");
        if (method != "direct" && method != "kernel")
            throw OutOfRangeParameter("lkomega method must be direct or kernel");
        if (!args.contains("orbit_seed"))
            throw MalformedConfig("lkomega requires \"orbit_seed\"");
        detail::as_point4(args, "orbit_seed");
        detail::default_integer(args, "nodes", 512);
        detail::default_number(args, "S", 50.0);
        detail::default_number(args, "T", 50.0);
        detail::default_integer(args, "n_volume", 2000);
        detail::default_integer(args, "seed", 1);
        if (detail::as_integer(args, "nodes") < 3)
            throw OutOfRangeParameter("nodes must be at least 3");
        if (detail::as_number(args, "S") < 10.0 || detail::as_number(args, "T") < 10.0)
            throw OutOfRangeParameter("kernel horizons S and T must be at least 10");
        if (detail::as_integer(args, "n_volume") < 16)
            throw OutOfRangeParameter("n_volume must be at least 16");
    } else if (plan.cmd == "certify") {
        if (!args.contains("field")) throw MalformedConfig("certify requires \"field\"");
        detail::default_integer(args, "orbits", 3);
        detail::default_integer(args, "volume_samples", 4096);
        detail::default_number(args, "tol", 1e-4);
        detail::default_integer(args, "seed", 1);
        if (detail::as_integer(args, "orbits") < 0)
            throw OutOfRangeParameter("orbits must be nonnegative");
        if (detail::as_integer(args, "volume_samples") < 8)
            throw OutOfRangeParameter("volume_samples must be at least 8");
        if (detail::as_number(args, "tol") <= 0.0)
            throw OutOfRangeParameter("tol must be positive");
    } else if (plan.cmd == "reconstruct") {
        if (!args.contains("field")) throw MalformedConfig("reconstruct requires \"field\"");
        detail::default_integer(args, "samples", 500);
        detail::default_integer(args, "seed", 1);
        if (detail::as_integer(args, "samples") < 1)
            throw OutOfRangeParameter("samples must be positive");
    } else if (plan.cmd == "ulam") {
        if (!args.contains("field")) throw MalformedConfig("ulam requires \"field\"");
        if (!args.contains("out")) throw MalformedConfig("ulam requires \"out\" for the chain file");
        if (!args.contains("res")) throw MalformedConfig("ulam requires \"res\"");
        const auto& res = args.at("res");
        const auto check_res = [](const ordered_json& e) {
            if (!e.is_number_integer() || e.get<long>() < 1)
                throw OutOfRangeParameter("res entries must be positive integers");
        };
        if (res.is_array()) {
            if (res.size() != 3) throw MalformedConfig("\"res\" must be an integer or 3 integers");
            for (const auto& e : res) check_res(e);
        } else {
            check_res(res);
        }
        detail::default_number(args, "tau", 0.5);
        detail::default_integer(args, "spc", 16);
        detail::default_integer(args, "seed", 1);
        const double tau = detail::as_number(args, "tau");
        if (tau < 0.01 || tau > 1.0)
            throw OutOfRangeParameter("tau must lie in [0.01, 1]");
        if (detail::as_integer(args, "spc") < 8)
            throw OutOfRangeParameter("spc must be at least 8");
    } else if (plan.cmd == "lpmin") {
        if (!args.contains("chain")) throw MalformedConfig("lpmin requires \"chain\"");
        detail::as_string(args, "chain");
        if (!args.contains("maximize")) args["maximize"] = false;
        if (!args.at("maximize").is_boolean())
            throw MalformedConfig("\"maximize\" must be a boolean");
    } else if (plan.cmd == "fibers") {
        if (!args.contains("outdir")) args["outdir"] = ".";
        detail::as_string(args, "outdir");
        detail::default_integer(args, "segments", 2048);
        if (detail::as_integer(args, "segments") < 8)
            throw OutOfRangeParameter("segments must be at least 8");
    }
    return plan;
}

// Same validation, starting from config file text.
inline ExperimentPlan parse_config(const std::string& text) {
    ordered_json root;
    try {
        root = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        int line = 0, col = 0;
        detail::locate(text, e.byte > 0 ? e.byte - 1 : 0, line, col);
        throw MalformedConfig("config is not valid JSON at line " + std::to_string(line) +
                              ", column " + std::to_string(col));
    }
    return plan_from_json(root);
}

}  // namespace righthand
