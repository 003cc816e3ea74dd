#pragma once

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "righthand/asymptotic.hpp"
#include "righthand/config.hpp"
#include "righthand/contact.hpp"
#include "righthand/invariant_lp.hpp"
#include "righthand/linking.hpp"
#include "righthand/measure.hpp"
#include "righthand/ulam.hpp"
#include "righthand/version.hpp"

namespace righthand {

inline ordered_json chain_to_json(const UlamChain& chain) {
    ordered_json j;
    j["field"] = chain.field_name;
    j["resolution"] = {chain.n_eta, chain.n_xi1, chain.n_xi2};
    j["tau"] = chain.tau;
    j["cells"] = chain.cells();
    j["cell_volume"] = chain.cell_volume;
    j["objective"] = chain.objective;
    j["transition"] = chain.transition;
    return j;
}

inline UlamChain chain_from_json(const ordered_json& j) {
    UlamChain chain;
    try {
        const auto& res = j.at("resolution");
        if (!res.is_array() || res.size() != 3)
            throw MalformedConfig("chain \"resolution\" must have 3 entries");
        chain.n_eta = res[0].get<int>();
        chain.n_xi1 = res[1].get<int>();
        chain.n_xi2 = res[2].get<int>();
        chain.tau = j.at("tau").get<double>();
        chain.field_name = j.at("field").get<std::string>();
        chain.cell_volume = j.at("cell_volume").get<std::vector<double>>();
        chain.objective = j.at("objective").get<std::vector<double>>();
        chain.transition = j.at("transition").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw MalformedConfig(std::string("chain file is missing or mistypes a key: ") + e.what());
    }
    const std::size_t n = static_cast<std::size_t>(chain.cells());
    if (chain.n_eta < 1 || chain.n_xi1 < 1 || chain.n_xi2 < 1 ||
        (j.contains("cells") && j.at("cells").get<long>() != static_cast<long>(n)))
        throw MalformedConfig("chain resolution is inconsistent with its cell count");
    if (chain.cell_volume.size() != n || chain.objective.size() != n ||
        chain.transition.size() != n * n)
        throw MalformedConfig("chain arrays do not match the declared resolution");
    return chain;
}

inline void save_chain(const std::string& path, const UlamChain& chain) {
    std::ofstream f(path);
    if (!f) throw MalformedConfig("cannot open chain file for writing: " + path);
    f << chain_to_json(chain).dump() << "\n";
    if (!f.good()) throw MalformedConfig("failed writing chain file: " + path);
}

inline UlamChain load_chain(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw MalformedConfig("cannot open chain file: " + path);
    ordered_json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception&) {
        throw MalformedConfig("chain file is not valid JSON: " + path);
    }
    return chain_from_json(j);
}

namespace detail {

// The environment variable wins over any configured cache directory so a
// batch of runs can be redirected without touching their configs.
inline std::string resolve_cache_dir(const ordered_json& args) {
    if (const char* env = std::getenv("RIGHTHAND_CACHE"); env && *env) return env;
    if (args.contains("cache_dir")) return args.at("cache_dir").get<std::string>();
    return {};
}

inline Vec4 seed_point(const ordered_json& args, const std::string& key) {
    const auto v = args.at(key).get<std::vector<double>>();
    return PointS3(Vec4(v[0], v[1], v[2], v[3])).x;
}

inline ordered_json run_link(const ordered_json& args) {
    const Polyline c1 = read_curve_file(args.at("curves")[0].get<std::string>());
    const Polyline c2 = read_curve_file(args.at("curves")[1].get<std::string>());
    const std::string method = args.at("method").get<std::string>();
    ordered_json out;
    if (method == "gauss" || method == "both") {
        const LinkingResult lk = linking_integral(c1, c2);
        out["value"] = lk.value;
        out["stderr"] = lk.stderr_est;
    }
    if (method == "cross" || method == "both") out["integer"] = crossing_number(c1, c2);
    out["method"] = method;
    return out;
}

inline ordered_json run_flowlink(const ordered_json& args) {
    const FieldSpec spec = parse_field(args.at("field").get<std::string>());
    const Vec4 p = seed_point(args, "p");
    const Vec4 q = seed_point(args, "q");
    const double delta = args.at("delta").get<double>();
    const double jitter = args.at("jitter").get<double>();
    const std::string cache = resolve_cache_dir(args);

    std::vector<double> horizons;
    if (args.at("horizon").is_array())
        horizons = args.at("horizon").get<std::vector<double>>();
    else
        horizons.push_back(args.at("horizon").get<double>());

    ordered_json out;
    ordered_json sweep = ordered_json::array();
    for (const double h : horizons) {
        const AsymptoticLinking r = asymptotic_linking(spec, p, q, h, h, delta, jitter, cache);
        ordered_json row;
        row["horizon"] = h;
        row["value"] = r.link.value;
        row["stderr"] = r.link.stderr_est;
        row["S_star"] = r.s_star;
        row["T_star"] = r.t_star;
        sweep.push_back(row);
    }
    if (horizons.size() == 1) {
        out = sweep[0];
        out.erase("horizon");
        out["method"] = "asymptotic";
    } else {
        out["sweep"] = sweep;
        out["method"] = "asymptotic";
    }
    if (args.contains("csv")) {
        const std::string path = args.at("csv").get<std::string>();
        std::ofstream f(path);
        if (!f) throw MalformedConfig("cannot open csv file for writing: " + path);
        f << "horizon,value,stderr,S_star,T_star\n";
        char buf[256];
        for (const auto& row : sweep) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n",
                          row.at("horizon").get<double>(), row.at("value").get<double>(),
                          row.at("stderr").get<double>(), row.at("S_star").get<double>(),
                          row.at("T_star").get<double>());
            f << buf;
        }
        out["csv"] = path;
    }
    return out;
}

inline ordered_json run_lkomega(const ordered_json& args) {
    const FieldSpec spec = parse_field(args.at("field").get<std::string>());
    const Vec4 seed_pt = seed_point(args, "orbit_seed");
    ordered_json out;
    if (args.at("method") == "direct") {
        const MeasureSample mu =
            periodic_orbit_measure(spec, seed_pt, static_cast<int>(args.at("nodes").get<long>()));
        const auto [value, se] = lk_omega_direct_stats(spec, mu);
        out["value"] = value;
        out["stderr"] = se;
        out["method"] = "direct";
        out["measure"] = mu.provenance;
    } else {
        const LinkingResult r = lk_omega_kernel(
            spec, seed_pt, args.at("S").get<double>(), args.at("T").get<double>(),
            static_cast<int>(args.at("n_volume").get<long>()), args.at("seed").get<std::uint64_t>());
        out["value"] = r.value;
        out["stderr"] = r.stderr_est;
        out["method"] = r.method;
        out["seed"] = args.at("seed").get<std::uint64_t>();
    }
    return out;
}

inline ordered_json run_certify(const ordered_json& args) {
    const FieldSpec spec = parse_field(args.at("field").get<std::string>());
    const int orbits = static_cast<int>(args.at("orbits").get<long>());
    const int volume_samples = static_cast<int>(args.at("volume_samples").get<long>());
    const double tol = args.at("tol").get<double>();
    const auto seed = args.at("seed").get<std::uint64_t>();

    std::vector<MeasureSample> family;
    family.push_back(volume_measure(spec, volume_samples, seed));
    const auto& cands = pole_candidates();
    for (int i = 0; i < orbits; ++i) {
        const Vec4 s = cands[(static_cast<std::size_t>(i) * 7) % cands.size()];
        try {
            family.push_back(periodic_orbit_measure(spec, s, 256));
        } catch (const NoRecurrence&) {
            family.push_back(birkhoff_measure(spec, s, 100.0, 400));
        }
    }
    const CertificationReport report = mcduff_certify(spec, family, tol);

    ordered_json out;
    out["verdict"] = report.verdict;
    out["tolerance"] = report.tolerance;
    ordered_json entries = ordered_json::array();
    for (const auto& e : report.entries) {
        ordered_json row;
        row["measure"] = e.provenance;
        row["value"] = e.value;
        row["stderr"] = e.stderr_est;
        entries.push_back(row);
    }
    out["entries"] = entries;
    return out;
}

inline ordered_json run_reconstruct(const ordered_json& args) {
    const FieldSpec spec = parse_field(args.at("field").get<std::string>());
    const ReebDefects d = verify_reeb(spec, static_cast<int>(args.at("samples").get<long>()),
                                      args.at("seed").get<std::uint64_t>());
    ordered_json out;
    out["max_pairing_defect"] = d.max_pairing_defect;
    out["max_contraction_defect"] = d.max_contraction_defect;
    return out;
}

inline ordered_json run_ulam(const ordered_json& args) {
    const FieldSpec spec = parse_field(args.at("field").get<std::string>());
    std::array<int, 3> res{};
    if (args.at("res").is_array())
        for (int i = 0; i < 3; ++i) res[i] = static_cast<int>(args.at("res")[i].get<long>());
    else
        res.fill(static_cast<int>(args.at("res").get<long>()));
    const UlamChain chain =
        build_chain(spec, res, args.at("tau").get<double>(),
                    static_cast<int>(args.at("spc").get<long>()), args.at("seed").get<std::uint64_t>());
    const std::string path = args.at("out").get<std::string>();
    save_chain(path, chain);
    ordered_json out;
    out["field"] = chain.field_name;
    out["resolution"] = {chain.n_eta, chain.n_xi1, chain.n_xi2};
    out["tau"] = chain.tau;
    out["cells"] = chain.cells();
    out["chain"] = path;
    return out;
}

inline ordered_json run_lpmin(const ordered_json& args) {
    const UlamChain chain = load_chain(args.at("chain").get<std::string>());
    const bool maximize = args.at("maximize").get<bool>();
    const LPResult r = maximize ? max_invariant_linking(chain) : min_invariant_linking(chain);
    ordered_json out;
    out["value"] = r.min_value;
    out["maximize"] = maximize;
    out["feasibility_residual"] = r.feasibility_residual;
    int support = 0;
    for (const double w : r.argmin_weights)
        if (w > 1e-12) ++support;
    out["support_cells"] = support;
    if (chain.cells() <= 4096) out["weights"] = r.argmin_weights;
    return out;
}

inline ordered_json run_fibers(const ordered_json& args) {
    const std::string outdir = args.at("outdir").get<std::string>();
    const int n = static_cast<int>(args.at("segments").get<long>());
    std::filesystem::create_directories(outdir);

    ordered_json files = ordered_json::array();
    const auto emit = [&](const char* name, const Polyline& c) {
        write_curve_file((std::filesystem::path(outdir) / name).string(), c);
        files.push_back(name);
    };
    const auto circle = [&](const Vec3& center, const Vec3& u, const Vec3& v) {
        std::vector<Vec3> pts;
        pts.reserve(n);
        for (int k = 0; k < n; ++k) {
            const double t = 2.0 * pi * k / n;
            pts.push_back(center + std::cos(t) * u + std::sin(t) * v);
        }
        return Polyline::closed_r3(pts);
    };
    // One component of the (2,4) torus link on the torus of radii (2, 1/2),
    // taken with the meridian winding reversed so the pair links positively.
    const auto torus24 = [&](int i) {
        std::vector<Vec3> pts;
        pts.reserve(n);
        for (int k = 0; k < n; ++k) {
            const double t = 2.0 * pi * k / n;
            const double w = 2.0 * t + pi * i;
            const double rad = 2.0 + 0.5 * std::cos(w);
            pts.emplace_back(rad * std::cos(t), rad * std::sin(t), -0.5 * std::sin(w));
        }
        return Polyline::closed_r3(pts);
    };
    const Vec3 ex(1, 0, 0), ey(0, 1, 0), ez(0, 0, 1), zero(0, 0, 0);

    emit("hopf_fiber_a.xyz", fiber_loop(FieldSpec::hopf(), Vec4(1, 0, 0, 0), n));
    emit("hopf_fiber_b.xyz", fiber_loop(FieldSpec::hopf(), Vec4(0, 0, 1, 0), n));
    emit("antihopf_fiber_a.xyz", fiber_loop(FieldSpec::antihopf(), Vec4(1, 0, 0, 0), n));
    emit("antihopf_fiber_b.xyz", fiber_loop(FieldSpec::antihopf(), Vec4(0, 0, 1, 0), n));
    emit("linked_circles_a.xyz", circle(zero, ex, ey));
    emit("linked_circles_b.xyz", circle(ex, ex, ez));
    emit("distant_circles_a.xyz", circle(zero, ex, ey));
    emit("distant_circles_b.xyz", circle(Vec3(10, 0, 0), ex, ey));
    emit("torus24_a.xyz", torus24(0));
    emit("torus24_b.xyz", torus24(1));

    ordered_json out;
    out["outdir"] = outdir;
    out["files"] = files;
    return out;
}

}  // namespace detail

// Executes a validated plan and wraps the outputs in a result envelope that
// echoes the inputs.  Everything except wall_time_s is deterministic for a
// fixed plan, which the test suite relies on.
inline ordered_json run_plan(const ExperimentPlan& plan) {
    const auto t0 = std::chrono::steady_clock::now();
    ordered_json result;
    result["version"] = version_string;
    result["cmd"] = plan.cmd;
    ordered_json inputs = plan.args;
    inputs.erase("cmd");
    result["inputs"] = inputs;

    if (plan.cmd == "link")
        result["outputs"] = detail::run_link(plan.args);
    else if (plan.cmd == "flowlink")
        result["outputs"] = detail::run_flowlink(plan.args);
    else if (plan.cmd == "lkomega")
        result["outputs"] = detail::run_lkomega(plan.args);
    else if (plan.cmd == "certify")
        result["outputs"] = detail::run_certify(plan.args);
    else if (plan.cmd == "reconstruct")
        result["outputs"] = detail::run_reconstruct(plan.args);
    else if (plan.cmd == "ulam")
        result["outputs"] = detail::run_ulam(plan.args);
    else if (plan.cmd == "lpmin")
        result["outputs"] = detail::run_lpmin(plan.args);
    else if (plan.cmd == "fibers")
        result["outputs"] = detail::run_fibers(plan.args);
    else
        throw MalformedConfig("unknown cmd \"" + plan.cmd + "\"");

    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    result["wall_time_s"] = dt.count();
    return result;
}

// Where the result envelope goes: the plan's "out" path, except for ulam,
// whose "out" names the chain file and whose envelope goes to stdout.
inline std::string result_path(const ExperimentPlan& plan) {
    if (plan.cmd == "ulam") return {};
    return plan.args.value("out", std::string());
}

inline void write_result(const ordered_json& result, const std::string& path) {
    if (path.empty()) {
        std::cout << result.dump(2) << "\n";
        return;
    }
    std::ofstream f(path);
    if (!f) throw MalformedConfig("cannot open output file for writing: " + path);
    f << result.dump(2) << "\n";
}

}  // namespace righthand
