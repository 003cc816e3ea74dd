#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "righthand/config.hpp"
#include "righthand/runner.hpp"

namespace {

void execute(righthand::ordered_json root) {
    const righthand::ExperimentPlan plan = righthand::plan_from_json(root);
    const righthand::ordered_json result = righthand::run_plan(plan);
    righthand::write_result(result, righthand::result_path(plan));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"linking diagnostics for volume-preserving flows on the three-sphere"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string out, cache_dir;
    app.add_option("--out", out, "write the result JSON here instead of stdout");
    app.add_option("--cache-dir", cache_dir,
                   "trajectory cache directory (the RIGHTHAND_CACHE env var overrides this)");
    const auto common = [&](righthand::ordered_json& root) {
        if (!out.empty()) root["out"] = out;
        if (!cache_dir.empty()) root["cache_dir"] = cache_dir;
    };

    std::string config_path;
    auto* cmd_run = app.add_subcommand("run", "run an experiment described by a JSON config");
    cmd_run->add_option("--config", config_path, "config file")->required();
    cmd_run->callback([&] {
        std::ifstream f(config_path);
        if (!f) throw righthand::MalformedConfig("cannot open config file: " + config_path);
        std::stringstream ss;
        ss << f.rdbuf();
        righthand::ExperimentPlan plan = righthand::parse_config(ss.str());
        if (!out.empty()) plan.args["out"] = out;
        if (!cache_dir.empty()) plan.args["cache_dir"] = cache_dir;
        righthand::write_result(righthand::run_plan(plan), righthand::result_path(plan));
    });

    std::vector<std::string> curves;
    std::string link_method;
    auto* cmd_link = app.add_subcommand("link", "linking number of two closed curves from files");
    cmd_link->add_option("--curve", curves, "curve file (give twice)")->expected(2)->required();
    auto* link_method_opt =
        cmd_link->add_option("--method", link_method, "gauss, cross, or both (default)");
    cmd_link->callback([&] {
        righthand::ordered_json root;
        root["cmd"] = "link";
        root["curves"] = curves;
        if (link_method_opt->count()) root["method"] = link_method;
        common(root);
        execute(root);
    });

    std::string fl_field, fl_csv;
    std::vector<double> fl_p, fl_q, fl_h;
    double fl_delta = 0.0, fl_jitter = 0.0;
    auto* cmd_fl = app.add_subcommand("flowlink", "asymptotic linking of two flow trajectories");
    cmd_fl->add_option("--field", fl_field, "field name, e.g. hopf or ellipsoid:a=1,b=2")
        ->required();
    cmd_fl->add_option("--p", fl_p, "first seed point x1,x2,x3,x4")
        ->required()
        ->expected(4)
        ->delimiter(',');
    cmd_fl->add_option("--q", fl_q, "second seed point x1,x2,x3,x4")
        ->required()
        ->expected(4)
        ->delimiter(',');
    cmd_fl->add_option("--horizon", fl_h, "time horizon(s), comma separated for a sweep")
        ->required()
        ->expected(1, -1)
        ->delimiter(',');
    auto* fl_delta_opt = cmd_fl->add_option("--delta", fl_delta, "recurrence gap threshold");
    auto* fl_jitter_opt = cmd_fl->add_option("--jitter", fl_jitter, "closing arc jitter size");
    auto* fl_csv_opt = cmd_fl->add_option("--csv", fl_csv, "also write the sweep as CSV here");
    cmd_fl->callback([&] {
        righthand::ordered_json root;
        root["cmd"] = "flowlink";
        root["field"] = fl_field;
        root["p"] = fl_p;
        root["q"] = fl_q;
        if (fl_h.size() == 1)
            root["horizon"] = fl_h[0];
        else
            root["horizon"] = fl_h;
        if (fl_delta_opt->count()) root["delta"] = fl_delta;
        if (fl_jitter_opt->count()) root["jitter"] = fl_jitter;
        if (fl_csv_opt->count()) root["csv"] = fl_csv;
        common(root);
        execute(root);
    });

    std::string lo_field, lo_method;
    std::vector<double> lo_orbit_seed;
    long lo_nodes = 0, lo_n_volume = 0, lo_seed = 0;
    double lo_s = 0.0, lo_t = 0.0;
    auto* cmd_lo = app.add_subcommand("lkomega", "contact linking value of an invariant measure");
    cmd_lo->add_option("--field", lo_field, "field name")->required();
    auto* lo_method_opt =
        cmd_lo->add_option("--method", lo_method, "direct (default) or kernel");
    cmd_lo->add_option("--orbit-seed", lo_orbit_seed, "orbit seed point x1,x2,x3,x4")
        ->required()
        ->expected(4)
        ->delimiter(',');
    auto* lo_nodes_opt = cmd_lo->add_option("--nodes", lo_nodes, "orbit quadrature nodes");
    auto* lo_s_opt = cmd_lo->add_option("--S", lo_s, "kernel horizon for the orbit trajectory");
    auto* lo_t_opt = cmd_lo->add_option("--T", lo_t, "kernel horizon for volume trajectories");
    auto* lo_nv_opt = cmd_lo->add_option("--n-volume", lo_n_volume, "volume sample count");
    auto* lo_seed_opt = cmd_lo->add_option("--seed", lo_seed, "random seed");
    cmd_lo->callback([&] {
        righthand::ordered_json root;
        root["cmd"] = "lkomega";
        root["field"] = lo_field;
        if (lo_method_opt->count()) root["method"] = lo_method;
        root["orbit_seed"] = lo_orbit_seed;
        if (lo_nodes_opt->count()) root["nodes"] = lo_nodes;
        if (lo_s_opt->count()) root["S"] = lo_s;
        if (lo_t_opt->count()) root["T"] = lo_t;
        if (lo_nv_opt->count()) root["n_volume"] = lo_n_volume;
        if (lo_seed_opt->count()) root["seed"] = lo_seed;
        common(root);
        execute(root);
    });

    std::string ce_field;
    long ce_orbits = 0, ce_volume_samples = 0, ce_seed = 0;
    double ce_tol = 0.0;
    auto* cmd_ce = app.add_subcommand("certify", "sign certificate over a family of measures");
    cmd_ce->add_option("--field", ce_field, "field name")->required();
    auto* ce_orbits_opt = cmd_ce->add_option("--orbits", ce_orbits, "number of orbit measures");
    auto* ce_vs_opt =
        cmd_ce->add_option("--volume-samples", ce_volume_samples, "volume measure sample count");
    auto* ce_tol_opt = cmd_ce->add_option("--tol", ce_tol, "certification margin");
    auto* ce_seed_opt = cmd_ce->add_option("--seed", ce_seed, "random seed");
    cmd_ce->callback([&] {
        righthand::ordered_json root;
        root["cmd"] = "certify";
        root["field"] = ce_field;
        if (ce_orbits_opt->count()) root["orbits"] = ce_orbits;
        if (ce_vs_opt->count()) root["volume_samples"] = ce_volume_samples;
        if (ce_tol_opt->count()) root["tol"] = ce_tol;
        if (ce_seed_opt->count()) root["seed"] = ce_seed;
        common(root);
        execute(root);
    });

    std::string re_field;
    long re_samples = 0, re_seed = 0;
    auto* cmd_re = app.add_subcommand("reconstruct", "Reeb reconstruction defect check");
    cmd_re->add_option("--field", re_field, "field name")->required();
    auto* re_samples_opt = cmd_re->add_option("--samples", re_samples, "sample point count");
    auto* re_seed_opt = cmd_re->add_option("--seed", re_seed, "random seed");
    cmd_re->callback([&] {
        righthand::ordered_json root;
        root["cmd"] = "reconstruct";
        root["field"] = re_field;
        if (re_samples_opt->count()) root["samples"] = re_samples;
        if (re_seed_opt->count()) root["seed"] = re_seed;
        common(root);
        execute(root);
    });

    std::string ul_field;
    std::vector<long> ul_res;
    double ul_tau = 0.0;
    long ul_spc = 0, ul_seed = 0;
    auto* cmd_ul = app.add_subcommand("ulam", "build a transition chain for the time-tau map");
    cmd_ul->add_option("--field", ul_field, "field name")->required();
    cmd_ul->add_option("--res", ul_res, "grid resolution, one or three integers")
        ->required()
        ->expected(1, -1)
        ->delimiter(',');
    auto* ul_tau_opt = cmd_ul->add_option("--tau", ul_tau, "flow time per transition");
    auto* ul_spc_opt = cmd_ul->add_option("--spc", ul_spc, "samples per cell");
    auto* ul_seed_opt = cmd_ul->add_option("--seed", ul_seed, "random seed");
    cmd_ul->callback([&] {
        righthand::ordered_json root;
        root["cmd"] = "ulam";
        root["field"] = ul_field;
        if (ul_res.size() == 1)
            root["res"] = ul_res[0];
        else
            root["res"] = ul_res;
        if (ul_tau_opt->count()) root["tau"] = ul_tau;
        if (ul_spc_opt->count()) root["spc"] = ul_spc;
        if (ul_seed_opt->count()) root["seed"] = ul_seed;
        common(root);
        execute(root);
    });

    std::string lp_chain;
    bool lp_maximize = false;
    auto* cmd_lp = app.add_subcommand("lpmin", "optimize the objective over invariant measures");
    cmd_lp->add_option("--chain", lp_chain, "chain JSON file built by ulam")->required();
    cmd_lp->add_flag("--maximize", lp_maximize, "maximize instead of minimize");
    cmd_lp->callback([&] {
        righthand::ordered_json root;
        root["cmd"] = "lpmin";
        root["chain"] = lp_chain;
        if (lp_maximize) root["maximize"] = true;
        common(root);
        execute(root);
    });

    std::string fi_outdir;
    long fi_segments = 0;
    auto* cmd_fi = app.add_subcommand("fibers", "write reference curve files for the link command");
    auto* fi_outdir_opt = cmd_fi->add_option("--outdir", fi_outdir, "output directory");
    auto* fi_segments_opt = cmd_fi->add_option("--segments", fi_segments, "vertices per curve");
    cmd_fi->callback([&] {
        righthand::ordered_json root;
        root["cmd"] = "fibers";
        if (fi_outdir_opt->count()) root["outdir"] = fi_outdir;
        if (fi_segments_opt->count()) root["segments"] = fi_segments;
        common(root);
        execute(root);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const righthand::DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const righthand::NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
