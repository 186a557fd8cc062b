// Command-line front end: kernel validation, LP solve/check, Monte Carlo
// simulation, analytic certificate evaluation, and activation-function search.
//
// Conventions shared by every subcommand:
//   - seed precedence: --seed flag, then STOCHMATCH_SEED, then 42;
//   - every JSON report carries a manifest (command, arguments, seed, tool
//     version, input content hashes, wall time); reruns with the same argv,
//     files and seed are byte-identical except for the wall_seconds line;
//   - exit 0 on success, 1 on validation failure, 2 on usage error.

#include <chrono>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "stochmatch/stochmatch.hpp"

namespace {

using namespace stochmatch;

std::uint64_t resolve_seed(bool flag_given, std::uint64_t flag_value) {
    if (flag_given) return flag_value;
    if (const char* env = std::getenv("STOCHMATCH_SEED")) {
        try {
            size_t pos = 0;
            const unsigned long long v = std::stoull(env, &pos);
            if (pos != std::strlen(env)) throw std::invalid_argument(env);
            return v;
        } catch (const std::exception&) {
            throw std::runtime_error("STOCHMATCH_SEED is not an unsigned integer");
        }
    }
    return 42;
}

struct Clock {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text << '\n';
        return;
    }
    std::ofstream o(out_path, std::ios::binary);
    if (!o) throw std::runtime_error("cannot write " + out_path);
    o << text << '\n';
}

template <class Fn>
void emit_csv(const std::string& path, Fn&& fill) {
    std::ostringstream ss;
    fill(ss);
    emit(ss.str(), path);
}

void put_activation(JsonWriter& w, const PiecewiseConstantF& f) {
    w.begin_object();
    w.key("m");
    w.value(f.m());
    w.key("values");
    w.begin_array();
    for (double v : f.values()) w.value(v);
    w.end_array();
    w.end_object();
}

void put_ratio_report(JsonWriter& w, const RatioReport& r) {
    w.begin_object();
    w.key("ystar");
    w.value(r.ystar_value);
    w.key("r1_ystar");
    w.value(r.r1_ystar);
    w.key("r2_ystar");
    w.value(r.r2_ystar);
    w.key("min_ratio");
    w.value(r.min_ratio);
    w.key("cons1");
    w.value(r.cons1);
    w.key("cons2");
    w.value(r.cons2);
    w.key("cons1_conservative");
    w.value(r.cons1_conservative);
    w.key("cons2_conservative");
    w.value(r.cons2_conservative);
    w.key("F1");
    w.value(r.F1);
    w.key("grid_min");
    w.value(r.grid_min);
    w.key("flags");
    w.begin_object();
    w.key("monotone");
    w.value(r.flag_monotone);
    w.key("F1_at_least_1");
    w.value(r.flag_F1);
    w.key("cons1_nonpositive");
    w.value(r.flag_cons1);
    w.key("cons2_nonpositive");
    w.value(r.flag_cons2);
    w.key("grid_min_at_ystar");
    w.value(r.grid_min_at_ystar);
    w.end_object();
    w.key("certified");
    w.value(r.certified);
    w.key("certified_ratio");
    w.value(r.certified_ratio);
    w.end_object();
}

// Shared tail of every report object.
void finish_report(JsonWriter& w, RunManifest& man, const Clock& clock,
                   const std::string& out_path) {
    man.wall_seconds = clock.elapsed();
    write_manifest(w, man);
    w.end_object();
    emit(w.str(), out_path);
}

}  // namespace

int main(int argc, char** argv) {
    const Clock clock;
    CLI::App app{"edge-weighted online stochastic matching toolkit: kernel instances, "
                 "activation-function certificates, Monte Carlo simulation, LP, search"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    std::string instance_path, f_path, out_path, init_path;
    std::string out_curves, out_edges, dump_arrivals;
    std::string engine_str;
    std::vector<std::string> joint_specs;
    std::uint64_t seed_flag = 42, trial_offset = 0;
    long trials = 10000;
    int grid_points = 101, ygrid_points = 64;
    int m = 40, restarts = 10, max_iters = 400, ils_cycles = 12, threads = 0;
    bool fixed_n = false, relax_y = false;

    auto* lp_cmd = app.add_subcommand("lp", "Matching LP over an instance file");
    lp_cmd->require_subcommand(1);
    auto* lp_solve = lp_cmd->add_subcommand("solve", "Solve the LP; print objective and x");
    lp_solve->add_option("instance", instance_path, "instance JSON file")->required();
    lp_solve->add_option("--out", out_path, "write the JSON report here instead of stdout");
    auto* lp_check =
        lp_cmd->add_subcommand("check", "Check the file's x block against the LP constraints");
    lp_check->add_option("instance", instance_path, "instance JSON file with an x block")
        ->required();
    lp_check->add_option("--out", out_path, "write the JSON report here instead of stdout");

    auto* kernel_cmd = app.add_subcommand("kernel", "Kernel-instance structure");
    kernel_cmd->require_subcommand(1);
    auto* kernel_check = kernel_cmd->add_subcommand(
        "check", "Validate kernel structure; report classes, y_j and competitors");
    kernel_check->add_option("instance", instance_path, "instance JSON file with an x block")
        ->required();
    kernel_check->add_flag("--relax-y", relax_y, "skip the y_j <= 1 - ln 2 bound");
    kernel_check->add_option("--out", out_path, "write the JSON report here instead of stdout");

    auto* sim = app.add_subcommand("simulate", "Monte Carlo estimates on a kernel instance");
    sim->add_option("instance", instance_path, "instance JSON file with an x block")->required();
    sim->add_option("--engine", engine_str, "matching engine")
        ->required()
        ->check(CLI::IsMember({"esm", "sm", "two-choice", "msm"}));
    sim->add_option("--f", f_path, "activation function JSON (required for esm)");
    sim->add_option("--trials", trials, "number of trials")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    auto* sim_seed = sim->add_option("--seed", seed_flag, "RNG seed");
    sim->add_option("--trial-offset", trial_offset,
                    "first trial index (for merging split runs)");
    sim->add_option("--grid", grid_points, "time-grid point count")
        ->capture_default_str()
        ->check(CLI::Range(2, 1000000));
    sim->add_option("--threads", threads, "worker threads (0 = hardware)");
    sim->add_flag("--fixed-n", fixed_n,
                  "fixed-population mode: round(total rate) arrivals at k/n");
    sim->add_option("--joint", joint_specs,
                    "offline pair \"j,jp\" for a joint unmatched curve (repeatable)");
    sim->add_flag("--relax-y", relax_y, "skip the y_j <= 1 - ln 2 bound");
    sim->add_option("--out", out_path, "write the JSON report here instead of stdout");
    sim->add_option("--out-curves", out_curves, "write per-vertex curves CSV here");
    sim->add_option("--out-edges", out_edges, "write per-edge estimates CSV here");
    sim->add_option("--dump-arrivals", dump_arrivals,
                    "write the first trial's event log CSV here");

    auto* ratio_cmd = app.add_subcommand("ratio", "Analytic certificate quantities");
    ratio_cmd->require_subcommand(1);
    auto* ratio_eval =
        ratio_cmd->add_subcommand("eval", "Evaluate r1, r2, constraints and the certificate");
    ratio_eval->add_option("--f", f_path, "activation function JSON")->required();
    ratio_eval->add_option("--grid", ygrid_points, "y-grid points for the minimum spot check")
        ->capture_default_str()
        ->check(CLI::Range(2, 1000000));
    ratio_eval->add_option("--out", out_path, "write the JSON report here instead of stdout");
    auto* ratio_curve = ratio_cmd->add_subcommand("curve", "Emit (y, r1, r2) CSV on a y grid");
    ratio_curve->add_option("--f", f_path, "activation function JSON")->required();
    ratio_curve->add_option("--grid", ygrid_points, "y-grid points")
        ->capture_default_str()
        ->check(CLI::Range(2, 1000000));
    ratio_curve->add_option("--out", out_path, "write the CSV here instead of stdout");

    auto* curve_cmd = app.add_subcommand("curve", "Alias for `ratio curve`");
    curve_cmd->add_option("--f", f_path, "activation function JSON")->required();
    curve_cmd->add_option("--grid", ygrid_points, "y-grid points")
        ->capture_default_str()
        ->check(CLI::Range(2, 1000000));
    curve_cmd->add_option("--out", out_path, "write the CSV here instead of stdout");

    auto* search_cmd =
        app.add_subcommand("search", "Optimize the activation function over a level grid");
    search_cmd->add_option("--m", m, "number of intervals")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    search_cmd->add_option("--restarts", restarts, "random restarts")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    auto* search_seed = search_cmd->add_option("--seed", seed_flag, "RNG seed");
    search_cmd->add_option("--max-iters", max_iters, "ascent iterations per phase")
        ->capture_default_str();
    search_cmd->add_option("--ils-cycles", ils_cycles, "perturb-and-reclimb cycles")
        ->capture_default_str();
    search_cmd->add_option("--threads", threads, "worker threads (0 = hardware)");
    search_cmd->add_option("--init", init_path, "activation JSON seeding restart 0");
    search_cmd->add_option("--out", out_path, "write the best activation function here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        std::cout << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::CallForVersion&) {
        std::cout << kToolVersion << '\n';
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    }

    try {
        RunManifest man;
        man.arguments.assign(argv + 1, argv + argc);

        if (lp_solve->parsed()) {
            man.command = "lp solve";
            man.seed = resolve_seed(false, 0);
            manifest_input(man, instance_path);
            const auto file = load_instance(instance_path);
            const auto lp = build_jl_lp(file.inst);
            const auto sol = solve_jl_lp(lp);
            JsonWriter w;
            w.begin_object();
            w.key("objective");
            w.value(sol.objective);
            w.key("iterations");
            w.value(sol.iterations);
            w.key("x");
            w.begin_array();
            for (int e = 0; e < lp.num_x(); ++e) {
                w.begin_object();
                w.key("i");
                w.value(lp.edges[e].i);
                w.key("j");
                w.value(lp.edges[e].j);
                w.key("x");
                w.value(sol.vars[e]);
                w.end_object();
            }
            w.end_array();
            w.key("z");
            w.begin_array();
            for (int e = 0; e < lp.num_z(); ++e) w.value(sol.vars[lp.num_x() + e]);
            w.end_array();
            finish_report(w, man, clock, out_path);
            return 0;
        }

        if (lp_check->parsed()) {
            man.command = "lp check";
            man.seed = resolve_seed(false, 0);
            manifest_input(man, instance_path);
            const auto file = load_instance(instance_path);
            if (!file.has_x)
                throw std::runtime_error(instance_path + ": no x block to check");
            const auto rep = check_feasibility(file.inst, file.x);
            JsonWriter w;
            w.begin_object();
            w.key("ok");
            w.value(rep.ok);
            w.key("max_x_negative");
            w.value(rep.max_x_negative);
            w.key("max_rate_excess");
            w.value(rep.max_rate);
            w.key("max_offline_excess");
            w.value(rep.max_offline);
            w.key("max_zcap_excess");
            w.value(rep.max_zcap);
            w.key("worst");
            w.value(rep.worst());
            finish_report(w, man, clock, out_path);
            return rep.ok ? 0 : 1;
        }

        if (kernel_check->parsed()) {
            man.command = "kernel check";
            man.seed = resolve_seed(false, 0);
            manifest_input(man, instance_path);
            const auto file = load_instance(instance_path);
            if (!file.has_x)
                throw std::runtime_error(instance_path + ": no x block (kernels need one)");
            KernelOptions opt;
            opt.enforce_y_bound = !relax_y;
            const auto k = classify_kernel(file.inst, file.x, opt);
            JsonWriter w;
            w.begin_object();
            w.key("ok");
            w.value(true);
            w.key("ystar");
            w.value(ystar());
            w.key("types");
            w.begin_array();
            for (int t = 0; t < k.num_types(); ++t) {
                w.begin_object();
                w.key("i");
                w.value(k.inst.online[t].id);
                w.key("class");
                w.value(k.klass[t]);
                w.key("rate");
                w.value(k.inst.online[t].rate);
                w.key("x_per_edge");
                w.value(k.edge_x(t));
                w.key("neighbors");
                w.begin_array();
                for (const auto& n : k.inst.online[t].neighbors) w.value(n);
                w.end_array();
                w.end_object();
            }
            w.end_array();
            w.key("offline");
            w.begin_array();
            for (int j = 0; j < k.num_offline(); ++j) {
                w.begin_object();
                w.key("j");
                w.value(k.inst.offline[j]);
                w.key("y");
                w.value(k.y[j]);
                w.key("competitors");
                w.begin_array();
                for (const auto& [jk, ck] : k.comp[j]) {
                    w.begin_object();
                    w.key("j");
                    w.value(k.inst.offline[jk]);
                    w.key("c");
                    w.value(ck);
                    w.end_object();
                }
                w.end_array();
                w.end_object();
            }
            w.end_array();
            finish_report(w, man, clock, out_path);
            return 0;
        }

        if (sim->parsed()) {
            man.command = "simulate";
            const std::uint64_t seed = resolve_seed(sim_seed->count() > 0, seed_flag);
            man.seed = seed;
            manifest_input(man, instance_path);
            if (!f_path.empty()) manifest_input(man, f_path);

            const auto file = load_instance(instance_path);
            if (!file.has_x)
                throw std::runtime_error(instance_path + ": no x block (simulation needs one)");
            KernelOptions kopt;
            kopt.enforce_y_bound = !relax_y;
            const auto k = classify_kernel(file.inst, file.x, kopt);

            Engine eng = Engine::Esm;
            if (engine_str == "sm") eng = Engine::Sm;
            else if (engine_str == "two-choice") eng = Engine::TwoChoice;
            else if (engine_str == "msm") eng = Engine::Msm;
            if (engine_str == "esm" && f_path.empty())
                throw std::runtime_error("--f is required for engine esm");
            PiecewiseConstantF f = f_path.empty() ? flat_f(1, 1.0) : load_activation(f_path);

            EstimateOptions opt;
            opt.trials = trials;
            opt.seed = seed;
            opt.trial_offset = trial_offset;
            opt.grid = default_grid(grid_points);
            opt.threads = threads;
            opt.fixed_n = fixed_n;
            for (const auto& s : joint_specs) {
                const auto comma = s.find(',');
                if (comma == std::string::npos)
                    throw std::runtime_error("--joint expects \"j,jp\", got " + s);
                const int ja = k.inst.offline_index(s.substr(0, comma));
                const int jb = k.inst.offline_index(s.substr(comma + 1));
                if (ja < 0 || jb < 0)
                    throw std::runtime_error("unknown offline vertex in --joint: " + s);
                opt.joint_pairs.emplace_back(ja, jb);
            }

            const auto rep = estimate(k, eng, f, opt);
            const auto summary = ratio_report(k, rep);

            if (!out_curves.empty())
                emit_csv(out_curves, [&](std::ostream& os) { write_curves_csv(os, k, rep); });
            if (!out_edges.empty())
                emit_csv(out_edges, [&](std::ostream& os) { write_edges_csv(os, k, rep); });
            if (!dump_arrivals.empty()) {
                const PiecewiseConstantF f_eff = eng == Engine::Msm        ? msm_f()
                                                 : eng == Engine::TwoChoice ? flat_f(1, 2.0)
                                                                            : f;
                const auto events = fixed_n ? gen_events_fixed_n(k.inst, seed, trial_offset)
                                            : gen_events(k.inst, seed, trial_offset);
                emit_csv(dump_arrivals,
                         [&](std::ostream& os) { write_arrivals_csv(os, k, f_eff, events); });
            }

            JsonWriter w;
            w.begin_object();
            w.key("engine");
            w.value(engine_name(eng));
            w.key("trials");
            w.value(rep.trials);
            w.key("seed");
            w.value(rep.seed);
            w.key("trial_offset");
            w.value(rep.trial_offset);
            w.key("fixed_n");
            w.value(fixed_n);
            w.key("edges");
            w.begin_array();
            for (const auto& e : rep.edges) {
                w.begin_object();
                w.key("i");
                w.value(k.inst.online[e.type].id);
                w.key("j");
                w.value(k.inst.offline[e.offline]);
                w.key("x");
                w.value(e.x);
                w.key("count");
                w.value(e.count);
                w.key("phat");
                w.value(e.phat);
                w.key("se");
                w.value(e.se);
                w.key("ratio");
                w.value(e.x > 0.0 ? e.phat / e.x : 0.0);
                w.end_object();
            }
            w.end_array();
            w.key("ratio");
            w.begin_object();
            w.key("alpha");
            w.value(summary.alpha);
            w.key("se");
            w.value(summary.se);
            w.key("argmin_i");
            w.value(summary.argmin_i_id);
            w.key("argmin_j");
            w.value(summary.argmin_j_id);
            w.end_object();
            w.key("grid");
            w.begin_array();
            for (double t : rep.grid) w.value(t);
            w.end_array();
            w.key("unmatched");
            w.begin_object();
            for (int j = 0; j < k.num_offline(); ++j) {
                w.key(k.inst.offline[j]);
                w.begin_array();
                for (size_t g = 0; g < rep.grid.size(); ++g)
                    w.value(rep.phat_unmatched(j, static_cast<int>(g)));
                w.end_array();
            }
            w.end_object();
            w.key("joint");
            w.begin_array();
            for (size_t p = 0; p < opt.joint_pairs.size(); ++p) {
                w.begin_object();
                w.key("j");
                w.value(k.inst.offline[opt.joint_pairs[p].first]);
                w.key("jp");
                w.value(k.inst.offline[opt.joint_pairs[p].second]);
                w.key("phat");
                w.begin_array();
                for (size_t g = 0; g < rep.grid.size(); ++g)
                    w.value(rep.phat_joint(static_cast<int>(p), static_cast<int>(g)));
                w.end_array();
                w.end_object();
            }
            w.end_array();
            finish_report(w, man, clock, out_path);
            return 0;
        }

        if (ratio_eval->parsed()) {
            man.command = "ratio eval";
            man.seed = resolve_seed(false, 0);
            manifest_input(man, f_path);
            const auto f = load_activation(f_path);
            const auto rep = check_all(f, 1e-12, ygrid_points);
            JsonWriter w;
            w.begin_object();
            w.key("f");
            put_activation(w, f);
            w.key("report");
            put_ratio_report(w, rep);
            finish_report(w, man, clock, out_path);
            return 0;
        }

        if (ratio_curve->parsed() || curve_cmd->parsed()) {
            man.command = ratio_curve->parsed() ? "ratio curve" : "curve";
            man.seed = resolve_seed(false, 0);
            manifest_input(man, f_path);
            const auto f = load_activation(f_path);
            const auto pts = y_grid(f, ygrid_points);
            emit_csv(out_path, [&](std::ostream& os) {
                os << "y,r1,r2\n";
                for (const auto& p : pts)
                    os << fmt_double(p.y) << ',' << fmt_double(p.r1) << ',' << fmt_double(p.r2)
                       << '\n';
            });
            if (!out_path.empty()) {
                // The CSV went to a file; report where on stdout.
                JsonWriter w;
                w.begin_object();
                w.key("csv");
                w.value(out_path);
                w.key("points");
                w.value(ygrid_points);
                finish_report(w, man, clock, "");
            }
            return 0;
        }

        if (search_cmd->parsed()) {
            man.command = "search";
            const std::uint64_t seed = resolve_seed(search_seed->count() > 0, seed_flag);
            man.seed = seed;
            if (!init_path.empty()) manifest_input(man, init_path);

            SearchConfig cfg;
            cfg.m = m;
            cfg.restarts = restarts;
            cfg.max_iters = max_iters;
            cfg.ils_cycles = ils_cycles;
            cfg.seed = seed;
            cfg.threads = threads;
            if (!init_path.empty()) {
                const auto f0 = load_activation(init_path);
                if (f0.m() != m)
                    throw std::runtime_error("--init has " + std::to_string(f0.m()) +
                                             " intervals, expected " + std::to_string(m));
                cfg.init = f0.values();
            }
            const auto res = optimize(cfg);
            if (res.feasible_found && !out_path.empty())
                save_activation(out_path, PiecewiseConstantF(res.best_values));

            JsonWriter w;
            w.begin_object();
            w.key("feasible_found");
            w.value(res.feasible_found);
            w.key("objective");
            w.value(res.report.certified_ratio);
            w.key("best");
            put_activation(w, PiecewiseConstantF(res.best_values));
            w.key("report");
            put_ratio_report(w, res.report);
            w.key("restart_objectives");
            w.begin_array();
            for (double o : res.restart_objectives) w.value(o);
            w.end_array();
            w.key("best_infeasible_violation");
            w.value(res.best_infeasible_violation);
            if (res.feasible_found && !out_path.empty()) {
                w.key("out");
                w.value(out_path);
            }
            finish_report(w, man, clock, "");
            return 0;
        }

        std::cerr << "usage error: no subcommand\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
