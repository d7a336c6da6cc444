// Command-line front end: loads scenario/game/perturbation files, runs one of
// the four experiment commands, and writes the result artifacts. All heavy
// parallelism lives inside the library; this file only orchestrates.
//
// Exit codes: 0 success, 2 validation failure, 3 solver non-convergence,
// 1 anything else. Failures also land in <out>/error.json.

#include "CLI11.hpp"

#include "mfm/scenario_io.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace mfm;

struct RunConfig {
    std::string scenario;
    std::string perturbation;
    std::string out = ".";
    std::optional<int> n;
    std::optional<int> k;
    std::optional<double> tol;
    std::uint64_t seed = 20240915;
    std::string emit = "csv,json";
    std::string solver = "picard";
    std::vector<double> eps = {1.0, 0.5, 0.25, 0.125};
    int triples = 40;
};

struct EmitFlags {
    bool csv = false;
    bool json = false;
};

EmitFlags parse_emit(const std::string& emit) {
    EmitFlags flags;
    std::stringstream ss(emit);
    std::string token;
    while (std::getline(ss, token, ',')) {
        if (token == "csv") flags.csv = true;
        else if (token == "json") flags.json = true;
        else if (!token.empty())
            throw ValidationError("unknown emit format '" + token + "' (use csv,json)");
    }
    if (!flags.csv && !flags.json) throw ValidationError("--emit selects nothing");
    return flags;
}

void write_artifact(const std::string& out_dir, const std::string& name,
                    const std::string& content) {
    const auto path = std::filesystem::path(out_dir) / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << content;
}

PicardOptions solver_options(const RunConfig& cfg, int file_n) {
    PicardOptions opts;
    opts.grid_size = cfg.n.value_or(file_n);
    if (cfg.tol) opts.tol = *cfg.tol;
    return opts;
}

void run_simulate(const RunConfig& cfg) {
    const EmitFlags emit = parse_emit(cfg.emit);
    ScenarioFile file = load_scenario(cfg.scenario);
    const PicardOptions opts = solver_options(cfg, file.N);

    Motion motion;
    if (cfg.solver == "picard") {
        motion = picard_solve(file.scenario, opts);
    } else {
        motion = delayed_euler_solve(file.scenario, opts.grid_size);
    }
    if (emit.csv) write_artifact(cfg.out, "motion.csv", motion_csv(motion, file.scenario.p));
    if (emit.json) write_artifact(cfg.out, "motion.json", motion_json(motion, file.scenario.p));
}

void run_stability(const RunConfig& cfg) {
    const EmitFlags emit = parse_emit(cfg.emit);
    if (cfg.eps.empty()) throw ValidationError("stability needs at least one scale");
    ScenarioFile file = load_scenario(cfg.scenario);
    if (cfg.perturbation.empty()) throw ValidationError("stability needs --perturbation");
    Perturbation pert = load_perturbation(cfg.perturbation, file.scenario);

    SweepOptions opts;
    opts.picard = solver_options(cfg, file.N);
    opts.sampler.seed = cfg.seed;
    opts.net_seed = cfg.seed;

    SweepTable table = stability_sweep(file.scenario, pert, cfg.eps, opts);
    if (emit.csv) write_artifact(cfg.out, "sweep.csv", sweep_csv(table));
    if (emit.json) {
        // full per-node report at the first scale, under the sweep's ceiling
        SweepOptions ropts = opts;
        ropts.c = table.c_used;
        KeyEstimateReport rep = sweep_report(file.scenario, pert, cfg.eps.front(), ropts);
        write_artifact(cfg.out, "report.json", report_json(rep, cfg.eps.front()));
    }
}

void run_stackelberg(const RunConfig& cfg) {
    const EmitFlags emit = parse_emit(cfg.emit);
    ProblemFile file = load_problem(cfg.scenario);
    if (cfg.k) {
        // replace both menus with dirac menus at the requested slice count
        file.problem.leader_candidates =
            dirac_leader_menu(file.problem.base.V, *cfg.k, file.problem.base.T);
        file.problem.follower_candidates = dirac_follower_menu(
            file.problem.base.m0, file.problem.base.U, *cfg.k, file.problem.base.T);
    }
    const GameSolution sol = solve_stackelberg(file.problem, solver_options(cfg, file.N));
    if (emit.json) write_artifact(cfg.out, "solution.json", solution_json(sol));
    if (emit.csv) write_artifact(cfg.out, "payoffs.csv", payoff_csv(sol.payoffs));
}

struct AxiomGaps {
    double symmetry = 0.0;
    double identity = 0.0;
    double triangle = 0.0;
};

void absorb_triple(AxiomGaps& gaps, double dab, double dba, double dbc, double dac, double daa) {
    gaps.symmetry = std::max(gaps.symmetry, std::abs(dab - dba));
    gaps.identity = std::max(gaps.identity, daa);
    gaps.triangle = std::max(gaps.triangle, dac - (dab + dbc));
}

void run_metrics(const RunConfig& cfg) {
    const EmitFlags emit = parse_emit(cfg.emit);
    if (cfg.triples < 1) throw ValidationError("metrics needs at least one triple");
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> pos(-2.0, 2.0);
    std::uniform_real_distribution<double> mass(0.1, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    auto random_measure = [&](int dim) {
        const int n = 1 + static_cast<int>(rng() % 8);
        std::vector<Atom> atoms;
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            Vec x(dim);
            for (int j = 0; j < dim; ++j) x[j] = pos(rng);
            const double w = mass(rng);
            total += w;
            atoms.push_back({x, w});
        }
        for (Atom& a : atoms) a.w /= total;
        return EmpiricalMeasure(dim, std::move(atoms));
    };

    AxiomGaps wgaps;
    for (int trip = 0; trip < cfg.triples; ++trip) {
        const int dim = 1 + static_cast<int>(rng() % 3);
        const double p = (trip % 2 == 0) ? 1.0 : 2.0;
        EmpiricalMeasure a = random_measure(dim);
        EmpiricalMeasure b = random_measure(dim);
        EmpiricalMeasure c = random_measure(dim);
        absorb_triple(wgaps, wasserstein_p(a, b, p).distance, wasserstein_p(b, a, p).distance,
                      wasserstein_p(b, c, p).distance, wasserstein_p(a, c, p).distance,
                      wasserstein_p(a, a, p).distance);
    }

    const MetricGrid grid = MetricGrid::euclidean({Vec::Zero(1), Vec::Ones(1)});
    const LipschitzNet net = build_lipschitz_net(control_net_domain(grid, 1.0), 3, 16, cfg.seed);
    auto random_control = [&]() {
        Mat kernel(4, 2);
        for (int r = 0; r < 4; ++r) {
            const double q = unit(rng);
            kernel(r, 0) = q;
            kernel(r, 1) = 1.0 - q;
        }
        return RelaxedControl(1.0, grid, kernel).as_domain_measure();
    };

    AxiomGaps ngaps;
    for (int trip = 0; trip < cfg.triples; ++trip) {
        EmpiricalMeasure a = random_control();
        EmpiricalMeasure b = random_control();
        EmpiricalMeasure c = random_control();
        absorb_triple(ngaps, narrow_metric_d(a, b, net), narrow_metric_d(b, a, net),
                      narrow_metric_d(b, c, net), narrow_metric_d(a, c, net),
                      narrow_metric_d(a, a, net));
    }

    const double tol = 1e-9;
    const bool pass = wgaps.symmetry <= tol && wgaps.identity <= tol && wgaps.triangle <= tol &&
                      ngaps.symmetry <= tol && ngaps.identity <= tol && ngaps.triangle <= tol;

    if (emit.json) {
        std::ostringstream js;
        js.precision(17);
        js << "{\n  \"triples\": " << cfg.triples << ",\n  \"wasserstein\": {\"symmetry\": "
           << wgaps.symmetry << ", \"identity\": " << wgaps.identity
           << ", \"triangle\": " << wgaps.triangle << "},\n  \"narrow\": {\"symmetry\": "
           << ngaps.symmetry << ", \"identity\": " << ngaps.identity
           << ", \"triangle\": " << ngaps.triangle << "},\n  \"pass\": "
           << (pass ? "true" : "false") << "\n}\n";
        write_artifact(cfg.out, "metrics.json", js.str());
    }
    if (emit.csv) {
        std::ostringstream cs;
        cs.precision(17);
        cs << "metric,symmetry,identity,triangle\n";
        cs << "wasserstein," << wgaps.symmetry << "," << wgaps.identity << "," << wgaps.triangle
           << "\n";
        cs << "narrow," << ngaps.symmetry << "," << ngaps.identity << "," << ngaps.triangle
           << "\n";
        write_artifact(cfg.out, "metrics.csv", cs.str());
    }
    if (!pass) throw ValidationError("metric axioms violated beyond 1e-9");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Particle simulator and verification harness for controlled "
                 "mean-field systems with a major agent"};
    app.require_subcommand(1);

    RunConfig cfg;

    auto add_common = [&cfg](CLI::App* cmd, bool with_scenario) {
        if (with_scenario)
            cmd->add_option("--scenario", cfg.scenario, "input file")->required();
        cmd->add_option("--out", cfg.out, "output directory");
        cmd->add_option("--n", cfg.n, "solver grid resolution")->check(CLI::Range(1, 65536));
        cmd->add_option("--tol", cfg.tol, "fixed-point tolerance")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--seed", cfg.seed, "seed for sampled checks and nets");
        cmd->add_option("--emit", cfg.emit, "comma list of csv,json");
    };

    CLI::App* simulate = app.add_subcommand("simulate", "solve one scenario");
    add_common(simulate, true);
    simulate->add_option("--solver", cfg.solver, "picard or delayed")
        ->check(CLI::IsMember({"picard", "delayed"}));

    CLI::App* stability = app.add_subcommand("stability", "perturbation sweep");
    add_common(stability, true);
    stability->add_option("--perturbation", cfg.perturbation, "perturbation file")->required();
    stability->add_option("--eps", cfg.eps, "perturbation scales")
        ->check(CLI::NonNegativeNumber);

    CLI::App* game = app.add_subcommand("stackelberg", "solve a leader/follower game");
    add_common(game, true);
    game->add_option("--k", cfg.k, "rebuild candidate menus as dirac menus with k slices")
        ->check(CLI::Range(1, 4096));

    CLI::App* metrics = app.add_subcommand("metrics", "metric axiom self-test");
    add_common(metrics, false);
    metrics->add_option("--triples", cfg.triples, "sampled triples per metric")
        ->check(CLI::Range(1, 100000));

    CLI11_PARSE(app, argc, argv);

    try {
        std::filesystem::create_directories(cfg.out);
    } catch (const std::exception& e) {
        std::cerr << "cannot create output directory: " << e.what() << "\n";
        return 2;
    }

    try {
        if (simulate->parsed()) run_simulate(cfg);
        else if (stability->parsed()) run_stability(cfg);
        else if (game->parsed()) run_stackelberg(cfg);
        else run_metrics(cfg);
        return 0;
    } catch (const SolverError& e) {
        write_artifact(cfg.out, "error.json", error_json("solver", e.what(), e.last_residual));
        std::cerr << "solver failure: " << e.what() << "\n";
        return 3;
    } catch (const ValidationError& e) {
        write_artifact(cfg.out, "error.json", error_json("validation", e.what()));
        std::cerr << "validation failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        write_artifact(cfg.out, "error.json", error_json("internal", e.what()));
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}
