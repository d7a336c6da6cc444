// Writes the bundled fixture corpus: benchmark scenarios, perturbation pairs
// for the key-estimate checks, sweep channel files, and the leader/follower
// game fixtures. Output is deterministic, so the committed files can be
// regenerated and diffed.

#include "mfm/scenario_io.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <vector>

using namespace mfm;

namespace {

Vec vec1(double x) {
    Vec v(1);
    v << x;
    return v;
}

Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

MetricGrid grid1(std::initializer_list<double> xs) {
    std::vector<Vec> pts;
    for (double x : xs) pts.push_back(vec1(x));
    return MetricGrid::euclidean(std::move(pts));
}

Expression ex(const std::string& text, Block block) { return Expression::parse(text, block); }

// dx = x dt against a frozen major state that decays to zero; population and
// major agent never talk to each other.
Scenario decoupled_linear() {
    Scenario sc;
    sc.name = "decoupled_linear";
    sc.dynamics.d = 1;
    sc.dynamics.d_prime = 1;
    sc.dynamics.f_I.push_back(ex("x0", Block::FI));
    sc.dynamics.f_II.push_back(ex("0", Block::FII));
    sc.dynamics.g.push_back(ex("0 - y0", Block::G));
    sc.dynamics.A = 2.0;
    sc.dynamics.lipschitz_table = {{512.0, 1.0, 0.0, 1.0}};
    sc.m0 = EmpiricalMeasure(1, {{vec1(0.5), 1.0 / 3}, {vec1(1.0), 1.0 / 3}, {vec1(1.5), 1.0 / 3}});
    sc.y0 = vec1(1.0);
    sc.U = grid1({0.0});
    sc.V = grid1({0.0});
    std::vector<ControlAtom> atoms;
    for (const Atom& a : sc.m0.atoms()) atoms.push_back({a.x, dirac_control(sc.U, 0, 4, 1.0), a.w});
    sc.alpha = ControlDistribution(std::move(atoms));
    sc.zeta = dirac_control(sc.V, 0, 4, 1.0);
    sc.T = 1.0;
    sc.p = 1.0;
    return sc;
}

// Population herds toward its own mean while steering with its own controls;
// the major agent chases the mean and its control leaks in through f_II.
Scenario mean_field_pull() {
    Scenario sc;
    sc.name = "mean_field_pull";
    sc.dynamics.d = 1;
    sc.dynamics.d_prime = 1;
    sc.dynamics.f_I.push_back(ex("mean(0) - x0 + u0", Block::FI));
    sc.dynamics.f_II.push_back(ex("0.5 * v0", Block::FII));
    sc.dynamics.g.push_back(ex("mean(0) - y0 + 0.5 * v0", Block::G));
    sc.dynamics.A = 2.0;
    sc.dynamics.lipschitz_table = {{512.0, 1.0, 0.0, 1.0}};
    std::vector<Atom> m0_atoms;
    const double xs[] = {-1.0, -0.75, -0.5, -0.25, 0.25, 0.5, 0.75, 1.0};
    for (double x : xs) m0_atoms.push_back({vec1(x), 0.125});
    sc.m0 = EmpiricalMeasure(1, std::move(m0_atoms));
    sc.y0 = vec1(0.5);
    sc.U = grid1({-0.5, 0.5});
    sc.V = grid1({0.0, 1.0});
    std::vector<ControlAtom> atoms;
    for (const Atom& a : sc.m0.atoms())
        atoms.push_back({a.x, dirac_control(sc.U, a.x[0] < 0.0 ? 0 : 1, 4, 1.0), a.w});
    sc.alpha = ControlDistribution(std::move(atoms));
    Mat zk(4, 2);
    for (int r = 0; r < 4; ++r) {
        zk(r, 0) = 0.75;
        zk(r, 1) = 0.25;
    }
    sc.zeta = RelaxedControl(1.0, sc.V, zk);
    sc.T = 1.0;
    sc.p = 1.0;
    return sc;
}

// Two-dimensional: minors relax toward the major state, the major state
// rotates and feels the population mean. Exercises p = 2.
Scenario major_coupled() {
    Scenario sc;
    sc.name = "major_coupled";
    sc.dynamics.d = 2;
    sc.dynamics.d_prime = 2;
    sc.dynamics.f_I.push_back(ex("y0 - x0", Block::FI));
    sc.dynamics.f_I.push_back(ex("y1 - x1", Block::FI));
    sc.dynamics.f_II.push_back(ex("0.25 * v0", Block::FII));
    sc.dynamics.f_II.push_back(ex("0.25 * v1", Block::FII));
    sc.dynamics.g.push_back(ex("0.25 * mean(0) - y1", Block::G));
    sc.dynamics.g.push_back(ex("0.25 * mean(1) + y0", Block::G));
    sc.dynamics.A = 2.0;
    sc.dynamics.lipschitz_table = {{512.0, 1.0, 0.0, 1.0}};
    std::vector<Atom> m0_atoms;
    for (int k = 0; k < 12; ++k) {
        const double th = 2.0 * 3.14159265358979323846 * k / 12.0;
        m0_atoms.push_back({vec2(std::cos(th), std::sin(th)), 1.0 / 12});
    }
    sc.m0 = EmpiricalMeasure(2, std::move(m0_atoms));
    sc.y0 = vec2(1.0, 0.0);
    sc.U = MetricGrid::euclidean({vec2(0.0, 0.0)});
    sc.V = MetricGrid::euclidean({vec2(0.0, 0.0), vec2(0.5, 0.5)});
    std::vector<ControlAtom> atoms;
    for (const Atom& a : sc.m0.atoms()) atoms.push_back({a.x, dirac_control(sc.U, 0, 4, 1.0), a.w});
    sc.alpha = ControlDistribution(std::move(atoms));
    Mat zk(4, 2);
    zk.setConstant(0.5);
    sc.zeta = RelaxedControl(1.0, sc.V, zk);
    sc.T = 1.0;
    sc.p = 2.0;
    return sc;
}

// Terminal mean tracks the follower's action, the terminal major state the
// leader's. The follower mirrors the leader; the leader's best joint payoff
// is exactly the pair the follower then refuses.
ProblemFile matching_game() {
    ProblemFile file;
    file.name = "stackelberg_2x2";
    file.N = 256;
    Scenario& sc = file.problem.base;
    sc.name = file.name;
    sc.dynamics.d = 1;
    sc.dynamics.d_prime = 1;
    sc.dynamics.f_I.push_back(ex("u0", Block::FI));
    sc.dynamics.f_II.push_back(ex("0", Block::FII));
    sc.dynamics.g.push_back(ex("v0", Block::G));
    sc.dynamics.A = 4.0;
    sc.dynamics.lipschitz_table = {{4096.0, 0.0, 0.0, 0.0}};
    sc.m0 = EmpiricalMeasure(1, {{vec1(0.0), 1.0}});
    sc.y0 = vec1(0.0);
    sc.U = grid1({0.0, 1.0});
    sc.V = grid1({0.0, 1.0});
    file.problem.follower_candidates = dirac_follower_menu(sc.m0, sc.U, 4, 1.0);
    file.problem.leader_candidates = dirac_leader_menu(sc.V, 4, 1.0);
    sc.alpha = file.problem.follower_candidates[0];
    sc.zeta = file.problem.leader_candidates[0];
    sc.T = 1.0;
    sc.p = 1.0;
    file.problem.sigma_F = Expression::parse("(mean(0) - y0) * (mean(0) - y0)", Block::Payoff);
    file.problem.sigma_L = Expression::parse("mean(0) * y0 + (1 - y0) * 0.25", Block::Payoff);
    return file;
}

// 4 follower x 5 leader menu: the follower tracks the major state, the
// leader steers toward y(T) = 0.5 through the follower's reaction.
ProblemFile menu_game() {
    ProblemFile file;
    file.name = "stackelberg_menu";
    file.N = 256;
    Scenario& sc = file.problem.base;
    sc.name = file.name;
    sc.dynamics.d = 1;
    sc.dynamics.d_prime = 1;
    sc.dynamics.f_I.push_back(ex("u0 + mean(0) - x0", Block::FI));
    sc.dynamics.f_II.push_back(ex("0", Block::FII));
    sc.dynamics.g.push_back(ex("v0 - y0", Block::G));
    sc.dynamics.A = 2.0;
    sc.dynamics.lipschitz_table = {{512.0, 1.0, 0.0, 1.0}};
    sc.m0 = EmpiricalMeasure(1, {{vec1(-0.75), 0.25},
                                 {vec1(-0.25), 0.25},
                                 {vec1(0.25), 0.25},
                                 {vec1(0.75), 0.25}});
    sc.y0 = vec1(0.0);
    sc.U = grid1({-1.0, 0.0, 1.0});
    sc.V = grid1({0.0, 0.5, 1.0});
    sc.T = 1.0;
    sc.p = 1.0;

    file.problem.follower_candidates = dirac_follower_menu(sc.m0, sc.U, 4, 1.0);
    Mat blend(4, 3);
    blend.setConstant(1.0 / 3);
    std::vector<ControlAtom> atoms;
    for (const Atom& a : sc.m0.atoms())
        atoms.push_back({a.x, RelaxedControl(1.0, sc.U, blend), a.w});
    file.problem.follower_candidates.push_back(ControlDistribution(std::move(atoms)));

    file.problem.leader_candidates = dirac_leader_menu(sc.V, 4, 1.0);
    Mat low(4, 3), high(4, 3);
    low.setZero();
    high.setZero();
    for (int r = 0; r < 4; ++r) {
        low(r, 0) = 0.5;
        low(r, 1) = 0.5;
        high(r, 1) = 0.5;
        high(r, 2) = 0.5;
    }
    file.problem.leader_candidates.push_back(RelaxedControl(1.0, sc.V, low));
    file.problem.leader_candidates.push_back(RelaxedControl(1.0, sc.V, high));

    sc.alpha = file.problem.follower_candidates[0];
    sc.zeta = file.problem.leader_candidates[0];
    file.problem.sigma_F =
        Expression::parse("0 - (mean(0) - y0) * (mean(0) - y0)", Block::Payoff);
    file.problem.sigma_L = Expression::parse("0 - (y0 - 0.5) * (y0 - 0.5)", Block::Payoff);
    return file;
}

void write_file(const std::filesystem::path& dir, const std::string& name,
                const std::string& content) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) {
        std::cerr << "cannot write " << (dir / name).string() << "\n";
        std::exit(1);
    }
    out << content;
    std::cout << "wrote " << (dir / name).string() << "\n";
}

void write_scenario(const std::filesystem::path& dir, const std::string& name, Scenario sc,
                    int N = 256) {
    sc.name = name;
    validate_loaded_scenario(sc);
    write_file(dir, name + ".json", scenario_json(ScenarioFile{name, std::move(sc), N}));
}

}  // namespace

int main(int argc, char** argv) {
    const std::filesystem::path dir = argc > 1 ? argv[1] : "scenarios";
    std::filesystem::create_directories(dir);

    const Scenario lin = decoupled_linear();
    const Scenario pull = mean_field_pull();
    const Scenario rot = major_coupled();

    write_scenario(dir, "decoupled_linear", lin);
    write_scenario(dir, "mean_field_pull", pull);
    write_scenario(dir, "major_coupled", rot);

    // key-estimate pairs: (a, b) scenario files, b offset from a along one channel
    write_scenario(dir, "pair_identical_a", lin);
    write_scenario(dir, "pair_identical_b", lin);

    {
        Perturbation pert;
        pert.df_I.push_back(ex("0.5", Block::FI));
        write_scenario(dir, "pair_field_a", lin);
        write_scenario(dir, "pair_field_b", apply_perturbation(lin, pert, 1.0));
    }
    {
        Perturbation pert;
        pert.dy0_shift = vec1(0.25);
        write_scenario(dir, "pair_y0_a", lin);
        write_scenario(dir, "pair_y0_b", apply_perturbation(lin, pert, 1.0));
    }
    {
        Perturbation pert;
        pert.zeta_target = dirac_control(pull.V, 1, 4, 1.0);
        write_scenario(dir, "pair_zeta_a", pull);
        write_scenario(dir, "pair_zeta_b", apply_perturbation(pull, pert, 0.5));
    }
    {
        Perturbation pert;
        pert.dm0_shift = vec1(0.2);
        write_scenario(dir, "pair_m0_a", pull);
        write_scenario(dir, "pair_m0_b", apply_perturbation(pull, pert, 1.0));
    }

    // one perturbation file per channel, all against mean_field_pull
    {
        Perturbation pert;
        pert.df_I.push_back(ex("0.5 * sin(t)", Block::FI));
        write_file(dir, "channel_f.json", perturbation_json(pert));
    }
    {
        Perturbation pert;
        pert.dg.push_back(ex("0.25 * cos(t)", Block::G));
        write_file(dir, "channel_g.json", perturbation_json(pert));
    }
    {
        Perturbation pert;
        pert.dm0_shift = vec1(0.5);
        write_file(dir, "channel_m0.json", perturbation_json(pert));
    }
    {
        Perturbation pert;
        pert.dy0_shift = vec1(0.5);
        write_file(dir, "channel_y0.json", perturbation_json(pert));
    }
    {
        // Uniform-blend targets: every coupling of the base diracs against
        // these pays a control cost, so the hat term cannot vanish by a
        // cross-atom pairing.
        Perturbation pert;
        Mat uniform(4, 2);
        uniform.setConstant(0.5);
        std::vector<ControlAtom> atoms;
        for (const Atom& a : pull.m0.atoms())
            atoms.push_back({a.x, RelaxedControl(1.0, pull.U, uniform), a.w});
        pert.alpha_target = ControlDistribution(std::move(atoms));
        write_file(dir, "channel_alpha.json", perturbation_json(pert));
    }
    {
        Perturbation pert;
        pert.zeta_target = dirac_control(pull.V, 1, 4, 1.0);
        write_file(dir, "channel_zeta.json", perturbation_json(pert));
    }

    {
        ProblemFile game = matching_game();
        validate_loaded_scenario(game.problem.base);
        validate_problem(game.problem);
        write_file(dir, "stackelberg_2x2.json", problem_json(game));
    }
    {
        ProblemFile game = menu_game();
        validate_loaded_scenario(game.problem.base);
        validate_problem(game.problem);
        write_file(dir, "stackelberg_menu.json", problem_json(game));
    }
    return 0;
}
