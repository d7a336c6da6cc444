#include "doctest.h"

#include "mfm/scenario_io.hpp"

#include "scenario_fixtures.hpp"
#include "test_support.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

using namespace mfm;

namespace {

const char* kTinyScenario = R"({
  "name": "tiny",
  "dynamics": {
    "d": 1, "d_prime": 1,
    "f_I": ["x0"], "f_II": ["0"], "g": ["0 - y0"],
    "A": 2.0,
    "lipschitz_table": [{"c": 512.0, "B_I": 1.0, "B_II": 0.0, "B_prime": 1.0}]
  },
  "m0": {"dim": 1, "atoms": [{"x": [1.0], "w": 1.0}]},
  "y0": [1.0],
  "grids": {"U": [[0.0]], "V": [[0.0]]},
  "alpha": {"atoms": [{"x0": [1.0], "xi": {"K": 2, "grid": [[0.0]], "kernel": [[1.0], [1.0]]}, "w": 1.0}]},
  "zeta": {"K": 2, "grid": [[0.0]], "kernel": [[1.0], [1.0]]},
  "T": 1.0,
  "p": 1.0,
  "N": 64
})";

std::string with_replacement(std::string text, const std::string& from, const std::string& to) {
    const std::size_t at = text.find(from);
    REQUIRE(at != std::string::npos);
    return text.replace(at, from.size(), to);
}

std::filesystem::path write_temp(const char* stem, const std::string& text) {
    auto path = std::filesystem::temp_directory_path() / stem;
    std::ofstream out(path, std::ios::binary);
    out << text;
    out.close();
    return path;
}

}  // namespace

TEST_CASE("scenario files round-trip bit for bit") {
    Scenario sc = fixtures::mean_reverting();
    ScenarioFile file{sc.name, sc, 128};
    const std::string text = scenario_json(file);

    ScenarioFile back = parse_scenario(text);
    CHECK(back.name == sc.name);
    CHECK(back.N == 128);
    CHECK(back.scenario.T == sc.T);
    CHECK(back.scenario.p == sc.p);
    CHECK(back.scenario.dynamics.d == sc.dynamics.d);
    CHECK(back.scenario.dynamics.A == sc.dynamics.A);
    CHECK(back.scenario.dynamics.f_I[0].same_tree(sc.dynamics.f_I[0]));
    CHECK(back.scenario.dynamics.g[0].same_tree(sc.dynamics.g[0]));
    REQUIRE(back.scenario.m0.size() == sc.m0.size());
    for (int i = 0; i < sc.m0.size(); ++i) {
        CHECK(back.scenario.m0.atom(i).x == sc.m0.atom(i).x);
        CHECK(back.scenario.m0.atom(i).w == sc.m0.atom(i).w);
    }
    CHECK(back.scenario.y0 == sc.y0);
    CHECK(back.scenario.zeta.kernel() == sc.zeta.kernel());
    REQUIRE(back.scenario.alpha.size() == sc.alpha.size());
    CHECK(back.scenario.alpha.atom(0).xi.kernel() == sc.alpha.atom(0).xi.kernel());

    CHECK(scenario_json(back) == text);
}

TEST_CASE("loading validates structure, marginals, and declared constants") {
    const std::string good(kTinyScenario);
    auto path = write_temp("mfm_io_good.json", good);
    ScenarioFile file = load_scenario(path.string());
    CHECK(file.name == "tiny");
    CHECK(file.scenario.alpha.size() == 1);
    std::filesystem::remove(path);

    // start marginal off by one unit of mass position
    const std::string drifted = with_replacement(good, "\"x0\": [1.0]", "\"x0\": [5.0]");
    bool threw = false;
    try {
        validate_loaded_scenario(parse_scenario(drifted).scenario);
    } catch (const ValidationError& e) {
        threw = true;
        CHECK(std::string(e.what()).find("W_1 gap") != std::string::npos);
    }
    CHECK(threw);

    // sublinear growth constant declared too small for f_I = x0
    const std::string weak = with_replacement(good, "\"A\": 2.0", "\"A\": 0.01");
    threw = false;
    try {
        validate_loaded_scenario(parse_scenario(weak).scenario);
    } catch (const ValidationError& e) {
        threw = true;
        CHECK(std::string(e.what()).find("fail sampling") != std::string::npos);
    }
    CHECK(threw);

    // table stops below the envelope ceiling
    const std::string short_table = with_replacement(good, "\"c\": 512.0", "\"c\": 1.0");
    CHECK_THROWS_AS(validate_loaded_scenario(parse_scenario(short_table).scenario),
                    ValidationError);
}

TEST_CASE("parse errors name the JSON pointer") {
    const std::string good(kTinyScenario);

    bool threw = false;
    try {
        parse_scenario(with_replacement(good, "\"y0\"", "\"y0_gone\""));
    } catch (const ValidationError& e) {
        threw = true;
        CHECK(std::string(e.what()).find("missing key: /y0") != std::string::npos);
    }
    CHECK(threw);

    threw = false;
    try {
        parse_scenario(with_replacement(good, "\"T\": 1.0", "\"T\": \"one\""));
    } catch (const ValidationError& e) {
        threw = true;
        CHECK(std::string(e.what()).find("/T") != std::string::npos);
    }
    CHECK(threw);

    threw = false;
    try {
        parse_scenario(with_replacement(
            good, "\"zeta\": {\"K\": 2, \"grid\": [[0.0]], \"kernel\": [[1.0], [1.0]]}",
            "\"zeta\": 3"));
    } catch (const ValidationError& e) {
        threw = true;
        CHECK(std::string(e.what()).find("expected an object at /zeta") != std::string::npos);
    }
    CHECK(threw);

    CHECK_THROWS_AS(parse_scenario(with_replacement(good, "\"N\": 64", "\"N\": 0")),
                    ValidationError);
    CHECK_THROWS_AS(parse_scenario("{ not json"), ValidationError);

    threw = false;
    try {
        parse_scenario(with_replacement(
            good, "\"zeta\": {\"K\": 2, \"grid\": [[0.0]], \"kernel\": [[1.0], [1.0]]}",
            "\"zeta\": {\"K\": 2, \"grid\": [[0.0]], \"kernel\": [[1.0]]}"));
    } catch (const ValidationError& e) {
        threw = true;
        CHECK(std::string(e.what()).find("kernel must have K rows at /zeta/kernel") !=
              std::string::npos);
    }
    CHECK(threw);
}

TEST_CASE("game files round-trip and auto-generate missing menus") {
    std::string text(kTinyScenario);
    text = with_replacement(text, "\"N\": 64",
                            "\"N\": 64,\n  \"sigma_L\": \"y0\",\n  \"sigma_F\": \"mean(0)\"");
    CHECK(is_problem_text(text));
    CHECK(!is_problem_text(kTinyScenario));

    ProblemFile file = parse_problem(text);
    CHECK(file.problem.sigma_L.refs().max_y == 0);
    REQUIRE(file.problem.leader_candidates.size() == 1);   // one V point
    REQUIRE(file.problem.follower_candidates.size() == 1); // one U point
    CHECK(file.problem.leader_candidates[0].slices() == 2);
    CHECK(file.problem.tie_tol == 1e-9);

    const std::string emitted = problem_json(file);
    ProblemFile back = parse_problem(emitted);
    CHECK(problem_json(back) == emitted);
    CHECK(back.problem.follower_candidates.size() == 1);

    bool threw = false;
    try {
        parse_problem(with_replacement(text, "\"sigma_L\": \"y0\"", "\"sigma_L\": \"y1\""));
    } catch (const ValidationError& e) {
        threw = true;
        CHECK(std::string(e.what()).find("/sigma_L") != std::string::npos);
    }
    CHECK(threw);
}

TEST_CASE("perturbation files round-trip against their base") {
    Scenario base = fixtures::control_driven();
    Perturbation pert;
    pert.df_I.push_back(fixtures::ex("sin(t)", Block::FI));
    pert.dy0_shift = testsup::vec1(0.25);
    pert.zeta_target = dirac_control(base.V, 1, base.zeta.slices(), base.T);

    const std::string text = perturbation_json(pert);
    Perturbation back = parse_perturbation(text, base);
    REQUIRE(back.df_I.size() == 1);
    CHECK(back.df_I[0].same_tree(pert.df_I[0]));
    CHECK(back.df_II.empty());
    CHECK(back.dy0_shift == pert.dy0_shift);
    REQUIRE(back.zeta_target.has_value());
    CHECK(back.zeta_target->kernel() == pert.zeta_target->kernel());
    CHECK(!back.alpha_target.has_value());
    CHECK(perturbation_json(back) == text);
}

TEST_CASE("motion artifacts carry the full solved flow") {
    Scenario sc = fixtures::linear_decoupled();
    Motion mo = picard_solve(sc);

    const std::string csv = motion_csv(mo, sc.p);
    CHECK(csv.rfind("t,y_0,sigma_p\n", 0) == 0);
    CHECK(csv.find("\n0,1,1\n") != std::string::npos);  // y0 = 1, sigma_p(m0) = 1
    std::size_t lines = 0;
    for (char ch : csv)
        if (ch == '\n') ++lines;
    CHECK(lines == mo.time_grid.size() + 1);

    const std::string text = motion_json(mo, sc.p);
    Motion back = parse_motion(text);
    CHECK(back.time_grid == mo.time_grid);
    CHECK(back.iterations == mo.iterations);
    CHECK(back.residual == mo.residual);
    REQUIRE(back.chi.size() == mo.chi.size());
    CHECK(back.y.values.back() == mo.y.values.back());
    CHECK(back.chi.curve(0).back() == mo.chi.curve(0).back());
    CHECK(back.chi.weight(0) == mo.chi.weight(0));
    CHECK(motion_json(back, sc.p) == text);
}

TEST_CASE("key-estimate reports round-trip") {
    Scenario base = fixtures::linear_decoupled();
    Perturbation pert;
    pert.dy0_shift = testsup::vec1(0.5);
    KeyEstimateReport rep = sweep_report(base, pert, 0.5, {});

    const std::string text = report_json(rep, 0.5);
    KeyEstimateReport back = parse_report(text);
    CHECK(back.times == rep.times);
    CHECK(back.lhs == rep.lhs);
    CHECK(back.rhs == rep.rhs);
    CHECK(back.tilde_a == rep.tilde_a);
    CHECK(back.C0 == rep.C0);
    CHECK(back.L_star == rep.L_star);
    CHECK(back.max_violation == rep.max_violation);
    CHECK(back.pass == rep.pass);
    CHECK(report_json(back, 0.5) == text);
}

TEST_CASE("solution and payoff artifacts round-trip") {
    GameSolution sol;
    sol.zeta_star = 0;
    sol.alpha_star = 1;
    sol.leader_value = 0.25;
    sol.follower_value = 1.0;
    sol.best_response_table.push_back({{1}, 1.0, 0.25});
    sol.best_response_table.push_back({{0}, 1.0, 0.0});
    sol.payoffs.follower = Mat::Zero(2, 2);
    sol.payoffs.leader = Mat::Zero(2, 2);
    sol.payoffs.leader(1, 1) = 1.0;

    const std::string text = solution_json(sol);
    GameSolution back = parse_solution(text);
    CHECK(back.zeta_star == 0);
    CHECK(back.alpha_star == 1);
    CHECK(back.leader_value == 0.25);
    REQUIRE(back.best_response_table.size() == 2);
    CHECK(back.best_response_table[0].alphas == std::vector<int>{1});
    CHECK(solution_json(back) == text);

    const std::string csv = payoff_csv(sol.payoffs);
    CHECK(csv.rfind("alpha,zeta,follower,leader\n", 0) == 0);
    CHECK(csv.find("\n1,1,0,1\n") != std::string::npos);

    CHECK_THROWS_AS(parse_solution(with_replacement(text, "\"zeta_star\": 0", "\"zeta_star\": 9")),
                    ValidationError);
}

TEST_CASE("error reports round-trip through their own schema") {
    const std::string text = error_json("solver", "no contraction", 0.125);
    ErrorInfo info = parse_error(text);
    CHECK(info.type == "solver");
    CHECK(info.message == "no contraction");
    REQUIRE(info.residual.has_value());
    CHECK(*info.residual == 0.125);

    ErrorInfo plain = parse_error(error_json("validation", "bad file"));
    CHECK(plain.type == "validation");
    CHECK(!plain.residual.has_value());

    CHECK_THROWS_AS(parse_error(error_json("oops", "x")), ValidationError);
}
