#include "doctest.h"

#include "mfm/stackelberg.hpp"

#include "scenario_fixtures.hpp"
#include "test_support.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

using namespace mfm;

namespace {

// mean(T) tracks the follower's u, y(T) tracks the leader's v: dx = u dt,
// dy = v dt from zero starts over unit grids {0, 1}.
StackelbergProblem matching_game() {
    StackelbergProblem p;
    Scenario& sc = p.base;
    sc.name = "matching_game";
    sc.dynamics.d = 1;
    sc.dynamics.d_prime = 1;
    sc.dynamics.f_I.push_back(fixtures::ex("u0", Block::FI));
    sc.dynamics.f_II.push_back(fixtures::ex("0", Block::FII));
    sc.dynamics.g.push_back(fixtures::ex("v0", Block::G));
    sc.dynamics.A = 4.0;
    sc.dynamics.lipschitz_table = {{4096.0, 0.0, 0.0, 0.0}};
    sc.m0 = testsup::dirac(testsup::vec1(0.0));
    sc.y0 = testsup::vec1(0.0);
    sc.U = fixtures::grid1({0.0, 1.0});
    sc.V = fixtures::grid1({0.0, 1.0});
    sc.T = 1.0;
    sc.p = 1.0;

    p.follower_candidates = dirac_follower_menu(sc.m0, sc.U, 4, sc.T);
    p.leader_candidates = dirac_leader_menu(sc.V, 4, sc.T);
    sc.alpha = p.follower_candidates[0];
    sc.zeta = p.leader_candidates[0];

    // Follower coordinates with the leader; the leader's best joint payoff
    // (mean = y = 1) is exactly the pair an anti-coordinating follower kills.
    p.sigma_F = Expression::parse("(mean(0) - y0) * (mean(0) - y0)", Block::Payoff);
    p.sigma_L = Expression::parse("mean(0) * y0 + (1 - y0) * 0.25", Block::Payoff);
    return p;
}

}  // namespace

TEST_CASE("terminal payoffs read the solved endpoint") {
    StackelbergProblem p;
    Scenario& sc = p.base;
    sc.name = "frozen_population";
    sc.dynamics.d = 1;
    sc.dynamics.d_prime = 1;
    sc.dynamics.f_I.push_back(fixtures::ex("0", Block::FI));
    sc.dynamics.f_II.push_back(fixtures::ex("0", Block::FII));
    sc.dynamics.g.push_back(fixtures::ex("v0", Block::G));
    sc.dynamics.A = 2.0;
    sc.dynamics.lipschitz_table = {{512.0, 0.0, 0.0, 0.0}};
    sc.m0 = EmpiricalMeasure(
        1, {Atom{testsup::vec1(0.0), 0.5}, Atom{testsup::vec1(2.0), 0.5}});
    sc.y0 = testsup::vec1(0.5);
    sc.U = fixtures::grid1({0.0});
    sc.V = fixtures::grid1({0.0, 1.0});
    sc.T = 1.0;
    sc.p = 1.0;
    p.follower_candidates = dirac_follower_menu(sc.m0, sc.U, 4, sc.T);
    p.leader_candidates = {dirac_control(sc.V, 1, 4, sc.T)};
    sc.alpha = p.follower_candidates[0];
    sc.zeta = p.leader_candidates[0];
    p.sigma_L = Expression::parse("y0", Block::Payoff);
    p.sigma_F = Expression::parse("mean(0)", Block::Payoff);

    validate_problem(p);
    PayoffPair pay = evaluate_payoffs(p, 0, 0);
    CHECK(pay.leader == 1.5);   // y(T) = y0 + T under v = 1
    CHECK(pay.follower == 1.0); // the population never moves
}

TEST_CASE("payoff evaluation matches an independent lagged-scheme recomputation") {
    Scenario sc = fixtures::mean_driven();
    StackelbergProblem p;
    p.base = sc;
    p.follower_candidates = {sc.alpha};
    p.leader_candidates = {sc.zeta};
    p.sigma_L = Expression::parse("y0", Block::Payoff);
    p.sigma_F = Expression::parse("mean(0) + sigma_p", Block::Payoff);

    PayoffPair pay = evaluate_payoffs(p, 0, 0);

    Motion scheme = delayed_euler_solve(sc, 512);
    MeasureFunctionals mf = measure_functionals(scheme.measure_at(sc.T), sc.p);
    const double leader_ref = scheme.y.at(sc.T)[0];
    const double follower_ref = mf.mean[0] + mf.sigma_p;
    CHECK(std::abs(pay.leader - leader_ref) < 1e-3);
    CHECK(std::abs(pay.follower - follower_ref) < 1e-3);
}

TEST_CASE("best response picks the distinct maximum") {
    StackelbergProblem p = matching_game();
    Scenario& sc = p.base;
    sc.U = fixtures::grid1({1.0, 2.0, 0.5});
    p.follower_candidates = dirac_follower_menu(sc.m0, sc.U, 4, sc.T);
    sc.alpha = p.follower_candidates[0];
    p.sigma_F = Expression::parse("mean(0)", Block::Payoff);

    std::vector<int> best = best_response_set(p, 0);
    REQUIRE(best.size() == 1);
    CHECK(best[0] == 1);
}

TEST_CASE("best response keeps payoff ties") {
    StackelbergProblem p = matching_game();
    Scenario& sc = p.base;
    sc.U = fixtures::grid1({0.0, 2.0});
    Mat half(4, 2);
    half.setConstant(0.5);
    // Mixing half/half and alternating the atoms both integrate u to 1.
    ControlDistribution blend({ControlAtom{testsup::vec1(0.0),
                                           RelaxedControl(1.0, sc.U, half), 1.0}});
    ControlDistribution alternate({ControlAtom{
        testsup::vec1(0.0), dirac_control(sc.U, std::vector<int>{0, 1, 0, 1}, 4, 1.0), 1.0}});
    p.follower_candidates = {blend, alternate};
    sc.alpha = blend;
    p.sigma_F = Expression::parse("mean(0)", Block::Payoff);

    std::vector<int> best = best_response_set(p, 0);
    CHECK(best == std::vector<int>{0, 1});
}

TEST_CASE("one-by-one menus solve to the only pair") {
    StackelbergProblem p = matching_game();
    p.follower_candidates.resize(1);
    p.leader_candidates.resize(1);
    GameSolution sol = solve_stackelberg(p);
    CHECK(sol.zeta_star == 0);
    CHECK(sol.alpha_star == 0);
    CHECK(sol.best_response_table.size() == 1);
    CHECK(sol.leader_value == 0.25);  // mean = y = 0: 0 + 0.25
}

TEST_CASE("anti-coordinating follower forces the commitment-optimal leader choice") {
    StackelbergProblem p = matching_game();
    GameSolution sol = solve_stackelberg(p);

    // Frozen payoff matrix: follower (a-z)^2, leader a*z + (1-z)/4.
    CHECK(sol.payoffs.follower(0, 0) == 0.0);
    CHECK(sol.payoffs.follower(1, 0) == 1.0);
    CHECK(sol.payoffs.follower(0, 1) == 1.0);
    CHECK(sol.payoffs.follower(1, 1) == 0.0);
    CHECK(sol.payoffs.leader(0, 0) == 0.25);
    CHECK(sol.payoffs.leader(1, 0) == 0.25);
    CHECK(sol.payoffs.leader(0, 1) == 0.0);
    CHECK(sol.payoffs.leader(1, 1) == 1.0);

    // The naive joint optimum sits at (a=1, z=1) with value 1, but the
    // follower answers z=1 with a=0; committing to z=0 is worth 0.25.
    CHECK(sol.payoffs.leader.maxCoeff() == 1.0);
    CHECK(sol.zeta_star == 0);
    CHECK(sol.alpha_star == 1);
    CHECK(sol.leader_value == 0.25);
    CHECK(sol.follower_value == 1.0);

    REQUIRE(sol.best_response_table.size() == 2);
    CHECK(sol.best_response_table[0].alphas == std::vector<int>{1});
    CHECK(sol.best_response_table[1].alphas == std::vector<int>{0});
    CHECK(sol.best_response_table[0].leader_value == 0.25);
    CHECK(sol.best_response_table[1].leader_value == 0.0);
}

TEST_CASE("solver agrees with a brute-force enumeration oracle") {
    StackelbergProblem p = matching_game();
    GameSolution sol = solve_stackelberg(p);

    const int na = static_cast<int>(p.follower_candidates.size());
    const int nz = static_cast<int>(p.leader_candidates.size());
    Mat F(na, nz), L(na, nz);
    for (int a = 0; a < na; ++a)
        for (int z = 0; z < nz; ++z) {
            PayoffPair pay = evaluate_payoffs(p, a, z);
            F(a, z) = pay.follower;
            L(a, z) = pay.leader;
        }

    // Walk every pair; keep those where the follower cannot improve, then
    // maximize the leader payoff, lowest indices first.
    int oz = -1, oa = -1;
    double best = -std::numeric_limits<double>::infinity();
    for (int z = 0; z < nz; ++z) {
        double fbest = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < na; ++a) fbest = std::max(fbest, F(a, z));
        for (int a = 0; a < na; ++a) {
            if (F(a, z) < fbest - p.tie_tol) continue;
            if (L(a, z) > best) {
                best = L(a, z);
                oz = z;
                oa = a;
            }
        }
    }

    CHECK(sol.zeta_star == oz);
    CHECK(sol.alpha_star == oa);
    CHECK(sol.leader_value == best);

    // Both defining properties, checked literally over the menus.
    const auto& star = sol.best_response_table[static_cast<std::size_t>(sol.zeta_star)];
    CHECK(std::find(star.alphas.begin(), star.alphas.end(), sol.alpha_star) != star.alphas.end());
    for (const auto& br : sol.best_response_table)
        CHECK(sol.leader_value >= br.leader_value - p.tie_tol);

    // The full matrix agrees with the per-pair evaluations bit for bit.
    CHECK(sol.payoffs.follower == F);
    CHECK(sol.payoffs.leader == L);
}

TEST_CASE("payoffs respond continuously to kernel mixing toward another candidate") {
    StackelbergProblem p = matching_game();
    RelaxedControl star = p.leader_candidates[0];    // v = 0
    RelaxedControl other = p.leader_candidates[1];   // v = 1
    StackelbergProblem probe = p;
    probe.leader_candidates = {star, star.mixed_with(other, 1.0), star.mixed_with(other, 0.5),
                               star.mixed_with(other, 0.25)};
    probe.base.zeta = star;

    // Follower fixed at u = 1; leader payoff 1*y + 0.25*(1 - y) with y(T) = eps.
    const double at0 = evaluate_payoffs(probe, 1, 0).leader;
    CHECK(at0 == 0.25);
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 1; k < 4; ++k) {
        const double gap = std::abs(evaluate_payoffs(probe, 1, k).leader - at0);
        CHECK(gap < prev);
        prev = gap;
    }
    CHECK(prev == doctest::Approx(0.75 * 0.25).epsilon(1e-12));
}

TEST_CASE("problem validation rejects broken menus and payoffs") {
    StackelbergProblem p = matching_game();

    StackelbergProblem empty = p;
    empty.leader_candidates.clear();
    CHECK_THROWS_AS(validate_problem(empty), ValidationError);

    StackelbergProblem badref = p;
    badref.sigma_L = Expression::parse("y1", Block::Payoff);
    CHECK_THROWS_AS(validate_problem(badref), ValidationError);

    StackelbergProblem mismatched = p;
    mismatched.follower_candidates.push_back(ControlDistribution(
        {ControlAtom{testsup::vec1(5.0), dirac_control(p.base.U, 0, 4, 1.0), 1.0}}));
    bool threw = false;
    try {
        validate_problem(mismatched);
    } catch (const ValidationError& e) {
        threw = true;
        CHECK(std::string(e.what()).find("candidate pair (alpha 2") != std::string::npos);
    }
    CHECK(threw);
}

TEST_CASE("a diverging candidate pair fails with its indices in the message") {
    StackelbergProblem p = matching_game();
    p.base.dynamics.f_I[0] = fixtures::ex("x0*x0*x0", Block::FI);
    p.base.m0 = testsup::dirac(testsup::vec1(2.0));
    p.follower_candidates = dirac_follower_menu(p.base.m0, p.base.U, 4, p.base.T);
    p.base.alpha = p.follower_candidates[0];

    bool threw = false;
    try {
        evaluate_payoffs(p, 0, 0);
    } catch (const std::runtime_error& e) {
        threw = true;
        CHECK(std::string(e.what()).find("payoff pair (alpha 0, zeta 0)") != std::string::npos);
    }
    CHECK(threw);

    CHECK_THROWS_AS(evaluate_payoffs(p, 0, 7), ValidationError);
}
