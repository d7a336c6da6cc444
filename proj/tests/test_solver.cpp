#include "doctest.h"

#include "mfm/solver.hpp"

#include "scenario_fixtures.hpp"
#include "test_support.hpp"

#include <algorithm>
#include <cmath>

using namespace mfm;

namespace {

std::vector<MeasureFunctionals> constant_functionals(const Scenario& sc,
                                                     const std::vector<double>& grid) {
    return std::vector<MeasureFunctionals>(grid.size(), measure_functionals(sc.m0, sc.p));
}

}  // namespace

TEST_CASE("make_solve_grid merges uniform nodes with slice boundaries") {
    Scenario sc = fixtures::linear_decoupled();
    sc.zeta = dirac_control(sc.V, 0, 3, 1.0);  // boundaries at 1/3, 2/3
    std::vector<double> grid = make_solve_grid(sc, 8);

    CHECK(grid.front() == 0.0);
    CHECK(grid.back() == 1.0);
    for (std::size_t j = 1; j < grid.size(); ++j) {
        CHECK(grid[j] > grid[j - 1]);
        CHECK(grid[j] - grid[j - 1] <= 1.0 / 8 + 1e-15);
    }
    for (double b : {1.0 / 3, 2.0 / 3, 1.0 / 4, 1.0 / 8, 3.0 / 4}) {
        CHECK(std::find(grid.begin(), grid.end(), b) != grid.end());
    }
}

TEST_CASE("minor_trajectory reproduces the Euler product for dx = x dt") {
    Scenario sc = fixtures::linear_decoupled();
    std::vector<double> grid = make_solve_grid(sc, 512);
    REQUIRE(grid.size() == 513);  // slice boundaries already sit on the uniform grid
    auto mfs = constant_functionals(sc, grid);
    std::vector<Vec> ys(grid.size(), sc.y0);

    std::vector<Vec> path = minor_trajectory(sc.dynamics, testsup::vec1(1.0),
                                          sc.alpha.atom(0).xi, sc.zeta, grid, mfs, ys);
    double expect = std::pow(1.0 + 1.0 / 512, 512);
    CHECK(path.back()(0) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(std::abs(path.back()(0) - std::exp(1.0)) < 5e-3);
}

TEST_CASE("major_trajectory reproduces the Euler product for dy = -y dt") {
    Scenario sc = fixtures::linear_decoupled();
    std::vector<double> grid = make_solve_grid(sc, 512);
    auto mfs = constant_functionals(sc, grid);

    std::vector<Vec> path = major_trajectory(sc.dynamics, sc.y0, sc.zeta, grid, mfs);
    double expect = std::pow(1.0 - 1.0 / 512, 512);
    CHECK(path.back()(0) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(std::abs(path.back()(0) - std::exp(-1.0)) < 5e-3);
}

TEST_CASE("constant control drift integrates exactly") {
    Scenario sc = fixtures::control_driven();

    Motion scheme = delayed_euler_solve(sc, 16);
    CHECK(scheme.chi.value_at(0, 1.0)(0) == doctest::Approx(3.0).epsilon(1e-13));
    CHECK(scheme.y.at(1.0)(0) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(scheme.chi.value_at(0, 0.5)(0) == doctest::Approx(1.5).epsilon(1e-13));

    PicardOptions opts;
    opts.grid_size = 64;
    opts.tol = 1e-12;
    Motion fixed = picard_solve(sc, opts);
    CHECK(fixed.chi.value_at(0, 1.0)(0) == doctest::Approx(3.0).epsilon(1e-13));
    CHECK(fixed.y.at(1.0)(0) == doctest::Approx(1.0).epsilon(1e-13));
    // State-independent drift: the first sweep is already the fixed point.
    CHECK(fixed.iterations <= 2);
}

TEST_CASE("picard_solve: zero dynamics converge in one sweep with zero residual") {
    Scenario sc = fixtures::linear_decoupled();
    sc.dynamics.f_I[0] = Expression::parse("0", Block::FI);
    sc.dynamics.g[0] = Expression::parse("0", Block::G);

    Motion mo = picard_solve(sc);
    CHECK(mo.iterations == 1);
    CHECK(mo.residual == 0.0);
    CHECK(mo.chi.value_at(0, 0.7)(0) == 1.0);
    CHECK(mo.y.at(0.7)(0) == 1.0);
}

TEST_CASE("picard_solve: mean-reverting crowd keeps its mean and hits closed forms") {
    Scenario sc = fixtures::mean_reverting();
    PicardOptions opts;
    opts.grid_size = 256;
    opts.tol = 1e-10;
    Motion mo = picard_solve(sc, opts);

    // The cold start already carries the invariant mean, so the second sweep
    // only confirms the first.
    CHECK(mo.iterations == 2);
    CHECK(mo.residual <= 1e-12);

    double q = std::pow(1.0 - 1.0 / 256, 256);  // Euler factor for e^-1
    CHECK(mo.chi.value_at(0, 1.0)(0) == doctest::Approx(1.0 - q).epsilon(1e-12));
    CHECK(mo.chi.value_at(1, 1.0)(0) == doctest::Approx(1.0 + q).epsilon(1e-12));
    CHECK(mo.y.at(1.0)(0) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(std::abs(mo.chi.value_at(0, 1.0)(0) - (1.0 - std::exp(-1.0))) < 2e-3);

    // Measure path coherence: nodes reproduce the bundle pushforward.
    REQUIRE(mo.m_path.size() == mo.time_grid.size());
    std::size_t mid = mo.m_path.size() / 2;
    CHECK(mo.m_path[mid].size() == 2);
    CHECK(mo.m_path[mid].atom(0).x(0) ==
          mo.chi.value_at(0, mo.time_grid[mid])(0));
}

TEST_CASE("delayed_euler_solve stays within O(1/N) of the closed forms") {
    Scenario sc = fixtures::linear_decoupled();
    Motion mo = delayed_euler_solve(sc, 512);
    CHECK(std::abs(mo.chi.value_at(0, 1.0)(0) - std::exp(1.0)) < 1e-2);
    CHECK(std::abs(mo.y.at(1.0)(0) - std::exp(-1.0)) < 1e-2);
}

TEST_CASE("scheme and fixed point agree on the coupled fixture") {
    Scenario sc = fixtures::mean_reverting();
    Motion scheme = delayed_euler_solve(sc, 512);
    PicardOptions opts;
    opts.grid_size = 512;
    opts.tol = 1e-10;
    Motion fixed = picard_solve(sc, opts);
    CHECK(motion_deviation(scheme, fixed, sc.p) < 1e-2);
}

TEST_CASE("scheme deviation shrinks as the lag count grows") {
    Scenario sc = fixtures::mean_driven();
    PicardOptions opts;
    opts.grid_size = 512;
    opts.tol = 1e-10;
    Motion ref = picard_solve(sc, opts);

    double d8 = motion_deviation(delayed_euler_solve(sc, 8), ref, sc.p);
    double d32 = motion_deviation(delayed_euler_solve(sc, 32), ref, sc.p);
    double d128 = motion_deviation(delayed_euler_solve(sc, 128), ref, sc.p);
    CHECK(d8 > d32);
    CHECK(d32 > d128);
    CHECK(d128 < 0.5 * d8);
}

TEST_CASE("warm start converges in one sweep and lands within tolerance") {
    Scenario sc = fixtures::mean_driven();
    PicardOptions opts;
    opts.grid_size = 256;
    opts.tol = 1e-9;
    Motion cold = picard_solve(sc, opts);
    CHECK(cold.iterations >= 3);

    Motion warm = picard_solve(sc, opts, &cold);
    CHECK(warm.iterations == 1);
    CHECK(motion_deviation(cold, warm, sc.p) <= 2.0 * opts.tol);
}

TEST_CASE("picard_solve reports the residual when it cannot converge") {
    Scenario sc = fixtures::mean_driven();
    PicardOptions opts;
    opts.grid_size = 64;
    opts.tol = 1e-12;
    opts.max_iter = 1;
    try {
        picard_solve(sc, opts);
        FAIL("expected SolverError");
    } catch (const SolverError& err) {
        CHECK(err.last_residual > 0.0);
    }
}

TEST_CASE("motion_deviation adds the transport and major gaps") {
    std::vector<double> grid = {0.0, 1.0};
    Motion a;
    a.time_grid = grid;
    a.chi = TrajectoryBundle(grid, 1);
    a.chi.add_curve({testsup::vec1(0.0), testsup::vec1(0.0)}, 1.0);
    a.y.times = grid;
    a.y.values = {testsup::vec1(0.0), testsup::vec1(0.0)};

    Motion b;
    b.time_grid = grid;
    b.chi = TrajectoryBundle(grid, 1);
    b.chi.add_curve({testsup::vec1(1.5), testsup::vec1(1.5)}, 1.0);
    b.y.times = grid;
    b.y.values = {testsup::vec1(2.0), testsup::vec1(2.0)};

    CHECK(motion_deviation(a, a, 1.0) == 0.0);
    CHECK(motion_deviation(a, b, 1.0) == 3.5);
}

TEST_CASE("validate_scenario rejects structural mismatches") {
    CHECK_NOTHROW(validate_scenario(fixtures::mean_reverting()));

    Scenario bad_h = fixtures::linear_decoupled();
    bad_h.zeta = dirac_control(bad_h.V, 0, 4, 0.5);
    CHECK_THROWS_AS(validate_scenario(bad_h), ValidationError);

    Scenario bad_grid = fixtures::linear_decoupled();
    bad_grid.U = fixtures::grid1({0.0, 1.0});
    CHECK_THROWS_AS(validate_scenario(bad_grid), ValidationError);

    Scenario bad_m0 = fixtures::linear_decoupled();
    bad_m0.m0 = testsup::dirac(testsup::vec1(0.0));
    CHECK_THROWS_AS(validate_scenario(bad_m0), ValidationError);

    Scenario bad_v = fixtures::control_driven();
    bad_v.dynamics.g[0] = Expression::parse("v1", Block::G);
    CHECK_THROWS_AS(validate_scenario(bad_v), ValidationError);
}
