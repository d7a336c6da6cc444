#pragma once

// Small hand-checked scenarios with closed-form flows, shared by the solver,
// stability, and acceptance tests.

#include "mfm/solver.hpp"

#include "test_support.hpp"

namespace fixtures {

inline mfm::ControlGrid grid1(std::initializer_list<double> pts) {
    std::vector<mfm::Vec> points;
    for (double p : pts) points.push_back(testsup::vec1(p));
    return mfm::MetricGrid::euclidean(points);
}

inline mfm::Expression ex(const std::string& s, mfm::Block b) {
    return mfm::Expression::parse(s, b);
}

// dx = x dt, dy = -y dt, single minor curve from 1: x(t) = e^t, y(t) = e^-t.
inline mfm::Scenario linear_decoupled() {
    mfm::Scenario sc;
    sc.name = "linear_decoupled";
    sc.dynamics.d = 1;
    sc.dynamics.d_prime = 1;
    sc.dynamics.f_I.push_back(ex("x0", mfm::Block::FI));
    sc.dynamics.f_II.push_back(ex("0", mfm::Block::FII));
    sc.dynamics.g.push_back(ex("0 - y0", mfm::Block::G));
    sc.dynamics.A = 2.0;
    sc.dynamics.lipschitz_table = {{512.0, 1.0, 0.0, 1.0}};
    sc.m0 = testsup::dirac(testsup::vec1(1.0));
    sc.y0 = testsup::vec1(1.0);
    sc.U = grid1({0.0});
    sc.V = grid1({0.0});
    sc.alpha = mfm::ControlDistribution(
        {mfm::ControlAtom{testsup::vec1(1.0), mfm::dirac_control(sc.U, 0, 4, 1.0), 1.0}});
    sc.zeta = mfm::dirac_control(sc.V, 0, 4, 1.0);
    sc.T = 1.0;
    sc.p = 1.0;
    return sc;
}

// dx_i = (mean - x_i) dt from starts {0, 2}, dy = mean dt. The mean stays 1,
// so x_i(t) = 1 + (x_i(0) - 1) e^-t and y(t) = t.
inline mfm::Scenario mean_reverting() {
    mfm::Scenario sc;
    sc.name = "mean_reverting";
    sc.dynamics.d = 1;
    sc.dynamics.d_prime = 1;
    sc.dynamics.f_I.push_back(ex("mean(0) - x0", mfm::Block::FI));
    sc.dynamics.f_II.push_back(ex("0", mfm::Block::FII));
    sc.dynamics.g.push_back(ex("mean(0)", mfm::Block::G));
    sc.dynamics.A = 2.0;
    sc.dynamics.lipschitz_table = {{512.0, 2.0, 0.0, 1.0}};
    sc.m0 = mfm::EmpiricalMeasure(
        1, {mfm::Atom{testsup::vec1(0.0), 0.5}, mfm::Atom{testsup::vec1(2.0), 0.5}});
    sc.y0 = testsup::vec1(0.0);
    sc.U = grid1({0.0});
    sc.V = grid1({0.0});
    sc.alpha = mfm::ControlDistribution(
        {mfm::ControlAtom{testsup::vec1(0.0), mfm::dirac_control(sc.U, 0, 4, 1.0), 0.5},
         mfm::ControlAtom{testsup::vec1(2.0), mfm::dirac_control(sc.U, 0, 4, 1.0), 0.5}});
    sc.zeta = mfm::dirac_control(sc.V, 0, 4, 1.0);
    sc.T = 1.0;
    sc.p = 1.0;
    return sc;
}

// Slower coupling through the mean only: dx_i = (mean/2 - x_i) dt,
// dy = (mean - y) dt. Used where several fixed-point sweeps are wanted.
inline mfm::Scenario mean_driven() {
    mfm::Scenario sc = mean_reverting();
    sc.name = "mean_driven";
    sc.dynamics.f_I[0] = ex("mean(0)/2 - x0", mfm::Block::FI);
    sc.dynamics.g[0] = ex("mean(0) - y0", mfm::Block::G);
    return sc;
}

// Pure control drift: dx = (u + v) dt with u fixed at 2 and v averaging 1,
// dy = v dt. All flows are linear in t.
inline mfm::Scenario control_driven() {
    mfm::Scenario sc;
    sc.name = "control_driven";
    sc.dynamics.d = 1;
    sc.dynamics.d_prime = 1;
    sc.dynamics.f_I.push_back(ex("u0", mfm::Block::FI));
    sc.dynamics.f_II.push_back(ex("v0", mfm::Block::FII));
    sc.dynamics.g.push_back(ex("v0", mfm::Block::G));
    sc.dynamics.A = 4.0;
    sc.dynamics.lipschitz_table = {{4096.0, 0.0, 0.0, 0.0}};
    sc.m0 = testsup::dirac(testsup::vec1(0.0));
    sc.y0 = testsup::vec1(0.0);
    sc.U = grid1({2.0});
    sc.V = grid1({0.0, 2.0});
    sc.alpha = mfm::ControlDistribution(
        {mfm::ControlAtom{testsup::vec1(0.0), mfm::dirac_control(sc.U, 0, 4, 1.0), 1.0}});
    mfm::Mat kernel(4, 2);
    kernel.setConstant(0.5);
    sc.zeta = mfm::RelaxedControl(1.0, sc.V, kernel);
    sc.T = 1.0;
    sc.p = 1.0;
    return sc;
}

}  // namespace fixtures
