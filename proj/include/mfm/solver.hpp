#pragma once

#include "mfm/controls.hpp"
#include "mfm/dynamics.hpp"
#include "mfm/measures.hpp"

#include <string>
#include <vector>

namespace mfm {

// Everything one simulation needs: dynamics, initial data, action grids, the
// minor-agent control distribution, and the major control.
struct Scenario {
    std::string name;
    DynamicsSpec dynamics;
    EmpiricalMeasure m0;
    Vec y0;
    ControlGrid U;
    ControlGrid V;
    ControlDistribution alpha;
    RelaxedControl zeta;
    double T = 1.0;
    double p = 1.0;
};

// Structural checks: dimensions line up, control grids match the scenario
// grids, horizons equal T, and alpha's start marginal reproduces m0.
void validate_scenario(const Scenario& sc);

// A solved flow: the major curve, the weighted family of minor curves, and
// the measure path it induces. iterations/residual are fixed-point
// bookkeeping; the one-pass scheme leaves them zero.
struct Motion {
    std::vector<double> time_grid;
    Curve y;
    TrajectoryBundle chi;
    std::vector<EmpiricalMeasure> m_path;  // chi pushed forward at each node
    int iterations = 0;
    double residual = 0.0;

    EmpiricalMeasure measure_at(double t) const { return chi.at_time(t); }
};

// Sorted union of an n-cell uniform grid on [0, T] with every control slice
// boundary in the scenario. Cells never straddle a slice, so per-cell control
// mixtures are exact.
std::vector<double> make_solve_grid(const Scenario& sc, int n);

// Explicit Euler for one minor curve against frozen field data; mfs[j] and
// ys[j] hold the measure functionals and major state at grid[j]. Returns the
// curve values on the grid.
std::vector<Vec> minor_trajectory(const DynamicsSpec& dyn, const Vec& x0, const RelaxedControl& xi,
                               const RelaxedControl& zeta, const std::vector<double>& grid,
                               const std::vector<MeasureFunctionals>& mfs,
                               const std::vector<Vec>& ys);

// Explicit Euler for the major curve against a frozen measure path.
std::vector<Vec> major_trajectory(const DynamicsSpec& dyn, const Vec& y0, const RelaxedControl& zeta,
                          const std::vector<double>& grid,
                          const std::vector<MeasureFunctionals>& mfs);

// One-pass scheme: every state argument on a cell is read a fixed lag T/N in
// the past (initial data extended to negative times), which makes the update
// explicit without any fixed-point iteration. Quadrature cells are at most
// T/(2N) wide.
Motion delayed_euler_solve(const Scenario& sc, int N);

struct PicardOptions {
    int grid_size = 256;
    double tol = 1e-8;
    int max_iter = 200;
};

// Fixed point of the frozen-field trajectory maps. Each sweep recomputes all
// minor curves and the major curve against the previous iterate; the residual
// is the index-coupling transport bound plus the major-curve gap, taken over
// grid nodes. Damping halves once if the residual ever rises. Throws
// SolverError (carrying the last residual) when max_iter sweeps do not reach
// tol. A warm start seeds the iterate from a previous motion.
Motion picard_solve(const Scenario& sc, const PicardOptions& opts = PicardOptions(),
                    const Motion* warm = nullptr);

// sup over comparison nodes of W_p(m_a(t), m_b(t)) + ||y_a(t) - y_b(t)||,
// with the transport distance computed exactly.
double motion_deviation(const Motion& a, const Motion& b, double p, int comparison_nodes = 65);

}  // namespace mfm
