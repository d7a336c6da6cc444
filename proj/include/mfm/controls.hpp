#pragma once

#include "mfm/measures.hpp"

namespace mfm {

// Finite action grid; identical shape to the net's MetricGrid (point list plus
// pairwise distances), so control grids plug straight into net domains.
using ControlGrid = MetricGrid;

// Relaxed control on [0, horizon]: a row-stochastic kernel over K uniform time
// slices. Row k is the mixture over grid points active on
// [k*horizon/K, (k+1)*horizon/K).
class RelaxedControl {
public:
    RelaxedControl() = default;
    RelaxedControl(double horizon, ControlGrid grid, Mat kernel);

    double horizon() const { return horizon_; }
    int slices() const { return static_cast<int>(kernel_.rows()); }
    const ControlGrid& grid() const { return grid_; }
    const Mat& kernel() const { return kernel_; }

    // Slice index containing time t; slices are left-closed.
    int slice_of(double t) const;
    // Convex mixture (1-s)*this + s*other of the kernels; grids and horizons
    // must agree.
    RelaxedControl mixed_with(const RelaxedControl& other, double s) const;

    // View as a measure on [0, horizon] x grid for the narrow metric: one atom
    // per (slice midpoint, grid point) with mass slice_width * kernel weight.
    EmpiricalMeasure as_domain_measure() const;

private:
    double horizon_ = 1.0;
    ControlGrid grid_;
    Mat kernel_;  // slices x grid size, rows sum to 1
};

// Control concentrated on one grid point per slice.
RelaxedControl dirac_control(const ControlGrid& grid, const std::vector<int>& index_path,
                             int slices, double horizon);
// Convenience: the same grid point on every slice.
RelaxedControl dirac_control(const ControlGrid& grid, int index, int slices, double horizon);

// ∫_{[0,t_end] x U} phi(tau, u) dxi: left-Riemann in time (integrand frozen at
// each slice's left endpoint), exact mixture over the grid, partial last slice
// prorated.
Vec integrate_control(const std::function<Vec(double, const Vec&)>& phi,
                      const RelaxedControl& xi, double t_end);
double integrate_control_scalar(const std::function<double(double, const Vec&)>& phi,
                                const RelaxedControl& xi, double t_end);

// One minor-agent atom: start point, relaxed control, weight.
struct ControlAtom {
    Vec x0;
    RelaxedControl xi;
    double w = 0.0;
};

// Distribution of (start, control) pairs; the alpha in a scenario.
class ControlDistribution {
public:
    ControlDistribution() = default;
    explicit ControlDistribution(std::vector<ControlAtom> atoms);

    int size() const { return static_cast<int>(atoms_.size()); }
    const std::vector<ControlAtom>& atoms() const { return atoms_; }
    const ControlAtom& atom(int i) const { return atoms_[static_cast<std::size_t>(i)]; }

    double total_weight() const;
    int state_dim() const;
    // Marginal of the start points.
    EmpiricalMeasure x0_marginal() const;

private:
    std::vector<ControlAtom> atoms_;
};

struct CompatibilityReport {
    bool pass = false;
    double gap = 0.0;  // W_1 between the x0 marginal and m0
};

// Checks that the start-point marginal of alpha reproduces m0 (W_1 <= 1e-9).
CompatibilityReport validate_compatibility(const ControlDistribution& alpha,
                                           const EmpiricalMeasure& m0);

// Narrow pseudometric between two relaxed controls over a shared grid, using
// the supplied net (whose domain must be [0, horizon] x grid).
double control_metric(const RelaxedControl& xi, const RelaxedControl& xi2,
                      const LipschitzNet& net);

struct AlphaDistanceResult {
    double distance = 0.0;
    TransportPlan plan;
};

// Wasserstein-p between control distributions with ground metric
// ||x0 - x0'|| + control_metric(xi, xi'). Exact transport at these sizes.
AlphaDistanceResult alpha_distance(const ControlDistribution& alpha,
                                   const ControlDistribution& alpha2, double p,
                                   const LipschitzNet& net);

// Net domain matching a control's [0, horizon] x grid support.
NetDomain control_net_domain(const ControlGrid& grid, double horizon);

}  // namespace mfm
