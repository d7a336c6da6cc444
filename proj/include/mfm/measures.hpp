#pragma once

#include "mfm/common.hpp"
#include "mfm/transport.hpp"

#include <cmath>
#include <cstdint>

namespace mfm {

struct Atom {
    Vec x;
    double w = 0.0;
};

// Finitely supported measure on R^d. Weights are nonnegative; probability
// measures carry total mass 1 within 1e-12.
class EmpiricalMeasure {
public:
    EmpiricalMeasure() = default;
    EmpiricalMeasure(int dim, std::vector<Atom> atoms);

    int dim() const { return dim_; }
    int size() const { return static_cast<int>(atoms_.size()); }
    const std::vector<Atom>& atoms() const { return atoms_; }
    const Atom& atom(int i) const { return atoms_[static_cast<std::size_t>(i)]; }

    double total_mass() const;
    bool is_probability(double tol = 1e-12) const;
    void require_probability(const char* who) const;

    Vec weights() const;

    // Applies h to every atom position, keeping weights.
    EmpiricalMeasure map(const std::function<Vec(const Vec&)>& h) const;

    // Collapses atoms closer than tol (used when testing measure equality).
    EmpiricalMeasure merged(double tol = 1e-12) const;

private:
    int dim_ = 0;
    std::vector<Atom> atoms_;
};

// p-th moment (∫ ||x||^p dm)^(1/p) about the origin. Requires a probability
// measure and p >= 1.
double sigma_p_moment(const EmpiricalMeasure& m, double p);

struct WassersteinResult {
    double distance = 0.0;
    TransportPlan plan;
    bool exact = true;
    double duality_gap = 0.0;
};

// Wasserstein-p distance with Euclidean ground cost ||x - x'||^p. Exact
// min-cost flow at or below opts.exact_threshold atoms per side, entropic
// above it.
WassersteinResult wasserstein_p(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                double p, const TransportOptions& opts = {});

EmpiricalMeasure push_forward(const EmpiricalMeasure& m,
                              const std::function<Vec(const Vec&)>& h);

// ---- Lipschitz net and the narrow pseudometric ----

// Finite metric space: point list plus a pairwise distance table. The default
// table is Euclidean.
struct MetricGrid {
    std::vector<Vec> points;
    Mat dist;

    static MetricGrid euclidean(std::vector<Vec> pts);
    int size() const { return static_cast<int>(points.size()); }
    int point_dim() const { return points.empty() ? 0 : static_cast<int>(points[0].size()); }
};

// Compact product [t_min, t_max] x grid with the sum metric
// d((t,i),(t',j)) = |t - t'| + grid.dist(i,j).
struct NetDomain {
    double t_min = 0.0;
    double t_max = 1.0;
    MetricGrid grid;

    double metric(double t1, int i1, double t2, int i2) const {
        return std::abs(t1 - t2) + grid.dist(i1, i2);
    }
    // Maps an encoded atom [t, u...] to (t, grid index). Throws if the u part
    // does not land on a grid point or t leaves the interval.
    std::pair<double, int> locate(const Vec& w) const;
};

// One test function of the net: w -> clamp(min_j (b_j + level * d(w, z_j)), -1, 1).
// A minimum of level-Lipschitz cones clipped to [-1, 1], so it is
// level-Lipschitz and bounded by 1 by construction.
struct NetFunction {
    int level = 1;
    struct Anchor {
        double t = 0.0;
        int grid_index = 0;
        double b = 0.0;
    };
    std::vector<Anchor> anchors;

    double eval(const NetDomain& dom, double t, int grid_index) const;
};

struct LipschitzNet {
    NetDomain domain;
    int levels = 0;
    int per_level = 0;
    std::uint64_t seed = 0;
    // funcs[l-1] holds the functions at Lipschitz level l.
    std::vector<std::vector<NetFunction>> funcs;
};

// Seeded pseudo-random family of clipped cone minima, per_level functions at
// each Lipschitz level 1..levels. Deterministic in (domain, levels,
// per_level, seed).
LipschitzNet build_lipschitz_net(const NetDomain& domain, int levels, int per_level,
                                 std::uint64_t seed);

// Truncated narrow pseudometric
//   | |mu| - |nu| | + sum_l 2^{-l} max_j | ∫ f_lj dmu - ∫ f_lj dnu |
// over measures encoded on the net's domain (atoms are [t, u...] vectors).
double narrow_metric_d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                       const LipschitzNet& net);

// Per-measure integrals ∫ f_lj dm, flattened level-major. Two signatures
// combine into narrow_metric_d without revisiting the atoms.
std::vector<double> net_signature(const EmpiricalMeasure& m, const LipschitzNet& net);
double narrow_metric_from_signatures(double mass_a, const std::vector<double>& sig_a,
                                     double mass_b, const std::vector<double>& sig_b,
                                     const LipschitzNet& net);

// inf-convolution with the cone l*d: values of w -> min_z (phi(z) + l*d(w,z))
// on a finite metric grid. The result is l-Lipschitz, bounded by max|phi|, and
// below phi pointwise.
std::vector<double> lipschitz_approx(const std::vector<double>& phi, const MetricGrid& grid,
                                     double l);

// ---- Curves and trajectory bundles ----

// Piecewise-linear curve on a strictly increasing time grid.
struct Curve {
    std::vector<double> times;
    std::vector<Vec> values;

    Vec at(double t) const;
    int dim() const { return values.empty() ? 0 : static_cast<int>(values[0].size()); }
};

// Weighted family of curves sharing one time grid; the measure on path space
// behind a motion. Evaluation at t pushes the family through e_t.
class TrajectoryBundle {
public:
    TrajectoryBundle() = default;
    TrajectoryBundle(std::vector<double> time_grid, int dim);

    void add_curve(std::vector<Vec> values, double weight);

    const std::vector<double>& time_grid() const { return times_; }
    int dim() const { return dim_; }
    int size() const { return static_cast<int>(curves_.size()); }
    const std::vector<Vec>& curve(int i) const { return curves_[static_cast<std::size_t>(i)].values; }
    double weight(int i) const { return curves_[static_cast<std::size_t>(i)].weight; }

    Vec value_at(int i, double t) const;
    // e_t push-forward; t must lie inside the grid span.
    EmpiricalMeasure at_time(double t) const;

private:
    struct Entry {
        std::vector<Vec> values;
        double weight;
    };
    std::vector<double> times_;
    std::vector<Entry> curves_;
    int dim_ = 0;

    std::pair<int, double> bracket(double t) const;
};

}  // namespace mfm
