#pragma once

#include "mfm/common.hpp"

namespace mfm {

// One coupling entry: mass moved from source atom i to target atom j.
struct PlanEntry {
    int i = 0;
    int j = 0;
    double mass = 0.0;
};

struct TransportPlan {
    std::vector<PlanEntry> pairs;
    double cost = 0.0;

    Vec row_marginals(int n) const;
    Vec col_marginals(int m) const;
};

struct TransportOptions {
    // At or below this atom count per side the exact min-cost-flow solver runs.
    // Above it the entropic path takes over.
    int exact_threshold = 512;
    // Entropic path anneals epsilon and then extracts an exact flow on the
    // near-tight arcs; the certified duality gap (plan cost minus an
    // unregularized dual feasible value) must come in below this.
    double duality_gap_tol = 1e-4;
    // Sweep budget per annealing stage.
    int sinkhorn_max_sweeps = 400;
};

struct TransportResult {
    double cost = 0.0;
    TransportPlan plan;
    bool exact = true;
    // 0 for the exact path; certified primal-dual gap for the entropic path.
    double duality_gap = 0.0;
};

// Minimizes <cost, P> over couplings with marginals a and b. Both weight
// vectors must be nonnegative and have equal totals (tolerance 1e-9).
// Plan marginals of the result match a and b within 1e-9.
TransportResult optimal_transport_plan(const Mat& cost, const Vec& a, const Vec& b,
                                       const TransportOptions& opts = {});

}  // namespace mfm
