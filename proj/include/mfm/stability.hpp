#pragma once

#include "mfm/solver.hpp"
#include "mfm/transport.hpp"

#include <optional>

namespace mfm {

// Pathwise comparison of two motions. The forcing terms measure how far the
// second scenario's controls sit from the first, tested along the FIRST
// motion only:
//
//   tilde_a[k]:  norm of the cumulative (zeta - zeta') integral of
//                psi(tau, v) = g(tau, y(tau), m(tau), v)
//   bar_a[k]:    norm of the same defect pushed through the coupled minor
//                field, eta(tau, v) = sum_i w_i f_II(tau, x_i(tau), m(tau),
//                y(tau), v)
//   hat_a_integral[k]: plan-weighted minor-control defect; for a coupled atom
//                pair (i, j) the integrand phi(tau, u) = f_I(tau, x_i(tau),
//                m(tau), y(tau), u) is integrated against xi_i and against
//                xi'_j, and the norm of the difference is averaged over the
//                plan masses.
//
// All cumulative integrals are left-Riemann over the evaluation grid, the
// same convention integrate_control uses.
struct KeyEstimateReport {
    std::vector<double> times;
    std::vector<double> lhs;  // W_p(m(t), m'(t)) + ||y(t) - y'(t)||
    std::vector<double> tilde_a;
    std::vector<double> bar_a;
    std::vector<double> hat_a_integral;
    double dist_f = 0.0;
    double dist_g = 0.0;
    double L_star = 0.0;
    double C0 = 0.0, C1 = 0.0, C2 = 0.0, C3 = 0.0, C4 = 0.0;
    std::vector<double> rhs;     // filled by key_estimate_bound
    double max_violation = 0.0;  // worst lhs - rhs over the grid, >= 0
    bool pass = false;
};

// Computes times, lhs and the three forcing terms. The motions must live on
// one common time grid; internally the grid is refined with every control
// slice boundary of both scenarios so no quadrature cell straddles a kernel
// switch. The plan couples the atoms of sc.alpha (rows) with sc_prime.alpha
// (columns) and must carry their weights as marginals.
KeyEstimateReport key_estimate_terms(const Motion& motion, const Motion& motion_prime,
                                     const Scenario& sc, const Scenario& sc_prime,
                                     const TransportPlan& plan);

// Fills dist_f, dist_g, L_star, C0..C4 and rhs, then checks
//   lhs(t) <= C0 (W_p(m0, m0') + ||y0 - y0'||) + C1 (dist_f + dist_g)
//           + C2 sup_{s<=t} hat_a_integral + C3 sup_{s<=t} tilde_a
//           + C4 sup_{s<=t} bar_a
// at every node. c is the Lipschitz ceiling: it must dominate the growth
// envelope of the primed initial data, and both lipschitz_tables must cover
// it. With L* the covering Lipschitz sum, K = e^{L*T} and E = e^{(L*K+L*)T},
// the constants are C0 = K E, C1 = T K E, C2 = K E, C3 = E, C4 = K E.
KeyEstimateReport key_estimate_bound(KeyEstimateReport report, const Scenario& sc,
                                     const Scenario& sc_prime, double c,
                                     const SamplerConfig& cfg = {});

// Which a-priori envelope to test a motion against: the lagged scheme's
// (doubled start moment) or the limit motion's.
enum class EnvelopeKind { Scheme, Limit };

struct EnvelopeReport {
    bool pass = false;
    double min_slack = 0.0;  // envelope minus observed, worst case
    double worst_time = 0.0;
    int worst_curve = -1;  // -1 when the worst case is the (y, sigma_p) check
};

// Evaluates the declared-growth envelope at every node of the motion, both
// for ||y(t)|| + sigma_p(m(t)) and for every bundle curve. Passes iff every
// slack is >= -1e-9.
EnvelopeReport check_growth_envelopes(const Motion& motion, const Scenario& sc,
                                      EnvelopeKind kind);

// One perturbation direction, applied with weight eps:
//   - field deltas are added coordinatewise (empty vector = untouched),
//   - dm0_shift translates m0 and every alpha start point together, so the
//     start-point marginal stays compatible,
//   - dy0_shift translates y0,
//   - control targets are kernel-mixed into the base with weight eps; an
//     alpha target needs the same atom count and blends start points and
//     weights linearly (keep start points fixed unless dm0_shift compensates).
struct Perturbation {
    std::vector<Expression> df_I;
    std::vector<Expression> df_II;
    std::vector<Expression> dg;
    Vec dm0_shift;
    Vec dy0_shift;
    std::optional<RelaxedControl> zeta_target;
    std::optional<ControlDistribution> alpha_target;
};

// Scenario at distance eps along the perturbation; validates the result.
Scenario apply_perturbation(const Scenario& base, const Perturbation& pert, double eps);

struct SweepRow {
    double eps = 0.0;
    double D = 0.0;  // sup over the grid of W_p(m, m_eps) + ||y - y_eps||
    double dist_f = 0.0;
    double dist_g = 0.0;
    double tilde_a_sup = 0.0;
    double bar_a_sup = 0.0;
    double hat_a_int_sup = 0.0;
    bool pass = false;  // comparison bound at this eps
};

struct SweepTable {
    std::vector<SweepRow> rows;  // input scale order
    bool d_monotone = false;     // D nonincreasing across halving steps
    bool d_zero_ok = false;      // every eps == 0 row came out with D == 0
    double c_used = 0.0;         // Lipschitz ceiling the bounds were checked at
};

struct SweepOptions {
    PicardOptions picard;
    SamplerConfig sampler;
    // Lipschitz ceiling for the bound; unset picks the largest growth
    // envelope across the base and all perturbed initial data.
    std::optional<double> c;
    // Net used to find the optimal atom coupling when alpha is perturbed.
    int net_levels = 3;
    int net_per_level = 32;
    std::uint64_t net_seed = 97;
};

// Solves the base motion once and the perturbed motion per scale, in
// parallel across scales. Solver failures carry the failing scale in the
// message. Rows keep the input order; the D(0) = 0 and halving-monotonicity
// checks land in the table flags.
SweepTable stability_sweep(const Scenario& base, const Perturbation& pert,
                           const std::vector<double>& scales,
                           const SweepOptions& opts = {});

// Full per-node report for one scale, computed exactly as the sweep computes
// its rows (same solver, plan choice, and ceiling recipe). Pass opts.c =
// table.c_used to reproduce a sweep row's bound verbatim.
KeyEstimateReport sweep_report(const Scenario& base, const Perturbation& pert, double eps,
                               const SweepOptions& opts = {});

// CSV with header eps,D,dist_f,dist_g,tilde_a_sup,bar_a_sup,hat_a_int_sup,pass.
std::string sweep_csv(const SweepTable& table);

}  // namespace mfm
