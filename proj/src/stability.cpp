#include "mfm/stability.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace mfm {

namespace {

// Common grid refined with every kernel-slice boundary of both scenarios, so
// quadrature cells never straddle a control switch.
std::vector<double> evaluation_grid(const std::vector<double>& common, const Scenario& sc,
                                    const Scenario& sc2) {
    std::vector<double> ts = common;
    auto add = [&ts](const RelaxedControl& rc) {
        const int K = rc.slices();
        for (int j = 1; j < K; ++j)
            ts.push_back(rc.horizon() * static_cast<double>(j) / static_cast<double>(K));
    };
    add(sc.zeta);
    add(sc2.zeta);
    for (const auto& a : sc.alpha.atoms()) add(a.xi);
    for (const auto& a : sc2.alpha.atoms()) add(a.xi);
    std::sort(ts.begin(), ts.end());
    const double tol = 1e-12 * std::max(1.0, sc.T);
    std::vector<double> out;
    out.reserve(ts.size());
    for (double t : ts) {
        if (t < -tol || t > sc.T + tol) continue;
        if (out.empty() || t - out.back() > tol) out.push_back(t);
    }
    out.front() = common.front();
    out.back() = common.back();
    return out;
}

void require_common_grid(const Motion& a, const Motion& b, double T) {
    const double tol = 1e-12 * std::max(1.0, T);
    if (a.time_grid.size() != b.time_grid.size())
        throw ValidationError("key estimate: motions live on different grids");
    for (std::size_t i = 0; i < a.time_grid.size(); ++i)
        if (std::abs(a.time_grid[i] - b.time_grid[i]) > tol)
            throw ValidationError("key estimate: motions live on different grids");
}

void require_plan_marginals(const TransportPlan& plan, const ControlDistribution& alpha,
                            const ControlDistribution& alpha2) {
    const int n = alpha.size();
    const int n2 = alpha2.size();
    for (const auto& e : plan.pairs) {
        if (e.i < 0 || e.i >= n || e.j < 0 || e.j >= n2)
            throw ValidationError("key estimate: plan entry outside the atom ranges");
        if (e.mass < -1e-12)
            throw ValidationError("key estimate: plan carries negative mass");
    }
    Vec rm = plan.row_marginals(n);
    Vec cm = plan.col_marginals(n2);
    for (int i = 0; i < n; ++i)
        if (std::abs(rm[i] - alpha.atom(i).w) > 1e-9)
            throw ValidationError("key estimate: plan row marginal does not match alpha");
    for (int j = 0; j < n2; ++j)
        if (std::abs(cm[j] - alpha2.atom(j).w) > 1e-9)
            throw ValidationError("key estimate: plan column marginal does not match alpha'");
}

double running_max(double acc, double x) { return x > acc ? x : acc; }

}  // namespace

KeyEstimateReport key_estimate_terms(const Motion& motion, const Motion& motion_prime,
                                     const Scenario& sc, const Scenario& sc_prime,
                                     const TransportPlan& plan) {
    const DynamicsSpec& dyn = sc.dynamics;
    if (dyn.d != sc_prime.dynamics.d || dyn.d_prime != sc_prime.dynamics.d_prime)
        throw ValidationError("key estimate: scenario dimensions differ");
    if (std::abs(sc.T - sc_prime.T) > 1e-9 * std::max(1.0, sc.T))
        throw ValidationError("key estimate: horizons differ");
    if (sc.p != sc_prime.p)
        throw ValidationError("key estimate: moment orders differ");
    require_common_grid(motion, motion_prime, sc.T);
    require_plan_marginals(plan, sc.alpha, sc_prime.alpha);
    if (motion.chi.size() != sc.alpha.size())
        throw ValidationError("key estimate: bundle curve count does not match alpha");

    const std::vector<double> ts = evaluation_grid(motion.time_grid, sc, sc_prime);
    const std::size_t J = ts.size();
    const int n = sc.alpha.size();

    KeyEstimateReport rep;
    rep.times = ts;
    rep.lhs.assign(J, 0.0);
    rep.tilde_a.assign(J, 0.0);
    rep.bar_a.assign(J, 0.0);
    rep.hat_a_integral.assign(J, 0.0);

    parallel_for(J, [&](std::size_t k) {
        const double t = ts[k];
        const EmpiricalMeasure ma = motion.measure_at(t);
        const EmpiricalMeasure mb = motion_prime.measure_at(t);
        rep.lhs[k] = wasserstein_p(ma, mb, sc.p).distance +
                     (motion.y.at(t) - motion_prime.y.at(t)).norm();
    });

    // States of the unprimed motion at the cell-left nodes.
    std::vector<Vec> ys(J);
    std::vector<MeasureFunctionals> mfs(J);
    std::vector<std::vector<Vec>> xs(J, std::vector<Vec>(static_cast<std::size_t>(n)));
    parallel_for(J, [&](std::size_t k) {
        const double t = ts[k];
        ys[k] = motion.y.at(t);
        mfs[k] = measure_functionals(motion.measure_at(t), sc.p);
        for (int i = 0; i < n; ++i)
            xs[k][static_cast<std::size_t>(i)] = motion.chi.value_at(i, t);
    });

    const ControlGrid& Va = sc.zeta.grid();
    const ControlGrid& Vb = sc_prime.zeta.grid();
    const int nva = Va.size();
    const int nvb = Vb.size();

    Vec tilde_cum = Vec::Zero(dyn.d_prime);
    Vec bar_cum = Vec::Zero(dyn.d);
    std::vector<Vec> own_cum(static_cast<std::size_t>(n), Vec::Zero(dyn.d));
    std::vector<Vec> cross_cum(plan.pairs.size(), Vec::Zero(dyn.d));

    for (std::size_t k = 0; k + 1 < J; ++k) {
        const double t = ts[k];
        const double dt = ts[k + 1] - ts[k];
        const double mid = t + 0.5 * dt;
        const Vec& y = ys[k];
        const MeasureFunctionals& mf = mfs[k];

        const auto row_a = sc.zeta.kernel().row(sc.zeta.slice_of(mid));
        const auto row_b = sc_prime.zeta.kernel().row(sc_prime.zeta.slice_of(mid));

        // Major-control defect: psi(t, v) = g(t, y(t), m(t), v) mixed by each
        // kernel over its own grid, difference accumulated.
        Vec psi_a = Vec::Zero(dyn.d_prime);
        for (int v = 0; v < nva; ++v)
            if (row_a[v] != 0.0) psi_a += row_a[v] * dyn.eval_g(t, y, mf, Va.points[static_cast<std::size_t>(v)]);
        Vec psi_b = Vec::Zero(dyn.d_prime);
        for (int v = 0; v < nvb; ++v)
            if (row_b[v] != 0.0) psi_b += row_b[v] * dyn.eval_g(t, y, mf, Vb.points[static_cast<std::size_t>(v)]);
        tilde_cum += dt * (psi_a - psi_b);

        // Same defect through the coupled minor field: eta(t, v) is the
        // alpha-average of f_II along the unprimed curves.
        Vec eta_a = Vec::Zero(dyn.d);
        for (int v = 0; v < nva; ++v) {
            if (row_a[v] == 0.0) continue;
            const Vec& vp = Va.points[static_cast<std::size_t>(v)];
            Vec eta = Vec::Zero(dyn.d);
            for (int i = 0; i < n; ++i)
                eta += sc.alpha.atom(i).w * dyn.eval_f_II(t, xs[k][static_cast<std::size_t>(i)], mf, y, vp);
            eta_a += row_a[v] * eta;
        }
        Vec eta_b = Vec::Zero(dyn.d);
        for (int v = 0; v < nvb; ++v) {
            if (row_b[v] == 0.0) continue;
            const Vec& vp = Vb.points[static_cast<std::size_t>(v)];
            Vec eta = Vec::Zero(dyn.d);
            for (int i = 0; i < n; ++i)
                eta += sc.alpha.atom(i).w * dyn.eval_f_II(t, xs[k][static_cast<std::size_t>(i)], mf, y, vp);
            eta_b += row_b[v] * eta;
        }
        bar_cum += dt * (eta_a - eta_b);

        // Minor-control defect: per unprimed atom, phi(t, u) mixed by its own
        // kernel and by the coupled primed kernel on that kernel's grid.
        for (int i = 0; i < n; ++i) {
            const ControlAtom& atom = sc.alpha.atom(i);
            const ControlGrid& Ua = atom.xi.grid();
            const auto row = atom.xi.kernel().row(atom.xi.slice_of(mid));
            Vec acc = Vec::Zero(dyn.d);
            for (int u = 0; u < Ua.size(); ++u)
                if (row[u] != 0.0)
                    acc += row[u] * dyn.eval_f_I(t, xs[k][static_cast<std::size_t>(i)], mf, y,
                                                 Ua.points[static_cast<std::size_t>(u)]);
            own_cum[static_cast<std::size_t>(i)] += dt * acc;
        }
        for (std::size_t e = 0; e < plan.pairs.size(); ++e) {
            const PlanEntry& pe = plan.pairs[e];
            const ControlAtom& primed = sc_prime.alpha.atom(pe.j);
            const ControlGrid& Ub = primed.xi.grid();
            const auto row = primed.xi.kernel().row(primed.xi.slice_of(mid));
            Vec acc = Vec::Zero(dyn.d);
            for (int u = 0; u < Ub.size(); ++u)
                if (row[u] != 0.0)
                    acc += row[u] * dyn.eval_f_I(t, xs[k][static_cast<std::size_t>(pe.i)], mf, y,
                                                 Ub.points[static_cast<std::size_t>(u)]);
            cross_cum[e] += dt * acc;
        }

        rep.tilde_a[k + 1] = tilde_cum.norm();
        rep.bar_a[k + 1] = bar_cum.norm();
        double hat = 0.0;
        for (std::size_t e = 0; e < plan.pairs.size(); ++e) {
            const PlanEntry& pe = plan.pairs[e];
            if (pe.mass <= 0.0) continue;
            hat += pe.mass * (own_cum[static_cast<std::size_t>(pe.i)] - cross_cum[e]).norm();
        }
        rep.hat_a_integral[k + 1] = hat;
    }

    return rep;
}

KeyEstimateReport key_estimate_bound(KeyEstimateReport report, const Scenario& sc,
                                     const Scenario& sc_prime, double c,
                                     const SamplerConfig& cfg) {
    const std::size_t J = report.times.size();
    if (J == 0 || report.lhs.size() != J || report.tilde_a.size() != J ||
        report.bar_a.size() != J || report.hat_a_integral.size() != J)
        throw ValidationError("key estimate bound: terms report is incomplete");

    const double T = sc.T;
    const double A = std::max(sc.dynamics.A, sc_prime.dynamics.A);
    const double need =
        growth_envelope_value(sc_prime.y0.norm(), sigma_p_moment(sc_prime.m0, sc_prime.p), A, T);
    if (c < need * (1.0 - 1e-12)) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "key estimate bound: ceiling c = %.6g is below the primed growth envelope "
                      "%.6g; the Lipschitz region does not contain the primed motion",
                      c, need);
        throw ValidationError(buf);
    }

    const LipschitzEntry& ea = sc.dynamics.entry_for(c);
    const LipschitzEntry& eb = sc_prime.dynamics.entry_for(c);
    const double B_minor = std::max(ea.B_I + ea.B_II, eb.B_I + eb.B_II);
    const double B_major = std::max(ea.B_prime, eb.B_prime);
    report.L_star = B_minor + B_major;

    const double K = std::exp(report.L_star * T);
    const double E = std::exp((report.L_star * K + report.L_star) * T);
    if (!std::isfinite(E))
        throw ValidationError("key estimate bound: declared Lipschitz constants overflow the "
                              "Gronwall factor; no finite bound to test");
    report.C0 = K * E;
    report.C1 = T * K * E;
    report.C2 = K * E;
    report.C3 = E;
    report.C4 = K * E;

    SamplerConfig local = cfg;
    local.T = sc.T;
    local.p = sc.p;
    report.dist_f = dist_c(sc.dynamics, sc_prime.dynamics, FieldChannel::Minor, c, sc.U, sc.V, local);
    report.dist_g = dist_c(sc.dynamics, sc_prime.dynamics, FieldChannel::Major, c, sc.U, sc.V, local);

    const double w0 = wasserstein_p(sc.m0, sc_prime.m0, sc.p).distance;
    const double dy0 = (sc.y0 - sc_prime.y0).norm();
    const double base = report.C0 * (w0 + dy0) + report.C1 * (report.dist_f + report.dist_g);

    report.rhs.assign(J, 0.0);
    report.max_violation = 0.0;
    report.pass = true;
    double sup_hat = 0.0, sup_tilde = 0.0, sup_bar = 0.0;
    for (std::size_t k = 0; k < J; ++k) {
        sup_hat = running_max(sup_hat, report.hat_a_integral[k]);
        sup_tilde = running_max(sup_tilde, report.tilde_a[k]);
        sup_bar = running_max(sup_bar, report.bar_a[k]);
        report.rhs[k] =
            base + report.C2 * sup_hat + report.C3 * sup_tilde + report.C4 * sup_bar;
        const double gap = report.lhs[k] - report.rhs[k];
        if (gap > report.max_violation) report.max_violation = gap;
        if (report.lhs[k] > report.rhs[k] + 1e-9 * std::max(1.0, report.rhs[k]))
            report.pass = false;
    }
    return report;
}

EnvelopeReport check_growth_envelopes(const Motion& motion, const Scenario& sc,
                                      EnvelopeKind kind) {
    const double A = sc.dynamics.A;
    const double y0n = sc.y0.norm();
    const double s0 = sigma_p_moment(sc.m0, sc.p);
    const int n = motion.chi.size();

    std::vector<double> x0n(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) x0n[static_cast<std::size_t>(i)] = motion.chi.value_at(i, 0.0).norm();

    EnvelopeReport out;
    out.min_slack = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < motion.time_grid.size(); ++k) {
        const double t = motion.time_grid[k];
        const double e1 = std::exp(A * t);
        const double e2 = std::exp(2.0 * A * t);
        const double field_env =
            (kind == EnvelopeKind::Scheme) ? (t + y0n + 2.0 * s0) * e2 : (t + y0n + s0) * e2;
        const double field_obs =
            motion.y.at(t).norm() + sigma_p_moment(motion.measure_at(t), sc.p);
        double slack = field_env - field_obs;
        if (slack < out.min_slack) {
            out.min_slack = slack;
            out.worst_time = t;
            out.worst_curve = -1;
        }
        for (int i = 0; i < n; ++i) {
            const double x0 = x0n[static_cast<std::size_t>(i)];
            const double env = (kind == EnvelopeKind::Scheme)
                                   ? (x0 + t) * e1 + (t + y0n + 2.0 * s0) * e2
                                   : (x0 + A * t + A * (t + y0n + s0) * e2) * e1;
            slack = env - motion.chi.value_at(i, t).norm();
            if (slack < out.min_slack) {
                out.min_slack = slack;
                out.worst_time = t;
                out.worst_curve = i;
            }
        }
    }
    out.pass = out.min_slack >= -1e-9;
    return out;
}

Scenario apply_perturbation(const Scenario& base, const Perturbation& pert, double eps) {
    Scenario out = base;
    auto bump = [eps](std::vector<Expression>& fields, const std::vector<Expression>& deltas,
                      const char* name) {
        if (deltas.empty()) return;
        if (deltas.size() != fields.size())
            throw ValidationError(std::string("perturbation: ") + name +
                                  " must match the field's coordinate count");
        for (std::size_t k = 0; k < fields.size(); ++k)
            fields[k] = Expression::add_scaled(fields[k], eps, deltas[k]);
    };
    bump(out.dynamics.f_I, pert.df_I, "df_I");
    bump(out.dynamics.f_II, pert.df_II, "df_II");
    bump(out.dynamics.g, pert.dg, "dg");

    if (pert.dm0_shift.size() > 0) {
        if (pert.dm0_shift.size() != base.dynamics.d)
            throw ValidationError("perturbation: dm0_shift dimension mismatch");
        const Vec shift = eps * pert.dm0_shift;
        out.m0 = base.m0.map([&shift](const Vec& x) { return x + shift; });
        std::vector<ControlAtom> atoms = out.alpha.atoms();
        for (auto& a : atoms) a.x0 += shift;
        out.alpha = ControlDistribution(std::move(atoms));
    }
    if (pert.dy0_shift.size() > 0) {
        if (pert.dy0_shift.size() != base.dynamics.d_prime)
            throw ValidationError("perturbation: dy0_shift dimension mismatch");
        out.y0 = base.y0 + eps * pert.dy0_shift;
    }
    if (pert.zeta_target) out.zeta = base.zeta.mixed_with(*pert.zeta_target, eps);
    if (pert.alpha_target) {
        if (pert.alpha_target->size() != out.alpha.size())
            throw ValidationError("perturbation: alpha target must match the atom count");
        std::vector<ControlAtom> atoms = out.alpha.atoms();
        for (int i = 0; i < pert.alpha_target->size(); ++i) {
            const ControlAtom& tgt = pert.alpha_target->atom(i);
            ControlAtom& a = atoms[static_cast<std::size_t>(i)];
            a.x0 = (1.0 - eps) * a.x0 + eps * tgt.x0;
            a.w = (1.0 - eps) * a.w + eps * tgt.w;
            a.xi = a.xi.mixed_with(tgt.xi, eps);
        }
        out.alpha = ControlDistribution(std::move(atoms));
    }
    validate_scenario(out);
    return out;
}

namespace {

TransportPlan diagonal_plan(const ControlDistribution& alpha) {
    TransportPlan plan;
    plan.pairs.reserve(static_cast<std::size_t>(alpha.size()));
    for (int i = 0; i < alpha.size(); ++i) plan.pairs.push_back({i, i, alpha.atom(i).w});
    return plan;
}

}  // namespace

SweepTable stability_sweep(const Scenario& base, const Perturbation& pert,
                           const std::vector<double>& scales, const SweepOptions& opts) {
    validate_scenario(base);
    if (scales.empty()) throw ValidationError("stability sweep: no scales given");

    std::vector<Scenario> cases;
    cases.reserve(scales.size());
    for (double eps : scales) cases.push_back(apply_perturbation(base, pert, eps));

    double c_used;
    if (opts.c) {
        c_used = *opts.c;
    } else {
        double need = growth_envelope_value(base.y0.norm(), sigma_p_moment(base.m0, base.p),
                                        base.dynamics.A, base.T);
        for (const Scenario& sc : cases)
            need = std::max(need, growth_envelope_value(sc.y0.norm(), sigma_p_moment(sc.m0, sc.p),
                                                    sc.dynamics.A, sc.T));
        c_used = need * (1.0 + 1e-9);
    }

    const Motion base_motion = picard_solve(base, opts.picard);

    SweepTable table;
    table.c_used = c_used;
    table.rows.assign(scales.size(), SweepRow{});
    std::vector<std::exception_ptr> errors(scales.size());

    parallel_for(scales.size(), [&](std::size_t idx) {
        try {
            const Scenario& pc = cases[idx];
            const Motion mo = picard_solve(pc, opts.picard);
            TransportPlan plan;
            if (pert.alpha_target) {
                LipschitzNet net = build_lipschitz_net(control_net_domain(base.U, base.T),
                                                       opts.net_levels, opts.net_per_level,
                                                       opts.net_seed);
                plan = alpha_distance(base.alpha, pc.alpha, base.p, net).plan;
            } else {
                plan = diagonal_plan(base.alpha);
            }
            KeyEstimateReport rep = key_estimate_terms(base_motion, mo, base, pc, plan);
            rep = key_estimate_bound(std::move(rep), base, pc, c_used, opts.sampler);

            SweepRow& row = table.rows[idx];
            row.eps = scales[idx];
            row.D = *std::max_element(rep.lhs.begin(), rep.lhs.end());
            row.dist_f = rep.dist_f;
            row.dist_g = rep.dist_g;
            row.tilde_a_sup = *std::max_element(rep.tilde_a.begin(), rep.tilde_a.end());
            row.bar_a_sup = *std::max_element(rep.bar_a.begin(), rep.bar_a.end());
            row.hat_a_int_sup =
                *std::max_element(rep.hat_a_integral.begin(), rep.hat_a_integral.end());
            row.pass = rep.pass;
        } catch (...) {
            errors[idx] = std::current_exception();
        }
    });

    for (std::size_t idx = 0; idx < errors.size(); ++idx) {
        if (!errors[idx]) continue;
        char tag[64];
        std::snprintf(tag, sizeof(tag), "scale %.17g: ", scales[idx]);
        try {
            std::rethrow_exception(errors[idx]);
        } catch (const SolverError& e) {
            throw SolverError(tag + std::string(e.what()), e.last_residual);
        } catch (const ValidationError& e) {
            throw ValidationError(tag + std::string(e.what()));
        }
    }

    table.d_zero_ok = true;
    for (const SweepRow& row : table.rows)
        if (row.eps == 0.0 && row.D != 0.0) table.d_zero_ok = false;

    table.d_monotone = true;
    for (std::size_t k = 0; k + 1 < table.rows.size(); ++k) {
        const double a = table.rows[k].eps;
        const double b = table.rows[k + 1].eps;
        if (std::abs(b - 0.5 * a) > 1e-12 * std::max(1.0, std::abs(a))) continue;
        if (table.rows[k + 1].D > table.rows[k].D * (1.0 + 1e-9) + 1e-15)
            table.d_monotone = false;
    }
    return table;
}

KeyEstimateReport sweep_report(const Scenario& base, const Perturbation& pert, double eps,
                               const SweepOptions& opts) {
    validate_scenario(base);
    const Scenario pc = apply_perturbation(base, pert, eps);

    double c_used;
    if (opts.c) {
        c_used = *opts.c;
    } else {
        double need = growth_envelope_value(base.y0.norm(), sigma_p_moment(base.m0, base.p),
                                        base.dynamics.A, base.T);
        need = std::max(need, growth_envelope_value(pc.y0.norm(), sigma_p_moment(pc.m0, pc.p),
                                                pc.dynamics.A, pc.T));
        c_used = need * (1.0 + 1e-9);
    }

    const Motion base_motion = picard_solve(base, opts.picard);
    const Motion mo = picard_solve(pc, opts.picard);
    TransportPlan plan;
    if (pert.alpha_target) {
        LipschitzNet net = build_lipschitz_net(control_net_domain(base.U, base.T),
                                               opts.net_levels, opts.net_per_level, opts.net_seed);
        plan = alpha_distance(base.alpha, pc.alpha, base.p, net).plan;
    } else {
        plan = diagonal_plan(base.alpha);
    }
    KeyEstimateReport rep = key_estimate_terms(base_motion, mo, base, pc, plan);
    return key_estimate_bound(std::move(rep), base, pc, c_used, opts.sampler);
}

std::string sweep_csv(const SweepTable& table) {
    std::string out = "eps,D,dist_f,dist_g,tilde_a_sup,bar_a_sup,hat_a_int_sup,pass\n";
    char buf[320];
    for (const SweepRow& r : table.rows) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", r.eps,
                      r.D, r.dist_f, r.dist_g, r.tilde_a_sup, r.bar_a_sup, r.hat_a_int_sup,
                      r.pass ? 1 : 0);
        out += buf;
    }
    return out;
}

}  // namespace mfm
