#include "mfm/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mfm {

namespace {

void require_grid_match(const ControlGrid& a, const ControlGrid& b, const char* who) {
    if (a.size() != b.size() || a.point_dim() != b.point_dim()) {
        throw ValidationError(std::string(who) + ": control grid shape does not match the scenario grid");
    }
    for (int i = 0; i < a.size(); ++i) {
        if ((a.points[static_cast<std::size_t>(i)] - b.points[static_cast<std::size_t>(i)])
                .lpNorm<Eigen::Infinity>() > 1e-12) {
            throw ValidationError(std::string(who) + ": control grid points do not match the scenario grid");
        }
    }
}

void require_horizon(double h, double T, const char* who) {
    if (std::abs(h - T) > 1e-9 * std::max(1.0, T)) {
        throw ValidationError(std::string(who) + ": control horizon " + std::to_string(h) +
                              " does not match T = " + std::to_string(T));
    }
}

}  // namespace

void validate_scenario(const Scenario& sc) {
    sc.dynamics.validate_shape();
    if (!(sc.T > 0.0) || !std::isfinite(sc.T)) throw ValidationError("T must be positive");
    if (!(sc.p >= 1.0)) throw ValidationError("p must be at least 1");
    if (sc.m0.dim() != sc.dynamics.d) throw ValidationError("m0 dimension does not match d");
    sc.m0.require_probability("scenario m0");
    if (static_cast<int>(sc.y0.size()) != sc.dynamics.d_prime) {
        throw ValidationError("y0 dimension does not match d_prime");
    }
    if (sc.U.size() == 0 || sc.V.size() == 0) throw ValidationError("control grids must be nonempty");

    Expression::Refs ri, rii, rg;
    for (const Expression& e : sc.dynamics.f_I) ri.absorb(e.refs());
    for (const Expression& e : sc.dynamics.f_II) rii.absorb(e.refs());
    for (const Expression& e : sc.dynamics.g) rg.absorb(e.refs());
    if (ri.max_x >= sc.dynamics.d || rii.max_x >= sc.dynamics.d) {
        throw ValidationError("dynamics read an x coordinate beyond d");
    }
    if (std::max({ri.max_y, rii.max_y, rg.max_y}) >= sc.dynamics.d_prime) {
        throw ValidationError("dynamics read a y coordinate beyond d_prime");
    }
    if (std::max({ri.max_mean, rii.max_mean, rg.max_mean}) >= sc.dynamics.d) {
        throw ValidationError("dynamics read a mean coordinate beyond d");
    }
    if (ri.max_u >= sc.U.point_dim()) throw ValidationError("f_I reads a u coordinate beyond the grid dimension");
    if (std::max(rii.max_v, rg.max_v) >= sc.V.point_dim()) {
        throw ValidationError("dynamics read a v coordinate beyond the grid dimension");
    }

    require_horizon(sc.zeta.horizon(), sc.T, "zeta");
    require_grid_match(sc.zeta.grid(), sc.V, "zeta");
    if (sc.alpha.size() == 0) throw ValidationError("alpha must carry at least one atom");
    if (sc.alpha.state_dim() != sc.dynamics.d) throw ValidationError("alpha start dimension does not match d");
    for (int i = 0; i < sc.alpha.size(); ++i) {
        require_horizon(sc.alpha.atom(i).xi.horizon(), sc.T, "alpha control");
        require_grid_match(sc.alpha.atom(i).xi.grid(), sc.U, "alpha control");
    }
    CompatibilityReport comp = validate_compatibility(sc.alpha, sc.m0);
    if (!comp.pass) {
        throw ValidationError("alpha start marginal does not reproduce m0 (W_1 gap " +
                              std::to_string(comp.gap) + ")");
    }
}

std::vector<double> make_solve_grid(const Scenario& sc, int n) {
    if (n < 1) throw ValidationError("solve grid needs at least one cell");
    std::vector<double> nodes;
    nodes.reserve(static_cast<std::size_t>(n) + 16);
    for (int i = 0; i <= n; ++i) nodes.push_back(sc.T * i / n);
    auto add_boundaries = [&nodes, &sc](int slices) {
        for (int j = 1; j < slices; ++j) nodes.push_back(sc.T * j / slices);
    };
    add_boundaries(sc.zeta.slices());
    for (int i = 0; i < sc.alpha.size(); ++i) add_boundaries(sc.alpha.atom(i).xi.slices());
    std::sort(nodes.begin(), nodes.end());
    const double tol = 1e-12 * std::max(1.0, sc.T);
    std::vector<double> out;
    out.reserve(nodes.size());
    for (double t : nodes) {
        if (out.empty() || t - out.back() > tol) out.push_back(t);
    }
    out.front() = 0.0;
    out.back() = sc.T;
    return out;
}

namespace {

// Mixture of a field over the control grid with the slice weights active on
// the cell [grid[j], grid[j+1]). Cells never straddle slices, so the midpoint
// picks the right row.
template <class Field>
Vec control_mixture(const RelaxedControl& ctrl, double cell_mid, const Field& field,
                    int out_dim) {
    int slice = ctrl.slice_of(cell_mid);
    const Mat& kernel = ctrl.kernel();
    Vec out = Vec::Zero(out_dim);
    for (int g = 0; g < ctrl.grid().size(); ++g) {
        double w = kernel(slice, g);
        if (w > 0.0) out += w * field(ctrl.grid().points[static_cast<std::size_t>(g)]);
    }
    return out;
}

void check_field_data(const std::vector<double>& grid, const std::vector<MeasureFunctionals>& mfs,
                      const std::vector<Vec>* ys) {
    if (grid.size() < 2) throw ValidationError("trajectory grid needs at least two nodes");
    if (mfs.size() != grid.size() || (ys != nullptr && ys->size() != grid.size())) {
        throw ValidationError("field data does not match the trajectory grid");
    }
}

MeasureFunctionals functionals_of_states(const std::vector<Vec>& states, const Vec& weights,
                                         double p) {
    MeasureFunctionals mf;
    mf.mean = Vec::Zero(states.empty() ? 0 : states[0].size());
    double moment = 0.0;
    for (std::size_t i = 0; i < states.size(); ++i) {
        mf.mean += weights(static_cast<int>(i)) * states[i];
        moment += weights(static_cast<int>(i)) * std::pow(states[i].norm(), p);
    }
    mf.sigma_p = std::pow(moment, 1.0 / p);
    return mf;
}

Vec interp_nodes(const std::vector<double>& grid, const std::vector<Vec>& values, double t) {
    if (t <= grid.front()) return values.front();
    if (t >= grid.back()) return values.back();
    auto it = std::upper_bound(grid.begin(), grid.end(), t);
    std::size_t hi = static_cast<std::size_t>(it - grid.begin());
    std::size_t lo = hi - 1;
    double span = grid[hi] - grid[lo];
    double a = span > 0.0 ? (t - grid[lo]) / span : 0.0;
    return (1.0 - a) * values[lo] + a * values[hi];
}

}  // namespace

std::vector<Vec> minor_trajectory(const DynamicsSpec& dyn, const Vec& x0, const RelaxedControl& xi,
                               const RelaxedControl& zeta, const std::vector<double>& grid,
                               const std::vector<MeasureFunctionals>& mfs,
                               const std::vector<Vec>& ys) {
    check_field_data(grid, mfs, &ys);
    std::vector<Vec> out(grid.size());
    out[0] = x0;
    for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
        double tj = grid[j];
        double dt = grid[j + 1] - tj;
        double mid = tj + 0.5 * dt;
        const Vec& x = out[j];
        Vec drift = control_mixture(
            xi, mid, [&](const Vec& u) { return dyn.eval_f_I(tj, x, mfs[j], ys[j], u); }, dyn.d);
        drift += control_mixture(
            zeta, mid, [&](const Vec& v) { return dyn.eval_f_II(tj, x, mfs[j], ys[j], v); },
            dyn.d);
        out[j + 1] = x + dt * drift;
    }
    return out;
}

std::vector<Vec> major_trajectory(const DynamicsSpec& dyn, const Vec& y0, const RelaxedControl& zeta,
                          const std::vector<double>& grid,
                          const std::vector<MeasureFunctionals>& mfs) {
    check_field_data(grid, mfs, nullptr);
    std::vector<Vec> out(grid.size());
    out[0] = y0;
    for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
        double tj = grid[j];
        double dt = grid[j + 1] - tj;
        double mid = tj + 0.5 * dt;
        const Vec& y = out[j];
        Vec drift = control_mixture(
            zeta, mid, [&](const Vec& v) { return dyn.eval_g(tj, y, mfs[j], v); }, dyn.d_prime);
        out[j + 1] = y + dt * drift;
    }
    return out;
}

namespace {

Motion assemble_motion(const Scenario& sc, std::vector<double> grid,
                       const std::vector<std::vector<Vec>>& xs, std::vector<Vec> yv) {
    Motion mo;
    mo.time_grid = grid;
    mo.chi = TrajectoryBundle(grid, sc.dynamics.d);
    for (int i = 0; i < sc.alpha.size(); ++i) {
        mo.chi.add_curve(xs[static_cast<std::size_t>(i)], sc.alpha.atom(i).w);
    }
    mo.y.times = std::move(grid);
    mo.y.values = std::move(yv);
    mo.m_path.reserve(mo.time_grid.size());
    for (double t : mo.time_grid) mo.m_path.push_back(mo.chi.at_time(t));
    return mo;
}

}  // namespace

Motion delayed_euler_solve(const Scenario& sc, int N) {
    validate_scenario(sc);
    if (N < 1) throw ValidationError("the scheme needs at least one lag cell");
    const double h = sc.T / N;
    std::vector<double> grid = make_solve_grid(sc, 2 * N);
    const std::size_t J = grid.size();
    const std::size_t atoms = static_cast<std::size_t>(sc.alpha.size());
    Vec weights(static_cast<int>(atoms));
    for (std::size_t i = 0; i < atoms; ++i) {
        weights(static_cast<int>(i)) = sc.alpha.atom(static_cast<int>(i)).w;
    }

    std::vector<std::vector<Vec>> xs(atoms, std::vector<Vec>(J));
    std::vector<Vec> yv(J);
    for (std::size_t i = 0; i < atoms; ++i) xs[i][0] = sc.alpha.atom(static_cast<int>(i)).x0;
    yv[0] = sc.y0;

    std::vector<Vec> lagged(atoms);
    for (std::size_t j = 0; j + 1 < J; ++j) {
        double tj = grid[j];
        double dt = grid[j + 1] - tj;
        double mid = tj + 0.5 * dt;
        // Lagged arguments; before the lag window opens they sit on the
        // initial data, which the clamp at zero reproduces. The lag never
        // reaches past grid[j], so only filled entries are read.
        double td = std::max(tj - h, 0.0);
        parallel_for(atoms, [&](std::size_t i) { lagged[i] = interp_nodes(grid, xs[i], td); });
        MeasureFunctionals mfd = functionals_of_states(lagged, weights, sc.p);
        Vec yd = interp_nodes(grid, yv, td);

        parallel_for(atoms, [&](std::size_t i) {
            const RelaxedControl& xi = sc.alpha.atom(static_cast<int>(i)).xi;
            Vec drift = control_mixture(
                xi, mid,
                [&](const Vec& u) { return sc.dynamics.eval_f_I(tj, lagged[i], mfd, yd, u); },
                sc.dynamics.d);
            drift += control_mixture(
                sc.zeta, mid,
                [&](const Vec& v) { return sc.dynamics.eval_f_II(tj, lagged[i], mfd, yd, v); },
                sc.dynamics.d);
            xs[i][j + 1] = xs[i][j] + dt * drift;
        });
        Vec gdrift = control_mixture(
            sc.zeta, mid, [&](const Vec& v) { return sc.dynamics.eval_g(tj, yd, mfd, v); },
            sc.dynamics.d_prime);
        yv[j + 1] = yv[j] + dt * gdrift;
    }
    return assemble_motion(sc, std::move(grid), xs, std::move(yv));
}

Motion picard_solve(const Scenario& sc, const PicardOptions& opts, const Motion* warm) {
    validate_scenario(sc);
    if (opts.grid_size < 2) throw ValidationError("picard grid needs at least two cells");
    if (!(opts.tol > 0.0)) throw ValidationError("picard tolerance must be positive");
    if (opts.max_iter < 1) throw ValidationError("picard needs at least one sweep");

    std::vector<double> grid = make_solve_grid(sc, opts.grid_size);
    const std::size_t J = grid.size();
    const std::size_t atoms = static_cast<std::size_t>(sc.alpha.size());
    Vec weights(static_cast<int>(atoms));
    for (std::size_t i = 0; i < atoms; ++i) {
        weights(static_cast<int>(i)) = sc.alpha.atom(static_cast<int>(i)).w;
    }

    std::vector<std::vector<Vec>> xs(atoms, std::vector<Vec>(J));
    std::vector<Vec> yv(J);
    if (warm != nullptr) {
        if (warm->chi.size() != sc.alpha.size()) {
            throw ValidationError("warm start carries a different number of minor curves");
        }
        for (std::size_t i = 0; i < atoms; ++i) {
            for (std::size_t j = 0; j < J; ++j) {
                xs[i][j] = warm->chi.value_at(static_cast<int>(i), grid[j]);
            }
        }
        for (std::size_t j = 0; j < J; ++j) yv[j] = warm->y.at(grid[j]);
    } else {
        // Cold start: the constant pair (m0, y0).
        for (std::size_t i = 0; i < atoms; ++i) {
            std::fill(xs[i].begin(), xs[i].end(), sc.alpha.atom(static_cast<int>(i)).x0);
        }
        std::fill(yv.begin(), yv.end(), sc.y0);
    }

    std::vector<MeasureFunctionals> mfs(J);
    std::vector<std::vector<Vec>> next(atoms);
    std::vector<Vec> states(atoms);
    double damping = 1.0;
    double prev_residual = std::numeric_limits<double>::infinity();
    double residual = prev_residual;

    for (int it = 1; it <= opts.max_iter; ++it) {
        for (std::size_t j = 0; j < J; ++j) {
            for (std::size_t i = 0; i < atoms; ++i) states[i] = xs[i][j];
            mfs[j] = functionals_of_states(states, weights, sc.p);
        }
        parallel_for(atoms, [&](std::size_t i) {
            next[i] = minor_trajectory(sc.dynamics, sc.alpha.atom(static_cast<int>(i)).x0,
                                    sc.alpha.atom(static_cast<int>(i)).xi, sc.zeta, grid, mfs, yv);
        });
        std::vector<Vec> ynext = major_trajectory(sc.dynamics, sc.y0, sc.zeta, grid, mfs);

        // Fixed-point defect before damping: index-coupling transport bound
        // plus the major gap, over grid nodes.
        residual = 0.0;
        for (std::size_t j = 0; j < J; ++j) {
            double moment = 0.0;
            for (std::size_t i = 0; i < atoms; ++i) {
                moment += weights(static_cast<int>(i)) *
                          std::pow((next[i][j] - xs[i][j]).norm(), sc.p);
            }
            double node = std::pow(moment, 1.0 / sc.p) + (ynext[j] - yv[j]).norm();
            residual = std::max(residual, node);
        }
        if (residual > prev_residual) damping = 0.5;
        prev_residual = residual;

        if (damping == 1.0) {
            xs = std::move(next);
            next.assign(atoms, {});
            yv = std::move(ynext);
        } else {
            for (std::size_t i = 0; i < atoms; ++i) {
                for (std::size_t j = 0; j < J; ++j) {
                    xs[i][j] = (1.0 - damping) * xs[i][j] + damping * next[i][j];
                }
            }
            for (std::size_t j = 0; j < J; ++j) {
                yv[j] = (1.0 - damping) * yv[j] + damping * ynext[j];
            }
        }

        if (residual <= opts.tol) {
            Motion mo = assemble_motion(sc, std::move(grid), xs, std::move(yv));
            mo.iterations = it;
            mo.residual = residual;
            return mo;
        }
    }
    throw SolverError("no convergence within " + std::to_string(opts.max_iter) + " sweeps",
                      residual);
}

double motion_deviation(const Motion& a, const Motion& b, double p, int comparison_nodes) {
    if (comparison_nodes < 2) throw ValidationError("deviation needs at least two comparison nodes");
    if (a.time_grid.empty() || b.time_grid.empty()) throw ValidationError("deviation needs solved motions");
    double T = std::min(a.time_grid.back(), b.time_grid.back());
    double t0 = std::max(a.time_grid.front(), b.time_grid.front());
    double worst = 0.0;
    for (int k = 0; k < comparison_nodes; ++k) {
        double t = t0 + (T - t0) * k / (comparison_nodes - 1);
        double w = wasserstein_p(a.chi.at_time(t).merged(), b.chi.at_time(t).merged(), p).distance;
        double dy = (a.y.at(t) - b.y.at(t)).norm();
        worst = std::max(worst, w + dy);
    }
    return worst;
}

}  // namespace mfm
