#include "mfm/stackelberg.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>

namespace mfm {

namespace {

Scenario with_pair(const StackelbergProblem& p, int alpha_ix, int zeta_ix) {
    Scenario sc = p.base;
    sc.alpha = p.follower_candidates[static_cast<std::size_t>(alpha_ix)];
    sc.zeta = p.leader_candidates[static_cast<std::size_t>(zeta_ix)];
    return sc;
}

void check_payoff_refs(const Expression& sigma, const DynamicsSpec& dyn, const char* name) {
    if (sigma.empty()) throw ValidationError(std::string(name) + " payoff is missing");
    const Expression::Refs r = sigma.refs();
    if (r.max_y >= dyn.d_prime)
        throw ValidationError(std::string(name) + " payoff references y beyond the major dimension");
    if (r.max_mean >= dyn.d)
        throw ValidationError(std::string(name) + " payoff references mean beyond the minor dimension");
}

double terminal_payoff(const Expression& sigma, double T, const Vec& yT,
                       const MeasureFunctionals& mf) {
    EvalArgs args;
    args.t = T;
    args.y = &yT;
    args.mf = &mf;
    return sigma.eval(args);
}

}  // namespace

void validate_problem(const StackelbergProblem& problem) {
    if (problem.leader_candidates.empty())
        throw ValidationError("stackelberg: leader candidate menu is empty");
    if (problem.follower_candidates.empty())
        throw ValidationError("stackelberg: follower candidate menu is empty");
    if (!(problem.tie_tol >= 0.0))
        throw ValidationError("stackelberg: tie_tol must be nonnegative");
    check_payoff_refs(problem.sigma_L, problem.base.dynamics, "leader");
    check_payoff_refs(problem.sigma_F, problem.base.dynamics, "follower");
    validate_scenario(problem.base);
    // Every candidate substitution must itself be a valid scenario; this is
    // where follower/m0 compatibility is enforced.
    for (std::size_t a = 0; a < problem.follower_candidates.size(); ++a) {
        for (std::size_t z = 0; z < problem.leader_candidates.size(); ++z) {
            try {
                validate_scenario(with_pair(problem, static_cast<int>(a), static_cast<int>(z)));
            } catch (const ValidationError& e) {
                char tag[64];
                std::snprintf(tag, sizeof(tag), "candidate pair (alpha %zu, zeta %zu): ", a, z);
                throw ValidationError(tag + std::string(e.what()));
            }
        }
    }
}

PayoffPair evaluate_payoffs(const StackelbergProblem& problem, int alpha_ix, int zeta_ix,
                            const PicardOptions& solve) {
    if (alpha_ix < 0 || alpha_ix >= static_cast<int>(problem.follower_candidates.size()) ||
        zeta_ix < 0 || zeta_ix >= static_cast<int>(problem.leader_candidates.size()))
        throw ValidationError("stackelberg: candidate index out of range");
    const Scenario sc = with_pair(problem, alpha_ix, zeta_ix);
    char tag[64];
    std::snprintf(tag, sizeof(tag), "payoff pair (alpha %d, zeta %d): ", alpha_ix, zeta_ix);
    try {
        Motion motion;
        try {
            motion = picard_solve(sc, solve);
        } catch (const SolverError&) {
            motion = delayed_euler_solve(sc, solve.grid_size);
        }
        const Vec yT = motion.y.at(sc.T);
        const MeasureFunctionals mf = measure_functionals(motion.measure_at(sc.T), sc.p);
        PayoffPair out;
        out.follower = terminal_payoff(problem.sigma_F, sc.T, yT, mf);
        out.leader = terminal_payoff(problem.sigma_L, sc.T, yT, mf);
        return out;
    } catch (const SolverError& e) {
        throw SolverError(tag + std::string(e.what()), e.last_residual);
    } catch (const ValidationError& e) {
        throw ValidationError(tag + std::string(e.what()));
    }
}

PayoffMatrix evaluate_all_payoffs(const StackelbergProblem& problem,
                                  const PicardOptions& solve) {
    const int na = static_cast<int>(problem.follower_candidates.size());
    const int nz = static_cast<int>(problem.leader_candidates.size());
    PayoffMatrix out;
    out.follower.resize(na, nz);
    out.leader.resize(na, nz);

    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(na * nz));
    parallel_for(static_cast<std::size_t>(na * nz), [&](std::size_t k) {
        const int a = static_cast<int>(k) / nz;
        const int z = static_cast<int>(k) % nz;
        try {
            const PayoffPair pay = evaluate_payoffs(problem, a, z, solve);
            out.follower(a, z) = pay.follower;
            out.leader(a, z) = pay.leader;
        } catch (...) {
            errors[k] = std::current_exception();
        }
    });
    for (const std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

std::vector<int> best_response_set(const PayoffMatrix& payoffs, double tie_tol, int zeta_ix) {
    const int na = static_cast<int>(payoffs.follower.rows());
    if (zeta_ix < 0 || zeta_ix >= payoffs.follower.cols())
        throw ValidationError("stackelberg: leader index out of range");
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < na; ++a) best = std::max(best, payoffs.follower(a, zeta_ix));
    std::vector<int> out;
    for (int a = 0; a < na; ++a)
        if (payoffs.follower(a, zeta_ix) >= best - tie_tol) out.push_back(a);
    return out;
}

std::vector<int> best_response_set(const StackelbergProblem& problem, int zeta_ix,
                                   const PicardOptions& solve) {
    return best_response_set(evaluate_all_payoffs(problem, solve), problem.tie_tol, zeta_ix);
}

GameSolution solve_stackelberg(const StackelbergProblem& problem, const PicardOptions& solve) {
    validate_problem(problem);
    GameSolution sol;
    sol.payoffs = evaluate_all_payoffs(problem, solve);
    const int nz = static_cast<int>(problem.leader_candidates.size());

    sol.best_response_table.resize(static_cast<std::size_t>(nz));
    for (int z = 0; z < nz; ++z) {
        GameSolution::BestResponse& br = sol.best_response_table[static_cast<std::size_t>(z)];
        br.alphas = best_response_set(sol.payoffs, problem.tie_tol, z);
        br.follower_value = -std::numeric_limits<double>::infinity();
        br.leader_value = -std::numeric_limits<double>::infinity();
        for (int a : br.alphas) {
            br.follower_value = std::max(br.follower_value, sol.payoffs.follower(a, z));
            br.leader_value = std::max(br.leader_value, sol.payoffs.leader(a, z));
        }
    }

    sol.zeta_star = 0;
    for (int z = 1; z < nz; ++z)
        if (sol.best_response_table[static_cast<std::size_t>(z)].leader_value >
            sol.best_response_table[static_cast<std::size_t>(sol.zeta_star)].leader_value)
            sol.zeta_star = z;

    const GameSolution::BestResponse& star =
        sol.best_response_table[static_cast<std::size_t>(sol.zeta_star)];
    sol.alpha_star = star.alphas.front();
    for (int a : star.alphas)
        if (sol.payoffs.leader(a, sol.zeta_star) > sol.payoffs.leader(sol.alpha_star, sol.zeta_star))
            sol.alpha_star = a;

    sol.leader_value = sol.payoffs.leader(sol.alpha_star, sol.zeta_star);
    sol.follower_value = sol.payoffs.follower(sol.alpha_star, sol.zeta_star);
    return sol;
}

std::vector<RelaxedControl> dirac_leader_menu(const ControlGrid& V, int slices, double T) {
    std::vector<RelaxedControl> out;
    out.reserve(static_cast<std::size_t>(V.size()));
    for (int i = 0; i < V.size(); ++i) out.push_back(dirac_control(V, i, slices, T));
    return out;
}

std::vector<ControlDistribution> dirac_follower_menu(const EmpiricalMeasure& m0,
                                                     const ControlGrid& U, int slices, double T) {
    std::vector<ControlDistribution> out;
    out.reserve(static_cast<std::size_t>(U.size()));
    for (int i = 0; i < U.size(); ++i) {
        std::vector<ControlAtom> atoms;
        atoms.reserve(static_cast<std::size_t>(m0.size()));
        for (const Atom& a : m0.atoms()) atoms.push_back({a.x, dirac_control(U, i, slices, T), a.w});
        out.emplace_back(std::move(atoms));
    }
    return out;
}

}  // namespace mfm
