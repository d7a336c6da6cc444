#pragma once

#include "mfm/solver.hpp"

namespace mfm {

// Leader/follower game over finite candidate menus on top of a scenario
// template. The leader commits to a relaxed major control zeta, the follower
// answers with a minor-control distribution alpha, and both collect terminal
// payoffs sigma(m(T), y(T)).
struct StackelbergProblem {
    // Complete valid scenario; its alpha and zeta slots are overwritten by
    // the candidates during evaluation.
    Scenario base;
    Expression sigma_L;  // Payoff block: y<i>, mean(i), sigma_p
    Expression sigma_F;
    std::vector<RelaxedControl> leader_candidates;
    std::vector<ControlDistribution> follower_candidates;
    double tie_tol = 1e-9;
};

// Menus nonempty, payoff references inside the state dimensions, and every
// candidate substitution yields a valid scenario (follower marginals must
// reproduce m0).
void validate_problem(const StackelbergProblem& problem);

struct PayoffPair {
    double follower = 0.0;
    double leader = 0.0;
};

// Payoffs for one candidate pair. Solves the motion with picard_solve and
// falls back to the lagged Euler scheme at the same grid resolution if the
// fixed point does not converge. Failures are rethrown tagged with the pair
// indices.
PayoffPair evaluate_payoffs(const StackelbergProblem& problem, int alpha_ix, int zeta_ix,
                            const PicardOptions& solve = PicardOptions());

// Full payoff matrices, follower candidates as rows and leader candidates as
// columns. Pairs are evaluated concurrently, each exactly once; entry (i, j)
// equals evaluate_payoffs(problem, i, j).
struct PayoffMatrix {
    Mat follower;
    Mat leader;
};
PayoffMatrix evaluate_all_payoffs(const StackelbergProblem& problem,
                                  const PicardOptions& solve = PicardOptions());

// Indices of every follower candidate within tie_tol of the best follower
// payoff against the given leader candidate.
std::vector<int> best_response_set(const PayoffMatrix& payoffs, double tie_tol, int zeta_ix);
std::vector<int> best_response_set(const StackelbergProblem& problem, int zeta_ix,
                                   const PicardOptions& solve = PicardOptions());

struct GameSolution {
    int zeta_star = -1;
    int alpha_star = -1;
    double leader_value = 0.0;
    double follower_value = 0.0;

    // One row per leader candidate: the follower's best-response set, its
    // follower payoff, and the best leader payoff inside the set.
    struct BestResponse {
        std::vector<int> alphas;
        double follower_value = 0.0;
        double leader_value = 0.0;
    };
    std::vector<BestResponse> best_response_table;

    PayoffMatrix payoffs;
};

// Commitment-optimal solution over the finite menus: the follower plays a
// best response (ties resolved in the leader's favor inside the tie_tol
// band), the leader maximizes over the induced values. Index ties break
// toward the lowest index.
GameSolution solve_stackelberg(const StackelbergProblem& problem,
                               const PicardOptions& solve = PicardOptions());

// Default menus: one dirac control per grid point, constant across slices;
// follower candidates assign the same control to every m0 atom.
std::vector<RelaxedControl> dirac_leader_menu(const ControlGrid& V, int slices, double T);
std::vector<ControlDistribution> dirac_follower_menu(const EmpiricalMeasure& m0,
                                                     const ControlGrid& U, int slices, double T);

}  // namespace mfm
