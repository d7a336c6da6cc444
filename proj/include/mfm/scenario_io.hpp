#pragma once

#include "mfm/solver.hpp"
#include "mfm/stability.hpp"
#include "mfm/stackelberg.hpp"

#include <optional>
#include <string>

namespace mfm {

// JSON file formats. One scenario (or game) per file; every parse error names
// the offending location as a JSON pointer ("missing key: /y0"). Loading
// never mutates files, and every emitter's output parses back through the
// matching parser.
//
// Scenario files carry the top-level keys
//   {name?, dynamics, m0, y0, grids, alpha, zeta, T, p, N}
// with
//   dynamics: {d, d_prime, f_I: [expr...], f_II: [...], g: [...], A,
//              lipschitz_table: [{c, B_I, B_II, B_prime}...]}
//   m0:       {dim, atoms: [{x: [...], w}...]}
//   grids:    {U: [[coords...]...], V: [...]}  (Euclidean point lists)
//   alpha:    {atoms: [{x0: [...], xi: control, w}...]}
//   zeta:     control = {K, grid, kernel}  (kernel is K rows over the grid)
// Control horizons are implicit: every control in a file spans [0, T].
// N is the bundled solver resolution; the command line may override it.
//
// Game files extend the scenario schema with
//   {sigma_L, sigma_F, leader_candidates?: [control...],
//    follower_candidates?: [alpha...], tie_tol?}
// Omitted candidate menus are generated as one Dirac control per grid point
// (constant over all slices, K matching zeta's slice count).

struct ScenarioFile {
    std::string name;
    Scenario scenario;
    int N = 256;
};

struct ProblemFile {
    std::string name;
    StackelbergProblem problem;
    int N = 256;
};

// Distinguishes game files from plain scenarios by the sigma_L key.
bool is_problem_text(const std::string& text);

ScenarioFile parse_scenario(const std::string& text);
ProblemFile parse_problem(const std::string& text);

// Perturbation files hold optional keys
//   {df_I: [expr...], df_II, dg, dm0_shift: [...], dy0_shift: [...],
//    zeta_target: control, alpha_target: alpha}.
// The base scenario supplies dimensions, grids, and the horizon.
Perturbation parse_perturbation(const std::string& text, const Scenario& base);

std::string read_text_file(const std::string& path);

// load_* = read + parse + validate. Scenario validation runs the structural
// checks, then verifies the declared growth and Lipschitz constants by
// sampling at the ceiling c = G(||y0||, sigma_p(m0), A) the estimates need;
// the lipschitz_table must reach that ceiling. Game files additionally
// validate every candidate pair.
ScenarioFile load_scenario(const std::string& path);
ProblemFile load_problem(const std::string& path);
Perturbation load_perturbation(const std::string& path, const Scenario& base);

// The ceiling used by load-time validation and its sampler check.
double scenario_ceiling(const Scenario& sc);
void validate_loaded_scenario(const Scenario& sc);

// ---- Emitters (inverse of the parsers above) ----

std::string scenario_json(const ScenarioFile& file);
std::string problem_json(const ProblemFile& file);
std::string perturbation_json(const Perturbation& pert);

// ---- Result artifacts ----

// Columns t, y_0..y_{d'-1}, sigma_p over the motion's grid.
std::string motion_csv(const Motion& motion, double p);

// Full motion: major curve, weighted bundle, per-node sigma_p, solver
// bookkeeping.
std::string motion_json(const Motion& motion, double p);
Motion parse_motion(const std::string& text);

// Key-estimate report for the scale it was computed at.
std::string report_json(const KeyEstimateReport& report, double eps);
KeyEstimateReport parse_report(const std::string& text);

// Solved game: {zeta_star, alpha_star, leader_value, follower_value, table}.
std::string solution_json(const GameSolution& sol);
GameSolution parse_solution(const std::string& text);  // payoff matrices stay empty

// Tidy payoff matrix rows: alpha,zeta,follower,leader.
std::string payoff_csv(const PayoffMatrix& payoffs);

// {"error": {"type", "message", "residual"?}}; type is "validation",
// "solver", or "internal" to match exit codes 2, 3, 1.
std::string error_json(const std::string& type, const std::string& message,
                       std::optional<double> residual = std::nullopt);

struct ErrorInfo {
    std::string type;
    std::string message;
    std::optional<double> residual;
};
ErrorInfo parse_error(const std::string& text);

}  // namespace mfm
