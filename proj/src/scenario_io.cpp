#include "mfm/scenario_io.hpp"

#include "json.hpp"

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

namespace mfm {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string fmt_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

// Read-only view into a parsed document that remembers its JSON pointer, so
// every complaint names the exact location.
struct Cur {
    const json* p;
    std::string path;

    std::string where() const { return path.empty() ? std::string("(root)") : path; }

    Cur key(const char* k) const {
        if (!p->is_object()) throw ValidationError("expected an object at " + where());
        auto it = p->find(k);
        if (it == p->end()) throw ValidationError("missing key: " + path + "/" + k);
        return Cur{&*it, path + "/" + k};
    }
    std::optional<Cur> opt(const char* k) const {
        if (!p->is_object()) throw ValidationError("expected an object at " + where());
        auto it = p->find(k);
        if (it == p->end()) return std::nullopt;
        return Cur{&*it, path + "/" + k};
    }
    std::size_t length() const {
        if (!p->is_array()) throw ValidationError("expected an array at " + where());
        return p->size();
    }
    Cur item(std::size_t i) const {
        return Cur{&(*p)[i], path + "/" + std::to_string(i)};
    }
    double num() const {
        if (!p->is_number()) throw ValidationError("expected a number at " + where());
        return p->get<double>();
    }
    int integer() const {
        if (!p->is_number_integer()) throw ValidationError("expected an integer at " + where());
        return p->get<int>();
    }
    bool boolean() const {
        if (!p->is_boolean()) throw ValidationError("expected a boolean at " + where());
        return p->get<bool>();
    }
    std::string str() const {
        if (!p->is_string()) throw ValidationError("expected a string at " + where());
        return p->get<std::string>();
    }
};

json parse_document(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("invalid JSON: ") + e.what());
    }
}

Vec parse_vec(const Cur& cur) {
    const std::size_t n = cur.length();
    Vec v(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = cur.item(i).num();
    return v;
}

std::vector<double> parse_dvec(const Cur& cur) {
    const std::size_t n = cur.length();
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = cur.item(i).num();
    return v;
}

MetricGrid parse_grid(const Cur& cur) {
    const std::size_t n = cur.length();
    if (n == 0) throw ValidationError("grid has no points at " + cur.where());
    std::vector<Vec> pts(n);
    for (std::size_t i = 0; i < n; ++i) pts[i] = parse_vec(cur.item(i));
    for (std::size_t i = 1; i < n; ++i)
        if (pts[i].size() != pts[0].size())
            throw ValidationError("grid points disagree in dimension at " + cur.where());
    return MetricGrid::euclidean(std::move(pts));
}

Expression parse_expr(const Cur& cur, Block block, const ExprDims& dims) {
    const std::string text = cur.str();
    try {
        return Expression::parse(text, block, dims);
    } catch (const ValidationError& e) {
        throw ValidationError(cur.where() + ": " + e.what());
    }
}

std::vector<Expression> parse_expr_list(const Cur& cur, Block block, const ExprDims& dims,
                                        std::size_t want) {
    const std::size_t n = cur.length();
    if (n != want)
        throw ValidationError("expected " + std::to_string(want) + " coordinate expressions at " +
                              cur.where());
    std::vector<Expression> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(parse_expr(cur.item(i), block, dims));
    return out;
}

RelaxedControl parse_control(const Cur& cur, double T) {
    const int K = cur.key("K").integer();
    if (K < 1) throw ValidationError("K must be at least 1 at " + cur.where());
    MetricGrid grid = parse_grid(cur.key("grid"));
    Cur kc = cur.key("kernel");
    if (kc.length() != static_cast<std::size_t>(K))
        throw ValidationError("kernel must have K rows at " + kc.where());
    Mat kernel(K, grid.size());
    for (int r = 0; r < K; ++r) {
        Cur row = kc.item(static_cast<std::size_t>(r));
        if (row.length() != static_cast<std::size_t>(grid.size()))
            throw ValidationError("kernel row does not match the grid at " + row.where());
        for (int c = 0; c < grid.size(); ++c)
            kernel(r, c) = row.item(static_cast<std::size_t>(c)).num();
    }
    try {
        return RelaxedControl(T, std::move(grid), std::move(kernel));
    } catch (const ValidationError& e) {
        throw ValidationError(cur.where() + ": " + e.what());
    }
}

EmpiricalMeasure parse_measure(const Cur& cur) {
    const int dim = cur.key("dim").integer();
    if (dim < 1) throw ValidationError("dim must be at least 1 at " + cur.where());
    Cur ac = cur.key("atoms");
    std::vector<Atom> atoms;
    atoms.reserve(ac.length());
    for (std::size_t i = 0; i < ac.length(); ++i) {
        Cur a = ac.item(i);
        Atom atom;
        atom.x = parse_vec(a.key("x"));
        if (atom.x.size() != dim)
            throw ValidationError("atom does not match dim at " + a.key("x").where());
        atom.w = a.key("w").num();
        atoms.push_back(std::move(atom));
    }
    try {
        return EmpiricalMeasure(dim, std::move(atoms));
    } catch (const ValidationError& e) {
        throw ValidationError(cur.where() + ": " + e.what());
    }
}

ControlDistribution parse_alpha(const Cur& cur, double T) {
    Cur ac = cur.key("atoms");
    std::vector<ControlAtom> atoms;
    atoms.reserve(ac.length());
    for (std::size_t i = 0; i < ac.length(); ++i) {
        Cur a = ac.item(i);
        ControlAtom atom;
        atom.x0 = parse_vec(a.key("x0"));
        atom.xi = parse_control(a.key("xi"), T);
        atom.w = a.key("w").num();
        atoms.push_back(std::move(atom));
    }
    try {
        return ControlDistribution(std::move(atoms));
    } catch (const ValidationError& e) {
        throw ValidationError(cur.where() + ": " + e.what());
    }
}

DynamicsSpec parse_dynamics(const Cur& cur, int du, int dv) {
    DynamicsSpec dyn;
    dyn.d = cur.key("d").integer();
    dyn.d_prime = cur.key("d_prime").integer();
    if (dyn.d < 1 || dyn.d_prime < 1)
        throw ValidationError("state dimensions must be at least 1 at " + cur.where());
    ExprDims dims{dyn.d, dyn.d_prime, du, dv};
    dyn.f_I = parse_expr_list(cur.key("f_I"), Block::FI, dims, static_cast<std::size_t>(dyn.d));
    dyn.f_II = parse_expr_list(cur.key("f_II"), Block::FII, dims, static_cast<std::size_t>(dyn.d));
    dyn.g = parse_expr_list(cur.key("g"), Block::G, dims, static_cast<std::size_t>(dyn.d_prime));
    dyn.A = cur.key("A").num();
    Cur tc = cur.key("lipschitz_table");
    if (tc.length() == 0)
        throw ValidationError("lipschitz_table needs at least one entry at " + tc.where());
    for (std::size_t i = 0; i < tc.length(); ++i) {
        Cur e = tc.item(i);
        LipschitzEntry entry;
        entry.c = e.key("c").num();
        entry.B_I = e.key("B_I").num();
        entry.B_II = e.key("B_II").num();
        entry.B_prime = e.key("B_prime").num();
        dyn.lipschitz_table.push_back(entry);
    }
    return dyn;
}

ScenarioFile parse_scenario_doc(const json& doc) {
    Cur root{&doc, ""};
    ScenarioFile file;
    if (auto n = root.opt("name")) file.name = n->str();

    Scenario& sc = file.scenario;
    sc.T = root.key("T").num();
    if (!(sc.T > 0.0)) throw ValidationError("T must be positive at /T");
    sc.p = root.key("p").num();

    Cur grids = root.key("grids");
    sc.U = parse_grid(grids.key("U"));
    sc.V = parse_grid(grids.key("V"));

    sc.dynamics = parse_dynamics(root.key("dynamics"), sc.U.point_dim(), sc.V.point_dim());
    sc.m0 = parse_measure(root.key("m0"));
    sc.y0 = parse_vec(root.key("y0"));
    sc.alpha = parse_alpha(root.key("alpha"), sc.T);
    sc.zeta = parse_control(root.key("zeta"), sc.T);

    file.N = root.key("N").integer();
    if (file.N < 1 || file.N > 65536)
        throw ValidationError("N out of range [1, 65536] at /N");
    sc.name = file.name;
    return file;
}

ProblemFile parse_problem_doc(const json& doc) {
    ScenarioFile base = parse_scenario_doc(doc);
    Cur root{&doc, ""};

    ProblemFile file;
    file.name = base.name;
    file.N = base.N;
    StackelbergProblem& prob = file.problem;
    prob.base = base.scenario;

    ExprDims dims{prob.base.dynamics.d, prob.base.dynamics.d_prime, -1, -1};
    prob.sigma_L = parse_expr(root.key("sigma_L"), Block::Payoff, dims);
    prob.sigma_F = parse_expr(root.key("sigma_F"), Block::Payoff, dims);

    const int K = prob.base.zeta.slices();
    if (auto lc = root.opt("leader_candidates")) {
        for (std::size_t i = 0; i < lc->length(); ++i)
            prob.leader_candidates.push_back(parse_control(lc->item(i), prob.base.T));
    } else {
        prob.leader_candidates = dirac_leader_menu(prob.base.V, K, prob.base.T);
    }
    if (auto fc = root.opt("follower_candidates")) {
        for (std::size_t i = 0; i < fc->length(); ++i)
            prob.follower_candidates.push_back(parse_alpha(fc->item(i), prob.base.T));
    } else {
        prob.follower_candidates = dirac_follower_menu(prob.base.m0, prob.base.U, K, prob.base.T);
    }
    if (auto tt = root.opt("tie_tol")) {
        prob.tie_tol = tt->num();
        if (prob.tie_tol < 0.0) throw ValidationError("tie_tol must be nonnegative at /tie_tol");
    }
    return file;
}

// ---- emission ----

ojson vec_j(const Vec& v) {
    ojson a = ojson::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

ojson dvec_j(const std::vector<double>& v) {
    ojson a = ojson::array();
    for (double x : v) a.push_back(x);
    return a;
}

ojson grid_j(const MetricGrid& grid) {
    ojson a = ojson::array();
    for (const Vec& p : grid.points) a.push_back(vec_j(p));
    return a;
}

ojson control_j(const RelaxedControl& xi) {
    ojson c;
    c["K"] = xi.slices();
    c["grid"] = grid_j(xi.grid());
    ojson rows = ojson::array();
    for (int r = 0; r < xi.kernel().rows(); ++r) {
        ojson row = ojson::array();
        for (int k = 0; k < xi.kernel().cols(); ++k) row.push_back(xi.kernel()(r, k));
        rows.push_back(std::move(row));
    }
    c["kernel"] = std::move(rows);
    return c;
}

ojson measure_j(const EmpiricalMeasure& m) {
    ojson out;
    out["dim"] = m.dim();
    ojson atoms = ojson::array();
    for (const Atom& a : m.atoms()) {
        ojson atom;
        atom["x"] = vec_j(a.x);
        atom["w"] = a.w;
        atoms.push_back(std::move(atom));
    }
    out["atoms"] = std::move(atoms);
    return out;
}

ojson alpha_j(const ControlDistribution& alpha) {
    ojson out;
    ojson atoms = ojson::array();
    for (const ControlAtom& a : alpha.atoms()) {
        ojson atom;
        atom["x0"] = vec_j(a.x0);
        atom["xi"] = control_j(a.xi);
        atom["w"] = a.w;
        atoms.push_back(std::move(atom));
    }
    out["atoms"] = std::move(atoms);
    return out;
}

ojson expr_list_j(const std::vector<Expression>& list) {
    ojson a = ojson::array();
    for (const Expression& e : list) a.push_back(e.text());
    return a;
}

ojson scenario_j(const ScenarioFile& file) {
    const Scenario& sc = file.scenario;
    ojson out;
    if (!file.name.empty()) out["name"] = file.name;
    ojson dyn;
    dyn["d"] = sc.dynamics.d;
    dyn["d_prime"] = sc.dynamics.d_prime;
    dyn["f_I"] = expr_list_j(sc.dynamics.f_I);
    dyn["f_II"] = expr_list_j(sc.dynamics.f_II);
    dyn["g"] = expr_list_j(sc.dynamics.g);
    dyn["A"] = sc.dynamics.A;
    ojson table = ojson::array();
    for (const LipschitzEntry& e : sc.dynamics.lipschitz_table) {
        ojson entry;
        entry["c"] = e.c;
        entry["B_I"] = e.B_I;
        entry["B_II"] = e.B_II;
        entry["B_prime"] = e.B_prime;
        table.push_back(std::move(entry));
    }
    dyn["lipschitz_table"] = std::move(table);
    out["dynamics"] = std::move(dyn);
    out["m0"] = measure_j(sc.m0);
    out["y0"] = vec_j(sc.y0);
    ojson grids;
    grids["U"] = grid_j(sc.U);
    grids["V"] = grid_j(sc.V);
    out["grids"] = std::move(grids);
    out["alpha"] = alpha_j(sc.alpha);
    out["zeta"] = control_j(sc.zeta);
    out["T"] = sc.T;
    out["p"] = sc.p;
    out["N"] = file.N;
    return out;
}

std::string finish(const ojson& doc) { return doc.dump(2) + "\n"; }

}  // namespace

bool is_problem_text(const std::string& text) {
    json doc = parse_document(text);
    return doc.is_object() && doc.contains("sigma_L");
}

ScenarioFile parse_scenario(const std::string& text) {
    json doc = parse_document(text);
    return parse_scenario_doc(doc);
}

ProblemFile parse_problem(const std::string& text) {
    json doc = parse_document(text);
    return parse_problem_doc(doc);
}

Perturbation parse_perturbation(const std::string& text, const Scenario& base) {
    json doc = parse_document(text);
    Cur root{&doc, ""};
    Perturbation pert;
    ExprDims dims{base.dynamics.d, base.dynamics.d_prime, base.U.point_dim(),
                  base.V.point_dim()};
    if (auto c = root.opt("df_I"))
        pert.df_I = parse_expr_list(*c, Block::FI, dims,
                                    static_cast<std::size_t>(base.dynamics.d));
    if (auto c = root.opt("df_II"))
        pert.df_II = parse_expr_list(*c, Block::FII, dims,
                                     static_cast<std::size_t>(base.dynamics.d));
    if (auto c = root.opt("dg"))
        pert.dg = parse_expr_list(*c, Block::G, dims,
                                  static_cast<std::size_t>(base.dynamics.d_prime));
    if (auto c = root.opt("dm0_shift")) pert.dm0_shift = parse_vec(*c);
    if (auto c = root.opt("dy0_shift")) pert.dy0_shift = parse_vec(*c);
    if (auto c = root.opt("zeta_target")) pert.zeta_target = parse_control(*c, base.T);
    if (auto c = root.opt("alpha_target")) pert.alpha_target = parse_alpha(*c, base.T);
    return pert;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

double scenario_ceiling(const Scenario& sc) {
    return growth_envelope_value(sc.y0.norm(), sigma_p_moment(sc.m0, sc.p), sc.dynamics.A, sc.T) *
           (1.0 + 1e-9);
}

void validate_loaded_scenario(const Scenario& sc) {
    validate_scenario(sc);
    const double c = scenario_ceiling(sc);
    sc.dynamics.entry_for(c);  // the estimates read constants at the envelope radius
    SamplerConfig cfg;
    cfg.T = sc.T;
    cfg.p = sc.p;
    ConstantsReport rep = validate_dynamics_constants(sc.dynamics, c, cfg);
    if (!rep.pass) {
        std::string msg = "declared dynamics constants fail sampling at c = " + fmt_g17(c) + ":";
        for (const ConstantsWitness& w : rep.violations)
            msg += " " + w.constant + " observed " + fmt_g17(w.observed) + " > declared " +
                   fmt_g17(w.declared) + ";";
        throw ValidationError(msg);
    }
}

ScenarioFile load_scenario(const std::string& path) {
    ScenarioFile file = parse_scenario(read_text_file(path));
    validate_loaded_scenario(file.scenario);
    return file;
}

ProblemFile load_problem(const std::string& path) {
    ProblemFile file = parse_problem(read_text_file(path));
    validate_loaded_scenario(file.problem.base);
    validate_problem(file.problem);
    return file;
}

Perturbation load_perturbation(const std::string& path, const Scenario& base) {
    return parse_perturbation(read_text_file(path), base);
}

std::string scenario_json(const ScenarioFile& file) { return finish(scenario_j(file)); }

std::string problem_json(const ProblemFile& file) {
    ScenarioFile base{file.name, file.problem.base, file.N};
    ojson out = scenario_j(base);
    out["sigma_L"] = file.problem.sigma_L.text();
    out["sigma_F"] = file.problem.sigma_F.text();
    ojson lc = ojson::array();
    for (const RelaxedControl& z : file.problem.leader_candidates) lc.push_back(control_j(z));
    out["leader_candidates"] = std::move(lc);
    ojson fc = ojson::array();
    for (const ControlDistribution& a : file.problem.follower_candidates)
        fc.push_back(alpha_j(a));
    out["follower_candidates"] = std::move(fc);
    out["tie_tol"] = file.problem.tie_tol;
    return finish(out);
}

std::string perturbation_json(const Perturbation& pert) {
    ojson out = ojson::object();
    if (!pert.df_I.empty()) out["df_I"] = expr_list_j(pert.df_I);
    if (!pert.df_II.empty()) out["df_II"] = expr_list_j(pert.df_II);
    if (!pert.dg.empty()) out["dg"] = expr_list_j(pert.dg);
    if (pert.dm0_shift.size() > 0) out["dm0_shift"] = vec_j(pert.dm0_shift);
    if (pert.dy0_shift.size() > 0) out["dy0_shift"] = vec_j(pert.dy0_shift);
    if (pert.zeta_target) out["zeta_target"] = control_j(*pert.zeta_target);
    if (pert.alpha_target) out["alpha_target"] = alpha_j(*pert.alpha_target);
    return finish(out);
}

std::string motion_csv(const Motion& motion, double p) {
    std::string out = "t";
    const int dp = motion.y.dim();
    for (int i = 0; i < dp; ++i) out += ",y_" + std::to_string(i);
    out += ",sigma_p\n";
    for (std::size_t k = 0; k < motion.time_grid.size(); ++k) {
        const double t = motion.time_grid[k];
        out += fmt_g17(t);
        const Vec& y = motion.y.values[k];
        for (int i = 0; i < dp; ++i) out += "," + fmt_g17(y[i]);
        const EmpiricalMeasure m =
            k < motion.m_path.size() ? motion.m_path[k] : motion.measure_at(t);
        out += "," + fmt_g17(sigma_p_moment(m, p)) + "\n";
    }
    return out;
}

std::string motion_json(const Motion& motion, double p) {
    ojson out;
    out["time_grid"] = dvec_j(motion.time_grid);
    ojson yrows = ojson::array();
    for (const Vec& y : motion.y.values) yrows.push_back(vec_j(y));
    out["y"] = std::move(yrows);
    ojson curves = ojson::array();
    for (int i = 0; i < motion.chi.size(); ++i) {
        ojson c;
        c["w"] = motion.chi.weight(i);
        ojson rows = ojson::array();
        for (const Vec& x : motion.chi.curve(i)) rows.push_back(vec_j(x));
        c["x"] = std::move(rows);
        curves.push_back(std::move(c));
    }
    out["curves"] = std::move(curves);
    ojson sig = ojson::array();
    for (std::size_t k = 0; k < motion.time_grid.size(); ++k) {
        const EmpiricalMeasure m = k < motion.m_path.size()
                                       ? motion.m_path[k]
                                       : motion.measure_at(motion.time_grid[k]);
        sig.push_back(sigma_p_moment(m, p));
    }
    out["sigma_p"] = std::move(sig);
    out["iterations"] = motion.iterations;
    out["residual"] = motion.residual;
    return finish(out);
}

Motion parse_motion(const std::string& text) {
    json doc = parse_document(text);
    Cur root{&doc, ""};
    Motion mo;
    mo.time_grid = parse_dvec(root.key("time_grid"));
    if (mo.time_grid.size() < 2) throw ValidationError("time_grid needs two nodes at /time_grid");

    Cur yc = root.key("y");
    if (yc.length() != mo.time_grid.size())
        throw ValidationError("y rows do not match time_grid at /y");
    mo.y.times = mo.time_grid;
    for (std::size_t k = 0; k < yc.length(); ++k) mo.y.values.push_back(parse_vec(yc.item(k)));

    Cur cc = root.key("curves");
    if (cc.length() == 0) throw ValidationError("motion carries no curves at /curves");
    Cur first = cc.item(0).key("x");
    if (first.length() == 0) throw ValidationError("empty curve at /curves/0/x");
    const int dim = static_cast<int>(first.item(0).length());
    mo.chi = TrajectoryBundle(mo.time_grid, dim);
    for (std::size_t i = 0; i < cc.length(); ++i) {
        Cur c = cc.item(i);
        Cur xs = c.key("x");
        if (xs.length() != mo.time_grid.size())
            throw ValidationError("curve rows do not match time_grid at " + xs.where());
        std::vector<Vec> values;
        values.reserve(xs.length());
        for (std::size_t k = 0; k < xs.length(); ++k) values.push_back(parse_vec(xs.item(k)));
        try {
            mo.chi.add_curve(std::move(values), c.key("w").num());
        } catch (const ValidationError& e) {
            throw ValidationError(c.where() + ": " + e.what());
        }
    }
    mo.m_path.reserve(mo.time_grid.size());
    for (double t : mo.time_grid) mo.m_path.push_back(mo.chi.at_time(t));
    mo.iterations = root.key("iterations").integer();
    mo.residual = root.key("residual").num();
    return mo;
}

std::string report_json(const KeyEstimateReport& report, double eps) {
    ojson out;
    out["eps"] = eps;
    out["times"] = dvec_j(report.times);
    out["lhs"] = dvec_j(report.lhs);
    out["tilde_a"] = dvec_j(report.tilde_a);
    out["bar_a"] = dvec_j(report.bar_a);
    out["hat_a_integral"] = dvec_j(report.hat_a_integral);
    out["dist_f"] = report.dist_f;
    out["dist_g"] = report.dist_g;
    out["L_star"] = report.L_star;
    out["C0"] = report.C0;
    out["C1"] = report.C1;
    out["C2"] = report.C2;
    out["C3"] = report.C3;
    out["C4"] = report.C4;
    out["rhs"] = dvec_j(report.rhs);
    out["max_violation"] = report.max_violation;
    out["pass"] = report.pass;
    return finish(out);
}

KeyEstimateReport parse_report(const std::string& text) {
    json doc = parse_document(text);
    Cur root{&doc, ""};
    KeyEstimateReport rep;
    rep.times = parse_dvec(root.key("times"));
    rep.lhs = parse_dvec(root.key("lhs"));
    rep.tilde_a = parse_dvec(root.key("tilde_a"));
    rep.bar_a = parse_dvec(root.key("bar_a"));
    rep.hat_a_integral = parse_dvec(root.key("hat_a_integral"));
    const std::size_t n = rep.times.size();
    if (rep.lhs.size() != n || rep.tilde_a.size() != n || rep.bar_a.size() != n ||
        rep.hat_a_integral.size() != n)
        throw ValidationError("report columns disagree in length at /times");
    rep.dist_f = root.key("dist_f").num();
    rep.dist_g = root.key("dist_g").num();
    rep.L_star = root.key("L_star").num();
    rep.C0 = root.key("C0").num();
    rep.C1 = root.key("C1").num();
    rep.C2 = root.key("C2").num();
    rep.C3 = root.key("C3").num();
    rep.C4 = root.key("C4").num();
    rep.rhs = parse_dvec(root.key("rhs"));
    if (rep.rhs.size() != n && !rep.rhs.empty())
        throw ValidationError("report columns disagree in length at /rhs");
    rep.max_violation = root.key("max_violation").num();
    rep.pass = root.key("pass").boolean();
    return rep;
}

std::string solution_json(const GameSolution& sol) {
    ojson out;
    out["zeta_star"] = sol.zeta_star;
    out["alpha_star"] = sol.alpha_star;
    out["leader_value"] = sol.leader_value;
    out["follower_value"] = sol.follower_value;
    ojson table = ojson::array();
    for (std::size_t z = 0; z < sol.best_response_table.size(); ++z) {
        const GameSolution::BestResponse& br = sol.best_response_table[z];
        ojson row;
        row["zeta"] = static_cast<int>(z);
        ojson alphas = ojson::array();
        for (int a : br.alphas) alphas.push_back(a);
        row["alphas"] = std::move(alphas);
        row["follower_value"] = br.follower_value;
        row["leader_value"] = br.leader_value;
        table.push_back(std::move(row));
    }
    out["table"] = std::move(table);
    return finish(out);
}

GameSolution parse_solution(const std::string& text) {
    json doc = parse_document(text);
    Cur root{&doc, ""};
    GameSolution sol;
    sol.zeta_star = root.key("zeta_star").integer();
    sol.alpha_star = root.key("alpha_star").integer();
    sol.leader_value = root.key("leader_value").num();
    sol.follower_value = root.key("follower_value").num();
    Cur tc = root.key("table");
    for (std::size_t z = 0; z < tc.length(); ++z) {
        Cur row = tc.item(z);
        GameSolution::BestResponse br;
        Cur ac = row.key("alphas");
        for (std::size_t i = 0; i < ac.length(); ++i) br.alphas.push_back(ac.item(i).integer());
        if (br.alphas.empty())
            throw ValidationError("empty best-response set at " + ac.where());
        br.follower_value = row.key("follower_value").num();
        br.leader_value = row.key("leader_value").num();
        sol.best_response_table.push_back(std::move(br));
    }
    if (sol.zeta_star < 0 ||
        static_cast<std::size_t>(sol.zeta_star) >= sol.best_response_table.size())
        throw ValidationError("zeta_star outside the table at /zeta_star");
    return sol;
}

std::string payoff_csv(const PayoffMatrix& payoffs) {
    std::string out = "alpha,zeta,follower,leader\n";
    for (int a = 0; a < payoffs.follower.rows(); ++a)
        for (int z = 0; z < payoffs.follower.cols(); ++z)
            out += std::to_string(a) + "," + std::to_string(z) + "," +
                   fmt_g17(payoffs.follower(a, z)) + "," + fmt_g17(payoffs.leader(a, z)) + "\n";
    return out;
}

std::string error_json(const std::string& type, const std::string& message,
                       std::optional<double> residual) {
    ojson err;
    err["type"] = type;
    err["message"] = message;
    if (residual) err["residual"] = *residual;
    ojson out;
    out["error"] = std::move(err);
    return finish(out);
}

ErrorInfo parse_error(const std::string& text) {
    json doc = parse_document(text);
    Cur root{&doc, ""};
    Cur err = root.key("error");
    ErrorInfo info;
    info.type = err.key("type").str();
    if (info.type != "validation" && info.type != "solver" && info.type != "internal")
        throw ValidationError("unknown error type at /error/type");
    info.message = err.key("message").str();
    if (auto r = err.opt("residual")) info.residual = r->num();
    return info;
}

}  // namespace mfm
