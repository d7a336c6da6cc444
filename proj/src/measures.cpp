#include "mfm/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace mfm {

EmpiricalMeasure::EmpiricalMeasure(int dim, std::vector<Atom> atoms)
    : dim_(dim), atoms_(std::move(atoms)) {
    if (dim_ <= 0) throw ValidationError("measure: dimension must be positive");
    if (atoms_.empty()) throw ValidationError("measure: no atoms");
    for (const auto& a : atoms_) {
        if (a.x.size() != dim_) throw ValidationError("measure: atom dimension mismatch");
        if (!(a.w >= 0.0)) throw ValidationError("measure: negative or NaN weight");
        for (int k = 0; k < dim_; ++k)
            if (!std::isfinite(a.x[k])) throw ValidationError("measure: non-finite coordinate");
    }
}

double EmpiricalMeasure::total_mass() const {
    double s = 0.0;
    for (const auto& a : atoms_) s += a.w;
    return s;
}

bool EmpiricalMeasure::is_probability(double tol) const {
    return std::abs(total_mass() - 1.0) <= tol;
}

void EmpiricalMeasure::require_probability(const char* who) const {
    if (!is_probability())
        throw ValidationError(std::string(who) + ": not a probability (mass " +
                              std::to_string(total_mass()) + ")");
}

Vec EmpiricalMeasure::weights() const {
    Vec w(size());
    for (int i = 0; i < size(); ++i) w[i] = atoms_[static_cast<std::size_t>(i)].w;
    return w;
}

EmpiricalMeasure EmpiricalMeasure::map(const std::function<Vec(const Vec&)>& h) const {
    std::vector<Atom> out;
    out.reserve(atoms_.size());
    int out_dim = -1;
    for (const auto& a : atoms_) {
        Vec y = h(a.x);
        if (out_dim < 0) out_dim = static_cast<int>(y.size());
        out.push_back({std::move(y), a.w});
    }
    return EmpiricalMeasure(out_dim, std::move(out));
}

EmpiricalMeasure EmpiricalMeasure::merged(double tol) const {
    std::vector<Atom> out;
    for (const auto& a : atoms_) {
        bool found = false;
        for (auto& o : out) {
            if ((o.x - a.x).norm() <= tol) {
                o.w += a.w;
                found = true;
                break;
            }
        }
        if (!found) out.push_back(a);
    }
    return EmpiricalMeasure(dim_, std::move(out));
}

double sigma_p_moment(const EmpiricalMeasure& m, double p) {
    if (p < 1.0) throw ValidationError("sigma_p: p must be >= 1");
    m.require_probability("sigma_p");
    double s = 0.0;
    for (const auto& a : m.atoms()) s += a.w * std::pow(a.x.norm(), p);
    return std::pow(s, 1.0 / p);
}

WassersteinResult wasserstein_p(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                double p, const TransportOptions& opts) {
    if (mu.dim() != nu.dim()) throw ValidationError("wasserstein: dimension mismatch");
    if (p < 1.0) throw ValidationError("wasserstein: p must be >= 1");
    mu.require_probability("wasserstein");
    nu.require_probability("wasserstein");

    const int n = mu.size(), m = nu.size();
    Mat C(n, m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
            C(i, j) = std::pow((mu.atom(i).x - nu.atom(j).x).norm(), p);

    TransportResult tr = optimal_transport_plan(C, mu.weights(), nu.weights(), opts);
    WassersteinResult res;
    res.plan = std::move(tr.plan);
    res.exact = tr.exact;
    res.duality_gap = tr.duality_gap;
    res.distance = std::pow(std::max(tr.cost, 0.0), 1.0 / p);
    return res;
}

EmpiricalMeasure push_forward(const EmpiricalMeasure& m,
                              const std::function<Vec(const Vec&)>& h) {
    return m.map(h);
}

// ---- metric grid / net ----

MetricGrid MetricGrid::euclidean(std::vector<Vec> pts) {
    MetricGrid g;
    g.points = std::move(pts);
    const int n = g.size();
    if (n == 0) throw ValidationError("metric grid: empty point list");
    g.dist = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            g.dist(i, j) = g.dist(j, i) = (g.points[static_cast<std::size_t>(i)] -
                                           g.points[static_cast<std::size_t>(j)]).norm();
    return g;
}

std::pair<double, int> NetDomain::locate(const Vec& w) const {
    const int pd = grid.point_dim();
    if (w.size() != pd + 1) throw ValidationError("net domain: encoded atom has wrong dimension");
    const double t = w[0];
    const double span = std::max(1.0, t_max - t_min);
    if (t < t_min - 1e-9 * span || t > t_max + 1e-9 * span)
        throw ValidationError("net domain: time coordinate outside the interval");
    const Vec u = w.tail(pd);
    int best = -1;
    double bd = std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid.size(); ++i) {
        const double d = (u - grid.points[static_cast<std::size_t>(i)]).norm();
        if (d < bd) { bd = d; best = i; }
    }
    if (best < 0 || bd > 1e-9 * (1.0 + u.norm()))
        throw ValidationError("net domain: atom does not sit on a grid point");
    return {t, best};
}

double NetFunction::eval(const NetDomain& dom, double t, int grid_index) const {
    double mn = std::numeric_limits<double>::infinity();
    for (const auto& a : anchors) {
        const double v = a.b + level * dom.metric(t, grid_index, a.t, a.grid_index);
        if (v < mn) mn = v;
    }
    return clamp_unit(mn);
}

LipschitzNet build_lipschitz_net(const NetDomain& domain, int levels, int per_level,
                                 std::uint64_t seed) {
    if (levels < 1 || per_level < 1)
        throw ValidationError("lipschitz net: levels and per_level must be >= 1");
    if (domain.grid.size() == 0) throw ValidationError("lipschitz net: empty grid");
    LipschitzNet net;
    net.domain = domain;
    net.levels = levels;
    net.per_level = per_level;
    net.seed = seed;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ut(domain.t_min, domain.t_max);
    std::uniform_int_distribution<int> ui(0, domain.grid.size() - 1);
    std::uniform_real_distribution<double> ub(-1.0, 1.0);
    std::uniform_int_distribution<int> un(2, 5);
    net.funcs.resize(static_cast<std::size_t>(levels));
    for (int l = 1; l <= levels; ++l) {
        auto& bucket = net.funcs[static_cast<std::size_t>(l - 1)];
        bucket.resize(static_cast<std::size_t>(per_level));
        for (auto& f : bucket) {
            f.level = l;
            const int na = un(rng);
            f.anchors.resize(static_cast<std::size_t>(na));
            for (auto& a : f.anchors) {
                a.t = ut(rng);
                a.grid_index = ui(rng);
                a.b = ub(rng);
            }
        }
    }
    return net;
}

std::vector<double> net_signature(const EmpiricalMeasure& m, const LipschitzNet& net) {
    // Resolve every atom onto the domain once, then sweep the functions.
    std::vector<std::pair<double, int>> located;
    located.reserve(static_cast<std::size_t>(m.size()));
    for (const auto& a : m.atoms()) located.push_back(net.domain.locate(a.x));

    std::vector<double> sig;
    sig.reserve(static_cast<std::size_t>(net.levels * net.per_level));
    for (const auto& bucket : net.funcs) {
        for (const auto& f : bucket) {
            double s = 0.0;
            for (int i = 0; i < m.size(); ++i)
                s += m.atom(i).w * f.eval(net.domain, located[static_cast<std::size_t>(i)].first,
                                          located[static_cast<std::size_t>(i)].second);
            sig.push_back(s);
        }
    }
    return sig;
}

double narrow_metric_from_signatures(double mass_a, const std::vector<double>& sig_a,
                                     double mass_b, const std::vector<double>& sig_b,
                                     const LipschitzNet& net) {
    if (sig_a.size() != sig_b.size() ||
        sig_a.size() != static_cast<std::size_t>(net.levels * net.per_level))
        throw ValidationError("narrow metric: signature size mismatch");
    double d = std::abs(mass_a - mass_b);
    std::size_t k = 0;
    double w = 1.0;
    for (int l = 1; l <= net.levels; ++l) {
        w *= 0.5;
        double mx = 0.0;
        for (int j = 0; j < net.per_level; ++j, ++k)
            mx = std::max(mx, std::abs(sig_a[k] - sig_b[k]));
        d += w * mx;
    }
    return d;
}

double narrow_metric_d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                       const LipschitzNet& net) {
    return narrow_metric_from_signatures(mu.total_mass(), net_signature(mu, net),
                                         nu.total_mass(), net_signature(nu, net), net);
}

std::vector<double> lipschitz_approx(const std::vector<double>& phi, const MetricGrid& grid,
                                     double l) {
    const int n = grid.size();
    if (static_cast<int>(phi.size()) != n)
        throw ValidationError("lipschitz_approx: value count does not match grid");
    if (l <= 0.0) throw ValidationError("lipschitz_approx: l must be positive");
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int w = 0; w < n; ++w) {
        double mn = std::numeric_limits<double>::infinity();
        for (int z = 0; z < n; ++z)
            mn = std::min(mn, phi[static_cast<std::size_t>(z)] + l * grid.dist(w, z));
        out[static_cast<std::size_t>(w)] = mn;
    }
    return out;
}

// ---- curves / bundles ----

Vec Curve::at(double t) const {
    if (times.empty()) throw ValidationError("curve: empty");
    if (t <= times.front()) return values.front();
    if (t >= times.back()) {
        const double over = t - times.back();
        if (over > 1e-9 * std::max(1.0, std::abs(times.back())))
            throw std::out_of_range("curve: time beyond grid");
        return values.back();
    }
    auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t hi = static_cast<std::size_t>(it - times.begin());
    const std::size_t lo = hi - 1;
    const double span = times[hi] - times[lo];
    const double a = span > 0.0 ? (t - times[lo]) / span : 0.0;
    return (1.0 - a) * values[lo] + a * values[hi];
}

TrajectoryBundle::TrajectoryBundle(std::vector<double> time_grid, int dim)
    : times_(std::move(time_grid)), dim_(dim) {
    if (times_.size() < 2) throw ValidationError("bundle: time grid needs at least two nodes");
    for (std::size_t i = 1; i < times_.size(); ++i)
        if (!(times_[i] > times_[i - 1]))
            throw ValidationError("bundle: time grid must be strictly increasing");
}

void TrajectoryBundle::add_curve(std::vector<Vec> values, double weight) {
    if (values.size() != times_.size())
        throw ValidationError("bundle: curve length does not match time grid");
    for (const auto& v : values)
        if (v.size() != dim_) throw ValidationError("bundle: curve dimension mismatch");
    if (!(weight >= 0.0)) throw ValidationError("bundle: negative weight");
    curves_.push_back({std::move(values), weight});
}

std::pair<int, double> TrajectoryBundle::bracket(double t) const {
    const double lo = times_.front(), hi = times_.back();
    const double pad = 1e-9 * std::max(1.0, hi - lo);
    if (t < lo - pad || t > hi + pad) throw std::out_of_range("bundle: time outside grid span");
    if (t <= lo) return {0, 0.0};
    if (t >= hi) return {static_cast<int>(times_.size()) - 2, 1.0};
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const int hi_ix = static_cast<int>(it - times_.begin());
    const int lo_ix = hi_ix - 1;
    const double span = times_[static_cast<std::size_t>(hi_ix)] - times_[static_cast<std::size_t>(lo_ix)];
    return {lo_ix, span > 0.0 ? (t - times_[static_cast<std::size_t>(lo_ix)]) / span : 0.0};
}

Vec TrajectoryBundle::value_at(int i, double t) const {
    const auto [lo, a] = bracket(t);
    const auto& v = curves_[static_cast<std::size_t>(i)].values;
    return (1.0 - a) * v[static_cast<std::size_t>(lo)] + a * v[static_cast<std::size_t>(lo + 1)];
}

EmpiricalMeasure TrajectoryBundle::at_time(double t) const {
    if (curves_.empty()) throw ValidationError("bundle: no curves");
    const auto [lo, a] = bracket(t);
    std::vector<Atom> atoms;
    atoms.reserve(curves_.size());
    for (const auto& c : curves_) {
        atoms.push_back({(1.0 - a) * c.values[static_cast<std::size_t>(lo)] +
                             a * c.values[static_cast<std::size_t>(lo + 1)],
                         c.weight});
    }
    return EmpiricalMeasure(dim_, std::move(atoms));
}

}  // namespace mfm
