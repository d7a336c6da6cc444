#include "mfm/controls.hpp"

#include <cmath>

namespace mfm {

RelaxedControl::RelaxedControl(double horizon, ControlGrid grid, Mat kernel)
    : horizon_(horizon), grid_(std::move(grid)), kernel_(std::move(kernel)) {
    if (!(horizon_ > 0.0)) throw ValidationError("relaxed control: horizon must be positive");
    if (grid_.size() == 0) throw ValidationError("relaxed control: empty grid");
    if (kernel_.rows() < 1) throw ValidationError("relaxed control: needs at least one slice");
    if (kernel_.cols() != grid_.size())
        throw ValidationError("relaxed control: kernel width does not match grid");
    for (int k = 0; k < kernel_.rows(); ++k) {
        double row = 0.0;
        for (int u = 0; u < kernel_.cols(); ++u) {
            const double w = kernel_(k, u);
            if (!(w >= 0.0)) throw ValidationError("relaxed control: negative kernel weight");
            row += w;
        }
        if (std::abs(row - 1.0) > 1e-9)
            throw ValidationError("relaxed control: kernel row " + std::to_string(k) +
                                  " sums to " + std::to_string(row));
    }
}

int RelaxedControl::slice_of(double t) const {
    const int K = slices();
    int k = static_cast<int>(std::floor(t * K / horizon_));
    if (k < 0) k = 0;
    if (k >= K) k = K - 1;
    return k;
}

RelaxedControl RelaxedControl::mixed_with(const RelaxedControl& other, double s) const {
    if (slices() != other.slices())
        throw ValidationError("relaxed control: slice counts differ in mixture");
    if (grid_.size() != other.grid_.size())
        throw ValidationError("relaxed control: grids differ in mixture");
    if (std::abs(horizon_ - other.horizon_) > 1e-12)
        throw ValidationError("relaxed control: horizons differ in mixture");
    Mat k = (1.0 - s) * kernel_ + s * other.kernel_;
    // renormalize rows against accumulated rounding
    for (int r = 0; r < k.rows(); ++r) k.row(r) /= k.row(r).sum();
    return RelaxedControl(horizon_, grid_, std::move(k));
}

EmpiricalMeasure RelaxedControl::as_domain_measure() const {
    const int K = slices();
    const int G = grid_.size();
    const int pd = grid_.point_dim();
    const double width = horizon_ / K;
    std::vector<Atom> atoms;
    atoms.reserve(static_cast<std::size_t>(K * G));
    for (int k = 0; k < K; ++k) {
        const double mid = (k + 0.5) * width;
        for (int u = 0; u < G; ++u) {
            const double w = width * kernel_(k, u);
            if (w <= 0.0) continue;
            Vec enc(pd + 1);
            enc[0] = mid;
            enc.tail(pd) = grid_.points[static_cast<std::size_t>(u)];
            atoms.push_back({std::move(enc), w});
        }
    }
    return EmpiricalMeasure(pd + 1, std::move(atoms));
}

RelaxedControl dirac_control(const ControlGrid& grid, const std::vector<int>& index_path,
                             int slices, double horizon) {
    if (static_cast<int>(index_path.size()) != slices)
        throw ValidationError("dirac control: index path length does not match slice count");
    Mat kernel = Mat::Zero(slices, grid.size());
    for (int k = 0; k < slices; ++k) {
        const int idx = index_path[static_cast<std::size_t>(k)];
        if (idx < 0 || idx >= grid.size())
            throw ValidationError("dirac control: grid index out of range");
        kernel(k, idx) = 1.0;
    }
    return RelaxedControl(horizon, grid, std::move(kernel));
}

RelaxedControl dirac_control(const ControlGrid& grid, int index, int slices, double horizon) {
    return dirac_control(grid, std::vector<int>(static_cast<std::size_t>(slices), index), slices,
                         horizon);
}

Vec integrate_control(const std::function<Vec(double, const Vec&)>& phi,
                      const RelaxedControl& xi, double t_end) {
    if (t_end < 0.0 || t_end > xi.horizon() * (1.0 + 1e-12))
        throw ValidationError("integrate_control: t_end outside [0, horizon]");
    const int K = xi.slices();
    const int G = xi.grid().size();
    const double width = xi.horizon() / K;
    Vec acc;
    for (int k = 0; k < K; ++k) {
        const double lo = k * width;
        if (lo >= t_end) break;
        const double len = std::min(t_end, (k + 1) * width) - lo;
        for (int u = 0; u < G; ++u) {
            const double w = xi.kernel()(k, u);
            if (w <= 0.0) continue;
            Vec val = phi(lo, xi.grid().points[static_cast<std::size_t>(u)]);
            if (acc.size() == 0) acc = Vec::Zero(val.size());
            acc += (len * w) * val;
        }
    }
    if (acc.size() == 0) {
        // t_end == 0 or fully zero kernel rows never happen, but keep a shape.
        Vec probe = phi(0.0, xi.grid().points[0]);
        return Vec::Zero(probe.size());
    }
    return acc;
}

double integrate_control_scalar(const std::function<double(double, const Vec&)>& phi,
                                const RelaxedControl& xi, double t_end) {
    Vec r = integrate_control(
        [&](double t, const Vec& u) {
            Vec v(1);
            v[0] = phi(t, u);
            return v;
        },
        xi, t_end);
    return r[0];
}

ControlDistribution::ControlDistribution(std::vector<ControlAtom> atoms)
    : atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw ValidationError("control distribution: no atoms");
    const int d = static_cast<int>(atoms_[0].x0.size());
    double total = 0.0;
    for (const auto& a : atoms_) {
        if (static_cast<int>(a.x0.size()) != d)
            throw ValidationError("control distribution: start point dimension mismatch");
        if (!(a.w >= 0.0)) throw ValidationError("control distribution: negative weight");
        total += a.w;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw ValidationError("control distribution: weights sum to " + std::to_string(total));
}

double ControlDistribution::total_weight() const {
    double s = 0.0;
    for (const auto& a : atoms_) s += a.w;
    return s;
}

int ControlDistribution::state_dim() const {
    return atoms_.empty() ? 0 : static_cast<int>(atoms_[0].x0.size());
}

EmpiricalMeasure ControlDistribution::x0_marginal() const {
    std::vector<Atom> atoms;
    atoms.reserve(atoms_.size());
    for (const auto& a : atoms_) atoms.push_back({a.x0, a.w});
    return EmpiricalMeasure(state_dim(), std::move(atoms));
}

CompatibilityReport validate_compatibility(const ControlDistribution& alpha,
                                           const EmpiricalMeasure& m0) {
    CompatibilityReport rep;
    rep.gap = wasserstein_p(alpha.x0_marginal().merged(), m0.merged(), 1.0).distance;
    rep.pass = rep.gap <= 1e-9;
    return rep;
}

NetDomain control_net_domain(const ControlGrid& grid, double horizon) {
    NetDomain dom;
    dom.t_min = 0.0;
    dom.t_max = horizon;
    dom.grid = grid;
    return dom;
}

double control_metric(const RelaxedControl& xi, const RelaxedControl& xi2,
                      const LipschitzNet& net) {
    return narrow_metric_d(xi.as_domain_measure(), xi2.as_domain_measure(), net);
}

AlphaDistanceResult alpha_distance(const ControlDistribution& alpha,
                                   const ControlDistribution& alpha2, double p,
                                   const LipschitzNet& net) {
    if (p < 1.0) throw ValidationError("alpha_distance: p must be >= 1");
    const int n = alpha.size(), m = alpha2.size();

    // Net signatures once per control, then pair distances combine cheaply.
    std::vector<std::vector<double>> sig_a(static_cast<std::size_t>(n)),
        sig_b(static_cast<std::size_t>(m));
    std::vector<double> mass_a(static_cast<std::size_t>(n)), mass_b(static_cast<std::size_t>(m));
    for (int i = 0; i < n; ++i) {
        auto dm = alpha.atom(i).xi.as_domain_measure();
        mass_a[static_cast<std::size_t>(i)] = dm.total_mass();
        sig_a[static_cast<std::size_t>(i)] = net_signature(dm, net);
    }
    for (int j = 0; j < m; ++j) {
        auto dm = alpha2.atom(j).xi.as_domain_measure();
        mass_b[static_cast<std::size_t>(j)] = dm.total_mass();
        sig_b[static_cast<std::size_t>(j)] = net_signature(dm, net);
    }

    Mat C(n, m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
            const double ground =
                (alpha.atom(i).x0 - alpha2.atom(j).x0).norm() +
                narrow_metric_from_signatures(mass_a[static_cast<std::size_t>(i)],
                                              sig_a[static_cast<std::size_t>(i)],
                                              mass_b[static_cast<std::size_t>(j)],
                                              sig_b[static_cast<std::size_t>(j)], net);
            C(i, j) = std::pow(ground, p);
        }

    Vec wa(n), wb(m);
    for (int i = 0; i < n; ++i) wa[i] = alpha.atom(i).w;
    for (int j = 0; j < m; ++j) wb[j] = alpha2.atom(j).w;

    TransportResult tr = optimal_transport_plan(C, wa, wb);
    AlphaDistanceResult res;
    res.plan = std::move(tr.plan);
    res.distance = std::pow(std::max(tr.cost, 0.0), 1.0 / p);
    return res;
}

}  // namespace mfm
