#include "mfm/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <utility>

namespace mfm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Supplies/demands below this are treated as exhausted.
constexpr double kDone = 1e-15;
// Residual back arcs only exist where the forward flow is meaningfully positive.
constexpr double kFlowEps = 1e-16;

// Successive shortest paths with Dijkstra potentials on the complete bipartite
// graph. Exact up to floating-point rounding; every augmentation exhausts a
// supply, a demand, or a residual back arc, so termination is finite.
TransportResult solve_exact(const Mat& C, const Vec& a, const Vec& b) {
    const int n = static_cast<int>(a.size());
    const int m = static_cast<int>(b.size());
    Vec supply = a, demand = b;
    Vec pot_u = Vec::Zero(n), pot_v = Vec::Zero(m);
    Mat flow = Mat::Zero(n, m);

    double remaining = supply.sum();
    const long max_rounds = 64L * (n + m) + 64;
    long rounds = 0;

    std::vector<double> dist_u(n), dist_v(m);
    std::vector<int> par_v(m);   // demand j reached from supply par_v[j]
    std::vector<int> par_u(n);   // supply i reached back from demand par_u[i]
    std::vector<char> done_u(n), done_v(m);

    while (remaining > kDone) {
        if (++rounds > max_rounds)
            throw SolverError("transport: augmentation limit exceeded", remaining);

        std::fill(dist_u.begin(), dist_u.end(), kInf);
        std::fill(dist_v.begin(), dist_v.end(), kInf);
        std::fill(par_v.begin(), par_v.end(), -1);
        std::fill(par_u.begin(), par_u.end(), -1);
        std::fill(done_u.begin(), done_u.end(), 0);
        std::fill(done_v.begin(), done_v.end(), 0);
        for (int i = 0; i < n; ++i)
            if (supply[i] > kDone) dist_u[i] = 0.0;

        // Dense Dijkstra over the n+m node set.
        while (true) {
            int best = -1;
            bool best_is_u = true;
            double bd = kInf;
            for (int i = 0; i < n; ++i)
                if (!done_u[i] && dist_u[i] < bd) { bd = dist_u[i]; best = i; best_is_u = true; }
            for (int j = 0; j < m; ++j)
                if (!done_v[j] && dist_v[j] < bd) { bd = dist_v[j]; best = j; best_is_u = false; }
            if (best < 0) break;
            if (best_is_u) {
                const int i = best;
                done_u[i] = 1;
                for (int j = 0; j < m; ++j) {
                    if (done_v[j]) continue;
                    const double rc = C(i, j) - pot_u[i] - pot_v[j];
                    const double cand = dist_u[i] + (rc > 0.0 ? rc : 0.0);
                    if (cand < dist_v[j]) { dist_v[j] = cand; par_v[j] = i; }
                }
            } else {
                const int j = best;
                done_v[j] = 1;
                for (int i = 0; i < n; ++i) {
                    if (done_u[i] || flow(i, j) <= kFlowEps) continue;
                    const double rc = pot_u[i] + pot_v[j] - C(i, j);
                    const double cand = dist_v[j] + (rc > 0.0 ? rc : 0.0);
                    if (cand < dist_u[i]) { dist_u[i] = cand; par_u[i] = j; }
                }
            }
        }

        int target = -1;
        double td = kInf;
        for (int j = 0; j < m; ++j)
            if (demand[j] > kDone && dist_v[j] < td) { td = dist_v[j]; target = j; }
        if (target < 0)
            throw SolverError("transport: no augmenting path (unbalanced weights?)", remaining);

        // Walk back to a source, recording capacity.
        double amt = demand[target];
        int j = target;
        int source = -1;
        while (true) {
            const int i = par_v[j];
            const int jprev = par_u[i];
            if (jprev < 0) { source = i; break; }
            amt = std::min(amt, flow(i, jprev));
            j = jprev;
        }
        amt = std::min(amt, supply[source]);

        j = target;
        while (true) {
            const int i = par_v[j];
            flow(i, j) += amt;
            const int jprev = par_u[i];
            if (jprev < 0) break;
            flow(i, jprev) = std::max(0.0, flow(i, jprev) - amt);
            j = jprev;
        }
        supply[source] -= amt;
        demand[target] -= amt;
        remaining -= amt;

        // Keep complementary slackness: shift duals by the clamped distances so
        // every arc on the shortest-path tree becomes tight.
        const double cap = td;
        for (int i = 0; i < n; ++i) pot_u[i] -= std::min(dist_u[i], cap);
        for (int jj = 0; jj < m; ++jj) pot_v[jj] += std::min(dist_v[jj], cap);
    }

    TransportResult res;
    res.exact = true;
    res.duality_gap = 0.0;
    for (int i = 0; i < n; ++i)
        for (int jj = 0; jj < m; ++jj)
            if (flow(i, jj) > 0.0) {
                res.plan.pairs.push_back({i, jj, flow(i, jj)});
                res.cost += flow(i, jj) * C(i, jj);
            }
    res.plan.cost = res.cost;
    return res;
}

double logsumexp_row(const Vec& v) {
    const double mx = v.maxCoeff();
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (int i = 0; i < v.size(); ++i) s += std::exp(v[i] - mx);
    return mx + std::log(s);
}

// Successive shortest paths restricted to an explicit arc list, heap Dijkstra.
// Used to extract an exact flow on the near-tight arcs of the entropic duals.
struct SparseFlow {
    bool feasible = false;
    double cost = 0.0;
    std::vector<PlanEntry> pairs;
    Vec pot_u, pot_v;
};

SparseFlow sparse_min_cost_flow(int n, int m, const std::vector<int>& arc_i,
                                const std::vector<int>& arc_j, const std::vector<double>& arc_c,
                                const Vec& a, const Vec& b) {
    const std::size_t num_arcs = arc_i.size();
    std::vector<std::vector<int>> adj_u(static_cast<std::size_t>(n));
    std::vector<std::vector<int>> adj_v(static_cast<std::size_t>(m));
    for (std::size_t k = 0; k < num_arcs; ++k) {
        adj_u[static_cast<std::size_t>(arc_i[k])].push_back(static_cast<int>(k));
        adj_v[static_cast<std::size_t>(arc_j[k])].push_back(static_cast<int>(k));
    }
    std::vector<double> flow(num_arcs, 0.0);
    Vec supply = a, demand = b;
    Vec pot_u = Vec::Zero(n), pot_v = Vec::Zero(m);
    double remaining = supply.sum();

    std::vector<double> dist_u(static_cast<std::size_t>(n)), dist_v(static_cast<std::size_t>(m));
    std::vector<int> par_u(static_cast<std::size_t>(n)), par_v(static_cast<std::size_t>(m));
    std::vector<char> done_u(static_cast<std::size_t>(n)), done_v(static_cast<std::size_t>(m));
    using QE = std::pair<double, int>;  // (dist, node); node < n is supply side
    const long max_rounds = 256L * (n + m) + 256;
    long rounds = 0;

    while (remaining > kDone) {
        if (++rounds > max_rounds) return {};
        std::fill(dist_u.begin(), dist_u.end(), kInf);
        std::fill(dist_v.begin(), dist_v.end(), kInf);
        std::fill(par_u.begin(), par_u.end(), -1);
        std::fill(par_v.begin(), par_v.end(), -1);
        std::fill(done_u.begin(), done_u.end(), 0);
        std::fill(done_v.begin(), done_v.end(), 0);
        std::priority_queue<QE, std::vector<QE>, std::greater<QE>> heap;
        for (int i = 0; i < n; ++i)
            if (supply[i] > kDone) { dist_u[static_cast<std::size_t>(i)] = 0.0; heap.push({0.0, i}); }

        while (!heap.empty()) {
            const auto [d, node] = heap.top();
            heap.pop();
            if (node < n) {
                const int i = node;
                if (done_u[static_cast<std::size_t>(i)] || d > dist_u[static_cast<std::size_t>(i)]) continue;
                done_u[static_cast<std::size_t>(i)] = 1;
                for (int k : adj_u[static_cast<std::size_t>(i)]) {
                    const int j = arc_j[static_cast<std::size_t>(k)];
                    if (done_v[static_cast<std::size_t>(j)]) continue;
                    const double rc = arc_c[static_cast<std::size_t>(k)] - pot_u[i] - pot_v[j];
                    const double cand = d + (rc > 0.0 ? rc : 0.0);
                    if (cand < dist_v[static_cast<std::size_t>(j)]) {
                        dist_v[static_cast<std::size_t>(j)] = cand;
                        par_v[static_cast<std::size_t>(j)] = k;
                        heap.push({cand, n + j});
                    }
                }
            } else {
                const int j = node - n;
                if (done_v[static_cast<std::size_t>(j)] || d > dist_v[static_cast<std::size_t>(j)]) continue;
                done_v[static_cast<std::size_t>(j)] = 1;
                for (int k : adj_v[static_cast<std::size_t>(j)]) {
                    if (flow[static_cast<std::size_t>(k)] <= kFlowEps) continue;
                    const int i = arc_i[static_cast<std::size_t>(k)];
                    if (done_u[static_cast<std::size_t>(i)]) continue;
                    const double rc = pot_u[i] + pot_v[j] - arc_c[static_cast<std::size_t>(k)];
                    const double cand = d + (rc > 0.0 ? rc : 0.0);
                    if (cand < dist_u[static_cast<std::size_t>(i)]) {
                        dist_u[static_cast<std::size_t>(i)] = cand;
                        par_u[static_cast<std::size_t>(i)] = k;
                        heap.push({cand, i});
                    }
                }
            }
        }

        int target = -1;
        double td = kInf;
        for (int j = 0; j < m; ++j)
            if (demand[j] > kDone && dist_v[static_cast<std::size_t>(j)] < td) {
                td = dist_v[static_cast<std::size_t>(j)];
                target = j;
            }
        if (target < 0) return {};  // disconnected under this arc set

        double amt = demand[target];
        int j = target;
        int source = -1;
        while (true) {
            const int k = par_v[static_cast<std::size_t>(j)];
            const int i = arc_i[static_cast<std::size_t>(k)];
            const int kb = par_u[static_cast<std::size_t>(i)];
            if (kb < 0) { source = i; break; }
            amt = std::min(amt, flow[static_cast<std::size_t>(kb)]);
            j = arc_j[static_cast<std::size_t>(kb)];
        }
        amt = std::min(amt, supply[source]);

        j = target;
        while (true) {
            const int k = par_v[static_cast<std::size_t>(j)];
            flow[static_cast<std::size_t>(k)] += amt;
            const int i = arc_i[static_cast<std::size_t>(k)];
            const int kb = par_u[static_cast<std::size_t>(i)];
            if (kb < 0) break;
            flow[static_cast<std::size_t>(kb)] =
                std::max(0.0, flow[static_cast<std::size_t>(kb)] - amt);
            j = arc_j[static_cast<std::size_t>(kb)];
        }
        supply[source] -= amt;
        demand[target] -= amt;
        remaining -= amt;

        for (int i = 0; i < n; ++i) pot_u[i] -= std::min(dist_u[static_cast<std::size_t>(i)], td);
        for (int jj = 0; jj < m; ++jj) pot_v[jj] += std::min(dist_v[static_cast<std::size_t>(jj)], td);
    }

    SparseFlow res;
    res.feasible = true;
    res.pot_u = pot_u;
    res.pot_v = pot_v;
    for (std::size_t k = 0; k < num_arcs; ++k)
        if (flow[k] > 0.0) {
            res.pairs.push_back({arc_i[k], arc_j[k], flow[k]});
            res.cost += flow[k] * arc_c[k];
        }
    return res;
}

// Entropic path: log-domain Sinkhorn with epsilon annealing supplies dual
// potentials; the plan itself comes from an exact flow restricted to the
// near-tight arcs of those potentials. The reported gap is plan cost minus a
// dual value that is feasible for the unregularized problem (weak duality), so
// it certifies suboptimality. If the tight-arc set misses the optimum the
// threshold widens until the certificate passes; in the worst case the arc set
// becomes complete and the flow is exact.
TransportResult solve_entropic(const Mat& C, const Vec& a, const Vec& b,
                               const TransportOptions& opts) {
    const int n = static_cast<int>(a.size());
    const int m = static_cast<int>(b.size());
    const double scale = std::max(1.0, C.maxCoeff());

    Vec log_a(n), log_b(m);
    for (int i = 0; i < n; ++i) log_a[i] = std::log(std::max(a[i], 1e-300));
    for (int j = 0; j < m; ++j) log_b[j] = std::log(std::max(b[j], 1e-300));

    Vec f = Vec::Zero(n), g = Vec::Zero(m);
    double eps = scale / 10.0;
    const double eps_floor = scale * 1e-5;
    while (true) {
        for (int sweep = 0; sweep < opts.sinkhorn_max_sweeps; ++sweep) {
            double shift = 0.0;
            for (int i = 0; i < n; ++i) {
                Vec row(m);
                for (int j = 0; j < m; ++j) row[j] = (g[j] - C(i, j)) / eps + log_b[j];
                const double nf = -eps * logsumexp_row(row);
                shift = std::max(shift, std::abs(nf - f[i]));
                f[i] = nf;
            }
            for (int j = 0; j < m; ++j) {
                Vec col(n);
                for (int i = 0; i < n; ++i) col[i] = (f[i] - C(i, j)) / eps + log_a[i];
                g[j] = -eps * logsumexp_row(col);
            }
            if (shift < 1e-10 * scale) break;
        }
        if (eps <= eps_floor) break;
        eps = std::max(eps * 0.5, eps_floor);
    }

    // Double c-transform makes the potentials feasible for the plain LP dual.
    Vec fd(n), gd(m);
    for (int i = 0; i < n; ++i) {
        double mn = kInf;
        for (int j = 0; j < m; ++j) mn = std::min(mn, C(i, j) - g[j]);
        fd[i] = mn;
    }
    for (int j = 0; j < m; ++j) {
        double mn = kInf;
        for (int i = 0; i < n; ++i) mn = std::min(mn, C(i, j) - fd[i]);
        gd[j] = mn;
    }
    double dual = fd.dot(a) + gd.dot(b);

    TransportResult res;
    res.exact = false;
    double theta = std::max(opts.duality_gap_tol * 0.25, 1e-12 * scale);
    for (int attempt = 0; attempt < 16; ++attempt) {
        std::vector<int> ai, aj;
        std::vector<double> ac;
        bool complete = true;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j) {
                if (C(i, j) - fd[i] - gd[j] <= theta) {
                    ai.push_back(i);
                    aj.push_back(j);
                    ac.push_back(C(i, j));
                } else {
                    complete = false;
                }
            }
        SparseFlow sf = sparse_min_cost_flow(n, m, ai, aj, ac, a, b);
        if (sf.feasible) {
            // Repair the flow potentials into a fully feasible dual; when the
            // arc set contains the optimal support this matches the primal.
            Vec gd2(m);
            for (int j = 0; j < m; ++j) {
                double mn = kInf;
                for (int i = 0; i < n; ++i) mn = std::min(mn, C(i, j) - sf.pot_u[i]);
                gd2[j] = mn;
            }
            dual = std::max(dual, sf.pot_u.dot(a) + gd2.dot(b));
            res.cost = sf.cost;
            res.plan.pairs = std::move(sf.pairs);
            res.plan.cost = sf.cost;
            res.duality_gap = std::max(0.0, sf.cost - dual);
            if (res.duality_gap <= opts.duality_gap_tol || complete) return res;
        }
        theta *= 8.0;
    }
    if (res.plan.pairs.empty())
        throw SolverError("transport: entropic refinement failed", res.duality_gap);
    return res;
}

}  // namespace

Vec TransportPlan::row_marginals(int n) const {
    Vec r = Vec::Zero(n);
    for (const auto& e : pairs) r[e.i] += e.mass;
    return r;
}

Vec TransportPlan::col_marginals(int m) const {
    Vec c = Vec::Zero(m);
    for (const auto& e : pairs) c[e.j] += e.mass;
    return c;
}

TransportResult optimal_transport_plan(const Mat& C, const Vec& a, const Vec& b,
                                       const TransportOptions& opts) {
    const int n = static_cast<int>(a.size());
    const int m = static_cast<int>(b.size());
    if (C.rows() != n || C.cols() != m)
        throw ValidationError("transport: cost matrix shape does not match weights");
    if (n == 0 || m == 0) throw ValidationError("transport: empty weight vector");
    if (a.minCoeff() < 0.0 || b.minCoeff() < 0.0)
        throw ValidationError("transport: negative weight");
    if (std::abs(a.sum() - b.sum()) > 1e-9)
        throw ValidationError("transport: total masses differ");
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
            if (!std::isfinite(C(i, j))) throw ValidationError("transport: non-finite cost");

    if (n <= opts.exact_threshold && m <= opts.exact_threshold)
        return solve_exact(C, a, b);
    return solve_entropic(C, a, b, opts);
}

}  // namespace mfm
