#pragma once

// Test-side oracle: dense two-phase tableau simplex with Bland's rule.
// Deliberately independent from the production transport solver so the two
// can cross-check each other.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace oracle {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Minimizes c.x subject to A x = b, x >= 0. Requires b >= 0.
inline double simplex_solve(const Mat& A, const Vec& b, const Vec& c, Vec* x_out = nullptr) {
    const int m = static_cast<int>(A.rows());
    const int n = static_cast<int>(A.cols());
    const double eps = 1e-11;
    for (int i = 0; i < m; ++i)
        if (b[i] < -eps) throw std::invalid_argument("simplex oracle: b must be nonnegative");

    const int total = n + m;  // artificials appended
    Mat T(m + 1, total + 1);
    T.setZero();
    T.block(0, 0, m, n) = A;
    T.block(0, n, m, m) = Mat::Identity(m, m);
    T.col(total).head(m) = b;

    std::vector<int> basis(m);
    for (int i = 0; i < m; ++i) basis[i] = n + i;

    auto pivot = [&](int row, int col) {
        T.row(row) /= T(row, col);
        for (int r = 0; r <= m; ++r) {
            if (r == row) continue;
            const double f = T(r, col);
            if (f != 0.0) T.row(r) -= f * T.row(row);
        }
        basis[static_cast<std::size_t>(row)] = col;
    };

    auto run = [&](int active_cols) {
        while (true) {
            int enter = -1;
            for (int j = 0; j < active_cols; ++j) {
                bool basic = false;
                for (int i = 0; i < m; ++i)
                    if (basis[static_cast<std::size_t>(i)] == j) { basic = true; break; }
                if (!basic && T(m, j) < -eps) { enter = j; break; }  // Bland: lowest index
            }
            if (enter < 0) return;
            int leave = -1;
            double best = 0.0;
            for (int i = 0; i < m; ++i) {
                if (T(i, enter) > eps) {
                    const double ratio = T(i, total) / T(i, enter);
                    if (leave < 0 || ratio < best - eps ||
                        (std::abs(ratio - best) <= eps &&
                         basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
                        best = ratio;
                        leave = i;
                    }
                }
            }
            if (leave < 0) throw std::runtime_error("simplex oracle: unbounded");
            pivot(leave, enter);
        }
    };

    // Phase 1: minimize the artificial sum.
    for (int j = 0; j <= total; ++j) {
        double s = 0.0;
        for (int i = 0; i < m; ++i) s += T(i, j);
        T(m, j) = (j >= n && j < total) ? 1.0 - s : -s;
    }
    run(total);
    if (T(m, total) < -1e-7) throw std::runtime_error("simplex oracle: infeasible");

    // Drive leftover artificials out of the basis where possible.
    for (int i = 0; i < m; ++i) {
        if (basis[static_cast<std::size_t>(i)] >= n) {
            for (int j = 0; j < n; ++j)
                if (std::abs(T(i, j)) > eps) { pivot(i, j); break; }
        }
    }

    // Phase 2 cost row.
    for (int j = 0; j <= total; ++j) {
        double v = (j < n) ? c[j] : 0.0;
        for (int i = 0; i < m; ++i) {
            const int bi = basis[static_cast<std::size_t>(i)];
            const double cb = (bi < n) ? c[bi] : 0.0;
            v -= cb * T(i, j);
        }
        T(m, j) = v;
    }
    run(n);

    if (x_out) {
        *x_out = Vec::Zero(n);
        for (int i = 0; i < m; ++i)
            if (basis[static_cast<std::size_t>(i)] < n)
                (*x_out)[basis[static_cast<std::size_t>(i)]] = T(i, total);
    }
    double z = 0.0;
    for (int i = 0; i < m; ++i) {
        const int bi = basis[static_cast<std::size_t>(i)];
        if (bi < n) z += c[bi] * T(i, total);
    }
    return z;
}

// Exact transport cost by brute-force LP over the coupling polytope. The last
// column-sum constraint is dropped (it is implied), keeping the rows
// independent.
inline double transport_lp(const Mat& cost, const Vec& a, const Vec& b, Mat* plan_out = nullptr) {
    const int n = static_cast<int>(a.size());
    const int m = static_cast<int>(b.size());
    const int vars = n * m;
    const int rows = n + m - 1;
    Mat A = Mat::Zero(rows, vars);
    Vec rhs(rows), c(vars);
    for (int i = 0; i < n; ++i) {
        rhs[i] = a[i];
        for (int j = 0; j < m; ++j) A(i, i * m + j) = 1.0;
    }
    for (int j = 0; j + 1 < m; ++j) {
        rhs[n + j] = b[j];
        for (int i = 0; i < n; ++i) A(n + j, i * m + j) = 1.0;
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) c[i * m + j] = cost(i, j);
    Vec x;
    const double z = simplex_solve(A, rhs, c, &x);
    if (plan_out) {
        *plan_out = Mat::Zero(n, m);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j) (*plan_out)(i, j) = x[i * m + j];
    }
    return z;
}

// Monotone (quantile) coupling cost in one dimension; optimal for |x-y|^p,
// p >= 1. Another independent route for the 1-d cross-checks.
inline double transport_1d(std::vector<std::pair<double, double>> mu,
                           std::vector<std::pair<double, double>> nu, double p) {
    auto by_pos = [](const std::pair<double, double>& l, const std::pair<double, double>& r) {
        return l.first < r.first;
    };
    std::sort(mu.begin(), mu.end(), by_pos);
    std::sort(nu.begin(), nu.end(), by_pos);
    double cost = 0.0;
    std::size_t i = 0, j = 0;
    double ri = mu.empty() ? 0.0 : mu[0].second;
    double rj = nu.empty() ? 0.0 : nu[0].second;
    while (i < mu.size() && j < nu.size()) {
        const double m = std::min(ri, rj);
        cost += m * std::pow(std::abs(mu[i].first - nu[j].first), p);
        ri -= m;
        rj -= m;
        if (ri <= 1e-15) { ++i; ri = i < mu.size() ? mu[i].second : 0.0; }
        if (rj <= 1e-15) { ++j; rj = j < nu.size() ? nu[j].second : 0.0; }
    }
    return cost;
}

}  // namespace oracle
