#pragma once

// Test-only brute-force LP: maximize c.x subject to A x <= b, x >= 0, with
// b >= 0 (slack basis is feasible). Dense tableau simplex with Bland's rule.
// Small problems only; used as an independent oracle for the transport solver
// and the bounded-Lipschitz values.

#include <stdexcept>
#include <vector>

namespace lp_oracle {

inline double solve_max(const std::vector<std::vector<double>>& A, const std::vector<double>& b,
                        const std::vector<double>& c)
{
    const int m = static_cast<int>(A.size());
    const int n = static_cast<int>(c.size());
    for (double bi : b)
        if (bi < 0) throw std::runtime_error("lp_oracle requires b >= 0");

    // tableau rows: m constraints + objective; cols: n vars + m slacks + rhs
    std::vector<std::vector<double>> T(m + 1, std::vector<double>(n + m + 1, 0.0));
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) T[i][j] = A[i][j];
        T[i][n + i] = 1.0;
        T[i][n + m] = b[i];
    }
    for (int j = 0; j < n; ++j) T[m][j] = c[j];
    std::vector<int> basis(m);
    for (int i = 0; i < m; ++i) basis[i] = n + i;

    const double tol = 1e-11;
    for (long iter = 0; iter < 100000; ++iter) {
        int enter = -1;
        for (int j = 0; j < n + m; ++j)
            if (T[m][j] > tol) {
                enter = j;
                break; // Bland
            }
        if (enter < 0) break;
        int leave = -1;
        double best_ratio = 0.0;
        for (int i = 0; i < m; ++i) {
            if (T[i][enter] <= tol) continue;
            const double ratio = T[i][n + m] / T[i][enter];
            if (leave < 0 || ratio < best_ratio - 1e-15 ||
                (ratio < best_ratio + 1e-15 && basis[i] < basis[leave])) {
                best_ratio = ratio;
                leave = i;
            }
        }
        if (leave < 0) throw std::runtime_error("lp_oracle: unbounded");
        const double piv = T[leave][enter];
        for (auto& v : T[leave]) v /= piv;
        for (int i = 0; i <= m; ++i) {
            if (i == leave) continue;
            const double f = T[i][enter];
            if (f == 0.0) continue;
            for (int j = 0; j <= n + m; ++j) T[i][j] -= f * T[leave][j];
        }
        basis[leave] = enter;
    }
    return -T[m][n + m]; // objective value accumulates negated in the rhs
}

} // namespace lp_oracle
