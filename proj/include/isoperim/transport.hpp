#pragma once

#include "isoperim/core.hpp"

#include <limits>
#include <numeric>

namespace isoperim {

/// Balanced dense transportation problem solved by network simplex on the
/// spanning-tree basis. Costs are given as a row-major m x n matrix. Returns
/// the minimal total cost sum_ij flow_ij * cost_ij with row sums = supply and
/// column sums = demand (totals must match).
class TransportSolver {
public:
    double solve(const std::vector<double>& supply, const std::vector<double>& demand,
                 const std::vector<double>& cost)
    {
        m_ = static_cast<int>(supply.size());
        n_ = static_cast<int>(demand.size());
        if (cost.size() != static_cast<std::size_t>(m_) * n_)
            throw input_error("transport: cost matrix size mismatch");
        const double total_s = std::accumulate(supply.begin(), supply.end(), 0.0);
        const double total_d = std::accumulate(demand.begin(), demand.end(), 0.0);
        if (std::abs(total_s - total_d) > 1e-9 * (1.0 + std::abs(total_s)))
            throw input_error("transport: unbalanced supplies and demands");
        cost_ = &cost;

        double max_cost = 0.0;
        for (double c : cost) max_cost = std::max(max_cost, std::abs(c));
        const double tol = 1e-12 * (1.0 + max_cost);

        init_northwest(supply, demand);

        const int nodes = m_ + n_;
        const long pivot_limit = 400L * nodes + 20000;
        long pivots = 0;
        std::size_t cursor = 0;
        const std::size_t total = static_cast<std::size_t>(m_) * n_;
        const std::size_t block = std::max<std::size_t>(total / 32, 2048);

        rebuild_tree();
        while (true) {
            // entering arc: best reduced cost in a rotating block, full wrap
            // before declaring optimality
            int ei = -1, ej = -1;
            double best = -tol;
            std::size_t scanned = 0;
            const bool bland = pivots > pivot_limit / 2;
            while (scanned < total) {
                const std::size_t stop = std::min(total, scanned + block);
                for (; scanned < stop; ++scanned) {
                    const std::size_t k = (cursor + scanned) % total;
                    const int i = static_cast<int>(k / n_), j = static_cast<int>(k % n_);
                    const double red = (*cost_)[k] - u_[i] - v_[j];
                    if (red < best) {
                        best = red;
                        ei = i;
                        ej = j;
                        if (bland) break;
                    }
                }
                if (ei >= 0) break;
            }
            cursor = (cursor + scanned + 1) % total;
            if (ei < 0) break; // optimal
            if (++pivots > pivot_limit)
                throw numeric_error("transport: pivot limit exceeded");
            pivot(ei, ej);
        }

        double value = 0.0;
        for (int a = 0; a < nodes - 1; ++a)
            value += basic_flow_[a] * (*cost_)[static_cast<std::size_t>(basic_i_[a]) * n_ +
                                               basic_j_[a]];
        return value;
    }

private:
    void init_northwest(const std::vector<double>& supply, const std::vector<double>& demand)
    {
        basic_i_.clear();
        basic_j_.clear();
        basic_flow_.clear();
        std::vector<double> s = supply, d = demand;
        int i = 0, j = 0;
        while (i < m_ && j < n_) {
            const double f = std::min(s[i], d[j]);
            basic_i_.push_back(i);
            basic_j_.push_back(j);
            basic_flow_.push_back(f);
            s[i] -= f;
            d[j] -= f;
            const bool last = (i == m_ - 1 && j == n_ - 1);
            if (last) break;
            // on ties advance only one side so the basis stays a tree
            if (s[i] <= d[j] && i < m_ - 1)
                ++i;
            else
                ++j;
        }
    }

    void rebuild_tree()
    {
        const int nodes = m_ + n_;
        adj_head_.assign(nodes, -1);
        adj_next_.assign(2 * basic_i_.size(), -1);
        adj_arc_.assign(2 * basic_i_.size(), -1);
        adj_to_.assign(2 * basic_i_.size(), -1);
        int slot = 0;
        auto add = [&](int from, int to, int arc) {
            adj_next_[slot] = adj_head_[from];
            adj_head_[from] = slot;
            adj_arc_[slot] = arc;
            adj_to_[slot] = to;
            ++slot;
        };
        for (std::size_t a = 0; a < basic_i_.size(); ++a) {
            add(basic_i_[a], m_ + basic_j_[a], static_cast<int>(a));
            add(m_ + basic_j_[a], basic_i_[a], static_cast<int>(a));
        }
        parent_.assign(nodes, -1);
        parent_arc_.assign(nodes, -1);
        depth_.assign(nodes, 0);
        u_.assign(m_, 0.0);
        v_.assign(n_, 0.0);
        // BFS from node 0 (row 0), u_0 = 0
        std::vector<int> queue = {0};
        std::vector<bool> seen(nodes, false);
        seen[0] = true;
        for (std::size_t q = 0; q < queue.size(); ++q) {
            const int x = queue[q];
            for (int e = adj_head_[x]; e >= 0; e = adj_next_[e]) {
                const int y = adj_to_[e];
                if (seen[y]) continue;
                seen[y] = true;
                parent_[y] = x;
                parent_arc_[y] = adj_arc_[e];
                depth_[y] = depth_[x] + 1;
                const int a = adj_arc_[e];
                const double c = (*cost_)[static_cast<std::size_t>(basic_i_[a]) * n_ +
                                          basic_j_[a]];
                if (y >= m_)
                    v_[y - m_] = c - u_[basic_i_[a]];
                else
                    u_[y] = c - v_[basic_j_[a]];
                queue.push_back(y);
            }
        }
        if (queue.size() != static_cast<std::size_t>(nodes))
            throw numeric_error("transport: basis is not a spanning tree");
    }

    void pivot(int ei, int ej)
    {
        // cycle = entering arc + tree path between its endpoints
        int x = ei, y = m_ + ej;
        std::vector<int> path_x = {x}, path_y = {y};
        while (x != y) {
            if (depth_[x] >= depth_[y]) {
                x = parent_[x];
                path_x.push_back(x);
            } else {
                y = parent_[y];
                path_y.push_back(y);
            }
        }
        // directed cycle: ei -> (entering) -> m+ej -> ... -> lca -> ... -> ei.
        // Arc orientation alternates; flow on a basic arc changes by +theta if
        // the cycle traverses it from row to column, else -theta.
        struct Step {
            int arc;
            int sign;
        };
        std::vector<Step> steps;
        // from m+ej up to lca
        for (std::size_t k = 0; k + 1 < path_y.size(); ++k) {
            const int node = path_y[k];
            const int arc = parent_arc_[node];
            // traversing from node towards parent
            const bool node_is_row = node < m_;
            steps.push_back({arc, node_is_row ? +1 : -1});
        }
        // from lca down to ei: reverse of path_x upward traversal
        for (std::size_t k = path_x.size() - 1; k > 0; --k) {
            const int node = path_x[k - 1];
            const int arc = parent_arc_[node];
            const bool node_is_row = node < m_;
            steps.push_back({arc, node_is_row ? -1 : +1});
        }

        double theta = std::numeric_limits<double>::infinity();
        int leave = -1;
        for (const auto& s : steps)
            if (s.sign < 0 && basic_flow_[s.arc] <= theta) {
                theta = basic_flow_[s.arc];
                leave = s.arc;
            }
        if (leave < 0) throw numeric_error("transport: unbounded pivot");

        for (const auto& s : steps) basic_flow_[s.arc] += s.sign * theta;
        basic_i_[leave] = ei;
        basic_j_[leave] = ej;
        basic_flow_[leave] = theta;
        rebuild_tree();
    }

    int m_ = 0, n_ = 0;
    const std::vector<double>* cost_ = nullptr;
    std::vector<int> basic_i_, basic_j_;
    std::vector<double> basic_flow_;
    std::vector<int> adj_head_, adj_next_, adj_arc_, adj_to_;
    std::vector<int> parent_, parent_arc_, depth_;
    std::vector<double> u_, v_;
};

inline double transport_min_cost(const std::vector<double>& supply,
                                 const std::vector<double>& demand,
                                 const std::vector<double>& cost)
{
    TransportSolver solver;
    return solver.solve(supply, demand, cost);
}

} // namespace isoperim
