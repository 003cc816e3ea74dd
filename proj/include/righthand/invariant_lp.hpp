#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "righthand/errors.hpp"
#include "righthand/ulam.hpp"

namespace righthand {

struct LPResult {
    double min_value = 0.0;
    std::vector<double> argmin_weights;
    double feasibility_residual = 0.0;
};

namespace detail {

// Strongly connected components of the support graph P_ij > 0 (iterative
// Tarjan).  Returns the component id per node; ids are in reverse
// topological order, which we do not rely on.
inline std::vector<int> strongly_connected_components(const std::vector<double>& p, int n) {
    std::vector<int> comp(n, -1), low(n), disc(n, -1), stack_mark(n, 0);
    std::vector<int> tarjan_stack;
    struct Frame {
        int v;
        int next;
    };
    std::vector<Frame> call;
    int time = 0, ncomp = 0;

    for (int root = 0; root < n; ++root) {
        if (disc[root] != -1) continue;
        call.push_back({root, 0});
        while (!call.empty()) {
            auto& f = call.back();
            const int v = f.v;
            if (f.next == 0) {
                disc[v] = low[v] = time++;
                tarjan_stack.push_back(v);
                stack_mark[v] = 1;
            }
            bool descended = false;
            while (f.next < n) {
                const int w = f.next++;
                if (p[static_cast<std::size_t>(v) * n + w] <= 0.0) continue;
                if (disc[w] == -1) {
                    call.push_back({w, 0});
                    descended = true;
                    break;
                }
                if (stack_mark[w]) low[v] = std::min(low[v], disc[w]);
            }
            if (descended) continue;
            if (low[v] == disc[v]) {
                for (;;) {
                    const int w = tarjan_stack.back();
                    tarjan_stack.pop_back();
                    stack_mark[w] = 0;
                    comp[w] = ncomp;
                    if (w == v) break;
                }
                ++ncomp;
            }
            call.pop_back();
            if (!call.empty()) {
                const int parent = call.back().v;
                low[parent] = std::min(low[parent], low[v]);
            }
        }
    }
    return comp;
}

// Stationary distribution of the irreducible row-stochastic block `sub`
// (m x m): solve (I - P^T) pi = 0 with a normalization row, falling back to
// damped power iteration if the direct solve misbehaves.
inline Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& sub) {
    const int m = static_cast<int>(sub.rows());
    if (m == 1) return Eigen::VectorXd::Ones(1);

    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(m, m) - sub.transpose();
    a.row(0).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    rhs[0] = 1.0;
    Eigen::VectorXd piv = a.partialPivLu().solve(rhs);

    const auto clean = [&](Eigen::VectorXd& v) {
        for (int i = 0; i < m; ++i) v[i] = std::max(v[i], 0.0);
        const double s = v.sum();
        if (s > 0.0) v /= s;
    };
    const auto residual = [&](const Eigen::VectorXd& v) {
        return (sub.transpose() * v - v).lpNorm<1>();
    };

    clean(piv);
    if (residual(piv) <= 1e-9) return piv;

    Eigen::VectorXd v = Eigen::VectorXd::Constant(m, 1.0 / m);
    for (int it = 0; it < 200000; ++it) {
        Eigen::VectorXd next = 0.5 * (v + sub.transpose() * v);
        clean(next);
        const double delta = (next - v).lpNorm<1>();
        v = std::move(next);
        if (delta < 1e-14) break;
    }
    if (residual(v) > 1e-7)
        throw NumericalFailure("stationary distribution did not converge to residual 1e-7");
    return v;
}

}  // namespace detail

// Minimizes the chain's objective over its invariant probability measures.
// These form a polytope whose extreme points are the stationary distributions
// of the closed recurrent classes, so the optimum is found by enumerating
// closed classes rather than running a general LP solver.
inline LPResult min_invariant_linking(const UlamChain& chain) {
    const int n = chain.cells();
    if (n <= 0) throw OutOfRangeParameter("chain has no cells");
    for (int i = 0; i < n; ++i) {
        double row = 0.0;
        for (int j = 0; j < n; ++j) {
            const double v = chain.transition[static_cast<std::size_t>(i) * n + j];
            if (v < 0.0) throw OutOfRangeParameter("transition matrix has a negative entry");
            row += v;
        }
        if (std::abs(row - 1.0) > 1e-9)
            throw OutOfRangeParameter("transition row " + std::to_string(i) +
                                      " sums to " + std::to_string(row));
    }

    const std::vector<int> comp = detail::strongly_connected_components(chain.transition, n);
    const int ncomp = 1 + *std::max_element(comp.begin(), comp.end());

    std::vector<char> closed(ncomp, 1);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (chain.transition[static_cast<std::size_t>(i) * n + j] > 0.0 &&
                comp[j] != comp[i])
                closed[comp[i]] = 0;

    LPResult best;
    best.min_value = std::numeric_limits<double>::infinity();
    for (int c = 0; c < ncomp; ++c) {
        if (!closed[c]) continue;
        std::vector<int> members;
        for (int i = 0; i < n; ++i)
            if (comp[i] == c) members.push_back(i);
        const int m = static_cast<int>(members.size());
        Eigen::MatrixXd sub(m, m);
        for (int r = 0; r < m; ++r)
            for (int s = 0; s < m; ++s)
                sub(r, s) = chain.transition[static_cast<std::size_t>(members[r]) * n + members[s]];
        const Eigen::VectorXd piv = detail::stationary_distribution(sub);
        double value = 0.0;
        for (int r = 0; r < m; ++r) value += piv[r] * chain.objective[members[r]];
        if (value < best.min_value) {
            best.min_value = value;
            best.argmin_weights.assign(n, 0.0);
            for (int r = 0; r < m; ++r) best.argmin_weights[members[r]] = piv[r];
        }
    }
    if (!std::isfinite(best.min_value))
        throw Infeasible("no closed recurrent class found in a stochastic matrix");

    double residual = 0.0;
    for (int j = 0; j < n; ++j) {
        double col = 0.0;
        for (int i = 0; i < n; ++i)
            col += best.argmin_weights[i] * chain.transition[static_cast<std::size_t>(i) * n + j];
        residual += std::abs(col - best.argmin_weights[j]);
    }
    best.feasibility_residual = residual;
    return best;
}

// Maximization twin used for left-handed fields: max over invariant measures.
inline LPResult max_invariant_linking(const UlamChain& chain) {
    UlamChain negated = chain;
    for (double& v : negated.objective) v = -v;
    LPResult res = min_invariant_linking(negated);
    res.min_value = -res.min_value;
    return res;
}

}  // namespace righthand
