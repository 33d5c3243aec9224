#include "rbmlab/wasserstein.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "rbmlab/errors.hpp"

namespace rbmlab {

namespace {

double powq(double r, double q) {
    if (q == 1.0) return r;
    if (q == 2.0) return r * r;
    return std::pow(r, q);
}

double dist(std::span<const double> x, std::span<const double> y) {
    if (x.size() == 1) return std::abs(x[0] - y[0]);
    double s = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) s += (x[c] - y[c]) * (x[c] - y[c]);
    return std::sqrt(s);
}

void check_q(double q) {
    if (!(q >= 1.0) || !std::isfinite(q)) throw ConfigError("q must be >= 1");
}

struct Atom {
    double x;
    double w;
};

std::vector<Atom> sorted_atoms(const EmpiricalMeasure& m) {
    std::vector<Atom> a(m.size());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = {m.points[i], m.weights[i]};
    std::sort(a.begin(), a.end(), [](const Atom& l, const Atom& r) { return l.x < r.x; });
    return a;
}

template <class GetA, class GetB>
double quantile_walk(std::size_t na, std::size_t nb, GetA atom_a, GetB atom_b, double q) {
    std::size_t i = 0, j = 0;
    Atom a = atom_a(0), b = atom_b(0);
    double acc = 0.0;
    while (true) {
        const double c = powq(std::abs(a.x - b.x), q);
        if (a.w <= b.w) {
            acc += a.w * c;
            b.w -= a.w;
            if (++i == na) break;
            a = atom_a(i);
        } else {
            acc += b.w * c;
            a.w -= b.w;
            if (++j == nb) break;
            b = atom_b(j);
        }
    }
    return acc;
}

}  // namespace

std::string to_string(OtMethod m) {
    switch (m) {
        case OtMethod::quantile_1d: return "quantile_1d";
        case OtMethod::assignment_exact: return "assignment_exact";
        case OtMethod::lp_exact: return "lp_exact";
    }
    return "unknown";
}

double w_q_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double q) {
    if (mu.d != 1 || nu.d != 1) throw DimensionError("w_q_1d needs one-dimensional measures");
    check_q(q);
    if (mu.size() == 0 || nu.size() == 0) throw ConfigError("empty measure");
    const auto a = sorted_atoms(mu);
    const auto b = sorted_atoms(nu);
    const double cost = quantile_walk(
        a.size(), b.size(), [&](std::size_t i) { return a[i]; },
        [&](std::size_t j) { return b[j]; }, q);
    return std::pow(std::max(cost, 0.0), 1.0 / q);
}

double w_q_sorted(std::span<const double> a, std::span<const double> b, double q) {
    check_q(q);
    if (a.empty() || b.empty()) throw ConfigError("empty sample");
    if (a.size() == b.size()) {
        // Equal sizes: the monotone coupling pairs order statistics.
        double acc = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) acc += powq(std::abs(a[i] - b[i]), q);
        return std::pow(acc / static_cast<double>(a.size()), 1.0 / q);
    }
    const double wa = 1.0 / static_cast<double>(a.size());
    const double wb = 1.0 / static_cast<double>(b.size());
    const double cost = quantile_walk(
        a.size(), b.size(), [&](std::size_t i) { return Atom{a[i], wa}; },
        [&](std::size_t j) { return Atom{b[j], wb}; }, q);
    return std::pow(std::max(cost, 0.0), 1.0 / q);
}

double w_q_samples(std::span<const double> a, std::span<const double> b, double q) {
    std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    return w_q_sorted(sa, sb, q);
}

std::vector<std::size_t> solve_assignment(std::span<const double> cost, std::size_t n) {
    // Shortest augmenting path with dual potentials (Kuhn-Munkres, O(n^3)).
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    for (std::size_t i = 1; i <= n; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = match[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> row_to_col(n);
    for (std::size_t j = 1; j <= n; ++j) row_to_col[match[j] - 1] = j - 1;
    return row_to_col;
}

double transport_cost(std::span<const double> a, std::span<const double> b,
                      std::span<const double> cost) {
    // Successive shortest paths on the bipartite transport network with Johnson potentials.
    const std::size_t n = a.size(), m = b.size();
    const double eps = 1e-15;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> supply(a.begin(), a.end()), demand(b.begin(), b.end());
    std::vector<double> flow(n * m, 0.0);
    // Node ids: 0 = source, 1..n rows, n+1..n+m columns, n+m+1 sink.
    const std::size_t V = n + m + 2, S = 0, T = n + m + 1;
    std::vector<double> h(V, 0.0), distv(V);
    std::vector<std::size_t> prev(V);
    std::vector<char> done(V);
    auto edge_cost = [&](std::size_t from, std::size_t to, double& c) -> bool {
        if (from == S && to >= 1 && to <= n) {
            if (supply[to - 1] <= eps) return false;
            c = 0.0;
            return true;
        }
        if (from >= 1 && from <= n && to > n && to <= n + m) {
            c = cost[(from - 1) * m + (to - n - 1)];
            return true;
        }
        if (from > n && from <= n + m && to >= 1 && to <= n) {
            if (flow[(to - 1) * m + (from - n - 1)] <= eps) return false;
            c = -cost[(to - 1) * m + (from - n - 1)];
            return true;
        }
        if (from > n && from <= n + m && to == T) {
            if (demand[from - n - 1] <= eps) return false;
            c = 0.0;
            return true;
        }
        return false;
    };
    double remaining = std::min(std::accumulate(a.begin(), a.end(), 0.0),
                                std::accumulate(b.begin(), b.end(), 0.0));
    std::size_t guard = 0;
    while (remaining > 1e-13) {
        if (++guard > 100 * (n + m) * (n + m) + 1000)
            throw ConvergenceError("transport solver failed to terminate");
        std::fill(distv.begin(), distv.end(), inf);
        std::fill(done.begin(), done.end(), 0);
        distv[S] = 0.0;
        for (std::size_t it = 0; it < V; ++it) {
            std::size_t u = V;
            for (std::size_t v = 0; v < V; ++v)
                if (!done[v] && distv[v] < inf && (u == V || distv[v] < distv[u])) u = v;
            if (u == V) break;
            done[u] = 1;
            if (u == T) continue;
            for (std::size_t v = 0; v < V; ++v) {
                if (done[v]) continue;
                double c;
                if (!edge_cost(u, v, c)) continue;
                const double reduced = std::max(0.0, c + h[u] - h[v]);
                if (distv[u] + reduced < distv[v]) {
                    distv[v] = distv[u] + reduced;
                    prev[v] = u;
                }
            }
        }
        if (distv[T] == inf) break;
        for (std::size_t v = 0; v < V; ++v)
            if (distv[v] < inf) h[v] += distv[v];
        double push = remaining;
        for (std::size_t v = T; v != S; v = prev[v]) {
            const std::size_t u = prev[v];
            if (u == S) push = std::min(push, supply[v - 1]);
            else if (v == T) push = std::min(push, demand[u - n - 1]);
            else if (u > n) push = std::min(push, flow[(v - 1) * m + (u - n - 1)]);
        }
        for (std::size_t v = T; v != S; v = prev[v]) {
            const std::size_t u = prev[v];
            if (u == S) supply[v - 1] -= push;
            else if (v == T) demand[u - n - 1] -= push;
            else if (u <= n) flow[(u - 1) * m + (v - n - 1)] += push;
            else flow[(v - 1) * m + (u - n - 1)] -= push;
        }
        remaining -= push;
    }
    double total = 0.0;
    for (std::size_t k = 0; k < n * m; ++k) total += flow[k] * cost[k];
    return total;
}

DistanceReport w_q_exact_smalld(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double q) {
    check_q(q);
    if (mu.d != nu.d) throw DimensionError("measures live in different dimensions");
    const std::size_t n = mu.size(), m = nu.size();
    if (n == 0 || m == 0) throw ConfigError("empty measure");
    auto is_uniform = [](const EmpiricalMeasure& e) {
        const double w = 1.0 / static_cast<double>(e.size());
        return std::all_of(e.weights.begin(), e.weights.end(),
                           [&](double x) { return std::abs(x - w) <= 1e-14; });
    };
    DistanceReport rep;
    rep.q = q;
    rep.n_mu = n;
    rep.n_nu = m;
    std::vector<double> c(n * m);
    auto fill_cost = [&] {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) c[i * m + j] = powq(dist(mu.point(i), nu.point(j)), q);
    };
    if (n == m && is_uniform(mu) && is_uniform(nu)) {
        if (n > kAssignmentCap)
            throw SizeError("assignment instance exceeds " + std::to_string(kAssignmentCap) + " points");
        fill_cost();
        const auto match = solve_assignment(c, n);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += c[i * n + match[i]];
        rep.value = std::pow(total / static_cast<double>(n), 1.0 / q);
        rep.method = OtMethod::assignment_exact;
        return rep;
    }
    if (n > kLpCap || m > kLpCap)
        throw SizeError("weighted instance exceeds " + std::to_string(kLpCap) + " points");
    fill_cost();
    rep.value = std::pow(std::max(0.0, transport_cost(mu.weights, nu.weights, c)), 1.0 / q);
    rep.method = OtMethod::lp_exact;
    return rep;
}

DistanceReport wasserstein(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double q) {
    if (mu.d != nu.d) throw DimensionError("measures live in different dimensions");
    if (mu.d == 1) return {q, w_q_1d(mu, nu, q), OtMethod::quantile_1d, mu.size(), nu.size()};
    return w_q_exact_smalld(mu, nu, q);
}

TvBound tv_wq_bound(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double q) {
    check_q(q);
    if (mu.d != nu.d) throw DimensionError("measures live in different dimensions");
    const std::size_t d = mu.d;
    std::map<std::vector<double>, double> diff;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        auto p = mu.point(i);
        diff[std::vector<double>(p.begin(), p.end())] += mu.weights[i];
    }
    for (std::size_t i = 0; i < nu.size(); ++i) {
        auto p = nu.point(i);
        diff[std::vector<double>(p.begin(), p.end())] -= nu.weights[i];
    }
    TvBound out;
    std::vector<std::vector<double>> support;
    std::vector<double> mass;
    for (const auto& [x, w] : diff) {
        support.push_back(x);
        mass.push_back(std::abs(w));
        out.tv += std::abs(w);
    }
    out.distance = wasserstein(mu, nu, q).value;
    if (out.tv <= 1e-15) {
        out.tv = 0.0;
        out.bound = 0.0;
        out.holds = out.distance <= 1e-12;
        return out;
    }
    for (double& w : mass) w /= out.tv;
    std::vector<std::vector<double>> candidates = support;
    std::vector<double> centre(d, 0.0);
    for (std::size_t s = 0; s < support.size(); ++s)
        for (std::size_t c = 0; c < d; ++c) centre[c] += mass[s] * support[s][c];
    candidates.push_back(centre);
    if (d == 1) {
        // Weighted median of |mu - nu|.
        double acc = 0.0;
        for (std::size_t s = 0; s < support.size(); ++s) {
            acc += mass[s];
            if (acc >= 0.5) {
                candidates.push_back(support[s]);
                break;
            }
        }
    }
    out.m_q = std::numeric_limits<double>::infinity();
    for (const auto& x0 : candidates) {
        double mq = 0.0;
        for (std::size_t s = 0; s < support.size(); ++s)
            mq += mass[s] * powq(dist(support[s], x0), q);
        out.m_q = std::min(out.m_q, mq);
    }
    out.bound = std::pow(2.0, 1.0 - 1.0 / q) * std::pow(out.m_q * out.tv, 1.0 / q);
    out.holds = out.distance <= out.bound * (1.0 + 1e-12) + 1e-14;
    return out;
}

}  // namespace rbmlab
