#pragma once

// Test-only reference implementations, written directly from the closed
// forms with plain lgamma arithmetic. Deliberately independent of the
// library's incremental machinery.

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "netrecon/data.hpp"
#include "netrecon/graph.hpp"

namespace oracle {

using netrecon::MeasurementData;
using netrecon::NodeId;
using netrecon::PairKey;

inline double lf(int64_t n) { return std::lgamma(double(n) + 1); }

inline double lch(int64_t n, int64_t k)
{
    if (k < 0 || k > n)
        return -std::numeric_limits<double>::infinity();
    return lf(n) - lf(k) - lf(n - k);
}

inline double lmset(int64_t n, int64_t m) { return m == 0 ? 0.0 : lch(n + m - 1, m); }

inline double lbeta(double a, double b)
{
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

inline uint64_t qcount(int64_t m, int64_t n, int64_t largest = -1)
{
    if (largest < 0)
        largest = m;
    if (m == 0)
        return 1;
    if (n == 0)
        return 0;
    uint64_t total = 0;
    for (int64_t first = std::min(m, largest); first >= 1; --first)
        total += qcount(m - first, n - 1, first);
    return total;
}

// multigraph described by multiplicities on (i <= j) pairs
using Mult = std::map<std::pair<int, int>, int64_t>;

struct FlatStats
{
    int64_t n_groups = 0;
    int64_t edges = 0;
    std::vector<int64_t> k, nr, er;
    std::map<std::pair<int, int>, int64_t> ers; // r <= s, diagonal doubled
};

inline FlatStats flat_stats(int n, const Mult& g, const std::vector<int>& b)
{
    FlatStats st;
    for (int v : b)
        st.n_groups = std::max<int64_t>(st.n_groups, v + 1);
    st.k.assign(size_t(n), 0);
    st.nr.assign(size_t(st.n_groups), 0);
    st.er.assign(size_t(st.n_groups), 0);
    for (int i = 0; i < n; ++i)
        ++st.nr[size_t(b[size_t(i)])];
    for (auto& [pr, m] : g)
    {
        auto [i, j] = pr;
        st.edges += m;
        int r = b[size_t(i)], s = b[size_t(j)];
        if (i == j)
        {
            st.k[size_t(i)] += 2 * m;
            st.ers[{r, r}] += 2 * m;
        }
        else
        {
            st.k[size_t(i)] += m;
            st.k[size_t(j)] += m;
            if (r == s)
                st.ers[{r, r}] += 2 * m;
            else
                st.ers[{std::min(r, s), std::max(r, s)}] += m;
        }
    }
    for (auto& [pr, e] : st.ers)
    {
        st.er[size_t(pr.first)] += e;
        if (pr.first != pr.second)
            st.er[size_t(pr.second)] += e;
    }
    return st;
}

// log P(G|b) of the degree-corrected model with the single-level
// geometric edge-count prior
inline double log_dcsbm_flat(int n, const Mult& g, const std::vector<int>& b,
                             double lambda_override = -1, int64_t edges_ref = -1)
{
    FlatStats st = flat_stats(n, g, b);
    double t = 0;
    // graph given degrees and pair counts
    for (auto& [pr, e] : st.ers)
    {
        if (pr.first == pr.second)
            t += (e / 2) * std::log(2.0) + lf(e / 2);
        else
            t += lf(e);
    }
    for (int i = 0; i < n; ++i)
        t += lf(st.k[size_t(i)]);
    for (auto& [pr, m] : g)
    {
        if (pr.first == pr.second)
            t -= m * std::log(2.0) + lf(m);
        else
            t -= lf(m);
    }
    for (int64_t e : st.er)
        t -= lf(e);
    // degrees given counts, counts given sums
    for (int64_t r = 0; r < st.n_groups; ++r)
    {
        std::map<int64_t, int64_t> eta;
        for (int i = 0; i < n; ++i)
            if (b[size_t(i)] == r)
                ++eta[st.k[size_t(i)]];
        for (auto& [deg, c] : eta)
            t += lf(c);
        t -= lf(st.nr[size_t(r)]);
        t -= std::log(double(qcount(st.er[size_t(r)], st.nr[size_t(r)])));
    }
    // edge-count prior
    double bb = double(st.n_groups);
    double ref = edges_ref >= 0 ? double(edges_ref) : double(st.edges);
    double lam = lambda_override > 0 ? lambda_override : 2 * ref / (bb * (bb + 1));
    if (lam > 0)
        t += double(st.edges) * std::log(lam) -
             (double(st.edges) + bb * (bb + 1) / 2) * std::log1p(lam);
    else if (st.edges > 0)
        t = -std::numeric_limits<double>::infinity();
    return t;
}

// nested variant: hierarchy[0] labels nodes, hierarchy[l] labels the
// groups below; the last level must have a single group
inline double log_hdcsbm(int n, const Mult& g,
                         const std::vector<std::vector<int>>& hierarchy,
                         double lambda_override = -1, int64_t edges_ref = -1)
{
    FlatStats st = flat_stats(n, g, hierarchy[0]);
    double t = log_dcsbm_flat(n, g, hierarchy[0], 1.0);
    // strip the flat edge-count prior (evaluated above with lambda = 1)
    double bb = double(st.n_groups);
    t -= double(st.edges) * std::log(1.0) -
         (double(st.edges) + bb * (bb + 1) / 2) * std::log1p(1.0);

    // coarse matrices up the hierarchy
    std::map<std::pair<int, int>, int64_t> cur = st.ers; // r<=s, diag doubled
    int64_t cur_n = st.n_groups;
    for (size_t l = 1; l < hierarchy.size(); ++l)
    {
        const std::vector<int>& b = hierarchy[size_t(l)];
        int64_t up_n = 0;
        for (int v : b)
            up_n = std::max<int64_t>(up_n, v + 1);
        std::vector<int64_t> nr(size_t(up_n), 0);
        for (int64_t o = 0; o < cur_n; ++o)
            ++nr[size_t(b[size_t(o)])];
        std::map<std::pair<int, int>, int64_t> up;
        for (auto& [pr, e] : cur)
        {
            int r = b[size_t(pr.first)], s = b[size_t(pr.second)];
            if (pr.first == pr.second)
                up[{r, r}] += e;
            else if (r == s)
                up[{r, r}] += 2 * e;
            else
                up[{std::min(r, s), std::max(r, s)}] += e;
        }
        // P(e_l | e_{l+1}, b_l)
        for (auto& [pr, e] : up)
        {
            if (pr.first == pr.second)
                t -= lmset(nr[size_t(pr.first)] * (nr[size_t(pr.first)] + 1) / 2, e / 2);
            else
                t -= lmset(nr[size_t(pr.first)] * nr[size_t(pr.second)], e);
        }
        cur = std::move(up);
        cur_n = up_n;
    }
    if (cur_n != 1)
        throw std::runtime_error("log_hdcsbm: hierarchy does not end in one group");
    double lam = lambda_override > 0
                     ? lambda_override
                     : (edges_ref >= 0 ? double(edges_ref) : double(st.edges));
    if (lam > 0)
        t += double(st.edges) * std::log(lam) -
             (double(st.edges) + 1) * std::log1p(lam);
    else if (st.edges > 0)
        t = -std::numeric_limits<double>::infinity();
    return t;
}

inline double log_partition_prior(const std::vector<int>& b)
{
    int64_t n = int64_t(b.size());
    int64_t bc = 0;
    for (int v : b)
        bc = std::max<int64_t>(bc, v + 1);
    std::vector<int64_t> nr(size_t(bc), 0);
    for (int v : b)
        ++nr[size_t(v)];
    double t = 0;
    for (int64_t c : nr)
        t += lf(c);
    return t - lf(n) - lch(n - 1, bc - 1) - std::log(double(n));
}

// integrated uniform-error likelihood, direct product form
inline double log_like_uniform(const MeasurementData& d,
                               const std::vector<std::pair<int, int>>& edges,
                               double alpha, double beta, double mu, double nu)
{
    int n = d.node_count();
    auto has_edge = [&](int i, int j) {
        for (auto& [a, b] : edges)
            if ((a == i && b == j) || (a == j && b == i))
                return true;
        return false;
    };
    int64_t M = 0, X = 0, E = 0, T = 0;
    double c = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
        {
            auto cnt = d.get(NodeId(i), NodeId(j));
            M += cnt.n;
            X += cnt.x;
            c += lch(cnt.n, cnt.x);
            if (has_edge(i, j))
            {
                E += cnt.n;
                T += cnt.x;
            }
        }
    return c + lbeta(double(E - T) + alpha, double(T) + beta) - lbeta(alpha, beta) +
           lbeta(double(X - T) + mu, double(M - X - E + T) + nu) - lbeta(mu, nu);
}

// all label vectors with occupied labels 0..B-1
inline std::vector<std::vector<int>> labeled_partitions(int n)
{
    std::vector<std::vector<int>> out;
    std::vector<int> b(size_t(n), 0);
    for (;;)
    {
        int mx = 0;
        bool ok = true;
        for (int v : b)
            mx = std::max(mx, v);
        std::vector<char> seen(size_t(mx) + 1, 0);
        for (int v : b)
            seen[size_t(v)] = 1;
        for (char s : seen)
            if (!s)
                ok = false;
        if (ok)
            out.push_back(b);
        int pos = n - 1;
        while (pos >= 0 && b[size_t(pos)] == n - 1)
        {
            b[size_t(pos)] = 0;
            --pos;
        }
        if (pos < 0)
            break;
        ++b[size_t(pos)];
    }
    return out;
}

// exhaustive posterior over (G, b) with multiplicities capped; flat
// degree-corrected prior with the live geometric rate
struct Enumerated
{
    std::map<PairKey, double> marginals; // collapsed-edge probabilities
    double log_z = -std::numeric_limits<double>::infinity();
};

inline Enumerated enumerate_posterior_flat(const MeasurementData& d, int64_t cap,
                                           double alpha = 1, double beta = 1, double mu = 1,
                                           double nu = 1, bool with_likelihood = true,
                                           int64_t edges_ref = -1)
{
    int n = d.node_count();
    std::vector<std::pair<int, int>> cells;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j)
            cells.push_back({i, j});
    auto partitions = labeled_partitions(n);

    Enumerated out;
    std::map<PairKey, double> acc;
    std::vector<int64_t> mult(cells.size(), 0);
    for (;;)
    {
        Mult g;
        std::vector<std::pair<int, int>> edges;
        for (size_t c = 0; c < cells.size(); ++c)
            if (mult[c] > 0)
            {
                g[cells[c]] = mult[c];
                if (cells[c].first != cells[c].second)
                    edges.push_back(cells[c]);
            }
        double like = 0;
        if (with_likelihood)
            like = log_like_uniform(d, edges, alpha, beta, mu, nu);
        for (auto& b : partitions)
        {
            double w = like + log_dcsbm_flat(n, g, b, -1, edges_ref) + log_partition_prior(b);
            if (w == -std::numeric_limits<double>::infinity())
                continue;
            double& z = out.log_z;
            z = z > w ? z + std::log1p(std::exp(w - z)) : w + std::log1p(std::exp(z - w));
            for (auto& [i, j] : edges)
            {
                double& m = acc
                                .try_emplace(netrecon::pair_key(NodeId(i), NodeId(j)),
                                             -std::numeric_limits<double>::infinity())
                                .first->second;
                m = m > w ? m + std::log1p(std::exp(w - m)) : w + std::log1p(std::exp(m - w));
            }
        }
        // odometer over multiplicities
        size_t pos = 0;
        while (pos < cells.size() && mult[pos] == cap)
        {
            mult[pos] = 0;
            ++pos;
        }
        if (pos == cells.size())
            break;
        ++mult[pos];
    }
    for (auto& [k, v] : acc)
        out.marginals[k] = std::exp(v - out.log_z);
    return out;
}

} // namespace oracle
