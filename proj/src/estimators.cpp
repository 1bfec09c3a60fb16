#include "netrecon/estimators.hpp"

#include <cmath>

namespace netrecon {

void MarginalAccumulator::add_sample(const AdjacencyView& a)
{
    if (a.node_count() != n_)
        throw DataError("MarginalAccumulator: node count mismatch");
    ++samples_;
    for (PairKey e : a.edges())
        ++counts_[e];
}

void MarginalAccumulator::add_error_moments(const BetaParams& p, const BetaParams& q)
{
    p_m1_.add(p.mean());
    p_m2_.add(p.second_moment());
    q_m1_.add(q.mean());
    q_m2_.add(q.second_moment());
}

void MarginalAccumulator::add_degree_sample(const AdjacencyView& a, int64_t k_max)
{
    auto v = degree_prob_vector(a, k_max);
    if (degree_sum_.empty())
        degree_sum_.assign(v.size(), 0.0);
    if (degree_sum_.size() != v.size())
        throw DataError("MarginalAccumulator: inconsistent degree cutoff");
    for (size_t k = 0; k < v.size(); ++k)
        degree_sum_[k] += v[k];
    ++degree_samples_;
}

void MarginalAccumulator::merge(const MarginalAccumulator& o)
{
    if (o.n_ != n_)
        throw DataError("MarginalAccumulator: node count mismatch");
    samples_ += o.samples_;
    for (auto& [k, c] : o.counts_)
        counts_[k] += c;
    p_m1_.merge(o.p_m1_);
    p_m2_.merge(o.p_m2_);
    q_m1_.merge(o.q_m1_);
    q_m2_.merge(o.q_m2_);
    for (auto& [name, st] : o.scalars_)
        scalars_[name].merge(st);
    if (o.degree_samples_)
    {
        if (degree_sum_.empty())
            degree_sum_.assign(o.degree_sum_.size(), 0.0);
        if (degree_sum_.size() != o.degree_sum_.size())
            throw DataError("MarginalAccumulator: inconsistent degree cutoff");
        for (size_t k = 0; k < degree_sum_.size(); ++k)
            degree_sum_[k] += o.degree_sum_[k];
        degree_samples_ += o.degree_samples_;
    }
}

std::vector<double> MarginalAccumulator::degree_estimate() const
{
    std::vector<double> v(degree_sum_);
    for (double& x : v)
        x /= double(degree_samples_);
    return v;
}

AdjacencyView mmp_estimate(const MarginalAccumulator& acc)
{
    if (acc.samples() < 1)
        throw DataError("mmp_estimate: no samples");
    AdjacencyView a(acc.node_count());
    for (auto& [k, c] : acc.counts())
        if (2 * c > acc.samples()) // pi > 1/2; ties resolve to no edge
        {
            auto [i, j] = pair_nodes(k);
            a.add_edge(i, j);
        }
    return a;
}

std::pair<double, double> posterior_scalar(const std::vector<double>& values)
{
    ScalarStat st;
    for (double v : values)
        st.add(v);
    return {st.mean(), st.sd()};
}

std::vector<double> degree_prob_vector(const AdjacencyView& a, int64_t k_max)
{
    auto deg = a.degrees();
    std::vector<int64_t> nk(size_t(k_max) + 1, 0);
    for (int64_t k : deg)
    {
        if (k > k_max)
            throw DataError("degree_prob_vector: observed degree exceeds cutoff");
        ++nk[size_t(k)];
    }
    int64_t n = a.node_count();
    std::vector<double> p(size_t(k_max) + 1);
    for (size_t k = 0; k < p.size(); ++k)
        p[k] = double(nk[k] + 1) / double(n + k_max + 1);
    return p;
}

std::vector<double> degree_distribution_estimate(const std::vector<AdjacencyView>& samples,
                                                 int64_t k_max)
{
    if (samples.empty())
        throw DataError("degree_distribution_estimate: no samples");
    std::vector<double> acc(size_t(k_max) + 1, 0.0);
    for (auto& a : samples)
    {
        auto v = degree_prob_vector(a, k_max);
        for (size_t k = 0; k < acc.size(); ++k)
            acc[k] += v[k];
    }
    for (double& x : acc)
        x /= double(samples.size());
    return acc;
}

double kl_divergence(const std::vector<double>& p, const std::vector<double>& phat)
{
    if (p.size() != phat.size())
        throw DataError("kl_divergence: size mismatch");
    double kl = 0;
    for (size_t k = 0; k < p.size(); ++k)
    {
        if (p[k] == 0)
            continue;
        if (phat[k] <= 0)
            return std::numeric_limits<double>::infinity();
        kl += p[k] * std::log(p[k] / phat[k]);
    }
    return kl;
}

// ============================================================
// graph observables
// ============================================================

double clustering_coefficient(const AdjacencyView& a)
{
    NodeId n = a.node_count();
    std::vector<std::vector<NodeId>> adj{size_t(n)};
    for (PairKey e : a.edges())
    {
        auto [i, j] = pair_nodes(e);
        adj[size_t(i)].push_back(j);
        adj[size_t(j)].push_back(i);
    }
    double total = 0;
    for (NodeId i = 0; i < n; ++i)
    {
        auto& nb = adj[size_t(i)];
        size_t k = nb.size();
        if (k < 2)
            continue;
        int64_t tri = 0;
        for (size_t x = 0; x < k; ++x)
            for (size_t y = x + 1; y < k; ++y)
                if (a.has_edge(nb[x], nb[y]))
                    ++tri;
        total += 2.0 * double(tri) / (double(k) * double(k - 1));
    }
    return total / double(n);
}

std::optional<double> degree_assortativity(const AdjacencyView& a)
{
    if (a.edge_count() == 0)
        return std::nullopt;
    auto deg = a.degrees();
    // Pearson correlation over the directed edge-end pairs
    double sx = 0, sxx = 0, sxy = 0;
    int64_t m = 0;
    for (PairKey e : a.edges())
    {
        auto [i, j] = pair_nodes(e);
        double ki = double(deg[size_t(i)]), kj = double(deg[size_t(j)]);
        sx += ki + kj;
        sxx += ki * ki + kj * kj;
        sxy += 2 * ki * kj;
        m += 2;
    }
    double mean = sx / double(m);
    double var = sxx / double(m) - mean * mean;
    if (var <= 1e-12)
        return std::nullopt;
    double cov = sxy / double(m) - mean * mean;
    return cov / var;
}

double effective_group_count(const std::vector<int32_t>& b)
{
    if (b.empty())
        throw DataError("effective_group_count: empty partition");
    std::unordered_map<int32_t, int64_t> sizes;
    for (int32_t g : b)
        ++sizes[g];
    double h = 0;
    for (auto& [g, c] : sizes)
    {
        double f = double(c) / double(b.size());
        h -= f * std::log(f);
    }
    return std::exp(h);
}

std::vector<int64_t> degree_histogram(const AdjacencyView& a)
{
    auto deg = a.degrees();
    int64_t mx = 0;
    for (int64_t k : deg)
        mx = std::max(mx, k);
    std::vector<int64_t> h(size_t(mx) + 1, 0);
    for (int64_t k : deg)
        ++h[size_t(k)];
    return h;
}

double normalized_mutual_information(const std::vector<int32_t>& b1,
                                     const std::vector<int32_t>& b2)
{
    if (b1.size() != b2.size() || b1.empty())
        throw DataError("normalized_mutual_information: size mismatch");
    double n = double(b1.size());
    std::unordered_map<int64_t, int64_t> joint;
    std::unordered_map<int32_t, int64_t> m1, m2;
    for (size_t i = 0; i < b1.size(); ++i)
    {
        ++joint[(int64_t(b1[i]) << 32) | uint32_t(b2[i])];
        ++m1[b1[i]];
        ++m2[b2[i]];
    }
    double h1 = 0, h2 = 0, mi = 0;
    for (auto& [g, c] : m1)
        h1 -= c / n * std::log(c / n);
    for (auto& [g, c] : m2)
        h2 -= c / n * std::log(c / n);
    for (auto& [k, c] : joint)
    {
        int32_t g1 = int32_t(k >> 32), g2 = int32_t(k & 0xffffffff);
        double pj = c / n;
        mi += pj * std::log(pj * n * n / (double(m1[g1]) * double(m2[g2])));
    }
    if (h1 + h2 <= 0)
        return 1.0; // both single-group partitions are identical
    return 2 * mi / (h1 + h2);
}

} // namespace netrecon
