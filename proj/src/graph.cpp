#include "netrecon/graph.hpp"

namespace netrecon {

int64_t LatentMultigraph::add(NodeId i, NodeId j, int64_t delta)
{
    if (i < 0 || i >= n_ || j < 0 || j >= n_)
        throw DataError("LatentMultigraph: node id out of range");
    PairKey k = pair_key(i, j);
    auto [it, inserted] = mult_.try_emplace(k, 0);
    int64_t next = it->second + delta;
    if (next < 0)
        throw DataError("LatentMultigraph: multiplicity would become negative");
    it->second = next;
    edges_ += delta;
    if (i == j)
    {
        degree_[size_t(i)] += 2 * delta;
        auto [ait, ain] = adj_[size_t(i)].try_emplace(i, 0);
        ait->second += delta;
        if (ait->second == 0)
            adj_[size_t(i)].erase(ait);
    }
    else
    {
        degree_[size_t(i)] += delta;
        degree_[size_t(j)] += delta;
        for (auto [u, v] : {std::pair{i, j}, std::pair{j, i}})
        {
            auto [ait, ain] = adj_[size_t(u)].try_emplace(v, 0);
            ait->second += delta;
            if (ait->second == 0)
                adj_[size_t(u)].erase(ait);
        }
    }
    if (next == 0)
        mult_.erase(it);
    return next;
}

bool LatentMultigraph::degrees_consistent() const
{
    std::vector<int64_t> k(size_t(n_), 0);
    for (auto& [key, m] : mult_)
    {
        auto [i, j] = pair_nodes(key);
        if (i == j)
            k[size_t(i)] += 2 * m;
        else
        {
            k[size_t(i)] += m;
            k[size_t(j)] += m;
        }
    }
    return k == degree_;
}

std::vector<int64_t> AdjacencyView::degrees() const
{
    std::vector<int64_t> k(size_t(n_), 0);
    for (PairKey e : edges_)
    {
        auto [i, j] = pair_nodes(e);
        ++k[size_t(i)];
        ++k[size_t(j)];
    }
    return k;
}

AdjacencyView collapse_multigraph(const LatentMultigraph& g)
{
    AdjacencyView a(g.node_count());
    for (auto& [key, m] : g.entries())
    {
        if (m > 0 && !is_self_pair(key))
        {
            auto [i, j] = pair_nodes(key);
            a.add_edge(i, j);
        }
    }
    return a;
}

int64_t hamming_distance(const AdjacencyView& a, const AdjacencyView& b)
{
    if (a.node_count() != b.node_count())
        throw DataError("hamming_distance: mismatched node counts");
    int64_t d = 0;
    for (PairKey e : a.edges())
        if (!b.edges().count(e))
            ++d;
    for (PairKey e : b.edges())
        if (!a.edges().count(e))
            ++d;
    return d;
}

double similarity(const AdjacencyView& a, const AdjacencyView& b)
{
    int64_t total = a.edge_count() + b.edge_count();
    if (total == 0)
        return 1.0; // two empty graphs are identical
    return 1.0 - double(hamming_distance(a, b)) / double(total);
}

} // namespace netrecon
