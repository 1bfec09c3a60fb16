#pragma once

#include <cstdint>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "netrecon/common.hpp"

namespace netrecon {

// ============================================================
// Latent multigraph G: integer multiplicities on unordered node
// pairs, self-pairs allowed. Degrees count self-loops twice.
// ============================================================

class LatentMultigraph
{
public:
    explicit LatentMultigraph(NodeId node_count)
        : n_(node_count), degree_(size_t(node_count), 0), adj_(size_t(node_count))
    {
        if (node_count <= 0)
            throw DataError("LatentMultigraph: node_count must be positive");
    }

    NodeId node_count() const { return n_; }

    int64_t multiplicity(NodeId i, NodeId j) const
    {
        auto it = mult_.find(pair_key(i, j));
        return it == mult_.end() ? 0 : it->second;
    }

    // total edge count, self-loops counted once
    int64_t edge_total() const { return edges_; }

    int64_t degree(NodeId i) const { return degree_[size_t(i)]; }

    // adds delta (may be negative) to G_ij; returns new multiplicity
    int64_t add(NodeId i, NodeId j, int64_t delta);

    // sparse adjacency row: neighbor -> multiplicity (self included once)
    const std::unordered_map<NodeId, int64_t>& row(NodeId i) const { return adj_[size_t(i)]; }

    const std::unordered_map<PairKey, int64_t>& entries() const { return mult_; }

    bool degrees_consistent() const;

private:
    NodeId n_;
    int64_t edges_ = 0;
    std::unordered_map<PairKey, int64_t> mult_;
    std::vector<int64_t> degree_;
    std::vector<std::unordered_map<NodeId, int64_t>> adj_;
};

// ============================================================
// Simple undirected graph A: set of unordered distinct pairs.
// ============================================================

class AdjacencyView
{
public:
    explicit AdjacencyView(NodeId node_count) : n_(node_count)
    {
        if (node_count <= 0)
            throw DataError("AdjacencyView: node_count must be positive");
    }

    NodeId node_count() const { return n_; }
    int64_t edge_count() const { return int64_t(edges_.size()); }

    bool has_edge(NodeId i, NodeId j) const
    {
        return i != j && edges_.count(pair_key(i, j)) > 0;
    }

    void add_edge(NodeId i, NodeId j)
    {
        if (i == j)
            throw DataError("AdjacencyView: self-pairs not allowed");
        check_node(i);
        check_node(j);
        edges_.insert(pair_key(i, j));
    }

    void remove_edge(NodeId i, NodeId j) { edges_.erase(pair_key(i, j)); }

    const std::unordered_set<PairKey>& edges() const { return edges_; }

    std::vector<int64_t> degrees() const;

private:
    void check_node(NodeId i) const
    {
        if (i < 0 || i >= n_)
            throw DataError("AdjacencyView: node id out of range");
    }

    NodeId n_;
    std::unordered_set<PairKey> edges_;
};

// A_ij = 1 iff G_ij > 0 and i != j
AdjacencyView collapse_multigraph(const LatentMultigraph& g);

// sum_{i<j} |A_ij - B_ij|
int64_t hamming_distance(const AdjacencyView& a, const AdjacencyView& b);

// 1 - d(A,B) / sum_{i<j}(A_ij + B_ij); two empty graphs compare as
// identical and give 1
double similarity(const AdjacencyView& a, const AdjacencyView& b);

} // namespace netrecon
