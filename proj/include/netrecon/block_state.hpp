#pragma once

#include <unordered_map>
#include <vector>

#include "netrecon/graph.hpp"
#include "netrecon/nums.hpp"
#include "netrecon/partition.hpp"

namespace netrecon {

// uniform prior over simple graphs with the same edge count, summed over
// densities: -log C(C(N,2), E) - log(C(N,2) + 1)
double log_prior_er(const AdjacencyView& a);

// ============================================================
// TokenUrn: multiset of directed edge slots (u,v) belonging to
// one group (u is the member side). O(1) insert / remove / sample.
// ============================================================

class TokenUrn
{
public:
    struct Token
    {
        NodeId u, v;
        int32_t where_idx;
    };

    int64_t size() const { return int64_t(tokens_.size()); }

    void insert(NodeId u, NodeId v, int64_t count = 1);
    void remove(NodeId u, NodeId v, int64_t count = 1);
    std::pair<NodeId, NodeId> sample(Rng& rng) const
    {
        const Token& t = tokens_[size_t(rng.below(size()))];
        return {t.u, t.v};
    }
    void clear()
    {
        tokens_.clear();
        where_.clear();
    }

private:
    static uint64_t okey(NodeId u, NodeId v) { return (uint64_t(uint32_t(u)) << 32) | uint32_t(v); }

    std::vector<Token> tokens_;
    std::unordered_map<uint64_t, std::vector<int32_t>> where_;
};

// ============================================================
// BlockState: latent multigraph plus the (possibly nested)
// partition stack, with all sufficient statistics and cached
// log-probability terms maintained incrementally.
// ============================================================

class BlockState
{
public:
    enum class EdgeCountPrior
    {
        flat,  // single-level geometric prior on group pair counts
        nested // recursive multigraph priors closed by a single top group
    };

    struct Options
    {
        EdgeCountPrior edge_prior = EdgeCountPrior::nested;
        int max_depth = 10;        // nested mode only
        // Reference edge count fixing the geometric rate of the edge-count
        // prior (2*ref/B(B+1)). Negative: use the live latent count, which
        // leaves the prior improper and is only suitable for evaluation.
        int64_t edges_ref = -1;
        double lambda_override = -1; // > 0 fixes the rate directly (testing)
    };

    static constexpr int32_t new_group = -1;

    BlockState(LatentMultigraph g, Options opt);
    BlockState(LatentMultigraph g, const HierarchicalPartition& hp, Options opt);

    const LatentMultigraph& graph() const { return g_; }
    const Options& options() const { return opt_; }

    int depth() const { return int(levels_.size()); }
    int32_t object_count(int level) const { return int32_t(levels_[size_t(level)].b.size()); }
    int32_t group_count(int level) const { return int32_t(levels_[size_t(level)].nr.size()); }
    int32_t label(int level, int32_t obj) const { return levels_[size_t(level)].b[size_t(obj)]; }
    int64_t group_size(int level, int32_t r) const { return levels_[size_t(level)].nr[size_t(r)]; }
    int64_t group_degree(int level, int32_t r) const { return levels_[size_t(level)].edeg[size_t(r)]; }
    int64_t pair_count(int level, int32_t r, int32_t s) const;
    int64_t latent_edges() const { return g_.edge_total(); }

    HierarchicalPartition partition() const;

    // degree of an object in the level-l multigraph (self-slots twice)
    int64_t obj_degree(int level, int32_t obj) const;

    // iterate (neighbor object, directed slot count) over the level-l row
    // of obj; self-neighbor reported with its full (doubled) slot count
    template <class F>
    void for_slots(int level, int32_t obj, F&& f) const
    {
        if (level == 0)
        {
            for (auto& [v, m] : g_.row(NodeId(obj)))
                f(int32_t(v), v == NodeId(obj) ? 2 * m : m);
        }
        else
        {
            for (auto& [v, m] : levels_[size_t(level - 1)].erows[size_t(obj)])
                f(v, m);
        }
    }

    // --- cached log-probability pieces ---
    double log_prior() const { return total_; }           // log P(G, {b})
    double log_partition_prior() const;                   // log P({b})
    double log_marginal_graph() const { return total_ - log_partition_prior(); }
    double log_edge_count_prior_nested() const;           // nested closing terms
    double recompute_log_prior();                          // rebuild all caches

    // --- entry updates ---
    struct EntryResult
    {
        double dprior = 0;
        int a_change = 0; // +1 edge appeared, -1 edge vanished, 0 none
    };
    EntryResult apply_entry(NodeId i, NodeId j, int64_t dm);

    // --- node moves ---
    struct MoveSpec
    {
        int level = 0;
        int32_t obj = 0;
        int32_t target = 0;          // group label or new_group
        std::vector<int32_t> chain;  // meta choices for levels above when target == new_group
    };
    struct MoveResult
    {
        double dprior = 0;
        bool moved = false;
        MoveSpec undo;
        int cascade = 0; // number of levels whose group was destroyed above `level`
    };
    MoveResult apply_node_move(const MoveSpec& mv);

    // --- entry-update pair sampling (level 0) ---
    std::pair<NodeId, NodeId> sample_pair(Rng& rng) const;
    double log_pair_prob(NodeId i, NodeId j) const;

    // sample group s with probability e_ts / e_t
    int32_t sample_group_neighbor(int level, int32_t t, Rng& rng) const;

    bool consistent(double tol = 1e-6) const;

private:
    struct Level
    {
        std::vector<int32_t> b;                    // object -> group
        std::vector<int64_t> nr;                   // group sizes
        std::vector<std::vector<int32_t>> members; // group -> objects
        std::vector<int32_t> pos;                  // object -> index in members
        std::vector<std::unordered_map<int32_t, int64_t>> erows; // group pair counts
        std::vector<int64_t> edeg;                 // group degree sums
        double t_part = 0;
        double t_mat = 0;
        double sum_lf_nr = 0;
    };

    // level 0 degree bookkeeping
    std::vector<std::unordered_map<int64_t, int64_t>> eta_; // group -> degree -> count
    double t_deg_ = 0;
    double g_node_term_ = 0;
    double t_edges_ = 0;

    LatentMultigraph g_;
    Options opt_;
    std::vector<Level> levels_;

    // sampling urns (level 0)
    std::vector<TokenUrn> urns_;
    std::vector<std::vector<NodeId>> g_members_; // alias of level-0 members? kept in levels_
    double total_ = 0;

    // ---- helpers ----
    void init_levels_from(const HierarchicalPartition& hp);
    void rebuild();
    double edge_term_value() const;
    void refresh_edge_term();
    void part_term_refresh(int level);
    double mat_cell_term(int level, int32_t r, int32_t s, int64_t value) const;
    double mat_size_row_term(int level, int32_t r) const;
    void cell_update(int level, int32_t r, int32_t s, int64_t dstored);
    void propagate_edge_delta(int level, int32_t a, int32_t b, int64_t dcount);
    void deg_q_refresh(int32_t r, int64_t old_e, int64_t old_n);
    void eta_shift(int32_t r, int64_t deg, int64_t delta);

    int32_t create_group(int level, const int32_t* chain, size_t chain_len, int* cascade_up);
    void insert_object(int level, int32_t group);
    // removes empty group r at `level`; records the meta chain needed to
    // recreate it into `chain_out`
    void destroy_group(int level, int32_t r, std::vector<int32_t>& chain_out);
    void remove_object(int level, int32_t obj, std::vector<int32_t>& chain_out);
    void trim_trivial_top();
    void append_top_level();

    void move_membership(int level, int32_t obj, int32_t from, int32_t to);
    void shift_edges(int level, int32_t obj, int32_t from, int32_t to);
};

} // namespace netrecon
