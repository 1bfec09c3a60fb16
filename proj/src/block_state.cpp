#include "netrecon/block_state.hpp"

#include <algorithm>
#include <cassert>

namespace netrecon {

double log_prior_partition(const std::vector<int32_t>& b)
{
    int64_t n = int64_t(b.size());
    if (n == 0)
        throw DataError("log_prior_partition: empty partition");
    int32_t bmax = -1;
    for (int32_t g : b)
        bmax = std::max(bmax, g);
    int64_t bcount = bmax + 1;
    std::vector<int64_t> nr(size_t(bcount), 0);
    for (int32_t g : b)
    {
        if (g < 0)
            throw DataError("log_prior_partition: negative label");
        ++nr[size_t(g)];
    }
    double v = 0;
    for (int64_t c : nr)
    {
        if (c == 0)
            throw DataError("log_prior_partition: unoccupied group");
        v += lfact(c);
    }
    return v - lfact(n) - lbinom(n - 1, bcount - 1) - std::log(double(n));
}

double log_prior_er(const AdjacencyView& a)
{
    int64_t pairs = int64_t(a.node_count()) * (a.node_count() - 1) / 2;
    return -lbinom(pairs, a.edge_count()) - std::log(double(pairs) + 1);
}

// ============================================================
// TokenUrn
// ============================================================

void TokenUrn::insert(NodeId u, NodeId v, int64_t count)
{
    auto& w = where_[okey(u, v)];
    for (int64_t c = 0; c < count; ++c)
    {
        w.push_back(int32_t(tokens_.size()));
        tokens_.push_back({u, v, int32_t(w.size()) - 1});
    }
}

void TokenUrn::remove(NodeId u, NodeId v, int64_t count)
{
    auto it = where_.find(okey(u, v));
    for (int64_t c = 0; c < count; ++c)
    {
        int32_t pos = it->second.back();
        it->second.pop_back();
        if (pos != int32_t(tokens_.size()) - 1)
        {
            Token moved = tokens_.back();
            tokens_[size_t(pos)] = moved;
            where_[okey(moved.u, moved.v)][size_t(moved.where_idx)] = pos;
        }
        tokens_.pop_back();
    }
    if (it->second.empty())
        where_.erase(it);
}

// ============================================================
// BlockState construction
// ============================================================

BlockState::BlockState(LatentMultigraph g, Options opt) : g_(std::move(g)), opt_(opt)
{
    HierarchicalPartition hp;
    hp.levels.push_back(std::vector<int32_t>(size_t(g_.node_count()), 0));
    init_levels_from(hp);
    rebuild();
}

BlockState::BlockState(LatentMultigraph g, const HierarchicalPartition& hp, Options opt)
    : g_(std::move(g)), opt_(opt)
{
    init_levels_from(hp);
    rebuild();
}

void BlockState::init_levels_from(const HierarchicalPartition& hp)
{
    hp.validate();
    if (hp.levels[0].size() != size_t(g_.node_count()))
        throw DataError("BlockState: partition size does not match graph");
    if (opt_.edge_prior == EdgeCountPrior::flat && hp.levels.size() != 1)
        throw DataError("BlockState: flat edge-count prior takes a single-level partition");

    levels_.clear();
    size_t expect = size_t(g_.node_count());
    for (auto& b : hp.levels)
    {
        if (b.size() != expect)
            throw DataError("BlockState: hierarchy level sizes inconsistent");
        Level lv;
        lv.b = b;
        levels_.push_back(std::move(lv));
        expect = size_t(HierarchicalPartition::group_count(b));
    }
    if (opt_.edge_prior == EdgeCountPrior::nested)
    {
        // close the hierarchy with single-group levels
        while (expect > 1 && int(levels_.size()) < opt_.max_depth)
        {
            Level lv;
            lv.b.assign(expect, 0);
            levels_.push_back(std::move(lv));
            expect = 1;
        }
        if (expect > 1)
            throw DataError("BlockState: hierarchy does not reach a single group within max_depth");
    }
}

HierarchicalPartition BlockState::partition() const
{
    HierarchicalPartition hp;
    for (auto& lv : levels_)
        hp.levels.push_back(lv.b);
    return hp;
}

int64_t BlockState::pair_count(int level, int32_t r, int32_t s) const
{
    auto& row = levels_[size_t(level)].erows[size_t(r)];
    auto it = row.find(s);
    return it == row.end() ? 0 : it->second;
}

int64_t BlockState::obj_degree(int level, int32_t obj) const
{
    if (level == 0)
        return g_.degree(NodeId(obj));
    return levels_[size_t(level - 1)].edeg[size_t(obj)];
}

// ============================================================
// cached term helpers
// ============================================================

double BlockState::mat_cell_term(int level, int32_t r, int32_t s, int64_t value) const
{
    auto& lv = levels_[size_t(level)];
    if (level == 0)
        return r == s ? ldfact_even(value) : lfact(value);
    // multiset likelihood of placing the coarse count over the fine pairs;
    // empty-group transients are clamped (valid states never carry edges
    // into empty groups)
    if (r == s)
    {
        int64_t cap = lv.nr[size_t(r)] * (lv.nr[size_t(r)] + 1) / 2;
        if (cap == 0)
            return 0;
        return -lmultiset(cap, value / 2);
    }
    int64_t cap = lv.nr[size_t(r)] * lv.nr[size_t(s)];
    if (cap == 0)
        return 0;
    return -lmultiset(cap, value);
}

namespace {
inline double qterm_clamped(int64_t e, int64_t n)
{
    if (n == 0 && e > 0)
        return 0; // transient only
    return -log_q(e, n);
}
} // namespace

void BlockState::deg_q_refresh(int32_t r, int64_t old_e, int64_t old_n)
{
    auto& lv = levels_[0];
    double d = qterm_clamped(lv.edeg[size_t(r)], lv.nr[size_t(r)]) - qterm_clamped(old_e, old_n);
    t_deg_ += d;
    total_ += d;
}

void BlockState::eta_shift(int32_t r, int64_t deg, int64_t delta)
{
    auto& m = eta_[size_t(r)];
    auto [it, ins] = m.try_emplace(deg, 0);
    int64_t oldc = it->second;
    it->second += delta;
    double d = lfact(it->second) - lfact(oldc);
    if (it->second == 0)
        m.erase(it);
    t_deg_ += d;
    total_ += d;
}

void BlockState::part_term_refresh(int level)
{
    auto& lv = levels_[size_t(level)];
    int64_t n = int64_t(lv.b.size());
    int64_t bcount = int64_t(lv.nr.size());
    // a freshly created group can transiently give bcount = n + 1
    double choose = bcount <= n ? lbinom(n - 1, bcount - 1) : 0.0;
    double nv = lv.sum_lf_nr - lfact(n) - choose - std::log(double(n));
    total_ += nv - lv.t_part;
    lv.t_part = nv;
}

double BlockState::edge_term_value() const
{
    double e = double(g_.edge_total());
    double ref = opt_.edges_ref >= 0 ? double(opt_.edges_ref) : e;
    double lam;
    int64_t bpairs;
    if (opt_.edge_prior == EdgeCountPrior::flat)
    {
        int64_t bcount = int64_t(levels_[0].nr.size());
        bpairs = bcount * (bcount + 1) / 2;
        lam = opt_.lambda_override > 0 ? opt_.lambda_override
                                       : 2 * ref / double(bcount * (bcount + 1));
    }
    else
    {
        bpairs = 1;
        lam = opt_.lambda_override > 0 ? opt_.lambda_override : ref;
    }
    if (lam <= 0)
        return e > 0 ? neg_inf : 0.0;
    return e * std::log(lam) - (e + double(bpairs)) * std::log1p(lam);
}

void BlockState::refresh_edge_term()
{
    double nv = edge_term_value();
    total_ += nv - t_edges_;
    t_edges_ = nv;
}

double BlockState::log_partition_prior() const
{
    double v = 0;
    for (auto& lv : levels_)
        v += lv.t_part;
    return v;
}

double BlockState::log_edge_count_prior_nested() const
{
    if (opt_.edge_prior != EdgeCountPrior::nested)
        throw DataError("log_edge_count_prior_nested: state uses the flat prior");
    double v = t_edges_;
    for (size_t l = 1; l < levels_.size(); ++l)
        v += levels_[l].t_mat + levels_[l].t_part;
    return v;
}

// ============================================================
// full rebuild
// ============================================================

void BlockState::rebuild()
{
    ensure_lfact(size_t(4 * g_.edge_total() + g_.node_count() + 1024));
    init_q_cache();

    total_ = 0;
    int nlv = depth();
    for (int l = 0; l < nlv; ++l)
    {
        auto& lv = levels_[size_t(l)];
        int32_t nobj = int32_t(lv.b.size());
        int32_t bcount = HierarchicalPartition::group_count(lv.b);
        lv.nr.assign(size_t(bcount), 0);
        lv.members.assign(size_t(bcount), {});
        lv.pos.assign(size_t(nobj), 0);
        lv.erows.assign(size_t(bcount), {});
        lv.edeg.assign(size_t(bcount), 0);
        for (int32_t o = 0; o < nobj; ++o)
        {
            int32_t g = lv.b[size_t(o)];
            ++lv.nr[size_t(g)];
            lv.pos[size_t(o)] = int32_t(lv.members[size_t(g)].size());
            lv.members[size_t(g)].push_back(o);
        }
        lv.sum_lf_nr = 0;
        for (int64_t c : lv.nr)
            lv.sum_lf_nr += lfact(c);
        lv.t_part = lv.sum_lf_nr - lfact(nobj) -
                    lbinom(int64_t(nobj) - 1, int64_t(bcount) - 1) - std::log(double(nobj));
    }

    // group pair counts, level by level
    for (int l = 0; l < nlv; ++l)
    {
        auto& lv = levels_[size_t(l)];
        auto add_cell = [&](int32_t a, int32_t b, int64_t u) {
            // u: edge count for a != b, doubled self count for a == b
            int32_t r = lv.b[size_t(a)], s = lv.b[size_t(b)];
            int64_t st = (a != b && r == s) ? 2 * u : u;
            if (r == s)
                lv.erows[size_t(r)][r] += st;
            else
            {
                lv.erows[size_t(r)][s] += st;
                lv.erows[size_t(s)][r] += st;
            }
            lv.edeg[size_t(r)] += st;
            if (r != s)
                lv.edeg[size_t(s)] += st;
        };
        if (l == 0)
        {
            for (auto& [key, m] : g_.entries())
            {
                auto [i, j] = pair_nodes(key);
                add_cell(i, j, i == j ? 2 * m : m);
            }
        }
        else
        {
            auto& below = levels_[size_t(l - 1)];
            for (int32_t r = 0; r < int32_t(below.erows.size()); ++r)
                for (auto& [s, w] : below.erows[size_t(r)])
                    if (s >= r)
                        add_cell(r, s, w);
        }
    }

    // matrix terms
    for (int l = 0; l < nlv; ++l)
    {
        auto& lv = levels_[size_t(l)];
        lv.t_mat = 0;
        for (int32_t r = 0; r < int32_t(lv.erows.size()); ++r)
            for (auto& [s, w] : lv.erows[size_t(r)])
                if (s >= r)
                    lv.t_mat += mat_cell_term(l, r, s, w);
        if (l == 0)
            for (int64_t e : lv.edeg)
                lv.t_mat -= lfact(e);
    }

    // degree bookkeeping at level 0
    auto& l0 = levels_[0];
    eta_.assign(l0.nr.size(), {});
    urns_.assign(l0.nr.size(), {});
    for (NodeId i = 0; i < g_.node_count(); ++i)
        ++eta_[size_t(l0.b[size_t(i)])][g_.degree(i)];
    for (auto& [key, m] : g_.entries())
    {
        auto [i, j] = pair_nodes(key);
        if (i == j)
            urns_[size_t(l0.b[size_t(i)])].insert(i, i, 2 * m);
        else
        {
            urns_[size_t(l0.b[size_t(i)])].insert(i, j, m);
            urns_[size_t(l0.b[size_t(j)])].insert(j, i, m);
        }
    }
    t_deg_ = 0;
    for (size_t r = 0; r < l0.nr.size(); ++r)
    {
        for (auto& [k, c] : eta_[r])
            t_deg_ += lfact(c);
        t_deg_ -= lfact(l0.nr[r]);
        t_deg_ += qterm_clamped(l0.edeg[r], l0.nr[r]);
    }

    g_node_term_ = 0;
    for (NodeId i = 0; i < g_.node_count(); ++i)
        g_node_term_ += lfact(g_.degree(i));
    for (auto& [key, m] : g_.entries())
    {
        if (is_self_pair(key))
            g_node_term_ -= m * std::log(2.0) + lfact(m);
        else
            g_node_term_ -= lfact(m);
    }

    t_edges_ = edge_term_value();

    total_ = g_node_term_ + t_deg_ + t_edges_;
    for (auto& lv : levels_)
        total_ += lv.t_part + lv.t_mat;
}

double BlockState::recompute_log_prior()
{
    rebuild();
    return total_;
}

// ============================================================
// cell updates with upward propagation
// ============================================================

void BlockState::cell_update(int level, int32_t r, int32_t s, int64_t dstored)
{
    if (dstored == 0)
        return;
    auto& lv = levels_[size_t(level)];
    auto& row = lv.erows[size_t(r)];
    auto it = row.find(s);
    int64_t oldv = it == row.end() ? 0 : it->second;
    int64_t newv = oldv + dstored;
    assert(newv >= 0);

    double dterm = mat_cell_term(level, r, s, newv) - mat_cell_term(level, r, s, oldv);
    lv.t_mat += dterm;
    total_ += dterm;

    if (newv == 0)
        row.erase(s);
    else
        row[s] = newv;
    if (r != s)
    {
        auto& row2 = lv.erows[size_t(s)];
        if (newv == 0)
            row2.erase(r);
        else
            row2[r] = newv;
    }

    auto bump_deg = [&](int32_t t, int64_t dd) {
        int64_t olde = lv.edeg[size_t(t)];
        lv.edeg[size_t(t)] += dd;
        if (level == 0)
        {
            double d = -lfact(lv.edeg[size_t(t)]) + lfact(olde);
            lv.t_mat += d;
            total_ += d;
            deg_q_refresh(t, olde, lv.nr[size_t(t)]);
        }
    };
    if (r == s)
        bump_deg(r, dstored);
    else
    {
        bump_deg(r, dstored);
        bump_deg(s, dstored);
    }

    if (level + 1 < depth())
    {
        auto& up = levels_[size_t(level + 1)];
        int32_t ur = up.b[size_t(r)], us = up.b[size_t(s)];
        int64_t next = (r != s && ur == us) ? 2 * dstored : dstored;
        cell_update(level + 1, ur, us, next);
    }
}

// ============================================================
// entry updates
// ============================================================

BlockState::EntryResult BlockState::apply_entry(NodeId i, NodeId j, int64_t dm)
{
    EntryResult res;
    if (dm == 0)
        return res;
    double before = total_;
    auto& l0 = levels_[0];
    int32_t r = l0.b[size_t(i)], s = l0.b[size_t(j)];

    int64_t old_m = g_.multiplicity(i, j);
    int64_t old_ki = g_.degree(i), old_kj = g_.degree(j);
    int64_t new_m = g_.add(i, j, dm);
    if (i != j)
        res.a_change = (old_m == 0 && new_m > 0) ? 1 : (old_m > 0 && new_m == 0) ? -1 : 0;

    // node-side terms of P(G|k,e,b)
    double dnode = 0;
    if (i == j)
    {
        dnode += lfact(g_.degree(i)) - lfact(old_ki);
        dnode -= (new_m - old_m) * std::log(2.0) + lfact(new_m) - lfact(old_m);
    }
    else
    {
        dnode += lfact(g_.degree(i)) - lfact(old_ki);
        dnode += lfact(g_.degree(j)) - lfact(old_kj);
        dnode -= lfact(new_m) - lfact(old_m);
    }
    g_node_term_ += dnode;
    total_ += dnode;

    // degree histograms
    eta_shift(r, old_ki, -1);
    eta_shift(r, g_.degree(i), +1);
    if (i != j)
    {
        eta_shift(s, old_kj, -1);
        eta_shift(s, g_.degree(j), +1);
    }

    // pair-count cells, propagated up the hierarchy
    int64_t dstored = (i == j || r == s) ? 2 * dm : dm;
    cell_update(0, r, s, dstored);

    // sampling urns
    int64_t count = std::llabs(dm);
    if (i == j)
    {
        if (dm > 0)
            urns_[size_t(r)].insert(i, i, 2 * count);
        else
            urns_[size_t(r)].remove(i, i, 2 * count);
    }
    else
    {
        if (dm > 0)
        {
            urns_[size_t(r)].insert(i, j, count);
            urns_[size_t(s)].insert(j, i, count);
        }
        else
        {
            urns_[size_t(r)].remove(i, j, count);
            urns_[size_t(s)].remove(j, i, count);
        }
    }

    refresh_edge_term();
    res.dprior = total_ - before;
    return res;
}

// ============================================================
// group management
// ============================================================

void BlockState::insert_object(int level, int32_t group)
{
    auto& lv = levels_[size_t(level)];
    int32_t obj = int32_t(lv.b.size());

    // size change affects the multiset terms of the target row
    std::vector<std::pair<int32_t, int64_t>> cells(lv.erows[size_t(group)].begin(),
                                                   lv.erows[size_t(group)].end());
    double oldterms = mat_cell_term(level, group, group, pair_count(level, group, group));
    for (auto& [s, w] : cells)
        if (s != group)
            oldterms += mat_cell_term(level, group, s, w);

    lv.b.push_back(group);
    lv.pos.push_back(int32_t(lv.members[size_t(group)].size()));
    lv.members[size_t(group)].push_back(obj);
    int64_t oldn = lv.nr[size_t(group)]++;
    lv.sum_lf_nr += lfact(oldn + 1) - lfact(oldn);

    double newterms = mat_cell_term(level, group, group, pair_count(level, group, group));
    for (auto& [s, w] : cells)
        if (s != group)
            newterms += mat_cell_term(level, group, s, w);
    lv.t_mat += newterms - oldterms;
    total_ += newterms - oldterms;

    part_term_refresh(level);
}

void BlockState::append_top_level()
{
    // the current top partition acquired a second group; close the
    // hierarchy with a fresh single-group level above it
    Level lv;
    size_t nobj = levels_.back().nr.size();
    lv.b.assign(nobj, 0);
    levels_.push_back(std::move(lv));
    auto& below = levels_[levels_.size() - 2];
    auto& top = levels_.back();
    int level = depth() - 1;

    top.nr.assign(1, int64_t(nobj));
    top.members.assign(1, {});
    top.pos.assign(nobj, 0);
    for (size_t o = 0; o < nobj; ++o)
    {
        top.pos[o] = int32_t(o);
        top.members[0].push_back(int32_t(o));
    }
    top.erows.assign(1, {});
    top.edeg.assign(1, 0);
    int64_t tot = 0;
    for (int32_t r = 0; r < int32_t(below.erows.size()); ++r)
        for (auto& [s, w] : below.erows[size_t(r)])
            if (s >= r)
                tot += (s > r) ? 2 * w : w;
    if (tot > 0)
        top.erows[0][0] = tot;
    top.edeg[0] = tot;
    top.sum_lf_nr = lfact(int64_t(nobj));
    top.t_part = 0;
    part_term_refresh(level);
    double m = mat_cell_term(level, 0, 0, tot);
    top.t_mat = m;
    total_ += m;
}

int32_t BlockState::create_group(int level, const int32_t* chain, size_t chain_len,
                                 int* levels_created)
{
    auto& lv = levels_[size_t(level)];
    int32_t g = int32_t(lv.nr.size());
    lv.nr.push_back(0);
    lv.members.emplace_back();
    lv.erows.emplace_back();
    lv.edeg.push_back(0);
    if (level == 0)
    {
        eta_.emplace_back();
        urns_.emplace_back();
    }
    part_term_refresh(level);

    if (opt_.edge_prior == EdgeCountPrior::nested)
    {
        if (level + 1 < depth())
        {
            if (chain_len == 0)
                throw DataError("create_group: missing meta-group choice");
            int32_t choice = chain[0];
            if (choice == new_group)
            {
                int32_t mg = create_group(level + 1, chain + 1, chain_len - 1, levels_created);
                insert_object(level + 1, mg);
            }
            else
                insert_object(level + 1, choice);
        }
        else
        {
            append_top_level();
            if (levels_created)
                ++*levels_created;
        }
    }
    return g;
}

void BlockState::remove_object(int level, int32_t obj, std::vector<int32_t>& chain_out)
{
    auto& lv = levels_[size_t(level)];
    int32_t mg = lv.b[size_t(obj)];

    // membership removal (object has no edges at this point)
    std::vector<std::pair<int32_t, int64_t>> cells(lv.erows[size_t(mg)].begin(),
                                                   lv.erows[size_t(mg)].end());
    double oldterms = mat_cell_term(level, mg, mg, pair_count(level, mg, mg));
    for (auto& [s, w] : cells)
        if (s != mg)
            oldterms += mat_cell_term(level, mg, s, w);

    auto& mem = lv.members[size_t(mg)];
    int32_t p = lv.pos[size_t(obj)];
    mem[size_t(p)] = mem.back();
    lv.pos[size_t(mem.back())] = p;
    mem.pop_back();
    int64_t oldn = lv.nr[size_t(mg)]--;
    lv.sum_lf_nr += lfact(oldn - 1) - lfact(oldn);

    double newterms = mat_cell_term(level, mg, mg, pair_count(level, mg, mg));
    for (auto& [s, w] : cells)
        if (s != mg)
            newterms += mat_cell_term(level, mg, s, w);
    lv.t_mat += newterms - oldterms;
    total_ += newterms - oldterms;

    // swap-remove the object index
    int32_t last = int32_t(lv.b.size()) - 1;
    if (obj != last)
    {
        int32_t lg = lv.b[size_t(last)];
        lv.b[size_t(obj)] = lg;
        lv.pos[size_t(obj)] = lv.pos[size_t(last)];
        lv.members[size_t(lg)][size_t(lv.pos[size_t(last)])] = obj;
    }
    lv.b.pop_back();
    lv.pos.pop_back();
    part_term_refresh(level);

    if (lv.nr[size_t(mg)] == 0)
    {
        chain_out.push_back(new_group);
        destroy_group(level, mg, chain_out);
    }
    else
        chain_out.push_back(mg);
}

void BlockState::destroy_group(int level, int32_t r, std::vector<int32_t>& chain_out)
{
    auto& lv = levels_[size_t(level)];
    assert(lv.nr[size_t(r)] == 0 && lv.edeg[size_t(r)] == 0);
    assert(lv.erows[size_t(r)].empty());

    // removing the object above also realigns the object indices there
    // with the label compaction performed below
    if (opt_.edge_prior == EdgeCountPrior::nested && level + 1 < depth())
        remove_object(level + 1, r, chain_out);

    // compact labels: move the last group into slot r
    int32_t last = int32_t(lv.nr.size()) - 1;
    if (r != last)
    {
        for (int32_t o : lv.members[size_t(last)])
            lv.b[size_t(o)] = r;
        lv.members[size_t(r)] = std::move(lv.members[size_t(last)]);
        lv.nr[size_t(r)] = lv.nr[size_t(last)];
        lv.edeg[size_t(r)] = lv.edeg[size_t(last)];
        // rename row and the matching column entries
        auto row = std::move(lv.erows[size_t(last)]);
        lv.erows[size_t(last)].clear();
        for (auto& [s, w] : row)
        {
            if (s == last)
                continue; // diagonal handled below
            lv.erows[size_t(s)].erase(last);
            lv.erows[size_t(s)][r] = w;
        }
        auto dit = row.find(last);
        if (dit != row.end())
        {
            int64_t dval = dit->second;
            row.erase(dit);
            row[r] = dval;
        }
        lv.erows[size_t(r)] = std::move(row);
        if (level == 0)
        {
            eta_[size_t(r)] = std::move(eta_[size_t(last)]);
            urns_[size_t(r)] = std::move(urns_[size_t(last)]);
        }
    }
    lv.nr.pop_back();
    lv.members.pop_back();
    lv.erows.pop_back();
    lv.edeg.pop_back();
    if (level == 0)
    {
        eta_.pop_back();
        urns_.pop_back();
    }
    part_term_refresh(level);
}

void BlockState::trim_trivial_top()
{
    if (opt_.edge_prior != EdgeCountPrior::nested)
        return;
    while (depth() > 1 && levels_.back().b.size() == 1)
    {
        auto& top = levels_.back();
        // a one-object top level carries no probability
        total_ -= top.t_part + top.t_mat;
        levels_.pop_back();
    }
}

// ============================================================
// node moves
// ============================================================

void BlockState::move_membership(int level, int32_t obj, int32_t from, int32_t to)
{
    auto& lv = levels_[size_t(level)];

    // the group sizes enter the multiset terms at levels >= 1; collect the
    // affected cells before the size change
    std::vector<std::tuple<int32_t, int32_t, int64_t>> affected;
    double before_terms = 0;
    if (level > 0)
    {
        auto add_cell = [&](int32_t a, int32_t b, int64_t w) {
            for (auto& [x, y, z] : affected)
                if ((x == a && y == b) || (x == b && y == a))
                    return;
            affected.push_back({a, b, w});
            before_terms += mat_cell_term(level, a, b, w);
        };
        add_cell(from, from, pair_count(level, from, from));
        add_cell(to, to, pair_count(level, to, to));
        for (auto& [s, w] : lv.erows[size_t(from)])
            if (s != from)
                add_cell(from, s, w);
        for (auto& [s, w] : lv.erows[size_t(to)])
            if (s != to)
                add_cell(to, s, w);
    }

    // membership move
    auto& mem = lv.members[size_t(from)];
    int32_t p = lv.pos[size_t(obj)];
    mem[size_t(p)] = mem.back();
    lv.pos[size_t(mem.back())] = p;
    mem.pop_back();
    lv.b[size_t(obj)] = to;
    lv.pos[size_t(obj)] = int32_t(lv.members[size_t(to)].size());
    lv.members[size_t(to)].push_back(obj);

    int64_t oldnf = lv.nr[size_t(from)]--, oldnt = lv.nr[size_t(to)]++;
    lv.sum_lf_nr += lfact(oldnf - 1) - lfact(oldnf) + lfact(oldnt + 1) - lfact(oldnt);
    part_term_refresh(level);

    if (level == 0)
    {
        int64_t k = g_.degree(NodeId(obj));
        eta_shift(from, k, -1);
        eta_shift(to, k, +1);
        // -lfact(n_r) pieces of the degree prior
        double d = -lfact(oldnf - 1) + lfact(oldnf) - lfact(oldnt + 1) + lfact(oldnt);
        t_deg_ += d;
        total_ += d;
        deg_q_refresh(from, levels_[0].edeg[size_t(from)], oldnf);
        deg_q_refresh(to, levels_[0].edeg[size_t(to)], oldnt);

        // move sampling tokens
        for (auto& [v, m] : g_.row(NodeId(obj)))
        {
            int64_t cnt = (v == NodeId(obj)) ? 2 * m : m;
            urns_[size_t(from)].remove(NodeId(obj), v, cnt);
            urns_[size_t(to)].insert(NodeId(obj), v, cnt);
        }
    }
    else
    {
        double after_terms = 0;
        for (auto& [a, b, w] : affected)
            after_terms += mat_cell_term(level, a, b, w);
        lv.t_mat += after_terms - before_terms;
        total_ += after_terms - before_terms;
    }
}

void BlockState::shift_edges(int level, int32_t obj, int32_t from, int32_t to)
{
    auto& lv = levels_[size_t(level)];
    std::vector<std::pair<int32_t, int64_t>> row;
    for_slots(level, obj, [&](int32_t v, int64_t w) { row.push_back({v, w}); });
    for (auto& [v, w] : row)
    {
        if (v == obj)
        {
            cell_update(level, from, from, -w);
            cell_update(level, to, to, +w);
        }
        else
        {
            int32_t t = lv.b[size_t(v)];
            cell_update(level, from, t, t == from ? -2 * w : -w);
            cell_update(level, to, t, t == to ? 2 * w : w);
        }
    }
}

BlockState::MoveResult BlockState::apply_node_move(const MoveSpec& mv)
{
    MoveResult res;
    int32_t r = levels_[size_t(mv.level)].b[size_t(mv.obj)];
    if (mv.target == r)
        return res;
    double before = total_;

    int32_t s;
    if (mv.target == new_group)
        s = create_group(mv.level, mv.chain.data(), mv.chain.size(), nullptr);
    else
    {
        if (mv.target < 0 || mv.target >= int32_t(levels_[size_t(mv.level)].nr.size()))
            throw DataError("apply_node_move: invalid target group");
        s = mv.target;
    }

    shift_edges(mv.level, mv.obj, r, s);
    move_membership(mv.level, mv.obj, r, s);

    std::vector<int32_t> undo_chain;
    bool destroyed = (levels_[size_t(mv.level)].nr[size_t(r)] == 0);
    if (destroyed)
    {
        res.cascade = 1;
        destroy_group(mv.level, r, undo_chain);
        for (int32_t c : undo_chain)
            if (c == new_group)
                ++res.cascade;
    }
    trim_trivial_top();
    refresh_edge_term(); // the flat prior depends on the group count

    res.moved = true;
    res.dprior = total_ - before;
    res.undo.level = mv.level;
    res.undo.obj = mv.obj;
    res.undo.target = destroyed ? new_group : r;
    res.undo.chain = std::move(undo_chain);
    return res;
}

// ============================================================
// pair sampling for entry updates
// ============================================================

std::pair<NodeId, NodeId> BlockState::sample_pair(Rng& rng) const
{
    auto& l0 = levels_[0];
    int64_t bcount = int64_t(l0.nr.size());
    int64_t two_e = 2 * g_.edge_total();
    int64_t total = two_e + bcount * bcount;
    int32_t r, s;
    if (rng.below(total) < two_e)
    {
        // uniform directed slot: group by degree mass, then a token
        int64_t pick = rng.below(two_e);
        int32_t g = 0;
        while (pick >= l0.edeg[size_t(g)])
        {
            pick -= l0.edeg[size_t(g)];
            ++g;
        }
        auto [u, v] = urns_[size_t(g)].sample(rng);
        r = g;
        s = l0.b[size_t(v)];
    }
    else
    {
        r = int32_t(rng.below(bcount));
        s = int32_t(rng.below(bcount));
    }
    auto pick_node = [&](int32_t g) -> NodeId {
        int64_t w = l0.edeg[size_t(g)] + l0.nr[size_t(g)];
        if (rng.below(w) < l0.edeg[size_t(g)])
            return urns_[size_t(g)].sample(rng).first;
        return l0.members[size_t(g)][size_t(rng.below(l0.nr[size_t(g)]))];
    };
    return {pick_node(r), pick_node(s)};
}

int32_t BlockState::sample_group_neighbor(int level, int32_t t, Rng& rng) const
{
    if (level == 0)
    {
        auto [u, v] = urns_[size_t(t)].sample(rng);
        return levels_[0].b[size_t(v)];
    }
    auto& row = levels_[size_t(level)].erows[size_t(t)];
    int64_t pick = rng.below(levels_[size_t(level)].edeg[size_t(t)]);
    for (auto& [s, w] : row)
    {
        if (pick < w)
            return s;
        pick -= w;
    }
    throw NumericalError("sample_group_neighbor: inconsistent group degree");
}

double BlockState::log_pair_prob(NodeId i, NodeId j) const
{
    auto& l0 = levels_[0];
    int64_t bcount = int64_t(l0.nr.size());
    int32_t r = l0.b[size_t(i)], s = l0.b[size_t(j)];
    int64_t two_e = 2 * g_.edge_total();
    double m_rs = double(pair_count(0, r, s) + 1) / double(two_e + bcount * bcount);
    double ki = double(g_.degree(i) + 1) / double(l0.edeg[size_t(r)] + l0.nr[size_t(r)]);
    double kj = double(g_.degree(j) + 1) / double(l0.edeg[size_t(s)] + l0.nr[size_t(s)]);
    double p = m_rs * ki * kj;
    if (i != j)
        p *= 2;
    return std::log(p);
}

// ============================================================
// consistency
// ============================================================

bool BlockState::consistent(double tol) const
{
    BlockState fresh(g_, partition(), opt_);
    if (std::abs(fresh.total_ - total_) > tol)
        return false;
    for (int l = 0; l < depth(); ++l)
    {
        auto& a = levels_[size_t(l)];
        auto& b = fresh.levels_[size_t(l)];
        if (a.nr != b.nr || a.edeg != b.edeg)
            return false;
        for (size_t r = 0; r < a.erows.size(); ++r)
            if (a.erows[r] != b.erows[r])
                return false;
    }
    if (!g_.degrees_consistent())
        return false;
    for (size_t r = 0; r < urns_.size(); ++r)
        if (urns_[r].size() != levels_[0].edeg[r])
            return false;
    return true;
}

} // namespace netrecon
