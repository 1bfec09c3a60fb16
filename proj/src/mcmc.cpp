#include "netrecon/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace netrecon {

namespace {

// Cheap label-propagation clustering of the seeded network, used only to
// initialize the partition; majority dynamics with random update order.
std::vector<int32_t> label_propagation_init(const AdjacencyView& a, int32_t max_labels,
                                            Rng& rng)
{
    // always start from singleton labels: local coalescence is what finds
    // the communities; a group cap is applied afterwards
    NodeId n = a.node_count();
    std::vector<int32_t> lab(size_t(n), 0);
    for (NodeId i = 0; i < n; ++i)
        lab[size_t(i)] = i;
    std::vector<std::vector<NodeId>> adj{size_t(n)};
    for (PairKey e : a.edges())
    {
        auto [i, j] = pair_nodes(e);
        adj[size_t(i)].push_back(j);
        adj[size_t(j)].push_back(i);
    }
    std::vector<NodeId> order(size_t(n), 0);
    for (NodeId i = 0; i < n; ++i)
        order[size_t(i)] = i;
    std::unordered_map<int32_t, int32_t> votes;
    for (int round = 0; round < 30; ++round)
    {
        for (size_t t = order.size(); t > 1; --t)
            std::swap(order[t - 1], order[size_t(rng.below(int64_t(t)))]);
        int64_t changed = 0;
        for (NodeId i : order)
        {
            if (adj[size_t(i)].empty())
                continue;
            votes.clear();
            for (NodeId v : adj[size_t(i)])
                ++votes[lab[size_t(v)]];
            int32_t best = lab[size_t(i)];
            int32_t best_count = votes.count(best) ? votes[best] : 0;
            for (auto& [g, c] : votes)
                if (c > best_count || (c == best_count && g < best))
                {
                    best = g;
                    best_count = c;
                }
            if (best != lab[size_t(i)])
            {
                lab[size_t(i)] = best;
                ++changed;
            }
        }
        if (changed == 0)
            break;
    }
    // compact labels by first occurrence
    std::unordered_map<int32_t, int32_t> remap;
    for (int32_t& g : lab)
    {
        auto [it, fresh] = remap.try_emplace(g, int32_t(remap.size()));
        g = it->second;
    }
    int32_t bcount = int32_t(remap.size());
    if (max_labels > 0 && bcount > max_labels)
    {
        // keep the largest groups, move everyone else to their strongest
        // kept neighbor group
        std::vector<int64_t> gsize(size_t(bcount), 0);
        for (int32_t g : lab)
            ++gsize[size_t(g)];
        std::vector<int32_t> by_size(size_t(bcount), 0);
        for (int32_t g = 0; g < bcount; ++g)
            by_size[size_t(g)] = g;
        std::sort(by_size.begin(), by_size.end(), [&](int32_t x, int32_t y) {
            return gsize[size_t(x)] > gsize[size_t(y)];
        });
        std::vector<int32_t> keep(size_t(bcount), -1);
        for (int32_t k = 0; k < max_labels; ++k)
            keep[size_t(by_size[size_t(k)])] = k;
        for (NodeId i = 0; i < n; ++i)
        {
            if (keep[size_t(lab[size_t(i)])] >= 0)
                continue;
            votes.clear();
            for (NodeId v : adj[size_t(i)])
                if (keep[size_t(lab[size_t(v)])] >= 0)
                    ++votes[keep[size_t(lab[size_t(v)])]];
            int32_t best = 0;
            int32_t best_count = 0;
            for (auto& [g, c] : votes)
                if (c > best_count)
                {
                    best = g;
                    best_count = c;
                }
            lab[size_t(i)] = -best - 1; // mark, resolve below
        }
        for (NodeId i = 0; i < n; ++i)
        {
            int32_t g = lab[size_t(i)];
            lab[size_t(i)] = g < 0 ? -g - 1 : keep[size_t(g)];
        }
    }
    return lab;
}

BlockState::Options block_options(const ChainConfig& cfg)
{
    BlockState::Options o;
    o.edge_prior = cfg.prior == PriorModel::dcsbm ? BlockState::EdgeCountPrior::flat
                                                  : BlockState::EdgeCountPrior::nested;
    o.max_depth = cfg.prior == PriorModel::dcsbm ? 1 : cfg.max_depth;
    o.edges_ref = cfg.lambda_edges;
    return o;
}

} // namespace

Chain::Chain(const MeasurementData& d, const ChainConfig& cfg)
    : cfg_(cfg), rng_(cfg.seed, cfg.chain_index), data_(&d), a_(d.node_count())
{
    cfg_.hyper.validate();
    init_latent([&](NodeId i, NodeId j) { return d.get(i, j).x > 0; });
    if (cfg_.model == NoiseModel::uniform)
        uniform_.emplace(d, a_, cfg_.hyper);
    else if (cfg_.model == NoiseModel::hetero)
        hetero_.emplace(d, a_, cfg_.hyper);
    else
        throw DataError("Chain: extrinsic model requires uncertainty data");
}

Chain::Chain(const ExtrinsicUncertainty& q, const ChainConfig& cfg)
    : cfg_(cfg), rng_(cfg.seed, cfg.chain_index), qdata_(&q), a_(q.node_count())
{
    if (cfg_.model != NoiseModel::extrinsic)
        throw DataError("Chain: uncertainty data requires the extrinsic model");
    init_latent([&](NodeId i, NodeId j) { return q.get(i, j) > 0.5; });
    extrinsic_.emplace(q, a_);
}

void Chain::init_latent(const std::function<bool(NodeId, NodeId)>& edge_seed)
{
    NodeId n = a_.node_count();
    if (cfg_.prior == PriorModel::er)
    {
        for (NodeId i = 0; i < n; ++i)
            for (NodeId j = i + 1; j < n; ++j)
                if (edge_seed(i, j))
                    a_.add_edge(i, j);
        return;
    }
    LatentMultigraph g(n);
    for (NodeId i = 0; i < n; ++i)
        for (NodeId j = i + 1; j < n; ++j)
            if (edge_seed(i, j))
            {
                g.add(i, j, 1);
                a_.add_edge(i, j);
            }
    auto opts = block_options(cfg_);
    if (opts.edges_ref < 0)
        opts.edges_ref = std::max<int64_t>(g.edge_total(), 1);
    cfg_.lambda_edges = opts.edges_ref;
    // seed the partition from the observed structure; a cold start from a
    // single group (or from singletons) takes very long to coalesce
    HierarchicalPartition hp;
    if (cfg_.max_groups == 1)
        hp.levels.push_back(std::vector<int32_t>(size_t(n), 0));
    else
        hp.levels.push_back(label_propagation_init(a_, cfg_.max_groups, rng_));
    block_.emplace(std::move(g), hp, opts);
}

const ErrorHyperParams& Chain::hyper() const
{
    if (hetero_)
        return hetero_->hyper();
    if (uniform_)
        return uniform_->hyper();
    throw DataError("Chain: no hyperparameters in the extrinsic model");
}

double Chain::log_prior_value() const
{
    if (block_)
        return block_->log_prior();
    return log_prior_er(a_);
}

double Chain::log_like_value() const
{
    if (uniform_)
        return uniform_->log_value();
    if (hetero_)
        return hetero_->log_value();
    return extrinsic_->log_value();
}

std::optional<ErrorRatePosterior> Chain::error_conditionals() const
{
    if (!uniform_)
        return std::nullopt;
    ErrorRatePosterior r;
    auto& s = uniform_->summaries();
    auto& h = uniform_->hyper();
    r.p = {double(s.E - s.T) + h.alpha, double(s.T) + h.beta};
    r.q = {double(s.X - s.T) + h.mu, double(s.M - s.X - s.E + s.T) + h.nu};
    return r;
}

std::vector<int32_t> Chain::node_partition() const
{
    if (block_)
        return block_->partition().levels[0];
    return std::vector<int32_t>(size_t(a_.node_count()), 0);
}

double Chain::recompute_log_posterior()
{
    double prior = block_ ? block_->recompute_log_prior() : log_prior_er(a_);
    double like;
    if (uniform_)
        like = log_likelihood_uniform(*data_, a_, uniform_->hyper());
    else if (hetero_)
        like = log_likelihood_hetero(*data_, a_, hetero_->hyper());
    else
        like = log_likelihood_extrinsic(*qdata_, a_);
    return prior + like;
}

double Chain::like_flip_delta(NodeId i, NodeId j, bool adding) const
{
    if (uniform_)
        return uniform_->flip_delta(i, j, adding);
    if (hetero_)
        return hetero_->flip_delta(i, j, adding);
    return extrinsic_->flip_delta(i, j, adding);
}

void Chain::like_apply_flip(NodeId i, NodeId j, bool adding)
{
    if (uniform_)
        uniform_->apply_flip(i, j, adding);
    else if (hetero_)
        hetero_->apply_flip(i, j, adding);
    else
        extrinsic_->apply_flip(i, j, adding);
    if (adding)
        a_.add_edge(i, j);
    else
        a_.remove_edge(i, j);
}

// ============================================================
// node moves
// ============================================================

bool Chain::creation_allowed(int level) const
{
    auto& bs = *block_;
    if (level == 0 && cfg_.max_groups > 0 && bs.group_count(0) >= cfg_.max_groups)
        return false;
    if (bs.options().edge_prior == BlockState::EdgeCountPrior::flat)
        return true;
    if (level + 1 >= bs.depth() && bs.depth() + 1 > cfg_.max_depth)
        return false;
    return true;
}

double Chain::kernel_prob(int level, int32_t obj, int32_t target) const
{
    auto& bs = *block_;
    int64_t k = bs.obj_degree(level, obj);
    double bcount = double(bs.group_count(level));
    if (k == 0)
        return 1.0 / bcount;
    double eps = cfg_.move_eps;
    double p = 0;
    std::unordered_map<int32_t, int64_t> ct;
    bs.for_slots(level, obj, [&](int32_t v, int64_t w) { ct[bs.label(level, v)] += w; });
    for (auto& [t, c] : ct)
    {
        double et = double(bs.group_degree(level, t));
        p += (double(c) / double(k)) * (double(bs.pair_count(level, t, target)) + eps) /
             (et + eps * bcount);
    }
    return p;
}

int32_t Chain::sample_kernel_target(int level, int32_t obj)
{
    auto& bs = *block_;
    int32_t bcount = bs.group_count(level);
    int64_t k = bs.obj_degree(level, obj);
    if (k == 0)
        return int32_t(rng_.below(bcount));
    // random neighbor slot
    int64_t pick = rng_.below(k);
    int32_t t = -1;
    bs.for_slots(level, obj, [&](int32_t v, int64_t w) {
        if (t >= 0)
            return;
        if (pick < w)
            t = bs.label(level, v);
        else
            pick -= w;
    });
    int64_t et = bs.group_degree(level, t);
    double peps = cfg_.move_eps * bcount / (double(et) + cfg_.move_eps * bcount);
    if (rng_.u01() < peps)
        return int32_t(rng_.below(bcount));
    return bs.sample_group_neighbor(level, t, rng_);
}

bool Chain::propose_node_move(int level)
{
    auto& bs = *block_;
    ++node_stats.proposed;
    int32_t nobj = bs.object_count(level);
    int32_t obj = int32_t(rng_.below(nobj));
    int32_t r = bs.label(level, obj);

    bool to_new = rng_.u01() < cfg_.move_d;
    int32_t target = BlockState::new_group;
    if (to_new)
    {
        if (!creation_allowed(level))
            return false;
    }
    else
    {
        target = sample_kernel_target(level, obj);
        if (target == r)
        {
            ++node_stats.accepted; // null move
            return true;
        }
    }

    bool destroys = bs.group_size(level, r) == 1;
    if (destroys && bs.options().edge_prior == BlockState::EdgeCountPrior::nested &&
        level + 1 < bs.depth())
    {
        // meta group must survive; cascades are not proposed
        int32_t mg = bs.label(level + 1, r);
        if (bs.group_size(level + 1, mg) == 1)
            return false;
    }
    if (destroys && target == BlockState::new_group &&
        (bs.options().edge_prior == BlockState::EdgeCountPrior::flat ||
         level + 1 >= bs.depth()))
        return false; // pure relabeling, nothing to do

    BlockState::MoveSpec mv{level, obj, target, {}};
    double lp_fwd;
    if (to_new)
    {
        lp_fwd = std::log(cfg_.move_d);
        if (bs.options().edge_prior == BlockState::EdgeCountPrior::nested &&
            level + 1 < bs.depth())
        {
            int32_t upb = bs.group_count(level + 1);
            mv.chain.push_back(int32_t(rng_.below(upb)));
            lp_fwd -= std::log(double(upb));
        }
    }
    else
        lp_fwd = std::log1p(-cfg_.move_d) + std::log(kernel_prob(level, obj, target));

    int32_t b_before = bs.group_count(level);
    auto res = bs.apply_node_move(mv);
    if (!res.moved)
    {
        ++node_stats.accepted;
        return true;
    }
    // label compaction conflates the B! labelings of each partition, so
    // the acceptance carries the orbit-size ratio to keep the labeled
    // partition posterior as the target
    double dcorr = lfact(bs.group_count(level)) - lfact(b_before);

    double lp_rev;
    if (res.undo.target == BlockState::new_group)
    {
        lp_rev = std::log(cfg_.move_d);
        if (bs.options().edge_prior == BlockState::EdgeCountPrior::nested &&
            level + 1 < bs.depth())
            lp_rev -= std::log(double(bs.group_count(level + 1)));
    }
    else
        lp_rev = std::log1p(-cfg_.move_d) +
                 std::log(kernel_prob(level, obj, res.undo.target));

    double accept = res.dprior + dcorr + lp_rev - lp_fwd;
    if (accept >= 0 || std::log(rng_.u01()) < accept)
    {
        ++node_stats.accepted;
        return true;
    }
    bs.apply_node_move(res.undo);
    return false;
}

// ============================================================
// entry updates
// ============================================================

bool Chain::propose_entry_update()
{
    ++entry_stats.proposed;
    if (cfg_.prior == PriorModel::er)
    {
        NodeId n = a_.node_count();
        NodeId i = NodeId(rng_.below(n));
        NodeId j = NodeId(rng_.below(n - 1));
        if (j >= i)
            ++j;
        bool adding = !a_.has_edge(i, j);
        int64_t pairs = int64_t(n) * (n - 1) / 2;
        int64_t e = a_.edge_count();
        double dprior = -lbinom(pairs, adding ? e + 1 : e - 1) + lbinom(pairs, e);
        double dlike = like_flip_delta(i, j, adding);
        double accept = dprior + dlike;
        if (accept >= 0 || std::log(rng_.u01()) < accept)
        {
            like_apply_flip(i, j, adding);
            ++entry_stats.accepted;
            return true;
        }
        return false;
    }

    auto& bs = *block_;
    auto [i, j] = bs.sample_pair(rng_);
    int64_t m = bs.graph().multiplicity(i, j);
    int64_t dm;
    double lp_dm_fwd;
    if (m == 0)
    {
        dm = 1;
        lp_dm_fwd = 0;
    }
    else
    {
        dm = rng_.coin() ? 1 : -1;
        lp_dm_fwd = -std::log(2.0);
    }
    double lp_fwd = bs.log_pair_prob(i, j) + lp_dm_fwd;

    int a_change = 0;
    if (i != j)
        a_change = (m == 0 && dm > 0) ? 1 : (m == 1 && dm < 0) ? -1 : 0;
    double dlike = 0;
    if (a_change != 0)
    {
        dlike = like_flip_delta(i, j, a_change > 0);
        if (dlike == neg_inf)
            return false;
    }

    auto res = bs.apply_entry(i, j, dm);
    double lp_dm_rev = (m + dm == 0) ? 0 : -std::log(2.0);
    double lp_rev = bs.log_pair_prob(i, j) + lp_dm_rev;

    double accept = res.dprior + dlike + lp_rev - lp_fwd;
    if (accept >= 0 || std::log(rng_.u01()) < accept)
    {
        if (a_change != 0)
            like_apply_flip(i, j, a_change > 0);
        ++entry_stats.accepted;
        return true;
    }
    bs.apply_entry(i, j, -dm);
    return false;
}

// ============================================================
// hyperparameter moves (heterogeneous model)
// ============================================================

namespace {
double reflect(double x, double lo, double hi)
{
    double w = hi - lo;
    while (x < lo || x > hi)
    {
        if (x < lo)
            x = 2 * lo - x;
        if (x > hi)
            x = 2 * hi - x;
        (void)w;
    }
    return x;
}
} // namespace

bool Chain::propose_hyper()
{
    if (!hetero_)
        throw DataError("propose_hyper: only valid for the heterogeneous model");
    ++hyper_stats.proposed;
    const ErrorHyperParams& h = hetero_->hyper();
    double lo = std::log(hyper_domain_min), hi = std::log(hyper_domain_max);
    auto step = [&](double v) {
        if (cfg_.hyper_step == 0)
            return v;
        return std::exp(reflect(std::log(v) + rng_.normal(0, cfg_.hyper_step), lo, hi));
    };
    ErrorHyperParams nh{step(h.alpha), step(h.beta), step(h.mu), step(h.nu)};
    // the hyperprior is flat on the bounded linear domain while the walk is
    // symmetric in log space, which leaves a Jacobian in the ratio
    double jac = std::log(nh.alpha / h.alpha) + std::log(nh.beta / h.beta) +
                 std::log(nh.mu / h.mu) + std::log(nh.nu / h.nu);
    double accept = hetero_->hyper_delta(nh) + jac;
    if (accept >= 0 || std::log(rng_.u01()) < accept)
    {
        hetero_->apply_hyper(nh);
        ++hyper_stats.accepted;
        return true;
    }
    return false;
}

// ============================================================
// sweeps and the full chain driver
// ============================================================

void Chain::sweep()
{
    // the sweep schedule is fixed up front (counts independent of the
    // current state), so recording samples at sweep boundaries is unbiased
    if (block_ && cfg_.max_groups != 1)
    {
        int64_t n = a_.node_count();
        for (int l = 0; l < block_->options().max_depth; ++l)
        {
            int64_t slots = std::max<int64_t>(32, n >> (2 * l));
            if (l == 0)
                slots = n;
            for (int64_t t = 0; t < slots; ++t)
                if (l < block_->depth())
                    propose_node_move(l);
        }
    }
    int64_t entries = int64_t(
        cfg_.entry_mult * double(std::max<int64_t>(cfg_.lambda_edges, a_.node_count())));
    for (int64_t t = 0; t < entries; ++t)
        propose_entry_update();
    if (cfg_.model == NoiseModel::hetero)
        for (int t = 0; t < cfg_.hyper_attempts; ++t)
            propose_hyper();
    ++sweep_count;
}

ChainDiagnostics run_chain(Chain& chain, const std::function<void(const Chain&)>& on_sample)
{
    const ChainConfig& cfg = chain.config();
    ChainDiagnostics diag;
    if (!std::isfinite(chain.log_posterior()))
        throw NumericalError("run_chain: non-finite log-posterior at initialization");

    auto record = [&](bool burnin) {
        TraceRow row;
        row.sweep = chain.sweep_count;
        row.burnin = burnin;
        row.log_posterior = chain.log_posterior();
        row.acc_node = chain.node_stats.rate();
        row.acc_entry = chain.entry_stats.rate();
        row.acc_hyper = chain.hyper_stats.rate();
        if (chain.block())
            for (int l = 0; l < chain.block()->depth(); ++l)
                row.groups_per_level.push_back(chain.block()->group_count(l));
        row.latent_edges =
            chain.block() ? chain.block()->latent_edges() : chain.adjacency().edge_count();
        diag.trace.push_back(std::move(row));
    };

    // burn-in: compare consecutive windows of W sweeps until the means agree
    int w = std::max(1, cfg.burnin_window);
    std::vector<double> prev, cur;
    int done = 0;
    bool stationary = false;
    while (done < cfg.max_burnin && !stationary)
    {
        cur.clear();
        for (int s = 0; s < w && done < cfg.max_burnin; ++s, ++done)
        {
            chain.sweep();
            record(true);
            cur.push_back(diag.trace.back().log_posterior);
        }
        if (!prev.empty() && int(cur.size()) == w)
        {
            double m1 = std::accumulate(prev.begin(), prev.end(), 0.0) / double(prev.size());
            double m2 = std::accumulate(cur.begin(), cur.end(), 0.0) / double(cur.size());
            double v1 = 0, v2 = 0;
            for (double x : prev)
                v1 += (x - m1) * (x - m1);
            for (double x : cur)
                v2 += (x - m2) * (x - m2);
            v1 /= double(prev.size());
            v2 /= double(cur.size());
            double se = std::sqrt(v1 / double(prev.size()) + v2 / double(cur.size()));
            if (std::abs(m1 - m2) <= 2 * se)
                stationary = true;
        }
        std::swap(prev, cur);
    }
    diag.burnin_sweeps = done;
    diag.stationary = stationary;

    for (int s = 0; s < cfg.samples; ++s)
    {
        for (int t = 0; t < std::max(1, cfg.thin); ++t)
        {
            chain.sweep();
            record(false);
        }
        on_sample(chain);
    }
    diag.node_moves = chain.node_stats;
    diag.entry_updates = chain.entry_stats;
    diag.hyper_moves = chain.hyper_stats;
    return diag;
}

} // namespace netrecon
