#include "netrecon/experiments.hpp"
#include "netrecon/driver.hpp"

#include <algorithm>
#include <atomic>
#include <future>
#include <set>
#include <sstream>

namespace netrecon {

// ============================================================
// SampleCollector
// ============================================================

void SampleCollector::operator()(const Chain& chain)
{
    const AdjacencyView& a = chain.adjacency();
    acc.add_sample(a);
    acc.add_scalar("edges", double(a.edge_count()));
    if (opt_.clustering)
        acc.add_scalar("clustering", clustering_coefficient(a));
    if (opt_.assortativity)
    {
        auto r = degree_assortativity(a);
        if (r) // undefined values are excluded from the average
            acc.add_scalar("assortativity", *r);
    }
    auto b = chain.node_partition();
    acc.add_scalar("b_eff", effective_group_count(b));
    if (chain.block())
        acc.add_scalar("groups", double(chain.block()->group_count(0)));
    if (opt_.reference)
        acc.add_scalar("similarity", similarity(a, *opt_.reference));
    if (opt_.ref_partition)
        acc.add_scalar("nmi", normalized_mutual_information(b, *opt_.ref_partition));
    if (auto er = chain.error_conditionals())
        acc.add_error_moments(er->p, er->q);
    else if (chain.config().model == NoiseModel::hetero)
    {
        auto& h = chain.hyper();
        acc.add_error_point(h.alpha / (h.alpha + h.beta), h.mu / (h.mu + h.nu));
    }
    if (opt_.degree_dist)
    {
        int64_t k = opt_.degree_k_max > 0 ? opt_.degree_k_max : acc.node_count() - 1;
        acc.add_degree_sample(a, k);
    }
}

// ============================================================
// generators
// ============================================================

MeasurementData simulate_measurement(const AdjacencyView& astar, const NoiseSpec& spec,
                                     Rng& rng)
{
    if (spec.p < 0 || spec.p > 1 || spec.q < 0 || spec.q > 1 || spec.n < 0 ||
        spec.hide_fraction < 0 || spec.hide_fraction > 1)
        throw DataError("simulate_measurement: invalid noise specification");
    NodeId n = astar.node_count();
    MeasurementData d(n, spec.n);

    // hidden pairs get n_ij = 0
    std::unordered_set<PairKey> hidden;
    if (spec.hide_fraction > 0)
    {
        std::vector<PairKey> pool;
        if (spec.hide_class == NoiseSpec::HideClass::edges)
            pool.assign(astar.edges().begin(), astar.edges().end());
        else
        {
            for (NodeId i = 0; i < n; ++i)
                for (NodeId j = i + 1; j < n; ++j)
                    if (!astar.has_edge(i, j))
                        pool.push_back(pair_key(i, j));
        }
        std::sort(pool.begin(), pool.end());
        int64_t count = int64_t(std::llround(spec.hide_fraction * double(pool.size())));
        for (int64_t t = 0; t < count; ++t)
        {
            int64_t pick = rng.below(int64_t(pool.size()) - t);
            std::swap(pool[size_t(pick)], pool[size_t(int64_t(pool.size()) - 1 - t)]);
            hidden.insert(pool[size_t(int64_t(pool.size()) - 1 - t)]);
        }
        for (PairKey k : hidden)
        {
            auto [i, j] = pair_nodes(k);
            d.set(i, j, 0, 0);
        }
    }

    for (NodeId i = 0; i < n; ++i)
        for (NodeId j = i + 1; j < n; ++j)
        {
            if (hidden.count(pair_key(i, j)))
                continue;
            bool edge = astar.has_edge(i, j);
            int64_t x = rng.binomial(spec.n, edge ? 1 - spec.p : spec.q);
            if (x > 0)
                d.set(i, j, spec.n, x);
        }
    return d;
}

double density_matched_q(int64_t node_count, int64_t edges, double p)
{
    int64_t pairs = node_count * (node_count - 1) / 2;
    if (edges >= pairs)
        throw DataError("density_matched_q: complete graph has no nonedges");
    return p * double(edges) / double(pairs - edges);
}

double density_matched_q(const AdjacencyView& astar, double p)
{
    return density_matched_q(astar.node_count(), astar.edge_count(), p);
}

PlantedPartition planted_partition_sample(NodeId n, int32_t b, double avg_k, double eps,
                                          Rng& rng)
{
    if (b <= 0 || n % b != 0)
        throw DataError("planted_partition_sample: N must be divisible by B");
    double w_in = (avg_k + eps * double(b - 1) / b) / double(n);
    double w_out = (avg_k - eps / b) / double(n);
    if (w_in < 0 || w_in > 1 || w_out < 0 || w_out > 1)
        throw DataError("planted_partition_sample: probabilities outside [0,1]");

    PlantedPartition out{AdjacencyView(n), std::vector<int32_t>(size_t(n))};
    NodeId per = n / b;
    for (NodeId i = 0; i < n; ++i)
        out.partition[size_t(i)] = int32_t(i / per);
    for (NodeId i = 0; i < n; ++i)
        for (NodeId j = i + 1; j < n; ++j)
        {
            double w = out.partition[size_t(i)] == out.partition[size_t(j)] ? w_in : w_out;
            if (rng.u01() < w)
                out.graph.add_edge(i, j);
        }
    return out;
}

PlantedPartition dcsbm_sample(NodeId n, int32_t b, double avg_k, double in_frac,
                              double theta_shape, Rng& rng)
{
    if (b <= 0 || n % b != 0)
        throw DataError("dcsbm_sample: N must be divisible by B");
    PlantedPartition out{AdjacencyView(n), std::vector<int32_t>(size_t(n))};
    NodeId per = n / b;
    for (NodeId i = 0; i < n; ++i)
        out.partition[size_t(i)] = int32_t(i / per);

    // unit-normalized degree propensities per group
    std::vector<double> theta(size_t(n), 0.0);
    std::vector<double> group_sum(size_t(b), 0.0);
    for (NodeId i = 0; i < n; ++i)
    {
        theta[size_t(i)] = rng.gamma(theta_shape) + 1e-9;
        group_sum[size_t(out.partition[size_t(i)])] += theta[size_t(i)];
    }
    for (NodeId i = 0; i < n; ++i)
        theta[size_t(i)] /= group_sum[size_t(out.partition[size_t(i)])];

    // cumulative samplers per group
    std::vector<std::vector<double>> cum{size_t(b)};
    std::vector<std::vector<NodeId>> members{size_t(b)};
    for (NodeId i = 0; i < n; ++i)
    {
        int32_t r = out.partition[size_t(i)];
        members[size_t(r)].push_back(i);
        cum[size_t(r)].push_back(theta[size_t(i)] +
                                 (cum[size_t(r)].empty() ? 0 : cum[size_t(r)].back()));
    }
    auto pick = [&](int32_t r) {
        auto& c = cum[size_t(r)];
        double u = rng.u01() * c.back();
        size_t lo = size_t(std::lower_bound(c.begin(), c.end(), u) - c.begin());
        return members[size_t(r)][std::min(lo, c.size() - 1)];
    };

    double total_edges = double(n) * avg_k / 2;
    for (int32_t r = 0; r < b; ++r)
        for (int32_t s = r; s < b; ++s)
        {
            double lam;
            if (r == s)
                lam = total_edges * in_frac / b;
            else
                lam = total_edges * (1 - in_frac) * 2 / (double(b) * double(b - 1));
            int64_t m = rng.poisson(lam);
            for (int64_t t = 0; t < m; ++t)
            {
                NodeId i = pick(r), j = pick(s);
                if (i != j && !out.graph.has_edge(i, j))
                    out.graph.add_edge(i, j);
            }
        }
    return out;
}

double detectability_threshold(NodeId n, int32_t b, double avg_k, double p, double q)
{
    if (p + q >= 1)
        throw DataError("detectability_threshold: requires p + q < 1");
    double keep = 1 - p - q;
    return b * std::sqrt(keep * avg_k + q * double(n)) / keep;
}

double effective_sbm_probability(double omega, double p, double q)
{
    return (1 - p - q) * omega + q;
}

// ============================================================
// reconstruction driver
// ============================================================

AdjacencyView majority_graph(const MeasurementData& d)
{
    AdjacencyView a(d.node_count());
    for (auto& [k, c] : d.overrides())
        if (c.n > 0 && 2 * c.x > c.n)
        {
            auto [i, j] = pair_nodes(k);
            a.add_edge(i, j);
        }
    return a;
}

namespace {

template <class Data>
ReconstructResult reconstruct_impl(const Data& d, const ReconstructOptions& opt)
{
    int chains = std::max(1, opt.chains);
    std::vector<SampleCollector> collectors;
    std::vector<ChainDiagnostics> diags{size_t(chains)};
    for (int c = 0; c < chains; ++c)
        collectors.emplace_back(d.node_count(), opt.collect);

    auto run_one = [&](int c) {
        ChainConfig cc = opt.chain;
        cc.chain_index = uint32_t(c);
        Chain chain(d, cc);
        diags[size_t(c)] = run_chain(chain, std::ref(collectors[size_t(c)]));
    };
    if (chains == 1)
        run_one(0);
    else
    {
        std::vector<std::future<void>> futs;
        for (int c = 0; c < chains; ++c)
            futs.push_back(std::async(std::launch::async, run_one, c));
        for (auto& f : futs)
            f.get();
    }
    ReconstructResult res{std::move(collectors[0].acc), std::move(diags)};
    for (int c = 1; c < chains; ++c)
        res.acc.merge(collectors[size_t(c)].acc);
    return res;
}

} // namespace

ReconstructResult reconstruct(const MeasurementData& d, const ReconstructOptions& opt)
{
    return reconstruct_impl(d, opt);
}

ReconstructResult reconstruct(const ExtrinsicUncertainty& q, const ReconstructOptions& opt)
{
    return reconstruct_impl(q, opt);
}

// ============================================================
// protocol sweeps
// ============================================================

namespace {

uint64_t grid_seed(uint64_t base, uint64_t a, uint64_t b, uint64_t c)
{
    return splitmix64(base ^ splitmix64(0x517cc1b7 + a * 0x2545F491 + b * 0x9E3779B9 + c));
}

void put(SweepRow& row, const std::string& k, double v) { row.values[k] = v; }

SweepRow reconstruct_point(const AdjacencyView& astar, const MeasurementData& d,
                           const SweepConfig& cfg, uint64_t seed,
                           const std::vector<int32_t>* planted)
{
    ReconstructOptions opt;
    opt.chain = cfg.chain;
    opt.chain.seed = seed;
    opt.collect.reference = &astar;
    opt.collect.ref_partition = planted;
    opt.collect.degree_dist = true;
    auto res = reconstruct(d, opt);

    SweepRow row;
    auto mmp = mmp_estimate(res.acc);
    put(row, "similarity_mmp", similarity(mmp, astar));
    put(row, "similarity_mean", res.acc.scalar("similarity")->mean());
    put(row, "similarity_sd", res.acc.scalar("similarity")->sd());
    put(row, "edges_mean", res.acc.scalar("edges")->mean());
    put(row, "clustering_mean", res.acc.scalar("clustering")->mean());
    if (auto* s = res.acc.scalar("assortativity"))
        put(row, "assortativity_mean", s->mean());
    put(row, "b_eff_mean", res.acc.scalar("b_eff")->mean());
    if (res.acc.has_error_rates())
    {
        put(row, "p_hat", res.acc.p_mean());
        put(row, "p_hat_sd", res.acc.p_sd());
        put(row, "q_hat", res.acc.q_mean());
        put(row, "q_hat_sd", res.acc.q_sd());
    }
    if (planted)
        put(row, "nmi_mean", res.acc.scalar("nmi")->mean());

    int64_t kmax = astar.node_count() - 1;
    put(row, "degree_kl",
        kl_divergence(degree_prob_vector(astar, kmax), res.acc.degree_estimate()));

    // true-network references
    put(row, "similarity_true", 1.0);
    put(row, "clustering_true", clustering_coefficient(astar));
    if (auto r = degree_assortativity(astar))
        put(row, "assortativity_true", *r);
    return row;
}

} // namespace

SweepResult run_sweep(const SweepConfig& cfg, const AdjacencyView* astar, Rng& rng)
{
    SweepResult out;
    std::vector<std::function<SweepRow()>> tasks;

    if (cfg.protocol == "similarity" || cfg.protocol == "noise-recovery")
    {
        if (!astar)
            throw DataError("run_sweep: protocol requires a true network");
        for (size_t pi = 0; pi < cfg.p_grid.size(); ++pi)
            for (size_t ni = 0; ni < cfg.n_grid.size(); ++ni)
                for (int rep = 0; rep < cfg.replicates; ++rep)
                {
                    double p = cfg.p_grid[pi];
                    int64_t n = cfg.n_grid[ni];
                    uint64_t seed = grid_seed(cfg.chain.seed, pi, ni, uint64_t(rep));
                    tasks.push_back([=, &cfg]() {
                        Rng grng(seed, 1);
                        NoiseSpec spec;
                        spec.p = p;
                        spec.q = density_matched_q(*astar, p);
                        spec.n = n;
                        auto d = simulate_measurement(*astar, spec, grng);
                        SweepRow row = reconstruct_point(*astar, d, cfg, seed, nullptr);
                        put(row, "p", p);
                        put(row, "q", spec.q);
                        put(row, "n", double(n));
                        put(row, "rep", rep);
                        auto direct = majority_graph(d);
                        put(row, "similarity_direct", similarity(direct, *astar));
                        return row;
                    });
                }
    }
    else if (cfg.protocol == "denoise-complete")
    {
        if (!astar)
            throw DataError("run_sweep: protocol requires a true network");
        // subprotocols: 0 edge de-noise, 1 nonedge de-noise, 2 edge
        // completion, 3 nonedge completion
        struct Sub
        {
            int kind;
            double par;
            int64_t n;
            int rep;
        };
        std::vector<Sub> subs;
        for (size_t ni = 0; ni < cfg.n_grid.size(); ++ni)
            for (int rep = 0; rep < cfg.replicates; ++rep)
            {
                for (double p : cfg.p_grid)
                {
                    subs.push_back({0, p, cfg.n_grid[ni], rep});
                    subs.push_back({1, p, cfg.n_grid[ni], rep});
                }
                for (double f : cfg.f_grid)
                {
                    subs.push_back({2, f, cfg.n_grid[ni], rep});
                    subs.push_back({3, f, cfg.n_grid[ni], rep});
                }
            }
        for (size_t si = 0; si < subs.size(); ++si)
        {
            Sub sub = subs[si];
            uint64_t seed = grid_seed(cfg.chain.seed, si, uint64_t(sub.kind), uint64_t(sub.rep));
            tasks.push_back([=, &cfg]() {
                Rng grng(seed, 1);
                NoiseSpec spec;
                spec.n = sub.n;
                if (sub.kind == 0)
                    spec.p = sub.par;
                else if (sub.kind == 1)
                    spec.q = density_matched_q(*astar, sub.par);
                else
                {
                    spec.hide_fraction = sub.par;
                    spec.hide_class = sub.kind == 2 ? NoiseSpec::HideClass::edges
                                                    : NoiseSpec::HideClass::nonedges;
                }
                auto d = simulate_measurement(*astar, spec, grng);
                SweepRow row = reconstruct_point(*astar, d, cfg, seed, nullptr);
                put(row, "kind", sub.kind);
                put(row, "par", sub.par);
                put(row, "n", double(sub.n));
                put(row, "rep", sub.rep);
                auto direct = majority_graph(d);
                put(row, "similarity_direct", similarity(direct, *astar));
                return row;
            });
        }
    }
    else if (cfg.protocol == "detectability")
    {
        for (size_t ei = 0; ei < cfg.eps_grid.size(); ++ei)
            for (int rep = 0; rep < cfg.replicates; ++rep)
            {
                double eps = cfg.eps_grid[ei];
                uint64_t seed = grid_seed(cfg.chain.seed, ei, 0, uint64_t(rep));
                tasks.push_back([=, &cfg]() {
                    Rng grng(seed, 2);
                    auto pp =
                        planted_partition_sample(cfg.pp_nodes, cfg.pp_groups, cfg.pp_avg_k,
                                                 eps, grng);
                    NoiseSpec spec;
                    spec.p = cfg.pp_noise_p;
                    spec.n = cfg.pp_n;
                    auto d = simulate_measurement(pp.graph, spec, grng);
                    SweepConfig local = cfg;
                    if (cfg.pp_known_b)
                        local.chain.max_groups = cfg.pp_groups;
                    SweepRow row =
                        reconstruct_point(pp.graph, d, local, seed, &pp.partition);
                    put(row, "eps", eps);
                    put(row, "rep", rep);
                    put(row, "threshold",
                        detectability_threshold(cfg.pp_nodes, cfg.pp_groups, cfg.pp_avg_k,
                                                cfg.pp_noise_p, 0));
                    return row;
                });
            }
    }
    else
        throw DataError("run_sweep: unknown protocol '" + cfg.protocol + "'");

    out.rows.resize(tasks.size());
    int threads = std::max(1, cfg.threads);
    if (threads == 1)
    {
        for (size_t t = 0; t < tasks.size(); ++t)
            out.rows[t] = tasks[t]();
    }
    else
    {
        std::atomic<size_t> next{0};
        auto worker = [&]() {
            for (;;)
            {
                size_t t = next.fetch_add(1);
                if (t >= tasks.size())
                    return;
                out.rows[t] = tasks[t]();
            }
        };
        std::vector<std::future<void>> futs;
        for (int w = 0; w < threads; ++w)
            futs.push_back(std::async(std::launch::async, worker));
        for (auto& f : futs)
            f.get();
    }

    // column union, sorted for a stable schema
    std::set<std::string> cols;
    for (auto& r : out.rows)
        for (auto& [k, v] : r.values)
            cols.insert(k);
    out.columns.assign(cols.begin(), cols.end());

    std::ostringstream meta;
    meta << "{\"protocol\": \"" << cfg.protocol << "\", \"seed\": " << cfg.chain.seed
         << ", \"replicates\": " << cfg.replicates << "}";
    out.metadata_json = meta.str();
    (void)rng;
    return out;
}

} // namespace netrecon
