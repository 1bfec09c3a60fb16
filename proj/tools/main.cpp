#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <mutex>

#include "CLI11.hpp"
#include "json.hpp"

#include "netrecon/driver.hpp"
#include "netrecon/io.hpp"

using namespace netrecon;
using nlohmann::json;

namespace {

struct CommonOpts
{
    ChainConfig chain;
    int chains = 2;
    int threads = 0;
    std::string model = "uniform";
    std::string prior = "hdcsbm";
};

void add_common(CLI::App* cmd, CommonOpts& o)
{
    cmd->add_option("--model", o.model, "noise model: uniform | hetero | extrinsic")
        ->check(CLI::IsMember({"uniform", "hetero", "extrinsic"}))
        ->capture_default_str();
    cmd->add_option("--prior", o.prior, "network prior: er | dcsbm | hdcsbm")
        ->check(CLI::IsMember({"er", "dcsbm", "hdcsbm"}))
        ->capture_default_str();
    cmd->add_option("--seed", o.chain.seed, "RNG seed")->capture_default_str();
    cmd->add_option("--chains", o.chains, "independent chains")->capture_default_str();
    cmd->add_option("--threads", o.threads, "worker threads (0: one per chain)")
        ->capture_default_str();
    cmd->add_option("--samples", o.chain.samples, "posterior samples per chain")
        ->capture_default_str();
    cmd->add_option("--thin", o.chain.thin, "sweeps between samples")->capture_default_str();
    cmd->add_option("--burnin-window", o.chain.burnin_window,
                    "sweeps per stationarity window")
        ->capture_default_str();
    cmd->add_option("--max-burnin", o.chain.max_burnin, "hard burn-in cap (sweeps)")
        ->capture_default_str();
    cmd->add_option("--max-groups", o.chain.max_groups,
                    "cap on the number of groups (0: unlimited, 1: single group)")
        ->capture_default_str();
    cmd->add_option("--max-depth", o.chain.max_depth, "hierarchy depth cap")
        ->capture_default_str();
    cmd->add_option("--alpha", o.chain.hyper.alpha, "missing-edge Beta prior alpha")
        ->capture_default_str();
    cmd->add_option("--beta", o.chain.hyper.beta, "missing-edge Beta prior beta")
        ->capture_default_str();
    cmd->add_option("--mu", o.chain.hyper.mu, "spurious-edge Beta prior mu")
        ->capture_default_str();
    cmd->add_option("--nu", o.chain.hyper.nu, "spurious-edge Beta prior nu")
        ->capture_default_str();
    cmd->add_option("--move-d", o.chain.move_d, "new-group proposal probability")
        ->capture_default_str();
    cmd->add_option("--eps", o.chain.move_eps, "group kernel smoothing")
        ->capture_default_str();
    cmd->add_option("--entry-mult", o.chain.entry_mult, "entry attempts multiplier")
        ->capture_default_str();
    cmd->add_option("--hyper-step", o.chain.hyper_step, "hyperparameter walk step")
        ->capture_default_str();
    cmd->add_option("--hyper-attempts", o.chain.hyper_attempts,
                    "hyperparameter proposals per sweep")
        ->capture_default_str();
    cmd->add_option("--lambda-edges", o.chain.lambda_edges,
                    "reference edge count of the edge-count prior (-1: from data)")
        ->capture_default_str();
}

NoiseModel parse_model(const std::string& s)
{
    if (s == "uniform")
        return NoiseModel::uniform;
    if (s == "hetero")
        return NoiseModel::hetero;
    return NoiseModel::extrinsic;
}

PriorModel parse_prior(const std::string& s)
{
    if (s == "er")
        return PriorModel::er;
    if (s == "dcsbm")
        return PriorModel::dcsbm;
    return PriorModel::hdcsbm;
}

json config_echo(const CommonOpts& o)
{
    json j;
    j["model"] = o.model;
    j["prior"] = o.prior;
    j["seed"] = o.chain.seed;
    j["chains"] = o.chains;
    j["samples"] = o.chain.samples;
    j["thin"] = o.chain.thin;
    j["burnin_window"] = o.chain.burnin_window;
    j["max_burnin"] = o.chain.max_burnin;
    j["max_groups"] = o.chain.max_groups;
    j["max_depth"] = o.chain.max_depth;
    j["alpha"] = o.chain.hyper.alpha;
    j["beta"] = o.chain.hyper.beta;
    j["mu"] = o.chain.hyper.mu;
    j["nu"] = o.chain.hyper.nu;
    j["move_d"] = o.chain.move_d;
    j["move_eps"] = o.chain.move_eps;
    j["entry_mult"] = o.chain.entry_mult;
    j["hyper_step"] = o.chain.hyper_step;
    j["hyper_attempts"] = o.chain.hyper_attempts;
    j["lambda_edges"] = o.chain.lambda_edges;
    j["nmi_normalization"] = "arithmetic mean";
    return j;
}

json scalar_json(const MarginalAccumulator& acc, const std::string& name)
{
    json j;
    if (auto* s = acc.scalar(name))
    {
        j["mean"] = s->mean();
        j["sd"] = s->sd();
        j["samples"] = s->n;
    }
    return j;
}

void write_marginals_csv(const std::string& path, const MarginalAccumulator& acc)
{
    std::ofstream out(path);
    if (!out)
        throw DataError("cannot write " + path);
    out.precision(10);
    out << "i,j,pi\n";
    std::vector<PairKey> keys;
    for (auto& [k, c] : acc.counts())
        if (c > 0)
            keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    for (PairKey k : keys)
    {
        auto [i, j] = pair_nodes(k);
        out << i << "," << j << "," << acc.marginal(i, j) << "\n";
    }
}

void write_trace_csv(const std::string& path, const std::vector<ChainDiagnostics>& diags)
{
    std::ofstream out(path);
    if (!out)
        throw DataError("cannot write " + path);
    out.precision(10);
    out << "chain,sweep,burnin,log_posterior,acc_node,acc_entry,acc_hyper,e_latent,groups\n";
    for (size_t c = 0; c < diags.size(); ++c)
        for (auto& row : diags[c].trace)
        {
            out << c << "," << row.sweep << "," << (row.burnin ? 1 : 0) << ","
                << row.log_posterior << "," << row.acc_node << "," << row.acc_entry << ","
                << row.acc_hyper << "," << row.latent_edges << ",";
            for (size_t l = 0; l < row.groups_per_level.size(); ++l)
                out << (l ? ";" : "") << row.groups_per_level[l];
            out << "\n";
        }
}

json report_from(const MarginalAccumulator& acc, const AdjacencyView* reference,
                 const std::vector<std::string>* labels)
{
    json rep;
    rep["edges"] = scalar_json(acc, "edges");
    rep["similarity_to_input"] = scalar_json(acc, "similarity");
    rep["clustering"] = scalar_json(acc, "clustering");
    rep["assortativity"] = scalar_json(acc, "assortativity");
    rep["effective_groups"] = scalar_json(acc, "b_eff");
    rep["groups"] = scalar_json(acc, "groups");
    if (acc.has_error_rates())
    {
        rep["p_hat"] = {{"mean", acc.p_mean()}, {"sd", acc.p_sd()}};
        rep["q_hat"] = {{"mean", acc.q_mean()}, {"sd", acc.q_sd()}};
    }
    if (acc.has_degree_estimate())
        rep["degree_distribution"] = acc.degree_estimate();

    auto mmp = mmp_estimate(acc);
    std::vector<PairKey> keys(mmp.edges().begin(), mmp.edges().end());
    std::sort(keys.begin(), keys.end());
    json edges = json::array();
    for (PairKey k : keys)
    {
        auto [i, j] = pair_nodes(k);
        edges.push_back({i, j});
    }
    rep["mmp_edge_count"] = mmp.edge_count();
    rep["mmp_edges"] = edges;
    if (reference)
        rep["mmp_similarity_to_input"] = similarity(mmp, *reference);
    if (labels)
        rep["labels"] = *labels;
    rep["posterior_samples"] = acc.samples();
    return rep;
}

// sample collector plus an optional on-disk sample log
struct LoggingCollector
{
    SampleCollector inner;
    std::shared_ptr<SampleWriter> writer;
    std::shared_ptr<std::mutex> lock;

    void operator()(const Chain& chain)
    {
        inner(chain);
        if (writer)
        {
            SampleRecord rec;
            rec.edges.assign(chain.adjacency().edges().begin(),
                             chain.adjacency().edges().end());
            rec.partition = chain.node_partition();
            if (auto er = chain.error_conditionals())
            {
                rec.has_rates = true;
                rec.p_a = er->p.a;
                rec.p_b = er->p.b;
                rec.q_a = er->q.a;
                rec.q_b = er->q.b;
            }
            std::lock_guard<std::mutex> g(*lock);
            writer->write(rec);
        }
    }
};

int cmd_reconstruct(const CommonOpts& common, const std::string& data_path,
                    const std::string& q_path, const std::string& out_dir,
                    const std::string& samples_path, const std::string& labels_path,
                    bool degree_dist)
{
    CommonOpts o = common;
    o.chain.model = parse_model(o.model);
    o.chain.prior = parse_prior(o.prior);
    o.chain.hyper.validate();
    if (o.chains < 1)
        throw DataError("reconstruct: need at least one chain");

    std::filesystem::create_directories(out_dir);
    auto path = [&](const std::string& f) {
        return (std::filesystem::path(out_dir) / f).string();
    };

    std::optional<MeasurementData> d;
    std::optional<ExtrinsicUncertainty> q;
    AdjacencyView reference(1);
    if (o.chain.model == NoiseModel::extrinsic)
    {
        if (q_path.empty())
            throw DataError("reconstruct: the extrinsic model needs --qdata");
        q.emplace(parse_q_file(q_path));
        reference = AdjacencyView(q->node_count());
        for (NodeId i = 0; i < q->node_count(); ++i)
            for (NodeId j = i + 1; j < q->node_count(); ++j)
                if (q->get(i, j) > 0.5)
                    reference.add_edge(i, j);
    }
    else
    {
        if (data_path.empty())
            throw DataError("reconstruct: need --data");
        d.emplace(parse_measurement_file(data_path));
        reference = majority_graph(*d);
        if (o.chain.model == NoiseModel::hetero)
        {
            bool informative = d->default_n() > 1;
            for (auto& [k, c] : d->overrides())
                if (c.n > 1)
                    informative = true;
            if (!informative)
                std::cerr << "warning: every pair has n <= 1; the heterogeneous model "
                             "cannot detect error variation in such data\n";
        }
    }

    std::vector<std::string> labels;
    NodeId n = d ? d->node_count() : q->node_count();
    if (!labels_path.empty())
        labels = parse_labels_file(labels_path, n);

    CollectorOptions copt;
    copt.reference = &reference;
    copt.degree_dist = degree_dist;

    auto writer =
        samples_path.empty() ? nullptr : std::make_shared<SampleWriter>(samples_path, n);
    auto lock = std::make_shared<std::mutex>();
    std::vector<LoggingCollector> collectors;
    std::vector<ChainDiagnostics> diags{size_t(o.chains)};
    for (int c = 0; c < o.chains; ++c)
        collectors.push_back(LoggingCollector{SampleCollector(n, copt), writer, lock});
    auto run_one = [&](int c) {
        ChainConfig cc = o.chain;
        cc.chain_index = uint32_t(c);
        if (d)
        {
            Chain chain(*d, cc);
            diags[size_t(c)] = run_chain(chain, std::ref(collectors[size_t(c)]));
        }
        else
        {
            Chain chain(*q, cc);
            diags[size_t(c)] = run_chain(chain, std::ref(collectors[size_t(c)]));
        }
    };
    if (o.chains == 1)
        run_one(0);
    else
    {
        std::vector<std::future<void>> futs;
        for (int c = 0; c < o.chains; ++c)
            futs.push_back(std::async(std::launch::async, run_one, c));
        for (auto& f : futs)
            f.get();
    }
    MarginalAccumulator acc = std::move(collectors[0].inner.acc);
    for (int c = 1; c < o.chains; ++c)
        acc.merge(collectors[size_t(c)].inner.acc);

    write_marginals_csv(path("marginals.csv"), acc);
    write_trace_csv(path("trace.csv"), diags);

    json rep;
    rep["metadata"] = config_echo(o);
    rep["metadata"]["data"] = data_path.empty() ? q_path : data_path;
    rep["results"] = report_from(acc, &reference, labels.empty() ? nullptr : &labels);
    json burn = json::array();
    for (auto& dg : diags)
        burn.push_back({{"burnin_sweeps", dg.burnin_sweeps},
                        {"stationary", dg.stationary},
                        {"acc_node", dg.node_moves.rate()},
                        {"acc_entry", dg.entry_updates.rate()},
                        {"acc_hyper", dg.hyper_moves.rate()}});
    rep["chains"] = burn;
    std::ofstream out(path("report.json"));
    out << rep.dump(2) << "\n";
    return 0;
}

int cmd_simulate(const std::string& graph_path, const std::string& out_path, double p,
                 double q, bool density_matched, int64_t n, double hide_fraction,
                 const std::string& hide_class, uint64_t seed)
{
    auto a = parse_graph_file(graph_path);
    NoiseSpec spec;
    spec.p = p;
    spec.q = density_matched ? density_matched_q(a, p) : q;
    spec.n = n;
    spec.hide_fraction = hide_fraction;
    spec.hide_class = hide_class == "nonedges" ? NoiseSpec::HideClass::nonedges
                                               : NoiseSpec::HideClass::edges;
    Rng rng(seed, 0x51);
    auto d = simulate_measurement(a, spec, rng);
    write_measurement_file(out_path, d);
    std::cerr << "wrote " << out_path << " (q = " << spec.q << ")\n";
    return 0;
}

std::vector<double> parse_grid(const std::string& csv)
{
    std::vector<double> out;
    std::istringstream in(csv);
    std::string tok;
    while (std::getline(in, tok, ','))
        if (!tok.empty())
            out.push_back(std::stod(tok));
    return out;
}

int cmd_sweep(const CommonOpts& common, const std::string& protocol,
              const std::string& graph_path, const std::string& out_prefix,
              const std::string& p_grid, const std::string& n_grid,
              const std::string& f_grid, const std::string& eps_grid, int replicates,
              int64_t pp_nodes, int pp_groups, double pp_avg_k, double pp_noise_p,
              int64_t pp_n, bool pp_free_b)
{
    CommonOpts o = common;
    SweepConfig cfg;
    cfg.protocol = protocol;
    cfg.chain = o.chain;
    cfg.chain.model = parse_model(o.model);
    cfg.chain.prior = parse_prior(o.prior);
    cfg.replicates = replicates;
    cfg.threads = o.threads > 0 ? o.threads : o.chains;
    if (!p_grid.empty())
        cfg.p_grid = parse_grid(p_grid);
    if (!n_grid.empty())
    {
        cfg.n_grid.clear();
        for (double v : parse_grid(n_grid))
            cfg.n_grid.push_back(int64_t(v));
    }
    cfg.f_grid = parse_grid(f_grid);
    cfg.eps_grid = parse_grid(eps_grid);
    cfg.pp_nodes = NodeId(pp_nodes);
    cfg.pp_groups = pp_groups;
    cfg.pp_avg_k = pp_avg_k;
    cfg.pp_noise_p = pp_noise_p;
    cfg.pp_n = pp_n;
    cfg.pp_known_b = !pp_free_b;

    std::optional<AdjacencyView> a;
    if (!graph_path.empty())
        a.emplace(parse_graph_file(graph_path));
    Rng rng(cfg.chain.seed, 0x53);
    auto res = run_sweep(cfg, a ? &*a : nullptr, rng);

    std::ofstream out(out_prefix + ".csv");
    if (!out)
        throw DataError("cannot write " + out_prefix + ".csv");
    out.precision(10);
    for (size_t c = 0; c < res.columns.size(); ++c)
        out << (c ? "," : "") << res.columns[c];
    out << "\n";
    for (auto& row : res.rows)
    {
        for (size_t c = 0; c < res.columns.size(); ++c)
        {
            auto it = row.values.find(res.columns[c]);
            out << (c ? "," : "");
            if (it != row.values.end())
                out << it->second;
        }
        out << "\n";
    }
    std::ofstream meta(out_prefix + ".meta.json");
    json m = json::parse(res.metadata_json);
    m["config"] = config_echo(o);
    m["protocol"] = protocol;
    m["graph"] = graph_path;
    meta << m.dump(2) << "\n";
    return 0;
}

int cmd_estimate(const std::string& samples_path, const std::string& data_path,
                 const std::string& out_dir)
{
    NodeId n = 0;
    auto recs = parse_samples_file(samples_path, &n);
    if (recs.empty())
        throw DataError("estimate: no samples in " + samples_path);

    std::optional<MeasurementData> d;
    std::optional<AdjacencyView> reference;
    if (!data_path.empty())
    {
        d.emplace(parse_measurement_file(data_path));
        reference.emplace(majority_graph(*d));
    }

    MarginalAccumulator acc(n);
    for (auto& rec : recs)
    {
        AdjacencyView a(n);
        for (PairKey k : rec.edges)
        {
            auto [i, j] = pair_nodes(k);
            a.add_edge(i, j);
        }
        acc.add_sample(a);
        acc.add_scalar("edges", double(a.edge_count()));
        acc.add_scalar("clustering", clustering_coefficient(a));
        if (auto r = degree_assortativity(a))
            acc.add_scalar("assortativity", *r);
        if (!rec.partition.empty())
            acc.add_scalar("b_eff", effective_group_count(rec.partition));
        if (reference)
            acc.add_scalar("similarity", similarity(a, *reference));
        if (rec.has_rates)
            acc.add_error_moments({rec.p_a, rec.p_b}, {rec.q_a, rec.q_b});
        acc.add_degree_sample(a, n - 1);
    }

    std::filesystem::create_directories(out_dir);
    auto path = [&](const std::string& f) {
        return (std::filesystem::path(out_dir) / f).string();
    };
    write_marginals_csv(path("marginals.csv"), acc);
    json rep;
    rep["metadata"] = {{"samples_file", samples_path}, {"data", data_path}};
    rep["results"] = report_from(acc, reference ? &*reference : nullptr, nullptr);
    std::ofstream out(path("report.json"));
    out << rep.dump(2) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Bayesian reconstruction of uncertain networks"};
    app.require_subcommand(1);
    app.set_config("--config", "",
                   "key=value configuration file ([subcommand] sections; flags override)");

    CommonOpts common;

    auto* rec =
        app.add_subcommand("reconstruct", "sample the posterior of a measured network");
    std::string data_path, q_path, out_dir = ".", samples_path, labels_path;
    bool degree_dist = false;
    rec->add_option("--data", data_path, "measurement file (n_ij, x_ij)");
    rec->add_option("--qdata", q_path, "extrinsic edge-probability file");
    rec->add_option("--out", out_dir, "output directory")->capture_default_str();
    rec->add_option("--save-samples", samples_path, "log posterior samples to this file");
    rec->add_option("--labels", labels_path, "node label sidecar");
    rec->add_flag("--degree-dist", degree_dist,
                  "accumulate the degree distribution estimate");
    add_common(rec, common);

    auto* sim =
        app.add_subcommand("simulate", "generate noisy measurements of a known network");
    std::string graph_path, sim_out = "simulated.meas", hide_class = "edges";
    double sim_p = 0, sim_q = 0, hide_fraction = 0;
    int64_t sim_n = 1;
    uint64_t sim_seed = 42;
    bool density_matched = false;
    sim->add_option("--graph", graph_path, "true network file")->required();
    sim->add_option("--out", sim_out, "output measurement file")->capture_default_str();
    sim->add_option("-p,--p", sim_p, "missing-edge probability")->capture_default_str();
    sim->add_option("-q,--q", sim_q, "spurious-edge probability")->capture_default_str();
    sim->add_flag("--density-matched", density_matched,
                  "choose q to preserve the expected density");
    sim->add_option("-n,--n", sim_n, "measurements per pair")->capture_default_str();
    sim->add_option("--hide-fraction", hide_fraction,
                    "fraction left unobserved (n_ij = 0)")
        ->capture_default_str();
    sim->add_option("--hide-class", hide_class, "edges | nonedges")
        ->check(CLI::IsMember({"edges", "nonedges"}))
        ->capture_default_str();
    sim->add_option("--seed", sim_seed, "RNG seed")->capture_default_str();

    auto* swp = app.add_subcommand("sweep", "run a reconstruction protocol over a grid");
    std::string protocol = "similarity", sweep_graph, out_prefix = "sweep";
    std::string p_grid, n_grid, f_grid, eps_grid;
    int replicates = 1;
    int64_t pp_nodes = 1000, pp_n = 1;
    int pp_groups = 2;
    double pp_avg_k = 10, pp_noise_p = 0;
    bool pp_free_b = false;
    swp->add_option("--protocol", protocol,
                    "similarity | noise-recovery | denoise-complete | detectability")
        ->check(CLI::IsMember(
            {"similarity", "noise-recovery", "denoise-complete", "detectability"}))
        ->capture_default_str();
    swp->add_option("--graph", sweep_graph, "true network file (network protocols)");
    swp->add_option("--out", out_prefix, "output prefix (.csv, .meta.json)")
        ->capture_default_str();
    swp->add_option("--p-grid", p_grid, "comma-separated missing-edge probabilities");
    swp->add_option("--n-grid", n_grid, "comma-separated measurement counts");
    swp->add_option("--f-grid", f_grid, "comma-separated unobserved fractions");
    swp->add_option("--eps-grid", eps_grid, "comma-separated planted-partition strengths");
    swp->add_option("--replicates", replicates, "replicates per grid point")
        ->capture_default_str();
    swp->add_option("--pp-nodes", pp_nodes, "planted-partition nodes")->capture_default_str();
    swp->add_option("--pp-groups", pp_groups, "planted-partition groups")
        ->capture_default_str();
    swp->add_option("--pp-avg-k", pp_avg_k, "planted-partition mean degree")
        ->capture_default_str();
    swp->add_option("--pp-noise-p", pp_noise_p, "measurement noise for detectability")
        ->capture_default_str();
    swp->add_option("--pp-n", pp_n, "measurements per pair for detectability")
        ->capture_default_str();
    swp->add_flag("--pp-free-b", pp_free_b,
                  "do not cap the model at the planted group count");
    add_common(swp, common);

    auto* est = app.add_subcommand("estimate", "re-reduce a saved posterior sample log");
    std::string est_samples, est_data, est_out = ".";
    est->add_option("--samples", est_samples, "sample log file")->required();
    est->add_option("--data", est_data, "measurement file (for similarity-to-input)");
    est->add_option("--out", est_out, "output directory")->capture_default_str();

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try
    {
        if (rec->parsed())
            return cmd_reconstruct(common, data_path, q_path, out_dir, samples_path,
                                   labels_path, degree_dist);
        if (sim->parsed())
            return cmd_simulate(graph_path, sim_out, sim_p, sim_q, density_matched, sim_n,
                                hide_fraction, hide_class, sim_seed);
        if (swp->parsed())
            return cmd_sweep(common, protocol, sweep_graph, out_prefix, p_grid, n_grid,
                             f_grid, eps_grid, replicates, pp_nodes, pp_groups, pp_avg_k,
                             pp_noise_p, pp_n, pp_free_b);
        if (est->parsed())
            return cmd_estimate(est_samples, est_data, est_out);
    }
    catch (const DataError& e)
    {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
