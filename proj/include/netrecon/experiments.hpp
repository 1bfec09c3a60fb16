#pragma once

#include <string>

#include "netrecon/estimators.hpp"
#include "netrecon/mcmc.hpp"

namespace netrecon {

// ============================================================
// sample collection glue: one callback per posterior sample
// ============================================================

struct CollectorOptions
{
    bool clustering = true;
    bool assortativity = true;
    bool degree_dist = false;
    int64_t degree_k_max = -1;                        // default: N-1
    const AdjacencyView* reference = nullptr;         // similarity target
    const std::vector<int32_t>* ref_partition = nullptr; // NMI target
};

class SampleCollector
{
public:
    SampleCollector(NodeId node_count, CollectorOptions opt = {})
        : acc(node_count), opt_(opt)
    {
    }

    void operator()(const Chain& chain);

    MarginalAccumulator acc;

private:
    CollectorOptions opt_;
};

// ============================================================
// synthetic measurement generation
// ============================================================

struct NoiseSpec
{
    double p = 0;       // missing-edge probability
    double q = 0;       // spurious-edge probability
    int64_t n = 1;      // measurements per pair
    double hide_fraction = 0;                 // fraction left unobserved (n_ij = 0)
    enum class HideClass { edges, nonedges } hide_class = HideClass::edges;
};

MeasurementData simulate_measurement(const AdjacencyView& astar, const NoiseSpec& spec,
                                     Rng& rng);

// q matching the expected measured density to the true density
double density_matched_q(const AdjacencyView& astar, double p);
double density_matched_q(int64_t node_count, int64_t edges, double p);

// equal-group planted partition sample; eps = N(w_in - w_out)
struct PlantedPartition
{
    AdjacencyView graph;
    std::vector<int32_t> partition;
};
PlantedPartition planted_partition_sample(NodeId n, int32_t b, double avg_k, double eps,
                                          Rng& rng);

// assortative DC-SBM sample: Poisson multigraph collapsed to a simple
// graph; in_frac is the expected fraction of a group's edge endpoints kept
// internal, theta_shape the Gamma shape of the degree propensities
PlantedPartition dcsbm_sample(NodeId n, int32_t b, double avg_k, double in_frac,
                              double theta_shape, Rng& rng);

// critical N|w_in - w_out| below which recovery is impossible
double detectability_threshold(NodeId n, int32_t b, double avg_k, double p, double q);

// effective connection probability after measurement noise
double effective_sbm_probability(double omega, double p, double q);

// ============================================================
// protocol sweeps
// ============================================================

struct SweepConfig
{
    // similarity: reconstruction\' quality vs p for several n (also records
    //   inferred error rates, clustering, assortativity, degree KL)
    // denoise-complete: edge/nonedge de-noising and completion grids
    // detectability: planted-partition NMI and similarity vs eps
    std::string protocol = "similarity";

    std::vector<double> p_grid{0.0, 0.2, 0.4};
    std::vector<int64_t> n_grid{1};
    std::vector<double> f_grid{};    // completion fractions
    std::vector<double> eps_grid{};  // detectability grid
    int replicates = 1;

    // detectability ensemble
    NodeId pp_nodes = 1000;
    int32_t pp_groups = 2;
    double pp_avg_k = 10;
    double pp_noise_p = 0;
    int64_t pp_n = 1;
    bool pp_known_b = true; // cap the model at the planted group count

    ChainConfig chain;
    int threads = 1;
};

struct SweepRow
{
    std::map<std::string, double> values;
};

struct SweepResult
{
    std::vector<std::string> columns;
    std::vector<SweepRow> rows;
    std::string metadata_json;
};

// runs the protocol on the given true network (ignored by `detectability`,
// which samples its own ensembles)
SweepResult run_sweep(const SweepConfig& cfg, const AdjacencyView* astar, Rng& rng);

} // namespace netrecon
