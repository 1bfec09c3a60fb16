#pragma once

#include <map>
#include <optional>
#include <string>

#include "netrecon/graph.hpp"
#include "netrecon/likelihood.hpp"

namespace netrecon {

struct ScalarStat
{
    int64_t n = 0;
    double sum = 0, sumsq = 0;
    void add(double v)
    {
        ++n;
        sum += v;
        sumsq += v * v;
    }
    void merge(const ScalarStat& o)
    {
        n += o.n;
        sum += o.sum;
        sumsq += o.sumsq;
    }
    double mean() const { return n ? sum / double(n) : 0; }
    double var() const
    {
        if (n == 0)
            return 0;
        double m = mean();
        return std::max(0.0, sumsq / double(n) - m * m);
    }
    double sd() const { return std::sqrt(var()); }
};

// Streaming tallies over posterior samples: edge occurrence counts,
// error-rate moments, named scalar observables, degree-distribution sums.
// Merging is commutative and associative.
class MarginalAccumulator
{
public:
    explicit MarginalAccumulator(NodeId node_count) : n_(node_count) {}

    NodeId node_count() const { return n_; }
    int64_t samples() const { return samples_; }

    void add_sample(const AdjacencyView& a);
    void add_error_moments(const BetaParams& p, const BetaParams& q);
    // point values (no within-sample spread), e.g. prior means
    void add_error_point(double p, double q)
    {
        p_m1_.add(p);
        p_m2_.add(p * p);
        q_m1_.add(q);
        q_m2_.add(q * q);
    }
    void add_scalar(const std::string& name, double v) { scalars_[name].add(v); }
    void add_degree_sample(const AdjacencyView& a, int64_t k_max);

    void merge(const MarginalAccumulator& o);

    double marginal(NodeId i, NodeId j) const
    {
        auto it = counts_.find(pair_key(i, j));
        return it == counts_.end() ? 0.0 : double(it->second) / double(samples_);
    }
    const std::unordered_map<PairKey, int64_t>& counts() const { return counts_; }

    const std::map<std::string, ScalarStat>& scalars() const { return scalars_; }
    const ScalarStat* scalar(const std::string& name) const
    {
        auto it = scalars_.find(name);
        return it == scalars_.end() ? nullptr : &it->second;
    }

    // posterior mean/sd of the error rates via the conditional moments
    bool has_error_rates() const { return p_m1_.n > 0; }
    double p_mean() const { return p_m1_.mean(); }
    double p_sd() const { return std::sqrt(std::max(0.0, p_m2_.mean() - p_mean() * p_mean())); }
    double q_mean() const { return q_m1_.mean(); }
    double q_sd() const { return std::sqrt(std::max(0.0, q_m2_.mean() - q_mean() * q_mean())); }

    bool has_degree_estimate() const { return degree_samples_ > 0; }
    std::vector<double> degree_estimate() const;

private:
    NodeId n_;
    int64_t samples_ = 0;
    std::unordered_map<PairKey, int64_t> counts_;
    ScalarStat p_m1_, p_m2_, q_m1_, q_m2_;
    std::map<std::string, ScalarStat> scalars_;
    std::vector<double> degree_sum_;
    int64_t degree_samples_ = 0;
};

// maximum marginal posterior network: edge iff pi_ij > 1/2 (ties excluded)
AdjacencyView mmp_estimate(const MarginalAccumulator& acc);

// mean and (population) standard deviation of an observable stream
std::pair<double, double> posterior_scalar(const std::vector<double>& values);

// per-sample smoothed degree probabilities p_k = (n_k + 1)/(N + K + 1)
std::vector<double> degree_prob_vector(const AdjacencyView& a, int64_t k_max);

// posterior-mean degree distribution over a sample stream
std::vector<double> degree_distribution_estimate(const std::vector<AdjacencyView>& samples,
                                                 int64_t k_max);

// sum_k p_k ln(p_k/phat_k); +inf on support violation
double kl_divergence(const std::vector<double>& p, const std::vector<double>& phat);

// ---- graph observables ----
double clustering_coefficient(const AdjacencyView& a); // degree<2 nodes count as 0
std::optional<double> degree_assortativity(const AdjacencyView& a);
double effective_group_count(const std::vector<int32_t>& b); // exp of size entropy
std::vector<int64_t> degree_histogram(const AdjacencyView& a);

// arithmetic-mean normalized mutual information between partitions
double normalized_mutual_information(const std::vector<int32_t>& b1,
                                     const std::vector<int32_t>& b2);

} // namespace netrecon
