#pragma once

#include "netrecon/data.hpp"
#include "netrecon/graph.hpp"
#include "netrecon/nums.hpp"

namespace netrecon {

MeasurementSummaries measurement_summaries(const MeasurementData& d, const AdjacencyView& a);

// integrated likelihood with Beta priors on the uniform error rates
double log_likelihood_uniform(const MeasurementData& d, const AdjacencyView& a,
                              const ErrorHyperParams& h);

// likelihood at fixed error rates p, q
double log_likelihood_fixed(const MeasurementData& d, const AdjacencyView& a, double p,
                            double q);

// per-pair integrated likelihood with individual error rates sharing
// Beta(alpha,beta) / Beta(mu,nu) priors
double log_likelihood_hetero(const MeasurementData& d, const AdjacencyView& a,
                             const ErrorHyperParams& h);

// log P(Q|A) up to the A-independent prior factor
double log_likelihood_extrinsic(const ExtrinsicUncertainty& q, const AdjacencyView& a);

double mean_uncertainty(const ExtrinsicUncertainty& q);

struct BetaParams
{
    double a = 1, b = 1;
    double mean() const { return a / (a + b); }
    double second_moment() const { return a * (a + 1) / ((a + b) * (a + b + 1)); }
    double var() const { return second_moment() - mean() * mean(); }
};

// conditional posteriors of the uniform error rates given the network
struct ErrorRatePosterior
{
    BetaParams p, q;
};

ErrorRatePosterior error_rate_conditionals_uniform(const MeasurementData& d,
                                                   const AdjacencyView& a,
                                                   const ErrorHyperParams& h);

std::pair<double, double> sample_error_rates_uniform(const MeasurementData& d,
                                                     const AdjacencyView& a,
                                                     const ErrorHyperParams& h, Rng& rng);

// conditional posteriors of the per-pair rates in the heterogeneous model
ErrorRatePosterior edge_error_conditionals_hetero(int64_t n, int64_t x, int a_ij,
                                                  const ErrorHyperParams& h);

// ============================================================
// Incremental evaluators used by the sampler. Each keeps the
// sufficient statistics needed for O(1) edge-flip deltas.
// ============================================================

class UniformErrorModel
{
public:
    UniformErrorModel(const MeasurementData& d, const AdjacencyView& a,
                      const ErrorHyperParams& h);

    double log_value() const;
    // delta of log_value from toggling pair (i,j); adding = edge being added
    double flip_delta(NodeId i, NodeId j, bool adding) const;
    void apply_flip(NodeId i, NodeId j, bool adding);

    const MeasurementSummaries& summaries() const { return s_; }
    const ErrorHyperParams& hyper() const { return h_; }

private:
    double beta_terms(int64_t e, int64_t t) const;

    const MeasurementData* d_;
    ErrorHyperParams h_;
    MeasurementSummaries s_;
    double log_binom_const_ = 0;
};

class HeteroErrorModel
{
public:
    HeteroErrorModel(const MeasurementData& d, const AdjacencyView& a,
                     const ErrorHyperParams& h);

    double log_value() const { return value_; }
    double flip_delta(NodeId i, NodeId j, bool adding) const;
    void apply_flip(NodeId i, NodeId j, bool adding);

    // delta of log_value if the hyperparameters were replaced
    double hyper_delta(const ErrorHyperParams& nh) const;
    void apply_hyper(const ErrorHyperParams& nh);

    const ErrorHyperParams& hyper() const { return h_; }

private:
    struct CountKey
    {
        int64_t n, x;
        bool operator==(const CountKey& o) const { return n == o.n && x == o.x; }
    };
    struct CountKeyHash
    {
        size_t operator()(const CountKey& k) const
        {
            return std::hash<uint64_t>()(uint64_t(k.n) * 1000003u + uint64_t(k.x));
        }
    };
    using Hist = std::unordered_map<CountKey, int64_t, CountKeyHash>;

    static double edge_term(int64_t n, int64_t x, const ErrorHyperParams& h);
    static double nonedge_term(int64_t n, int64_t x, const ErrorHyperParams& h);
    double value_from(const ErrorHyperParams& h) const;

    const MeasurementData* d_;
    ErrorHyperParams h_;
    Hist edge_hist_;          // (n,x) counts over pairs with A_ij = 1
    Hist nonedge_over_hist_;  // (n,x) counts over override pairs with A_ij = 0
    int64_t nonedge_default_ = 0; // non-override pairs with A_ij = 0
    double log_binom_const_ = 0;
    double value_ = 0;
};

class ExtrinsicErrorModel
{
public:
    ExtrinsicErrorModel(const ExtrinsicUncertainty& q, const AdjacencyView& a);

    double log_value() const { return violations_ ? neg_inf : finite_; }
    double flip_delta(NodeId i, NodeId j, bool adding) const;
    void apply_flip(NodeId i, NodeId j, bool adding);

    double mean_q() const { return qbar_; }

private:
    // finite contribution of a pair in the given state; +-inf marks a
    // hard constraint violation
    double pair_term(double q, bool edge) const;

    const ExtrinsicUncertainty* q_;
    double qbar_;
    double finite_ = 0;
    int64_t violations_ = 0;
};

} // namespace netrecon
