#pragma once

#include <cstdint>
#include <unordered_map>

#include "netrecon/common.hpp"

namespace netrecon {

// Per-pair measurement counts: n_ij trials, x_ij positive outcomes.
// Pairs not listed take (default_n, 0); n_ij = 0 means "never measured".
class MeasurementData
{
public:
    struct Counts
    {
        int64_t n = 0;
        int64_t x = 0;
    };

    MeasurementData(NodeId node_count, int64_t default_n)
        : n_(node_count), default_n_(default_n)
    {
        if (node_count <= 0)
            throw DataError("MeasurementData: node_count must be positive");
        if (default_n < 0)
            throw DataError("MeasurementData: default_n must be nonnegative");
    }

    NodeId node_count() const { return n_; }
    int64_t default_n() const { return default_n_; }
    int64_t pair_total() const { return int64_t(n_) * (n_ - 1) / 2; }

    void set(NodeId i, NodeId j, int64_t n, int64_t x)
    {
        if (i == j)
            throw DataError("MeasurementData: self-pairs are not measured");
        if (i < 0 || i >= n_ || j < 0 || j >= n_)
            throw DataError("MeasurementData: node id out of range");
        if (n < 0 || x < 0 || x > n)
            throw DataError("MeasurementData: need 0 <= x <= n");
        overrides_[pair_key(i, j)] = {n, x};
    }

    Counts get(NodeId i, NodeId j) const
    {
        auto it = overrides_.find(pair_key(i, j));
        if (it != overrides_.end())
            return it->second;
        return {default_n_, 0};
    }

    Counts get(PairKey k) const
    {
        auto it = overrides_.find(k);
        if (it != overrides_.end())
            return it->second;
        return {default_n_, 0};
    }

    const std::unordered_map<PairKey, Counts>& overrides() const { return overrides_; }

    bool operator==(const MeasurementData& o) const;

private:
    NodeId n_;
    int64_t default_n_;
    std::unordered_map<PairKey, Counts> overrides_;
};

// Beta hyperparameters for the missing (p ~ Beta(alpha, beta)) and
// spurious (q ~ Beta(mu, nu)) error rates.
struct ErrorHyperParams
{
    double alpha = 1, beta = 1, mu = 1, nu = 1;

    void validate() const
    {
        if (!(alpha > 0) || !(beta > 0) || !(mu > 0) || !(nu > 0) ||
            !std::isfinite(alpha) || !std::isfinite(beta) || !std::isfinite(mu) ||
            !std::isfinite(nu))
            throw DataError("ErrorHyperParams: all hyperparameters must be positive and finite");
    }
};

// domain of the flat hyperprior used by the heterogeneous model
constexpr double hyper_domain_min = 1e-3;
constexpr double hyper_domain_max = 1e4;

struct MeasurementSummaries
{
    int64_t M = 0; // total measurements
    int64_t X = 0; // total positive outcomes
    int64_t E = 0; // measurements on true edges
    int64_t T = 0; // positive outcomes on true edges
};

// Extrinsically supplied edge probabilities Q_ij with a default for
// unlisted pairs; mean_q is over all N(N-1)/2 pairs.
class ExtrinsicUncertainty
{
public:
    ExtrinsicUncertainty(NodeId node_count, double default_q)
        : n_(node_count), default_q_(default_q)
    {
        if (node_count <= 0)
            throw DataError("ExtrinsicUncertainty: node_count must be positive");
        if (default_q < 0 || default_q > 1)
            throw DataError("ExtrinsicUncertainty: default Q outside [0,1]");
    }

    NodeId node_count() const { return n_; }
    double default_q() const { return default_q_; }
    int64_t pair_total() const { return int64_t(n_) * (n_ - 1) / 2; }
    int64_t pair_total_unlisted() const { return pair_total() - int64_t(overrides_.size()); }

    void set(NodeId i, NodeId j, double q)
    {
        if (i == j)
            throw DataError("ExtrinsicUncertainty: self-pairs not allowed");
        if (i < 0 || i >= n_ || j < 0 || j >= n_)
            throw DataError("ExtrinsicUncertainty: node id out of range");
        if (q < 0 || q > 1)
            throw DataError("ExtrinsicUncertainty: Q outside [0,1]");
        overrides_[pair_key(i, j)] = q;
    }

    double get(NodeId i, NodeId j) const
    {
        auto it = overrides_.find(pair_key(i, j));
        return it == overrides_.end() ? default_q_ : it->second;
    }

    const std::unordered_map<PairKey, double>& overrides() const { return overrides_; }

    double mean() const
    {
        double total = 0;
        for (auto& [k, q] : overrides_)
            total += q;
        int64_t pairs = int64_t(n_) * (n_ - 1) / 2;
        total += default_q_ * double(pairs - int64_t(overrides_.size()));
        return total / double(pairs);
    }

private:
    NodeId n_;
    double default_q_;
    std::unordered_map<PairKey, double> overrides_;
};

inline bool MeasurementData::operator==(const MeasurementData& o) const
{
    if (n_ != o.n_ || default_n_ != o.default_n_)
        return false;
    auto covered = [](const MeasurementData& a, const MeasurementData& b) {
        for (auto& [k, c] : a.overrides_)
        {
            auto d = b.get(k);
            if (d.n != c.n || d.x != c.x)
                return false;
        }
        return true;
    };
    return covered(*this, o) && covered(o, *this);
}

} // namespace netrecon
