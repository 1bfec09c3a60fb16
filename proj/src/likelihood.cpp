#include "netrecon/likelihood.hpp"

namespace netrecon {

MeasurementSummaries measurement_summaries(const MeasurementData& d, const AdjacencyView& a)
{
    if (d.node_count() != a.node_count())
        throw DataError("measurement_summaries: mismatched node counts");
    MeasurementSummaries s;
    s.M = d.default_n() * (d.pair_total() - int64_t(d.overrides().size()));
    for (auto& [k, c] : d.overrides())
    {
        s.M += c.n;
        s.X += c.x;
    }
    for (PairKey e : a.edges())
    {
        auto c = d.get(e);
        s.E += c.n;
        s.T += c.x;
    }
    return s;
}

namespace {

double uniform_beta_terms(const MeasurementSummaries& s, const ErrorHyperParams& h)
{
    return lbeta(double(s.E - s.T) + h.alpha, double(s.T) + h.beta) - lbeta(h.alpha, h.beta) +
           lbeta(double(s.X - s.T) + h.mu, double(s.M - s.X - s.E + s.T) + h.nu) -
           lbeta(h.mu, h.nu);
}

double binom_const(const MeasurementData& d)
{
    double c = 0;
    for (auto& [k, cnt] : d.overrides())
        c += lbinom(cnt.n, cnt.x);
    return c;
}

} // namespace

double log_likelihood_uniform(const MeasurementData& d, const AdjacencyView& a,
                              const ErrorHyperParams& h)
{
    h.validate();
    auto s = measurement_summaries(d, a);
    return binom_const(d) + uniform_beta_terms(s, h);
}

double log_likelihood_fixed(const MeasurementData& d, const AdjacencyView& a, double p,
                            double q)
{
    auto s = measurement_summaries(d, a);
    double ll = binom_const(d);
    auto mul = [](int64_t k, double logv) {
        if (k == 0)
            return 0.0; // 0 * log 0 = 0
        return double(k) * logv;
    };
    ll += mul(s.T, std::log1p(-p));
    ll += mul(s.E - s.T, safelog(p));
    ll += mul(s.X - s.T, safelog(q));
    ll += mul(s.M - s.X - s.E + s.T, std::log1p(-q));
    return ll;
}

double log_likelihood_hetero(const MeasurementData& d, const AdjacencyView& a,
                             const ErrorHyperParams& h)
{
    h.validate();
    HeteroErrorModel m(d, a, h);
    return m.log_value();
}

double log_likelihood_extrinsic(const ExtrinsicUncertainty& q, const AdjacencyView& a)
{
    ExtrinsicErrorModel m(q, a);
    return m.log_value();
}

double mean_uncertainty(const ExtrinsicUncertainty& q)
{
    if (q.node_count() < 2)
        throw DataError("mean_uncertainty: need at least two nodes");
    return q.mean();
}

ErrorRatePosterior error_rate_conditionals_uniform(const MeasurementData& d,
                                                   const AdjacencyView& a,
                                                   const ErrorHyperParams& h)
{
    h.validate();
    auto s = measurement_summaries(d, a);
    ErrorRatePosterior r;
    r.p = {double(s.E - s.T) + h.alpha, double(s.T) + h.beta};
    r.q = {double(s.X - s.T) + h.mu, double(s.M - s.X - s.E + s.T) + h.nu};
    return r;
}

std::pair<double, double> sample_error_rates_uniform(const MeasurementData& d,
                                                     const AdjacencyView& a,
                                                     const ErrorHyperParams& h, Rng& rng)
{
    auto r = error_rate_conditionals_uniform(d, a, h);
    return {rng.beta(r.p.a, r.p.b), rng.beta(r.q.a, r.q.b)};
}

ErrorRatePosterior edge_error_conditionals_hetero(int64_t n, int64_t x, int a_ij,
                                                  const ErrorHyperParams& h)
{
    h.validate();
    if (x < 0 || x > n)
        throw DataError("edge_error_conditionals_hetero: need 0 <= x <= n");
    ErrorRatePosterior r;
    r.p = {double(a_ij * (n - x)) + h.alpha, double(x * a_ij) + h.beta};
    r.q = {double((1 - a_ij) * x) + h.mu, double((1 - a_ij) * (n - x)) + h.nu};
    return r;
}

// ============================================================
// UniformErrorModel
// ============================================================

UniformErrorModel::UniformErrorModel(const MeasurementData& d, const AdjacencyView& a,
                                     const ErrorHyperParams& h)
    : d_(&d), h_(h)
{
    h_.validate();
    s_ = measurement_summaries(d, a);
    log_binom_const_ = binom_const(d);
}

double UniformErrorModel::log_value() const
{
    return log_binom_const_ + uniform_beta_terms(s_, h_);
}

double UniformErrorModel::flip_delta(NodeId i, NodeId j, bool adding) const
{
    auto c = d_->get(i, j);
    int64_t sign = adding ? 1 : -1;
    MeasurementSummaries s2 = s_;
    s2.E += sign * c.n;
    s2.T += sign * c.x;
    return uniform_beta_terms(s2, h_) - uniform_beta_terms(s_, h_);
}

void UniformErrorModel::apply_flip(NodeId i, NodeId j, bool adding)
{
    auto c = d_->get(i, j);
    int64_t sign = adding ? 1 : -1;
    s_.E += sign * c.n;
    s_.T += sign * c.x;
}

// ============================================================
// HeteroErrorModel
// ============================================================

double HeteroErrorModel::edge_term(int64_t n, int64_t x, const ErrorHyperParams& h)
{
    return lbeta(double(n - x) + h.alpha, double(x) + h.beta) - lbeta(h.alpha, h.beta);
}

double HeteroErrorModel::nonedge_term(int64_t n, int64_t x, const ErrorHyperParams& h)
{
    return lbeta(double(x) + h.mu, double(n - x) + h.nu) - lbeta(h.mu, h.nu);
}

HeteroErrorModel::HeteroErrorModel(const MeasurementData& d, const AdjacencyView& a,
                                   const ErrorHyperParams& h)
    : d_(&d), h_(h)
{
    h_.validate();
    if (d.node_count() != a.node_count())
        throw DataError("HeteroErrorModel: mismatched node counts");
    log_binom_const_ = binom_const(d);
    nonedge_default_ = d.pair_total() - int64_t(d.overrides().size());
    for (auto& [k, c] : d.overrides())
    {
        auto [i, j] = pair_nodes(k);
        if (!a.has_edge(i, j))
            ++nonedge_over_hist_[{c.n, c.x}];
    }
    for (PairKey e : a.edges())
    {
        auto c = d.get(e);
        ++edge_hist_[{c.n, c.x}];
        if (!d.overrides().count(e))
            --nonedge_default_;
    }
    value_ = value_from(h_);
}

double HeteroErrorModel::value_from(const ErrorHyperParams& h) const
{
    double v = log_binom_const_;
    for (auto& [k, c] : edge_hist_)
        v += double(c) * edge_term(k.n, k.x, h);
    for (auto& [k, c] : nonedge_over_hist_)
        v += double(c) * nonedge_term(k.n, k.x, h);
    v += double(nonedge_default_) * nonedge_term(d_->default_n(), 0, h);
    return v;
}

double HeteroErrorModel::flip_delta(NodeId i, NodeId j, bool adding) const
{
    auto c = d_->get(i, j);
    double diff = edge_term(c.n, c.x, h_) - nonedge_term(c.n, c.x, h_);
    return adding ? diff : -diff;
}

void HeteroErrorModel::apply_flip(NodeId i, NodeId j, bool adding)
{
    value_ += flip_delta(i, j, adding);
    auto c = d_->get(i, j);
    bool over = d_->overrides().count(pair_key(i, j)) > 0;
    int64_t sign = adding ? 1 : -1;
    edge_hist_[{c.n, c.x}] += sign;
    if (over)
        nonedge_over_hist_[{c.n, c.x}] -= sign;
    else
        nonedge_default_ -= sign;
}

double HeteroErrorModel::hyper_delta(const ErrorHyperParams& nh) const
{
    return value_from(nh) - value_;
}

void HeteroErrorModel::apply_hyper(const ErrorHyperParams& nh)
{
    h_ = nh;
    value_ = value_from(h_);
}

// ============================================================
// ExtrinsicErrorModel
// ============================================================

double ExtrinsicErrorModel::pair_term(double q, bool edge) const
{
    if (edge)
        return std::log(q / qbar_); // -inf at q == 0
    return std::log((1 - q) / (1 - qbar_));
}

ExtrinsicErrorModel::ExtrinsicErrorModel(const ExtrinsicUncertainty& q, const AdjacencyView& a)
    : q_(&q)
{
    if (q.node_count() != a.node_count())
        throw DataError("ExtrinsicErrorModel: mismatched node counts");
    qbar_ = q.mean();
    if (!(qbar_ > 0) || !(qbar_ < 1))
        throw DataError("ExtrinsicErrorModel: mean uncertainty must lie strictly in (0,1)");

    // start from the all-nonedge configuration
    int64_t defaults = q.pair_total_unlisted();
    double dq = q.default_q();
    if (dq < 1)
        finite_ += double(defaults) * pair_term(dq, false);
    else
        violations_ += defaults;
    for (auto& [k, qv] : q.overrides())
    {
        if (qv < 1)
            finite_ += pair_term(qv, false);
        else
            ++violations_;
    }
    for (PairKey e : a.edges())
    {
        auto [i, j] = pair_nodes(e);
        double qv = q.get(i, j);
        if (qv < 1)
            finite_ -= pair_term(qv, false);
        else
            --violations_;
        if (qv > 0)
            finite_ += pair_term(qv, true);
        else
            ++violations_;
    }
}

double ExtrinsicErrorModel::flip_delta(NodeId i, NodeId j, bool adding) const
{
    double qv = q_->get(i, j);
    if (adding && qv <= 0)
        return neg_inf;
    if (!adding && qv >= 1)
        return neg_inf;
    if (violations_ > 0)
        throw NumericalError("ExtrinsicErrorModel: flip from an infeasible state");
    if (qv >= 1) // removing the edge is forbidden above; adding fixes nothing
        return adding ? 0.0 : neg_inf;
    double diff = pair_term(qv, true) - pair_term(qv, false);
    return adding ? diff : -diff;
}

void ExtrinsicErrorModel::apply_flip(NodeId i, NodeId j, bool adding)
{
    double qv = q_->get(i, j);
    int sign = adding ? 1 : -1;
    if (qv <= 0)
        violations_ += sign;
    else if (qv >= 1)
        violations_ -= sign;
    else
        finite_ += sign * (pair_term(qv, true) - pair_term(qv, false));
}

} // namespace netrecon
