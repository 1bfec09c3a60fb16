#pragma once

#include "netrecon/experiments.hpp"

namespace netrecon {

// graph formed by majority vote of the measurements (x/n > 1/2); the
// conventional reading of the data as a single network
AdjacencyView majority_graph(const MeasurementData& d);

struct ReconstructOptions
{
    ChainConfig chain;
    int chains = 1;
    int threads = 0; // 0: one per chain
    CollectorOptions collect;
};

struct ReconstructResult
{
    MarginalAccumulator acc;
    std::vector<ChainDiagnostics> diagnostics;
};

ReconstructResult reconstruct(const MeasurementData& d, const ReconstructOptions& opt);
ReconstructResult reconstruct(const ExtrinsicUncertainty& q, const ReconstructOptions& opt);

} // namespace netrecon
