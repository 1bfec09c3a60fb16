#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "netrecon/data.hpp"
#include "netrecon/graph.hpp"

namespace netrecon {

// Plain-text formats. Measurement files: `nodes N`, `default_n k`, then
// `i j n x` lines; `#` starts a comment. Q files: `nodes N`, `default_q v`,
// `i j q` lines. Graph files: `nodes N`, `i j` lines. Node ids are 0-based.

MeasurementData parse_measurement_file(const std::string& path);
MeasurementData parse_measurement(std::istream& in, const std::string& name = "<stream>");
void write_measurement_file(const std::string& path, const MeasurementData& d);

ExtrinsicUncertainty parse_q_file(const std::string& path);
ExtrinsicUncertainty parse_q(std::istream& in, const std::string& name = "<stream>");
void write_q_file(const std::string& path, const ExtrinsicUncertainty& q);

AdjacencyView parse_graph_file(const std::string& path);
AdjacencyView parse_graph(std::istream& in, const std::string& name = "<stream>");
void write_graph_file(const std::string& path, const AdjacencyView& a);

// optional sidecar mapping node index -> display label, `idx name` lines
std::vector<std::string> parse_labels_file(const std::string& path, NodeId node_count);

// ---- posterior sample logs (for later re-reduction) ----
struct SampleRecord
{
    std::vector<PairKey> edges;
    std::vector<int32_t> partition;
    bool has_rates = false;
    double p_a = 0, p_b = 0, q_a = 0, q_b = 0;
};

class SampleWriter
{
public:
    SampleWriter(const std::string& path, NodeId node_count);
    ~SampleWriter();
    void write(const SampleRecord& rec);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

std::vector<SampleRecord> parse_samples_file(const std::string& path, NodeId* node_count);

} // namespace netrecon
