#include "netrecon/io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <memory>
#include <sstream>
#include <unordered_map>

namespace netrecon {

namespace {

[[noreturn]] void fail(const std::string& name, int64_t line, const std::string& what)
{
    throw DataError(name + ":" + std::to_string(line) + ": " + what);
}

struct LineReader
{
    std::istream& in;
    std::string name;
    int64_t lineno = 0;

    // returns false at EOF; strips comments and blank lines
    bool next(std::istringstream& fields)
    {
        std::string line;
        while (std::getline(in, line))
        {
            ++lineno;
            auto hash = line.find('#');
            if (hash != std::string::npos)
                line.erase(hash);
            bool blank = true;
            for (char c : line)
                if (!std::isspace(static_cast<unsigned char>(c)))
                    blank = false;
            if (blank)
                continue;
            fields = std::istringstream(line);
            return true;
        }
        return false;
    }
};

std::ifstream open_input(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open file: " + path);
    return in;
}

std::ofstream open_output(const std::string& path)
{
    std::ofstream out(path);
    if (!out)
        throw DataError("cannot open file for writing: " + path);
    return out;
}

NodeId read_header_nodes(LineReader& r, std::istringstream& fields)
{
    std::string kw;
    if (!r.next(fields) || !(fields >> kw) || kw != "nodes")
        fail(r.name, r.lineno, "expected 'nodes N' header");
    int64_t n;
    if (!(fields >> n) || n <= 0)
        fail(r.name, r.lineno, "invalid node count");
    return NodeId(n);
}

void check_node(LineReader& r, NodeId v, NodeId n)
{
    if (v < 0 || v >= n)
        fail(r.name, r.lineno, "unknown node id " + std::to_string(v));
}

} // namespace

// ============================================================
// measurement files
// ============================================================

MeasurementData parse_measurement(std::istream& in, const std::string& name)
{
    LineReader r{in, name};
    std::istringstream fields;
    NodeId n = read_header_nodes(r, fields);

    if (!r.next(fields))
        throw DataError(name + ": missing 'default_n' header");
    std::string kw;
    int64_t def;
    if (!(fields >> kw) || kw != "default_n" || !(fields >> def) || def < 0)
        fail(r.name, r.lineno, "expected 'default_n k' header");

    MeasurementData d(n, def);
    std::unordered_map<PairKey, int64_t> seen;
    while (r.next(fields))
    {
        int64_t i, j, nij, xij;
        if (!(fields >> i >> j >> nij >> xij))
            fail(r.name, r.lineno, "expected 'i j n x'");
        check_node(r, NodeId(i), n);
        check_node(r, NodeId(j), n);
        if (i == j)
            fail(r.name, r.lineno, "self-pairs are not measured");
        if (nij < 0 || xij < 0)
            fail(r.name, r.lineno, "negative count");
        if (xij > nij)
            fail(r.name, r.lineno, "x exceeds n");
        auto [it, fresh] = seen.try_emplace(pair_key(NodeId(i), NodeId(j)), r.lineno);
        if (!fresh)
            fail(r.name, r.lineno,
                 "duplicate pair (also on line " + std::to_string(it->second) + ")");
        d.set(NodeId(i), NodeId(j), nij, xij);
    }
    return d;
}

MeasurementData parse_measurement_file(const std::string& path)
{
    auto in = open_input(path);
    return parse_measurement(in, path);
}

void write_measurement_file(const std::string& path, const MeasurementData& d)
{
    auto out = open_output(path);
    out << "nodes " << d.node_count() << "\n";
    out << "default_n " << d.default_n() << "\n";
    std::vector<PairKey> keys;
    for (auto& [k, c] : d.overrides())
        keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    for (PairKey k : keys)
    {
        auto [i, j] = pair_nodes(k);
        auto c = d.get(k);
        out << i << " " << j << " " << c.n << " " << c.x << "\n";
    }
}

// ============================================================
// extrinsic uncertainty files
// ============================================================

ExtrinsicUncertainty parse_q(std::istream& in, const std::string& name)
{
    LineReader r{in, name};
    std::istringstream fields;
    NodeId n = read_header_nodes(r, fields);

    if (!r.next(fields))
        throw DataError(name + ": missing 'default_q' header");
    std::string kw;
    double def;
    if (!(fields >> kw) || kw != "default_q" || !(fields >> def))
        fail(r.name, r.lineno, "expected 'default_q v' header");
    if (def < 0 || def > 1)
        fail(r.name, r.lineno, "default Q outside [0,1]");

    ExtrinsicUncertainty q(n, def);
    std::unordered_map<PairKey, int64_t> seen;
    while (r.next(fields))
    {
        int64_t i, j;
        double v;
        if (!(fields >> i >> j >> v))
            fail(r.name, r.lineno, "expected 'i j Q'");
        check_node(r, NodeId(i), n);
        check_node(r, NodeId(j), n);
        if (i == j)
            fail(r.name, r.lineno, "self-pairs are not measured");
        if (v < 0 || v > 1)
            fail(r.name, r.lineno, "Q outside [0,1]");
        auto [it, fresh] = seen.try_emplace(pair_key(NodeId(i), NodeId(j)), r.lineno);
        if (!fresh)
            fail(r.name, r.lineno,
                 "duplicate pair (also on line " + std::to_string(it->second) + ")");
        q.set(NodeId(i), NodeId(j), v);
    }
    return q;
}

ExtrinsicUncertainty parse_q_file(const std::string& path)
{
    auto in = open_input(path);
    return parse_q(in, path);
}

void write_q_file(const std::string& path, const ExtrinsicUncertainty& q)
{
    auto out = open_output(path);
    out << "nodes " << q.node_count() << "\n";
    out << "default_q " << q.default_q() << "\n";
    std::vector<PairKey> keys;
    for (auto& [k, v] : q.overrides())
        keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    out.precision(17);
    for (PairKey k : keys)
    {
        auto [i, j] = pair_nodes(k);
        out << i << " " << j << " " << q.overrides().at(k) << "\n";
    }
}

// ============================================================
// graph files
// ============================================================

AdjacencyView parse_graph(std::istream& in, const std::string& name)
{
    LineReader r{in, name};
    std::istringstream fields;
    NodeId n = read_header_nodes(r, fields);
    AdjacencyView a(n);
    while (r.next(fields))
    {
        int64_t i, j;
        if (!(fields >> i >> j))
            fail(r.name, r.lineno, "expected 'i j'");
        check_node(r, NodeId(i), n);
        check_node(r, NodeId(j), n);
        if (i == j)
            fail(r.name, r.lineno, "self-loops not allowed");
        if (a.has_edge(NodeId(i), NodeId(j)))
            fail(r.name, r.lineno, "duplicate edge");
        a.add_edge(NodeId(i), NodeId(j));
    }
    return a;
}

AdjacencyView parse_graph_file(const std::string& path)
{
    auto in = open_input(path);
    return parse_graph(in, path);
}

void write_graph_file(const std::string& path, const AdjacencyView& a)
{
    auto out = open_output(path);
    out << "nodes " << a.node_count() << "\n";
    std::vector<PairKey> keys(a.edges().begin(), a.edges().end());
    std::sort(keys.begin(), keys.end());
    for (PairKey k : keys)
    {
        auto [i, j] = pair_nodes(k);
        out << i << " " << j << "\n";
    }
}

std::vector<std::string> parse_labels_file(const std::string& path, NodeId node_count)
{
    auto in = open_input(path);
    LineReader r{in, path};
    std::istringstream fields;
    std::vector<std::string> labels{size_t(node_count), std::string()};
    while (r.next(fields))
    {
        int64_t i;
        std::string name;
        if (!(fields >> i >> name))
            fail(r.name, r.lineno, "expected 'idx label'");
        check_node(r, NodeId(i), node_count);
        labels[size_t(i)] = name;
    }
    return labels;
}

// ============================================================
// sample logs
// ============================================================

struct SampleWriter::Impl
{
    std::ofstream out;
};

SampleWriter::SampleWriter(const std::string& path, NodeId node_count)
    : impl_(new Impl{open_output(path)})
{
    impl_->out << "nodes " << node_count << "\n";
    impl_->out.precision(17);
}

SampleWriter::~SampleWriter() = default;

void SampleWriter::write(const SampleRecord& rec)
{
    auto& out = impl_->out;
    out << "sample\n";
    out << "edges";
    std::vector<PairKey> keys(rec.edges);
    std::sort(keys.begin(), keys.end());
    for (PairKey k : keys)
    {
        auto [i, j] = pair_nodes(k);
        out << " " << i << "-" << j;
    }
    out << "\n";
    out << "partition";
    for (int32_t g : rec.partition)
        out << " " << g;
    out << "\n";
    if (rec.has_rates)
        out << "rates " << rec.p_a << " " << rec.p_b << " " << rec.q_a << " " << rec.q_b
            << "\n";
    out << "end\n";
}

std::vector<SampleRecord> parse_samples_file(const std::string& path, NodeId* node_count)
{
    auto in = open_input(path);
    LineReader r{in, path};
    std::istringstream fields;
    NodeId n = read_header_nodes(r, fields);
    if (node_count)
        *node_count = n;

    std::vector<SampleRecord> records;
    while (r.next(fields))
    {
        std::string kw;
        fields >> kw;
        if (kw != "sample")
            fail(r.name, r.lineno, "expected 'sample'");
        SampleRecord rec;
        bool closed = false;
        while (r.next(fields))
        {
            fields >> kw;
            if (kw == "end")
            {
                closed = true;
                break;
            }
            if (kw == "edges")
            {
                std::string tok;
                while (fields >> tok)
                {
                    auto dash = tok.find('-');
                    if (dash == std::string::npos)
                        fail(r.name, r.lineno, "bad edge token '" + tok + "'");
                    NodeId i = NodeId(std::stol(tok.substr(0, dash)));
                    NodeId j = NodeId(std::stol(tok.substr(dash + 1)));
                    check_node(r, i, n);
                    check_node(r, j, n);
                    rec.edges.push_back(pair_key(i, j));
                }
            }
            else if (kw == "partition")
            {
                int32_t g;
                while (fields >> g)
                    rec.partition.push_back(g);
            }
            else if (kw == "rates")
            {
                if (!(fields >> rec.p_a >> rec.p_b >> rec.q_a >> rec.q_b))
                    fail(r.name, r.lineno, "bad rates line");
                rec.has_rates = true;
            }
            else
                fail(r.name, r.lineno, "unknown keyword '" + kw + "'");
        }
        if (!closed)
            fail(r.name, r.lineno, "unterminated sample block");
        records.push_back(std::move(rec));
    }
    return records;
}

} // namespace netrecon
