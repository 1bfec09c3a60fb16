#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <utility>

namespace netrecon {

using NodeId = int32_t;

// Unordered node pairs are keyed by (min,max) packed into 64 bits.
using PairKey = uint64_t;

inline PairKey pair_key(NodeId i, NodeId j)
{
    if (i > j)
        std::swap(i, j);
    return (uint64_t(uint32_t(i)) << 32) | uint32_t(j);
}

inline std::pair<NodeId, NodeId> pair_nodes(PairKey k)
{
    return {NodeId(k >> 32), NodeId(k & 0xffffffffu)};
}

inline bool is_self_pair(PairKey k)
{
    return NodeId(k >> 32) == NodeId(k & 0xffffffffu);
}

inline uint64_t splitmix64(uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// One RNG stream per chain: (seed, stream) pairs give independent,
// reproducible generators regardless of thread scheduling.
class Rng
{
public:
    explicit Rng(uint64_t seed, uint64_t stream = 0)
        : gen_(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x51ed2700)))
    {
    }

    uint64_t raw() { return gen_(); }

    double u01() { return (gen_() >> 11) * 0x1.0p-53; }

    // uniform integer in [0, n)
    int64_t below(int64_t n)
    {
        return int64_t(std::uniform_int_distribution<uint64_t>(0, uint64_t(n) - 1)(gen_));
    }

    bool coin() { return (gen_() & 1u) != 0; }

    double normal(double mean = 0.0, double sd = 1.0)
    {
        return std::normal_distribution<double>(mean, sd)(gen_);
    }

    double gamma(double shape)
    {
        return std::gamma_distribution<double>(shape, 1.0)(gen_);
    }

    double beta(double a, double b)
    {
        double x = gamma(a), y = gamma(b);
        if (x + y <= 0)
            return 0.5;
        return x / (x + y);
    }

    int64_t binomial(int64_t n, double p)
    {
        if (n <= 0 || p <= 0)
            return 0;
        if (p >= 1)
            return n;
        return std::binomial_distribution<int64_t>(n, p)(gen_);
    }

    int64_t poisson(double mean)
    {
        if (mean <= 0)
            return 0;
        return std::poisson_distribution<int64_t>(mean)(gen_);
    }

    std::mt19937_64& engine() { return gen_; }

private:
    std::mt19937_64 gen_;
};

struct DataError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

} // namespace netrecon
