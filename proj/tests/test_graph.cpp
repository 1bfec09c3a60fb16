#include "doctest.h"

#include "netrecon/graph.hpp"
#include "netrecon/likelihood.hpp"

using namespace netrecon;

namespace {

AdjacencyView random_graph(NodeId n, double density, Rng& rng)
{
    AdjacencyView a(n);
    for (NodeId i = 0; i < n; ++i)
        for (NodeId j = i + 1; j < n; ++j)
            if (rng.u01() < density)
                a.add_edge(i, j);
    return a;
}

} // namespace

TEST_SUITE_BEGIN("graph");

TEST_CASE("collapse on positive multiplicities")
{
    LatentMultigraph g(3);
    g.add(1, 2, 3);
    auto a = collapse_multigraph(g);
    CHECK(a.edge_count() == 1);
    CHECK(a.has_edge(1, 2));
}

TEST_CASE("self-loops never collapse to edges")
{
    LatentMultigraph g(2);
    g.add(1, 1, 2);
    auto a = collapse_multigraph(g);
    CHECK(a.edge_count() == 0);
}

TEST_CASE("all-zero multigraph collapses to the empty graph")
{
    LatentMultigraph g(4);
    CHECK(collapse_multigraph(g).edge_count() == 0);
}

TEST_CASE("collapse is idempotent")
{
    Rng rng(7);
    LatentMultigraph g(6);
    for (int t = 0; t < 40; ++t)
        g.add(NodeId(rng.below(6)), NodeId(rng.below(6)), 1);
    auto a = collapse_multigraph(g);
    LatentMultigraph g2(6);
    for (PairKey e : a.edges())
    {
        auto [i, j] = pair_nodes(e);
        g2.add(i, j, 1);
    }
    auto a2 = collapse_multigraph(g2);
    CHECK(a2.edges() == a.edges());
}

TEST_CASE("degree cache stays consistent under random increments")
{
    Rng rng(3);
    LatentMultigraph g(5);
    for (int t = 0; t < 500; ++t)
    {
        NodeId i = NodeId(rng.below(5)), j = NodeId(rng.below(5));
        if (g.multiplicity(i, j) > 0 && rng.coin())
            g.add(i, j, -1);
        else
            g.add(i, j, 1);
        REQUIRE(g.degrees_consistent());
    }
}

TEST_CASE("hamming distance basics")
{
    AdjacencyView a(4), b(4);
    a.add_edge(1, 2);
    CHECK(hamming_distance(a, a) == 0);
    CHECK(hamming_distance(a, b) == 1);
    b.add_edge(0, 3);
    CHECK(hamming_distance(a, b) == 2);
    AdjacencyView c(5);
    CHECK_THROWS_AS((void)hamming_distance(a, c), DataError);
}

TEST_CASE("hamming distance equals the false negative + false positive count")
{
    // binary measurement x with n_ij = 1: d(A, x) = (E - T) + (X - T)
    Rng rng(11);
    for (int t = 0; t < 20; ++t)
    {
        auto a = random_graph(5, 0.4, rng);
        auto x = random_graph(5, 0.4, rng);
        MeasurementData d(5, 1);
        for (PairKey e : x.edges())
        {
            auto [i, j] = pair_nodes(e);
            d.set(i, j, 1, 1);
        }
        auto s = measurement_summaries(d, a);
        CHECK(hamming_distance(a, x) == (s.E - s.T) + (s.X - s.T));
    }
}

TEST_CASE("hamming distance is a metric on random triples")
{
    Rng rng(23);
    for (int t = 0; t < 50; ++t)
    {
        auto a = random_graph(6, 0.3, rng);
        auto b = random_graph(6, 0.3, rng);
        auto c = random_graph(6, 0.3, rng);
        int64_t ab = hamming_distance(a, b);
        int64_t ba = hamming_distance(b, a);
        CHECK(ab == ba);
        CHECK(ab >= 0);
        CHECK(hamming_distance(a, c) <= ab + hamming_distance(b, c));
        if (ab == 0)
            CHECK(a.edges() == b.edges());
    }
}

TEST_CASE("similarity values")
{
    AdjacencyView a(4), b(4);
    a.add_edge(0, 1);
    CHECK(similarity(a, a) == 1.0);

    b.add_edge(2, 3); // edge-disjoint
    CHECK(similarity(a, b) == 0.0);

    AdjacencyView c(4);
    c.add_edge(0, 1);
    c.add_edge(2, 3);
    CHECK(similarity(a, c) == doctest::Approx(2.0 / 3));

    AdjacencyView e1(4), e2(4);
    CHECK(similarity(e1, e2) == 1.0); // empty graphs are identical
}

TEST_CASE("similarity is symmetric and within [0,1]")
{
    Rng rng(5);
    for (int t = 0; t < 100; ++t)
    {
        auto a = random_graph(6, rng.u01(), rng);
        auto b = random_graph(6, rng.u01(), rng);
        double s1 = similarity(a, b), s2 = similarity(b, a);
        CHECK(s1 == s2);
        CHECK(s1 >= 0.0);
        CHECK(s1 <= 1.0);
    }
}

TEST_SUITE_END();
