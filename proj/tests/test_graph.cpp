#include <doctest.h>

#include <set>

#include "rmlab/graph.hpp"

using namespace rmlab;

namespace {

std::set<std::pair<int, int>> collect_edges(const Graph& g) {
    std::set<std::pair<int, int>> edges;
    g.for_each_offdiag_edge([&](int x, int y) {
        auto [it, fresh] = edges.emplace(x, y);
        REQUIRE(fresh);  // no duplicate visits
    });
    return edges;
}

}  // namespace

TEST_CASE("circulant band n=5 w=1 with loops: every vertex has degree 3") {
    GraphSpec spec{GraphKind::CirculantBand, 5, SelfLoops::All, false};
    spec.halfwidth = 1;
    Graph g = build_graph(spec);
    CHECK(g.degree() == 3);
    auto edges = collect_edges(g);
    CHECK(edges.size() == 10);  // 5 vertices * 2 neighbors
    for (int x = 0; x < 5; ++x) {
        CHECK(g.has_edge(x, x));
        CHECK(g.has_edge(x, (x + 1) % 5));
        CHECK(g.has_edge(x, (x + 4) % 5));
        CHECK_FALSE(g.has_edge(x, (x + 2) % 5));
    }
}

TEST_CASE("block n=6 s=3 with loops: two complete 3-blocks, degree 3") {
    GraphSpec spec{GraphKind::Block, 6, SelfLoops::All, false};
    spec.blocksize = 3;
    Graph g = build_graph(spec);
    CHECK(g.degree() == 3);
    CHECK(g.has_edge(0, 2));
    CHECK(g.has_edge(4, 5));
    CHECK_FALSE(g.has_edge(2, 3));
    CHECK(collect_edges(g).size() == 12);
}

TEST_CASE("complete n=10 with loops recovers the dense model, degree 10") {
    GraphSpec spec{GraphKind::Complete, 10, SelfLoops::All, false};
    Graph g = build_graph(spec);
    CHECK(g.degree() == 10);
    CHECK(collect_edges(g).size() == 90);
}

TEST_CASE("circulant band n=8 w=1: unordered pairs enumerated once") {
    GraphSpec spec{GraphKind::CirculantBand, 8, SelfLoops::None, false};
    spec.halfwidth = 1;
    Graph g = build_graph(spec);
    CHECK(g.degree() == 2);
    std::set<std::pair<int, int>> pairs;
    g.for_each_pair([&](int x, int y) {
        REQUIRE(x < y);
        auto [it, fresh] = pairs.emplace(x, y);
        REQUIRE(fresh);
    });
    CHECK(pairs.size() == 8);
}

TEST_CASE("shift union: degree counts shifts; undirected needs negation closure") {
    GraphSpec spec{GraphKind::ShiftUnion, 10, SelfLoops::None, true};
    spec.shifts = {1, 3};
    CHECK(build_graph(spec).degree() == 2);

    spec.directed = false;
    CHECK_THROWS_AS(build_graph(spec), std::invalid_argument);
    spec.shifts = {1, 9};
    Graph g = build_graph(spec);
    CHECK(g.degree() == 2);
    std::set<std::pair<int, int>> pairs;
    g.for_each_pair([&](int x, int y) { pairs.emplace(x, y); });
    CHECK(pairs.size() == 10);
}

TEST_CASE("shift union with shift n/2 visits each pair once") {
    GraphSpec spec{GraphKind::ShiftUnion, 6, SelfLoops::None, false};
    spec.shifts = {3};
    Graph g = build_graph(spec);
    int count = 0;
    g.for_each_pair([&](int, int) { ++count; });
    CHECK(count == 3);
    CHECK(g.degree() == 1);
}

TEST_CASE("explicit list: rejection names the offending vertex") {
    GraphSpec spec{GraphKind::Explicit, 3, SelfLoops::None, true};
    spec.edges = {{0, 1}, {1, 2}, {2, 0}, {0, 2}};
    try {
        build_graph(spec);
        FAIL("expected rejection");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("vertex") != std::string::npos);
    }

    spec.edges = {{0, 1}, {1, 2}, {2, 0}};
    Graph g = build_graph(spec);
    CHECK(g.degree() == 1);
    CHECK(g.has_edge(0, 1));
    CHECK_FALSE(g.has_edge(1, 0));
}

TEST_CASE("explicit list: mixed self-loop pattern rejected (all-or-none)") {
    GraphSpec spec{GraphKind::Explicit, 2, SelfLoops::All, true};
    spec.edges = {{0, 0}, {0, 1}, {1, 0}};  // loop missing at vertex 1
    CHECK_THROWS_AS(build_graph(spec), std::invalid_argument);

    GraphSpec none{GraphKind::Explicit, 2, SelfLoops::None, true};
    none.edges = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    CHECK_THROWS_AS(build_graph(none), std::invalid_argument);
}

TEST_CASE("explicit undirected requires symmetric edges; multi-edges rejected") {
    GraphSpec spec{GraphKind::Explicit, 3, SelfLoops::None, false};
    spec.edges = {{0, 1}, {1, 2}, {2, 0}};
    CHECK_THROWS_AS(build_graph(spec), std::invalid_argument);

    GraphSpec dup{GraphKind::Explicit, 2, SelfLoops::None, true};
    dup.edges = {{0, 1}, {0, 1}, {1, 0}};
    CHECK_THROWS_AS(build_graph(dup), std::invalid_argument);
}

TEST_CASE("parameter consistency preconditions") {
    GraphSpec band{GraphKind::CirculantBand, 5, SelfLoops::All, false};
    band.halfwidth = 3;  // 2w+1 > n
    CHECK_THROWS_AS(build_graph(band), std::invalid_argument);

    GraphSpec block{GraphKind::Block, 7, SelfLoops::All, false};
    block.blocksize = 3;  // does not divide n
    CHECK_THROWS_AS(build_graph(block), std::invalid_argument);
}
