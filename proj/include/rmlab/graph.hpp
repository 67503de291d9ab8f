#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rmlab {

enum class GraphKind { CirculantBand, Block, Complete, ShiftUnion, Explicit };
enum class SelfLoops { All, None };

// Declarative description of a d-regular directed or undirected graph
// support. Self loops are all-or-none; multiple edges are excluded.
struct GraphSpec {
    GraphKind kind = GraphKind::Complete;
    int n = 0;
    SelfLoops self_loops = SelfLoops::All;
    bool directed = false;

    int halfwidth = 0;                             // circulant-band
    int blocksize = 0;                             // block
    std::vector<int> shifts;                       // shift-union, values in [1, n-1]
    std::vector<std::pair<int, int>> edges;        // explicit, directed pairs
};

// A validated graph. Edge membership and iteration are structural for the
// deterministic kinds; only the explicit kind materializes adjacency.
class Graph {
public:
    explicit Graph(GraphSpec spec);

    int n() const { return spec_.n; }
    // Common in/out degree, counting a self loop once.
    int degree() const { return degree_; }
    bool has_loops() const { return spec_.self_loops == SelfLoops::All; }
    bool directed() const { return spec_.directed; }
    const GraphSpec& spec() const { return spec_; }

    bool has_edge(int x, int y) const;

    // Visits every directed edge (x, y) with x != y exactly once.
    void for_each_offdiag_edge(const std::function<void(int, int)>& f) const;

    // Visits each unordered off-diagonal pair {x, y} once, as (min, max).
    // Requires an undirected (symmetric) edge set.
    void for_each_pair(const std::function<void(int, int)>& f) const;

    std::size_t offdiag_edge_count() const;

private:
    void validate();
    void validate_explicit();

    GraphSpec spec_;
    int degree_ = 0;
    // explicit kind only: sorted out-neighbor lists
    std::vector<std::vector<int>> adj_;
};

Graph build_graph(const GraphSpec& spec);

}  // namespace rmlab
