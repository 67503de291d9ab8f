#include "rmlab/graph.hpp"

#include <algorithm>
#include <set>

namespace rmlab {

namespace {

int cyclic_dist(int x, int y, int n) {
    int d = std::abs(x - y);
    return std::min(d, n - d);
}

}  // namespace

Graph::Graph(GraphSpec spec) : spec_(std::move(spec)) { validate(); }

Graph build_graph(const GraphSpec& spec) { return Graph(spec); }

void Graph::validate() {
    const int n = spec_.n;
    if (n < 1) throw std::invalid_argument("graph: vertex count must be positive");
    const int loop = has_loops() ? 1 : 0;

    switch (spec_.kind) {
        case GraphKind::CirculantBand: {
            const int w = spec_.halfwidth;
            if (w < 1) throw std::invalid_argument("circulant-band: halfwidth must be >= 1");
            if (2 * w + 1 > n)
                throw std::invalid_argument("circulant-band: need 2w+1 <= n, got w=" +
                                            std::to_string(w) + ", n=" + std::to_string(n));
            degree_ = 2 * w + loop;
            break;
        }
        case GraphKind::Block: {
            const int s = spec_.blocksize;
            if (s < 1) throw std::invalid_argument("block: blocksize must be >= 1");
            if (n % s != 0)
                throw std::invalid_argument("block: blocksize " + std::to_string(s) +
                                            " does not divide n=" + std::to_string(n));
            if (s == 1 && !has_loops())
                throw std::invalid_argument("block: blocksize 1 without self loops is empty");
            degree_ = s - 1 + loop;
            break;
        }
        case GraphKind::Complete:
            degree_ = n - 1 + loop;
            break;
        case GraphKind::ShiftUnion: {
            std::set<int> seen;
            for (int s : spec_.shifts) {
                if (s < 1 || s >= n)
                    throw std::invalid_argument("shift-union: shift " + std::to_string(s) +
                                                " outside [1, n-1]");
                if (!seen.insert(s).second)
                    throw std::invalid_argument("shift-union: duplicate shift " +
                                                std::to_string(s));
            }
            if (!spec_.directed) {
                for (int s : spec_.shifts)
                    if (!seen.count((n - s) % n))
                        throw std::invalid_argument(
                            "shift-union: undirected graph requires shift set closed under "
                            "negation mod n; missing " +
                            std::to_string(n - s));
            }
            degree_ = static_cast<int>(spec_.shifts.size()) + loop;
            break;
        }
        case GraphKind::Explicit:
            validate_explicit();
            break;
    }
    if (degree_ < 1) throw std::invalid_argument("graph: degree must be >= 1");
}

void Graph::validate_explicit() {
    const int n = spec_.n;
    adj_.assign(n, {});
    std::vector<int> indeg(n, 0);
    std::vector<bool> has_loop(n, false);
    std::set<std::pair<int, int>> seen;
    for (auto [x, y] : spec_.edges) {
        if (x < 0 || x >= n || y < 0 || y >= n)
            throw std::invalid_argument("explicit: vertex index out of range");
        if (!seen.insert({x, y}).second)
            throw std::invalid_argument("explicit: multiple edge (" + std::to_string(x) + "," +
                                        std::to_string(y) + ")");
        if (x == y) {
            has_loop[x] = true;
            if (spec_.self_loops == SelfLoops::None)
                throw std::invalid_argument("explicit: self loop at vertex " + std::to_string(x) +
                                            " but self_loops=none");
        }
        adj_[x].push_back(y);
        indeg[y] += 1;
    }
    if (spec_.self_loops == SelfLoops::All)
        for (int x = 0; x < n; ++x)
            if (!has_loop[x])
                throw std::invalid_argument("explicit: self_loops=all but vertex " +
                                            std::to_string(x) + " has no loop");
    const int d = static_cast<int>(adj_[0].size());
    for (int x = 0; x < n; ++x) {
        if (static_cast<int>(adj_[x].size()) != d)
            throw std::invalid_argument("explicit: vertex " + std::to_string(x) +
                                        " has out-degree " + std::to_string(adj_[x].size()) +
                                        ", expected " + std::to_string(d));
        if (indeg[x] != d)
            throw std::invalid_argument("explicit: vertex " + std::to_string(x) +
                                        " has in-degree " + std::to_string(indeg[x]) +
                                        ", expected " + std::to_string(d));
    }
    if (!spec_.directed)
        for (auto [x, y] : spec_.edges)
            if (!seen.count({y, x}))
                throw std::invalid_argument("explicit: undirected graph but edge (" +
                                            std::to_string(x) + "," + std::to_string(y) +
                                            ") lacks its reverse");
    for (auto& a : adj_) std::sort(a.begin(), a.end());
    degree_ = d;
}

bool Graph::has_edge(int x, int y) const {
    const int n = spec_.n;
    if (x < 0 || x >= n || y < 0 || y >= n) return false;
    if (x == y) return has_loops();
    switch (spec_.kind) {
        case GraphKind::CirculantBand:
            return cyclic_dist(x, y, n) <= spec_.halfwidth;
        case GraphKind::Block:
            return x / spec_.blocksize == y / spec_.blocksize;
        case GraphKind::Complete:
            return true;
        case GraphKind::ShiftUnion: {
            int s = ((y - x) % n + n) % n;
            return std::find(spec_.shifts.begin(), spec_.shifts.end(), s) != spec_.shifts.end();
        }
        case GraphKind::Explicit:
            return std::binary_search(adj_[x].begin(), adj_[x].end(), y);
    }
    return false;
}

void Graph::for_each_offdiag_edge(const std::function<void(int, int)>& f) const {
    const int n = spec_.n;
    switch (spec_.kind) {
        case GraphKind::CirculantBand:
            for (int x = 0; x < n; ++x)
                for (int j = 1; j <= spec_.halfwidth; ++j) {
                    f(x, (x + j) % n);
                    f((x + j) % n, x);
                }
            break;
        case GraphKind::Block: {
            const int s = spec_.blocksize;
            for (int b = 0; b < n / s; ++b)
                for (int i = 0; i < s; ++i)
                    for (int j = 0; j < s; ++j)
                        if (i != j) f(b * s + i, b * s + j);
            break;
        }
        case GraphKind::Complete:
            for (int x = 0; x < n; ++x)
                for (int y = 0; y < n; ++y)
                    if (x != y) f(x, y);
            break;
        case GraphKind::ShiftUnion:
            for (int s : spec_.shifts)
                for (int x = 0; x < n; ++x) f(x, (x + s) % n);
            break;
        case GraphKind::Explicit:
            for (auto [x, y] : spec_.edges)
                if (x != y) f(x, y);
            break;
    }
}

void Graph::for_each_pair(const std::function<void(int, int)>& f) const {
    const int n = spec_.n;
    switch (spec_.kind) {
        case GraphKind::CirculantBand:
            // 2w+1 <= n guarantees each unordered pair appears for exactly
            // one (x, j) with j in [1, w].
            for (int x = 0; x < n; ++x)
                for (int j = 1; j <= spec_.halfwidth; ++j) {
                    int y = (x + j) % n;
                    f(std::min(x, y), std::max(x, y));
                }
            break;
        case GraphKind::Block: {
            const int s = spec_.blocksize;
            for (int b = 0; b < n / s; ++b)
                for (int i = 0; i < s; ++i)
                    for (int j = i + 1; j < s; ++j) f(b * s + i, b * s + j);
            break;
        }
        case GraphKind::Complete:
            for (int x = 0; x < n; ++x)
                for (int y = x + 1; y < n; ++y) f(x, y);
            break;
        case GraphKind::ShiftUnion:
            for (int s : spec_.shifts) {
                if (2 * s > n) continue;  // partner shift n-s covers these pairs
                for (int x = 0; x < n; ++x) {
                    if (2 * s == n && x >= n / 2) continue;
                    int y = (x + s) % n;
                    f(std::min(x, y), std::max(x, y));
                }
            }
            break;
        case GraphKind::Explicit:
            for (auto [x, y] : spec_.edges)
                if (x < y) f(x, y);
            break;
    }
}

std::size_t Graph::offdiag_edge_count() const {
    std::size_t c = 0;
    for_each_offdiag_edge([&](int, int) { ++c; });
    return c;
}

}  // namespace rmlab
