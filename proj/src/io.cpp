#include "rmlab/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rmlab {

namespace {

const char* kind_name(GraphKind k) {
    switch (k) {
        case GraphKind::CirculantBand: return "circulant-band";
        case GraphKind::Block: return "block";
        case GraphKind::Complete: return "complete";
        case GraphKind::ShiftUnion: return "shift-union";
        case GraphKind::Explicit: return "explicit";
    }
    return "?";
}

GraphKind kind_from_name(const std::string& s) {
    if (s == "circulant-band") return GraphKind::CirculantBand;
    if (s == "block") return GraphKind::Block;
    if (s == "complete") return GraphKind::Complete;
    if (s == "shift-union") return GraphKind::ShiftUnion;
    if (s == "explicit") return GraphKind::Explicit;
    throw std::invalid_argument("unknown graph kind: " + s);
}

const char* family_name(EntryFamily f) {
    switch (f) {
        case EntryFamily::GaussianReal: return "gaussian-real";
        case EntryFamily::GaussianComplex: return "gaussian-complex";
        case EntryFamily::BoundedSymmetric: return "bounded-symmetric";
        case EntryFamily::HeavyP: return "heavy-p";
        case EntryFamily::BernoulliSparse: return "bernoulli-sparse";
    }
    return "?";
}

EntryFamily family_from_name(const std::string& s) {
    if (s == "gaussian-real") return EntryFamily::GaussianReal;
    if (s == "gaussian-complex") return EntryFamily::GaussianComplex;
    if (s == "bounded-symmetric") return EntryFamily::BoundedSymmetric;
    if (s == "heavy-p") return EntryFamily::HeavyP;
    if (s == "bernoulli-sparse") return EntryFamily::BernoulliSparse;
    throw std::invalid_argument("unknown entry family: " + s);
}

void fmt_double(std::ostream& os, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf;
}

}  // namespace

json complex_to_json(cdouble z) { return json::array({z.real(), z.imag()}); }

cdouble complex_from_json(const json& j) {
    if (j.is_number()) return cdouble(j.get<double>(), 0.0);
    if (!j.is_array() || j.size() != 2)
        throw std::invalid_argument("complex value must be [re, im]");
    return cdouble(j[0].get<double>(), j[1].get<double>());
}

void to_json(json& j, const GraphSpec& spec) {
    j = json{{"kind", kind_name(spec.kind)},
             {"n", spec.n},
             {"self_loops", spec.self_loops == SelfLoops::All ? "all" : "none"},
             {"directed", spec.directed}};
    switch (spec.kind) {
        case GraphKind::CirculantBand: j["w"] = spec.halfwidth; break;
        case GraphKind::Block: j["s"] = spec.blocksize; break;
        case GraphKind::ShiftUnion: j["shifts"] = spec.shifts; break;
        case GraphKind::Explicit: {
            json edges = json::array();
            for (auto [x, y] : spec.edges) edges.push_back(json::array({x, y}));
            j["edges"] = edges;
            break;
        }
        case GraphKind::Complete: break;
    }
}

void from_json(const json& j, GraphSpec& spec) {
    spec = GraphSpec{};
    spec.kind = kind_from_name(j.at("kind").get<std::string>());
    spec.n = j.at("n").get<int>();
    std::string loops = j.value("self_loops", "all");
    if (loops != "all" && loops != "none")
        throw std::invalid_argument("self_loops must be \"all\" or \"none\"");
    spec.self_loops = loops == "all" ? SelfLoops::All : SelfLoops::None;
    spec.directed = j.value("directed", false);
    switch (spec.kind) {
        case GraphKind::CirculantBand: spec.halfwidth = j.at("w").get<int>(); break;
        case GraphKind::Block: spec.blocksize = j.at("s").get<int>(); break;
        case GraphKind::ShiftUnion: spec.shifts = j.at("shifts").get<std::vector<int>>(); break;
        case GraphKind::Explicit:
            for (const auto& e : j.at("edges"))
                spec.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
            break;
        case GraphKind::Complete: break;
    }
}

void to_json(json& j, const EntryModel& model) {
    j = json{{"family", family_name(model.family)},
             {"rho", complex_to_json(model.rho)},
             {"diag_D", complex_to_json(model.diag_second_moment)}};
    if (model.family == EntryFamily::BoundedSymmetric ||
        model.family == EntryFamily::BernoulliSparse)
        j["rademacher"] = model.rademacher;
    if (model.family == EntryFamily::HeavyP) j["p"] = model.p;
    if (model.family == EntryFamily::BernoulliSparse) j["sparse_k"] = model.sparse_k;
}

void from_json(const json& j, EntryModel& model) {
    model = EntryModel{};
    model.family = family_from_name(j.at("family").get<std::string>());
    if (j.contains("rho")) model.rho = complex_from_json(j.at("rho"));
    if (j.contains("diag_D")) model.diag_second_moment = complex_from_json(j.at("diag_D"));
    model.rademacher = j.value("rademacher", false);
    if (j.contains("p")) model.p = j.at("p").get<double>();
    if (j.contains("sparse_k")) model.sparse_k = j.at("sparse_k").get<double>();
}

void to_json(json& j, const EnsembleSpec& spec) {
    j = json{{"graph", spec.graph}, {"entries", spec.entries}};
}

void from_json(const json& j, EnsembleSpec& spec) {
    spec.graph = j.at("graph").get<GraphSpec>();
    spec.entries = j.at("entries").get<EntryModel>();
}

void write_matrix_binary(const std::filesystem::path& path, const Eigen::MatrixXcd& m) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    // row-major interleaved (re, im); doubles are little-endian on this target
    for (int r = 0; r < m.rows(); ++r)
        for (int c = 0; c < m.cols(); ++c) {
            double buf[2] = {m(r, c).real(), m(r, c).imag()};
            os.write(reinterpret_cast<const char*>(buf), sizeof(buf));
        }
    if (!os) throw std::runtime_error("write failed: " + path.string());
}

Eigen::MatrixXcd read_matrix_binary(const std::filesystem::path& path, int n) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    Eigen::MatrixXcd m(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            double buf[2];
            is.read(reinterpret_cast<char*>(buf), sizeof(buf));
            if (!is) throw std::runtime_error("short read: " + path.string());
            m(r, c) = cdouble(buf[0], buf[1]);
        }
    return m;
}

void write_sample(const std::filesystem::path& basename, const MatrixSample& sample) {
    write_matrix_binary(basename.string() + ".bin", sample.entries);
    json sidecar{{"n", sample.n},
                 {"degree", sample.degree},
                 {"seed", sample.seed},
                 {"trial_index", sample.trial_index},
                 {"spec", sample.spec},
                 {"entry_scale", sample.entry_scale}};
    if (std::isfinite(sample.truncation_threshold))
        sidecar["truncation_threshold"] = sample.truncation_threshold;
    write_text_file(basename.string() + ".json", sidecar.dump(2) + "\n");
}

MatrixSample read_sample(const std::filesystem::path& basename) {
    json sidecar = json::parse(read_text_file(basename.string() + ".json"));
    MatrixSample s;
    s.n = sidecar.at("n").get<int>();
    s.degree = sidecar.at("degree").get<int>();
    s.seed = sidecar.at("seed").get<std::uint64_t>();
    s.trial_index = sidecar.at("trial_index").get<std::uint64_t>();
    s.spec = sidecar.at("spec").get<EnsembleSpec>();
    s.entry_scale = sidecar.at("entry_scale").get<double>();
    if (sidecar.contains("truncation_threshold"))
        s.truncation_threshold = sidecar.at("truncation_threshold").get<double>();
    s.entries = read_matrix_binary(basename.string() + ".bin", s.n);
    return s;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        os << content;
        if (!os) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::string eigenvalue_csv(int trial, std::span<const cdouble> values) {
    std::ostringstream os;
    os << "trial,re,im\n";
    for (cdouble v : values) {
        os << trial << ",";
        fmt_double(os, v.real());
        os << ",";
        fmt_double(os, v.imag());
        os << "\n";
    }
    return os.str();
}

std::string boundary_csv(const EllipticRegion& region, int points) {
    std::ostringstream os;
    os << "re,im\n";
    for (cdouble p : region.boundary_points(points)) {
        fmt_double(os, p.real());
        os << ",";
        fmt_double(os, p.imag());
        os << "\n";
    }
    return os.str();
}

}  // namespace rmlab
