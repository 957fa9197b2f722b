#include "polysle/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace polysle {

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(os, bits);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& is) {
    const std::uint64_t bits = get_u64(is);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

constexpr char kMagic[8] = {'P', 'S', 'L', 'E', 'P', 'A', 'T', 'H'};

struct Box {
    double xlo = std::numeric_limits<double>::infinity();
    double xhi = -std::numeric_limits<double>::infinity();
    double ylo = std::numeric_limits<double>::infinity();
    double yhi = -std::numeric_limits<double>::infinity();

    void include(double x, double y) {
        xlo = std::min(xlo, x);
        xhi = std::max(xhi, x);
        ylo = std::min(ylo, y);
        yhi = std::max(yhi, y);
    }
    void pad() {
        const double mx = std::max(1e-6, 0.05 * (xhi - xlo));
        const double my = std::max(1e-6, 0.05 * (yhi - ylo));
        xlo -= mx;
        xhi += mx;
        ylo -= my;
        yhi += my;
    }
};

std::string svg_open(const Box& b, int width = 640) {
    const double aspect = (b.yhi - b.ylo) / (b.xhi - b.xlo);
    const int height = std::max(64, static_cast<int>(width * aspect));
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
                  "viewBox=\"0 0 %d %d\">\n",
                  width, height, width, height);
    return buf;
}

// SVG y grows downward; map a point of the upper half-plane into pixels.
struct PixelMap {
    Box b;
    int width = 640;
    double sx() const { return width / (b.xhi - b.xlo); }
    double px(double x) const { return (x - b.xlo) * sx(); }
    double py(double y) const { return (b.yhi - y) * sx(); }
};

std::string svg_axes(const PixelMap& m) {
    std::ostringstream os;
    os << "<line x1=\"" << m.px(m.b.xlo) << "\" y1=\"" << m.py(0.0) << "\" x2=\""
       << m.px(m.b.xhi) << "\" y2=\"" << m.py(0.0)
       << "\" stroke=\"#999\" stroke-width=\"1\"/>\n";
    const double span = m.b.xhi - m.b.xlo;
    const double step = std::pow(10.0, std::floor(std::log10(span / 2.0)));
    for (double x = std::ceil(m.b.xlo / step) * step; x <= m.b.xhi; x += step) {
        os << "<line x1=\"" << m.px(x) << "\" y1=\"" << m.py(0.0) - 3 << "\" x2=\"" << m.px(x)
           << "\" y2=\"" << m.py(0.0) + 3 << "\" stroke=\"#999\" stroke-width=\"1\"/>\n";
    }
    return os.str();
}

} // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_path_csv(const DrivingPath& path, std::ostream& os) {
    os << "t,W";
    for (std::size_t k = 1; k <= path.n(); ++k) os << ",Z_" << k;
    os << ",D,A\n";
    for (const auto& st : path.states) {
        os << format_double(st.t) << ',' << format_double(st.W);
        for (double z : st.Z) os << ',' << format_double(z);
        os << ',' << format_double(st.D) << ',' << format_double(st.A) << '\n';
    }
}

void write_path_binary(const DrivingPath& path, std::ostream& os) {
    os.write(kMagic, 8);
    put_u32(os, 1u); // version
    put_u32(os, static_cast<std::uint32_t>(path.n()));
    put_f64(os, path.dt);
    put_u64(os, path.seed);
    put_f64(os, path.eps_coll);
    os.put(path.sigma ? 1 : 0);
    put_f64(os, path.sigma.value_or(0.0));
    os.put(path.metric_time ? 1 : 0);
    put_u64(os, path.states.size());
    for (const auto& st : path.states) {
        put_f64(os, st.t);
        put_f64(os, st.W);
        for (double z : st.Z) put_f64(os, z);
        put_f64(os, st.D);
        put_f64(os, st.A);
    }
}

DrivingPath read_path_binary(std::istream& is) {
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
        throw ConfigError("path dump: bad magic");
    const std::uint32_t version = get_u32(is);
    if (version != 1u) throw ConfigError("path dump: unsupported version");
    DrivingPath path;
    const std::uint32_t n = get_u32(is);
    path.dt = get_f64(is);
    path.seed = get_u64(is);
    path.eps_coll = get_f64(is);
    const bool has_sigma = is.get() != 0;
    const double sigma = get_f64(is);
    if (has_sigma) path.sigma = sigma;
    path.metric_time = is.get() != 0;
    const std::uint64_t count = get_u64(is);
    path.states.resize(count);
    for (auto& st : path.states) {
        st.t = get_f64(is);
        st.W = get_f64(is);
        st.Z.resize(n);
        for (auto& z : st.Z) z = get_f64(is);
        st.D = get_f64(is);
        st.A = get_f64(is);
    }
    if (!is) throw ConfigError("path dump: truncated");
    return path;
}

void write_trace_csv(const TraceSample& trace, std::ostream& os) {
    os << "t,re,im\n";
    for (std::size_t i = 0; i < trace.points.size(); ++i)
        os << format_double(trace.times[i]) << ',' << format_double(trace.points[i].real())
           << ',' << format_double(trace.points[i].imag()) << '\n';
}

void write_flow_csv(const FlowResult& flow, std::ostream& os) {
    os << "t,re_g,im_g\n";
    for (std::size_t i = 0; i < flow.trajectory.size(); ++i)
        os << format_double(flow.times[i]) << ',' << format_double(flow.trajectory[i].real())
           << ',' << format_double(flow.trajectory[i].imag()) << '\n';
}

std::string trace_svg(const TraceSample& trace) {
    PixelMap m;
    for (const cplx& p : trace.points) m.b.include(p.real(), p.imag());
    m.b.include(0.0, 0.0);
    m.b.pad();
    std::ostringstream os;
    os << svg_open(m.b) << svg_axes(m);
    os << "<polyline fill=\"none\" stroke=\"#1a6\" stroke-width=\"1.5\" points=\"";
    for (const cplx& p : trace.points) os << m.px(p.real()) << ',' << m.py(p.imag()) << ' ';
    os << "\"/>\n</svg>\n";
    return os.str();
}

std::string snapshot_svg(const PolygonSnapshot& snap) {
    PixelMap m;
    bool any = false;
    for (const auto& c : snap.corners)
        if (c.position) {
            m.b.include(c.position->real(), c.position->imag());
            any = true;
        }
    if (!any) m.b.include(0.0, 0.0);
    m.b.include(0.0, 0.0);
    m.b.pad();
    std::ostringstream os;
    os << svg_open(m.b) << svg_axes(m);
    os << (snap.closed ? "<polygon" : "<polyline")
       << " fill=\"none\" stroke=\"#16c\" stroke-width=\"1.5\" points=\"";
    for (const auto& c : snap.corners)
        if (c.position) os << m.px(c.position->real()) << ',' << m.py(c.position->imag()) << ' ';
    os << "\"/>\n";
    for (const auto& c : snap.corners)
        if (c.position)
            os << "<circle cx=\"" << m.px(c.position->real()) << "\" cy=\""
               << m.py(c.position->imag()) << "\" r=\"3\" fill=\"#c22\"/>\n";
    os << "</svg>\n";
    return os.str();
}

nlohmann::json snapshot_json(const PolygonSnapshot& snap) {
    nlohmann::json j;
    j["time"] = snap.time;
    j["closed"] = snap.closed;
    j["corners"] = nlohmann::json::array();
    for (const auto& c : snap.corners) {
        nlohmann::json cj;
        cj["beta"] = c.beta;
        cj["finite"] = !c.at_infinity();
        if (c.position) {
            cj["re"] = c.position->real();
            cj["im"] = c.position->imag();
        }
        j["corners"].push_back(cj);
    }
    return j;
}

// --- configuration -----------------------------------------------------------

namespace {

void require_keys(const nlohmann::json& obj, const std::set<std::string>& allowed,
                  const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("unknown key \"" + it.key() + "\" in " + where);
}

std::vector<double> number_array(const nlohmann::json& j, const std::string& what) {
    if (!j.is_array()) throw ConfigError(what + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) throw ConfigError(what + " must be an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

} // namespace

RunConfigFile parse_config(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
    require_keys(doc,
                 {"kappa", "prevertices", "betas", "rhos", "seed", "solver", "driver", "trace",
                  "map", "evolve", "verify"},
                 "config root");

    RunConfigFile rc;
    rc.raw = doc;

    if (doc.contains("kappa")) {
        if (!doc["kappa"].is_number() || !(doc["kappa"].get<double>() > 0.0))
            throw ConfigError("kappa must be a positive number");
        rc.cfg.kappa = doc["kappa"].get<double>();
    }
    const bool has_prev = doc.contains("prevertices");
    const bool has_betas = doc.contains("betas");
    const bool has_rhos = doc.contains("rhos");
    if (has_betas && has_rhos) throw ConfigError("give exactly one of betas/rhos, not both");
    if (has_prev) {
        rc.cfg.prevertices = number_array(doc["prevertices"], "prevertices");
        if (!has_betas && !has_rhos)
            throw ConfigError("prevertices given without betas or rhos");
        rc.cfg.betas = has_betas ? number_array(doc["betas"], "betas")
                                 : betas_from_rhos(number_array(doc["rhos"], "rhos"),
                                                   rc.cfg.kappa);
        rc.has_geometry = true;
        // the CLI accepts one-sided markings (pure SLE(kappa,rho) runs);
        // class membership is validate_config's concern
        const auto rep = validate_structure(rc.cfg);
        if (!rep.ok) {
            std::string msg = "invalid configuration:";
            for (const auto& e : rep.errors) msg += " " + e + ";";
            throw ConfigError(msg);
        }
    } else if (has_betas || has_rhos) {
        throw ConfigError("betas/rhos given without prevertices");
    }

    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_integer() || doc["seed"].get<long long>() < 0)
            throw ConfigError("seed must be a nonnegative integer");
        rc.seed = doc["seed"].get<std::uint64_t>();
    }

    if (doc.contains("solver")) {
        const auto& s = doc["solver"];
        require_keys(s,
                     {"T", "dt", "quad_order", "subdivision_limit", "eps_coll_factor",
                      "max_refine_depth"},
                     "solver");
        if (s.contains("T")) rc.T = s["T"].get<double>();
        if (s.contains("dt")) rc.dt = s["dt"].get<double>();
        if (s.contains("quad_order")) rc.solver.quad_order = s["quad_order"].get<int>();
        if (s.contains("subdivision_limit"))
            rc.solver.subdivision_limit = s["subdivision_limit"].get<int>();
        if (s.contains("eps_coll_factor"))
            rc.solver.eps_coll_factor = s["eps_coll_factor"].get<double>();
        if (s.contains("max_refine_depth"))
            rc.solver.max_refine_depth = s["max_refine_depth"].get<int>();
        if (!(rc.T > 0.0) || !(rc.dt > 0.0)) throw ConfigError("solver.T and solver.dt must be positive");
    }

    if (doc.contains("driver")) {
        const auto& d = doc["driver"];
        require_keys(d, {"type", "value", "slope"}, "driver");
        const std::string type = d.value("type", "brownian");
        if (type == "brownian")
            rc.driver.type = DriverSpec::Type::Brownian;
        else if (type == "constant")
            rc.driver.type = DriverSpec::Type::Constant;
        else if (type == "linear")
            rc.driver.type = DriverSpec::Type::Linear;
        else
            throw ConfigError("driver.type must be brownian, constant or linear");
        rc.driver.value = d.value("value", 0.0);
        rc.driver.slope = d.value("slope", 0.0);
    }

    if (doc.contains("trace")) {
        require_keys(doc["trace"], {"stride"}, "trace");
        rc.trace_section = doc["trace"];
    }
    if (doc.contains("map")) {
        require_keys(doc["map"], {"time"}, "map");
        rc.map_section = doc["map"];
    }
    if (doc.contains("evolve")) {
        require_keys(doc["evolve"], {"frames"}, "evolve");
        rc.evolve_section = doc["evolve"];
    }
    if (doc.contains("verify")) {
        require_keys(doc["verify"],
                     {"test", "paths", "T", "dt", "S", "ds", "t_star", "x", "y", "t_max",
                      "attrition_threshold", "undecided_threshold", "drift_sign", "gate",
                      "tc_intervals", "h", "samples"},
                     "verify");
        rc.verify_section = doc["verify"];
    }
    return rc;
}

RunConfigFile load_config(const std::filesystem::path& file) {
    std::ifstream is(file);
    if (!is) throw ConfigError("cannot open config file: " + file.string());
    nlohmann::json doc;
    try {
        is >> doc;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return parse_config(doc);
}

std::uint64_t config_hash(const nlohmann::json& doc) {
    const std::string s = doc.dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string config_hash_hex(const nlohmann::json& doc) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(config_hash(doc)));
    return buf;
}

nlohmann::json make_manifest(const std::string& command, const RunConfigFile& rc,
                             std::uint64_t seed, const std::vector<std::string>& outputs,
                             std::optional<double> sigma) {
    nlohmann::json m;
    m["command"] = command;
    m["config_hash"] = config_hash_hex(rc.raw);
    m["seed"] = seed;
    m["version"] = kVersion;
    m["outputs"] = outputs;
    if (sigma) m["sigma"] = *sigma;
    return m;
}

void write_text_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw ConfigError("cannot open output file: " + p.string());
    os << content;
}

} // namespace polysle
