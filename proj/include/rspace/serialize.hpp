#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "rspace/kdv.hpp"
#include "rspace/nets.hpp"
#include "rspace/transforms.hpp"

namespace rspace {

using Json = nlohmann::ordered_json;

/// Shortest round-trip decimal representation; keeps emitted files
/// byte-stable across platforms.
inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline Json matrix_to_json(const Matrix& m) {
    Json cols = Json::array();
    for (int c = 0; c < m.cols(); ++c) {
        Json col = Json::array();
        for (int r = 0; r < m.rows(); ++r) col.push_back(m(r, c));
        cols.push_back(std::move(col));
    }
    return cols;
}

inline Matrix matrix_from_json(const Json& cols, int rows) {
    Matrix m(rows, static_cast<int>(cols.size()));
    for (int c = 0; c < m.cols(); ++c)
        for (int r = 0; r < rows; ++r) m(r, c) = cols.at(c).at(r).get<double>();
    return m;
}

// ---------------------------------------------------------------------------
// Nets
// ---------------------------------------------------------------------------

inline Json net_to_json(const Net& net) {
    Json j;
    j["model"] = net.model().name();
    j["domain"] = {net.width(), net.height()};
    j["base"] = {0, 0};
    j["m_horizontal"] = net.m_horizontal();
    j["m_vertical"] = net.m_vertical();
    Json verts = Json::array();
    for (long v = 0; v < net.vertex_count(); ++v) verts.push_back(matrix_to_json(net.points()[v].rep));
    j["vertices"] = std::move(verts);
    return j;
}

inline Net net_from_json(const Json& j) {
    Model model = Model::parse(j.at("model").get<std::string>());
    int w = j.at("domain").at(0).get<int>();
    int h = j.at("domain").at(1).get<int>();
    std::vector<ModelPoint> pts;
    pts.reserve(static_cast<std::size_t>(w) * h);
    int rows = model.kind() == ModelKind::conformal ? model.ambient_dim() : model.n();
    for (const Json& v : j.at("vertices")) pts.push_back(model.make_point(matrix_from_json(v, rows)));
    return Net::from_points(std::move(model), w, h, std::move(pts),
                            j.at("m_horizontal").get<std::vector<double>>(),
                            j.at("m_vertical").get<std::vector<double>>());
}

/// OBJ export of stereoprojected vertices with quad faces, for conformal
/// nets whose chart dimension is at most 4 (a fourth coordinate becomes the
/// optional w component).  Vertices at infinity are clamped and noted.
inline std::string net_to_obj(const Net& net) {
    if (net.model().kind() != ModelKind::conformal)
        throw UnsupportedModel("net_to_obj: conformal models only");
    const int dim = net.model().dim_m();
    if (dim > 4) throw UnsupportedModel("net_to_obj: chart dimension exceeds 4");
    std::ostringstream out;
    out << "# stereoprojected isothermic net, model " << net.model().name() << "\n";
    for (long v = 0; v < net.vertex_count(); ++v) {
        Vector x;
        bool infinite = false;
        try {
            x = net.model().stereo_coords(net.points()[v]);
        } catch (const NotInChart&) {
            infinite = true;
            x = Vector::Zero(dim);
        }
        for (int c = 0; c < x.size(); ++c)
            if (std::abs(x(c)) > 1e6) {
                infinite = true;
                x(c) = x(c) > 0 ? 1e6 : -1e6;
            }
        out << "v";
        for (int c = 0; c < std::max(3, dim); ++c) out << " " << format_double(c < x.size() ? x(c) : 0.0);
        if (infinite) out << " # clipped: point at or near infinity";
        out << "\n";
    }
    for (int y = 0; y + 1 < net.height(); ++y)
        for (int x = 0; x + 1 < net.width(); ++x) {
            long i = net.flatten(x, y) + 1;  // OBJ is 1-based
            long jj = net.flatten(x + 1, y) + 1;
            long k = net.flatten(x + 1, y + 1) + 1;
            long l = net.flatten(x, y + 1) + 1;
            out << "f " << i << " " << jj << " " << k << " " << l << "\n";
        }
    return out.str();
}

// ---------------------------------------------------------------------------
// Isothermic samples
// ---------------------------------------------------------------------------

inline Json sample_to_json(const IsothermicSample& s, const std::string& model_name = "") {
    Json j;
    if (!model_name.empty()) j["model"] = model_name;
    j["algebra"] = s.algebra->name;
    j["grid_shape"] = s.grid.sizes;
    j["spacings"] = s.grid.spacing;
    if (s.chart) {
        j["chart"] = Json{{"p0_basis", matrix_to_json(s.chart->p0().space().basis())},
                          {"pinf_basis", matrix_to_json(s.chart->pinf().space().basis())}};
        Json verts = Json::array();
        for (long v = 0; v < s.grid.vertex_count(); ++v)
            verts.push_back(Json{{"F", std::vector<double>(s.stereo[v].coords.data(),
                                                           s.stereo[v].coords.data() + s.algebra->dim)}});
        j["vertices"] = std::move(verts);
    } else {
        Json verts = Json::array();
        for (long v = 0; v < s.grid.vertex_count(); ++v)
            verts.push_back(Json{{"basis", matrix_to_json(s.f[v].space().basis())}});
        j["vertices"] = std::move(verts);
    }
    Json eta = Json::array();
    s.grid.for_each_edge([&](int a, long tail, long) {
        eta.push_back(Json{{"axis", a},
                           {"tail", tail},
                           {"value", std::vector<double>(s.eta[a][tail].coords.data(),
                                                         s.eta[a][tail].coords.data() + s.algebra->dim)}});
    });
    j["eta"] = std::move(eta);
    return j;
}

inline AlgebraPtr algebra_from_name(const std::string& name) {
    if (name.rfind("sl(", 0) == 0) {
        int n = std::stoi(name.substr(3, name.find(',') - 3));
        return build_sl(n);
    }
    if (name.rfind("so(", 0) == 0) {
        auto comma = name.find(',');
        int p = std::stoi(name.substr(3, comma - 3));
        int q = std::stoi(name.substr(comma + 1, name.find(')') - comma - 1));
        return build_so(p, q);
    }
    throw UnsupportedModel("algebra_from_name: " + name);
}

/// Rebuilds a sample from its serialised form.  Gauge data is closed-form
/// and not serialised; reloaded samples fall back to eta-based transports.
inline IsothermicSample sample_from_json(const Json& j) {
    IsothermicSample s;
    s.algebra = algebra_from_name(j.at("algebra").get<std::string>());
    s.grid = Grid(j.at("grid_shape").get<std::vector<int>>(), j.at("spacings").get<std::vector<double>>());
    const long n = s.grid.vertex_count();
    s.f.resize(n);
    if (j.contains("chart")) {
        Matrix p0b = matrix_from_json(j.at("chart").at("p0_basis"), s.algebra->dim);
        Matrix pinfb = matrix_from_json(j.at("chart").at("pinf_basis"), s.algebra->dim);
        Parabolic p0 = make_parabolic(s.algebra, subspace_from_spanning(p0b));
        Parabolic pinf = make_parabolic(s.algebra, subspace_from_spanning(pinfb));
        s.chart = Chart(p0, pinf);
        s.stereo.reserve(n);
        for (long v = 0; v < n; ++v) {
            std::vector<double> coords = j.at("vertices").at(v).at("F").get<std::vector<double>>();
            AlgebraElement F{s.algebra, Eigen::Map<const Vector>(coords.data(), coords.size())};
            s.stereo.push_back(F);
            s.f[v] = exp_act(F, p0);
        }
    } else {
        for (long v = 0; v < n; ++v) {
            Matrix basis = matrix_from_json(j.at("vertices").at(v).at("basis"), s.algebra->dim);
            s.f[v] = make_parabolic(s.algebra, subspace_from_spanning(basis));
        }
    }
    s.eta.assign(s.grid.dims(),
                 std::vector<AlgebraElement>(n, AlgebraElement{s.algebra, Vector::Zero(s.algebra->dim)}));
    for (const Json& e : j.at("eta")) {
        std::vector<double> coords = e.at("value").get<std::vector<double>>();
        s.eta[e.at("axis").get<int>()][e.at("tail").get<long>()] =
            AlgebraElement{s.algebra, Eigen::Map<const Vector>(coords.data(), coords.size())};
    }
    return s;
}

// ---------------------------------------------------------------------------
// KdV CSV series
// ---------------------------------------------------------------------------

/// One row per grid point and time sample: x, t, p, a, p_hat (empty cells
/// for absent fields).
inline std::string kdv_series_csv(const Grid1D& g, const std::vector<double>& times,
                                  const std::vector<Vector>& p_series,
                                  const std::vector<Vector>& a_series,
                                  const std::vector<Vector>& phat_series) {
    std::ostringstream out;
    out << "x,t,p,a,p_hat\n";
    for (std::size_t k = 0; k < times.size(); ++k) {
        for (int i = 0; i < g.n; ++i) {
            out << format_double(g.x(i)) << "," << format_double(times[k]) << ","
                << format_double(p_series[k](i)) << ",";
            if (k < a_series.size() && a_series[k].size() == g.n) out << format_double(a_series[k](i));
            out << ",";
            if (k < phat_series.size() && phat_series[k].size() == g.n) out << format_double(phat_series[k](i));
            out << "\n";
        }
    }
    return out.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("write_text_file: cannot open " + path);
    f << content;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("read_text_file: cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace rspace
