// Command-line surface: verification suites, net generation/export, KdV
// simulation and a cross-ratio calculator.
//
// Exit codes: 0 success, 1 numeric/geometric failure, 2 usage/spec errors.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "rspace/serialize.hpp"
#include "rspace/verify.hpp"

using namespace rspace;

namespace {

int cmd_verify(const std::string& suite, std::uint64_t seed, const std::string& out) {
    RunReport rep;
    try {
        rep = run_suite(suite, seed);
    } catch (const UnsupportedModel& e) {
        std::cerr << "error: " << e.what() << "\n";
        std::cerr << "known suites:";
        for (const auto& [name, fn] : suite_registry()) std::cerr << " " << name;
        std::cerr << "\n";
        return 2;
    }
    for (const auto& c : rep.cases) {
        std::printf("[%s] %-55s residual %-12s tol %s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(),
                    format_double(c.residual).c_str(), format_double(c.tolerance).c_str());
    }
    std::printf("suite %s: %s (%.1f ms)\n", rep.suite.c_str(), rep.pass() ? "PASS" : "FAIL", rep.wall_time_ms);
    if (!out.empty()) write_text_file(out, rep.to_json().dump(2) + "\n");
    return rep.pass() ? 0 : 1;
}

Net build_lattice_net(const Model& model, int w, int h, double mh, double mv, double step) {
    double ox = -0.5 * step * (w - 1), oy = -0.5 * step * (h - 1);
    int chart_dim = static_cast<int>(model.wbasis().cols());
    auto pt = [&](double x, double y) {
        Vector c = Vector::Zero(chart_dim);
        c(0) = x;
        if (chart_dim > 1) c(1) = y;
        return model.inverse_stereo_point(c);
    };
    std::vector<ModelPoint> row0, col0;
    for (int x = 0; x < w; ++x) row0.push_back(pt(ox + step * x, oy));
    for (int y = 0; y < h; ++y) col0.push_back(pt(ox, oy + step * y));
    return net_from_boundary(model, row0, col0, std::vector<double>(w - 1, mh), std::vector<double>(h - 1, mv));
}

int cmd_net(const std::string& model_spec, const std::string& size, double mh, double mv, double step,
            std::optional<double> darboux_param, std::optional<double> ttransform_param, std::uint64_t seed,
            const std::string& out) {
    auto xpos = size.find('x');
    if (xpos == std::string::npos) {
        std::cerr << "error: --size must look like 10x10\n";
        return 2;
    }
    int w = 0, h = 0;
    try {
        w = std::stoi(size.substr(0, xpos));
        h = std::stoi(size.substr(xpos + 1));
    } catch (...) {
        std::cerr << "error: cannot parse --size " << size << "\n";
        return 2;
    }
    if (w < 1 || h < 1) {
        std::cerr << "error: --size must be positive\n";
        return 2;
    }
    if (mh == 0.0 || mv == 0.0 || mh == mv) {
        std::cerr << "error: factorising values must be nonzero and distinct\n";
        return 2;
    }
    Model model = [&] {
        try {
            return Model::parse(model_spec);
        } catch (const UnsupportedModel& e) {
            std::cerr << "error: " << e.what() << "\n";
            std::exit(2);
        }
    }();
    if (model.kind() != ModelKind::conformal) {
        std::cerr << "error: net generation drives the conformal models; for rp1 use --model conformal style "
                     "specs\n";
        return 2;
    }

    Json meta;
    meta["command"] = "net";
    meta["model"] = model.name();
    meta["size"] = {w, h};
    meta["m"] = {mh, mv};
    meta["step"] = step;
    meta["seed"] = seed;
    Json chain = Json::array();

    Net net = build_lattice_net(model, w, h, mh, mv, step);
    write_text_file(out + ".json", net_to_json(net).dump(2) + "\n");
    if (model.dim_m() <= 4) write_text_file(out + ".obj", net_to_obj(net));

    if (darboux_param) {
        Rng rng(seed);
        ModelPoint seed_pt = model.make_point(model.vinf());
        if (!model.points_complementary(net.point(0, 0), seed_pt)) {
            std::cerr << "error: default darboux seed not complementary at the base vertex\n";
            return 1;
        }
        Net hat = net_darboux(net, *darboux_param, seed_pt);
        Json jh = net_to_json(hat);
        jh["darboux"] = Json{{"parameter", *darboux_param},
                             {"per_edge_cross_ratio_residual", net_darboux_edge_residual(net, hat, *darboux_param)}};
        write_text_file(out + "_darboux.json", jh.dump(2) + "\n");
        chain.push_back(Json{{"transform", "darboux"}, {"parameter", *darboux_param}});
        net = std::move(hat);
    }
    if (ttransform_param) {
        NetTTransform tt = net_t_transform(net, *ttransform_param);
        write_text_file(out + "_ttransform.json", net_to_json(tt.net).dump(2) + "\n");
        chain.push_back(Json{{"transform", "ttransform"}, {"parameter", *ttransform_param}});
    }
    meta["transform_chain"] = std::move(chain);
    auto now = std::chrono::system_clock::now().time_since_epoch();
    meta["metadata"] =
        Json{{"timestamp_ms", std::chrono::duration_cast<std::chrono::milliseconds>(now).count()}};
    write_text_file(out + "_meta.json", meta.dump(2) + "\n");
    std::printf("net written to %s.json (flatness residual %s)\n", out.c_str(),
                format_double(net_flatness_residual(net, 0.37)).c_str());
    return 0;
}

int cmd_kdv(const std::string& scenario, int n, double dt_req, double T, double mhat, double x0,
            const std::string& custom_path, const std::string& out) {
    if (n < 8) {
        std::cerr << "error: --n too small\n";
        return 2;
    }
    Grid1D g(n, 40.0);
    FlowConfig cfg;
    cfg.dt = dt_req;
    double limit = cfg.stability_limit(g);
    if (cfg.dt <= 0) cfg.dt = 0.8 * limit;
    if (cfg.dt > limit)
        std::printf("warning: dt = %s exceeds the dispersive stability bound %s; running anyway\n",
                    format_double(cfg.dt).c_str(), format_double(limit).c_str());
    cfg.steps = std::max<long>(1, static_cast<long>(std::llround(T / cfg.dt)));

    Json meta;
    meta["command"] = "kdv";
    meta["scenario"] = scenario;
    meta["grid"] = Json{{"n", g.n}, {"length", g.length}};
    meta["dt"] = cfg.dt;
    meta["steps"] = cfg.steps;
    meta["scheme"] = "fd4";
    meta["mhat"] = mhat;

    std::vector<double> times;
    std::vector<Vector> p_series, a_series, phat_series;

    try {
        if (scenario == "backlund-from-zero") {
            Vector zero = Vector::Zero(g.n);
            BacklundResult bl = backlund(zero, mhat, -std::tanh(-x0 * std::sqrt(mhat)), 0, g);
            times = {0.0};
            p_series = {zero};
            a_series = {bl.a};
            phat_series = {bl.p_hat};
            meta["periodicity_defect"] = bl.periodicity_defect;
        } else if (scenario == "soliton") {
            Vector p0(g.n);
            for (int i = 0; i < g.n; ++i) {
                double sech = 1.0 / std::cosh(std::sqrt(mhat) * (g.x(i) - x0));
                p0(i) = -2.0 * mhat * sech * sech;
            }
            EvolveResult res = evolve(p0, std::nullopt, mhat, cfg, FlowKind::kdv, g);
            times = {0.0, cfg.dt * cfg.steps};
            p_series = {p0, res.p};
            double speed = (peak_position(res.p, g) - peak_position(p0, g)) / (cfg.dt * cfg.steps);
            meta["measured_speed"] = speed;
            meta["drift_mass"] = res.drift_mass;
            meta["drift_energy"] = res.drift_energy;
            std::printf("conserved drift: mass %s, energy %s; speed %s (2 mhat = %s)\n",
                        format_double(res.drift_mass).c_str(), format_double(res.drift_energy).c_str(),
                        format_double(speed).c_str(), format_double(2 * mhat).c_str());
        } else if (scenario == "miura-check") {
            const double tt = 0.05;
            auto run = [&](int nn) {
                Grid1D gg(nn, 2 * M_PI);
                Vector a0(gg.n);
                for (int i = 0; i < gg.n; ++i) a0(i) = 0.4 * std::sin(gg.x(i)) + 0.1 * std::cos(2 * gg.x(i));
                FlowConfig c2;
                c2.scheme = Scheme::fd2;
                c2.dt = tt / std::ceil(tt / (0.15 * std::pow(gg.h(), 3)));
                c2.steps = static_cast<long>(std::round(tt / c2.dt));
                EvolveResult via_mkdv = evolve(Vector(miura(a0, mhat, gg, c2.scheme)), a0, mhat, c2, FlowKind::mkdv, gg);
                EvolveResult via_kdv =
                    evolve(Vector(miura(a0, mhat, gg, c2.scheme)), std::nullopt, mhat, c2, FlowKind::kdv, gg);
                return (via_mkdv.p - via_kdv.p).cwiseAbs().maxCoeff();
            };
            double coarse = run(64), fine = run(128);
            meta["sup_difference"] = Json{{"n64", coarse}, {"n128", fine}, {"refinement_ratio", coarse / fine}};
            std::printf("miura intertwining sup-difference: %s (n = 64), %s (n = 128), ratio %s\n",
                        format_double(coarse).c_str(), format_double(fine).c_str(),
                        format_double(coarse / fine).c_str());
            times = {0.0};
            Grid1D gg(64, 2 * M_PI);
            Vector a0(gg.n);
            for (int i = 0; i < gg.n; ++i) a0(i) = 0.4 * std::sin(gg.x(i)) + 0.1 * std::cos(2 * gg.x(i));
            g = gg;
            p_series = {miura(a0, mhat, gg, Scheme::fd2)};
            a_series = {a0};
        } else if (scenario.rfind("custom:", 0) == 0 || !custom_path.empty()) {
            std::string path = !custom_path.empty() ? custom_path : scenario.substr(7);
            Json spec = Json::parse(read_text_file(path));
            std::vector<double> pv = spec.at("p").get<std::vector<double>>();
            if (static_cast<int>(pv.size()) != g.n) {
                std::cerr << "error: custom p has " << pv.size() << " samples, grid has " << g.n << "\n";
                return 2;
            }
            Vector p0 = Eigen::Map<const Vector>(pv.data(), pv.size());
            EvolveResult res = evolve(p0, std::nullopt, mhat, cfg, FlowKind::kdv, g);
            times = {0.0, cfg.dt * cfg.steps};
            p_series = {p0, res.p};
            meta["drift_mass"] = res.drift_mass;
            meta["drift_energy"] = res.drift_energy;
        } else {
            std::cerr << "error: unknown scenario " << scenario
                      << " (known: soliton, miura-check, backlund-from-zero, custom:file)\n";
            return 2;
        }
    } catch (const Instability& e) {
        std::cerr << "instability: " << e.what() << "\n";
        return 1;
    } catch (const BlowUp& e) {
        std::cerr << "blow-up: " << e.what() << "\n";
        return 1;
    }

    write_text_file(out + ".csv", kdv_series_csv(g, times, p_series, a_series, phat_series));
    auto now = std::chrono::system_clock::now().time_since_epoch();
    meta["metadata"] =
        Json{{"timestamp_ms", std::chrono::duration_cast<std::chrono::milliseconds>(now).count()}};
    write_text_file(out + "_meta.json", meta.dump(2) + "\n");
    std::printf("series written to %s.csv\n", out.c_str());
    return 0;
}

int cmd_cross(double a, double b, double c, double d) {
    Model m = Model::rp1();
    auto pt = [&](double t) {
        Matrix v(2, 1);
        v << 1, t;
        return m.point_to_parabolic(m.make_point(v));
    };
    try {
        ExtReal r = cross_ratio(pt(a), pt(b), pt(c), pt(d));
        if (r.is_inf()) std::printf("inf\n");
        else std::printf("%s\n", format_double(r.value()).c_str());
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    if (const char* tol = std::getenv("RSPACE_TOL")) {
        (void)tol;  // the library reads it lazily; mention it in --help only
    }
    CLI::App app{"transformation calculus for isothermic maps into symmetric R-spaces"};
    app.require_subcommand(1);

    auto* verify = app.add_subcommand("verify", "run a verification suite");
    std::string suite = "algebra-core";
    std::uint64_t seed = 1;
    std::string verify_out;
    verify->add_option("--suite", suite, "suite name");
    verify->add_option("--seed", seed, "random seed");
    verify->add_option("--out", verify_out, "write the JSON report here");

    auto* net = app.add_subcommand("net", "generate a discrete isothermic net");
    std::string model_spec = "conformal:2,1";
    std::string size = "10x10";
    std::vector<double> mspec = {1.0, -1.0};
    double step = 0.4;
    double darboux_param = 0.0, ttransform_param = 0.0;
    bool have_darboux = false, have_tt = false;
    std::string net_out = "net";
    net->add_option("--model", model_spec, "model spec, e.g. conformal:2,1");
    net->add_option("--size", size, "lattice size WxH");
    net->add_option("--m", mspec, "factorising values: horizontal, vertical")->expected(2);
    net->add_option("--step", step, "lattice step in the chart");
    net->add_option("--darboux", darboux_param, "apply a Darboux transform with this parameter")
        ->each([&](const std::string&) { have_darboux = true; });
    net->add_option("--ttransform", ttransform_param, "apply a T-transform with this shift")
        ->each([&](const std::string&) { have_tt = true; });
    net->add_option("--seed", seed, "random seed");
    net->add_option("--out", net_out, "output path prefix");

    auto* kdv = app.add_subcommand("kdv", "run a KdV-lab scenario");
    std::string scenario = "soliton";
    int n = 512;
    double dt = 0.0, T = 1.0, mhat = 1.0, x0 = 10.0;
    std::string custom_path;
    std::string kdv_out = "kdv";
    kdv->add_option("--scenario", scenario, "soliton | miura-check | backlund-from-zero | custom:file");
    kdv->add_option("--n", n, "grid points");
    kdv->add_option("--dt", dt, "time step (default: 80% of the stability bound)");
    kdv->add_option("--T", T, "final time");
    kdv->add_option("--mhat", mhat, "spectral parameter");
    kdv->add_option("--x0", x0, "profile position");
    kdv->add_option("--custom", custom_path, "JSON file with initial data for custom runs");
    kdv->add_option("--out", kdv_out, "output path prefix");

    auto* cross = app.add_subcommand("cross", "cross-ratio of four affine points on RP1");
    double ca = 1, cb = 0, cc = 0, cd = 0;
    cross->add_option("a", ca)->required();
    cross->add_option("b", cb)->required();
    cross->add_option("c", cc)->required();
    cross->add_option("d", cd)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (verify->parsed()) return cmd_verify(suite, seed, verify_out);
        if (net->parsed())
            return cmd_net(model_spec, size, mspec[0], mspec[1], step,
                           have_darboux ? std::optional<double>(darboux_param) : std::nullopt,
                           have_tt ? std::optional<double>(ttransform_param) : std::nullopt, seed, net_out);
        if (kdv->parsed()) return cmd_kdv(scenario, n, dt, T, mhat, x0, custom_path, kdv_out);
        if (cross->parsed()) return cmd_cross(ca, cb, cc, cd);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
