#include "cmsphere/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"

namespace cmsphere {

namespace {

using json = nlohmann::ordered_json;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; }))
            throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

double read_double(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
    return j[key].get<double>();
}

int read_int(const json& j, const char* key, int fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number_integer()) throw ConfigError(std::string("'") + key + "' must be an integer");
    return j[key].get<int>();
}

std::string read_string(const json& j, const char* key, const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_string()) throw ConfigError(std::string("'") + key + "' must be a string");
    return j[key].get<std::string>();
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::ofstream open_output(const OutputPaths& out, const std::string& name, bool binary) {
    const auto p = out.path(name);
    std::ofstream os(p, binary ? std::ios::binary : std::ios::out);
    if (!os) throw Error("cannot write '" + p + "'");
    return os;
}

void write_spectrum_rows(std::ostream& os, const Simulation& sim) {
    const auto e = energy_spectrum(sim.vorticity_coefficients());
    for (std::size_t l = 1; l < e.energy.size(); ++l) os << fmt(sim.time()) << ',' << l << ',' << fmt(e.energy[l]) << '\n';
}

// Steps `sim` to its final time, streaming diagnostics, then writes the
// end-of-run files.
RunSummary drive(Simulation& sim, const RunConfig& cfg, bool fresh) {
    const auto& out = cfg.output;
    std::filesystem::create_directories(out.directory);
    std::ofstream diag, spec;
    if (!out.diagnostics.empty()) {
        diag = open_output(out, out.diagnostics, false);
        diag << run_header(cfg) << '\n';
        write_diagnostics_header(diag);
        if (fresh) write_diagnostics_row(diag, sim.initial_diagnostics());
        write_diagnostics_row(diag, sim.diagnostics());
    }
    const bool spectra = cfg.spectrum_stride > 0 && !out.spectra.empty();
    if (spectra) {
        spec = open_output(out, out.spectra, false);
        spec << run_header(cfg) << "\nt,l,energy\n";
        write_spectrum_rows(spec, sim);
    }
    sim.run([&](const Simulation& s) {
        const bool last = s.finished();
        if (diag.is_open() && (s.step_index() % cfg.diagnostic_stride == 0 || last))
            write_diagnostics_row(diag, s.diagnostics());
        if (spectra && (s.step_index() % cfg.spectrum_stride == 0 || last)) write_spectrum_rows(spec, s);
    });

    RunSummary r;
    r.final = sim.diagnostics();
    r.steps = sim.step_index();
    if (!out.grid.empty()) {
        const auto& g = sim.discretization().grid;
        auto os = open_output(out, out.grid, true);
        write_grid_dump(os, g, sim.sample_vorticity(g.points()));
    }
    if (!out.checkpoint.empty()) {
        auto os = open_output(out, out.checkpoint, true);
        sim.write_checkpoint(os, to_json(cfg));
    }
    if (!out.errors.empty()) {
        r.errors = evaluate_errors(sim, cfg.L_err);
        r.has_errors = true;
        auto os = open_output(out, out.errors, false);
        os << errors_json(r.errors, cfg.L_err) << '\n';
    }
    return r;
}

}  // namespace

std::string OutputPaths::path(const std::string& name) const {
    return (std::filesystem::path(directory) / name).string();
}

void RunConfig::validate() const {
    sim.validate();
    const auto names = case_names();
    if (std::find(names.begin(), names.end(), case_name) == names.end())
        throw ConfigError("unknown case '" + case_name + "'");
    if (case_name == "rh_wave" && (sim.omega.x != 0.0 || sim.omega.y != 0.0))
        throw ConfigError("rh_wave needs the rotation vector along z");
    if (L_err < 8) throw ConfigError("L_err must be at least 8");
    if (diagnostic_stride < 1) throw ConfigError("diagnostic_stride must be >= 1");
    if (spectrum_stride < 0) throw ConfigError("spectrum_stride must be >= 0");
    if (!(params.beta > 0.0)) throw ConfigError("beta must be positive");
    if (params.lmax < 1 || params.lmax > 512) throw ConfigError("lmax must lie in [1, 512]");
    if (params.wavenumber < 0) throw ConfigError("wavenumber must be >= 0");
}

VorticityCase RunConfig::make_initial_condition() const {
    CaseParams p = params;
    p.omega = sim.omega.z;
    return make_case(case_name, p);
}

RunConfig recommended_config(const std::string& case_name) {
    RunConfig c;
    c.case_name = case_name;
    if (case_name == "rotated_rh_wave") c.sim.omega = {0.0, 0.0, 0.0};
    if (case_name == "zonal_jet") c.sim.T = 0.5;
    return c;
}

RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    reject_unknown(j,
                   {"case", "case_params", "k", "L", "dt", "T", "remap_stride", "omega", "epsilon",
                    "bootstrap_substeps", "bootstrap_iterations", "L_err", "diagnostic_stride", "spectrum_stride",
                    "output"},
                   "config");
    RunConfig c = recommended_config(read_string(j, "case", "rh_wave"));
    if (j.contains("case_params")) {
        const json& p = j["case_params"];
        reject_unknown(p,
                       {"theta_c", "beta", "amplitude", "wavenumber", "seed", "lmax", "random_amplitude",
                        "solid_amplitude"},
                       "case_params");
        auto& cp = c.params;
        cp.theta_c = read_double(p, "theta_c", cp.theta_c);
        cp.beta = read_double(p, "beta", cp.beta);
        cp.amplitude = read_double(p, "amplitude", cp.amplitude);
        cp.wavenumber = read_int(p, "wavenumber", cp.wavenumber);
        if (p.contains("seed")) {
            if (!p["seed"].is_number_unsigned()) throw ConfigError("'seed' must be a non-negative integer");
            cp.seed = p["seed"].get<std::uint64_t>();
        }
        cp.lmax = read_int(p, "lmax", cp.lmax);
        cp.random_amplitude = read_double(p, "random_amplitude", cp.random_amplitude);
        cp.solid_amplitude = read_double(p, "solid_amplitude", cp.solid_amplitude);
    }
    auto& s = c.sim;
    s.k = read_int(j, "k", s.k);
    s.L = read_int(j, "L", s.L);
    s.dt = read_double(j, "dt", s.dt);
    s.T = read_double(j, "T", s.T);
    s.remap_stride = read_int(j, "remap_stride", s.remap_stride);
    if (j.contains("omega")) {
        const json& o = j["omega"];
        if (!o.is_array() || o.size() != 3 || !o[0].is_number() || !o[1].is_number() || !o[2].is_number())
            throw ConfigError("'omega' must be an array of three numbers");
        s.omega = {o[0].get<double>(), o[1].get<double>(), o[2].get<double>()};
    }
    s.epsilon = read_double(j, "epsilon", s.epsilon);
    s.bootstrap_substeps = read_int(j, "bootstrap_substeps", s.bootstrap_substeps);
    s.bootstrap_iterations = read_int(j, "bootstrap_iterations", s.bootstrap_iterations);
    c.L_err = read_int(j, "L_err", c.L_err);
    c.diagnostic_stride = read_int(j, "diagnostic_stride", c.diagnostic_stride);
    c.spectrum_stride = read_int(j, "spectrum_stride", c.spectrum_stride);
    if (j.contains("output")) {
        const json& o = j["output"];
        reject_unknown(o, {"directory", "diagnostics", "grid", "checkpoint", "errors", "spectra"}, "output");
        auto& out = c.output;
        out.directory = read_string(o, "directory", out.directory);
        out.diagnostics = read_string(o, "diagnostics", out.diagnostics);
        out.grid = read_string(o, "grid", out.grid);
        out.checkpoint = read_string(o, "checkpoint", out.checkpoint);
        out.errors = read_string(o, "errors", out.errors);
        out.spectra = read_string(o, "spectra", out.spectra);
    }
    c.validate();
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config '" + path + "'");
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

std::string to_json(const RunConfig& c) {
    json j;
    j["case"] = c.case_name;
    const auto& p = c.params;
    j["case_params"] = {{"theta_c", p.theta_c},   {"beta", p.beta}, {"amplitude", p.amplitude},
                        {"wavenumber", p.wavenumber}, {"seed", p.seed}, {"lmax", p.lmax},
                        {"random_amplitude", p.random_amplitude}, {"solid_amplitude", p.solid_amplitude}};
    const auto& s = c.sim;
    j["k"] = s.k;
    j["L"] = s.L;
    j["dt"] = s.dt;
    j["T"] = s.T;
    j["remap_stride"] = s.remap_stride;
    j["omega"] = {s.omega.x, s.omega.y, s.omega.z};
    j["epsilon"] = s.epsilon;
    j["bootstrap_substeps"] = s.bootstrap_substeps;
    j["bootstrap_iterations"] = s.bootstrap_iterations;
    j["L_err"] = c.L_err;
    j["diagnostic_stride"] = c.diagnostic_stride;
    j["spectrum_stride"] = c.spectrum_stride;
    const auto& o = c.output;
    j["output"] = {{"directory", o.directory}, {"diagnostics", o.diagnostics}, {"grid", o.grid},
                   {"checkpoint", o.checkpoint}, {"errors", o.errors},       {"spectra", o.spectra}};
    return j.dump(2);
}

bool operator==(const RunConfig& a, const RunConfig& b) { return to_json(a) == to_json(b); }

std::string run_header(const RunConfig& c) {
    const auto& s = c.sim;
    std::ostringstream os;
    os << "# cmsphere case=" << c.case_name << " k=" << s.k << " L=" << s.L << " dt=" << fmt(s.dt)
       << " T=" << fmt(s.T) << " steps=" << s.num_steps() << " m=";
    if (s.remap_stride == 0)
        os << "inf";
    else
        os << s.remap_stride;
    os << " omega=" << fmt(s.omega.x) << ',' << fmt(s.omega.y) << ',' << fmt(s.omega.z) << " eps=" << fmt(s.epsilon)
       << " L_err=" << c.L_err;
    return os.str();
}

void write_diagnostics_header(std::ostream& os) { os << "t,energy,enstrophy,energy_error,enstrophy_error\n"; }

void write_diagnostics_row(std::ostream& os, const Diagnostics& d) {
    os << fmt(d.t) << ',' << fmt(d.energy) << ',' << fmt(d.enstrophy) << ',' << fmt(d.energy_error) << ','
       << fmt(d.enstrophy_error) << '\n';
}

std::string errors_json(const ErrorReport& e, int L_err) {
    json j;
    j["L_err"] = L_err;
    j["vorticity_error"] = number_or_null(e.vorticity_error);
    j["vorticity_abs_error"] = number_or_null(e.vorticity_abs_error);
    j["enstrophy_error"] = number_or_null(e.enstrophy_error);
    j["energy_error"] = number_or_null(e.energy_error);
    j["lipschitz"] = number_or_null(e.lipschitz);
    return j.dump(2);
}

RunSummary run_to_files(const RunConfig& cfg) {
    cfg.validate();
    Simulation sim(cfg.sim, cfg.make_initial_condition());
    return drive(sim, cfg, true);
}

RunConfig checkpoint_config(const std::string& checkpoint) {
    std::ifstream is(checkpoint, std::ios::binary);
    if (!is) throw ConfigError("cannot read checkpoint '" + checkpoint + "'");
    return parse_config(read_checkpoint_header(is));
}

RunSummary resume_to_files(const std::string& checkpoint, const OutputPaths& out) {
    std::ifstream is(checkpoint, std::ios::binary);
    if (!is) throw ConfigError("cannot read checkpoint '" + checkpoint + "'");
    RunConfig cfg = parse_config(read_checkpoint_header(is));
    cfg.output = out;
    Simulation sim = Simulation::resume(is, cfg.make_initial_condition());
    return drive(sim, cfg, false);
}

SimConfig refinement_level(const SimConfig& base, int k) {
    SimConfig c = base;
    c.k = k;
    c.L = 1 << (k + 3);
    c.dt = std::ldexp(base.T, -(k + 2));
    return c;
}

double ConvergencePoint::map_error() const {
    return errors.lipschitz > 0.0 ? errors.vorticity_abs_error / errors.lipschitz : errors.vorticity_abs_error;
}

double ConvergenceTable::slope(int stride, const std::string& quantity) const {
    for (const auto& s : slopes)
        if (s.stride == stride && s.quantity == quantity) return s.slope;
    return std::nan("");
}

double convergence_order(const std::vector<int>& k, const std::vector<double>& y) {
    const int n = static_cast<int>(k.size());
    if (n < 2) return std::nan("");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        const double lx = -k[i] * std::numbers::ln2, ly = std::log(std::max(std::abs(y[i]), 1e-300));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ConvergenceTable converge(const RunConfig& base, int k_min, int k_max, const std::vector<int>& strides) {
    base.validate();
    if (k_min < 0 || k_max < k_min) throw ConfigError("invalid k range");
    ConvergenceTable t;
    t.case_name = base.case_name;
    const auto ic = base.make_initial_condition();
    for (int m : strides) {
        if (m < 0) throw ConfigError("remap stride must be >= 0");
        std::vector<int> ks;
        std::vector<double> verr, ens, en;
        for (int k = k_min; k <= k_max; ++k) {
            SimConfig cfg = refinement_level(base.sim, k);
            cfg.remap_stride = m;
            cfg.validate();
            Simulation sim(cfg, ic);
            sim.run();
            ConvergencePoint p;
            p.stride = m;
            p.k = k;
            p.L = cfg.L;
            p.dt = cfg.dt;
            p.steps = cfg.num_steps();
            p.errors = evaluate_errors(sim, base.L_err);
            t.points.push_back(p);
            ks.push_back(k);
            verr.push_back(p.errors.vorticity_error);
            ens.push_back(p.errors.enstrophy_error);
            en.push_back(p.errors.energy_error);
        }
        if (ic.has_solution()) t.slopes.push_back({m, "vorticity_error", convergence_order(ks, verr)});
        t.slopes.push_back({m, "enstrophy_error", convergence_order(ks, ens)});
        t.slopes.push_back({m, "energy_error", convergence_order(ks, en)});
    }
    return t;
}

void write_convergence_csv(std::ostream& os, const ConvergenceTable& t) {
    os << "case,m,k,L,dt,steps,vorticity_error,vorticity_abs_error,enstrophy_error,energy_error,lipschitz,map_error\n";
    for (const auto& p : t.points) {
        os << t.case_name << ',' << (p.stride == 0 ? std::string("inf") : std::to_string(p.stride)) << ',' << p.k
           << ',' << p.L << ',' << fmt(p.dt) << ',' << p.steps << ',' << fmt(p.errors.vorticity_error) << ','
           << fmt(p.errors.vorticity_abs_error) << ',' << fmt(p.errors.enstrophy_error) << ','
           << fmt(p.errors.energy_error) << ',' << fmt(p.errors.lipschitz) << ',' << fmt(p.map_error()) << '\n';
    }
}

void write_slopes_csv(std::ostream& os, const ConvergenceTable& t) {
    os << "case,m,quantity,order\n";
    for (const auto& s : t.slopes)
        os << t.case_name << ',' << (s.stride == 0 ? std::string("inf") : std::to_string(s.stride)) << ','
           << s.quantity << ',' << fmt(s.slope) << '\n';
}

UpsampleResult upsample(const Simulation& sim, int L_target) {
    if (L_target < 2) throw ConfigError("target band-limit must be at least 2");
    UpsampleResult r;
    r.L = L_target;
    const DynamicsGrid g(L_target);
    r.samples = sim.sample_vorticity(g.points());
    r.spectrum = energy_spectrum(analysis(g, r.samples));
    for (double v : r.samples) r.max_abs = std::max(r.max_abs, std::abs(v));
    return r;
}

void write_zoom_csv(std::ostream& os, const Simulation& sim, const ZoomWindow& w) {
    if (w.n < 1) return;
    std::vector<UnitVec> pts;
    std::vector<std::array<double, 2>> where;
    for (int i = 0; i < w.n; ++i)
        for (int j = 0; j < w.n; ++j) {
            const double s = w.n > 1 ? static_cast<double>(j) / (w.n - 1) - 0.5 : 0.0;
            const double r = w.n > 1 ? static_cast<double>(i) / (w.n - 1) - 0.5 : 0.0;
            const double lon = w.lon + w.width * s;
            const double colat = std::clamp(w.colat + w.width * r, 0.0, std::numbers::pi);
            pts.push_back(from_lon_colat(lon, colat));
            where.push_back({lon, colat});
        }
    const auto z = sim.sample_vorticity(pts);
    os << "lon,colat,zeta\n";
    for (std::size_t i = 0; i < pts.size(); ++i) os << fmt(where[i][0]) << ',' << fmt(where[i][1]) << ',' << fmt(z[i]) << '\n';
}

}  // namespace cmsphere
