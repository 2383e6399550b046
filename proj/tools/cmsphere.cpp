// Batch driver: run, converge, upsample, spectrum, mesh-dump.
//
// Exit codes: 0 ok, 1 other failure, 2 configuration error, 3 solver abort.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cmsphere/runner.hpp"

using namespace cmsphere;

namespace {

constexpr int kConfigError = 2;
constexpr int kSolverAbort = 3;

std::vector<int> parse_strides(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item == "inf" || item == "0") {
            out.push_back(0);
            continue;
        }
        try {
            std::size_t used = 0;
            const int v = std::stoi(item, &used);
            if (used != item.size() || v < 1) throw ConfigError("");
            out.push_back(v);
        } catch (const std::exception&) {
            throw ConfigError("bad remap stride '" + item + "'");
        }
    }
    if (out.empty()) throw ConfigError("no remap strides given");
    return out;
}

std::ofstream open_or_throw(const std::string& path, bool binary = false) {
    if (const auto dir = std::filesystem::path(path).parent_path(); !dir.empty()) std::filesystem::create_directories(dir);
    std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
    if (!os) throw Error("cannot write '" + path + "'");
    return os;
}

void print_summary(const RunSummary& r) {
    std::printf("steps %d  t %.6g  energy_error %.3e  enstrophy_error %.3e\n", r.steps, r.final.t,
                r.final.energy_error, r.final.enstrophy_error);
    if (r.has_errors && r.errors.vorticity_error == r.errors.vorticity_error)
        std::printf("vorticity_error %.3e\n", r.errors.vorticity_error);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Characteristic mapping solver for the barotropic vorticity equation on the sphere"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run a simulation from a JSON config");
    std::string config_path, resume_path, out_dir;
    run->add_option("config", config_path, "Run config (JSON)");
    run->add_option("--resume", resume_path, "Continue from a checkpoint instead of a config");
    run->add_option("--out", out_dir, "Output directory (overrides the config)");

    auto* conv = app.add_subcommand("converge", "Refinement sweep with L = 2^(k+3) and 2^(k+2) steps");
    std::string conv_config, conv_case = "rh_wave", strides = "inf,10", conv_out, slopes_out;
    int k_min = 1, k_max = 4, conv_lerr = 0;
    double conv_T = 0.0;
    conv->add_option("--config", conv_config, "Base config; its k, L and dt are replaced per level");
    conv->add_option("--case", conv_case, "Case when no config is given");
    conv->add_option("--k-min", k_min);
    conv->add_option("--k-max", k_max);
    conv->add_option("--T", conv_T, "Final time (default: the case's recommended value)");
    conv->add_option("--L-err", conv_lerr, "Error grid band-limit");
    conv->add_option("--strides", strides, "Comma-separated remap strides, inf for none");
    conv->add_option("--out", conv_out, "Per-level error CSV (default stdout)");
    conv->add_option("--slopes", slopes_out, "Fitted orders CSV (default stdout)");

    auto* up = app.add_subcommand("upsample", "Sample a checkpoint on a finer grid");
    std::string up_ckpt, up_grid, up_spec, up_zoom;
    int up_L = 0;
    ZoomWindow zoom;
    up->add_option("checkpoint", up_ckpt)->required();
    up->add_option("--L", up_L, "Target band-limit")->required();
    up->add_option("--grid", up_grid, "Grid dump output");
    up->add_option("--spectrum", up_spec, "Energy spectrum CSV output");
    up->add_option("--zoom", up_zoom, "Zoom window CSV output");
    up->add_option("--zoom-lon", zoom.lon);
    up->add_option("--zoom-colat", zoom.colat);
    up->add_option("--zoom-width", zoom.width);
    up->add_option("--zoom-n", zoom.n);

    auto* spec = app.add_subcommand("spectrum", "Energy spectrum of a grid dump");
    std::string spec_in, spec_out;
    spec->add_option("grid", spec_in)->required();
    spec->add_option("--out", spec_out, "CSV output (default stdout)");

    auto* mesh = app.add_subcommand("mesh-dump", "Write a triangulation as JSON");
    std::string mesh_kind = "icosahedral", mesh_out;
    int mesh_level = 3;
    mesh->add_option("--kind", mesh_kind, "icosahedral or latlon")->check(CLI::IsMember({"icosahedral", "latlon"}));
    mesh->add_option("--level", mesh_level, "Refinement level, or band-limit for latlon");
    mesh->add_option("--out", mesh_out, "JSON output (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kConfigError;
    }

    try {
        if (*run) {
            if (resume_path.empty() == config_path.empty())
                throw ConfigError("run needs exactly one of a config path or --resume");
            RunSummary r;
            if (!resume_path.empty()) {
                auto out = checkpoint_config(resume_path).output;
                if (!out_dir.empty()) out.directory = out_dir;
                r = resume_to_files(resume_path, out);
            } else {
                auto cfg = load_config(config_path);
                if (!out_dir.empty()) cfg.output.directory = out_dir;
                r = run_to_files(cfg);
            }
            print_summary(r);
        } else if (*conv) {
            RunConfig base = conv_config.empty() ? recommended_config(conv_case) : load_config(conv_config);
            if (conv_T > 0.0) base.sim.T = conv_T;
            if (conv_lerr > 0) base.L_err = conv_lerr;
            const auto table = converge(base, k_min, k_max, parse_strides(strides));
            if (conv_out.empty()) {
                write_convergence_csv(std::cout, table);
            } else {
                auto os = open_or_throw(conv_out);
                write_convergence_csv(os, table);
            }
            if (slopes_out.empty()) {
                write_slopes_csv(std::cout, table);
            } else {
                auto os = open_or_throw(slopes_out);
                write_slopes_csv(os, table);
            }
        } else if (*up) {
            std::ifstream is(up_ckpt, std::ios::binary);
            if (!is) throw ConfigError("cannot read checkpoint '" + up_ckpt + "'");
            const RunConfig cfg = parse_config(read_checkpoint_header(is));
            const Simulation sim = Simulation::resume(is, cfg.make_initial_condition());
            const auto r = upsample(sim, up_L);
            if (!up_grid.empty()) {
                auto os = open_or_throw(up_grid, true);
                write_grid_dump(os, DynamicsGrid(up_L), r.samples);
            }
            if (!up_spec.empty()) {
                auto os = open_or_throw(up_spec);
                os << run_header(cfg) << " upsampled_L=" << up_L << '\n';
                write_spectrum_csv(os, r.spectrum);
            }
            if (!up_zoom.empty()) {
                if (zoom.n < 1) throw ConfigError("--zoom needs --zoom-n >= 1");
                auto os = open_or_throw(up_zoom);
                write_zoom_csv(os, sim, zoom);
            }
            std::printf("L %d  max|zeta| %.6g  energy %.6g\n", r.L, r.max_abs, r.spectrum.total());
        } else if (*spec) {
            std::ifstream is(spec_in, std::ios::binary);
            if (!is) throw ConfigError("cannot read grid dump '" + spec_in + "'");
            int L = 0;
            const auto samples = read_grid_dump(is, L);
            const auto e = energy_spectrum(analysis(DynamicsGrid(L), samples));
            if (spec_out.empty()) {
                write_spectrum_csv(std::cout, e);
            } else {
                auto os = open_or_throw(spec_out);
                write_spectrum_csv(os, e);
            }
        } else if (*mesh) {
            if (mesh_level < 0) throw ConfigError("level must be >= 0");
            const auto tri = mesh_kind == "icosahedral"
                                 ? build_icosahedral(mesh_level)
                                 : build_latlon_grid_triangulation(DynamicsGrid(mesh_level).grid_index());
            if (mesh_out.empty()) {
                std::cout << tri.to_json() << '\n';
            } else {
                auto os = open_or_throw(mesh_out);
                os << tri.to_json() << '\n';
                std::printf("vertices %d  triangles %d  max_edge %.6g\n", tri.num_vertices(), tri.num_triangles(),
                            tri.max_edge_length());
            }
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfigError;
    } catch (const SolverAbort& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kSolverAbort;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
