#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "cmsphere/runner.hpp"
#include "json.hpp"

using namespace cmsphere;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& tag) {
    const auto p = fs::temp_directory_path() / ("cmsphere_runner_" + std::to_string(::getpid()) + "_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::string last_line(const std::string& s) {
    auto end = s.find_last_not_of('\n');
    auto begin = s.rfind('\n', end);
    return s.substr(begin + 1, end - begin);
}

RunConfig small_config(const std::string& name, const fs::path& dir) {
    RunConfig c = recommended_config(name);
    c.sim.k = 1;
    c.sim.L = 16;
    c.sim.dt = 0.0625;
    c.sim.T = 0.25;
    c.L_err = 32;
    c.output.directory = dir.string();
    c.output.spectra = "spectra.csv";
    c.spectrum_stride = 2;
    return c;
}

}  // namespace

TEST_CASE("config round trip") {
    for (const auto& name : case_names()) {
        const RunConfig c = recommended_config(name);
        CHECK(parse_config(to_json(c)) == c);
    }
    RunConfig c;
    c.case_name = "random";
    c.params.seed = 77;
    c.params.lmax = 12;
    c.sim.k = 2;
    c.sim.dt = 0.01;
    c.sim.T = 0.3;
    c.sim.remap_stride = 0;
    c.sim.omega = {0.1, 0.2, 0.3};
    c.L_err = 64;
    c.output.spectra = "s.csv";
    const RunConfig back = parse_config(to_json(c));
    CHECK(back == c);
    CHECK(back.sim.dt == 0.01);
    CHECK(back.params.seed == 77);
    CHECK(back.sim.omega.y == 0.2);

    const auto partial = parse_config(R"({"case": "zonal_jet", "k": 2})");
    CHECK(partial.sim.T == 0.5);
    CHECK(partial.sim.k == 2);
    CHECK(parse_config(R"({"case": "rotated_rh_wave"})").sim.omega.z == 0.0);
    CHECK(parse_config("{}").case_name == "rh_wave");
}

TEST_CASE("config rejects bad input") {
    CHECK_THROWS_AS(parse_config(R"({"kk": 3})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"case_params": {"bogus": 1}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"output": {"dir": "x"}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"k": 2.5})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"case": 3})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"omega": [1, 2]})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"dt": -1})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"case": "nope"})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"case": "rh_wave", "omega": [1, 0, 1]})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"case_params": {"seed": -4}})"), ConfigError);
    CHECK_THROWS_AS(parse_config("{"), ConfigError);
    CHECK_THROWS_AS(parse_config("[]"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("zero vorticity run reports zero errors") {
    const auto dir = scratch_dir("zero");
    auto c = small_config("zero", dir);
    c.sim.T = 0.5;
    const auto r = run_to_files(c);
    CHECK(r.steps == 8);
    const auto e = nlohmann::json::parse(slurp(dir / "errors.json"));
    CHECK(std::abs(e["vorticity_error"].get<double>()) <= 1e-12);
    CHECK(std::abs(e["enstrophy_error"].get<double>()) <= 1e-12);
    CHECK(std::abs(e["energy_error"].get<double>()) <= 1e-12);
    fs::remove_all(dir);
}

TEST_CASE("outputs, determinism and checkpoint reload") {
    const auto a = scratch_dir("a"), c = scratch_dir("c");
    const char* files[] = {"diagnostics.csv", "vorticity.cmgd", "checkpoint.cmck", "errors.json", "spectra.csv"};
    run_to_files(small_config("rh_wave", a));
    std::vector<std::string> first;
    for (const char* f : files) {
        REQUIRE(fs::exists(a / f));
        first.push_back(slurp(a / f));
    }
    run_to_files(small_config("rh_wave", a));
    for (int i = 0; i < 5; ++i) {
        CAPTURE(files[i]);
        CHECK(slurp(a / files[i]) == first[i]);
    }
    const auto diag = slurp(a / "diagnostics.csv");
    CHECK(diag.rfind("# cmsphere case=rh_wave k=1 L=16", 0) == 0);
    // Header, column names, t = 0, the bootstrap state and steps 3 and 4.
    CHECK(std::count(diag.begin(), diag.end(), '\n') == 6);

    OutputPaths out;
    out.directory = c.string();
    const auto r = resume_to_files((a / "checkpoint.cmck").string(), out);
    CHECK(r.steps == 4);
    const auto again = slurp(c / "diagnostics.csv");
    CHECK(last_line(again) == last_line(diag));
    CHECK(slurp(c / "vorticity.cmgd") == slurp(a / "vorticity.cmgd"));
    CHECK(slurp(c / "errors.json") == slurp(a / "errors.json"));
    CHECK(checkpoint_config((a / "checkpoint.cmck").string()).sim.T == 0.25);
    for (const auto& d : {a, c}) fs::remove_all(d);
}

TEST_CASE("upsampling") {
    RunConfig c = small_config("gaussian_vortex", fs::temp_directory_path());
    Simulation sim(c.sim, c.make_initial_condition());
    sim.run();
    const auto same = upsample(sim, c.sim.L);
    const auto run_spec = energy_spectrum(sim.vorticity_coefficients());
    REQUIRE(same.spectrum.energy.size() == run_spec.energy.size());
    for (std::size_t l = 0; l < run_spec.energy.size(); ++l)
        CHECK(std::abs(same.spectrum.energy[l] - run_spec.energy[l]) <= 1e-12 * run_spec.total());
    const auto fine = upsample(sim, 2 * c.sim.L);
    CHECK(fine.samples.size() == static_cast<std::size_t>(DynamicsGrid(32).size()));
    CHECK(fine.max_abs >= 0.9 * same.max_abs);

    std::ostringstream zoom;
    write_zoom_csv(zoom, sim, {1.0, 1.2, 0.2, 4});
    const auto text = zoom.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 17);
}

TEST_CASE("convergence table") {
    CHECK(convergence_order({1, 2, 3}, {1.0, 0.125, 0.015625}) == doctest::Approx(3.0));
    CHECK(convergence_order({1, 2}, {-0.5, 0.25}) == doctest::Approx(1.0));
    const auto s = refinement_level(SimConfig{}, 3);
    CHECK(s.L == 64);
    CHECK(s.dt == 1.0 / 32);

    RunConfig base = recommended_config("rh_wave");
    base.sim.T = 0.25;
    base.L_err = 32;
    const auto t = converge(base, 0, 1, {0, 2});
    CHECK(t.points.size() == 4);
    CHECK(t.slopes.size() == 6);
    CHECK(t.points[1].L == 16);
    CHECK(t.points[1].steps == 8);
    CHECK(t.points[1].dt == 0.03125);
    CHECK(std::isfinite(t.slope(2, "vorticity_error")));
    std::ostringstream os;
    write_convergence_csv(os, t);
    CHECK(os.str().find("rh_wave,inf,1,16,0.03125,8,") != std::string::npos);

    const auto g = converge(recommended_config("gaussian_vortex"), 0, 1, {0});
    CHECK(std::isnan(g.slope(0, "vorticity_error")));
    CHECK(std::isfinite(g.slope(0, "energy_error")));
}
