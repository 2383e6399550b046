#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cmsphere/cases.hpp"
#include "cmsphere/dynamics.hpp"

namespace cmsphere {

/// Output file names relative to `directory`; an empty name disables the file.
struct OutputPaths {
    std::string directory = ".";
    std::string diagnostics = "diagnostics.csv";
    std::string grid = "vorticity.cmgd";
    std::string checkpoint = "checkpoint.cmck";
    std::string errors = "errors.json";
    std::string spectra;  // energy spectra every spectrum_stride steps

    std::string path(const std::string& name) const;
};

/// Everything a batch run needs. Stored as JSON; see the README for the schema.
struct RunConfig {
    std::string case_name = "rh_wave";
    CaseParams params;
    SimConfig sim;
    int L_err = 256;
    int diagnostic_stride = 1;
    int spectrum_stride = 0;
    OutputPaths output;

    /// Throws ConfigError.
    void validate() const;
    VorticityCase make_initial_condition() const;
};

/// Defaults for a case: rotated_rh_wave runs without rotation, zonal_jet to T = 0.5.
RunConfig recommended_config(const std::string& case_name);

/// Throws ConfigError on unknown keys, wrong types or invalid values.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);
/// Canonical JSON with every field present.
std::string to_json(const RunConfig& cfg);
bool operator==(const RunConfig& a, const RunConfig& b);

/// Comment line recording the run scale, written at the top of every CSV.
std::string run_header(const RunConfig& cfg);

void write_diagnostics_header(std::ostream& os);
void write_diagnostics_row(std::ostream& os, const Diagnostics& d);
std::string errors_json(const ErrorReport& e, int L_err);

struct RunSummary {
    Diagnostics final;
    ErrorReport errors;
    bool has_errors = false;
    int steps = 0;
};

/// Runs to the final time and writes the enabled outputs. Solver failures
/// propagate as SolverAbort.
RunSummary run_to_files(const RunConfig& cfg);
/// Continues a checkpoint to its final time and writes the outputs of `out`.
RunSummary resume_to_files(const std::string& checkpoint, const OutputPaths& out);

/// Initial condition and configuration stored in a checkpoint header.
RunConfig checkpoint_config(const std::string& checkpoint);

/// Refinement coupling: L = 2^(k+3) and N_t = 2^(k+2) steps over base.T.
SimConfig refinement_level(const SimConfig& base, int k);

struct ConvergencePoint {
    int stride = 0;
    int k = 0;
    int L = 0;
    double dt = 0.0;
    int steps = 0;
    ErrorReport errors;
    double map_error() const;  // sup vorticity error / Lip(omega0)
};

struct ConvergenceSlope {
    int stride = 0;
    std::string quantity;
    double slope = 0.0;
};

struct ConvergenceTable {
    std::string case_name;
    std::vector<ConvergencePoint> points;
    std::vector<ConvergenceSlope> slopes;

    double slope(int stride, const std::string& quantity) const;
};

/// Least-squares log-log slope of |y| against h = 2^-k, sign flipped so
/// that a positive value means convergence.
double convergence_order(const std::vector<int>& k, const std::vector<double>& y);

/// Sweep k in [k_min, k_max] for every stride (0 = no remapping).
ConvergenceTable converge(const RunConfig& base, int k_min, int k_max, const std::vector<int>& strides);
void write_convergence_csv(std::ostream& os, const ConvergenceTable& t);
void write_slopes_csv(std::ostream& os, const ConvergenceTable& t);

struct ZoomWindow {
    double lon = 0.0, colat = 0.0;  // centre
    double width = 0.1;             // radians in both directions
    int n = 0;                      // samples per side; 0 disables
};

struct UpsampleResult {
    int L = 0;
    std::vector<double> samples;  // relative vorticity on the Gauss-Legendre grid
    EnergySpectrum spectrum;
    double max_abs = 0.0;
};

/// Samples the pulled-back vorticity of a simulation on a grid of any band-limit.
UpsampleResult upsample(const Simulation& sim, int L_target);
void write_zoom_csv(std::ostream& os, const Simulation& sim, const ZoomWindow& w);

}  // namespace cmsphere
