// Orchestration: per-eps pipeline runs, log-log rate fits, the inviscid-limit
// corollary surrogates, and machine-readable reports.
#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "blayer/assembly.hpp"
#include "blayer/problem_data.hpp"
#include "blayer/remainder.hpp"

#include "json.hpp"

namespace blayer {

struct GridSpec {
    int nx = 65;
    int ny = 257;
    double Ymax = 20.0;
    StretchSpec stretch;  // y stretching of the layer grid (default uniform)
};

struct RunConfig {
    std::vector<double> eps_list = {4e-3, 2e-3, 1e-3, 5e-4};
    ProblemData base;  // eps field is overwritten per run
    GridSpec grid;
    int euler_nz = 257;
    double euler_Zmax = 10.0;
    int rem_ncx = 64;
    int rem_ncy = 96;
    double C_energy = 10.0;
    double C_vort = 20.0;
    bool auto_compat = true;
    bool warm_inflow = false;  // only used when x_margin == 0
    /// Profile solves run on [-m L, (1+m) L] and are restricted to [0, L];
    /// the elliptic corners and data-compatibility transients then sit
    /// outside the physical window. 0 disables (module-surface semantics).
    double x_margin = 1.0;
    bool skip_remainder = false;
    bool force = false;
    double remainder_eps_min = 5e-4;
    std::optional<std::filesystem::path> out_dir;

    ProblemData make_pd(double eps) const {
        ProblemData pd = base;
        pd.eps = eps;
        return pd;
    }
    static RunConfig defaults();
    static RunConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct RemainderRecord {
    bool attempted = false;
    bool converged = false;
    bool diverged = false;
    int iterations = 0;
    double contraction_ratio = 0.0;
    double x_norm = 0.0;
    double grad_eps_u = 0.0, grad_eps_v = 0.0;
    double sup_u = 0.0, sup_v = 0.0;
    double div_max = 0.0;
    double sup_u_diff = 0.0;  // sup |U - u_e^0 - u_p^0| over staggered points
    double sup_v_diff = 0.0;  // sup |V - se v_p^0 - se v_e^1| in original scale
};

struct PipelineRecord {
    double eps = 0.0;
    bool ok = false;
    std::string error;  // stage-labelled message when !ok
    bool validation_pass = false;
    double nozero_margin = 0.0;
    double min_W = 0.0;
    double max_principle_margin = 0.0;
    double compat_margin0 = 0.0, compat_marginL = 0.0;
    double N0 = 0.0, N1 = 0.0;
    double euler_theta0 = 0.0;
    double prandtl1_outer_resid = 0.0;
    int prandtl1_outer_iters = 0;
    double wall_defect = 0.0;
    double norm_Ru = 0.0, norm_Rv = 0.0, combined = 0.0;
    std::map<std::string, double> budget;
    double refine_drift = -1.0;  // filled by the sweep's resolution gate
    RemainderRecord rem;
    double wall_seconds = 0.0;
};

/// All constructed profiles for one eps, restricted to the physical grid.
/// Grids are heap-held so the contained fields stay valid across moves.
struct ProfileBundle {
    std::shared_ptr<Grid2D> grid;      // physical layer grid
    std::shared_ptr<Grid2D> grid_ext;  // march domain (== grid when x_margin = 0)
    std::shared_ptr<Grid2D> gz;        // Euler (x,z) grid over the march domain
    ProblemData pd;                    // eps-instantiated, compat-adjusted, L physical
    PrandtlLayer0 layer0;              // fields on *grid
    EulerCorrector ec;                 // on *gz
    EulerSampled eul;                  // on *grid
    PrandtlCorrector1 corr1;           // on *grid
};

/// validate -> zeroth-order march -> Euler corrector -> first-order corrector,
/// all on the x-extended domain, restricted to [0, L]. Fills record fields
/// when `rec` is given.
ProfileBundle build_profiles(const RunConfig& cfg, double eps,
                             PipelineRecord* rec = nullptr);

/// build_profiles -> assemble -> residuals (-> nonlinear remainder unless
/// skipped); writes artifacts when out_dir set.
PipelineRecord run_pipeline(const RunConfig& cfg, double eps);

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    int points_used = 0;
};

/// Least-squares fit of log(value) against log(eps). Non-positive values are
/// excluded; fewer than 3 usable points is an error.
RateFit fit_rate(const std::vector<std::pair<double, double>>& points);

struct ConvergenceReport {
    std::vector<PipelineRecord> records;  // sorted by decreasing eps
    std::map<std::string, RateFit> fits;
    nlohmann::json config_echo;
    double wall_seconds = 0.0;
};

/// Run every eps (parallel across a small pool; BLAYER_THREADS caps it), fit
/// the residual and budget exponents, and apply the refinement-drift gate at
/// the smallest eps. Per-eps failures are recorded, not propagated.
ConvergenceReport run_sweep(const RunConfig& cfg);

/// Fits of the corollary sup-differences over the records whose remainder
/// iteration converged; empty when fewer than 3 converged.
std::map<std::string, RateFit> corollary_check(const std::vector<PipelineRecord>& records);

/// report.json, summary.csv (one row per eps), fits.csv, and gnuplot-ready
/// .dat files under out_dir.
void emit_report(const ConvergenceReport& report, const std::filesystem::path& out_dir);

nlohmann::json record_to_json(const PipelineRecord& r);

}  // namespace blayer
