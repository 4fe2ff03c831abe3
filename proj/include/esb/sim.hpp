#pragma once

#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "esb/escontrol.hpp"
#include "esb/fundamental.hpp"
#include "esb/lwr.hpp"

namespace esb {

enum class PlantKind
{
    NonlinearLwr,
    PureDelay
};

enum class ScenarioKind
{
    Ramp,    ///< inlet density ramps linearly over the run
    Constant ///< inlet density held fixed
};

/// Inlet forcing of an uncontrolled run.
struct OpenLoopScenario
{
    ScenarioKind kind = ScenarioKind::Ramp;
    std::optional<double> rho_start;  ///< ramp start, default rho_r
    std::optional<double> rho_end;    ///< ramp end, default 0.9 rho_m
    std::optional<double> rho_const;  ///< constant level, default rho_r
    std::optional<OutletBoundary> outlet; ///< default coupled for Ramp, free for Constant
};

/// Every knob of a run. Defaults reproduce the reference experiment.
struct SimConfig
{
    // upstream Greenshield section
    double v_f = 40.0;
    double rho_m = 0.8;
    // bottleneck, by capacity drop or explicitly (all three or none)
    double capacity_ratio = 0.6;
    double reduced_jam_density = 0.48;
    std::optional<double> q_star;
    std::optional<double> rho_star;
    std::optional<double> hessian;
    // geometry and linearization
    double length = 100.0;
    double dx = 0.05;
    double rho_r = 0.2;
    // controller
    double a = 0.05;
    double omega = 2.75 * std::numbers::pi;
    double k = 0.005;
    double c = 50.0;
    double washout = 1.0;
    std::optional<double> controller_delay; ///< default L / Q'(rho_r)
    double density_margin = 0.02;           ///< applied density <= rho_c - margin
    double rho_hat0 = 0.12;
    double u_history0 = 0.0;
    // timing
    double t_end = 100.0;
    std::optional<double> dt; ///< default from cfl_safety
    double cfl_safety = 0.8;
    double sample_dt = 0.01;
    // plant
    PlantKind plant = PlantKind::NonlinearLwr;
    OutletBoundary outlet = OutletBoundary::FreeOutflow;
    std::optional<double> rho0; ///< uniform initial density / inlet history, default rho_r
    double vsl_speed = 30.0;    ///< VSL speed used to report the implied metering flow
    OpenLoopScenario scenario;
};

/// Validated physical objects derived from a SimConfig.
struct Model
{
    Greenshield<double> law;
    BottleneckMap<double> map;
    ReferencePoint<double> ref;
    double dt;
    double controller_delay;
    double rho0;
    long long steps;
    long long stride;
    EsParams<double> es;
};

/// Throws ConfigError on any invalid or inconsistent field.
Model build_model(const SimConfig& cfg);

struct Sample
{
    double t;
    double rho_in;
    double rho_out;
    double q_out;
    double G;
    double H_hat;
    double U;
    double total_veh;
    long long clamps; ///< cumulative clamp events (solver + controller)
    double rho_hat;   ///< estimate; not part of the CSV layout
};

enum class RunStatus
{
    Completed,
    Diverged
};

struct RunRecord
{
    std::vector<Sample> rows;
    RunStatus status = RunStatus::Completed;
    std::string diagnostic;
    std::vector<std::pair<std::string, std::string>> config_echo;
    std::string version;
    double wall_seconds = 0.0;
    // conservation audit over the whole run (LWR plant)
    double initial_vehicles = 0.0;
    double final_vehicles = 0.0;
    double net_boundary_inflow = 0.0; ///< sum of dt (F_in - F_out)
    double clamp_mass = 0.0;
    long long solver_clamps = 0;
    long long controller_clamps = 0;
    double mean_metered_flow = 0.0; ///< mean q_in = rho_in * vsl_speed
};

struct OracleSample
{
    double t;
    double e_av;     ///< averaged estimation error
    double u_av;     ///< averaged control
    double theta_av; ///< e_av(t - D)
};

struct OracleRecord
{
    std::vector<OracleSample> rows;
    std::vector<std::pair<std::string, std::string>> config_echo;
    std::string version;
    double hessian = 0.0;
    double gain = 0.0;
    double delay = 0.0;
};

RunRecord run_closed_loop(const SimConfig& cfg);
RunRecord run_open_loop(const SimConfig& cfg, const OpenLoopScenario& scenario);
inline RunRecord run_open_loop(const SimConfig& cfg) { return run_open_loop(cfg, cfg.scenario); }

/**
Period-averaged closed loop with the true curvature H:
e' = U, U' = -c U + c k H (e(t - D) + integral of U over [t - D, t]).
*/
OracleRecord run_averaged_oracle(const SimConfig& cfg);

std::string version_tag();

} // namespace esb
