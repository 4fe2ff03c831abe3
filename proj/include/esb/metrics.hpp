#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "esb/sim.hpp"

namespace esb {

/// Entry into a band around a target plus trailing-window statistics.
struct ConvergenceReport
{
    bool converged = false;
    double entry_time = 0.0; ///< first time after which the series stays in band
    double center = 0.0;
    double halfwidth = 0.0;
    double window = 0.0;
    double trailing_mean = 0.0;
    double trailing_ripple = 0.0;        ///< peak-to-peak over the window
    double trailing_max_deviation = 0.0; ///< max |v - center| over the window
};

ConvergenceReport band_convergence(std::span<const double> t, std::span<const double> v,
                                   double center, double halfwidth, double trailing_window);

/// Least-squares slope of log|v| against t over t_start <= t <= t_stop.
double exp_rate_fit(std::span<const double> t, std::span<const double> v, double t_start,
                    double t_stop = std::numeric_limits<double>::infinity());

/// Moving average over one period (integral of the linear interpolant / window); centered
/// except within half a period of either end, where the window is shifted inward.
std::vector<double> period_average(std::span<const double> t, std::span<const double> v,
                                   double period);

/// Time average of the linear interpolant over the last `window` seconds (clipped to the series).
double trailing_mean(std::span<const double> t, std::span<const double> v, double window);

/// Default trailing window: ten dither periods.
double trailing_window(const SimConfig& cfg, double periods = 10.0);

/// Column extraction from a RunRecord.
std::vector<double> column(const RunRecord& rec, double Sample::*field);

struct ScalingCell
{
    double a = 0.0;
    double omega = 0.0;
    bool converged = false;
    double entry_time = 0.0;
    double residual_rho = 0.0; ///< |trailing mean of applied density - rho*|
    double residual_q = 0.0;   ///< |trailing mean of q_out - q*|
    std::string note;
    RunRecord record;
};

struct ScalingRatio
{
    double fixed = 0.0; ///< the parameter held constant
    double from = 0.0;
    double to = 0.0;
    double ratio = 0.0; ///< residual(to) / residual(from)
};

struct ScalingTable
{
    std::vector<ScalingCell> cells;
    std::vector<ScalingRatio> a_halving;      ///< residual_q, a -> a/2 at fixed omega
    std::vector<ScalingRatio> omega_doubling; ///< residual_rho, omega -> 2 omega at fixed a
};

/**
Runs the closed loop on the grid a_values x omega_values. A cell converges when
the estimate enters and stays within rho* +- band_halfwidth; non-converged
cells are excluded from the ratios.
*/
ScalingTable scaling_study(const SimConfig& base, std::span<const double> a_values,
                           std::span<const double> omega_values, unsigned jobs = 1,
                           double band_halfwidth = 0.02);

using Report = std::vector<std::pair<std::string, std::string>>;

/// Diagnostics of a closed-loop or open-loop record; uses only CSV columns.
Report run_report(const SimConfig& cfg, const RunRecord& rec);
Report oracle_report(const SimConfig& cfg, const OracleRecord& rec);
Report scaling_report(const ScalingTable& table);

} // namespace esb
