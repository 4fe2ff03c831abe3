#pragma once

#include <cmath>
#include <concepts>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "esb/errors.hpp"
#include "esb/fundamental.hpp"
#include "esb/history.hpp"

namespace esb {

template <std::floating_point S>
using DensityArray = Eigen::Array<S, Eigen::Dynamic, 1>;

/// Cell-averaged densities on [0, length]; cell i covers [i dx, (i + 1) dx].
template <std::floating_point S = double>
struct RoadState
{
    DensityArray<S> densities;
    S dx;
    S length;
    S t = S(0);

    static RoadState uniform(S length, S dx, S rho0)
    {
        if (!(length > S(0)) || !(dx > S(0))) {
            throw ConfigError("RoadState: length and dx must be positive");
        }
        const auto cells = static_cast<Eigen::Index>(std::llround(length / dx));
        if (cells < 1 || std::abs(static_cast<S>(cells) * dx - length) > S(1e-9) * length) {
            throw ConfigError("RoadState: dx must divide the segment length");
        }
        return {DensityArray<S>::Constant(cells, rho0), dx, length, S(0)};
    }

    Eigen::Index cells() const { return densities.size(); }
};

enum class OutletBoundary
{
    FreeOutflow,      ///< outlet flux = demand of the last cell
    BottleneckCoupled ///< outlet flux = min(demand, Q_B) of the last cell
};

/// Largest stable step for the explicit scheme, safety * dx / u_max.
template <std::floating_point S>
S cfl_dt(S dx, S u_max, S safety)
{
    if (!(dx > S(0)) || !(u_max > S(0))) throw ConfigError("cfl_dt: dx and u_max must be positive");
    if (!(safety > S(0) && safety < S(1))) throw ConfigError("cfl_dt: safety must lie in (0, 1)");
    return safety * dx / u_max;
}

template <std::floating_point S>
S outlet_density(const RoadState<S>& state)
{
    return state.densities[state.cells() - 1];
}

template <std::floating_point S>
S total_vehicles(const RoadState<S>& state)
{
    return state.dx * state.densities.sum();
}

/// Boundary fluxes of one step and any density clamping it required.
template <std::floating_point S>
struct StepFluxes
{
    S inflow = S(0);
    S outflow = S(0);
    int clamps = 0;
    S clamp_mass = S(0); ///< vehicles added (+) or removed (-) by clamping
};

/**
First-order Godunov scheme for the LWR conservation law rho_t + Q(rho)_x = 0.

Interface fluxes use the demand/supply form min(demand(left), supply(right)),
which is the exact Godunov flux for a concave Q. The inlet is a Dirichlet
density imposed through a ghost cell.
*/
template <FluxLaw Law>
class GodunovSolver
{
public:
    using S = typename Law::Scalar;

    GodunovSolver(Law law, OutletBoundary outlet, std::optional<BottleneckMap<S>> map, S dx, S dt)
        : law_(std::move(law)), outlet_(outlet), map_(std::move(map)), dx_(dx), dt_(dt)
    {
        if (!(dx > S(0)) || !(dt > S(0))) throw ConfigError("GodunovSolver: dx and dt must be positive");
        const S courant = law_.max_char_speed() * dt / dx;
        if (!(courant < S(1))) {
            throw ConfigError("GodunovSolver: CFL violated, u_max dt / dx = " + std::to_string(courant));
        }
        if (outlet_ == OutletBoundary::BottleneckCoupled && !map_) {
            throw ConfigError("GodunovSolver: coupled outlet requires a bottleneck map");
        }
    }

    const Law& law() const { return law_; }
    S dt() const { return dt_; }
    S dx() const { return dx_; }
    OutletBoundary outlet() const { return outlet_; }

    /// Advance state by one dt in place.
    StepFluxes<S> advance(RoadState<S>& state, S inlet_density)
    {
        if (std::abs(state.dx - dx_) > S(1e-12) * dx_) {
            throw ConfigError("GodunovSolver: state grid does not match solver dx");
        }
        const Eigen::Index n = state.cells();
        const S rho_c = law_.critical_density();
        const S rho_m = law_.max_density();
        auto& rho = state.densities;

        demand_ = rho.min(rho_c).unaryExpr([this](S r) { return law_.flux(r); });
        supply_ = rho.max(rho_c).unaryExpr([this](S r) { return law_.flux(r); });

        flux_.resize(n + 1);
        flux_[0] = std::min(demand(law_, inlet_density), supply_[0]);
        if (n > 1) flux_.segment(1, n - 1) = demand_.head(n - 1).min(supply_.tail(n - 1));
        flux_[n] = demand_[n - 1];
        if (outlet_ == OutletBoundary::BottleneckCoupled) {
            flux_[n] = std::min(flux_[n], map_->outflow(rho[n - 1]));
        }

        rho -= (dt_ / dx_) * (flux_.tail(n) - flux_.head(n));

        StepFluxes<S> out{flux_[0], flux_[n], 0, S(0)};
        if ((rho < S(0)).any() || (rho > rho_m).any()) {
            const ArrayS clamped = rho.max(S(0)).min(rho_m);
            out.clamps = static_cast<int>((clamped != rho).count());
            out.clamp_mass = dx_ * (clamped - rho).sum();
            rho = clamped;
        }
        state.t += dt_;
        return out;
    }

private:
    using ArrayS = DensityArray<S>;

    Law law_;
    OutletBoundary outlet_;
    std::optional<BottleneckMap<S>> map_;
    S dx_;
    S dt_;
    ArrayS demand_;
    ArrayS supply_;
    ArrayS flux_;
};

/// Value-semantics single step; builds a solver for the call.
template <FluxLaw Law>
RoadState<typename Law::Scalar> godunov_step(RoadState<typename Law::Scalar> state,
                                             typename Law::Scalar inlet_density,
                                             OutletBoundary outlet, const Law& law,
                                             const BottleneckMap<typename Law::Scalar>& map,
                                             typename Law::Scalar dt)
{
    GodunovSolver<Law> solver(law, outlet, map, state.dx, dt);
    solver.advance(state, inlet_density);
    return state;
}

/// Ramp-metering flow and VSL speed that jointly realize an inlet density.
template <std::floating_point S>
struct InletActuation
{
    S q_in;
    S v_c;
};

template <std::floating_point S>
InletActuation<S> implied_actuation(S inlet_density, S vsl_speed)
{
    if (!(vsl_speed > S(0))) throw ConfigError("implied_actuation: VSL speed must be positive");
    return {inlet_density * vsl_speed, vsl_speed};
}

/**
Exact linear-transport plant: the outlet reproduces the inlet density D seconds
later. One sample per dt; non-integer D / dt is linearly interpolated.
*/
template <std::floating_point S = double>
class DelayLinePlant
{
public:
    DelayLinePlant(S delay, S dt, S initial_density)
        : delay_(delay), history_(dt, delay, initial_density)
    {
        if (!(delay >= S(0))) throw ConfigError("DelayLinePlant: delay must be non-negative");
    }

    S delay() const { return delay_; }
    S time() const { return static_cast<S>(history_.size()) * history_.dt(); }

    /// Outlet density at the current time from inputs already applied.
    S outlet_density() const { return history_.value_at(time() - delay_); }

    /// Apply an inlet density at the current time, return the outlet at that time, advance dt.
    S step(S inlet_density)
    {
        const S t = time();
        history_.push(inlet_density);
        return history_.value_at(t - delay_);
    }

    /// Vehicles in transit for transport speed `speed`: integral of rho over [0, L].
    S vehicles_in_transit(S speed) const
    {
        const S t = history_.latest_time();
        if (t < S(0)) return speed * delay_ * history_.initial_value();
        return speed * history_.integral(t - delay_, t);
    }

private:
    S delay_;
    SampledHistory<S> history_;
};

} // namespace esb
