#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <numbers>
#include <string>

#include "esb/errors.hpp"
#include "esb/history.hpp"

namespace esb {

/**
Tuning of the delay-compensated extremum-seeking loop.

`washout` is the corner (rad/s) of a first-order high-pass applied to the
measured flow before demodulation; zero feeds the raw measurement through.
*/
template <std::floating_point S = double>
struct EsParams
{
    S a = S(0.05);                          ///< dither amplitude, vehicles/m
    S omega = S(2.75) * std::numbers::pi_v<S>; ///< dither frequency, rad/s
    S k = S(0.005);                         ///< control gain
    S c = S(50);                            ///< low-pass corner, 1/s
    S delay = S(5);                         ///< actuation delay D, s
    S washout = S(1);                       ///< high-pass corner on q_out, rad/s

    void validate() const
    {
        if (!(a >= S(0))) throw ConfigError("EsParams: a must be non-negative");
        if (!(omega > S(0))) throw ConfigError("EsParams: omega must be positive");
        if (!(k > S(0))) throw ConfigError("EsParams: k must be positive");
        if (!(c > S(0))) throw ConfigError("EsParams: c must be positive");
        if (!(delay >= S(0))) throw ConfigError("EsParams: delay must be non-negative");
        if (!(washout >= S(0))) throw ConfigError("EsParams: washout must be non-negative");
    }

    S period() const { return S(2) * std::numbers::pi_v<S> / omega; }
};

/// Gradient demodulation signal (2/a) sin(omega t); zero when a = 0 (excitation off).
template <std::floating_point S>
S dither_M(S t, const EsParams<S>& p)
{
    if (p.a == S(0)) return S(0);
    return (S(2) / p.a) * std::sin(p.omega * t);
}

/// Hessian demodulation signal -(8/a^2) cos(2 omega t); zero when a = 0.
template <std::floating_point S>
S dither_N(S t, const EsParams<S>& p)
{
    if (p.a == S(0)) return S(0);
    return -(S(8) / (p.a * p.a)) * std::cos(S(2) * p.omega * t);
}

/// Delay-advanced perturbation a sin(omega (t + D)) added to the estimate.
template <std::floating_point S>
S perturbation_S(S t, const EsParams<S>& p)
{
    return p.a * std::sin(p.omega * (t + p.delay));
}

template <std::floating_point S>
S gradient_estimate(S q_out, S t, const EsParams<S>& p)
{
    return dither_M(t, p) * q_out;
}

template <std::floating_point S>
S hessian_estimate(S q_out, S t, const EsParams<S>& p)
{
    return dither_N(t, p) * q_out;
}

/// One explicit-Euler step of U' = -c U + c k (G + H_hat I).
template <std::floating_point S>
S filtered_control_update(S u, S gradient, S hessian, S predictor, const EsParams<S>& p, S dt)
{
    return u + dt * (-p.c * u + p.c * p.k * (gradient + hessian * predictor));
}

template <std::floating_point S = double>
struct EsControllerState
{
    S rho_hat;               ///< estimate of the optimal density
    S u_ctrl;                ///< filtered control U = d(rho_hat)/dt
    SampledHistory<S> u_history; ///< U over [t - D, t]
    S washout_level;         ///< low-passed q_out subtracted by the washout
    long long steps = 0;
    bool primed = false;     ///< washout seeded from the first measurement

    S time() const { return static_cast<S>(steps) * u_history.dt(); }
};

/// Trapezoidal integral of U over the last D seconds.
template <std::floating_point S>
S predictor_integral(const EsControllerState<S>& state, S delay)
{
    const S t = state.u_history.latest_time();
    return state.u_history.integral(t - delay, t);
}

/// Everything one controller step computed; the applied density drives the plant.
template <std::floating_point S>
struct ControllerOutput
{
    S applied;    ///< inlet density commanded for [t, t + dt)
    S rho_hat;
    S gradient;   ///< G
    S hessian;    ///< H_hat
    S predictor;  ///< integral of U over the delay window
    S u_ctrl;     ///< U at t
    bool clamped;
};

/**
Gradient extremum seeker with predictor-based delay compensation.

The only plant input is the scalar flow measurement; the controller never
sees the bottleneck optimum or curvature. Each step at time t:
demodulate q_out into G and H_hat, integrate U over [t - D, t], command
rho_hat + S(t), then advance U (first-order filter) and rho_hat (integrator).
*/
template <std::floating_point S = double>
class EsController
{
public:
    EsController(EsParams<S> params, S dt, S rho_hat0, S applied_max, S u_history0 = S(0))
        : p_(params),
          dt_(dt),
          applied_max_(applied_max),
          state_{rho_hat0, u_history0, SampledHistory<S>(dt, params.delay, u_history0), S(0)}
    {
        p_.validate();
        if (!(dt > S(0))) throw ConfigError("EsController: dt must be positive");
        if (!(dt * p_.c < S(2))) {
            throw ConfigError("EsController: filter unstable, dt * c = " + std::to_string(dt * p_.c));
        }
        if (!(dt * p_.omega < S(0.5))) {
            throw ConfigError("EsController: dither under-resolved, dt * omega = "
                              + std::to_string(dt * p_.omega));
        }
        if (!(dt * p_.washout < S(2))) throw ConfigError("EsController: washout unstable for dt");
        if (!(applied_max > S(0))) throw ConfigError("EsController: applied density bound must be positive");
        state_.u_history.push(u_history0);
    }

    const EsParams<S>& params() const { return p_; }
    const EsControllerState<S>& state() const { return state_; }
    S dt() const { return dt_; }
    long long clamp_events() const { return clamps_; }

    ControllerOutput<S> step(S q_out)
    {
        const S t = state_.time();
        if (!state_.primed) {
            state_.washout_level = q_out;
            state_.primed = true;
        }
        const S measured = p_.washout > S(0) ? q_out - state_.washout_level : q_out;

        ControllerOutput<S> out{};
        out.gradient = gradient_estimate(measured, t, p_);
        out.hessian = hessian_estimate(measured, t, p_);
        out.predictor = predictor_integral(state_, p_.delay);
        out.u_ctrl = state_.u_ctrl;
        out.rho_hat = state_.rho_hat;

        const S raw = state_.rho_hat + perturbation_S(t, p_);
        out.applied = std::clamp(raw, S(0), applied_max_);
        out.clamped = out.applied != raw;
        if (out.clamped) ++clamps_;

        const S u_next = filtered_control_update(state_.u_ctrl, out.gradient, out.hessian,
                                                 out.predictor, p_, dt_);
        state_.rho_hat += dt_ * state_.u_ctrl;
        state_.u_ctrl = u_next;
        state_.washout_level += dt_ * p_.washout * (q_out - state_.washout_level);
        state_.u_history.push(u_next);
        ++state_.steps;
        return out;
    }

private:
    EsParams<S> p_;
    S dt_;
    S applied_max_;
    EsControllerState<S> state_;
    long long clamps_ = 0;
};

} // namespace esb
