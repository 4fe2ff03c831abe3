#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <string>

#include "esb/errors.hpp"

namespace esb {

/**
Equilibrium flow-density law of a road section.

A law must be C2 and strictly concave on [0, max_density()], with flux zero at
both ends, so that it has a single critical density separating free flow
(positive characteristic speed) from congestion. Greenshield is the only
shipped model; any user type meeting this concept plugs into the solver.
*/
template <typename Law>
concept FluxLaw = requires(const Law& law, typename Law::Scalar rho) {
    typename Law::Scalar;
    { law.flux(rho) } -> std::convertible_to<typename Law::Scalar>;
    { law.char_speed(rho) } -> std::convertible_to<typename Law::Scalar>;
    { law.critical_density() } -> std::convertible_to<typename Law::Scalar>;
    { law.max_density() } -> std::convertible_to<typename Law::Scalar>;
    { law.max_char_speed() } -> std::convertible_to<typename Law::Scalar>;
};

namespace detail {

template <std::floating_point S>
inline void require_density(S rho, S rho_max, const char* what)
{
    if (!(rho >= S(0) && rho <= rho_max)) {
        throw DomainError(std::string(what) + ": density " + std::to_string(rho)
                          + " outside [0, " + std::to_string(rho_max) + "]");
    }
}

} // namespace detail

/**
Greenshield model: linear speed-density relation V = v_f (1 - rho / rho_m),
quadratic flux Q = rho V.
*/
template <std::floating_point S = double>
class Greenshield
{
public:
    using Scalar = S;

    Greenshield(S free_speed, S jam_density) : v_f_(free_speed), rho_m_(jam_density)
    {
        if (!(free_speed > S(0)) || !(jam_density > S(0))) {
            throw ConfigError("Greenshield: free speed and jam density must be positive");
        }
    }

    S free_speed() const { return v_f_; }
    S max_density() const { return rho_m_; }
    S critical_density() const { return rho_m_ / S(2); }
    S capacity() const { return v_f_ * rho_m_ / S(4); }
    S max_char_speed() const { return v_f_; }

    S velocity(S rho) const
    {
        detail::require_density(rho, rho_m_, "velocity");
        return v_f_ * (S(1) - rho / rho_m_);
    }

    S flux(S rho) const
    {
        detail::require_density(rho, rho_m_, "flux");
        return rho * v_f_ * (S(1) - rho / rho_m_);
    }

    /// Q'(rho); positive in free flow, negative in congestion.
    S char_speed(S rho) const
    {
        detail::require_density(rho, rho_m_, "char_speed");
        return v_f_ * (S(1) - S(2) * rho / rho_m_);
    }

    /// Q'' (constant for the quadratic flux).
    S curvature() const { return S(-2) * v_f_ / rho_m_; }

private:
    S v_f_;
    S rho_m_;
};

/// Maximum flow a cell at density rho can send downstream.
template <FluxLaw Law>
auto demand(const Law& law, typename Law::Scalar rho)
{
    detail::require_density(rho, law.max_density(), "demand");
    return law.flux(std::min(rho, law.critical_density()));
}

/// Maximum flow a cell at density rho can receive from upstream.
template <FluxLaw Law>
auto supply(const Law& law, typename Law::Scalar rho)
{
    detail::require_density(rho, law.max_density(), "supply");
    return law.flux(std::max(rho, law.critical_density()));
}

/// Free functions mirroring the member API, for expression-style call sites.
template <std::floating_point S>
S velocity(const Greenshield<S>& law, S rho) { return law.velocity(rho); }

template <std::floating_point S>
S flux(const Greenshield<S>& law, S rho) { return law.flux(rho); }

template <std::floating_point S>
S char_speed(const Greenshield<S>& law, S rho) { return law.char_speed(rho); }

/**
Quadratic static map of the bottleneck zone,

    Q_B(rho) = q_star + (hessian / 2) (rho - rho_star)^2.

Known to the simulator only; the controller sees nothing but its output.
*/
template <std::floating_point S = double>
class BottleneckMap
{
public:
    using Scalar = S;

    BottleneckMap(S q_star, S rho_star, S hessian)
        : q_star_(q_star), rho_star_(rho_star), hessian_(hessian)
    {
        if (!(q_star > S(0))) throw ConfigError("BottleneckMap: q_star must be positive");
        if (!(rho_star > S(0))) throw ConfigError("BottleneckMap: rho_star must be positive");
        if (!(hessian < S(0))) throw ConfigError("BottleneckMap: hessian must be negative");
    }

    /**
    Capacity drop C_d of an upstream Greenshield section with the same free
    speed and a reduced jam density: Q_B = C_d-scaled parabola with maximum at
    varrho_m / 2.
    */
    template <FluxLaw Law>
    static BottleneckMap from_capacity_drop(const Law& upstream, S capacity_ratio,
                                            S reduced_jam_density)
    {
        if (!(capacity_ratio > S(0) && capacity_ratio <= S(1))) {
            throw ConfigError("BottleneckMap: capacity ratio must lie in (0, 1]");
        }
        if (!(reduced_jam_density > S(0))) {
            throw ConfigError("BottleneckMap: reduced jam density must be positive");
        }
        const S rho_c = upstream.critical_density();
        const S q_c = upstream.flux(rho_c);
        BottleneckMap map(capacity_ratio * q_c, reduced_jam_density / S(2),
                          S(-2) * upstream.max_char_speed() / reduced_jam_density);
        map.check_against(upstream);
        return map;
    }

    /// The bottleneck optimum must sit in the free regime of the upstream law.
    template <FluxLaw Law>
    void check_against(const Law& upstream) const
    {
        if (!(rho_star_ < upstream.critical_density())) {
            throw ConfigError("BottleneckMap: rho_star must be below the upstream critical density");
        }
    }

    S q_star() const { return q_star_; }
    S rho_star() const { return rho_star_; }
    S hessian() const { return hessian_; }

    /// Discharged flow for an outlet density; floored at zero.
    S outflow(S rho_out) const
    {
        if (!(rho_out >= S(0))) {
            throw DomainError("bottleneck outflow: negative outlet density");
        }
        const S d = rho_out - rho_star_;
        return std::max(S(0), q_star_ + S(0.5) * hessian_ * d * d);
    }

private:
    S q_star_;
    S rho_star_;
    S hessian_;
};

template <std::floating_point S>
S bottleneck_outflow(const BottleneckMap<S>& map, S rho_out) { return map.outflow(rho_out); }

/// Linearization point of the upstream section and the transport delay it implies.
template <std::floating_point S = double>
struct ReferencePoint
{
    S rho_r;
    S q_r;
    S u;      ///< characteristic speed Q'(rho_r)
    S length;
    S delay;  ///< length / u
};

template <FluxLaw Law>
ReferencePoint<typename Law::Scalar> reference_from(const Law& law, typename Law::Scalar rho_r,
                                                    typename Law::Scalar length)
{
    using S = typename Law::Scalar;
    if (!(length > S(0))) throw ConfigError("reference_from: segment length must be positive");
    if (!(rho_r > S(0) && rho_r < law.critical_density())) {
        throw DomainError("reference_from: reference density must lie in the free regime (0, rho_c)");
    }
    const S u = law.char_speed(rho_r);
    return {rho_r, law.flux(rho_r), u, length, length / u};
}

} // namespace esb
