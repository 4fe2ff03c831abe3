#include "esb/sim.hpp"

#include <chrono>
#include <cmath>
#include <variant>

#include "esb/config.hpp"

namespace esb {

std::string version_tag() { return "esb 1.0.0"; }

namespace {

Model build_model_checked(const SimConfig& cfg)
{
    Greenshield<double> law(cfg.v_f, cfg.rho_m);

    const bool explicit_map = cfg.q_star || cfg.rho_star || cfg.hessian;
    if (explicit_map && !(cfg.q_star && cfg.rho_star && cfg.hessian)) {
        throw ConfigError("bottleneck: q_star, rho_star and hessian must be given together");
    }
    auto map = explicit_map ? BottleneckMap<double>(*cfg.q_star, *cfg.rho_star, *cfg.hessian)
                            : BottleneckMap<double>::from_capacity_drop(law, cfg.capacity_ratio,
                                                                        cfg.reduced_jam_density);
    map.check_against(law);

    const auto ref = reference_from(law, cfg.rho_r, cfg.length);

    if (!(cfg.t_end > 0.0)) throw ConfigError("t_end must be positive");
    if (!(cfg.sample_dt > 0.0)) throw ConfigError("sample_dt must be positive");
    if (!(cfg.density_margin >= 0.0 && cfg.density_margin < law.critical_density())) {
        throw ConfigError("density_margin must lie in [0, rho_c)");
    }
    if (!std::isfinite(cfg.rho_hat0)) throw ConfigError("rho_hat0 must be finite");

    // RoadState validates the grid
    (void)RoadState<double>::uniform(cfg.length, cfg.dx, 0.0);

    const double dt = cfg.dt ? *cfg.dt : cfl_dt(cfg.dx, law.max_char_speed(), cfg.cfl_safety);
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (cfg.plant == PlantKind::NonlinearLwr && !(law.max_char_speed() * dt / cfg.dx < 1.0)) {
        throw ConfigError("dt violates the CFL condition for dx");
    }

    const double rho0 = cfg.rho0 ? *cfg.rho0 : cfg.rho_r;
    if (!(rho0 >= 0.0 && rho0 <= law.max_density())) throw ConfigError("rho0 outside [0, rho_m]");
    if (!(cfg.vsl_speed > 0.0)) throw ConfigError("vsl_speed must be positive");

    const double delay = cfg.controller_delay ? *cfg.controller_delay : ref.delay;

    EsParams<double> es{cfg.a, cfg.omega, cfg.k, cfg.c, delay, cfg.washout};
    es.validate();
    if (!(dt * cfg.c < 2.0)) throw ConfigError("dt * c must be below 2");
    if (!(dt * cfg.omega < 0.5)) throw ConfigError("dt * omega must be below 0.5");
    if (!(dt * cfg.washout < 2.0)) throw ConfigError("dt * washout must be below 2");

    const auto steps = static_cast<long long>(std::llround(cfg.t_end / dt));
    const auto stride = std::max<long long>(1, std::llround(cfg.sample_dt / dt));
    return {law, map, ref, dt, delay, rho0, steps, stride, es};
}

} // namespace

Model build_model(const SimConfig& cfg)
{
    try {
        return build_model_checked(cfg);
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
}

namespace {

/// Estimate or control magnitude treated as numeric blow-up.
constexpr double kBlowUp = 1e6;

struct LwrPlant
{
    RoadState<double> state;
    GodunovSolver<Greenshield<double>> solver;
};

using Plant = std::variant<LwrPlant, DelayLinePlant<double>>;

Plant make_plant(const SimConfig& cfg, const Model& m, OutletBoundary outlet)
{
    if (cfg.plant == PlantKind::NonlinearLwr) {
        return LwrPlant{RoadState<double>::uniform(cfg.length, cfg.dx, m.rho0),
                        GodunovSolver<Greenshield<double>>(m.law, outlet, m.map, cfg.dx, m.dt)};
    }
    return DelayLinePlant<double>(m.ref.delay, m.dt, m.rho0);
}

double plant_outlet(const Plant& plant)
{
    if (const auto* lwr = std::get_if<LwrPlant>(&plant)) return outlet_density(lwr->state);
    return std::get<DelayLinePlant<double>>(plant).outlet_density();
}

double plant_vehicles(const Plant& plant, const Model& m)
{
    if (const auto* lwr = std::get_if<LwrPlant>(&plant)) return total_vehicles(lwr->state);
    return std::get<DelayLinePlant<double>>(plant).vehicles_in_transit(m.ref.u);
}

struct Advance
{
    double net_inflow = 0.0;
    long long clamps = 0;
    double clamp_mass = 0.0;
};

Advance plant_step(Plant& plant, double inlet, double dt)
{
    if (auto* lwr = std::get_if<LwrPlant>(&plant)) {
        const auto f = lwr->solver.advance(lwr->state, inlet);
        return {dt * (f.inflow - f.outflow), f.clamps, f.clamp_mass};
    }
    std::get<DelayLinePlant<double>>(plant).step(inlet);
    return {};
}

/// Shared stepping loop; `command` maps (step, t, q_out) to the inlet density.
template <typename Command>
RunRecord drive(const SimConfig& cfg, const Model& m, OutletBoundary outlet, Command&& command)
{
    const auto wall0 = std::chrono::steady_clock::now();
    RunRecord rec;
    rec.config_echo = echo_config(cfg);
    rec.version = version_tag();
    rec.rows.reserve(static_cast<std::size_t>(m.steps / m.stride + 2));

    Plant plant = make_plant(cfg, m, outlet);
    rec.initial_vehicles = plant_vehicles(plant, m);
    double metered = 0.0;

    for (long long n = 0; n <= m.steps; ++n) {
        const double t = static_cast<double>(n) * m.dt;
        const double rho_out = plant_outlet(plant);
        const double q_out = m.map.outflow(std::max(0.0, rho_out));
        const auto cmd = command(n, t, q_out);
        const long long clamps = rec.solver_clamps + rec.controller_clamps;

        const bool finite = std::isfinite(cmd.applied) && std::isfinite(cmd.gradient)
                            && std::isfinite(cmd.hessian) && std::isfinite(rho_out)
                            && std::abs(cmd.u_ctrl) <= kBlowUp && std::abs(cmd.rho_hat) <= kBlowUp;
        if (!finite || n % m.stride == 0 || n == m.steps) {
            rec.rows.push_back({t, cmd.applied, rho_out, q_out, cmd.gradient, cmd.hessian,
                                cmd.u_ctrl, plant_vehicles(plant, m), clamps, cmd.rho_hat});
        }
        if (!finite) {
            rec.status = RunStatus::Diverged;
            rec.diagnostic = "numeric blow-up at t = " + std::to_string(t);
            break;
        }
        if (n == m.steps) break;

        metered += cmd.applied * cfg.vsl_speed;
        const auto adv = plant_step(plant, cmd.applied, m.dt);
        rec.net_boundary_inflow += adv.net_inflow;
        rec.solver_clamps += adv.clamps;
        rec.clamp_mass += adv.clamp_mass;
    }
    rec.final_vehicles = plant_vehicles(plant, m);
    rec.mean_metered_flow = m.steps > 0 ? metered / static_cast<double>(m.steps) : 0.0;
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
    return rec;
}

} // namespace

RunRecord run_closed_loop(const SimConfig& cfg)
{
    const Model m = build_model(cfg);
    EsController<double> ctrl(m.es, m.dt, cfg.rho_hat0,
                              m.law.critical_density() - cfg.density_margin, cfg.u_history0);
    auto rec = drive(cfg, m, cfg.outlet, [&](long long, double, double q_out) {
        return ctrl.step(q_out);
    });
    rec.controller_clamps = ctrl.clamp_events();
    return rec;
}

RunRecord run_open_loop(const SimConfig& cfg, const OpenLoopScenario& scenario)
{
    const Model m = build_model(cfg);
    const double rho_m = m.law.max_density();
    const double start = scenario.rho_start.value_or(cfg.rho_r);
    const double end = scenario.rho_end.value_or(0.9 * rho_m);
    const double level = scenario.rho_const.value_or(cfg.rho_r);
    for (double v : {start, end, level}) {
        if (!(v >= 0.0 && v <= rho_m)) throw ConfigError("scenario density outside [0, rho_m]");
    }
    const OutletBoundary outlet = scenario.outlet.value_or(
        scenario.kind == ScenarioKind::Ramp ? OutletBoundary::BottleneckCoupled
                                            : OutletBoundary::FreeOutflow);
    const double t_end = static_cast<double>(m.steps) * m.dt;

    return drive(cfg, m, outlet, [&](long long, double t, double) {
        ControllerOutput<double> out{};
        out.applied = scenario.kind == ScenarioKind::Ramp ? start + (end - start) * (t / t_end)
                                                           : level;
        out.rho_hat = out.applied;
        return out;
    });
}

OracleRecord run_averaged_oracle(const SimConfig& cfg)
{
    const Model m = build_model(cfg);
    OracleRecord rec;
    rec.config_echo = echo_config(cfg);
    rec.version = version_tag();
    rec.hessian = m.map.hessian();
    rec.gain = cfg.k;
    rec.delay = m.controller_delay;

    const double D = m.controller_delay;
    const double kH = cfg.k * m.map.hessian();
    double e = cfg.rho_hat0 - m.map.rho_star();
    double u = cfg.u_history0;
    SampledHistory<double> e_hist(m.dt, D, e);
    SampledHistory<double> u_hist(m.dt, D, cfg.u_history0);
    e_hist.push(e);
    u_hist.push(u);

    rec.rows.reserve(static_cast<std::size_t>(m.steps / m.stride + 2));
    for (long long n = 0; n <= m.steps; ++n) {
        const double t = static_cast<double>(n) * m.dt;
        const double theta = e_hist.value_at(t - D);
        if (n % m.stride == 0 || n == m.steps) rec.rows.push_back({t, e, u, theta});
        if (n == m.steps) break;
        const double window = u_hist.integral(t - D, t);
        const double u_next = u + m.dt * (-cfg.c * u + cfg.c * kH * (theta + window));
        e += m.dt * u;
        u = u_next;
        e_hist.push(e);
        u_hist.push(u);
    }
    return rec;
}

} // namespace esb
