#include "esb/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "esb/config.hpp"

namespace esb {

namespace {

void require_series(std::span<const double> t, std::span<const double> v)
{
    if (t.empty()) throw std::invalid_argument("metrics: empty series");
    if (t.size() != v.size()) throw std::invalid_argument("metrics: time and value lengths differ");
}

std::size_t window_start(std::span<const double> t, double window)
{
    const double from = t.back() - window;
    return static_cast<std::size_t>(std::lower_bound(t.begin(), t.end(), from) - t.begin());
}

/// Time average of the linear interpolant over [t.back() - window, t.back()], clipped to the series.
double time_mean(std::span<const double> t, std::span<const double> v, double window)
{
    const double from = std::max(t.front(), t.back() - window);
    const double span = t.back() - from;
    if (!(span > 0.0)) return v.back();
    const std::size_t i0 = window_start(t, window);
    double sum = 0.0;
    if (i0 > 0 && t[i0] > from) {
        const double w = (from - t[i0 - 1]) / (t[i0] - t[i0 - 1]);
        const double v_from = v[i0 - 1] + w * (v[i0] - v[i0 - 1]);
        sum += 0.5 * (t[i0] - from) * (v_from + v[i0]);
    }
    for (std::size_t i = i0 + 1; i < t.size(); ++i) sum += 0.5 * (t[i] - t[i - 1]) * (v[i] + v[i - 1]);
    return sum / span;
}

} // namespace

ConvergenceReport band_convergence(std::span<const double> t, std::span<const double> v,
                                   double center, double halfwidth, double trailing_window)
{
    require_series(t, v);
    ConvergenceReport r;
    r.center = center;
    r.halfwidth = halfwidth;
    r.window = trailing_window;

    std::optional<std::size_t> last_out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!(std::abs(v[i] - center) <= halfwidth)) last_out = i;
    }
    if (!last_out) {
        r.converged = true;
        r.entry_time = t.front();
    } else if (*last_out + 1 < v.size()) {
        r.converged = true;
        r.entry_time = t[*last_out + 1];
    } else {
        r.converged = false;
        r.entry_time = std::numeric_limits<double>::infinity();
    }

    const std::size_t i0 = window_start(t, trailing_window);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double dev = 0.0;
    for (std::size_t i = i0; i < v.size(); ++i) {
        lo = std::min(lo, v[i]);
        hi = std::max(hi, v[i]);
        dev = std::max(dev, std::abs(v[i] - center));
    }
    r.trailing_mean = time_mean(t, v, trailing_window);
    r.trailing_ripple = hi - lo;
    r.trailing_max_deviation = dev;
    return r;
}

double exp_rate_fit(std::span<const double> t, std::span<const double> v, double t_start,
                    double t_stop)
{
    require_series(t, v);
    double n = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t_start || t[i] > t_stop) continue;
        const double mag = std::abs(v[i]);
        if (!(mag > 0.0) || !std::isfinite(mag)) {
            throw std::domain_error("exp_rate_fit: zero or non-finite value in fit window");
        }
        const double y = std::log(mag);
        n += 1.0;
        sx += t[i];
        sy += y;
        sxx += t[i] * t[i];
        sxy += t[i] * y;
    }
    if (n < 2.0) throw std::invalid_argument("exp_rate_fit: fewer than two samples in window");
    const double denom = n * sxx - sx * sx;
    if (!(denom > 0.0)) throw std::invalid_argument("exp_rate_fit: degenerate time window");
    return (n * sxy - sx * sy) / denom;
}

std::vector<double> period_average(std::span<const double> t, std::span<const double> v,
                                   double period)
{
    require_series(t, v);
    if (!(period > 0.0)) throw std::invalid_argument("period_average: period must be positive");
    const std::size_t n = t.size();
    std::vector<double> cum(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) cum[i] = cum[i - 1] + 0.5 * (t[i] - t[i - 1]) * (v[i] + v[i - 1]);

    auto integral_to = [&](double x) {
        if (x <= t.front()) return 0.0;
        if (x >= t.back()) return cum.back();
        const auto j = static_cast<std::size_t>(std::upper_bound(t.begin(), t.end(), x) - t.begin()) - 1;
        const double h = x - t[j];
        const double slope = (v[j + 1] - v[j]) / (t[j + 1] - t[j]);
        return cum[j] + h * (v[j] + 0.5 * slope * h);
    };

    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        // full-period window, shifted inward near the ends of the series
        double lo = t[i] - 0.5 * period;
        double hi = t[i] + 0.5 * period;
        if (lo < t.front()) {
            hi = std::min(t.back(), hi + (t.front() - lo));
            lo = t.front();
        } else if (hi > t.back()) {
            lo = std::max(t.front(), lo - (hi - t.back()));
            hi = t.back();
        }
        out[i] = hi > lo ? (integral_to(hi) - integral_to(lo)) / (hi - lo) : v[i];
    }
    return out;
}

double trailing_mean(std::span<const double> t, std::span<const double> v, double window)
{
    require_series(t, v);
    return time_mean(t, v, window);
}

double trailing_window(const SimConfig& cfg, double periods)
{
    return periods * 2.0 * std::numbers::pi / cfg.omega;
}

std::vector<double> column(const RunRecord& rec, double Sample::*field)
{
    std::vector<double> out;
    out.reserve(rec.rows.size());
    for (const auto& s : rec.rows) out.push_back(s.*field);
    return out;
}

ScalingTable scaling_study(const SimConfig& base, std::span<const double> a_values,
                           std::span<const double> omega_values, unsigned jobs,
                           double band_halfwidth)
{
    if (a_values.empty() || omega_values.empty()) {
        throw ConfigError("scaling_study: empty parameter grid");
    }
    const Model model = build_model(base);
    const double rho_star = model.map.rho_star();
    const double q_star = model.map.q_star();

    ScalingTable table;
    for (double om : omega_values) {
        for (double a : a_values) {
            ScalingCell cell;
            cell.a = a;
            cell.omega = om;
            table.cells.push_back(std::move(cell));
        }
    }

    auto evaluate = [&](ScalingCell& cell) {
        SimConfig cfg = base;
        cfg.a = cell.a;
        cfg.omega = cell.omega;
        try {
            cell.record = run_closed_loop(cfg);
        } catch (const std::exception& e) {
            cell.note = e.what();
            return;
        }
        if (cell.record.status != RunStatus::Completed) {
            cell.note = cell.record.diagnostic;
            return;
        }
        const auto t = column(cell.record, &Sample::t);
        const auto est = column(cell.record, &Sample::rho_hat);
        const double window = trailing_window(cfg);
        const auto conv = band_convergence(t, est, rho_star, band_halfwidth, window);
        cell.converged = conv.converged;
        cell.entry_time = conv.entry_time;
        cell.residual_rho = std::abs(trailing_mean(t, column(cell.record, &Sample::rho_in), window) - rho_star);
        cell.residual_q = std::abs(trailing_mean(t, column(cell.record, &Sample::q_out), window) - q_star);
        if (!cell.converged) cell.note = "did not converge";
    };

    const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(table.cells.size())));
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < table.cells.size(); i = next++) evaluate(table.cells[i]);
    };
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
        work();
    }

    std::vector<double> as(a_values.begin(), a_values.end());
    std::vector<double> oms(omega_values.begin(), omega_values.end());
    std::sort(as.begin(), as.end());
    std::sort(oms.begin(), oms.end());
    auto find = [&](double a, double om) -> const ScalingCell* {
        for (const auto& c : table.cells) {
            if (c.a == a && c.omega == om) return &c;
        }
        return nullptr;
    };
    for (double om : oms) {
        for (std::size_t i = 1; i < as.size(); ++i) {
            const auto* big = find(as[i], om);
            const auto* small = find(as[i - 1], om);
            if (big && small && big->converged && small->converged && big->residual_q > 0.0) {
                table.a_halving.push_back({om, as[i], as[i - 1], small->residual_q / big->residual_q});
            }
        }
    }
    for (double a : as) {
        for (std::size_t i = 1; i < oms.size(); ++i) {
            const auto* lo = find(a, oms[i - 1]);
            const auto* hi = find(a, oms[i]);
            if (lo && hi && lo->converged && hi->converged && lo->residual_rho > 0.0) {
                table.omega_doubling.push_back({a, oms[i - 1], oms[i], hi->residual_rho / lo->residual_rho});
            }
        }
    }
    return table;
}

Report run_report(const SimConfig& cfg, const RunRecord& rec)
{
    const Model m = build_model(cfg);
    Report r;
    auto add = [&r](std::string k, double v) { r.emplace_back(std::move(k), format_double(v)); };
    r.emplace_back("version", rec.version);
    r.emplace_back("status", rec.status == RunStatus::Completed ? "completed" : "diverged");
    if (!rec.diagnostic.empty()) r.emplace_back("diagnostic", rec.diagnostic);
    if (rec.rows.empty()) return r;

    const auto t = column(rec, &Sample::t);
    const auto rho_out = column(rec, &Sample::rho_out);
    const auto q_out = column(rec, &Sample::q_out);
    const auto h_hat = column(rec, &Sample::H_hat);
    const double window = trailing_window(cfg);

    const auto dens = band_convergence(t, rho_out, m.map.rho_star(), 0.02, window);
    const auto smooth = period_average(t, rho_out, m.es.period());
    const auto dens_av = band_convergence(t, smooth, m.map.rho_star(), 0.02, window);
    add("trailing_window", window);
    add("rho_star", m.map.rho_star());
    add("q_star", m.map.q_star());
    add("hessian", m.map.hessian());
    r.emplace_back("rho_out.converged", dens_av.converged ? "true" : "false");
    add("rho_out.entry_time", dens_av.entry_time);
    r.emplace_back("rho_out.raw_converged", dens.converged ? "true" : "false");
    add("rho_out.raw_entry_time", dens.entry_time);
    add("rho_out.band_halfwidth", dens.halfwidth);
    add("rho_out.trailing_mean", dens.trailing_mean);
    add("rho_out.trailing_ripple", dens.trailing_ripple);
    const auto flow = band_convergence(t, q_out, m.map.q_star(), 0.25, window);
    add("q_out.initial", q_out.front());
    add("q_out.peak", *std::max_element(q_out.begin(), q_out.end()));
    add("q_out.final", q_out.back());
    r.emplace_back("q_out.converged", flow.converged ? "true" : "false");
    add("q_out.entry_time", flow.entry_time);
    add("q_out.trailing_mean", flow.trailing_mean);
    add("q_out.trailing_ripple", flow.trailing_ripple);
    add("H_hat.trailing_mean", trailing_mean(t, h_hat, window));
    add("total_veh.initial", rec.rows.front().total_veh);
    add("total_veh.final", rec.rows.back().total_veh);
    r.emplace_back("clamps", std::to_string(rec.rows.back().clamps));
    return r;
}

Report oracle_report(const SimConfig& cfg, const OracleRecord& rec)
{
    Report r;
    auto add = [&r](std::string k, double v) { r.emplace_back(std::move(k), format_double(v)); };
    r.emplace_back("version", rec.version);
    add("delay", rec.delay);
    add("kH", rec.gain * rec.hessian);
    if (rec.rows.empty()) return r;
    std::vector<double> t, e;
    for (const auto& s : rec.rows) {
        t.push_back(s.t);
        e.push_back(s.e_av);
    }
    add("e_av.initial", e.front());
    add("e_av.final", e.back());
    const double t_fit = std::min(rec.delay, t.back());
    try {
        add("e_av.rate", exp_rate_fit(t, e, t_fit, std::max(t_fit + 1.0, std::min(t.back(), t_fit + 40.0))));
    } catch (const std::exception&) {
        r.emplace_back("e_av.rate", "undefined");
    }
    (void)cfg;
    return r;
}

Report scaling_report(const ScalingTable& table)
{
    Report r;
    for (std::size_t i = 0; i < table.cells.size(); ++i) {
        const auto& c = table.cells[i];
        const std::string p = "cell" + std::to_string(i) + ".";
        r.emplace_back(p + "a", format_double(c.a));
        r.emplace_back(p + "omega", format_double(c.omega));
        r.emplace_back(p + "converged", c.converged ? "true" : "false");
        r.emplace_back(p + "residual_rho", format_double(c.residual_rho));
        r.emplace_back(p + "residual_q", format_double(c.residual_q));
        if (!c.note.empty()) r.emplace_back(p + "note", c.note);
    }
    for (std::size_t i = 0; i < table.a_halving.size(); ++i) {
        const auto& q = table.a_halving[i];
        r.emplace_back("a_halving" + std::to_string(i),
                       "omega=" + format_double(q.fixed) + " a=" + format_double(q.from) + "->"
                           + format_double(q.to) + " residual_q_ratio=" + format_double(q.ratio));
    }
    for (std::size_t i = 0; i < table.omega_doubling.size(); ++i) {
        const auto& q = table.omega_doubling[i];
        r.emplace_back("omega_doubling" + std::to_string(i),
                       "a=" + format_double(q.fixed) + " omega=" + format_double(q.from) + "->"
                           + format_double(q.to) + " residual_rho_ratio=" + format_double(q.ratio));
    }
    return r;
}

} // namespace esb
