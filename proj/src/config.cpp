#include "esb/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>

#include "esb/errors.hpp"

namespace esb {

namespace {

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::optional<double> parse_optional(std::string_view v)
{
    if (v == "auto") return std::nullopt;
    return parse_double(v);
}

std::string format_optional(const std::optional<double>& v)
{
    return v ? format_double(*v) : "auto";
}

OutletBoundary parse_outlet(std::string_view v)
{
    if (v == "free") return OutletBoundary::FreeOutflow;
    if (v == "bottleneck") return OutletBoundary::BottleneckCoupled;
    throw ConfigError("outlet must be 'free' or 'bottleneck', got '" + std::string(v) + "'");
}

std::string format_outlet(OutletBoundary o)
{
    return o == OutletBoundary::FreeOutflow ? "free" : "bottleneck";
}

struct Field
{
    const char* name;
    std::function<void(SimConfig&, std::string_view)> set;
    std::function<std::string(const SimConfig&)> get;
};

Field number(const char* name, double SimConfig::*member)
{
    return {name, [member](SimConfig& c, std::string_view v) { c.*member = parse_double(v); },
            [member](const SimConfig& c) { return format_double(c.*member); }};
}

Field optional_number(const char* name, std::optional<double> SimConfig::*member)
{
    return {name, [member](SimConfig& c, std::string_view v) { c.*member = parse_optional(v); },
            [member](const SimConfig& c) { return format_optional(c.*member); }};
}

Field scenario_number(const char* name, std::optional<double> OpenLoopScenario::*member)
{
    return {name,
            [member](SimConfig& c, std::string_view v) { c.scenario.*member = parse_optional(v); },
            [member](const SimConfig& c) { return format_optional(c.scenario.*member); }};
}

const std::vector<Field>& fields()
{
    static const std::vector<Field> table = {
        number("v_f", &SimConfig::v_f),
        number("rho_m", &SimConfig::rho_m),
        number("C_d", &SimConfig::capacity_ratio),
        number("varrho_m", &SimConfig::reduced_jam_density),
        optional_number("q_star", &SimConfig::q_star),
        optional_number("rho_star", &SimConfig::rho_star),
        optional_number("hessian", &SimConfig::hessian),
        number("L", &SimConfig::length),
        number("dx", &SimConfig::dx),
        number("rho_r", &SimConfig::rho_r),
        number("a", &SimConfig::a),
        number("omega", &SimConfig::omega),
        number("k", &SimConfig::k),
        number("c", &SimConfig::c),
        number("washout", &SimConfig::washout),
        optional_number("delay", &SimConfig::controller_delay),
        number("density_margin", &SimConfig::density_margin),
        number("rho_hat0", &SimConfig::rho_hat0),
        number("u_history0", &SimConfig::u_history0),
        number("t_end", &SimConfig::t_end),
        optional_number("dt", &SimConfig::dt),
        number("cfl_safety", &SimConfig::cfl_safety),
        number("sample_dt", &SimConfig::sample_dt),
        {"plant",
         [](SimConfig& c, std::string_view v) {
             if (v == "lwr") c.plant = PlantKind::NonlinearLwr;
             else if (v == "pure_delay") c.plant = PlantKind::PureDelay;
             else throw ConfigError("plant must be 'lwr' or 'pure_delay', got '" + std::string(v) + "'");
         },
         [](const SimConfig& c) {
             return std::string(c.plant == PlantKind::NonlinearLwr ? "lwr" : "pure_delay");
         }},
        {"outlet", [](SimConfig& c, std::string_view v) { c.outlet = parse_outlet(v); },
         [](const SimConfig& c) { return format_outlet(c.outlet); }},
        optional_number("rho0", &SimConfig::rho0),
        number("vsl_speed", &SimConfig::vsl_speed),
        {"scenario",
         [](SimConfig& c, std::string_view v) {
             if (v == "ramp") c.scenario.kind = ScenarioKind::Ramp;
             else if (v == "constant") c.scenario.kind = ScenarioKind::Constant;
             else throw ConfigError("scenario must be 'ramp' or 'constant', got '" + std::string(v) + "'");
         },
         [](const SimConfig& c) {
             return std::string(c.scenario.kind == ScenarioKind::Ramp ? "ramp" : "constant");
         }},
        scenario_number("scenario_rho_start", &OpenLoopScenario::rho_start),
        scenario_number("scenario_rho_end", &OpenLoopScenario::rho_end),
        scenario_number("scenario_rho", &OpenLoopScenario::rho_const),
        {"scenario_outlet",
         [](SimConfig& c, std::string_view v) {
             if (v == "auto") c.scenario.outlet.reset();
             else c.scenario.outlet = parse_outlet(v);
         },
         [](const SimConfig& c) {
             return c.scenario.outlet ? format_outlet(*c.scenario.outlet) : std::string("auto");
         }},
    };
    return table;
}

} // namespace

std::string format_double(double value)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view text)
{
    text = trim(text);
    double scale = 1.0;
    if (text.size() >= 2 && text.substr(text.size() - 2) == "pi") {
        scale = std::numbers::pi;
        text.remove_suffix(2);
        text = trim(text);
        if (text.empty()) return scale;
        if (text.back() == '*') text = trim(text.substr(0, text.size() - 1));
    }
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw ConfigError("not a number: '" + std::string(text) + "'");
    }
    return value * scale;
}

void set_config_value(SimConfig& cfg, std::string_view key, std::string_view value)
{
    for (const auto& f : fields()) {
        if (key == f.name) {
            try {
                f.set(cfg, value);
            } catch (const ConfigError& e) {
                throw ConfigError(std::string(key) + ": " + e.what());
            }
            return;
        }
    }
    throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void apply_override(SimConfig& cfg, std::string_view assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) {
        throw ConfigError("override must be key=value, got '" + std::string(assignment) + "'");
    }
    set_config_value(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

SimConfig parse_config(std::string_view text, SimConfig base)
{
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        }
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw ConfigError("line " + std::to_string(line_no) + ": empty key or value");
        }
        set_config_value(base, key, value);
    }
    return base;
}

SimConfig load_config(const std::string& path, SimConfig base)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), std::move(base));
}

std::vector<std::pair<std::string, std::string>> echo_config(const SimConfig& cfg)
{
    std::vector<std::pair<std::string, std::string>> out;
    out.reserve(fields().size());
    for (const auto& f : fields()) out.emplace_back(f.name, f.get(cfg));
    return out;
}

std::vector<std::string> config_keys()
{
    std::vector<std::string> out;
    for (const auto& f : fields()) out.emplace_back(f.name);
    return out;
}

} // namespace esb
