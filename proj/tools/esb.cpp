// Command-line front end: closed-loop runs, open-loop baseline, averaged
// oracle and the (a, omega) scaling sweep. Exit codes: 0 ok, 1 I/O failure,
// 2 invalid configuration, 3 numeric divergence.

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "esb/config.hpp"
#include "esb/errors.hpp"
#include "esb/io.hpp"
#include "esb/metrics.hpp"
#include "esb/sim.hpp"

namespace {

constexpr int kExitIo = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;

struct Common
{
    std::string config_path;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c)
{
    cmd->add_option("-c,--config", c.config_path, "key = value config file (defaults reproduce the reference run)");
    cmd->add_option("-o,--override", c.overrides, "key=value assignment applied after the config file");
}

esb::SimConfig resolve(const Common& c)
{
    esb::SimConfig cfg = c.config_path.empty() ? esb::SimConfig{} : esb::load_config(c.config_path);
    for (const auto& o : c.overrides) esb::apply_override(cfg, o);
    (void)esb::build_model(cfg);
    return cfg;
}

std::string report_path(const std::string& csv_path)
{
    std::filesystem::path p(csv_path);
    p.replace_extension(".report");
    return p.string();
}

int emit_run(const esb::SimConfig& cfg, const esb::RunRecord& rec, const std::string& out)
{
    std::ostringstream csv;
    esb::write_run_csv(csv, rec);
    esb::write_file(out, csv.str());
    std::ostringstream rep;
    esb::write_report(rep, esb::run_report(cfg, rec));
    esb::write_file(report_path(out), rep.str());
    if (rec.status != esb::RunStatus::Completed) {
        std::cerr << "esb: run diverged: " << rec.diagnostic << " (partial record written)\n";
        return kExitDiverged;
    }
    return 0;
}

std::vector<double> parse_list(const std::string& text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        out.push_back(esb::parse_double(item));
    }
    return out;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Delay-compensated extremum seeking for a freeway bottleneck"};
    app.require_subcommand(1);

    Common run_opts, base_opts, oracle_opts, sweep_opts;
    std::string run_out, base_out, oracle_out, sweep_dir;
    std::string a_list, omega_list;
    unsigned jobs = 1;

    auto* run = app.add_subcommand("run", "closed-loop ES run; writes CSV and .report");
    add_common(run, run_opts);
    run->add_option("--out", run_out, "output CSV path")->required();

    auto* baseline = app.add_subcommand("baseline", "open-loop run without ES control");
    add_common(baseline, base_opts);
    baseline->add_option("--out", base_out, "output CSV path")->required();

    auto* oracle = app.add_subcommand("oracle", "integrate the averaged closed loop");
    add_common(oracle, oracle_opts);
    oracle->add_option("--out", oracle_out, "output CSV path")->required();

    auto* sweep = app.add_subcommand("sweep", "scaling study over dither amplitude and frequency");
    add_common(sweep, sweep_opts);
    sweep->add_option("--a", a_list, "comma-separated dither amplitudes (default: config a)");
    sweep->add_option("--omega", omega_list, "comma-separated dither frequencies, `pi` suffix allowed (default: config omega)");
    sweep->add_option("--out-dir", sweep_dir, "output directory")->required();
    sweep->add_option("-j,--jobs", jobs, "concurrent runs")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*run) {
            const auto cfg = resolve(run_opts);
            return emit_run(cfg, esb::run_closed_loop(cfg), run_out);
        }
        if (*baseline) {
            const auto cfg = resolve(base_opts);
            return emit_run(cfg, esb::run_open_loop(cfg), base_out);
        }
        if (*oracle) {
            const auto cfg = resolve(oracle_opts);
            const auto rec = esb::run_averaged_oracle(cfg);
            std::ostringstream csv;
            esb::write_oracle_csv(csv, rec);
            esb::write_file(oracle_out, csv.str());
            std::ostringstream rep;
            esb::write_report(rep, esb::oracle_report(cfg, rec));
            esb::write_file(report_path(oracle_out), rep.str());
            return 0;
        }
        if (*sweep) {
            const auto cfg = resolve(sweep_opts);
            const auto as = sweep->count("--a") ? parse_list(a_list) : std::vector<double>{cfg.a};
            const auto oms = sweep->count("--omega") ? parse_list(omega_list) : std::vector<double>{cfg.omega};
            if (as.empty() || oms.empty()) throw esb::ConfigError("sweep: empty parameter grid");
            const auto table = esb::scaling_study(cfg, as, oms, jobs);

            std::filesystem::create_directories(sweep_dir);
            std::ostringstream summary;
            summary << "a,omega,converged,entry_time,residual_rho,residual_q\n";
            for (std::size_t i = 0; i < table.cells.size(); ++i) {
                const auto& c = table.cells[i];
                summary << esb::format_double(c.a) << ',' << esb::format_double(c.omega) << ','
                        << (c.converged ? 1 : 0) << ',' << esb::format_double(c.entry_time) << ','
                        << esb::format_double(c.residual_rho) << ',' << esb::format_double(c.residual_q)
                        << '\n';
                if (c.record.rows.empty()) continue;
                std::ostringstream csv;
                esb::write_run_csv(csv, c.record);
                esb::write_file((std::filesystem::path(sweep_dir) / ("cell" + std::to_string(i) + ".csv")).string(),
                                csv.str());
            }
            esb::write_file((std::filesystem::path(sweep_dir) / "summary.csv").string(), summary.str());
            std::ostringstream rep;
            esb::write_report(rep, esb::scaling_report(table));
            esb::write_file((std::filesystem::path(sweep_dir) / "summary.report").string(), rep.str());
            return 0;
        }
    } catch (const esb::ConfigError& e) {
        std::cerr << "esb: configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const esb::DomainError& e) {
        std::cerr << "esb: configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "esb: " << e.what() << '\n';
        return kExitIo;
    }
    return 0;
}
