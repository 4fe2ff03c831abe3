#include "esb/io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "esb/config.hpp"

namespace esb {

namespace {

void write_echo(std::ostream& out, const std::string& version,
                const std::vector<std::pair<std::string, std::string>>& echo)
{
    out << "# " << version << '\n';
    for (const auto& [k, v] : echo) out << "# " << k << " = " << v << '\n';
}

} // namespace

void write_run_csv(std::ostream& out, const RunRecord& rec)
{
    write_echo(out, rec.version, rec.config_echo);
    out << kRunCsvHeader << '\n';
    std::string line;
    for (const auto& s : rec.rows) {
        line.clear();
        for (double v : {s.t, s.rho_in, s.rho_out, s.q_out, s.G, s.H_hat, s.U, s.total_veh}) {
            line += format_double(v);
            line += ',';
        }
        line += std::to_string(s.clamps);
        line += '\n';
        out << line;
    }
}

void write_oracle_csv(std::ostream& out, const OracleRecord& rec)
{
    write_echo(out, rec.version, rec.config_echo);
    out << kOracleCsvHeader << '\n';
    for (const auto& s : rec.rows) {
        out << format_double(s.t) << ',' << format_double(s.e_av) << ',' << format_double(s.u_av)
            << ',' << format_double(s.theta_av) << '\n';
    }
}

RunRecord read_run_csv(std::istream& in)
{
    RunRecord rec;
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::string body = line.substr(line.size() > 1 && line[1] == ' ' ? 2 : 1);
            const auto eq = body.find(" = ");
            if (eq == std::string::npos) rec.version = body;
            else rec.config_echo.emplace_back(body.substr(0, eq), body.substr(eq + 3));
            continue;
        }
        if (!header) {
            if (line != kRunCsvHeader) throw std::runtime_error("read_run_csv: unexpected header '" + line + "'");
            header = true;
            continue;
        }
        std::stringstream ss(line);
        std::string cell;
        double v[8];
        for (double& x : v) {
            if (!std::getline(ss, cell, ',')) throw std::runtime_error("read_run_csv: short row");
            x = parse_double(cell);
        }
        if (!std::getline(ss, cell, ',')) throw std::runtime_error("read_run_csv: short row");
        rec.rows.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], std::stoll(cell), 0.0});
    }
    if (!header) throw std::runtime_error("read_run_csv: missing header row");
    return rec;
}

void write_report(std::ostream& out, const Report& report)
{
    for (const auto& [k, v] : report) out << k << " = " << v << '\n';
}

void write_file(const std::string& path, const std::string& contents)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + path + "'");
    f << contents;
    if (!f) throw std::runtime_error("write failed for '" + path + "'");
}

} // namespace esb
