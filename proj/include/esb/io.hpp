#pragma once

#include <iosfwd>
#include <string>

#include "esb/metrics.hpp"
#include "esb/sim.hpp"

namespace esb {

inline constexpr const char* kRunCsvHeader = "t,rho_in,rho_out,q_out,G,H_hat,U,total_veh,clamps";
inline constexpr const char* kOracleCsvHeader = "t,e_av,U_av,theta_av";

/// `#` version and config echo lines, the header row, then one row per sample.
void write_run_csv(std::ostream& out, const RunRecord& rec);
void write_oracle_csv(std::ostream& out, const OracleRecord& rec);

/// Inverse of write_run_csv for the CSV columns; comment lines are returned as echo.
RunRecord read_run_csv(std::istream& in);

void write_report(std::ostream& out, const Report& report);

void write_file(const std::string& path, const std::string& contents);

} // namespace esb
