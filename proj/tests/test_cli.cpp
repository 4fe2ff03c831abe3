#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>
#include <sys/wait.h>
#include <unistd.h>

#include "esb/config.hpp"
#include "esb/io.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kFast = " -o dx=0.5 -o t_end=30";

fs::path scratch()
{
    static const fs::path dir = [] {
        auto p = fs::temp_directory_path() / ("esb_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(p);
        return p;
    }();
    return dir;
}

int run_cli(const std::string& args)
{
    const std::string cmd = std::string("\"") + ESB_CLI_PATH + "\" " + args + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<std::string> lines(const std::string& text)
{
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) out.push_back(line);
    return out;
}

std::string report_value(const fs::path& p, const std::string& key)
{
    for (const auto& l : lines(slurp(p))) {
        if (l.rfind(key + " = ", 0) == 0) return l.substr(key.size() + 3);
    }
    return {};
}

esb::RunRecord load(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    return esb::read_run_csv(f);
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

} // namespace

TEST_CASE("run writes the CSV layout and a sibling report")
{
    const auto out = scratch() / "run.csv";
    REQUIRE(run_cli("run --out " + q(out) + kFast) == 0);
    const auto text = slurp(out);
    CHECK(text.find('\r') == std::string::npos);
    const auto ls = lines(text);
    REQUIRE(ls.size() > 3);
    CHECK(ls[0] == "# esb 1.0.0");
    std::size_t i = 1;
    while (i < ls.size() && ls[i].rfind("# ", 0) == 0) ++i;
    CHECK(i - 1 == esb::config_keys().size());
    REQUIRE(i < ls.size());
    CHECK(ls[i] == "t,rho_in,rho_out,q_out,G,H_hat,U,total_veh,clamps");
    CHECK(ls.size() - i - 1 == 3001);
    CHECK(ls[i + 1].rfind("0,", 0) == 0);
    CHECK(ls[i + 1].find(",0.20000000000000001,") != std::string::npos);

    const auto rep = scratch() / "run.report";
    REQUIRE(fs::exists(rep));
    CHECK(report_value(rep, "status") == "completed");
    CHECK(report_value(rep, "clamps") == "0");
    CHECK(!report_value(rep, "q_out.trailing_mean").empty());
}

TEST_CASE("config echo reproduces the experiment")
{
    const auto first = scratch() / "echo1.csv";
    REQUIRE(run_cli("run --out " + q(first) + kFast + " -o a=0.07 -o plant=pure_delay") == 0);
    std::string cfg_text;
    for (const auto& l : lines(slurp(first))) {
        if (l.rfind("# ", 0) == 0 && l.find(" = ") != std::string::npos) cfg_text += l.substr(2) + "\n";
    }
    const auto cfg_path = scratch() / "echo.cfg";
    esb::write_file(cfg_path.string(), cfg_text);
    const auto second = scratch() / "echo2.csv";
    REQUIRE(run_cli("run -c " + q(cfg_path) + " --out " + q(second)) == 0);
    CHECK(slurp(first) == slurp(second));
}

TEST_CASE("repeated runs are byte-identical")
{
    const auto a = scratch() / "det_a.csv";
    const auto b = scratch() / "det_b.csv";
    REQUIRE(run_cli("run --out " + q(a) + kFast) == 0);
    REQUIRE(run_cli("run --out " + q(b) + kFast) == 0);
    CHECK(slurp(a) == slurp(b));
}

TEST_CASE("configuration errors exit with 2")
{
    const auto out = scratch() / "bad.csv";
    const auto cfg_path = scratch() / "bad.cfg";
    esb::write_file(cfg_path.string(), "dx = 0.5\nsped = 3\n");
    CHECK(run_cli("run -c " + q(cfg_path) + " --out " + q(out)) == 2);
    CHECK(run_cli("run --out " + q(out) + " -o rho_r=0.5") == 2);
    CHECK(run_cli("run --out " + q(out) + " -o a=abc") == 2);
    CHECK(run_cli("run --out " + q(out) + " -o dt=0.05") == 2);
    CHECK(run_cli("run") == 2);
    CHECK(run_cli("frobnicate --out x") == 2);
    CHECK(run_cli("sweep --a \"\" --out-dir " + q(scratch() / "empty_sweep")) == 2);
    CHECK(!fs::exists(out));
    CHECK(run_cli("run --out " + q(scratch() / "no_such_dir" / "x.csv") + kFast) == 1);
}

TEST_CASE("numeric blow-up exits with 3 and flushes the partial record")
{
    const auto out = scratch() / "blowup.csv";
    CHECK(run_cli("run --out " + q(out) + " -o dx=0.5 -o plant=pure_delay -o washout=0") == 3);
    REQUIRE(fs::exists(out));
    const auto rec = load(out);
    CHECK(!rec.rows.empty());
    CHECK(rec.rows.back().t < 100.0);
    CHECK(report_value(scratch() / "blowup.report", "status") == "diverged");
}

TEST_CASE("no excitation from the optimum gives flat trajectories")
{
    const auto out = scratch() / "flat.csv";
    REQUIRE(run_cli("run --out " + q(out) + kFast + " -o a=0 -o rho_hat0=0.24") == 0);
    for (const auto& s : load(out).rows) {
        CHECK(s.rho_in == 0.24);
        CHECK(s.G == 0.0);
        CHECK(s.U == 0.0);
    }
}

TEST_CASE("pure-delay override stays inside the flow band")
{
    const auto out = scratch() / "pd.csv";
    REQUIRE(run_cli("run --out " + q(out) + " -o dx=0.5 -o plant=pure_delay") == 0);
    const auto rep = scratch() / "pd.report";
    CHECK(report_value(rep, "rho_out.converged") == "true");
    CHECK(std::stod(report_value(rep, "rho_out.entry_time")) <= 50.0);
    CHECK(std::stod(report_value(rep, "q_out.trailing_mean")) >= 4.55);
}

TEST_CASE("baseline scenarios")
{
    const auto ramp = scratch() / "base.csv";
    REQUIRE(run_cli("baseline --out " + q(ramp) + " -o dx=0.5") == 0);
    const auto r = load(ramp);
    CHECK(r.rows.back().q_out < r.rows.front().q_out);
    CHECK(r.rows.back().q_out < 0.1 * 4.8);

    const auto flat = scratch() / "const.csv";
    REQUIRE(run_cli("baseline --out " + q(flat) + kFast + " -o scenario=constant") == 0);
    for (const auto& s : load(flat).rows) CHECK(s.q_out == doctest::Approx(4.6666666667));
}

TEST_CASE("oracle command")
{
    const auto out = scratch() / "oracle.csv";
    REQUIRE(run_cli("oracle --out " + q(out) + " -o dx=0.5 -o t_end=40") == 0);
    const auto ls = lines(slurp(out));
    CHECK(std::find(ls.begin(), ls.end(), "t,e_av,U_av,theta_av") != ls.end());
    const double rate = std::stod(report_value(scratch() / "oracle.report", "e_av.rate"));
    CHECK(rate == doctest::Approx(-0.8333333).epsilon(0.1));

    const auto zero = scratch() / "oracle0.csv";
    REQUIRE(run_cli("oracle --out " + q(zero) + " -o dx=0.5 -o t_end=20 -o rho_hat0=0.24") == 0);
    CHECK(report_value(scratch() / "oracle0.report", "e_av.final") == "0");

    const auto nodelay = scratch() / "oracle_d0.csv";
    REQUIRE(run_cli("oracle --out " + q(nodelay) + " -o dx=0.5 -o t_end=20 -o delay=0") == 0);
    const double fitted = std::stod(report_value(scratch() / "oracle_d0.report", "e_av.rate"));
    CHECK(fitted < 0.0);
}

TEST_CASE("sweep over the reference amplitudes")
{
    const auto dir = scratch() / "sweep_ref";
    REQUIRE(run_cli("sweep --a 0.025,0.05,0.1 -j 3 --out-dir " + q(dir)) == 0);
    const auto rows = lines(slurp(dir / "summary.csv"));
    REQUIRE(rows.size() == 4);
    CHECK(rows[0] == "a,omega,converged,entry_time,residual_rho,residual_q");
    int converged = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) converged += rows[i].find(",1,") != std::string::npos;
    CHECK(converged == 3);
}

TEST_CASE("sweep at high frequency on the delay plant")
{
    const auto dir = scratch() / "sweep_pd";
    REQUIRE(run_cli("sweep --a 0.025,0.05,0.1 --omega 11pi -j 3 -o dx=0.5 -o plant=pure_delay --out-dir " + q(dir)) == 0);
    std::vector<double> residual_q;
    for (int i = 0; i < 3; ++i) {
        CHECK(report_value(dir / "summary.report", "cell" + std::to_string(i) + ".converged") == "true");
        residual_q.push_back(std::stod(report_value(dir / "summary.report", "cell" + std::to_string(i) + ".residual_q")));
        CHECK(fs::exists(dir / ("cell" + std::to_string(i) + ".csv")));
    }
    CHECK(residual_q[0] < residual_q[1]);
    CHECK(residual_q[1] < residual_q[2]);
}
