#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "garnn/runner.hpp"

using namespace garnn;
namespace fs = std::filesystem;

namespace {

const std::string kPolio = std::string(GARNN_TEST_DATA) + "/polio.csv";

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("garnn_cli_" + std::to_string(::getpid()) + "_" +
                                            ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

int run(const std::string& args) {
    const std::string cmd = std::string(GARNN_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

RunConfig small_fit_config() {
    RunConfig c;
    c.data = kPolio;
    c.lags = 1;
    c.nodes = 1;
    c.restarts = 2;
    return c;
}

}  // namespace

TEST(Runner, FitProducesConsistentOutputs) {
    const RunOutput out = run_fit(small_fit_config());
    EXPECT_EQ(out.result["n"], 168);
    EXPECT_EQ(out.result["columns"].size(), 6u);
    EXPECT_EQ(out.result["fitted"].size(), 167u);
    const double ll = out.result["loglik"];
    const int kappa = out.result["parameter_count"];
    EXPECT_DOUBLE_EQ(out.result["aic"].get<double>(), -2 * ll + 2 * kappa);
    std::istringstream plot(out.plot_csv);
    std::string header;
    std::getline(plot, header);
    EXPECT_EQ(header, "t,observed,fitted,forecast");
}

TEST(Runner, RepeatedRunsAreIdentical) {
    const RunConfig c = small_fit_config();
    const RunOutput a = run_fit(c), b = run_fit(c);
    EXPECT_EQ(a.result.dump(), b.result.dump());
    EXPECT_EQ(a.plot_csv, b.plot_csv);
    RunConfig s;
    s.sim_n = 100;
    s.seed = 7;
    EXPECT_EQ(run_simulate(s).dataset_csv, run_simulate(s).dataset_csv);
}

TEST(Runner, ForecastAppendsHorizon) {
    RunConfig c = small_fit_config();
    c.horizon = 4;
    const RunOutput out = run_forecast(c);
    EXPECT_EQ(out.result["forecast"]["mu_hat"].size(), 4u);
    EXPECT_NE(out.plot_csv.find("\n172,,,"), std::string::npos);
}

TEST(Runner, SimulateParameterShapeErrors) {
    RunConfig c;
    c.beta = {0.5, 0.1};
    EXPECT_THROW(run_simulate(c), InvalidInput);
    c = RunConfig{};
    c.omega = {{0.5, 0.1}};
    EXPECT_THROW(run_simulate(c), InvalidInput);
}

TEST(Runner, GradcheckPasses) {
    RunConfig c;
    c.gradcheck_instances = 5;
    const RunOutput out = run_gradcheck(c);
    EXPECT_TRUE(out.passed);
    EXPECT_EQ(out.result["families"].size(), 5u);
}

TEST(Cli, ExitCodes) {
    TempDir dir;
    EXPECT_EQ(run("fit --data " + kPolio + " --nodes 1 --restarts 1 --output " + (dir.path / "r.json").string()), 0);
    EXPECT_TRUE(fs::exists(dir.path / "r.json"));
    EXPECT_EQ(run("fit --data /does/not/exist.csv"), 2);
    EXPECT_EQ(run("fit --data " + kPolio + " --lags abc"), 2);
    EXPECT_EQ(run("fit --data " + kPolio + " --family weibull"), 2);
    EXPECT_EQ(run("nonsense"), 2);
    EXPECT_EQ(run("simulate --family gamma --trend false --harmonic_periods [] --beta [0.1] --omega [[5]] "
                  "--rho [3] --phi 0.5 --sim_n 500"),
              3);
    EXPECT_EQ(run("gradcheck --gradcheck_instances 1 --gradcheck_tolerance 1e-300"), 3);
}

TEST(Cli, ConfigFileAndOverrides) {
    TempDir dir;
    RunConfig c;
    c.sim_n = 50;
    c.seed = 11;
    c.intercept = true;
    c.trend = false;
    c.harmonic_periods = {};
    c.beta = {0.5};
    c.dataset_out = (dir.path / "sim.csv").string();
    std::ofstream(dir.path / "cfg.json") << serialize_config(c);
    ASSERT_EQ(run("simulate --config " + (dir.path / "cfg.json").string()), 0);
    const std::string first = slurp(dir.path / "sim.csv");
    ASSERT_EQ(run("simulate --config " + (dir.path / "cfg.json").string()), 0);
    EXPECT_EQ(slurp(dir.path / "sim.csv"), first);
    ASSERT_EQ(run("simulate --config " + (dir.path / "cfg.json").string() + " --seed 12"), 0);
    EXPECT_NE(slurp(dir.path / "sim.csv"), first);
}

TEST(Cli, RepeatedFitFilesAreByteIdentical) {
    TempDir dir;
    const std::string base = "fit --data " + kPolio + " --nodes 1 --restarts 2 ";
    ASSERT_EQ(run(base + "--output " + (dir.path / "a.json").string() + " --plot " + (dir.path / "a.csv").string()), 0);
    ASSERT_EQ(run(base + "--output " + (dir.path / "b.json").string() + " --plot " + (dir.path / "b.csv").string()), 0);
    EXPECT_EQ(slurp(dir.path / "a.json"), slurp(dir.path / "b.json"));
    EXPECT_EQ(slurp(dir.path / "a.csv"), slurp(dir.path / "b.csv"));
}
