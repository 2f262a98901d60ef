// garnn: fit, select, forecast, simulate and gradient-check GARNN models.
//
//   garnn <command> [--config run.json] [--<key> <value> ...]
//
// Every configuration key can be overridden by a flag of the same name;
// list-valued keys take a JSON literal, e.g. --select_lags "[1,2]".
// Exit status: 0 success, 2 validation error, 3 numeric failure.

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "garnn/config.hpp"
#include "garnn/errors.hpp"
#include "garnn/runner.hpp"

namespace {

constexpr int kValidationError = 2;
constexpr int kNumericFailure = 3;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw garnn::InvalidInput("cannot open configuration '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw garnn::InvalidInput("cannot write '" + path + "'");
    out << text;
}

garnn::RunConfig assemble(const std::string& config_path, const std::map<std::string, std::string>& overrides) {
    nlohmann::json j = config_path.empty() ? nlohmann::json::object() : nlohmann::json::parse(read_file(config_path));
    const nlohmann::json defaults = garnn::to_json(garnn::RunConfig{});
    for (const auto& [key, value] : overrides) {
        if (defaults.at(key).is_string()) {
            j[key] = value;
            continue;
        }
        try {
            j[key] = nlohmann::json::parse(value);
        } catch (const nlohmann::json::parse_error&) {
            throw garnn::InvalidInput("cannot parse value '" + value + "' for --" + key);
        }
    }
    return garnn::config_from_json(j);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Generalized autoregressive neural network models"};
    app.require_subcommand(1);

    std::string config_path;
    std::map<std::string, std::string> raw;
    const char* commands[] = {"fit", "select", "forecast", "simulate", "gradcheck"};
    const char* help[] = {"fit one model and report estimates", "two-stage model selection (AIC grid, deviance ladder)",
                          "fit then forecast recursively", "simulate a series from given parameters",
                          "compare the analytic score with finite differences"};
    for (int c = 0; c < 5; ++c) {
        auto* sub = app.add_subcommand(commands[c], help[c]);
        sub->add_option("--config", config_path, "JSON run configuration");
        for (const auto& key : garnn::config_keys()) sub->add_option("--" + key, raw[key], "override '" + key + "'");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kValidationError;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    std::map<std::string, std::string> overrides;
    for (const auto& key : garnn::config_keys())
        if (app.get_subcommand(command)->count("--" + key) > 0) overrides[key] = raw[key];

    try {
        const garnn::RunConfig config = assemble(config_path, overrides);
        garnn::RunOutput out;
        if (command == "fit") out = garnn::run_fit(config);
        else if (command == "select") out = garnn::run_select(config);
        else if (command == "forecast") out = garnn::run_forecast(config);
        else if (command == "simulate") out = garnn::run_simulate(config);
        else out = garnn::run_gradcheck(config);

        std::cout << out.table;
        if (!config.output.empty()) write_file(config.output, out.result.dump(2) + "\n");
        if (!config.plot.empty() && !out.plot_csv.empty()) write_file(config.plot, out.plot_csv);
        if (command == "simulate") {
            if (config.dataset_out.empty()) std::cout << out.dataset_csv;
            else write_file(config.dataset_out, out.dataset_csv);
        }
        return out.passed ? 0 : kNumericFailure;
    } catch (const garnn::InvalidInput& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidationError;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidationError;
    } catch (const garnn::NumericFailure& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return kNumericFailure;
    }
}
