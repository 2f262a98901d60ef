#pragma once

// Run configuration: a flat JSON object whose keys double as command-line
// flag names.

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "garnn/errors.hpp"
#include "garnn/family.hpp"
#include "garnn/io.hpp"
#include "garnn/lagnet.hpp"
#include "garnn/model.hpp"

namespace garnn {

struct RunConfig {
    // data
    std::string data;
    std::string future_data;  // time + extra columns for forecasting

    // model
    std::string family = "poisson";
    std::string link;  // empty: family default
    int trials = 1;
    double size = 1.0;
    int lags = 1;
    int nodes = 1;
    std::string activation = "tanh";
    int conditioning = 0;

    // covariates
    bool intercept = true;
    std::vector<double> harmonic_periods{12.0, 6.0};
    bool trend = true;
    double trend_divisor = 1000.0;
    bool harmonic_time_scaled = false;

    // optimizer
    double gradient_tolerance = 1e-6;
    int max_iterations = 2000;
    int restarts = 5;
    std::uint64_t seed = 1;

    // selection
    std::vector<int> select_lags{1, 2, 3};
    std::vector<int> select_nodes{5, 6, 7};
    std::vector<double> select_sizes{0.75, 1.5};
    std::vector<std::vector<int>> ladder{{0}, {0, 1, 2}, {0, 1, 2, 3, 4}, {0, 1, 2, 3, 4, 5}};
    double alpha = 0.05;

    // forecast
    int horizon = 12;

    // simulate
    int sim_n = 200;
    int burn_in = 200;
    std::vector<double> beta{0.5, 0.0, 0.0, 0.0, 0.0, 0.0};  // one per covariate column
    std::vector<std::vector<double>> omega{{0.5}};
    std::vector<double> rho{0.5};
    double phi = 1.0;

    // gradcheck
    int gradcheck_instances = 50;
    int gradcheck_n = 60;
    double gradcheck_tolerance = 1e-6;

    // outputs
    std::string output;       // structured result (JSON)
    std::string plot;         // t, observed, fitted, forecast
    std::string dataset_out;  // simulated dataset

    Family make_family() const {
        Family f;
        f.kind = parse_family_kind(family);
        f.trials = trials;
        f.size = size;
        f.validate();
        return f;
    }

    CovariateRecipe recipe() const {
        return {intercept, harmonic_periods, trend, trend_divisor, harmonic_time_scaled};
    }

    GarnnSpec make_spec(int covariates) const {
        const Family f = make_family();
        Link l = default_link(f);
        if (!link.empty()) {
            l.kind = parse_link_kind(link);
            l.scale = l.kind == LinkKind::Logit ? static_cast<double>(f.trials) : 1.0;
        }
        GarnnSpec spec{f, l, NetSpec{lags, nodes, parse_activation(activation)}, covariates, conditioning};
        spec.validate();
        return spec;
    }

    FitControls fit_controls() const {
        FitControls c;
        c.optimizer.gradient_tolerance = gradient_tolerance;
        c.optimizer.max_iterations = max_iterations;
        c.restarts = restarts;
        c.seed = seed;
        return c;
    }

    /// Checks that do not need data.
    void validate() const {
        make_spec(1);
        fit_controls().optimizer.validate();
        if (restarts < 1) throw InvalidInput("restarts must be >= 1");
        if (horizon < 1) throw InvalidInput("horizon must be >= 1");
        if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("alpha must lie in (0, 1)");
        if (sim_n < 1 || burn_in < 0) throw InvalidInput("sim_n must be >= 1 and burn_in >= 0");
        if (gradcheck_instances < 1 || gradcheck_n < 10) throw InvalidInput("gradcheck needs instances >= 1 and n >= 10");
    }
};

#define GARNN_CONFIG_FIELDS(X)                                                                                         \
    X(data) X(future_data) X(family) X(link) X(trials) X(size) X(lags) X(nodes) X(activation) X(conditioning)          \
    X(intercept) X(harmonic_periods) X(trend) X(trend_divisor) X(harmonic_time_scaled) X(gradient_tolerance)          \
    X(max_iterations) X(restarts) X(seed) X(select_lags) X(select_nodes) X(select_sizes) X(ladder) X(alpha)           \
    X(horizon) X(sim_n) X(burn_in) X(beta) X(omega) X(rho) X(phi) X(gradcheck_instances) X(gradcheck_n)               \
    X(gradcheck_tolerance) X(output) X(plot) X(dataset_out)

inline std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
#define GARNN_KEY(name) keys.emplace_back(#name);
    GARNN_CONFIG_FIELDS(GARNN_KEY)
#undef GARNN_KEY
    return keys;
}

inline nlohmann::json to_json(const RunConfig& c) {
    nlohmann::json j = nlohmann::json::object();
#define GARNN_PUT(name) j[#name] = c.name;
    GARNN_CONFIG_FIELDS(GARNN_PUT)
#undef GARNN_PUT
    return j;
}

/// Missing keys keep their defaults; unknown keys and type mismatches are
/// validation errors.
inline RunConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw InvalidInput("configuration must be a JSON object");
    const auto keys = config_keys();
    const std::set<std::string> known(keys.begin(), keys.end());
    for (const auto& item : j.items())
        if (!known.contains(item.key())) throw InvalidInput("unknown configuration key '" + item.key() + "'");
    RunConfig c;
    try {
#define GARNN_GET(name) \
    if (j.contains(#name)) j.at(#name).get_to(c.name);
        GARNN_CONFIG_FIELDS(GARNN_GET)
#undef GARNN_GET
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("configuration type error: ") + e.what());
    }
    return c;
}

inline RunConfig parse_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidInput(std::string("configuration parse error: ") + e.what());
    }
    return config_from_json(j);
}

inline std::string serialize_config(const RunConfig& c) { return to_json(c).dump(2) + "\n"; }

}  // namespace garnn
