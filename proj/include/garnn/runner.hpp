#pragma once

// Command implementations behind the `garnn` tool. Every command returns
// its outputs as strings so callers decide where they go; identical config
// and seeds give byte-identical outputs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "garnn/config.hpp"
#include "garnn/dynamics.hpp"
#include "garnn/errors.hpp"
#include "garnn/family.hpp"
#include "garnn/inference.hpp"
#include "garnn/io.hpp"
#include "garnn/model.hpp"
#include "garnn/optimizer.hpp"

namespace garnn {

struct RunOutput {
    nlohmann::json result;
    std::string table;        // human-readable summary
    std::string plot_csv;     // t, observed, fitted, forecast (fit/forecast)
    std::string dataset_csv;  // simulate only
    bool passed = true;       // gradcheck verdict
};

namespace detail {

struct PreparedData {
    Dataset dataset;
    std::vector<std::string> columns;
    SeriesFrame frame;
};

inline Eigen::MatrixXd design_for(const std::vector<long long>& time, const Eigen::MatrixXd& extras,
                                  const CovariateRecipe& recipe) {
    const Eigen::MatrixXd base = build_covariates(time, recipe);
    Eigen::MatrixXd X(base.rows(), base.cols() + extras.cols());
    X << base, extras;
    return X;
}

inline PreparedData prepare(const RunConfig& config) {
    if (config.data.empty()) throw InvalidInput("no dataset given (key 'data')");
    PreparedData out;
    out.dataset = load_series(config.data);
    out.columns = config.recipe().column_names();
    out.columns.insert(out.columns.end(), out.dataset.extra_names.begin(), out.dataset.extra_names.end());
    if (out.columns.empty()) throw InvalidInput("covariate recipe produces no columns");
    out.frame = make_frame(out.dataset.y, design_for(out.dataset.time, out.dataset.extras, config.recipe()));
    return out;
}

inline nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        std::vector<double> row(m.cols());
        for (Eigen::Index j = 0; j < m.cols(); ++j) row[j] = m(i, j);
        rows.push_back(row);
    }
    return rows;
}

inline std::vector<double> vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

inline nlohmann::json spec_json(const GarnnSpec& spec) {
    return {{"family", to_string(spec.family.kind)},
            {"link", to_string(spec.link.kind)},
            {"trials", spec.family.trials},
            {"size", spec.family.size},
            {"lags", spec.net.lags},
            {"nodes", spec.net.nodes},
            {"activation", to_string(spec.net.activation)},
            {"conditioning", spec.m()},
            {"covariates", spec.covariates}};
}

inline nlohmann::json fit_json(const FitResult& r) {
    nlohmann::json j;
    j["beta"] = vec(r.theta_hat.beta);
    j["omega"] = matrix_json(r.theta_hat.weights.omega);
    j["rho"] = vec(r.theta_hat.weights.rho);
    j["dispersion"] = r.dispersion_hat ? nlohmann::json(*r.dispersion_hat) : nlohmann::json(nullptr);
    j["loglik"] = r.loglik;
    j["aic"] = r.aic;
    j["parameter_count"] = r.parameter_count;
    j["converged"] = r.converged;
    j["iterations"] = r.iterations;
    j["gradient_norm"] = r.gradient_norm;
    j["deviance"] = r.deviance;
    j["restarts_completed"] = r.restarts_completed;
    j["best_restart"] = r.best_restart;
    return j;
}

inline std::string plot_csv(const Dataset& data, std::size_t m, const std::vector<double>& fitted,
                            const ForecastResult* fc) {
    std::ostringstream out;
    out << std::setprecision(12) << "t,observed,fitted,forecast\n";
    for (std::size_t t = 0; t < data.size(); ++t) {
        out << data.time[t] << ',' << data.y[t] << ',';
        if (t >= m) out << fitted[t - m];
        out << ",\n";
    }
    if (fc)
        for (int s = 0; s < fc->horizon; ++s) out << data.time.back() + 1 + s << ",,," << fc->mu_hat[s] << '\n';
    return out.str();
}

inline std::string fit_table(const GarnnSpec& spec, const std::vector<std::string>& columns, const FitResult& r) {
    std::ostringstream out;
    out << std::setprecision(6);
    out << "GARNN fit: " << to_string(spec.family.kind) << " / " << to_string(spec.link.kind) << " link, p="
        << spec.net.lags << ", I=" << spec.net.nodes << ", m=" << spec.m() << '\n';
    for (std::size_t c = 0; c < columns.size(); ++c)
        out << "  beta[" << columns[c] << "] = " << r.theta_hat.beta(static_cast<Eigen::Index>(c)) << '\n';
    if (r.dispersion_hat) out << "  dispersion = " << *r.dispersion_hat << '\n';
    out << std::setprecision(10) << "  loglik = " << r.loglik << "\n  AIC = " << r.aic << " (kappa = "
        << r.parameter_count << ")\n  converged = " << (r.converged ? "yes" : "no") << ", iterations = "
        << r.iterations << ", |grad| = " << r.gradient_norm << '\n';
    return out.str();
}

}  // namespace detail

inline RunOutput run_fit(const RunConfig& config) {
    config.validate();
    const auto prepared = detail::prepare(config);
    const GarnnSpec spec = config.make_spec(static_cast<int>(prepared.columns.size()));
    const FitResult r = fit(spec, prepared.frame, config.fit_controls());

    RunOutput out;
    out.result = detail::fit_json(r);
    out.result["command"] = "fit";
    out.result["spec"] = detail::spec_json(spec);
    out.result["columns"] = prepared.columns;
    out.result["n"] = prepared.frame.size();
    out.result["fitted"] = r.fitted;
    if (prepared.frame.standardizer)
        out.result["standardizer"] = {{"mean", prepared.frame.standardizer->mean}, {"sd", prepared.frame.standardizer->sd}};
    out.table = detail::fit_table(spec, prepared.columns, r);
    out.plot_csv = detail::plot_csv(prepared.dataset, spec.m(), r.fitted, nullptr);
    return out;
}

inline RunOutput run_forecast(const RunConfig& config) {
    config.validate();
    const auto prepared = detail::prepare(config);
    const GarnnSpec spec = config.make_spec(static_cast<int>(prepared.columns.size()));
    const FitResult r = fit(spec, prepared.frame, config.fit_controls());

    std::vector<long long> future_time(config.horizon);
    for (int s = 0; s < config.horizon; ++s) future_time[s] = prepared.dataset.time.back() + 1 + s;
    Eigen::MatrixXd future_extras(config.horizon, prepared.dataset.extras.cols());
    if (prepared.dataset.extras.cols() > 0) {
        if (config.future_data.empty())
            throw InvalidInput("missing future covariates: dataset has extra columns but no 'future_data' was given");
        const Dataset future = load_series(config.future_data);
        if (static_cast<int>(future.size()) < config.horizon || future.extras.cols() != prepared.dataset.extras.cols())
            throw InvalidInput("missing future covariates: 'future_data' must cover the horizon with matching columns");
        future_extras = future.extras.topRows(config.horizon);
    }
    const Eigen::MatrixXd x_future = detail::design_for(future_time, future_extras, config.recipe());
    const ForecastResult fc = forecast(spec, prepared.frame, r.theta_hat, x_future, config.horizon);

    RunOutput out;
    out.result = detail::fit_json(r);
    out.result["command"] = "forecast";
    out.result["spec"] = detail::spec_json(spec);
    out.result["columns"] = prepared.columns;
    out.result["n"] = prepared.frame.size();
    out.result["fitted"] = r.fitted;
    out.result["forecast"] = {{"origin", prepared.dataset.time.back()}, {"horizon", fc.horizon}, {"mu_hat", fc.mu_hat}};
    std::ostringstream table;
    table << detail::fit_table(spec, prepared.columns, r) << std::setprecision(8) << "Forecast:\n";
    for (int s = 0; s < fc.horizon; ++s) table << "  t=" << future_time[s] << "  mu_hat=" << fc.mu_hat[s] << '\n';
    out.table = table.str();
    out.plot_csv = detail::plot_csv(prepared.dataset, spec.m(), r.fitted, &fc);
    return out;
}

inline RunOutput run_select(const RunConfig& config) {
    config.validate();
    const auto prepared = detail::prepare(config);
    const Family family = config.make_family();
    const GarnnSpec proto = config.make_spec(static_cast<int>(prepared.columns.size()));
    SelectionGrid grid{config.select_lags, config.select_nodes, config.select_sizes};
    const SelectionReport report = two_stage_select(prepared.frame, family, proto.link, proto.net.activation, grid,
                                                    config.ladder, config.fit_controls(), config.alpha);

    RunOutput out;
    nlohmann::json cells = nlohmann::json::array();
    std::ostringstream table;
    table << "Stage one (maximal predictor, m=" << report.conditioning << ")\n";
    table << "  AR  nodes" << (family.kind == FamilyKind::NegativeBinomial ? "      k" : "") << "          AIC\n";
    for (std::size_t c = 0; c < report.stage_one.size(); ++c) {
        const auto& cell = report.stage_one[c];
        nlohmann::json row{{"lags", cell.lags}, {"nodes", cell.nodes}};
        row["size"] = cell.size ? nlohmann::json(*cell.size) : nlohmann::json(nullptr);
        table << std::setw(4) << cell.lags << std::setw(7) << cell.nodes;
        if (cell.size) table << std::setw(7) << *cell.size;
        if (cell.fit) {
            row["aic"] = cell.fit->aic;
            row["loglik"] = cell.fit->loglik;
            row["converged"] = cell.fit->converged;
            table << std::setw(13) << std::fixed << std::setprecision(4) << cell.fit->aic << std::defaultfloat;
        } else {
            row["aic"] = nullptr;
            row["error"] = cell.error;
            table << "       failed";
        }
        table << (c == report.chosen_cell ? "  <- selected" : "") << '\n';
        cells.push_back(row);
    }
    nlohmann::json tests = nlohmann::json::array();
    table << "Stage two (analysis of deviance)\n";
    for (const auto& step : report.tests) {
        tests.push_back({{"smaller", step.smaller},
                         {"larger", step.larger},
                         {"kind", step.test.kind == TestKind::ChiSquared ? "chisq" : "F"},
                         {"statistic", step.test.statistic},
                         {"df", step.test.df},
                         {"df_denominator", step.test.df_denominator},
                         {"p_value", step.test.p_value}});
        table << "  model " << step.smaller << " vs " << step.larger << ": statistic=" << std::setprecision(6)
              << step.test.statistic << " df=" << step.test.df << " p=" << step.test.p_value << '\n';
    }
    nlohmann::json ladder_fits = nlohmann::json::array();
    for (const auto& f : report.ladder_fits) ladder_fits.push_back({{"loglik", f.loglik}, {"aic", f.aic}});
    table << "Chosen predictor: model " << report.chosen_predictor << '\n';

    out.result = {{"command", "select"},
                  {"columns", prepared.columns},
                  {"conditioning", report.conditioning},
                  {"stage_one", cells},
                  {"chosen_cell", report.chosen_cell},
                  {"ladder", report.ladder},
                  {"ladder_fits", ladder_fits},
                  {"tests", tests},
                  {"alpha", report.alpha},
                  {"chosen_predictor", report.chosen_predictor},
                  {"chosen_spec", detail::spec_json(report.chosen_spec)}};
    out.table = table.str();
    return out;
}

inline RunOutput run_simulate(const RunConfig& config) {
    config.validate();
    const CovariateRecipe recipe = config.recipe();
    const GarnnSpec spec = config.make_spec(recipe.column_count());
    ParamVector theta = ParamVector::zeros(spec);
    if (static_cast<int>(config.beta.size()) != spec.covariates)
        throw InvalidInput("beta has " + std::to_string(config.beta.size()) + " entries, covariate recipe has " +
                           std::to_string(spec.covariates) + " columns");
    if (static_cast<int>(config.rho.size()) != spec.net.nodes || static_cast<int>(config.omega.size()) != spec.net.nodes)
        throw InvalidInput("omega and rho must have one row/entry per node");
    for (int i = 0; i < spec.net.nodes; ++i) {
        if (static_cast<int>(config.omega[i].size()) != spec.net.lags)
            throw InvalidInput("each omega row needs one weight per lag");
        for (int j = 0; j < spec.net.lags; ++j) theta.weights.omega(i, j) = config.omega[i][j];
        theta.weights.rho(i) = config.rho[i];
    }
    for (int s = 0; s < spec.covariates; ++s) theta.beta(s) = config.beta[s];

    const std::size_t total = static_cast<std::size_t>(config.sim_n) + config.burn_in;
    SimulationOptions options;
    options.burn_in = config.burn_in;
    options.seed = config.seed;
    options.design = build_covariates(total, recipe);
    const SimulationResult sim = simulate(spec, theta, config.phi, config.sim_n, options);

    std::vector<long long> time(config.sim_n);
    for (int t = 0; t < config.sim_n; ++t) time[t] = config.burn_in + 1 + t;
    std::ostringstream csv;
    csv << "# simulated GARNN series: " << to_string(spec.family.kind) << ", seed " << config.seed << '\n';
    write_series(csv, time, sim.frame.y);

    RunOutput out;
    out.dataset_csv = csv.str();
    out.result = {{"command", "simulate"},
                  {"spec", detail::spec_json(spec)},
                  {"seed", config.seed},
                  {"n", config.sim_n},
                  {"burn_in", config.burn_in},
                  {"y", sim.frame.y},
                  {"mu", sim.mu},
                  {"input_scaling", {{"mean", sim.input_scaling.mean}, {"sd", sim.input_scaling.sd}}}};
    std::ostringstream table;
    const double mean = std::accumulate(sim.frame.y.begin(), sim.frame.y.end(), 0.0) / sim.frame.y.size();
    table << "Simulated " << config.sim_n << " observations (burn-in " << config.burn_in << "), sample mean "
          << std::setprecision(8) << mean << '\n';
    out.table = table.str();
    return out;
}

// ---------------------------------------------------------------------------
// Gradient check

struct GradcheckFamilyResult {
    std::string family;
    double max_relative_error = 0.0;
    int instances = 0;
};

/// Random (theta, data) instances for each family with its default link:
/// S = 2 (intercept + annual harmonic), p in {1, 2}, I in {0, 1, 3}. The
/// analytic score is compared with central differences of the conditional
/// log-likelihood; error is |a - f| / max(1, |a|, |f|).
inline std::vector<GradcheckFamilyResult> gradient_check(int instances, int n, std::uint64_t seed, double step = 1e-6) {
    const std::vector<std::pair<Family, double>> cases{
        {Family::poisson(), 1.0},         {Family::binomial(10), 1.0}, {Family::negative_binomial(2.0), 1.0},
        {Family::normal(), 1.0},          {Family::gamma(), 0.2}};
    std::vector<GradcheckFamilyResult> out;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const std::vector<int> lag_choices{1, 2};
    const std::vector<int> node_choices{0, 1, 3};
    for (const auto& [family, phi] : cases) {
        GradcheckFamilyResult res{std::string(to_string(family.kind)), 0.0, instances};
        double intercept = 0.0;
        switch (family.kind) {
            case FamilyKind::Poisson:
            case FamilyKind::NegativeBinomial: intercept = std::log(3.0); break;
            case FamilyKind::Gamma: intercept = 1.0; break;
            default: intercept = 0.0;
        }
        for (int k = 0; k < instances; ++k) {
            const int p = lag_choices[rng() % lag_choices.size()];
            const int nodes = node_choices[rng() % node_choices.size()];
            GarnnSpec spec = GarnnSpec::make(family, NetSpec{p, nodes, Activation::Tanh}, 2);
            const auto draw_theta = [&] {
                ParamVector theta = ParamVector::zeros(spec);
                theta.beta << intercept, 0.05 * unit(rng);
                for (Eigen::Index i = 0; i < theta.weights.omega.rows(); ++i) {
                    for (Eigen::Index j = 0; j < theta.weights.omega.cols(); ++j) theta.weights.omega(i, j) = unit(rng);
                    theta.weights.rho(i) = 0.25 * unit(rng);
                }
                return theta;
            };
            const ParamVector truth = draw_theta();
            SimulationOptions options;
            options.burn_in = 50;
            options.seed = rng();
            const CovariateRecipe recipe{true, {12.0}, false, 1000.0, false};
            options.design = build_covariates(static_cast<std::size_t>(n + options.burn_in), recipe).leftCols(2);
            const SimulationResult sim = simulate(spec, truth, phi, n, options);
            const ParamVector at = draw_theta();

            const Eigen::VectorXd analytic = score(spec, sim.frame, at, phi);
            const Objective f = [&](const Eigen::VectorXd& v) {
                return conditional_loglik(spec, sim.frame, ParamVector::unflatten(spec, v), phi);
            };
            const Eigen::VectorXd numeric = finite_diff_grad(f, at.flatten(), step);
            for (Eigen::Index i = 0; i < analytic.size(); ++i) {
                const double scale = std::max({1.0, std::abs(analytic(i)), std::abs(numeric(i))});
                res.max_relative_error = std::max(res.max_relative_error, std::abs(analytic(i) - numeric(i)) / scale);
            }
        }
        out.push_back(res);
    }
    return out;
}

inline RunOutput run_gradcheck(const RunConfig& config) {
    config.validate();
    const auto results = gradient_check(config.gradcheck_instances, config.gradcheck_n, config.seed);
    RunOutput out;
    double worst = 0.0;
    nlohmann::json families = nlohmann::json::array();
    std::ostringstream table;
    table << std::setprecision(4);
    for (const auto& r : results) {
        worst = std::max(worst, r.max_relative_error);
        families.push_back({{"family", r.family}, {"instances", r.instances}, {"max_relative_error", r.max_relative_error}});
        table << "  " << std::left << std::setw(10) << r.family << std::right << " max relative error "
              << std::scientific << r.max_relative_error << std::defaultfloat << '\n';
    }
    out.passed = worst < config.gradcheck_tolerance;
    table << (out.passed ? "pass" : "FAIL") << ": max relative error " << std::scientific << worst << " (tolerance "
          << config.gradcheck_tolerance << ")\n";
    out.table = table.str();
    out.result = {{"command", "gradcheck"},
                  {"families", families},
                  {"max_relative_error", worst},
                  {"tolerance", config.gradcheck_tolerance},
                  {"passed", out.passed}};
    return out;
}

}  // namespace garnn
