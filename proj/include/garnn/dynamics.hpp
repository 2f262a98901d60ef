#pragma once

// Recursive forecasting, simulation of the GARNN process, and an empirical
// windowed stationarity diagnostic.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "garnn/errors.hpp"
#include "garnn/family.hpp"
#include "garnn/lagnet.hpp"
#include "garnn/model.hpp"

namespace garnn {

struct ForecastResult {
    int horizon = 0;
    std::size_t origin = 0;  // n; first forecast is for index n (0-based)
    std::vector<double> mu_hat;
    Eigen::MatrixXd x_future;
};

/// r-step recursive forecast from origin n. Lags beyond the sample use
/// earlier forecasts; all inputs are standardized with the training scaling.
inline ForecastResult forecast(const GarnnSpec& spec, const SeriesFrame& frame, const ParamVector& theta,
                               const Eigen::MatrixXd& x_future, int horizon) {
    detail::check_compatible(spec, frame, theta);
    if (horizon < 1) throw InvalidInput("forecast horizon must be >= 1");
    if (x_future.rows() < horizon || x_future.cols() != spec.covariates)
        throw InvalidInput("missing future covariates: need " + std::to_string(horizon) + " rows of " +
                           std::to_string(spec.covariates) + " columns");
    const std::size_t n = frame.size();
    if (n < static_cast<std::size_t>(spec.net.lags)) throw InvalidInput("series shorter than the lag order");

    ForecastResult out;
    out.horizon = horizon;
    out.origin = n;
    out.x_future = x_future.topRows(horizon);
    std::vector<double> lags(spec.net.lags);
    for (int s = 0; s < horizon; ++s) {
        const std::size_t t = n + s;
        for (int j = 0; j < spec.net.lags; ++j) {
            const std::size_t idx = t - 1 - j;
            const double value = idx < n ? frame.y[idx] : out.mu_hat[idx - n];
            lags[j] = frame.standardizer ? frame.standardizer->apply(value) : 0.0;
        }
        const double eta = x_future.row(s).dot(theta.beta) + net_forward(spec.net, theta.weights, lags);
        const double mu = link_inverse(spec.link, eta);
        check_mean(spec.family, mu);
        out.mu_hat.push_back(mu);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Simulation

class SimulationError : public NumericFailure {
public:
    using NumericFailure::NumericFailure;
};

struct SimulationOptions {
    int burn_in = 200;
    std::uint64_t seed = 1;
    /// (burn_in + n) rows; defaults to a single intercept column.
    std::optional<Eigen::MatrixXd> design;
    /// Scaling of the lag inputs while generating; defaults to the mean and
    /// sd implied by the first design row.
    std::optional<Standardizer> input_scaling;
    /// p starting values; default draws from the family at that same mean.
    std::optional<std::vector<double>> initial;
};

struct SimulationResult {
    SeriesFrame frame;           // retained sample, standardized on itself
    std::vector<double> mu;      // true conditional means of the retained sample
    Standardizer input_scaling;  // scaling used while generating
};

namespace detail {

inline double draw(const Family& family, double mu, double phi, std::mt19937_64& rng) {
    switch (family.kind) {
        case FamilyKind::Poisson: {
            if (mu > 1e9) throw DomainError("poisson mean too large to sample");
            return static_cast<double>(std::poisson_distribution<long long>(mu)(rng));
        }
        case FamilyKind::Binomial:
            return static_cast<double>(std::binomial_distribution<int>(family.trials, mu / family.trials)(rng));
        case FamilyKind::NegativeBinomial: {
            const double rate = std::gamma_distribution<double>(family.size, mu / family.size)(rng);
            if (rate > 1e9) throw DomainError("negative binomial mean too large to sample");
            return static_cast<double>(std::poisson_distribution<long long>(rate)(rng));
        }
        case FamilyKind::Normal: return std::normal_distribution<double>(mu, std::sqrt(phi))(rng);
        case FamilyKind::Gamma: return std::gamma_distribution<double>(1.0 / phi, mu * phi)(rng);
    }
    return 0.0;
}

}  // namespace detail

/// Draws y_t ~ family(mu_t) with g(mu_t) = eta_t computed from realized lags.
/// The first burn_in generated values are discarded. Same inputs and seed
/// give the same series.
inline SimulationResult simulate(const GarnnSpec& spec, const ParamVector& theta, double phi, std::size_t n,
                                 const SimulationOptions& options = {}) {
    spec.validate();
    if (!theta.matches(spec)) throw InvalidInput("parameter dimensions do not match the model spec");
    if (options.burn_in < 0) throw InvalidInput("burn-in must be >= 0");
    if (n < 1) throw InvalidInput("simulation length must be >= 1");
    if (!spec.family.dispersion_known() && !(phi > 0.0)) throw InvalidInput("dispersion must be positive");
    const std::size_t total = n + static_cast<std::size_t>(options.burn_in);
    const int p = spec.net.lags;

    Eigen::MatrixXd design;
    if (options.design) {
        design = *options.design;
        if (static_cast<std::size_t>(design.rows()) != total || design.cols() != spec.covariates)
            throw InvalidInput("simulation design must have burn_in + n rows and S columns");
    } else {
        if (spec.covariates != 1) throw InvalidInput("simulation without a design needs S = 1 (intercept only)");
        design = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(total), 1);
    }

    const double mu0 = link_inverse(spec.link, design.row(0).dot(theta.beta));
    check_mean(spec.family, mu0);
    Standardizer scaling;
    if (options.input_scaling) {
        scaling = *options.input_scaling;
        if (!(scaling.sd > 0.0)) throw InvalidInput("input scaling sd must be positive");
    } else {
        const double var = (spec.family.dispersion_known() ? 1.0 : phi) * variance_function(spec.family, mu0);
        scaling = {mu0, var > 0.0 ? std::sqrt(var) : 1.0};
    }

    std::mt19937_64 rng(options.seed);
    std::vector<double> y;
    y.reserve(p + total);
    if (options.initial) {
        if (options.initial->size() != static_cast<std::size_t>(p))
            throw InvalidInput("simulation needs exactly p initial values");
        y = *options.initial;
    } else {
        for (int j = 0; j < p; ++j) y.push_back(detail::draw(spec.family, mu0, phi, rng));
    }

    std::vector<double> mu;
    mu.reserve(total);
    std::vector<double> lags(p);
    for (std::size_t k = 0; k < total; ++k) {
        const std::size_t t = p + k;
        for (int j = 0; j < p; ++j) lags[j] = scaling.apply(y[t - 1 - j]);
        const double eta = design.row(static_cast<Eigen::Index>(k)).dot(theta.beta) +
                           net_forward(spec.net, theta.weights, lags);
        try {
            const double m = link_inverse(spec.link, eta);
            check_mean(spec.family, m);
            mu.push_back(m);
            y.push_back(detail::draw(spec.family, m, phi, rng));
        } catch (const DomainError& e) {
            throw SimulationError("simulation left the mean domain at step " + std::to_string(k) +
                                  " (eta = " + std::to_string(eta) + "): " + e.what());
        }
    }

    const std::size_t skip = p + static_cast<std::size_t>(options.burn_in);
    std::vector<double> retained(y.begin() + static_cast<std::ptrdiff_t>(skip), y.end());
    std::vector<double> retained_mu(mu.begin() + options.burn_in, mu.end());
    SeriesFrame frame = make_frame(std::move(retained), design.bottomRows(static_cast<Eigen::Index>(n)));
    return {std::move(frame), std::move(retained_mu), scaling};
}

// ---------------------------------------------------------------------------
// Stationarity diagnostic

struct StationarityThresholds {
    double mean_drift_z = 0.0;
    double variance_drift_z = 0.0;
};

struct StationarityReport {
    std::vector<double> window_means;
    std::vector<double> window_variances;
    std::vector<double> window_lag1;
    double mean_drift = 0.0;        // (max - min window mean) / pooled sd
    double mean_drift_z = 0.0;      // mean_drift on the scale of a window-mean standard error
    double variance_ratio = 1.0;    // max / min window variance
    double variance_drift_z = 0.0;  // log variance ratio on the scale of its standard error
    StationarityThresholds thresholds;
    bool consistent = false;
};

namespace detail {

/// Window statistics without a verdict.
inline StationarityReport window_statistics(std::span<const double> series, int n_windows) {
    if (n_windows < 2) throw InvalidInput("stationarity check needs at least two windows");
    if (series.size() < 10 * static_cast<std::size_t>(n_windows))
        throw InvalidInput("series too short: need at least 10 observations per window");
    StationarityReport r;
    const std::size_t total = series.size();
    for (int w = 0; w < n_windows; ++w) {
        const std::size_t lo = total * w / n_windows;
        const std::size_t hi = total * (w + 1) / n_windows;
        const auto len = static_cast<double>(hi - lo);
        double mean = 0.0;
        for (std::size_t t = lo; t < hi; ++t) mean += series[t];
        mean /= len;
        double ss = 0.0;
        double cross = 0.0;
        for (std::size_t t = lo; t < hi; ++t) {
            ss += (series[t] - mean) * (series[t] - mean);
            if (t + 1 < hi) cross += (series[t] - mean) * (series[t + 1] - mean);
        }
        r.window_means.push_back(mean);
        r.window_variances.push_back(ss / (len - 1.0));
        r.window_lag1.push_back(ss > 0.0 ? cross / ss : 0.0);
    }

    const double window_len = static_cast<double>(total) / n_windows;
    const double pooled_var =
        std::accumulate(r.window_variances.begin(), r.window_variances.end(), 0.0) / n_windows;
    const double rho = std::clamp(
        std::accumulate(r.window_lag1.begin(), r.window_lag1.end(), 0.0) / n_windows, -0.9, 0.99);
    const auto [mn, mx] = std::minmax_element(r.window_means.begin(), r.window_means.end());
    const auto [vmn, vmx] = std::minmax_element(r.window_variances.begin(), r.window_variances.end());
    r.mean_drift = pooled_var > 0.0 ? (*mx - *mn) / std::sqrt(pooled_var) : 0.0;
    // AR(1) inflation of the variance of a window mean.
    r.mean_drift_z = r.mean_drift * std::sqrt(window_len * (1.0 - rho) / (1.0 + rho));
    r.variance_ratio = *vmn > 0.0 ? *vmx / *vmn : std::numeric_limits<double>::infinity();
    r.variance_drift_z =
        std::log(r.variance_ratio) / std::sqrt(2.0 / window_len) * std::sqrt((1.0 - rho * rho) / (1.0 + rho * rho));
    return r;
}

inline double quantile(std::vector<double> values, double q) {
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace detail

/// Monte Carlo quantiles of both drift statistics on Gaussian white noise
/// of the given length and window count.
inline StationarityThresholds calibrate_stationarity_thresholds(std::size_t length, int n_windows,
                                                                int replicates = 200, std::uint64_t seed = 20240101,
                                                                double quantile = 0.99) {
    if (replicates < 10) throw InvalidInput("calibration needs at least 10 replicates");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> means;
    std::vector<double> vars;
    std::vector<double> series(length);
    for (int r = 0; r < replicates; ++r) {
        for (double& v : series) v = noise(rng);
        const auto stats = detail::window_statistics(series, n_windows);
        means.push_back(stats.mean_drift_z);
        vars.push_back(stats.variance_drift_z);
    }
    return {detail::quantile(means, quantile), detail::quantile(vars, quantile)};
}

inline StationarityReport stationarity_check(std::span<const double> series, int n_windows,
                                             const StationarityThresholds& thresholds) {
    StationarityReport r = detail::window_statistics(series, n_windows);
    r.thresholds = thresholds;
    r.consistent = r.mean_drift_z <= thresholds.mean_drift_z && r.variance_drift_z <= thresholds.variance_drift_z;
    return r;
}

/// Thresholds calibrated on white noise of the same shape.
inline StationarityReport stationarity_check(std::span<const double> series, int n_windows) {
    return stationarity_check(series, n_windows, calibrate_stationarity_thresholds(series.size(), n_windows));
}

}  // namespace garnn
