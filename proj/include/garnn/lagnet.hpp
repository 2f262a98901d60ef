#pragma once

// Time-lagged single-hidden-layer network feeding the linear predictor:
//
//   net(z) = sum_i rho_i * h(G_i),   G_i = sum_j omega_ij * z_{t-j},  j = 1..p
//
// Inputs are lagged values of the series standardized with the training
// sample mean and standard deviation.

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "garnn/errors.hpp"

namespace garnn {

enum class Activation { Tanh, LogisticSigmoid };

inline std::string_view to_string(Activation a) {
    return a == Activation::Tanh ? "tanh" : "logistic";
}

inline Activation parse_activation(std::string_view name) {
    if (name == "tanh") return Activation::Tanh;
    if (name == "logistic" || name == "sigmoid") return Activation::LogisticSigmoid;
    throw InvalidInput("unknown activation '" + std::string(name) + "'");
}

/// Both activations are bounded by 1 in absolute value.
inline double activate(Activation a, double g) {
    if (a == Activation::Tanh) return std::tanh(g);
    return 1.0 / (1.0 + std::exp(-g));
}

inline double activate_derivative(Activation a, double g) {
    if (a == Activation::Tanh) {
        const double h = std::tanh(g);
        return 1.0 - h * h;
    }
    const double h = 1.0 / (1.0 + std::exp(-g));
    return h * (1.0 - h);
}

struct NetSpec {
    int lags = 1;   // p
    int nodes = 0;  // I; zero gives a plain GLM
    Activation activation = Activation::Tanh;

    void validate() const {
        if (lags < 1) throw InvalidInput("lag order p must be >= 1");
        if (nodes < 0) throw InvalidInput("node count I must be >= 0");
    }

    bool operator==(const NetSpec&) const = default;
};

struct NetWeights {
    Eigen::MatrixXd omega;  // I x p, row i = node, column j = lag j+1
    Eigen::VectorXd rho;    // I

    static NetWeights zeros(const NetSpec& spec) {
        return {Eigen::MatrixXd::Zero(spec.nodes, spec.lags), Eigen::VectorXd::Zero(spec.nodes)};
    }

    bool matches(const NetSpec& spec) const {
        return omega.rows() == spec.nodes && omega.cols() == spec.lags && rho.size() == spec.nodes;
    }
};

struct Standardizer {
    double mean = 0.0;
    double sd = 1.0;

    double apply(double y) const { return (y - mean) / sd; }
};

/// Sample mean and (n-1) standard deviation, plus the standardized series.
inline std::pair<Standardizer, std::vector<double>> standardize(std::span<const double> series) {
    const std::size_t n = series.size();
    if (n < 2) throw InvalidInput("standardize: need at least two observations");
    const double mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : series) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 0.0)) throw InvalidInput("standardize: constant series has zero standard deviation");
    Standardizer s{mean, sd};
    std::vector<double> z(n);
    for (std::size_t t = 0; t < n; ++t) z[t] = s.apply(series[t]);
    return {s, std::move(z)};
}

namespace detail {

inline void check_net_dims(const NetSpec& spec, const NetWeights& w, std::size_t n_lags) {
    if (!w.matches(spec))
        throw InvalidInput("network weights do not match spec (I=" + std::to_string(spec.nodes) +
                           ", p=" + std::to_string(spec.lags) + ")");
    if (n_lags != static_cast<std::size_t>(spec.lags))
        throw InvalidInput("expected " + std::to_string(spec.lags) + " lagged inputs, got " +
                           std::to_string(n_lags));
}

}  // namespace detail

/// `lags[j]` holds z_{t-1-j}.
inline double net_forward(const NetSpec& spec, const NetWeights& w, std::span<const double> lags) {
    detail::check_net_dims(spec, w, lags.size());
    double out = 0.0;
    for (int i = 0; i < spec.nodes; ++i) {
        double g = 0.0;
        for (int j = 0; j < spec.lags; ++j) g += w.omega(i, j) * lags[j];
        out += w.rho(i) * activate(spec.activation, g);
    }
    return out;
}

struct NetGradient {
    Eigen::VectorXd d_rho;    // h(G_i)
    Eigen::MatrixXd d_omega;  // rho_i h'(G_i) z_{t-j}
};

inline NetGradient net_gradients(const NetSpec& spec, const NetWeights& w,
                                 std::span<const double> lags) {
    detail::check_net_dims(spec, w, lags.size());
    NetGradient out{Eigen::VectorXd(spec.nodes), Eigen::MatrixXd(spec.nodes, spec.lags)};
    for (int i = 0; i < spec.nodes; ++i) {
        double g = 0.0;
        for (int j = 0; j < spec.lags; ++j) g += w.omega(i, j) * lags[j];
        out.d_rho(i) = activate(spec.activation, g);
        const double scale = w.rho(i) * activate_derivative(spec.activation, g);
        for (int j = 0; j < spec.lags; ++j) out.d_omega(i, j) = scale * lags[j];
    }
    return out;
}

}  // namespace garnn
