#pragma once

// GARNN model assembly: linear predictor, conditional log-likelihood, analytic
// score over theta = (beta, omega, rho), dispersion estimators and the
// multistart maximum-likelihood fit.
//
//   g(mu_t) = eta_t = x_t' beta + sum_i rho_i h(sum_j omega_ij z_{t-j})
//
// Time indices in this API are 0-based: the likelihood conditions on the
// first m observations and sums over t = m..n-1.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/special_functions/digamma.hpp>
#include <Eigen/Dense>

#include "garnn/errors.hpp"
#include "garnn/family.hpp"
#include "garnn/lagnet.hpp"
#include "garnn/optimizer.hpp"

namespace garnn {

struct GarnnSpec {
    Family family;
    Link link;
    NetSpec net;
    int covariates = 1;    // S, columns of the design matrix
    int conditioning = 0;  // m; 0 selects the default m = p

    static GarnnSpec make(const Family& family, const NetSpec& net, int covariates) {
        return {family, default_link(family), net, covariates, 0};
    }

    int m() const { return conditioning > 0 ? conditioning : net.lags; }

    /// S + I(p+1).
    int parameter_count() const { return covariates + net.nodes * (net.lags + 1); }

    bool dispersion_estimated() const { return !family.dispersion_known(); }

    /// Parameter count used by AIC, including an estimated dispersion.
    int total_parameter_count() const {
        return parameter_count() + (dispersion_estimated() ? 1 : 0);
    }

    void validate() const {
        family.validate();
        net.validate();
        if (covariates < 0) throw InvalidInput("covariate count must be >= 0");
        if (m() < net.lags) throw InvalidInput("conditioning length m must be >= lag order p");
        if (link.kind == LinkKind::Logit && link.scale != family.trials)
            throw InvalidInput("logit link scale must equal the binomial trial count");
    }
};

/// theta = (beta, omega, rho); flat layout is beta, omega row-major, rho.
struct ParamVector {
    Eigen::VectorXd beta;
    NetWeights weights;

    static ParamVector zeros(const GarnnSpec& spec) {
        return {Eigen::VectorXd::Zero(spec.covariates), NetWeights::zeros(spec.net)};
    }

    bool matches(const GarnnSpec& spec) const {
        return beta.size() == spec.covariates && weights.matches(spec.net);
    }

    Eigen::VectorXd flatten() const {
        const Eigen::Index s = beta.size();
        const Eigen::Index nodes = weights.omega.rows();
        const Eigen::Index lags = weights.omega.cols();
        Eigen::VectorXd out(s + nodes * lags + nodes);
        out.head(s) = beta;
        for (Eigen::Index i = 0; i < nodes; ++i)
            for (Eigen::Index j = 0; j < lags; ++j) out(s + i * lags + j) = weights.omega(i, j);
        out.tail(nodes) = weights.rho;
        return out;
    }

    static ParamVector unflatten(const GarnnSpec& spec, const Eigen::VectorXd& flat) {
        if (flat.size() != spec.parameter_count())
            throw InvalidInput("flat parameter vector has length " + std::to_string(flat.size()) +
                               ", expected " + std::to_string(spec.parameter_count()));
        const int s = spec.covariates;
        const int nodes = spec.net.nodes;
        const int lags = spec.net.lags;
        ParamVector out = zeros(spec);
        out.beta = flat.head(s);
        for (int i = 0; i < nodes; ++i)
            for (int j = 0; j < lags; ++j) out.weights.omega(i, j) = flat(s + i * lags + j);
        out.weights.rho = flat.tail(nodes);
        return out;
    }
};

/// Observed series, design matrix and standardized lag inputs.
struct SeriesFrame {
    std::vector<double> y;
    Eigen::MatrixXd X;
    std::optional<Standardizer> standardizer;  // absent for a constant series
    std::vector<double> z;

    std::size_t size() const { return y.size(); }
};

/// Frame with a caller-supplied input scaling (e.g. the scaling a series
/// was generated with).
inline SeriesFrame make_frame(std::vector<double> y, Eigen::MatrixXd X, const Standardizer& scaling) {
    if (static_cast<std::size_t>(X.rows()) != y.size())
        throw InvalidInput("design matrix has " + std::to_string(X.rows()) + " rows for a series of length " +
                           std::to_string(y.size()));
    for (std::size_t t = 0; t < y.size(); ++t)
        if (!std::isfinite(y[t])) throw InvalidInput("series value at index " + std::to_string(t) + " is not finite");
    if (!X.allFinite()) throw InvalidInput("design matrix contains non-finite entries");
    if (!(scaling.sd > 0.0)) throw InvalidInput("standardizer sd must be positive");
    SeriesFrame frame{std::move(y), std::move(X), scaling, {}};
    frame.z.resize(frame.y.size());
    for (std::size_t t = 0; t < frame.y.size(); ++t) frame.z[t] = scaling.apply(frame.y[t]);
    return frame;
}

/// Frame standardized with the series' own sample mean and sd. A constant
/// series is accepted but can only be used with I = 0.
inline SeriesFrame make_frame(std::vector<double> y, Eigen::MatrixXd X) {
    std::optional<Standardizer> scaling;
    try {
        scaling = standardize(y).first;
    } catch (const InvalidInput&) {
        if (y.empty()) throw InvalidInput("series is empty");
    }
    if (scaling) return make_frame(std::move(y), std::move(X), *scaling);
    if (static_cast<std::size_t>(X.rows()) != y.size())
        throw InvalidInput("design matrix row count does not match series length");
    return SeriesFrame{std::move(y), std::move(X), std::nullopt, {}};
}

namespace detail {

inline void check_compatible(const GarnnSpec& spec, const SeriesFrame& frame, const ParamVector& theta) {
    spec.validate();
    if (frame.X.cols() != spec.covariates)
        throw InvalidInput("design matrix has " + std::to_string(frame.X.cols()) + " columns, spec expects " +
                           std::to_string(spec.covariates));
    if (!theta.matches(spec)) throw InvalidInput("parameter dimensions do not match the model spec");
    if (spec.net.nodes > 0 && !frame.standardizer)
        throw InvalidInput("degenerate standardization: constant series cannot feed the lag network");
    if (frame.size() < static_cast<std::size_t>(spec.m()))
        throw InvalidInput("series shorter than the conditioning length m");
}

/// Lagged standardized inputs z_{t-1}, ..., z_{t-p}.
inline void gather_lags(const SeriesFrame& frame, std::size_t t, int lags, std::vector<double>& out) {
    out.resize(lags);
    if (frame.z.empty()) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
    }
    for (int j = 0; j < lags; ++j) out[j] = frame.z[t - 1 - j];
}

struct Accumulated {
    double loglik = 0.0;
    Eigen::VectorXd score;
};

inline Accumulated accumulate(const GarnnSpec& spec, const SeriesFrame& frame, const ParamVector& theta,
                              double phi, bool want_score) {
    check_compatible(spec, frame, theta);
    const int s = spec.covariates;
    const int nodes = spec.net.nodes;
    const int lags = spec.net.lags;
    Accumulated acc;
    if (want_score) acc.score = Eigen::VectorXd::Zero(spec.parameter_count());

    std::vector<double> z(lags);
    std::vector<double> h(nodes);
    std::vector<double> dh(nodes);
    double carry = 0.0;  // Neumaier compensation
    for (std::size_t t = spec.m(); t < frame.size(); ++t) {
        gather_lags(frame, t, lags, z);
        double eta = frame.X.row(t).dot(theta.beta);
        for (int i = 0; i < nodes; ++i) {
            double g = 0.0;
            for (int j = 0; j < lags; ++j) g += theta.weights.omega(i, j) * z[j];
            h[i] = activate(spec.net.activation, g);
            dh[i] = activate_derivative(spec.net.activation, g);
            eta += theta.weights.rho(i) * h[i];
        }
        const double mu = link_inverse(spec.link, eta);
        const double y = frame.y[t];
        const double term = loglik_term(spec.family, y, mu, phi);
        const double sum = acc.loglik + term;
        carry += std::abs(acc.loglik) >= std::abs(term) ? (acc.loglik - sum) + term : (term - sum) + acc.loglik;
        acc.loglik = sum;
        if (!want_score) continue;

        // dl_t/deta = (y - mu) / (phi V(mu)) * dmu/deta
        const double c = (y - mu) / (phi * variance_function(spec.family, mu)) * link_dmu_deta(spec.link, eta);
        acc.score.head(s) += c * frame.X.row(t).transpose();
        for (int i = 0; i < nodes; ++i) {
            const double back = c * theta.weights.rho(i) * dh[i];
            for (int j = 0; j < lags; ++j) acc.score(s + i * lags + j) += back * z[j];
            acc.score(s + nodes * lags + i) += c * h[i];
        }
    }
    acc.loglik += carry;
    return acc;
}

}  // namespace detail

/// eta_t for p <= t < n, using observed lags.
inline double eta_at(const GarnnSpec& spec, const SeriesFrame& frame, const ParamVector& theta, std::size_t t) {
    detail::check_compatible(spec, frame, theta);
    if (t < static_cast<std::size_t>(spec.net.lags) || t >= frame.size())
        throw InvalidInput("time index " + std::to_string(t) + " out of range [" + std::to_string(spec.net.lags) +
                           ", " + std::to_string(frame.size()) + ")");
    std::vector<double> z;
    detail::gather_lags(frame, t, spec.net.lags, z);
    return frame.X.row(t).dot(theta.beta) + net_forward(spec.net, theta.weights, z);
}

inline double conditional_loglik(const GarnnSpec& spec, const SeriesFrame& frame, const ParamVector& theta,
                                 double phi = 1.0) {
    return detail::accumulate(spec, frame, theta, phi, false).loglik;
}

/// Analytic score U(theta), flat layout.
inline Eigen::VectorXd score(const GarnnSpec& spec, const SeriesFrame& frame, const ParamVector& theta,
                             double phi = 1.0) {
    return detail::accumulate(spec, frame, theta, phi, true).score;
}

// ---------------------------------------------------------------------------
// Dispersion

/// Maximizer of the Normal conditional likelihood in sigma^2: mean squared
/// residual over the n - m summed terms.
inline double estimate_sigma2(std::span<const double> residuals) {
    if (residuals.empty()) throw InvalidInput("estimate_sigma2: no residuals");
    double ss = 0.0;
    for (double r : residuals) ss += r * r;
    return ss / static_cast<double>(residuals.size());
}

/// Root x of log(x) - digamma(x) = rhs, rhs > 0. The left side decreases
/// from +inf at 0+ to 0 at +inf, so the root is unique.
inline double solve_log_digamma(double rhs) {
    if (!(rhs > 0.0) || !std::isfinite(rhs)) throw InvalidInput("log-digamma equation needs a positive finite rhs");
    const auto f = [rhs](double x) { return std::log(x) - boost::math::digamma(x) - rhs; };
    double lo = 1.0;
    double hi = 1.0;
    while (f(lo) < 0.0) lo *= 0.5;
    while (f(hi) > 0.0) {
        hi *= 2.0;
        if (hi > 1e300) throw NumericFailure("log-digamma equation: root overflow");
    }
    for (int it = 0; it < 400 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

struct GammaDispersion {
    double shape = 1.0;       // nu
    double dispersion = 1.0;  // 1 / nu
    double rhs = 0.0;         // right-hand side of log(nu) - digamma(nu) = rhs
};

/// Gamma shape from the unit deviance D = 2 sum[log(mu/y) + (y - mu)/mu] over
/// n_eff summed terms: log(nu) - digamma(nu) = D / (2 n_eff), the stationary
/// point of the conditional likelihood in nu.
inline GammaDispersion estimate_gamma_dispersion(double deviance, std::size_t n_eff) {
    if (!(deviance >= 0.0) || n_eff < 1) throw InvalidInput("gamma dispersion needs deviance >= 0 and n_eff >= 1");
    if (deviance == 0.0) throw NumericFailure("gamma dispersion: zero deviance gives an unbounded shape");
    GammaDispersion out;
    out.rhs = deviance / (2.0 * static_cast<double>(n_eff));
    out.shape = solve_log_digamma(out.rhs);
    out.dispersion = 1.0 / out.shape;
    return out;
}

// ---------------------------------------------------------------------------
// Fitting

struct FitControls {
    OptimizerControls optimizer;
    int restarts = 5;
    std::uint64_t seed = 1;
    std::optional<ParamVector> init;  // used for the first restart when set
    double init_weight_range = 0.5;   // omega, rho ~ U(-r, r) / sqrt(p)
};

struct FitResult {
    ParamVector theta_hat;
    std::optional<double> dispersion_hat;
    double loglik = 0.0;
    double aic = 0.0;
    int parameter_count = 0;  // including an estimated dispersion
    bool converged = false;
    int iterations = 0;
    double gradient_norm = 0.0;
    double deviance = 0.0;     // unit-dispersion deviance at theta_hat
    std::vector<double> fitted;  // mu_hat for t = m..n-1
    int restarts_completed = 0;
    int best_restart = 0;
};

inline double aic(double loglik, int kappa) {
    return -2.0 * loglik + 2.0 * static_cast<double>(kappa);
}

/// mu_hat_t = g^{-1}(eta_t) for t = m..n-1.
inline std::vector<double> fitted_values(const GarnnSpec& spec, const SeriesFrame& frame, const ParamVector& theta) {
    detail::check_compatible(spec, frame, theta);
    std::vector<double> out;
    out.reserve(frame.size() - spec.m());
    for (std::size_t t = spec.m(); t < frame.size(); ++t)
        out.push_back(link_inverse(spec.link, eta_at(spec, frame, theta, t)));
    return out;
}

namespace detail {

/// Least-squares regression of g(0.5 (y + ybar)) on X; a finite starting
/// point for the GLM part.
inline Eigen::VectorXd working_response_start(const GarnnSpec& spec, const SeriesFrame& frame) {
    const std::size_t m = spec.m();
    const Eigen::Index rows = static_cast<Eigen::Index>(frame.size() - m);
    double ybar = 0.0;
    for (std::size_t t = m; t < frame.size(); ++t) ybar += frame.y[t];
    ybar /= static_cast<double>(rows);
    Eigen::VectorXd target(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        double v = 0.5 * (frame.y[m + r] + ybar);
        if (spec.family.kind == FamilyKind::Binomial)
            v = std::clamp(v, 0.01 * spec.family.trials, 0.99 * spec.family.trials);
        if (spec.link.kind != LinkKind::Identity) v = std::max(v, 1e-3);
        target(r) = link_eval(spec.link, v);
    }
    const Eigen::MatrixXd x = frame.X.bottomRows(rows);
    return x.colPivHouseholderQr().solve(target);
}

inline BfgsResult minimize_negloglik(const GarnnSpec& spec, const SeriesFrame& frame, const Eigen::VectorXd& start,
                                     const OptimizerControls& controls) {
    const Objective f = [&](const Eigen::VectorXd& v) {
        return -conditional_loglik(spec, frame, ParamVector::unflatten(spec, v));
    };
    const Gradient g = [&](const Eigen::VectorXd& v) {
        return Eigen::VectorXd(-score(spec, frame, ParamVector::unflatten(spec, v)));
    };
    return bfgs_minimize(f, g, start, controls);
}

}  // namespace detail

/// Maximum-likelihood fit of the GLM part alone (I = 0) on the same frame.
inline Eigen::VectorXd fit_glm_coefficients(const GarnnSpec& spec, const SeriesFrame& frame,
                                            const OptimizerControls& controls = {}) {
    GarnnSpec glm = spec;
    glm.net.nodes = 0;
    glm.conditioning = spec.m();
    Eigen::VectorXd start = detail::working_response_start(glm, frame);
    const auto finite_at = [&](const Eigen::VectorXd& v) {
        return std::isfinite(detail::guarded(
            [&](const Eigen::VectorXd& w) { return -conditional_loglik(glm, frame, ParamVector::unflatten(glm, w)); },
            v));
    };
    if (!start.allFinite() || !finite_at(start)) {
        // Fall back to an intercept-like start on any constant column.
        start.setZero();
        for (Eigen::Index c = 0; c < frame.X.cols(); ++c) {
            const double v = frame.X(0, c);
            if (v != 0.0 && (frame.X.col(c).array() == v).all()) {
                double ybar = 0.0;
                for (std::size_t t = spec.m(); t < frame.size(); ++t) ybar += frame.y[t];
                ybar /= static_cast<double>(frame.size() - spec.m());
                start(c) = link_eval(spec.link, std::max(ybar, 1e-3)) / v;
                break;
            }
        }
    }
    return detail::minimize_negloglik(glm, frame, start, controls).x;
}

/// Multistart BFGS maximization of the conditional likelihood, followed by
/// two-step estimation of any unknown dispersion.
inline FitResult fit(const GarnnSpec& spec, const SeriesFrame& frame, const FitControls& controls = {}) {
    spec.validate();
    controls.optimizer.validate();
    if (controls.restarts < 1) throw InvalidInput("restarts must be >= 1");
    if (frame.X.cols() != spec.covariates) throw InvalidInput("design matrix column count does not match spec");
    if (controls.init && !controls.init->matches(spec)) throw InvalidInput("initial parameters do not match spec");
    const std::size_t m = spec.m();
    if (frame.size() < m || frame.size() - m < static_cast<std::size_t>(spec.total_parameter_count()))
        throw InvalidInput("fit needs more observations (n - m) than parameters");
    if (spec.net.nodes > 0 && !frame.standardizer)
        throw InvalidInput("degenerate standardization: constant series cannot feed the lag network");

    std::optional<Eigen::VectorXd> glm_beta;
    const auto base_beta = [&]() -> const Eigen::VectorXd& {
        if (!glm_beta) glm_beta = fit_glm_coefficients(spec, frame, controls.optimizer);
        return *glm_beta;
    };

    std::optional<BfgsResult> best;
    int best_index = 0;
    int completed = 0;
    std::string diagnostics;
    // With no hidden nodes the likelihood has no random component to restart.
    const int restarts = spec.net.nodes == 0 ? 1 : controls.restarts;
    for (int r = 0; r < restarts; ++r) {
        try {
            Eigen::VectorXd start;
            if (r == 0 && controls.init) {
                start = controls.init->flatten();
            } else {
                ParamVector theta = ParamVector::zeros(spec);
                theta.beta = base_beta();
                std::seed_seq seq{static_cast<std::uint32_t>(controls.seed), static_cast<std::uint32_t>(controls.seed >> 32),
                                  static_cast<std::uint32_t>(r)};
                std::mt19937_64 rng(seq);
                std::uniform_real_distribution<double> unif(-controls.init_weight_range, controls.init_weight_range);
                const double scale = 1.0 / std::sqrt(static_cast<double>(spec.net.lags));
                for (Eigen::Index i = 0; i < theta.weights.omega.rows(); ++i)
                    for (Eigen::Index j = 0; j < theta.weights.omega.cols(); ++j)
                        theta.weights.omega(i, j) = scale * unif(rng);
                for (Eigen::Index i = 0; i < theta.weights.rho.size(); ++i) theta.weights.rho(i) = scale * unif(rng);
                start = theta.flatten();
            }
            BfgsResult run = detail::minimize_negloglik(spec, frame, start, controls.optimizer);
            ++completed;
            if (!best || run.value < best->value) {
                best = std::move(run);
                best_index = r;
            }
        } catch (const NumericFailure& e) {
            diagnostics += " [restart " + std::to_string(r) + ": " + e.what() + "]";
        } catch (const DomainError& e) {
            diagnostics += " [restart " + std::to_string(r) + ": " + e.what() + "]";
        }
    }
    if (!best) throw NumericFailure("fit failed: no restart produced a finite likelihood" + diagnostics);

    FitResult out;
    out.theta_hat = ParamVector::unflatten(spec, best->x);
    out.converged = best->converged;
    out.iterations = best->iterations;
    out.gradient_norm = best->gradient_norm;
    out.restarts_completed = completed;
    out.best_restart = best_index;
    out.fitted = fitted_values(spec, frame, out.theta_hat);
    const std::span<const double> observed(frame.y.data() + m, frame.size() - m);
    out.deviance = deviance(spec.family, observed, out.fitted);

    double phi = 1.0;
    if (spec.family.kind == FamilyKind::Normal) {
        std::vector<double> residuals(out.fitted.size());
        for (std::size_t k = 0; k < residuals.size(); ++k) residuals[k] = observed[k] - out.fitted[k];
        phi = estimate_sigma2(residuals);
        if (!(phi > 0.0)) throw NumericFailure("fit: residual variance is zero (degenerate sigma^2)");
        out.dispersion_hat = phi;
    } else if (spec.family.kind == FamilyKind::Gamma) {
        phi = estimate_gamma_dispersion(out.deviance, observed.size()).dispersion;
        out.dispersion_hat = phi;
    }
    out.loglik = conditional_loglik(spec, frame, out.theta_hat, phi);
    out.parameter_count = spec.total_parameter_count();
    out.aic = aic(out.loglik, out.parameter_count);
    return out;
}

// ---------------------------------------------------------------------------
// Negative Binomial size

struct ProfileResult {
    double k_hat = 0.0;
    FitResult fit;
    std::vector<double> grid;
    std::vector<std::optional<double>> profile_loglik;  // empty where the fit failed
};

/// Fits the Negative Binomial model at each k and keeps the k with the
/// largest conditional log-likelihood.
inline ProfileResult profile_k(const GarnnSpec& spec, const SeriesFrame& frame, std::span<const double> k_grid,
                               const FitControls& controls = {}) {
    if (spec.family.kind != FamilyKind::NegativeBinomial) throw InvalidInput("profile_k needs a negative binomial spec");
    if (k_grid.empty()) throw InvalidInput("profile_k: empty grid");
    ProfileResult out;
    out.grid.assign(k_grid.begin(), k_grid.end());
    std::string diagnostics;
    for (double k : k_grid) {
        GarnnSpec cell = spec;
        cell.family.size = k;
        try {
            FitResult r = fit(cell, frame, controls);
            out.profile_loglik.emplace_back(r.loglik);
            if (out.k_hat == 0.0 || r.loglik > out.fit.loglik) {
                out.k_hat = k;
                out.fit = std::move(r);
            }
        } catch (const NumericFailure& e) {
            out.profile_loglik.emplace_back(std::nullopt);
            diagnostics += std::string(" [k=") + std::to_string(k) + ": " + e.what() + "]";
        }
    }
    if (out.k_hat == 0.0) throw NumericFailure("profile_k: every fit failed" + diagnostics);
    return out;
}

}  // namespace garnn
