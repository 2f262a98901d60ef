#pragma once

// Exponential-family response distributions and link functions.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <string_view>

#include "garnn/errors.hpp"

namespace garnn {

enum class FamilyKind { Poisson, Binomial, NegativeBinomial, Normal, Gamma };
enum class LinkKind { Log, Logit, Identity, Reciprocal };

/// Conditional distribution of Y_t given the past.
///
/// Poisson, Binomial and Negative Binomial (with k held fixed) have unit
/// dispersion. Normal (phi = sigma^2) and Gamma (phi = 1/shape) carry an
/// unknown dispersion that is estimated after the mean parameters.
struct Family {
    FamilyKind kind = FamilyKind::Poisson;
    int trials = 1;     // Binomial m
    double size = 1.0;  // Negative Binomial k

    static Family poisson() { return {FamilyKind::Poisson, 1, 1.0}; }
    static Family binomial(int m) { return {FamilyKind::Binomial, m, 1.0}; }
    static Family negative_binomial(double k) { return {FamilyKind::NegativeBinomial, 1, k}; }
    static Family normal() { return {FamilyKind::Normal, 1, 1.0}; }
    static Family gamma() { return {FamilyKind::Gamma, 1, 1.0}; }

    bool dispersion_known() const noexcept {
        return kind == FamilyKind::Poisson || kind == FamilyKind::Binomial ||
               kind == FamilyKind::NegativeBinomial;
    }

    void validate() const {
        if (kind == FamilyKind::Binomial && trials < 1)
            throw InvalidInput("binomial family requires trials >= 1");
        if (kind == FamilyKind::NegativeBinomial && !(size > 0.0 && std::isfinite(size)))
            throw InvalidInput("negative binomial family requires size k > 0");
    }

    bool operator==(const Family&) const = default;
};

/// Link g(mu) = eta. `scale` is the binomial trial count m used by Logit.
struct Link {
    LinkKind kind = LinkKind::Log;
    double scale = 1.0;

    bool operator==(const Link&) const = default;
};

/// Canonical link for every family except Negative Binomial, which uses Log.
inline Link default_link(const Family& family) {
    switch (family.kind) {
        case FamilyKind::Poisson:
        case FamilyKind::NegativeBinomial: return {LinkKind::Log, 1.0};
        case FamilyKind::Binomial: return {LinkKind::Logit, static_cast<double>(family.trials)};
        case FamilyKind::Normal: return {LinkKind::Identity, 1.0};
        case FamilyKind::Gamma: return {LinkKind::Reciprocal, 1.0};
    }
    return {};
}

inline bool is_canonical(const Family& family, const Link& link) {
    switch (family.kind) {
        case FamilyKind::Poisson: return link.kind == LinkKind::Log;
        case FamilyKind::Binomial: return link.kind == LinkKind::Logit;
        case FamilyKind::Normal: return link.kind == LinkKind::Identity;
        case FamilyKind::Gamma: return link.kind == LinkKind::Reciprocal;
        case FamilyKind::NegativeBinomial: return false;
    }
    return false;
}

// ---------------------------------------------------------------------------
// Names

inline std::string_view to_string(FamilyKind kind) {
    switch (kind) {
        case FamilyKind::Poisson: return "poisson";
        case FamilyKind::Binomial: return "binomial";
        case FamilyKind::NegativeBinomial: return "negbin";
        case FamilyKind::Normal: return "normal";
        case FamilyKind::Gamma: return "gamma";
    }
    return "?";
}

inline std::string_view to_string(LinkKind kind) {
    switch (kind) {
        case LinkKind::Log: return "log";
        case LinkKind::Logit: return "logit";
        case LinkKind::Identity: return "identity";
        case LinkKind::Reciprocal: return "reciprocal";
    }
    return "?";
}

inline FamilyKind parse_family_kind(std::string_view name) {
    if (name == "poisson") return FamilyKind::Poisson;
    if (name == "binomial") return FamilyKind::Binomial;
    if (name == "negbin" || name == "negative_binomial") return FamilyKind::NegativeBinomial;
    if (name == "normal" || name == "gaussian") return FamilyKind::Normal;
    if (name == "gamma") return FamilyKind::Gamma;
    throw InvalidInput("unknown family '" + std::string(name) + "'");
}

inline LinkKind parse_link_kind(std::string_view name) {
    if (name == "log") return LinkKind::Log;
    if (name == "logit") return LinkKind::Logit;
    if (name == "identity") return LinkKind::Identity;
    if (name == "reciprocal" || name == "inverse") return LinkKind::Reciprocal;
    throw InvalidInput("unknown link '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Support and mean domain

namespace detail {

inline bool is_count(double y) { return y >= 0.0 && std::floor(y) == y && std::isfinite(y); }

/// x*log(x/y) with the 0*log(0) = 0 convention.
inline double xlogx_over(double x, double y) { return x == 0.0 ? 0.0 : x * std::log(x / y); }

}  // namespace detail

inline bool in_support(const Family& family, double y) {
    switch (family.kind) {
        case FamilyKind::Poisson:
        case FamilyKind::NegativeBinomial: return detail::is_count(y);
        case FamilyKind::Binomial: return detail::is_count(y) && y <= family.trials;
        case FamilyKind::Normal: return std::isfinite(y);
        case FamilyKind::Gamma: return y > 0.0 && std::isfinite(y);
    }
    return false;
}

inline bool in_mean_domain(const Family& family, double mu) {
    if (!std::isfinite(mu)) return false;
    switch (family.kind) {
        case FamilyKind::Poisson:
        case FamilyKind::NegativeBinomial:
        case FamilyKind::Gamma: return mu > 0.0;
        case FamilyKind::Binomial: return mu > 0.0 && mu < family.trials;
        case FamilyKind::Normal: return true;
    }
    return false;
}

inline void check_support(const Family& family, double y) {
    if (!in_support(family, y))
        throw InvalidInput("observation " + std::to_string(y) + " outside the support of the " +
                           std::string(to_string(family.kind)) + " family");
}

inline void check_mean(const Family& family, double mu) {
    if (!in_mean_domain(family, mu))
        throw DomainError("mean " + std::to_string(mu) + " outside the domain of the " +
                          std::string(to_string(family.kind)) + " family");
}

// ---------------------------------------------------------------------------
// Densities

/// log f(y | mu, phi). phi is ignored by the unit-dispersion families.
inline double loglik_term(const Family& family, double y, double mu, double phi = 1.0) {
    check_support(family, y);
    check_mean(family, mu);
    switch (family.kind) {
        case FamilyKind::Poisson:
            return (y == 0.0 ? 0.0 : y * std::log(mu)) - mu - std::lgamma(y + 1.0);
        case FamilyKind::Binomial: {
            const double m = family.trials;
            const double log_choose =
                std::lgamma(m + 1.0) - std::lgamma(y + 1.0) - std::lgamma(m - y + 1.0);
            return (y == 0.0 ? 0.0 : y * std::log(mu)) +
                   (m - y == 0.0 ? 0.0 : (m - y) * std::log(m - mu)) - m * std::log(m) +
                   log_choose;
        }
        case FamilyKind::NegativeBinomial: {
            const double k = family.size;
            return std::lgamma(k + y) - std::lgamma(k) - std::lgamma(y + 1.0) +
                   k * std::log(k / (mu + k)) + (y == 0.0 ? 0.0 : y * std::log(mu / (mu + k)));
        }
        case FamilyKind::Normal: {
            if (!(phi > 0.0)) throw InvalidInput("normal family requires sigma^2 > 0");
            const double r = y - mu;
            return -0.5 * std::log(2.0 * std::numbers::pi * phi) - 0.5 * r * r / phi;
        }
        case FamilyKind::Gamma: {
            if (!(phi > 0.0)) throw InvalidInput("gamma family requires dispersion > 0");
            const double shape = 1.0 / phi;
            return shape * (-y / mu - std::log(mu)) + shape * std::log(shape * y) - std::log(y) -
                   std::lgamma(shape);
        }
    }
    return 0.0;
}

/// V(mu) with Var[Y] = phi * V(mu).
inline double variance_function(const Family& family, double mu) {
    check_mean(family, mu);
    switch (family.kind) {
        case FamilyKind::Poisson: return mu;
        case FamilyKind::Binomial: return mu * (1.0 - mu / family.trials);
        case FamilyKind::NegativeBinomial: return mu + mu * mu / family.size;
        case FamilyKind::Normal: return 1.0;
        case FamilyKind::Gamma: return mu * mu;
    }
    return 1.0;
}

// ---------------------------------------------------------------------------
// Links

inline double link_eval(const Link& link, double mu) {
    switch (link.kind) {
        case LinkKind::Log:
            if (!(mu > 0.0)) throw InvalidInput("log link requires mu > 0");
            return std::log(mu);
        case LinkKind::Logit:
            if (!(mu > 0.0 && mu < link.scale)) throw InvalidInput("logit link requires 0 < mu < m");
            return std::log(mu / (link.scale - mu));
        case LinkKind::Identity:
            if (!std::isfinite(mu)) throw InvalidInput("identity link requires finite mu");
            return mu;
        case LinkKind::Reciprocal:
            if (!(mu > 0.0)) throw InvalidInput("reciprocal link requires mu > 0");
            return 1.0 / mu;
    }
    return 0.0;
}

inline double link_inverse(const Link& link, double eta) {
    if (!std::isfinite(eta)) throw DomainError("non-finite linear predictor");
    switch (link.kind) {
        case LinkKind::Log: return std::exp(eta);
        case LinkKind::Logit: return link.scale / (1.0 + std::exp(-eta));
        case LinkKind::Identity: return eta;
        case LinkKind::Reciprocal:
            if (!(eta > 0.0)) throw DomainError("reciprocal link requires eta > 0");
            return 1.0 / eta;
    }
    return 0.0;
}

/// d mu / d eta at eta.
inline double link_dmu_deta(const Link& link, double eta) {
    if (!std::isfinite(eta)) throw DomainError("non-finite linear predictor");
    switch (link.kind) {
        case LinkKind::Log: return std::exp(eta);
        case LinkKind::Logit: {
            const double e = std::exp(-std::abs(eta));
            return link.scale * e / ((1.0 + e) * (1.0 + e));
        }
        case LinkKind::Identity: return 1.0;
        case LinkKind::Reciprocal:
            if (!(eta > 0.0)) throw DomainError("reciprocal link requires eta > 0");
            return -1.0 / (eta * eta);
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Deviance

/// Unit deviance d(y, mu); twice the log-likelihood gap to the saturated
/// model at unit dispersion.
inline double unit_deviance(const Family& family, double y, double mu) {
    check_support(family, y);
    check_mean(family, mu);
    switch (family.kind) {
        case FamilyKind::Poisson: return 2.0 * (detail::xlogx_over(y, mu) - (y - mu));
        case FamilyKind::Binomial: {
            const double m = family.trials;
            return 2.0 * (detail::xlogx_over(y, mu) + detail::xlogx_over(m - y, m - mu));
        }
        case FamilyKind::NegativeBinomial: {
            const double k = family.size;
            return 2.0 * (detail::xlogx_over(y, mu) - (y + k) * std::log((y + k) / (mu + k)));
        }
        case FamilyKind::Normal: return (y - mu) * (y - mu);
        case FamilyKind::Gamma: return 2.0 * (std::log(mu / y) + (y - mu) / mu);
    }
    return 0.0;
}

inline double deviance(const Family& family, std::span<const double> y, std::span<const double> mu) {
    if (y.size() != mu.size()) throw InvalidInput("deviance: length mismatch between y and mu");
    double total = 0.0;
    for (std::size_t t = 0; t < y.size(); ++t) total += unit_deviance(family, y[t], mu[t]);
    // Rounding can push an exact fit a hair below zero.
    return total < 0.0 ? 0.0 : total;
}

}  // namespace garnn
