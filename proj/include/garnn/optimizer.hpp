#pragma once

// Unconstrained quasi-Newton minimization (BFGS on the inverse Hessian) with a
// backtracking line search, and the central-difference gradient used as a
// test oracle.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "garnn/errors.hpp"

namespace garnn {

using Objective = std::function<double(const Eigen::VectorXd&)>;
using Gradient = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct OptimizerControls {
    double gradient_tolerance = 1e-6;
    int max_iterations = 2000;
    double sufficient_decrease = 1e-4;  // Armijo constant c1
    double curvature = 0.9;             // Wolfe constant c2
    int max_backtracks = 60;

    void validate() const {
        if (!(gradient_tolerance > 0.0)) throw InvalidInput("gradient tolerance must be positive");
        if (max_iterations < 0) throw InvalidInput("max iterations must be >= 0");
        if (!(0.0 < sufficient_decrease && sufficient_decrease < curvature && curvature < 1.0))
            throw InvalidInput("line search constants must satisfy 0 < c1 < c2 < 1");
        if (max_backtracks < 1) throw InvalidInput("max backtracks must be >= 1");
    }
};

/// One entry per accepted iterate; entry 0 is the starting point.
struct OptimizerTrace {
    std::vector<double> objective;
    std::vector<double> gradient_norm;
    std::vector<double> step_length;
};

struct BfgsResult {
    Eigen::VectorXd x;
    double value = 0.0;
    double gradient_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    bool line_search_failed = false;
    OptimizerTrace trace;
};

namespace detail {

/// Objective value with domain violations mapped to +inf.
inline double guarded(const Objective& f, const Eigen::VectorXd& x) {
    try {
        const double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    } catch (const DomainError&) {
        return std::numeric_limits<double>::infinity();
    }
}

}  // namespace detail

inline BfgsResult bfgs_minimize(const Objective& objective, const Gradient& gradient,
                                Eigen::VectorXd x0, const OptimizerControls& controls = {}) {
    controls.validate();
    const Eigen::Index dim = x0.size();

    BfgsResult out;
    out.x = std::move(x0);
    out.value = detail::guarded(objective, out.x);
    if (!std::isfinite(out.value)) throw NumericFailure("bfgs: objective is not finite at x0");

    Eigen::VectorXd g = gradient(out.x);
    Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(dim, dim);
    bool updated = false;

    out.gradient_norm = g.norm();
    out.trace.objective.push_back(out.value);
    out.trace.gradient_norm.push_back(out.gradient_norm);
    out.trace.step_length.push_back(0.0);

    const double c1 = controls.sufficient_decrease;
    const double c2 = controls.curvature;

    while (true) {
        if (out.gradient_norm <= controls.gradient_tolerance) {
            out.converged = true;
            break;
        }
        if (out.iterations >= controls.max_iterations) break;

        Eigen::VectorXd dir = -h_inv * g;
        double slope = g.dot(dir);
        if (!(slope < 0.0)) {
            h_inv.setIdentity();
            updated = false;
            dir = -g;
            slope = g.dot(dir);
        }

        double alpha = updated ? 1.0 : std::min(1.0, 1.0 / out.gradient_norm);
        Eigen::VectorXd x_new = out.x + alpha * dir;
        double f_new = detail::guarded(objective, x_new);
        bool accepted = false;
        bool backtracked = false;
        std::optional<Eigen::VectorXd> g_trial;
        for (int k = 0; k < controls.max_backtracks; ++k) {
            if (f_new <= out.value + c1 * alpha * slope) {
                accepted = true;
                break;
            }
            // Decrease below rounding level of f: approximate Wolfe test on
            // the directional derivative instead.
            if (f_new <= out.value) {
                Eigen::VectorXd gt = gradient(x_new);
                const double dphi = gt.dot(dir);
                if (dphi >= c2 * slope && dphi <= (2.0 * c1 - 1.0) * slope) {
                    g_trial = std::move(gt);
                    accepted = true;
                    break;
                }
            }
            backtracked = true;
            double next = 0.5 * alpha;
            if (std::isfinite(f_new)) {
                // Minimizer of the quadratic through f(0), f'(0), f(alpha).
                const double denom = 2.0 * (f_new - out.value - slope * alpha);
                if (denom > 0.0) next = std::clamp(-slope * alpha * alpha / denom, 0.1 * alpha, 0.5 * alpha);
            }
            alpha = next;
            x_new = out.x + alpha * dir;
            f_new = detail::guarded(objective, x_new);
        }
        if (!accepted) {
            out.line_search_failed = true;
            break;
        }

        Eigen::VectorXd g_new = g_trial ? std::move(*g_trial) : gradient(x_new);

        // Step too short for the curvature condition: extend while the
        // sufficient decrease still holds.
        if (!backtracked) {
            for (int k = 0; k < 20 && g_new.dot(dir) < c2 * slope; ++k) {
                const double trial_alpha = 2.0 * alpha;
                Eigen::VectorXd x_try = out.x + trial_alpha * dir;
                const double f_try = detail::guarded(objective, x_try);
                if (!(f_try <= out.value + c1 * trial_alpha * slope) || !(f_try <= f_new)) break;
                alpha = trial_alpha;
                x_new = std::move(x_try);
                f_new = f_try;
                g_new = gradient(x_new);
            }
        }

        const Eigen::VectorXd s = x_new - out.x;
        const Eigen::VectorXd yv = g_new - g;
        const double sy = s.dot(yv);
        const bool curvature_ok = g_new.dot(dir) >= c2 * slope;
        if (curvature_ok && sy > 1e-12 * s.norm() * yv.norm()) {
            if (!updated) h_inv *= sy / yv.squaredNorm();
            const double r = 1.0 / sy;
            const Eigen::VectorXd hy = h_inv * yv;
            // H+ = (I - r s y') H (I - r y s') + r s s'
            h_inv += (r * r * yv.dot(hy) + r) * (s * s.transpose()) -
                     r * (hy * s.transpose() + s * hy.transpose());
            h_inv = 0.5 * (h_inv + h_inv.transpose()).eval();
            updated = true;
        }

        const bool stalled = s.norm() <= 1e-15 * (1.0 + out.x.norm());
        out.x = std::move(x_new);
        out.value = f_new;
        g = std::move(g_new);
        out.gradient_norm = g.norm();
        ++out.iterations;
        out.trace.objective.push_back(out.value);
        out.trace.gradient_norm.push_back(out.gradient_norm);
        out.trace.step_length.push_back(s.norm());
        if (stalled && out.gradient_norm > controls.gradient_tolerance) {
            out.line_search_failed = true;
            break;
        }
    }
    return out;
}

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h.
inline Eigen::VectorXd finite_diff_grad(const Objective& objective, const Eigen::VectorXd& x,
                                        double step = 1e-6) {
    if (!(step > 0.0)) throw InvalidInput("finite difference step must be positive");
    Eigen::VectorXd out(x.size());
    Eigen::VectorXd probe = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        double up = 0.0;
        double down = 0.0;
        try {
            probe(i) = x(i) + step;
            up = objective(probe);
            probe(i) = x(i) - step;
            down = objective(probe);
        } catch (const DomainError& e) {
            throw NumericFailure("finite difference: objective undefined near coordinate " +
                                 std::to_string(i) + " (" + e.what() + ")");
        }
        probe(i) = x(i);
        if (!std::isfinite(up) || !std::isfinite(down))
            throw NumericFailure("finite difference: non-finite objective at coordinate " +
                                 std::to_string(i));
        out(i) = (up - down) / (2.0 * step);
    }
    return out;
}

}  // namespace garnn
