#pragma once

// Model selection: AIC, analysis-of-deviance tests for nested fits and the
// two-stage selection procedure (architecture by AIC, then the linear
// predictor by a nested deviance ladder).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <Eigen/Dense>

#include "garnn/errors.hpp"
#include "garnn/model.hpp"

namespace garnn {

/// P(X > x) for X ~ chi^2(df).
inline double chisq_upper_tail(double x, double df) {
    if (!(df > 0.0)) throw InvalidInput("chi-squared df must be positive");
    if (!(x > 0.0)) return 1.0;
    if (std::isinf(x)) return 0.0;
    return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

/// P(X > x) for X ~ F(df1, df2).
inline double f_upper_tail(double x, double df1, double df2) {
    if (!(df1 > 0.0) || !(df2 > 0.0)) throw InvalidInput("F df must be positive");
    if (!(x > 0.0)) return 1.0;
    if (std::isinf(x)) return 0.0;
    return boost::math::ibeta(0.5 * df2, 0.5 * df1, df2 / (df2 + df1 * x));
}

enum class TestKind { ChiSquared, F };

struct DevianceTest {
    TestKind kind = TestKind::ChiSquared;
    double statistic = 0.0;
    int df = 0;
    int df_denominator = 0;  // F only
    double p_value = 1.0;
};

/// Lambda = (D0 - D1) / phi = 2 (l1 - l0) / phi on df = kappa1 - kappa0.
/// The log-likelihoods are those of the unit-dispersion kernel when phi != 1;
/// for the known-dispersion families phi = 1 and they are the full values.
inline DevianceTest deviance_chisq_test(double loglik0, int kappa0, double loglik1, int kappa1, double phi = 1.0) {
    if (kappa1 <= kappa0) throw InvalidInput("nested test needs kappa1 > kappa0");
    if (!(phi > 0.0)) throw InvalidInput("dispersion must be positive");
    DevianceTest out;
    out.kind = TestKind::ChiSquared;
    out.statistic = std::max(0.0, 2.0 * (loglik1 - loglik0) / phi);
    out.df = kappa1 - kappa0;
    out.p_value = chisq_upper_tail(out.statistic, out.df);
    return out;
}

/// lambda_F = (D0 - D1) / (phi_hat (kappa1 - kappa0)) on
/// (kappa1 - kappa0, n_eff - kappa1) df, with n_eff = n - m.
inline DevianceTest deviance_f_test(double deviance0, double deviance1, int kappa0, int kappa1, double phi_hat,
                                    int n_eff) {
    if (kappa1 <= kappa0) throw InvalidInput("nested test needs kappa1 > kappa0");
    if (!(phi_hat > 0.0)) throw InvalidInput("estimated dispersion must be positive");
    const int denominator = n_eff - kappa1;
    if (denominator <= 0) throw InvalidInput("F test: nonpositive denominator degrees of freedom");
    DevianceTest out;
    out.kind = TestKind::F;
    out.df = kappa1 - kappa0;
    out.df_denominator = denominator;
    out.statistic = std::max(0.0, (deviance0 - deviance1) / (phi_hat * out.df));
    out.p_value = f_upper_tail(out.statistic, out.df, denominator);
    return out;
}

// ---------------------------------------------------------------------------
// Two-stage selection

struct SelectionGrid {
    std::vector<int> lags{1};
    std::vector<int> nodes{1};
    std::vector<double> sizes;  // Negative Binomial k values; ignored otherwise
};

struct GridCell {
    int lags = 0;
    int nodes = 0;
    std::optional<double> size;
    std::optional<FitResult> fit;  // empty when the fit failed
    std::string error;
};

struct LadderStep {
    std::size_t smaller = 0;  // index into the ladder
    std::size_t larger = 0;
    DevianceTest test;
};

struct SelectionReport {
    std::vector<GridCell> stage_one;
    std::size_t chosen_cell = 0;
    int conditioning = 0;  // common m used by every fit
    std::vector<std::vector<int>> ladder;
    std::vector<FitResult> ladder_fits;
    std::vector<LadderStep> tests;  // (k, k+1) for every consecutive pair
    std::size_t chosen_predictor = 0;
    GarnnSpec chosen_spec;
    double alpha = 0.05;
};

/// Frame restricted to the given design-matrix columns.
inline SeriesFrame select_columns(const SeriesFrame& frame, std::span<const int> columns) {
    SeriesFrame out = frame;
    out.X.resize(frame.X.rows(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (columns[c] < 0 || columns[c] >= frame.X.cols())
            throw InvalidInput("predictor column " + std::to_string(columns[c]) + " out of range");
        out.X.col(static_cast<Eigen::Index>(c)) = frame.X.col(columns[c]);
    }
    return out;
}

namespace detail {

inline bool strictly_nested(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() >= b.size()) return false;
    return std::all_of(a.begin(), a.end(), [&](int c) { return std::find(b.begin(), b.end(), c) != b.end(); });
}

/// theta of the smaller model embedded in the larger one, new columns at 0.
inline ParamVector embed(const ParamVector& small, const std::vector<int>& small_cols, const std::vector<int>& large_cols) {
    ParamVector out = small;
    out.beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(large_cols.size()));
    for (std::size_t i = 0; i < small_cols.size(); ++i) {
        const auto pos = std::find(large_cols.begin(), large_cols.end(), small_cols[i]) - large_cols.begin();
        out.beta(pos) = small.beta(static_cast<Eigen::Index>(i));
    }
    return out;
}

}  // namespace detail

/// Stage one fits every (p, I, k) cell with the maximal predictor (the last
/// ladder entry) and keeps the minimum-AIC cell. Stage two fits the ladder
/// with that architecture, tests each consecutive pair, and walks down from
/// the maximal model until a test is significant at `alpha`.
///
/// All fits condition on the same m = max(grid lags) so their likelihoods
/// cover the same observations.
inline SelectionReport two_stage_select(const SeriesFrame& frame, const Family& family, const Link& link,
                                        Activation activation, const SelectionGrid& grid,
                                        const std::vector<std::vector<int>>& ladder, const FitControls& controls = {},
                                        double alpha = 0.05) {
    if (grid.lags.empty() || grid.nodes.empty()) throw InvalidInput("selection grid is empty");
    if (ladder.empty()) throw InvalidInput("predictor ladder is empty");
    for (std::size_t k = 1; k < ladder.size(); ++k)
        if (!detail::strictly_nested(ladder[k - 1], ladder[k]))
            throw InvalidInput("predictor ladder is not strictly nested at step " + std::to_string(k));
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("significance level must lie in (0, 1)");
    const bool negbin = family.kind == FamilyKind::NegativeBinomial;
    if (negbin && grid.sizes.empty()) throw InvalidInput("negative binomial selection needs a k grid");

    SelectionReport report;
    report.ladder = ladder;
    report.alpha = alpha;
    report.conditioning = *std::max_element(grid.lags.begin(), grid.lags.end());

    const auto& maximal = ladder.back();
    const SeriesFrame maximal_frame = select_columns(frame, maximal);
    std::vector<std::optional<double>> sizes;
    if (negbin)
        for (double k : grid.sizes) sizes.emplace_back(k);
    else
        sizes.emplace_back(std::nullopt);

    for (const auto& size : sizes) {
        for (int p : grid.lags) {
            for (int nodes : grid.nodes) {
                GridCell cell{p, nodes, size, std::nullopt, {}};
                GarnnSpec spec{family, link, NetSpec{p, nodes, activation}, static_cast<int>(maximal.size()),
                               report.conditioning};
                if (size) spec.family.size = *size;
                try {
                    cell.fit = fit(spec, maximal_frame, controls);
                } catch (const NumericFailure& e) {
                    cell.error = e.what();
                }
                report.stage_one.push_back(std::move(cell));
            }
        }
    }

    std::optional<std::size_t> best;
    for (std::size_t c = 0; c < report.stage_one.size(); ++c) {
        const auto& cell = report.stage_one[c];
        if (cell.fit && (!best || cell.fit->aic < report.stage_one[*best].fit->aic)) best = c;
    }
    if (!best) throw NumericFailure("two-stage selection: every stage-one fit failed");
    report.chosen_cell = *best;
    const GridCell& chosen = report.stage_one[*best];

    GarnnSpec base{family, link, NetSpec{chosen.lags, chosen.nodes, activation}, 0, report.conditioning};
    if (chosen.size) base.family.size = *chosen.size;

    // Each larger model starts its first restart from the smaller model's
    // estimate, so its likelihood cannot fall below the smaller one.
    std::vector<GarnnSpec> specs;
    for (std::size_t k = 0; k < ladder.size(); ++k) {
        GarnnSpec spec = base;
        spec.covariates = static_cast<int>(ladder[k].size());
        FitControls step_controls = controls;
        if (k > 0) step_controls.init = detail::embed(report.ladder_fits.back().theta_hat, ladder[k - 1], ladder[k]);
        report.ladder_fits.push_back(fit(spec, select_columns(frame, ladder[k]), step_controls));
        specs.push_back(spec);
    }

    const int n_eff = static_cast<int>(frame.size()) - report.conditioning;
    for (std::size_t k = 0; k + 1 < ladder.size(); ++k) {
        const FitResult& small = report.ladder_fits[k];
        const FitResult& large = report.ladder_fits[k + 1];
        LadderStep step{k, k + 1, {}};
        if (family.dispersion_known()) {
            step.test = deviance_chisq_test(small.loglik, specs[k].parameter_count(), large.loglik,
                                            specs[k + 1].parameter_count());
        } else {
            step.test = deviance_f_test(small.deviance, large.deviance, specs[k].parameter_count(),
                                        specs[k + 1].parameter_count(), *large.dispersion_hat, n_eff);
        }
        report.tests.push_back(step);
    }

    report.chosen_predictor = ladder.size() - 1;
    while (report.chosen_predictor > 0 && report.tests[report.chosen_predictor - 1].test.p_value >= alpha)
        --report.chosen_predictor;
    report.chosen_spec = specs[report.chosen_predictor];
    return report;
}

}  // namespace garnn
