// Fit a Poisson GARNN to a monthly count series and forecast a year ahead.
//
//   fit_and_forecast tests/data/polio.csv

#include <cstdio>
#include <exception>

#include "garnn/dynamics.hpp"
#include "garnn/io.hpp"
#include "garnn/model.hpp"

int main(int argc, char** argv) {
    if (argc != 2) {
        std::fprintf(stderr, "usage: %s series.csv\n", argv[0]);
        return 2;
    }
    try {
        const garnn::Dataset data = garnn::load_series(argv[1]);
        const garnn::CovariateRecipe recipe;  // intercept, 12- and 6-month harmonics, trend
        const garnn::SeriesFrame frame = garnn::make_frame(data.y, garnn::build_covariates(data.time, recipe));

        const garnn::GarnnSpec spec =
            garnn::GarnnSpec::make(garnn::Family::poisson(), garnn::NetSpec{1, 2, garnn::Activation::Tanh},
                                   recipe.column_count());
        const garnn::FitResult fit = garnn::fit(spec, frame);
        std::printf("loglik %.6f  AIC %.4f  converged %s\n", fit.loglik, fit.aic, fit.converged ? "yes" : "no");
        const auto names = recipe.column_names();
        for (std::size_t c = 0; c < names.size(); ++c)
            std::printf("  %-9s % .6f\n", names[c].c_str(), fit.theta_hat.beta(static_cast<Eigen::Index>(c)));

        std::vector<long long> future(12);
        for (int s = 0; s < 12; ++s) future[s] = data.time.back() + 1 + s;
        const auto fc = garnn::forecast(spec, frame, fit.theta_hat, garnn::build_covariates(future, recipe), 12);
        for (int s = 0; s < 12; ++s) std::printf("t=%lld  mu_hat=%.4f\n", future[s], fc.mu_hat[s]);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
