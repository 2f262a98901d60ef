#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "garnn/config.hpp"
#include "garnn/io.hpp"

using namespace garnn;

TEST(ParseSeries, ThreeRows) {
    std::istringstream in("# comment\ntime,y\n1,4\n2,0\n3,7\n");
    const Dataset d = parse_series(in);
    EXPECT_EQ(d.time, (std::vector<long long>{1, 2, 3}));
    EXPECT_EQ(d.y, (std::vector<double>{4, 0, 7}));
    EXPECT_EQ(d.extras.cols(), 0);
    ASSERT_TRUE(d.standardizer);
    EXPECT_NEAR(d.standardizer->mean, 11.0 / 3.0, 1e-15);
}

TEST(ParseSeries, ExtraColumns) {
    std::istringstream in("time,y,temp\n5,1,0.5\n6,2,-1.5\n");
    const Dataset d = parse_series(in);
    EXPECT_EQ(d.extra_names, std::vector<std::string>{"temp"});
    EXPECT_DOUBLE_EQ(d.extras(1, 0), -1.5);
}

TEST(ParseSeries, GapIsNamed) {
    std::istringstream in("time,y\n1,4\n2,0\n4,7\n");
    try {
        parse_series(in);
        FAIL();
    } catch (const InvalidInput& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("gap"), std::string::npos);
        EXPECT_NE(msg.find("2 and 4"), std::string::npos);
        EXPECT_NE(msg.find("line 4"), std::string::npos);
    }
}

TEST(ParseSeries, MalformedInput) {
    std::istringstream missing("time,y\n1,\n");
    EXPECT_THROW(parse_series(missing), InvalidInput);
    std::istringstream word("time,y\n1,abc\n");
    EXPECT_THROW(parse_series(word), InvalidInput);
    std::istringstream ragged("time,y\n1,2,3\n");
    EXPECT_THROW(parse_series(ragged), InvalidInput);
    std::istringstream empty("# nothing\n");
    EXPECT_THROW(parse_series(empty), InvalidInput);
    EXPECT_THROW(load_series("/nonexistent/file.csv"), InvalidInput);
}

TEST(ParseSeries, ConstantSeriesHasNoStandardizer) {
    std::istringstream in("time,y\n1,2\n2,2\n");
    EXPECT_FALSE(parse_series(in).standardizer);
}

TEST(ParseSeries, PolioFixture) {
    const Dataset d = load_series(std::string(GARNN_TEST_DATA) + "/polio.csv");
    ASSERT_EQ(d.size(), 168u);
    EXPECT_EQ(d.time.front(), 1);
    EXPECT_EQ(d.time.back(), 168);
    EXPECT_NEAR(std::accumulate(d.y.begin(), d.y.end(), 0.0) / 168.0, 1.3333, 1e-4);
}

TEST(WriteSeries, RoundTrip) {
    std::ostringstream out;
    write_series(out, {3, 4}, {0.1, 2.5});
    std::istringstream in(out.str());
    const Dataset d = parse_series(in);
    EXPECT_EQ(d.y, (std::vector<double>{0.1, 2.5}));
    EXPECT_EQ(d.time.front(), 3);
}

TEST(Covariates, DefaultRecipeValues) {
    const CovariateRecipe recipe;
    EXPECT_EQ(recipe.column_count(), 6);
    EXPECT_EQ(recipe.column_names(), (std::vector<std::string>{"intercept", "cos12", "sin12", "cos6", "sin6", "trend"}));
    const Eigen::MatrixXd X = build_covariates(12, recipe);
    EXPECT_DOUBLE_EQ(X(0, 0), 1.0);
    EXPECT_NEAR(X(2, 1), std::cos(2 * M_PI * 3 / 12.0), 1e-15);
    EXPECT_NEAR(X(2, 2), 1.0, 1e-15);
    EXPECT_NEAR(X(2, 3), -1.0, 1e-15);
    EXPECT_NEAR(X(11, 1), 1.0, 1e-15);
    EXPECT_DOUBLE_EQ(X(11, 5), 0.012);
}

TEST(Covariates, ScaledHarmonicsAndValidation) {
    CovariateRecipe recipe{false, {12.0}, false, 1000.0, true};
    const Eigen::MatrixXd X = build_covariates(std::vector<long long>{500}, recipe);
    EXPECT_NEAR(X(0, 0), std::cos(2 * M_PI * 0.5 / 12.0), 1e-15);
    recipe.trend_divisor = 0.0;
    EXPECT_THROW(build_covariates(3, recipe), InvalidInput);
}

TEST(Config, RoundTrip) {
    RunConfig c;
    c.family = "negbin";
    c.size = 1.5;
    c.select_sizes = {0.75, 1.5};
    c.ladder = {{0}, {0, 5}};
    c.seed = 123456789012345ULL;
    const std::string text = serialize_config(c);
    EXPECT_EQ(serialize_config(parse_config(text)), text);
    EXPECT_EQ(to_json(parse_config(text)), nlohmann::json::parse(text));
}

TEST(Config, MissingKeysKeepDefaults) {
    const RunConfig c = parse_config(R"({"lags": 3})");
    EXPECT_EQ(c.lags, 3);
    EXPECT_EQ(c.nodes, RunConfig{}.nodes);
}

TEST(Config, RejectsUnknownKeysAndWrongTypes) {
    EXPECT_THROW(parse_config(R"({"lagz": 3})"), InvalidInput);
    EXPECT_THROW(parse_config(R"({"lags": "three"})"), InvalidInput);
    EXPECT_THROW(parse_config("{"), InvalidInput);
    EXPECT_THROW(parse_config("[]"), InvalidInput);
}

TEST(Config, Validation) {
    RunConfig c;
    c.family = "weibull";
    EXPECT_THROW(c.validate(), InvalidInput);
    c = RunConfig{};
    c.restarts = 0;
    EXPECT_THROW(c.validate(), InvalidInput);
    c = RunConfig{};
    c.family = "binomial";
    c.trials = 5;
    EXPECT_EQ(c.make_spec(2).link.scale, 5.0);
}
