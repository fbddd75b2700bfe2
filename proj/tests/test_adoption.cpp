#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dynspace/adoption.hpp"
#include "dynspace/error.hpp"

#include <random>

using namespace dynspace;

namespace {

Vector v2(double a, double b) {
    Vector v(2);
    v << a, b;
    return v;
}

}  // namespace

TEST_CASE("visual angle configurations") {
    const Vector eye = v2(0, 0);
    CHECK(visual_angle_cos(eye, v2(1, 0), v2(0, 1)) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(visual_angle_cos(eye, v2(2, 0), v2(1, 0)) == 1.0);
    CHECK(visual_angle_cos(eye, v2(3, 4), v2(3, 4)) == 1.0);
    CHECK(visual_angle_cos(eye, v2(1, 0), v2(-1, 0)) == -1.0);
    CHECK(visual_angle_cos(v2(1, 1), v2(2, 1), v2(1, 2)) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("a concept passing through the observer has no sight line") {
    CHECK_THROWS_WITH(visual_angle_cos(v2(1, 0), v2(1, 0), v2(0, 1)), doctest::Contains("zero sight line"));
    try {
        visual_angle_cos(v2(1, 0), v2(0, 1), v2(1, 0));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Degenerate);
    }
}

TEST_CASE("movement delta is the change in cosine") {
    CHECK(movement_delta(v2(1, 0), v2(0, 1), v2(1, 0)) == doctest::Approx(1.0));
    CHECK(movement_delta(v2(1, 0), v2(1, 0), v2(0, 1)) == doctest::Approx(-1.0));
    CHECK(movement_delta(v2(1, 0), v2(1, 1), v2(2, 2)) == doctest::Approx(0.0));
}

TEST_CASE("noiseless least squares recovers coefficients") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd x(40, 3);
    for (Eigen::Index i = 0; i < x.rows(); ++i) x.row(i) << 1.0, normal(rng), normal(rng);
    const Eigen::Vector3d beta(0.5, -2.0, 3.25);
    const Eigen::VectorXd y = x * beta;
    const auto fit = ols_fit(x, y, {"a", "b", "c"});
    REQUIRE(fit.coefficients.size() == 3);
    for (int j = 0; j < 3; ++j) CHECK(fit.coefficients[static_cast<std::size_t>(j)] == doctest::Approx(beta(j)).epsilon(1e-12));
    CHECK(fit.residual_ss < 1e-20);
    CHECK(fit.n == 40);
    CHECK(fit.names == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("rank-deficient and short designs are rejected") {
    Eigen::MatrixXd x(5, 2);
    x << 1, 2, 2, 4, 3, 6, 4, 8, 5, 10;
    const Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(5, 0, 1);
    CHECK_THROWS_WITH(ols_fit(x, y), doctest::Contains("rank-deficient"));
    CHECK_THROWS_AS(ols_fit(x.topRows(1), y.head(1)), Error);
    CHECK_THROWS_AS(ols_fit(x, y.head(3)), Error);
}

TEST_CASE("group demeaning") {
    Eigen::MatrixXd x(4, 1);
    x << 1, 3, 10, 20;
    Eigen::VectorXd y(4);
    y << 2, 4, 0, 1;
    const std::vector<std::string> g{"a", "a", "b", "b"};
    demean_by_group(x, y, g);
    CHECK(x(0, 0) == -1.0);
    CHECK(x(1, 0) == 1.0);
    CHECK(x(2, 0) == -5.0);
    CHECK(y(3) == 0.5);
    const std::vector<std::string> short_groups{"a"};
    CHECK_THROWS_AS(demean_by_group(x, y, short_groups), Error);
}

TEST_CASE("adoption model terms") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<AdoptionRecord> recs;
    for (int i = 0; i < 300; ++i) {
        AdoptionRecord r;
        r.creator_id = "c" + std::to_string(i % 6);
        r.token = static_cast<std::size_t>(i);
        r.delta_d = u(rng);
        r.theta_v_cos = u(rng);
        r.adopted = 0.3 + 0.4 * r.delta_d + 0.1 * u(rng) > 0.3;
        recs.push_back(r);
    }
    const auto pooled = fit_adoption(recs);
    CHECK(pooled.coefficients.size() == 4);
    CHECK(pooled.n == 300);
    const auto within = fit_adoption(recs, true);
    CHECK(within.coefficients.size() == 3);
    CHECK(within.coefficients[0] > 0.0);
}
