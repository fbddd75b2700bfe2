#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dynspace/error.hpp"
#include "dynspace/geometry.hpp"

#include <cmath>

using namespace dynspace;

namespace {

Vector v2(double a, double b) {
    Vector v(2);
    v << a, b;
    return v;
}

ErrorKind kind_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::Internal;
}

}  // namespace

TEST_CASE("cosine distance") {
    CHECK(cosine_distance(v2(1, 0), v2(0, 1)) == doctest::Approx(1.0));
    CHECK(cosine_distance(v2(1, 0), v2(-3, 0)) == doctest::Approx(2.0));
    CHECK(cosine_distance(v2(2, 2), v2(1, 1)) == 0.0);
    CHECK(kind_of([] { cosine_distance(v2(0, 0), v2(1, 1)); }) == ErrorKind::Degenerate);
    CHECK(kind_of([] { cosine_distance(v2(1, 0), Vector::Ones(3)); }) == ErrorKind::Shape);
}

TEST_CASE("background and perspective diversity by hand") {
    const std::vector<Vector> team{v2(1, 0), v2(0, 1), v2(1, 1)};
    const double r = 1.0 - 1.0 / std::sqrt(2.0);
    const double bd = (1.0 + 2.0 * r) / 3.0;
    CHECK(background_diversity(team) == doctest::Approx(bd).epsilon(1e-14));

    const Vector task = v2(2, 2);
    const double q = 1.0 - 3.0 / std::sqrt(10.0);
    const double pd = (0.2 + 2.0 * q) / 3.0;
    CHECK(perspective_diversity(task, team) == doctest::Approx(pd).epsilon(1e-14));

    CHECK(marginal_background(team, 2) == doctest::Approx((bd - 1.0) / bd).epsilon(1e-14));
    CHECK(marginal_perspective(task, team, 2) == doctest::Approx((pd - 0.2) / pd).epsilon(1e-14));
    const auto [mb, mp] = marginal_contributions(task, team, 0);
    CHECK(mb == doctest::Approx(marginal_background(team, 0)));
    CHECK(mp == doctest::Approx(marginal_perspective(task, team, 0)));

    CHECK(mean_pairwise_angle(team) ==
          doctest::Approx((M_PI / 2 + 2 * M_PI / 4) / 3.0).epsilon(1e-14));
    CHECK(centroid_task_distance(task, team) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("small and homogeneous teams") {
    const std::vector<Vector> pair{v2(1, 0), v2(0, 1)};
    CHECK(kind_of([&] { marginal_background(pair, 0); }) == ErrorKind::InvalidArgument);
    const std::vector<Vector> one{v2(1, 0)};
    CHECK(kind_of([&] { background_diversity(one); }) == ErrorKind::InvalidArgument);
    const std::vector<Vector> same{v2(1, 2), v2(2, 4), v2(0.5, 1)};
    CHECK(background_diversity(same) == 0.0);
    CHECK(kind_of([&] { marginal_background(same, 1); }) == ErrorKind::Degenerate);
    CHECK(kind_of([&] { perspective_diversity(v2(1, 2), same); }) == ErrorKind::Degenerate);
    CHECK(perspective_vector(v2(1, 2), v2(1, 2)).degenerate);
}

TEST_CASE("experience convergence sign") {
    const Vector task = v2(1, 0);
    const std::vector<Vector> before{v2(0, 1), v2(-1, 1)};
    const std::vector<Vector> after{v2(1, 1), v2(0, 1)};
    CHECK(experience_convergence(before, after, task) > 0.0);
    CHECK(experience_convergence(after, before, task) == doctest::Approx(-experience_convergence(before, after, task)));
    CHECK(experience_convergence(before, before, task) == 0.0);
    const std::vector<Vector> short_after{v2(1, 1)};
    CHECK(kind_of([&] { experience_convergence(before, short_after, task); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("document vector averages tokens with repeats") {
    const Vocabulary vocab({"aa", "bb"}, {3, 2});
    Eigen::MatrixXd slice(2, 2);
    slice << 1, 0, 0, 3;
    Document d;
    d.doc_id = "x";
    d.tokens = {"aa", "zz", "aa", "bb"};
    const Vector v = document_vector(d, vocab, slice);
    CHECK(v(0) == doctest::Approx(2.0 / 3.0));
    CHECK(v(1) == doctest::Approx(1.0));
    d.tokens = {"zz"};
    CHECK_THROWS_WITH(document_vector(d, vocab, slice), doctest::Contains("unprojectable document"));
}

TEST_CASE("team report does not depend on member order") {
    TeamRecord team;
    team.doc_id = "p";
    team.t = 1;
    team.task = Vector::LinSpaced(4, 1.0, 2.0);
    for (int i = 0; i < 4; ++i) {
        ExperienceVector ev;
        ev.creator_id = "c" + std::to_string(i);
        ev.as_of = 1;
        ev.vector = Vector::Zero(4);
        ev.vector(i) = 1.0;
        ev.vector(3 - i) += 0.3 * (i + 1);
        ev.n_docs = static_cast<std::size_t>(i + 1);
        ev.lookback = 1;
        team.members.push_back(ev);
    }
    team.n_listed = 4;
    const auto a = team_report(team);
    std::reverse(team.members.begin(), team.members.end());
    const auto b = team_report(team);
    CHECK(a.bd == b.bd);
    CHECK(a.pd == b.pd);
    CHECK(a.mean_experience == doctest::Approx(2.5));
    REQUIRE(a.members.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(a.members[i].creator_id == b.members[i].creator_id);
        CHECK(*a.members[i].mbd == *b.members[i].mbd);
        CHECK(*a.members[i].mpd == *b.members[i].mpd);
    }
    CHECK(a.members.front().creator_id == "c0");
    CHECK_FALSE(a.experience_convergence);
}
