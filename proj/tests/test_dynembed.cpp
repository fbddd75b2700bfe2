#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dynspace/dynembed.hpp"
#include "dynspace/error.hpp"
#include "support.hpp"

#include <cmath>
#include <sstream>

using namespace dynspace;
using namespace testsupport;

TEST_CASE("objective agrees with the entrywise sum") {
    const auto y = random_targets(3, 30, 5);
    const auto u = init_embeddings(3, 30, 4, 9);
    for (double tau : {0.0, 2.5}) {
        const double fast = objective(u, y, 1.5, tau);
        const double slow = dense_objective(u, y, 1.5, tau);
        CHECK(std::abs(fast - slow) <= 1e-12 * std::abs(slow));
    }
}

TEST_CASE("gradient matches central differences") {
    const auto y = random_targets(2, 8, 21);
    auto u = init_embeddings(2, 8, 3, 4);
    const auto g = objective_gradient(u, y, 0.7, 3.0);
    double worst = 0.0;
    for (std::size_t t = 0; t < 2; ++t) {
        for (Eigen::Index i = 0; i < u.slice(t).size(); ++i) {
            double& x = u.slice(t).data()[i];
            const double keep = x;
            x = keep + 1e-5;
            const double up = objective(u, y, 0.7, 3.0);
            x = keep - 1e-5;
            const double down = objective(u, y, 0.7, 3.0);
            x = keep;
            const double fd = (up - down) / 2e-5;
            worst = std::max(worst, std::abs(fd - g[t].data()[i]) / std::max(1.0, std::abs(fd)));
        }
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("initialization scale") {
    const auto u = init_embeddings(2, 400, 25, 3);
    double s = 0.0;
    for (const auto& m : u.slices()) s += m.squaredNorm();
    const double sd = std::sqrt(s / (2.0 * 400 * 25));
    CHECK(sd == doctest::Approx(0.2).epsilon(0.05));
    const auto v = init_embeddings(1, 400, 25, 3, 0.5);
    CHECK(std::sqrt(v.slice(0).squaredNorm() / 10000.0) == doctest::Approx(0.5).epsilon(0.05));
    CHECK(init_embeddings(2, 10, 3, 3).identical(init_embeddings(2, 10, 3, 3)));
    CHECK_FALSE(init_embeddings(2, 10, 3, 3).identical(init_embeddings(2, 10, 3, 4)));
}

TEST_CASE("objective is invariant to a shared rotation") {
    const auto y = random_targets(3, 20, 8);
    auto u = init_embeddings(3, 20, 5, 2);
    const double before = objective(u, y, 2.0, 4.0);
    std::mt19937_64 rng(77);
    const auto r = random_rotation(5, rng);
    for (std::size_t t = 0; t < 3; ++t) u.slice(t) = u.slice(t) * r;
    CHECK(objective(u, y, 2.0, 4.0) == doctest::Approx(before).epsilon(1e-12));
}

TEST_CASE("training is deterministic and never raises the objective") {
    const auto y = random_targets(3, 40, 12);
    TrainConfig c;
    c.k = 5;
    c.iterations = 6;
    c.lambda = 1.0;
    c.tau = 5.0;
    c.seed = 3;
    const auto a = train(y, c);
    const auto b = train(y, c);
    CHECK(a.tensor.identical(b.tensor));
    REQUIRE(a.objective_log.size() == 7);
    for (std::size_t i = 1; i < a.objective_log.size(); ++i) {
        CHECK(a.objective_log[i] <= a.objective_log[i - 1] * (1 + 1e-12));
    }
    CHECK(a.objective_log.back() < a.objective_log.front());
    CHECK(a.tensor.all_finite());
}

TEST_CASE("heavy smoothing of identical targets keeps slices together") {
    const auto one = random_targets(1, 40, 14);
    const std::vector<SparseMatrix> y{one[0], one[0], one[0]};
    TrainConfig c;
    c.k = 4;
    c.lambda = 1.0;
    c.tau = 100.0;
    c.seed = 5;
    const auto r = train(y, c);
    double norm = 0.0;
    for (const auto& m : r.tensor.slices()) norm += m.norm();
    CHECK(mean_drift(r.tensor) / (norm / 3.0) < 0.05);
}

TEST_CASE("without smoothing each slice trains on its own") {
    const auto y = random_targets(3, 25, 31);
    TrainConfig c;
    c.k = 4;
    c.iterations = 5;
    c.lambda = 2.0;
    c.tau = 0.0;
    const auto init = init_embeddings(3, 25, 4, 6);
    const auto joint = train(init, y, c);
    for (std::size_t t = 0; t < 3; ++t) {
        const auto alone = dense_single_slice(init.slice(t), Eigen::MatrixXd(y[t]), 2.0, 5);
        CHECK((joint.tensor.slice(t) - alone).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("configuration and shape validation") {
    TrainConfig c;
    c.k = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.lambda = -1;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.tau = std::nan("");
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.init_scale = 0.0;
    CHECK_THROWS_AS(c.validate(), Error);

    const auto y = random_targets(2, 10, 1);
    const auto u = init_embeddings(3, 10, 2, 1);
    CHECK_THROWS_AS(objective(u, y, 1, 1), Error);
    CHECK_THROWS_AS(train(std::vector<SparseMatrix>{}, TrainConfig{}), Error);
}

TEST_CASE("binary format round trip and corruption") {
    auto u = init_embeddings(2, 7, 3, 8);
    Digest fp{};
    fp[0] = 0xab;
    fp[31] = 0x01;
    u.set_fingerprint(fp);
    std::stringstream s;
    save_embeddings(u, s);
    const std::string bytes = s.str();
    CHECK(bytes.size() == 4 + 4 * 4 + 32 + 2 * 7 * 3 * 8 + 8);
    CHECK(bytes.substr(0, 4) == "DYNE");

    std::istringstream in(bytes);
    const auto back = load_embeddings(in);
    CHECK(back.identical(u));
    CHECK_NOTHROW(require_fingerprint(back, fp));
    Digest other = fp;
    other[5] ^= 1;
    try {
        require_fingerprint(back, other);
        FAIL("expected a fingerprint error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Checksum);
    }

    auto kind_of = [](std::string b) {
        std::istringstream is(b);
        try {
            load_embeddings(is);
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::Internal;
    };
    CHECK(kind_of(bytes.substr(0, bytes.size() - 3)) == ErrorKind::Format);
    CHECK(kind_of(bytes.substr(0, 10)) == ErrorKind::Format);
    std::string magic = bytes;
    magic[0] = 'X';
    CHECK(kind_of(magic) == ErrorKind::Format);
    std::string flipped = bytes;
    flipped[60] ^= 0x10;
    CHECK(kind_of(flipped) == ErrorKind::Checksum);
    CHECK(kind_of(bytes + "x") == ErrorKind::Format);
}
