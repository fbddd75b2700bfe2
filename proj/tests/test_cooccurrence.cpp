#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dynspace/cooccurrence.hpp"
#include "dynspace/error.hpp"

#include <cmath>
#include <sstream>

using namespace dynspace;

namespace {

CooccurrenceCounts counts_of(std::vector<std::vector<std::int32_t>> docs, std::size_t n, std::size_t window) {
    return count_cooccurrences(std::span<const std::vector<std::int32_t>>(docs), n, window);
}

}  // namespace

TEST_CASE("out-of-vocabulary tokens keep their positions") {
    const auto c = counts_of({{0, 1, -1, 0, 2}}, 3, 2);
    CHECK(c.count(0, 1) == 2);
    CHECK(c.count(1, 0) == 2);
    CHECK(c.count(0, 2) == 1);
    CHECK(c.count(1, 2) == 0);
    CHECK(c.row_sums() == std::vector<std::uint64_t>{3, 2, 1});
    CHECK(c.total() == 6);

    // Dropping the OOV token would bring 1 and 0 within one position twice.
    const auto narrow = counts_of({{1, -1, 0}}, 2, 1);
    CHECK(narrow.total() == 0);
}

TEST_CASE("self pairs are not counted") {
    const auto c = counts_of({{0, 0, 0, 1}}, 2, 5);
    CHECK(c.count(0, 0) == 0);
    CHECK(c.count(0, 1) == 3);
    CHECK(c.total() == 6);
}

TEST_CASE("documents do not pair across boundaries") {
    const auto c = counts_of({{0}, {1}}, 2, 5);
    CHECK(c.total() == 0);
    CHECK_THROWS_AS(build_ppmi(c), Error);
}

TEST_CASE("PPMI of the hand example") {
    const auto y = build_ppmi(counts_of({{0, 1, -1, 0, 2}}, 3, 2));
    CHECK(y.value(0, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(y.value(0, 2) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(y.value(1, 2) == 0.0);
    CHECK(y.upper_nonzeros() == 2);

    const auto shifted = build_ppmi(counts_of({{0, 1, -1, 0, 2}}, 3, 2), 0.5);
    CHECK(shifted.value(0, 1) == doctest::Approx(std::log(2.0) - 0.5));
    const auto gone = build_ppmi(counts_of({{0, 1, -1, 0, 2}}, 3, 2), 1.0);
    CHECK(gone.upper_nonzeros() == 0);
    CHECK(gone.matrix().nonZeros() == 0);
}

TEST_CASE("PPMI is unchanged when all counts scale") {
    const auto base = counts_of({{0, 1, 2, 3, 1, 0, 4, 2, 2, 3}, {4, 4, 1, 0}}, 5, 3);
    const auto y = build_ppmi(base);
    for (std::uint64_t f : {2ULL, 8ULL, 1024ULL}) {
        const auto z = build_ppmi(base.scaled(f));
        for (std::size_t i = 0; i < 5; ++i) {
            for (std::size_t j = 0; j < 5; ++j) CHECK(z.value(i, j) == doctest::Approx(y.value(i, j)).epsilon(1e-12));
        }
    }
}

TEST_CASE("the matrix is stored symmetrically") {
    const auto y = build_ppmi(counts_of({{0, 1, 2, 3, 1, 0, 4, 2, 2, 3}}, 5, 2));
    const Eigen::MatrixXd d(y.matrix());
    CHECK((d - d.transpose()).norm() == 0.0);
    CHECK(d.diagonal().norm() == 0.0);
    CHECK(static_cast<std::size_t>(y.matrix().nonZeros()) == 2 * y.upper_nonzeros());
}

TEST_CASE("text round trip is exact") {
    const auto y = build_ppmi(counts_of({{0, 1, 2, 3, 1, 0, 4, 2, 2, 3}, {4, 4, 1, 0}}, 5, 3));
    std::stringstream s;
    write_ppmi(s, y);
    const auto back = read_ppmi(s);
    CHECK(back.n() == 5);
    CHECK(back.upper_nonzeros() == y.upper_nonzeros());
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = 0; j < 5; ++j) CHECK(back.value(i, j) == y.value(i, j));
    }

    std::istringstream bad("0 3 1\n0 5 1.0\n");
    CHECK_THROWS_AS(read_ppmi(bad), Error);
    std::istringstream truncated("0 3 2\n0 1 1.0\n");
    CHECK_THROWS_AS(read_ppmi(truncated), Error);
}

TEST_CASE("window and index validation") {
    CHECK_THROWS_AS(counts_of({{0, 1}}, 2, 0), Error);
    CHECK_THROWS_AS(counts_of({{0, 7}}, 2, 2), Error);
}
