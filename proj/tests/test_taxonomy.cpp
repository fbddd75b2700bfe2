#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dynspace/error.hpp"
#include "dynspace/taxonomy.hpp"

using namespace dynspace;

TEST_CASE("the two three-member teams") {
    const ProjectTaxonomy high{"high", {"A", "B", "C"}, {{"p1", {"A", "B"}}, {"p2", {"A", "B", "C"}}, {"p3", {"B", "C"}}}};
    const ProjectTaxonomy low{"low", {"A", "B", "C"}, {{"p1", {"A"}}, {"p2", {"B"}}, {"p3", {"D"}}}};
    const auto h = evaluate_taxonomy(high);
    CHECK(h.integration_hits == 7);
    CHECK(h.n_categories * h.n_members == 9);
    CHECK(h.speculated == 0);
    CHECK(integration(high) == 7.0 / 9.0);
    CHECK(speculation(high) == 0.0);
    const auto l = evaluate_taxonomy(low);
    CHECK(l.integration_hits == 2);
    CHECK(l.speculated == 1);
    CHECK(integration(low) == 2.0 / 9.0);
    CHECK(speculation(low) == 1.0 / 3.0);
}

TEST_CASE("extremes") {
    const ProjectTaxonomy all{"all", {"A", "B"}, {{"p1", {"A", "B"}}, {"p2", {"B", "A", "Z"}}}};
    CHECK(integration(all) == 1.0);
    CHECK(speculation(all) == 0.0);
    const ProjectTaxonomy none{"none", {"A", "B"}, {{"p1", {}}, {"p2", {"a", "b"}}}};
    CHECK(integration(none) == 0.0);
    CHECK(speculation(none) == 1.0);
}

TEST_CASE("empty inputs are rejected") {
    const ProjectTaxonomy no_cats{"x", {}, {{"p1", {"A"}}}};
    CHECK_THROWS_WITH(integration(no_cats), doctest::Contains("empty category set"));
    CHECK_THROWS_AS(speculation(no_cats), Error);
    const ProjectTaxonomy no_members{"y", {"A"}, {}};
    CHECK_THROWS_AS(evaluate_taxonomy(no_members), Error);
}

TEST_CASE("histories come from the lookback window of the toy corpus") {
    const auto corpus = ingest(std::filesystem::path(DYNSPACE_TEST_DATA) / "toy_corpus.jsonl");
    const auto sliced = slice_corpus(corpus, 2000, 2014, 5);
    const auto idx = corpus.find("d0201");
    REQUIRE(idx);
    const auto p = project_taxonomy(corpus, sliced, *idx, 1);
    CHECK(p.doc_id == "d0201");
    CHECK(p.categories == std::set<std::string>{"cat_optics"});
    REQUIRE(p.members.size() == 3);
    CHECK(p.members[0].creator_id == "c1");
    CHECK(p.members[1].creator_id == "c2");
    CHECK(p.members[2].creator_id == "c7");
    CHECK(p.members[2].prior_categories.count("cat_optics") == 1);
    CHECK(p.members[2].prior_categories.count("cat_polymer") == 1);

    const auto first = corpus.find("d0196");
    REQUIRE(first);
    const auto early = project_taxonomy(corpus, sliced, *first, 1);
    for (const auto& m : early.members) CHECK(m.prior_categories.empty());
    CHECK(speculation(early) == 1.0);

    const auto out = corpus.find("d9998");
    REQUIRE(out);
    CHECK_THROWS_AS(project_taxonomy(corpus, sliced, *out, 1), Error);
}
