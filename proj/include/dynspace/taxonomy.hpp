#pragma once

#include "dynspace/corpus.hpp"

#include <cstddef>
#include <set>
#include <string>
#include <vector>

namespace dynspace {

struct MemberHistory {
    std::string creator_id;
    std::set<std::string> prior_categories;
};

/// A project's knowledge modules and what each member touched beforehand.
/// Category labels are opaque strings matched exactly.
struct ProjectTaxonomy {
    std::string doc_id;
    std::set<std::string> categories;
    std::vector<MemberHistory> members;
};

/// Both indices with their exact rational forms:
/// integration = integration_hits / (n_categories * n_members),
/// speculation = speculated / n_categories.
struct IntegrationReport {
    double integration = 0.0;
    double speculation = 0.0;
    std::size_t integration_hits = 0;
    std::size_t speculated = 0;
    std::size_t n_categories = 0;
    std::size_t n_members = 0;
};

double integration(const ProjectTaxonomy& project);
double speculation(const ProjectTaxonomy& project);
IntegrationReport evaluate_taxonomy(const ProjectTaxonomy& project);

/// Categories of each listed creator's documents inside the lookback window
/// before the project's slice. Members without history keep an empty set.
ProjectTaxonomy project_taxonomy(const Corpus& corpus, const SlicedCorpus& sliced, std::size_t doc_index,
                                 std::size_t lookback);

}  // namespace dynspace
